//! Reference computations that avoid the decompositions used by the
//! production path. They work on plain row vectors and are only meant for
//! cross-checking small matrices.

use num_complex::Complex64;

use crate::cstar_matrix::CMatrix;

type Rows = Vec<Vec<Complex64>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn mat_vec(a: &Rows, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn adj_vec(a: &Rows, v: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j].conj() * v[i]).sum()).collect()
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `a*·a`.
pub fn power_norm(a: &CMatrix, iters: usize) -> f64 {
    let rows = a.rows();
    let n = rows.len();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + i as f64 * 0.37, 0.5 - i as f64 * 0.11))
        .collect();
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = vnorm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let w = adj_vec(&rows, &mat_vec(&rows, &v));
        // Rayleigh quotient of a*a at a unit vector
        est = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
        v = w;
    }
    est.max(0.0).sqrt()
}

/// Characteristic polynomial `det(zI − a)` by Faddeev–LeVerrier, coefficients
/// in ascending degree (monic).
pub fn charpoly(a: &CMatrix) -> Vec<Complex64> {
    let rows = a.rows();
    let n = rows.len();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    // m_k = a·m_{k-1} + c_{n-k+1} I, c_{n-k} = -tr(a m_k)/k
    let mut m: Rows = vec![vec![ZERO; n]; n];
    for k in 1..=n {
        let mut next = vec![vec![ZERO; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for l in 0..n {
                    s += rows[i][l] * m[l][j];
                }
                if i == j {
                    s += coeffs[n - k + 1];
                }
                next[i][j] = s;
            }
        }
        let mut tr = ZERO;
        for i in 0..n {
            for l in 0..n {
                tr += rows[i][l] * next[l][i];
            }
        }
        coeffs[n - k] = -tr / k as f64;
        m = next;
    }
    coeffs
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of a polynomial (ascending coefficients, non-zero leading term)
/// by Aberth–Ehrlich iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    // Cauchy bound for the initial circle
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(&monic, z[i]);
            if p == ZERO {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| ONE / (z[i] - z[j])).sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Eigenvalues through the characteristic polynomial (small matrices only).
pub fn charpoly_eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    poly_roots(&charpoly(a))
}

/// Eigenvalues by Householder reduction to Hessenberg form followed by
/// Wilkinson-shifted complex QR sweeps with Givens rotations.
///
/// Returns `None` when the iteration budget runs out.
pub fn qr_eigenvalues(a: &CMatrix) -> Option<Vec<Complex64>> {
    let mut h = a.rows();
    let n = h.len();
    hessenberg(&mut h);

    let mut out = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let budget = 200 * n;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            if h[l][l - 1].norm() <= f64::EPSILON * s.max(f64::MIN_POSITIVE) {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        total += 1;
        if total > budget {
            return None;
        }
        iter += 1;
        let shift = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[hi][hi] + Complex64::new(h[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_sweep(&mut h, l, hi, shift);
    }
    out[0] = h[0][0];
    Some(out)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn hessenberg(h: &mut Rows) {
    let n = h.len();
    for j in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (j + 1..n).map(|i| h[i][j]).collect();
        let alpha_abs = vnorm(&x);
        if alpha_abs == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * alpha_abs;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = vnorm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // H ← (I − 2vv*) H
        for col in 0..n {
            let dot: Complex64 = (0..v.len()).map(|r| v[r].conj() * h[j + 1 + r][col]).sum();
            for r in 0..v.len() {
                h[j + 1 + r][col] -= v[r] * dot * 2.0;
            }
        }
        // H ← H (I − 2vv*)
        for row in h.iter_mut() {
            let dot: Complex64 = (0..v.len()).map(|c| row[j + 1 + c] * v[c]).sum();
            for c in 0..v.len() {
                row[j + 1 + c] -= dot * v[c].conj() * 2.0;
            }
        }
    }
}

/// One shifted QR step on the active block `lo..=hi`.
fn qr_sweep(h: &mut Rows, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..=hi {
        h[i][i] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[k][k];
        let y = h[k + 1][k];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
        for col in k..=hi {
            let a = h[k][col];
            let b = h[k + 1][col];
            h[k][col] = c.conj() * a + s.conj() * b;
            h[k + 1][col] = -s * a + c * b;
        }
        rotations.push((k, c, s));
    }
    for (k, c, s) in rotations {
        for row in h.iter_mut().take((k + 2).min(hi) + 1).skip(lo) {
            let a = row[k];
            let b = row[k + 1];
            row[k] = a * c + b * s;
            row[k + 1] = -a * s.conj() + b * c.conj();
        }
    }
    for i in lo..=hi {
        h[i][i] += shift;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar_matrix::hausdorff;

    #[test]
    fn charpoly_of_diagonal() {
        let p = charpoly(&CMatrix::from_real_diagonal(&[1.0, 2.0]));
        // z² − 3z + 2
        assert!((p[0] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((p[1] - Complex64::new(-3.0, 0.0)).norm() < 1e-14);
        assert_eq!(p[2], ONE);
    }

    #[test]
    fn qr_matches_known_spectra() {
        let d = CMatrix::from_real_diagonal(&[3.0, -1.0, 2.0]);
        let got = qr_eigenvalues(&d).unwrap();
        let want: Vec<Complex64> = [3.0, -1.0, 2.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert!(hausdorff(&got, &want) < 1e-14);

        let rot = CMatrix::from_rows(vec![vec![ZERO, -ONE], vec![ONE, ZERO]]).unwrap();
        let got = qr_eigenvalues(&rot).unwrap();
        let want = vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        assert!(hausdorff(&got, &want) < 1e-12);
    }

    #[test]
    fn power_norm_of_diagonal() {
        let d = CMatrix::from_real_diagonal(&[0.5, -4.0, 2.0]);
        assert!((power_norm(&d, 200) - 4.0).abs() < 1e-12);
    }
}
