use std::sync::Arc;

use num_complex::Complex64;

use crate::cstar_matrix::{hausdorff, CMatrix};
use crate::error::Result;
use crate::hilbert_module::{fiber_vector_norm, HilbertModule, ModuleVector};
use crate::local_algebra::{Ideal, Index, LocalAlgebra, LocalElement, Slot, SupNorm, TailRule};
use crate::operator_algebra::ModuleOperator;
use crate::suite::gen::{Gen, Model};
use crate::suite::oracle::qr_eigenvalues;
use crate::suite::{Margin, Trial, TrialResult};

/// Seminorm values below this are treated as degenerate in normalizations.
const DEGENERATE: f64 = 1e-12;

const SMOOTHING_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Indices checked per trial: every stored index, plus (countable model) the
/// first tail index, the middle and the end of the horizon.
pub fn check_indices(alg: &LocalAlgebra, horizon: u64) -> Vec<Index> {
    let mut out = alg.stored_indices();
    if alg.is_countable() {
        let n0 = alg.stored_len() as u64;
        for n in [n0 + 1, n0 + 1 + horizon / 2, n0 + horizon] {
            if !out.contains(&Index::Nat(n)) {
                out.push(Index::Nat(n));
            }
        }
    }
    out
}

/// `min(tol(1+‖m‖) − ‖m − m*‖, λ_min((m+m*)/2) + tol(1+‖m‖))`.
fn matrix_positivity_slack(m: &CMatrix, tol: f64) -> Result<f64> {
    let scale = tol * (1.0 + m.norm());
    let (values, _) = m.hermitian_eigen()?;
    Ok((scale - m.asymmetry()).min(values[0] + scale))
}

fn hermitian_slack(m: &CMatrix, tol: f64) -> f64 {
    tol * (1.0 + m.norm()) - m.asymmetry()
}

/// Signed slack of the positivity verdict: non-negative exactly when
/// [`LocalElement::is_positive`] accepts. Also reports exactness.
pub fn positivity_margin(a: &LocalElement, horizon: u64, tol: f64) -> Result<(f64, bool)> {
    let mut slack = f64::INFINITY;
    for c in a.components() {
        slack = slack.min(matrix_positivity_slack(c, tol)?);
    }
    let Some(tail) = a.tail() else {
        return Ok((slack, true));
    };
    if tail.degree() == 0 {
        return Ok((slack.min(matrix_positivity_slack(&tail.coeffs()[0], tol)?), true));
    }
    for c in tail.coeffs() {
        slack = slack.min(hermitian_slack(c, tol));
    }
    slack = slack.min(matrix_positivity_slack(tail.leading(), tol)?);
    let n0 = a.algebra().stored_len() as u64;
    for n in n0 + 1..=n0 + horizon {
        slack = slack.min(matrix_positivity_slack(&tail.eval(n), tol)?);
    }
    Ok((slack, false))
}

fn operator_positivity_margin(t: &ModuleOperator, horizon: u64, tol: f64) -> Result<(f64, bool)> {
    let alg = t.module().algebra().clone();
    let mut slack = f64::INFINITY;
    for i in alg.stored_indices() {
        slack = slack.min(matrix_positivity_slack(&t.fiber_matrix(&i)?, tol)?);
    }
    if !alg.is_countable() {
        return Ok((slack, true));
    }
    let degree = t.tail_degree();
    let coeff = |k| t.tail_coefficient_matrix(k).expect("countable model");
    if degree == 0 {
        return Ok((slack.min(matrix_positivity_slack(&coeff(0), tol)?), true));
    }
    for k in 0..=degree {
        slack = slack.min(hermitian_slack(&coeff(k), tol));
    }
    slack = slack.min(matrix_positivity_slack(&coeff(degree), tol)?);
    let n0 = alg.stored_len() as u64;
    for n in n0 + 1..=n0 + horizon {
        slack = slack.min(matrix_positivity_slack(&t.fiber_matrix(&Index::Nat(n))?, tol)?);
    }
    Ok((slack, false))
}

/// Vector supported at a single index: the given fiber tuple at `index` and
/// zero at every other stored index. A tail index yields a constant tail.
pub(crate) fn localized_vector(
    module: &Arc<HilbertModule>,
    index: &Index,
    fiber: &[CMatrix],
) -> Result<ModuleVector> {
    let alg = module.algebra().clone();
    let slot = alg.resolve(index)?;
    let entries = fiber
        .iter()
        .map(|m| {
            let comps = (0..alg.stored_len())
                .map(|s| match slot {
                    Slot::Stored(t) if t == s => m.clone(),
                    _ => CMatrix::zeros(alg.stored_dim(s)),
                })
                .collect();
            let tail = alg.tail_dim().map(|d| match slot {
                Slot::Tail(_) => TailRule::constant(m.clone()),
                Slot::Stored(_) => TailRule::zero(d),
            });
            LocalElement::new(alg.clone(), comps, tail)
        })
        .collect::<Result<Vec<_>>>()?;
    ModuleVector::new(module, entries)
}

/// Lower estimate of `sup {P̄_α(Tx) : P̄_α(x) ≤ 1}` from `samples` unit
/// vectors: random starts localized at `α`, each refined by repeated
/// application of `T*T` through the module action.
pub fn sampled_operator_sup(t: &ModuleOperator, index: &Index, samples: usize, gen: &mut Gen) -> Result<f64> {
    let module = t.module().clone();
    let d = module.algebra().fiber_dim(index)?;
    let k = module.rank();
    let adj = t.adjoint();
    let starts = (samples / 10).max(1);
    let mut best = 0.0f64;
    let mut used = 0;
    for s in 0..starts {
        let steps = if s + 1 == starts { samples - used } else { samples / starts };
        let mut fiber: Vec<CMatrix> = (0..k).map(|_| gen.matrix(d)).collect();
        for _ in 0..steps {
            used += 1;
            let x = localized_vector(&module, index, &fiber)?;
            let p = x.seminorm(index)?;
            if p < DEGENERATE {
                break;
            }
            let x = x.scale_real(1.0 / p);
            let tx = t.apply(&x)?;
            best = best.max(tx.seminorm(index)?);
            fiber = adj.apply(&tx)?.quotient(index)?;
        }
    }
    Ok(best)
}

fn algebra(t: &mut Trial, model: Model) -> Arc<LocalAlgebra> {
    t.gen.algebra(model)
}

fn alternating_algebra(t: &mut Trial) -> Arc<LocalAlgebra> {
    let model = t.model();
    algebra(t, model)
}

fn indices(t: &Trial, alg: &LocalAlgebra) -> Vec<Index> {
    check_indices(alg, t.cfg.horizon)
}

fn pos(t: &Trial, a: &LocalElement, m: &mut Margin) -> Result<()> {
    let (slack, exact) = positivity_margin(a, t.cfg.horizon, t.cfg.tol)?;
    m.merge(slack, exact);
    Ok(())
}

// ---------------------------------------------------------------- seminorms

pub(crate) fn seminorm_submultiplicative(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.element(&alg);
    let b = t.gen.element(&alg);
    let ab = &a * &b;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (pa, pb) = (a.seminorm(&i)?, b.seminorm(&i)?);
        m.le(ab.seminorm(&i)?, pa * pb + t.tol.loose * (1.0 + pa * pb));
    }
    // separation: vanishing of every seminorm forces a = 0
    let chosen: Vec<Index> = alg.stored_indices().into_iter().filter(|_| t.gen.coin()).collect();
    let z = Ideal::new(&alg, chosen)?.project(&a)?;
    let all_vanish = alg.stored_indices().iter().all(|i| z.seminorm(i).map(|v| v == 0.0).unwrap_or(false))
        && z.tail().is_none_or(TailRule::is_zero);
    m.require(all_vanish == z.is_zero());
    Ok(Some(m))
}

pub(crate) fn seminorm_involution(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.element(&alg);
    let adj = a.adjoint();
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let p = a.seminorm(&i)?;
        m.le((adj.seminorm(&i)? - p).abs(), t.tol.tight * (1.0 + p));
    }
    Ok(Some(m))
}

pub(crate) fn seminorm_cstar_identity(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.element(&alg);
    let aa = &a.adjoint() * &a;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let p = a.seminorm(&i)?;
        m.le((aa.seminorm(&i)? - p * p).abs(), t.tol.loose * (1.0 + p * p));
    }
    Ok(Some(m))
}

pub(crate) fn element_spectrum_union(t: &mut Trial) -> TrialResult {
    let alg = algebra(t, Model::Finite);
    let a = t.gen.element(&alg);
    let got = a.spectrum(t.cfg.horizon)?;
    let mut oracle = Vec::new();
    for c in a.components() {
        match qr_eigenvalues(c) {
            Some(v) => oracle.extend(v),
            None => return Err(crate::error::Error::EigenFailure(0)),
        }
    }
    let radius = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut m = Margin::default();
    m.require(got.exact);
    m.le(hausdorff(&got.value, &oracle), t.tol.loose * (1.0 + radius));
    Ok(Some(m))
}

// ------------------------------------------------------------------- order

pub(crate) fn order_monotone(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.positive_element(&alg);
    let c = t.gen.element(&alg);
    let b = &a + &(&c.adjoint() * &c);
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let pb = b.seminorm(&i)?;
        m.le(a.seminorm(&i)?, pb + t.tol.loose * (1.0 + pb));
    }
    // the positive cone is closed under sums and meets its negative only in 0
    pos(t, &b, &mut m)?;
    let neg = a.scale_real(-1.0).is_positive(t.cfg.horizon, t.cfg.tol);
    m.flag(neg.exact);
    if neg.value {
        for i in indices(t, &alg) {
            m.le(a.seminorm(&i)?, t.tol.loose);
        }
    }
    Ok(Some(m))
}

fn invertible_positive(t: &mut Trial, alg: &Arc<LocalAlgebra>) -> LocalElement {
    let b = t.gen.positive_element_of_degree(alg, 0);
    let delta = t.gen.uniform(0.25, 1.0);
    &b + &LocalElement::identity(alg).scale_real(delta)
}

pub(crate) fn inverse_antitone(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = invertible_positive(t, &alg);
    let c = t.gen.element_of_degree(&alg, 0);
    let b = &a + &(&c.adjoint() * &c);
    let diff = &a.inverse(t.cfg.tol)? - &b.inverse(t.cfg.tol)?;
    let mut m = Margin::default();
    pos(t, &diff, &mut m)?;
    Ok(Some(m))
}

pub(crate) fn congruence_preserves_order(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let degree = t.gen.tail_degree();
    let a = t.gen.hermitian_element_of_degree(&alg, degree);
    let g = t.gen.element(&alg);
    let b = &a + &(&g.adjoint() * &g);
    let c = t.gen.element(&alg);
    let cs = c.adjoint();
    let diff = &(&(&cs * &b) * &c) - &(&(&cs * &a) * &c);
    let mut m = Margin::default();
    pos(t, &diff, &mut m)?;
    Ok(Some(m))
}

pub(crate) fn resolvent_bound(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let p = t.gen.positive_element_of_degree(&alg, 0);
    let s = 10f64.powf(t.gen.uniform(-2.0, 1.0));
    let e = LocalElement::identity(&alg);
    let shifted = &e + &p.scale_real(s);
    let inv = shifted.inverse(t.cfg.tol)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        m.le(inv.seminorm(&i)?, 1.0 + t.tol.loose);
    }
    // b ≥ e ⇒ b⁻¹ ≤ e
    pos(t, &(&e - &inv), &mut m)?;
    Ok(Some(m))
}

pub(crate) fn absorbed_resolvent_bound(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.positive_element_of_degree(&alg, 0);
    let e = LocalElement::identity(&alg);
    let r = &a * &(&e + &a).inverse(t.cfg.tol)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        m.le(r.seminorm(&i)?, 1.0 + t.tol.loose);
    }
    Ok(Some(m))
}

pub(crate) fn complement_bound(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let a = t.gen.positive_element_of_degree(&alg, 0);
    let Some(sup) = a.sup_norm().value() else {
        unreachable!("constant tails are bounded")
    };
    if sup < DEGENERATE {
        return Ok(None);
    }
    let a = a.scale_real(t.gen.uniform(0.05, 1.0) / sup);
    let e = LocalElement::identity(&alg);
    let diff = &e - &a;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        if a.seminorm(&i)? <= 1.0 {
            m.le(diff.seminorm(&i)?, 1.0 + t.tol.loose);
        }
    }
    Ok(Some(m))
}

pub(crate) fn square_root_uniqueness(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let h = t.gen.element_from(&alg, 0, |g, d| g.psd_matrix(d));
    let a = &h * &h;
    let root = a.sqrt(t.cfg.tol)?;
    let back = &root * &root;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (ph, pa) = (h.seminorm(&i)?, a.seminorm(&i)?);
        m.le((&root - &h).seminorm(&i)?, t.tol.loose * (1.0 + ph));
        m.le((&back - &a).seminorm(&i)?, t.tol.loose * (1.0 + pa));
    }
    Ok(Some(m))
}

pub(crate) fn ideal_approximate_identity(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let stored = alg.stored_indices();
    let mut kernel: Vec<Index> = stored.iter().filter(|_| t.gen.coin()).cloned().collect();
    if kernel.is_empty() {
        kernel.push(stored[t.gen.below(stored.len())].clone());
    }
    let ideal = Ideal::new(&alg, kernel)?;
    let u = ideal.approximate_identity()?;
    let a = t.gen.element(&alg);
    let x = ideal.project(&a)?;
    let mut m = Margin::default();
    m.require(ideal.contains(&x));
    match (&x - &(&x * &u)).sup_norm() {
        SupNorm::Bounded(v) => m.le(v, 0.0),
        SupNorm::Unbounded => m.require(false),
    }
    for i in indices(t, &alg) {
        m.le(u.seminorm(&i)?, 1.0);
    }
    pos(t, &u, &mut m)?;
    Ok(Some(m))
}

// ------------------------------------------------------------------ modules

fn module_and_vector(t: &mut Trial, alg: &Arc<LocalAlgebra>) -> (Arc<HilbertModule>, ModuleVector) {
    let module = t.gen.free_module(alg);
    let x = t.gen.vector(&module);
    (module, x)
}

pub(crate) fn inner_product_axioms(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let y = t.gen.vector(&module);
    let z = t.gen.vector(&module);
    let a = t.gen.element(&alg);
    let xy = x.inner(&y)?;
    let yx = y.inner(&x)?;
    let add_lhs = x.inner(&y.add(&z)?)?;
    let add_rhs = &xy + &x.inner(&z)?;
    let right = x.inner(&y.right_mul(&a)?)?;
    let left = x.right_mul(&a)?.inner(&y)?;
    let xx = x.inner(&x)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (px, py, pz, pa) = (x.seminorm(&i)?, y.seminorm(&i)?, z.seminorm(&i)?, a.seminorm(&i)?);
        let l = t.tol.loose;
        m.le((&add_lhs - &add_rhs).seminorm(&i)?, l * (1.0 + px * (py + pz)));
        m.le((&right - &(&xy * &a)).seminorm(&i)?, l * (1.0 + px * py * pa));
        m.le((&left - &(&a.adjoint() * &xy)).seminorm(&i)?, l * (1.0 + px * py * pa));
        m.le((&xy.adjoint() - &yx).seminorm(&i)?, t.tol.tight * (1.0 + px * py));
    }
    pos(t, &xx, &mut m)?;
    // definiteness
    m.require(ModuleVector::zero(&module).inner(&ModuleVector::zero(&module))?.is_zero());
    m.require(x.is_zero() == xx.is_zero());
    Ok(Some(m))
}

pub(crate) fn cauchy_schwarz(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let y = t.gen.vector(&module);
    let xx = x.inner(&x)?;
    let yy = y.inner(&y)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (pxx, pyy) = (xx.seminorm(&i)?, yy.seminorm(&i)?);
        m.le(0.0, x.cauchy_schwarz_gap(&y, &i)? + t.tol.loose * (1.0 + pxx * pyy));
        m.le(x.cauchy_schwarz_gap(&x, &i)?.abs(), t.tol.loose * (1.0 + pxx * pxx));
    }
    Ok(Some(m))
}

pub(crate) fn module_seminorm_axioms(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let y = t.gen.vector(&module);
    let a = t.gen.element(&alg);
    let s = t.gen.complex();
    let xa = x.right_mul(&a)?;
    let sx = x.scale(s);
    let sum = x.add(&y)?;
    let l = t.tol.loose;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (px, py, pa) = (x.seminorm(&i)?, y.seminorm(&i)?, a.seminorm(&i)?);
        m.le(xa.seminorm(&i)?, px * pa + l * (1.0 + px * pa));
        m.le((sx.seminorm(&i)? - s.norm() * px).abs(), l * (1.0 + s.norm() * px));
        m.le(sum.seminorm(&i)?, px + py + l * (1.0 + px + py));
    }
    Ok(Some(m))
}

pub(crate) fn module_separation(t: &mut Trial) -> TrialResult {
    let alg = algebra(t, Model::Finite);
    let (module, x) = module_and_vector(t, &alg);
    let kernel: Vec<Index> = alg.stored_indices().into_iter().filter(|_| t.gen.coin()).collect();
    let ideal = Ideal::new(&alg, kernel)?;
    let entries = x.entries().iter().map(|e| ideal.project(e)).collect::<Result<Vec<_>>>()?;
    let x = ModuleVector::new(&module, entries)?;
    let all_vanish = alg.stored_indices().iter().all(|i| x.seminorm(i).map(|v| v == 0.0).unwrap_or(false));
    let mut m = Margin::default();
    m.require(all_vanish == x.is_zero());
    Ok(Some(m))
}

pub(crate) fn module_seminorm_duality(t: &mut Trial) -> TrialResult {
    const SAMPLES: usize = 50;
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let ys: Vec<ModuleVector> = (0..SAMPLES).map(|_| t.gen.vector(&module)).collect();
    let mut m = Margin::default();
    let mut checked = false;
    for i in indices(t, &alg) {
        let p = x.seminorm(&i)?;
        if p < DEGENERATE {
            continue;
        }
        checked = true;
        let upper = p + t.tol.loose * (1.0 + p);
        let mut best = 0.0f64;
        for y in &ys {
            let q = y.seminorm(&i)?;
            if q < DEGENERATE {
                continue;
            }
            let v = x.inner(&y.scale_real(1.0 / q))?.seminorm(&i)?;
            m.le(v, upper);
            best = best.max(v);
        }
        let witness = x.inner(&x.scale_real(1.0 / p))?.seminorm(&i)?;
        m.le(witness, upper);
        best = best.max(witness);
        m.le(p - t.tol.sampled * (1.0 + p), best);
    }
    Ok(checked.then_some(m))
}

pub(crate) fn module_sup_norm(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let grows = x.entries().iter().any(|e| e.tail_degree() >= 1);
    let mut m = Margin::default();
    match x.sup_norm() {
        SupNorm::Unbounded => m.require(grows),
        SupNorm::Bounded(v) => {
            m.require(!grows);
            // for constant tails the first tail index represents all of them
            let mut idx = alg.stored_indices();
            if alg.is_countable() {
                idx.push(Index::Nat(alg.stored_len() as u64 + 1));
            }
            let mut best = 0.0f64;
            for i in &idx {
                best = best.max(x.seminorm(i)?);
            }
            m.le((v - best).abs(), t.tol.loose * (1.0 + v));
        }
    }
    // X^s is closed under the inner product
    let xb = t.gen.vector_of_degree(&module, 0);
    let yb = t.gen.vector_of_degree(&module, 0);
    m.require(xb.sup_norm().is_bounded() && yb.sup_norm().is_bounded());
    m.require(xb.inner(&yb)?.is_in_bounded_part());
    Ok(Some(m))
}

pub(crate) fn smoothing_bound(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let module = t.gen.free_module(&alg);
    let x = t.gen.vector_of_degree(&module, 0);
    let s = x.smooth(1.0, t.cfg.tol)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        m.le(s.seminorm(&i)?, 1.0 + t.tol.loose);
    }
    Ok(Some(m))
}

pub(crate) fn smoothing_limit(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let module = t.gen.free_module(&alg);
    let x = t.gen.vector_of_degree(&module, 0);
    let root = x.inner(&x)?.sqrt(t.cfg.tol)?;
    let xr = x.right_mul(&root)?;
    let smoothed = SMOOTHING_STEPS
        .iter()
        .map(|&s| x.smooth(s, t.cfg.tol).and_then(|v| x.sub(&v)))
        .collect::<Result<Vec<_>>>()?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let bound = xr.seminorm(&i)?;
        let mut prev = f64::INFINITY;
        for (s, dev) in SMOOTHING_STEPS.iter().zip(&smoothed) {
            let d = dev.seminorm(&i)?;
            m.le(d, s * bound + t.tol.loose * (1.0 + bound));
            m.le(d, prev + t.tol.loose * (1.0 + d));
            prev = d;
        }
    }
    Ok(Some(m))
}

pub(crate) fn module_approximate_identity(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let stored = alg.stored_indices();
    let alpha = stored[t.gen.below(stored.len())].clone();
    let u = Ideal::of_index(&alg, alpha.clone())?.approximate_identity()?;
    let (_, x) = module_and_vector(t, &alg);
    let rest = x.sub(&x.right_mul(&u)?)?;
    let p = x.seminorm(&alpha)?;
    let mut m = Margin::default();
    match rest.sup_norm() {
        SupNorm::Bounded(v) => m.le((v - p).abs(), t.tol.exact * (1.0 + p)),
        SupNorm::Unbounded => m.require(false),
    }
    Ok(Some(m))
}

pub(crate) fn quotient_norm(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (_, x) = module_and_vector(t, &alg);
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let p = x.seminorm(&i)?;
        let q = fiber_vector_norm(&x.quotient(&i)?);
        m.le((q - p).abs(), t.tol.base * (1.0 + p));
    }
    Ok(Some(m))
}

pub(crate) fn quotient_module(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, x) = module_and_vector(t, &alg);
    let y = t.gen.vector(&module);
    let a = t.gen.element(&alg);
    let xy = x.inner(&y)?;
    let xa = x.right_mul(&a)?;
    let l = t.tol.loose;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (qx, qy) = (x.quotient(&i)?, y.quotient(&i)?);
        let d = qx[0].dim();
        let mut fiber_inner = CMatrix::zeros(d);
        for (p, q) in qx.iter().zip(&qy) {
            fiber_inner = &fiber_inner + &(&p.adjoint() * q);
        }
        let (px, py) = (x.seminorm(&i)?, y.seminorm(&i)?);
        m.le((&fiber_inner - &xy.component(&i)?).norm(), l * (1.0 + px * py));
        let ai = a.component(&i)?;
        for (p, q) in xa.quotient(&i)?.iter().zip(&qx) {
            m.le((p - &(q * &ai)).norm(), l * (1.0 + px * ai.norm()));
        }
    }
    // the kernel submodule Ī_α maps to zero and does not move coset norms
    let stored = alg.stored_indices();
    let alpha = stored[t.gen.below(stored.len())].clone();
    let ideal = Ideal::of_index(&alg, alpha.clone())?;
    let z = t.gen.vector(&module);
    let entries = z.entries().iter().map(|e| ideal.project(e)).collect::<Result<Vec<_>>>()?;
    let z = ModuleVector::new(&module, entries)?;
    m.require(z.quotient(&alpha)?.iter().all(CMatrix::is_zero));
    let px = x.seminorm(&alpha)?;
    m.le((x.add(&z)?.seminorm(&alpha)? - px).abs(), t.tol.exact * (1.0 + px));
    Ok(Some(m))
}

// ---------------------------------------------------------------- operators

fn module_and_operator(t: &mut Trial, alg: &Arc<LocalAlgebra>) -> (Arc<HilbertModule>, ModuleOperator) {
    let module = t.gen.free_module(alg);
    let op = t.gen.operator(&module);
    (module, op)
}

pub(crate) fn operator_bounded(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, op) = module_and_operator(t, &alg);
    let x = t.gen.vector(&module);
    let a = t.gen.element(&alg);
    let tx = op.apply(&x)?;
    let lhs = op.apply(&x.right_mul(&a)?)?;
    let rhs = tx.right_mul(&a)?;
    let diff = lhs.sub(&rhs)?;
    let l = t.tol.loose;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (pt, px, pa) = (op.seminorm(&i)?, x.seminorm(&i)?, a.seminorm(&i)?);
        m.le(tx.seminorm(&i)?, pt * px + l * (1.0 + pt * px));
        m.le(diff.seminorm(&i)?, l * (1.0 + pt * px * pa));
    }
    Ok(Some(m))
}

pub(crate) fn operator_submultiplicative(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, t1) = module_and_operator(t, &alg);
    let t2 = t.gen.operator(&module);
    let prod = t1.compose(&t2)?;
    let sum = t1.add(&t2)?;
    let adj_diff = prod.adjoint().sub(&t2.adjoint().compose(&t1.adjoint())?)?;
    let l = t.tol.loose;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let (p1, p2) = (t1.seminorm(&i)?, t2.seminorm(&i)?);
        m.le(prod.seminorm(&i)?, p1 * p2 + l * (1.0 + p1 * p2));
        m.le(sum.seminorm(&i)?, p1 + p2 + l * (1.0 + p1 + p2));
        m.le(adj_diff.seminorm(&i)?, l * (1.0 + p1 * p2));
    }
    Ok(Some(m))
}

pub(crate) fn adjoint_pairing(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, op) = module_and_operator(t, &alg);
    let x = t.gen.vector(&module);
    let y = t.gen.vector(&module);
    let adj = op.adjoint();
    let d1 = &op.apply(&x)?.inner(&y)? - &x.inner(&adj.apply(&y)?)?;
    let d2 = &x.inner(&op.apply(&y)?)? - &adj.apply(&x)?.inner(&y)?;
    let mut m = Margin::default();
    for i in indices(t, &alg) {
        let scale = 1.0 + op.seminorm(&i)? * x.seminorm(&i)? * y.seminorm(&i)?;
        m.le(d1.seminorm(&i)?, t.tol.base * scale);
        m.le(d2.seminorm(&i)?, t.tol.base * scale);
    }
    m.require(adj.adjoint() == op);
    Ok(Some(m))
}

pub(crate) fn operator_cstar_identity(t: &mut Trial) -> TrialResult {
    const SAMPLES: usize = 200;
    let alg = alternating_algebra(t);
    let (_, op) = module_and_operator(t, &alg);
    let adj = op.adjoint();
    let tt = adj.compose(&op)?;
    let mut m = Margin::default();
    let idx = indices(t, &alg);
    for i in &idx {
        let p = op.seminorm(i)?;
        m.le((tt.seminorm(i)? - p * p).abs(), t.tol.loose * (1.0 + p * p));
        m.le((adj.seminorm(i)? - p).abs(), t.tol.tight * (1.0 + p));
    }
    let probe = idx[t.gen.below(idx.len())].clone();
    let p = op.seminorm(&probe)?;
    let sampled = sampled_operator_sup(&op, &probe, SAMPLES, &mut t.gen)?;
    m.le(sampled, p + t.tol.loose * (1.0 + p));
    Ok(Some(m))
}

pub(crate) fn operator_spectrum_union(t: &mut Trial) -> TrialResult {
    let alg = algebra(t, Model::Finite);
    let (_, op) = module_and_operator(t, &alg);
    let got = op.spectrum(t.cfg.horizon)?;
    let mut oracle = Vec::new();
    for i in alg.stored_indices() {
        match qr_eigenvalues(&op.fiber_matrix(&i)?) {
            Some(v) => oracle.extend(v),
            None => return Err(crate::error::Error::EigenFailure(0)),
        }
    }
    let radius = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut m = Margin::default();
    m.require(got.exact);
    m.le(hausdorff(&got.value, &oracle), t.tol.loose * (1.0 + radius));
    Ok(Some(m))
}

pub(crate) fn self_adjoint_criterion(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let module = t.gen.free_module(&alg);
    let degree = t.gen.tail_degree();
    let op = if t.gen.coin() {
        t.gen.self_adjoint_operator_of_degree(&module, degree)
    } else {
        t.gen.operator_of_degree(&module, degree)
    };
    let entry_scale = op.max_abs_diff(&ModuleOperator::zero(&module));
    let entrywise = op.max_abs_diff(&op.adjoint()) <= t.cfg.tol * (1.0 + entry_scale);
    let mut m = Margin::default();
    m.require(entrywise == op.is_self_adjoint(t.cfg.tol));
    Ok(Some(m))
}

/// Vector whose `<Tx,x>` fails positivity, built from an eigenvector of a
/// fiber matrix with a negative eigenvalue.
pub(crate) fn eigenvector_witness(
    op: &ModuleOperator,
    horizon: u64,
    tol: f64,
) -> Result<Option<ModuleVector>> {
    let module = op.module();
    let alg = module.algebra();
    let mut candidates = alg.stored_indices();
    if alg.is_countable() {
        let n0 = alg.stored_len() as u64;
        candidates.extend((n0 + 1..=n0 + horizon).map(Index::Nat));
    }
    for i in candidates {
        let big = op.fiber_matrix(&i)?;
        let (values, vectors) = big.hermitian_eigen()?;
        if values[0] >= -tol * (1.0 + big.norm()) {
            continue;
        }
        let d = alg.fiber_dim(&i)?;
        let fiber: Vec<CMatrix> = (0..module.rank())
            .map(|b| {
                CMatrix::from_fn(d, |r, c| {
                    if c == 0 {
                        vectors[(b * d + r, 0)]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        return localized_vector(module, &i, &fiber).map(Some);
    }
    Ok(None)
}

pub(crate) fn positivity_equivalence(t: &mut Trial) -> TrialResult {
    const SAMPLES: usize = 20;
    let alg = alternating_algebra(t);
    let module = t.gen.free_module(&alg);
    let op = if t.gen.coin() {
        t.gen.positive_operator(&module)
    } else {
        let degree = t.gen.tail_degree();
        t.gen.self_adjoint_operator_of_degree(&module, degree)
    };
    let (h, tol) = (t.cfg.horizon, t.cfg.tol);
    let verdict = op.is_positive(h, tol);
    let mut m = Margin::default();
    m.flag(verdict.exact);
    if verdict.value {
        for _ in 0..SAMPLES {
            let x = t.gen.vector(&module);
            let form = op.apply(&x)?.inner(&x)?;
            pos(t, &form, &mut m)?;
        }
    } else {
        match eigenvector_witness(&op, h, tol)? {
            Some(x) => {
                let form = op.apply(&x)?.inner(&x)?;
                m.require(!form.is_positive(h, tol).value);
            }
            None => m.require(false),
        }
    }
    Ok(Some(m))
}

pub(crate) fn positive_quadratic_form(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let module = t.gen.free_module(&alg);
    let op = t.gen.positive_operator(&module);
    let x = t.gen.vector(&module);
    let form = op.apply(&x)?.inner(&x)?;
    let mut m = Margin::default();
    pos(t, &form, &mut m)?;
    let (slack, exact) = operator_positivity_margin(&op, t.cfg.horizon, t.cfg.tol)?;
    m.merge(slack, exact);
    Ok(Some(m))
}

pub(crate) fn operator_bounded_part(t: &mut Trial) -> TrialResult {
    let alg = alternating_algebra(t);
    let (module, op) = module_and_operator(t, &alg);
    let mut m = Margin::default();
    match op.sup_norm() {
        SupNorm::Unbounded => m.require(op.tail_degree() >= 1),
        SupNorm::Bounded(v) => {
            m.require(op.tail_degree() == 0);
            let mut idx = alg.stored_indices();
            if alg.is_countable() {
                idx.push(Index::Nat(alg.stored_len() as u64 + 1));
            }
            let mut best = 0.0f64;
            for i in &idx {
                best = best.max(op.seminorm(i)?);
            }
            m.le((v - best).abs(), t.tol.loose * (1.0 + v));
            // restricted to X^s the operator stays bounded by its sup norm
            let x = t.gen.vector_of_degree(&module, 0);
            match (op.apply(&x)?.sup_norm(), x.sup_norm()) {
                (SupNorm::Bounded(tx), SupNorm::Bounded(nx)) => {
                    m.le(tx, v * nx + t.tol.loose * (1.0 + v * nx))
                }
                _ => m.require(false),
            }
        }
    }
    Ok(Some(m))
}
