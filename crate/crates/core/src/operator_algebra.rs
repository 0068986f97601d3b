//! Adjointable operators on the free module `A^k`, represented as `k × k`
//! matrices over the algebra acting by `(Tx)_i = Σ_j t_ij·x_j`.
//!
//! At each index `α` an operator collapses to the scalar block matrix
//! `T_α ∈ M_{k·d_α}(ℂ)`. Its spectral norm is the operator seminorm `P̂_α(T)`;
//! spectra and positivity are decided fiberwise on these matrices.

use std::sync::Arc;

use num_complex::Complex64;

use crate::cstar_matrix::{sort_spectrum, CMatrix};
use crate::error::{Error, Result};
use crate::hilbert_module::{same_module, Flavor, HilbertModule, ModuleVector};
use crate::local_algebra::{same_algebra, Checked, Index, LocalElement, SupNorm};

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleOperator {
    module: Arc<HilbertModule>,
    // row-major k × k
    entries: Vec<LocalElement>,
}

impl ModuleOperator {
    pub fn new(module: &Arc<HilbertModule>, rows: Vec<Vec<LocalElement>>) -> Result<Self> {
        if !matches!(module.flavor(), Flavor::Free) {
            return Err(Error::Invalid("operators are defined on free modules only".into()));
        }
        let k = module.rank();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(format!("operator matrix must be {k}x{k}")));
        }
        let entries: Vec<LocalElement> = rows.into_iter().flatten().collect();
        if entries.iter().any(|e| !same_algebra(e.algebra(), module.algebra())) {
            return Err(Error::ModuleMismatch);
        }
        Ok(Self {
            module: module.clone(),
            entries,
        })
    }

    fn from_fn(module: &Arc<HilbertModule>, f: impl Fn(usize, usize) -> LocalElement) -> Self {
        let k = module.rank();
        Self {
            module: module.clone(),
            entries: (0..k * k).map(|n| f(n / k, n % k)).collect(),
        }
    }

    /// `diag(a, …, a)`.
    pub fn diagonal(module: &Arc<HilbertModule>, a: &LocalElement) -> Self {
        let zero = LocalElement::zero(module.algebra());
        Self::from_fn(module, |i, j| if i == j { a.clone() } else { zero.clone() })
    }

    pub fn identity(module: &Arc<HilbertModule>) -> Self {
        Self::diagonal(module, &LocalElement::identity(module.algebra()))
    }

    pub fn zero(module: &Arc<HilbertModule>) -> Self {
        Self::diagonal(module, &LocalElement::zero(module.algebra()))
    }

    pub fn module(&self) -> &Arc<HilbertModule> {
        &self.module
    }

    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LocalElement {
        &self.entries[i * self.rank() + j]
    }

    pub fn rows(&self) -> Vec<Vec<LocalElement>> {
        self.entries.chunks(self.rank()).map(<[_]>::to_vec).collect()
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if same_module(&self.module, &other.module) {
            Ok(())
        } else {
            Err(Error::ModuleMismatch)
        }
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if !same_module(&self.module, x.module()) {
            return Err(Error::ModuleMismatch);
        }
        let k = self.rank();
        let out = (0..k)
            .map(|i| {
                let mut acc = LocalElement::zero(self.module.algebra());
                for (j, xj) in x.entries().iter().enumerate() {
                    acc = &acc + &(self.entry(i, j) * xj);
                }
                acc
            })
            .collect();
        ModuleVector::new(&self.module, out)
    }

    /// `(T*)_ij = (t_ji)*`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(&self.module, |i, j| self.entry(j, i).adjoint())
    }

    /// `(T₁T₂)_ij = Σ_l t¹_il·t²_lj`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        let k = self.rank();
        Ok(Self::from_fn(&self.module, |i, j| {
            let mut acc = LocalElement::zero(self.module.algebra());
            for l in 0..k {
                acc = &acc + &(self.entry(i, l) * other.entry(l, j));
            }
            acc
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(Self::from_fn(&self.module, |i, j| self.entry(i, j) + other.entry(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            module: self.module.clone(),
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    /// Largest effective tail degree over all entries.
    pub fn tail_degree(&self) -> usize {
        self.entries.iter().map(LocalElement::tail_degree).max().unwrap_or(0)
    }

    /// The quotient operator `T_α` as a `(k·d_α)`-square scalar matrix.
    pub fn fiber_matrix(&self, index: &Index) -> Result<CMatrix> {
        let comps = self
            .entries
            .iter()
            .map(|e| e.component(index))
            .collect::<Result<Vec<_>>>()?;
        self.assemble(&comps)
    }

    fn assemble(&self, blocks: &[CMatrix]) -> Result<CMatrix> {
        let grid: Vec<Vec<&CMatrix>> = blocks.chunks(self.rank()).map(|r| r.iter().collect()).collect();
        CMatrix::from_blocks(&grid)
    }

    /// Block matrix of the degree-`k` tail coefficients.
    pub fn tail_coefficient_matrix(&self, degree: usize) -> Option<CMatrix> {
        let d = self.module.algebra().tail_dim()?;
        let zero = CMatrix::zeros(d);
        let blocks: Vec<CMatrix> = self
            .entries
            .iter()
            .map(|e| {
                e.tail()
                    .and_then(|t| t.coeffs().get(degree))
                    .cloned()
                    .unwrap_or_else(|| zero.clone())
            })
            .collect();
        self.assemble(&blocks).ok()
    }

    fn stored_fiber_matrices(&self) -> Vec<CMatrix> {
        self.module
            .algebra()
            .stored_indices()
            .iter()
            .map(|i| self.fiber_matrix(i).expect("stored index resolves"))
            .collect()
    }

    fn horizon_fiber_matrices(&self, horizon: u64) -> Vec<CMatrix> {
        let alg = self.module.algebra();
        let n0 = alg.stored_len() as u64;
        (n0 + 1..=n0 + horizon)
            .map(|n| self.fiber_matrix(&Index::Nat(n)).expect("tail index resolves"))
            .collect()
    }

    /// `P̂_α(T) = ‖T_α‖`.
    pub fn seminorm(&self, index: &Index) -> Result<f64> {
        Ok(self.fiber_matrix(index)?.norm())
    }

    /// `sup_α P̂_α(T)`; finite exactly on `(End*_A(X))^s`.
    pub fn sup_norm(&self) -> SupNorm {
        let prefix = self.stored_fiber_matrices().iter().map(CMatrix::norm).fold(0.0, f64::max);
        if !self.module.algebra().is_countable() {
            return SupNorm::Bounded(prefix);
        }
        if self.tail_degree() >= 1 {
            return SupNorm::Unbounded;
        }
        let c0 = self.tail_coefficient_matrix(0).expect("countable model");
        SupNorm::Bounded(prefix.max(c0.norm()))
    }

    /// `Sp(T) = ⋃_α Sp(T_α)`, with the same tail policy as elements.
    pub fn spectrum(&self, horizon: u64) -> Result<Checked<Vec<Complex64>>> {
        let mut mats = self.stored_fiber_matrices();
        let exact = if !self.module.algebra().is_countable() {
            true
        } else if self.tail_degree() == 0 {
            mats.push(self.tail_coefficient_matrix(0).expect("countable model"));
            true
        } else {
            mats.extend(self.horizon_fiber_matrices(horizon));
            false
        };
        let mut all = Vec::new();
        for m in &mats {
            all.extend(m.spectrum()?);
        }
        sort_spectrum(&mut all);
        let mut value: Vec<Complex64> = Vec::with_capacity(all.len());
        for z in all {
            if !value.iter().any(|w| (w - z).norm() <= 1e-12 * (1.0 + z.norm())) {
                value.push(z);
            }
        }
        Ok(Checked { value, exact })
    }

    /// Self-adjoint iff every fiber matrix (and every tail coefficient
    /// matrix) is Hermitian within `tol`.
    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        let stored = self.stored_fiber_matrices().iter().all(|m| m.is_hermitian(tol));
        let tail = (0..=self.tail_degree())
            .filter_map(|k| self.tail_coefficient_matrix(k))
            .all(|m| m.is_hermitian(tol));
        stored && tail
    }

    /// Positive iff every fiber matrix is positive semidefinite.
    pub fn is_positive(&self, horizon: u64, tol: f64) -> Checked<bool> {
        let prefix_ok = self.stored_fiber_matrices().iter().all(|m| m.is_positive(tol));
        if !self.module.algebra().is_countable() {
            return Checked {
                value: prefix_ok,
                exact: true,
            };
        }
        let degree = self.tail_degree();
        if degree == 0 {
            let c0 = self.tail_coefficient_matrix(0).expect("countable model");
            return Checked {
                value: prefix_ok && c0.is_positive(tol),
                exact: true,
            };
        }
        let coeffs_hermitian =
            (0..=degree).filter_map(|k| self.tail_coefficient_matrix(k)).all(|m| m.is_hermitian(tol));
        let leading = self.tail_coefficient_matrix(degree).expect("countable model");
        let value = prefix_ok
            && coeffs_hermitian
            && leading.is_positive(tol)
            && self.horizon_fiber_matrices(horizon).iter().all(|m| m.is_positive(tol));
        Checked { value, exact: false }
    }

    /// Largest entrywise difference between the operator matrices.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar_matrix::DEFAULT_TOL;
    use crate::local_algebra::{LocalAlgebra, TailRule, DEFAULT_HORIZON};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_and_zero() {
        let alg = LocalAlgebra::finite([("a", 2), ("b", 1)]).unwrap();
        let m = HilbertModule::free(&alg, 3).unwrap();
        let id = ModuleOperator::identity(&m);
        let e = LocalElement::identity(&alg);
        let x = ModuleVector::new(&m, vec![e.clone(), e.scale_real(2.0), e.scale_real(-1.0)]).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);
        assert!(ModuleOperator::zero(&m).apply(&x).unwrap().is_zero());
        assert_eq!(id.adjoint(), id);
        for i in alg.stored_indices() {
            assert!((id.seminorm(&i).unwrap() - 1.0).abs() < 1e-15);
            let dim = alg.fiber_dim(&i).unwrap();
            assert_eq!(id.fiber_matrix(&i).unwrap(), CMatrix::identity(3 * dim));
        }
        assert_eq!(id.sup_norm(), SupNorm::Bounded(1.0));
        let sp = id.spectrum(DEFAULT_HORIZON).unwrap();
        assert_eq!(sp.value, vec![c(1.0)]);
        assert!(!id.scale(c(-1.0)).is_positive(DEFAULT_HORIZON, DEFAULT_TOL).value);
    }

    #[test]
    fn diagonal_acts_entrywise() {
        let alg = LocalAlgebra::finite([("a", 2)]).unwrap();
        let m = HilbertModule::free(&alg, 2).unwrap();
        let a = LocalElement::new(alg.clone(), vec![CMatrix::from_real_diagonal(&[2.0, 3.0])], None).unwrap();
        let b = LocalElement::new(alg.clone(), vec![CMatrix::from_real_diagonal(&[1.0, -1.0])], None).unwrap();
        let x = ModuleVector::new(&m, vec![b.clone(), b.scale_real(4.0)]).unwrap();
        let y = ModuleOperator::diagonal(&m, &a).apply(&x).unwrap();
        assert_eq!(y.entries()[0], &a * &b);
        assert_eq!(y.entries()[1], &a * &b.scale_real(4.0));
    }

    #[test]
    fn rank_one_jordan_block_norm() {
        let alg = LocalAlgebra::finite([("only", 2)]).unwrap();
        let m = HilbertModule::free(&alg, 1).unwrap();
        let j = CMatrix::from_rows(vec![vec![c(1.0), c(1.0)], vec![c(0.0), c(1.0)]]).unwrap();
        let t = ModuleOperator::new(&m, vec![vec![LocalElement::new(alg.clone(), vec![j], None).unwrap()]]).unwrap();
        // singular values of [[1,1],[0,1]] are (1 ± √5)/2 in absolute value
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((t.seminorm(&"only".into()).unwrap() - golden).abs() < 1e-14);
        let adj = t.adjoint();
        assert_eq!(adj.entry(0, 0).components()[0], t.entry(0, 0).components()[0].adjoint());
    }

    #[test]
    fn growing_tail_operator() {
        let alg = LocalAlgebra::countable(1, 2).unwrap();
        let m = HilbertModule::free(&alg, 1).unwrap();
        let lin = LocalElement::from_fibers(&alg, CMatrix::identity, |d| {
            TailRule::new(vec![CMatrix::zeros(d), CMatrix::identity(d)]).unwrap()
        });
        let t = ModuleOperator::diagonal(&m, &lin);
        assert_eq!(t.sup_norm(), SupNorm::Unbounded);
        let p = t.is_positive(8, DEFAULT_TOL);
        assert!(p.value && !p.exact);
        assert!(!t.spectrum(8).unwrap().exact);
        assert!((t.seminorm(&Index::Nat(40)).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let alg = LocalAlgebra::finite([("a", 1)]).unwrap();
        let m1 = HilbertModule::free(&alg, 1).unwrap();
        let m2 = HilbertModule::free(&alg, 2).unwrap();
        let t = ModuleOperator::identity(&m1);
        assert_eq!(t.apply(&ModuleVector::zero(&m2)), Err(Error::ModuleMismatch));
        assert_eq!(t.compose(&ModuleOperator::identity(&m2)), Err(Error::ModuleMismatch));
        assert!(t.seminorm(&"zz".into()).is_err());
        assert!(ModuleOperator::new(&m2, vec![vec![LocalElement::zero(&alg)]]).is_err());
    }
}
