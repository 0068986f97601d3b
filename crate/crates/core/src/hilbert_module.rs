//! Hilbert modules `X = A^k` over a [`LocalAlgebra`], and the ideal
//! submodules `I_S ⊂ A`.
//!
//! The inner product is `<x, y> = Σ x_i* y_i`. It is A-linear in the second
//! argument: `<x, y·a> = <x, y>·a` and `<x·a, y> = a*·<x, y>`.

use std::sync::Arc;

use crate::cstar_matrix::{stacked_norm, CMatrix};
use crate::error::{Error, Result};
use crate::local_algebra::{same_algebra, Ideal, Index, LocalAlgebra, LocalElement, SupNorm};

#[derive(Clone, Debug, PartialEq)]
pub enum Flavor {
    Free,
    /// Rank-one module whose entries lie in the ideal.
    Ideal(Ideal),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HilbertModule {
    alg: Arc<LocalAlgebra>,
    rank: usize,
    flavor: Flavor,
}

impl HilbertModule {
    pub fn free(alg: &Arc<LocalAlgebra>, rank: usize) -> Result<Arc<Self>> {
        if rank == 0 {
            return Err(Error::Invalid("module rank must be positive".into()));
        }
        Ok(Arc::new(Self {
            alg: alg.clone(),
            rank,
            flavor: Flavor::Free,
        }))
    }

    pub fn ideal(ideal: Ideal) -> Arc<Self> {
        Arc::new(Self {
            alg: ideal.algebra().clone(),
            rank: 1,
            flavor: Flavor::Ideal(ideal),
        })
    }

    pub fn algebra(&self) -> &Arc<LocalAlgebra> {
        &self.alg
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn flavor(&self) -> &Flavor {
        &self.flavor
    }
}

pub(crate) fn same_module(a: &Arc<HilbertModule>, b: &Arc<HilbertModule>) -> bool {
    Arc::ptr_eq(a, b) || (same_algebra(&a.alg, &b.alg) && a.rank == b.rank && a.flavor == b.flavor)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    module: Arc<HilbertModule>,
    entries: Vec<LocalElement>,
}

impl ModuleVector {
    pub fn new(module: &Arc<HilbertModule>, entries: Vec<LocalElement>) -> Result<Self> {
        if entries.len() != module.rank {
            return Err(Error::DimensionMismatch(format!(
                "module has rank {}, got {} entries",
                module.rank,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !same_algebra(e.algebra(), &module.alg)) {
            return Err(Error::ModuleMismatch);
        }
        if let Flavor::Ideal(ideal) = &module.flavor {
            if !ideal.contains(&entries[0]) {
                return Err(Error::Invalid("entry does not lie in the ideal".into()));
            }
        }
        Ok(Self {
            module: module.clone(),
            entries,
        })
    }

    pub fn zero(module: &Arc<HilbertModule>) -> Self {
        Self {
            module: module.clone(),
            entries: vec![LocalElement::zero(&module.alg); module.rank],
        }
    }

    pub fn module(&self) -> &Arc<HilbertModule> {
        &self.module
    }

    pub fn entries(&self) -> &[LocalElement] {
        &self.entries
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if same_module(&self.module, &other.module) {
            Ok(())
        } else {
            Err(Error::ModuleMismatch)
        }
    }

    fn map(&self, f: impl Fn(&LocalElement) -> LocalElement) -> Self {
        Self {
            module: self.module.clone(),
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Right module action `x·a`.
    pub fn right_mul(&self, a: &LocalElement) -> Result<Self> {
        if !same_algebra(a.algebra(), &self.module.alg) {
            return Err(Error::ModuleMismatch);
        }
        Ok(self.map(|x| x * a))
    }

    pub fn scale(&self, s: num_complex::Complex64) -> Self {
        self.map(|x| x.scale(s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|x| x.scale_real(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(Self {
            module: self.module.clone(),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LocalElement::is_zero)
    }

    /// `<x, y> = Σ x_i* y_i`.
    pub fn inner(&self, other: &Self) -> Result<LocalElement> {
        self.ensure_same(other)?;
        let mut acc = LocalElement::zero(&self.module.alg);
        for (x, y) in self.entries.iter().zip(&other.entries) {
            acc = &acc + &(&x.adjoint() * y);
        }
        Ok(acc)
    }

    /// `P̄_α(x) = P_α(<x, x>)^{1/2}`.
    pub fn seminorm(&self, index: &Index) -> Result<f64> {
        Ok(self.inner(self)?.seminorm(index)?.sqrt())
    }

    /// `P_α(<x,x>)·P_α(<y,y>) − P_α(<x,y>)²`; non-negative up to rounding.
    pub fn cauchy_schwarz_gap(&self, other: &Self, index: &Index) -> Result<f64> {
        let xx = self.inner(self)?.seminorm(index)?;
        let yy = other.inner(other)?.seminorm(index)?;
        let xy = self.inner(other)?.seminorm(index)?;
        Ok(xx * yy - xy * xy)
    }

    /// `‖x‖^s = (‖<x,x>‖^s)^{1/2}`; finite exactly on the bounded part `X^s`.
    pub fn sup_norm(&self) -> SupNorm {
        self.inner(self)
            .expect("a vector shares its own module")
            .sup_norm()
            .sqrt()
    }

    /// `x·(e + t·√<x,x>)⁻¹`.
    ///
    /// For `t = 1` every module seminorm of the result is at most 1, and
    /// `P̄_α(x − smooth(x, t)) ≤ t·P̄_α(x·√<x,x>)`.
    pub fn smooth(&self, t: f64, tol: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Invalid(format!("smoothing parameter must be positive, got {t}")));
        }
        let root = self.inner(self)?.sqrt(tol)?;
        let shifted = &LocalElement::identity(&self.module.alg) + &root.scale_real(t);
        let inv = shifted.inverse(tol)?;
        self.right_mul(&inv)
    }

    /// Image of `x` in the quotient module `X_α = X / Ī_α`.
    pub fn quotient(&self, index: &Index) -> Result<Vec<CMatrix>> {
        self.entries.iter().map(|e| e.component(index)).collect()
    }
}

/// Norm of a fiber vector in the Hilbert `A_α`-module `A_α^k`:
/// `‖Σ x_i* x_i‖^{1/2}`, computed as the spectral norm of the column stack.
pub fn fiber_vector_norm(fiber: &[CMatrix]) -> f64 {
    stacked_norm(fiber)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstar_matrix::DEFAULT_TOL;
    use crate::local_algebra::TailRule;

    fn alg() -> Arc<LocalAlgebra> {
        LocalAlgebra::finite([("a1", 2), ("a2", 3)]).unwrap()
    }

    #[test]
    fn inner_of_identity_pair() {
        let alg = alg();
        let m = HilbertModule::free(&alg, 2).unwrap();
        let e = LocalElement::identity(&alg);
        let x = ModuleVector::new(&m, vec![e.clone(), e.clone()]).unwrap();
        let xx = x.inner(&x).unwrap();
        assert!(xx.max_abs_diff(&e.scale_real(2.0)) < 1e-15);
        assert!(x.inner(&ModuleVector::zero(&m)).unwrap().is_zero());
        let q = x.quotient(&"a1".into()).unwrap();
        assert_eq!(q, vec![CMatrix::identity(2), CMatrix::identity(2)]);
        assert!((fiber_vector_norm(&q) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn seminorm_examples() {
        let alg = alg();
        let m = HilbertModule::free(&alg, 1).unwrap();
        let x = ModuleVector::new(&m, vec![LocalElement::identity(&alg)]).unwrap();
        assert!((x.seminorm(&"a2".into()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(x.sup_norm(), SupNorm::Bounded(1.0));
        let y = ModuleVector::zero(&m);
        assert_eq!(y.seminorm(&"a1".into()).unwrap(), 0.0);
        assert_eq!(x.cauchy_schwarz_gap(&y, &"a1".into()).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_and_rank_errors() {
        let alg = alg();
        let m1 = HilbertModule::free(&alg, 1).unwrap();
        let m2 = HilbertModule::free(&alg, 2).unwrap();
        let x = ModuleVector::zero(&m1);
        let y = ModuleVector::zero(&m2);
        assert_eq!(x.inner(&y), Err(Error::ModuleMismatch));
        assert!(ModuleVector::new(&m2, vec![LocalElement::zero(&alg)]).is_err());
        assert!(HilbertModule::free(&alg, 0).is_err());
    }

    #[test]
    fn ideal_module_membership() {
        let alg = alg();
        let ideal = Ideal::of_index(&alg, "a1".into()).unwrap();
        let m = HilbertModule::ideal(ideal.clone());
        assert!(ModuleVector::new(&m, vec![LocalElement::identity(&alg)]).is_err());
        let inside = ideal.project(&LocalElement::identity(&alg)).unwrap();
        let x = ModuleVector::new(&m, vec![inside]).unwrap();
        assert_eq!(x.seminorm(&"a1".into()).unwrap(), 0.0);
        assert!(x.quotient(&"a1".into()).unwrap()[0].is_zero());
    }

    #[test]
    fn smoothing_zero_and_unsupported_tail() {
        let alg = alg();
        let m = HilbertModule::free(&alg, 2).unwrap();
        assert!(ModuleVector::zero(&m).smooth(1.0, DEFAULT_TOL).unwrap().is_zero());

        let calg = LocalAlgebra::countable(1, 2).unwrap();
        let cm = HilbertModule::free(&calg, 1).unwrap();
        let lin = LocalElement::from_fibers(&calg, CMatrix::identity, |d| {
            TailRule::new(vec![CMatrix::zeros(d), CMatrix::identity(d)]).unwrap()
        });
        let x = ModuleVector::new(&cm, vec![lin]).unwrap();
        assert_eq!(x.sup_norm(), SupNorm::Unbounded);
        assert_eq!(x.smooth(1.0, DEFAULT_TOL), Err(Error::UnsupportedTail));
        assert!(ModuleVector::zero(&m).smooth(0.0, DEFAULT_TOL).is_err());
    }
}
