//! Locally C*-algebras realized as families of matrix fibers.
//!
//! Two models are supported:
//!
//! * **Finite**: a finite set of labelled fibers `M_{d_α}(ℂ)`; the algebra is
//!   their product and `P_α(a) = ‖a_α‖`.
//! * **Countable**: the full product `∏_{n ≥ 1} M_d(ℂ)`. Elements are stored as
//!   an explicit prefix `a_1, …, a_N` plus a polynomial tail rule
//!   `a_n = Σ_k n^k C_k` for `n > N`. This subset is closed under the
//!   *-algebra operations. Operations whose result leaves it (inverse and
//!   square root of growing tails) fail with [`Error::UnsupportedTail`].
//!
//! Verdicts that cannot be decided exactly from a growing tail are evaluated
//! on a finite horizon and returned with `exact == false`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::cstar_matrix::{sort_spectrum, CMatrix};
use crate::error::{Error, Result};

/// Default number of tail indices inspected past the prefix.
pub const DEFAULT_HORIZON: u64 = 64;

/// The index set of the seminorm family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSet {
    /// Distinct labels, kept sorted.
    Finite(Vec<String>),
    /// All `n ≥ 1`; components `1..=prefix_len` are stored explicitly.
    Countable { prefix_len: usize },
}

/// A single seminorm index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Label(String),
    Nat(u64),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Label(l) => f.write_str(l),
            Index::Nat(n) => write!(f, "{n}"),
        }
    }
}

impl From<&str> for Index {
    fn from(s: &str) -> Self {
        Index::Label(s.to_string())
    }
}

impl From<u64> for Index {
    fn from(n: u64) -> Self {
        Index::Nat(n)
    }
}

/// Where the component for an index lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Stored(usize),
    Tail(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalAlgebra {
    index: IndexSet,
    // Finite: one entry per label. Countable: a single common dimension.
    dims: Vec<usize>,
}

impl LocalAlgebra {
    /// Finite model from `(label, dim)` pairs. Labels are sorted.
    pub fn finite<S: Into<String>>(fibers: impl IntoIterator<Item = (S, usize)>) -> Result<Arc<Self>> {
        let mut fibers: Vec<(String, usize)> = fibers.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if fibers.is_empty() {
            return Err(Error::Invalid("a finite algebra needs at least one fiber".into()));
        }
        fibers.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = fibers.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid(format!("duplicate fiber label `{}`", w[0].0)));
        }
        if let Some((l, _)) = fibers.iter().find(|(_, d)| *d == 0) {
            return Err(Error::Invalid(format!("fiber `{l}` has dimension 0")));
        }
        let (labels, dims) = fibers.into_iter().unzip();
        Ok(Arc::new(Self {
            index: IndexSet::Finite(labels),
            dims,
        }))
    }

    /// Countable model `∏_{n≥1} M_dim(ℂ)` with an explicit prefix of length `prefix_len`.
    pub fn countable(dim: usize, prefix_len: usize) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::Invalid("fiber dimension must be positive".into()));
        }
        if prefix_len == 0 {
            return Err(Error::Invalid("prefix length must be positive".into()));
        }
        Ok(Arc::new(Self {
            index: IndexSet::Countable { prefix_len },
            dims: vec![dim],
        }))
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn is_countable(&self) -> bool {
        matches!(self.index, IndexSet::Countable { .. })
    }

    /// Number of explicitly stored components.
    pub fn stored_len(&self) -> usize {
        match &self.index {
            IndexSet::Finite(labels) => labels.len(),
            IndexSet::Countable { prefix_len } => *prefix_len,
        }
    }

    /// Dimension of the stored component at `slot`.
    pub fn stored_dim(&self, slot: usize) -> usize {
        match &self.index {
            IndexSet::Finite(_) => self.dims[slot],
            IndexSet::Countable { .. } => self.dims[0],
        }
    }

    /// Common fiber dimension of the countable model.
    pub fn tail_dim(&self) -> Option<usize> {
        self.is_countable().then(|| self.dims[0])
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    /// Index of the stored component at `slot`.
    pub fn stored_index(&self, slot: usize) -> Index {
        match &self.index {
            IndexSet::Finite(labels) => Index::Label(labels[slot].clone()),
            IndexSet::Countable { .. } => Index::Nat(slot as u64 + 1),
        }
    }

    /// Indices with explicitly stored components, in iteration order.
    pub fn stored_indices(&self) -> Vec<Index> {
        (0..self.stored_len()).map(|s| self.stored_index(s)).collect()
    }

    pub fn resolve(&self, index: &Index) -> Result<Slot> {
        match (&self.index, index) {
            (IndexSet::Finite(labels), Index::Label(l)) => labels
                .binary_search(l)
                .map(Slot::Stored)
                .map_err(|_| Error::UnknownIndex(l.clone())),
            (IndexSet::Countable { prefix_len }, Index::Nat(n)) => match *n {
                0 => Err(Error::UnknownIndex("0".into())),
                n if n as usize <= *prefix_len => Ok(Slot::Stored(n as usize - 1)),
                n => Ok(Slot::Tail(n)),
            },
            (_, other) => Err(Error::UnknownIndex(other.to_string())),
        }
    }

    /// Parses a textual index: a label in the finite model, a positive integer
    /// in the countable model.
    pub fn parse_index(&self, s: &str) -> Result<Index> {
        let index = match self.index {
            IndexSet::Finite(_) => Index::Label(s.to_string()),
            IndexSet::Countable { .. } => {
                Index::Nat(s.trim().parse().map_err(|_| Error::UnknownIndex(s.to_string()))?)
            }
        };
        self.resolve(&index)?;
        Ok(index)
    }

    pub fn fiber_dim(&self, index: &Index) -> Result<usize> {
        Ok(match self.resolve(index)? {
            Slot::Stored(s) => self.stored_dim(s),
            Slot::Tail(_) => self.dims[0],
        })
    }
}

pub(crate) fn same_algebra(a: &Arc<LocalAlgebra>, b: &Arc<LocalAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Polynomial tail `a_n = Σ_k n^k C_k`, coefficients in ascending degree.
///
/// Trailing zero coefficients are trimmed, so `coeffs().len() - 1` is the
/// effective degree (0 for the zero tail).
#[derive(Clone, Debug, PartialEq)]
pub struct TailRule {
    coeffs: Vec<CMatrix>,
}

impl TailRule {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Invalid("tail needs at least one coefficient".into()));
        };
        let d = first.dim();
        if coeffs.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch("tail coefficients must share one dimension".into()));
        }
        Ok(Self::trimmed(coeffs))
    }

    pub fn constant(c: CMatrix) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(CMatrix::zeros(dim))
    }

    fn trimmed(mut coeffs: Vec<CMatrix>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(CMatrix::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    /// Effective degree `max{k : C_k ≠ 0}`, 0 for the zero tail.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &CMatrix {
        self.coeffs.last().expect("non-empty")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    /// Value of the tail at index `n` (Horner evaluation).
    pub fn eval(&self, n: u64) -> CMatrix {
        let x = n as f64;
        let mut acc = self.leading().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = &acc.scale_real(x) + c;
        }
        acc
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(CMatrix::adjoint).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::trimmed(self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = CMatrix::zeros(self.dim());
        let coeffs = (0..len)
            .map(|k| f(self.coeffs.get(k).unwrap_or(&zero), other.coeffs.get(k).unwrap_or(&zero)))
            .collect();
        Self::trimmed(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Polynomial product with matrix coefficients (order matters).
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim();
        let mut coeffs = vec![CMatrix::zeros(d); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        Self::trimmed(coeffs)
    }

    /// Hermitian for every `n` iff every coefficient is Hermitian.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.is_hermitian(tol))
    }
}

/// A value together with whether it was decided exactly or only on a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub exact: bool,
}

/// Result of the sup-norm computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupNorm {
    Bounded(f64),
    Unbounded,
}

impl SupNorm {
    pub fn is_bounded(&self) -> bool {
        matches!(self, SupNorm::Bounded(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            SupNorm::Bounded(v) => Some(*v),
            SupNorm::Unbounded => None,
        }
    }

    pub fn sqrt(self) -> SupNorm {
        match self {
            SupNorm::Bounded(v) => SupNorm::Bounded(v.sqrt()),
            SupNorm::Unbounded => SupNorm::Unbounded,
        }
    }
}

/// An element of a [`LocalAlgebra`].
#[derive(Clone, Debug)]
pub struct LocalElement {
    alg: Arc<LocalAlgebra>,
    comps: Vec<CMatrix>,
    tail: Option<TailRule>,
}

impl PartialEq for LocalElement {
    fn eq(&self, other: &Self) -> bool {
        same_algebra(&self.alg, &other.alg) && self.comps == other.comps && self.tail == other.tail
    }
}

impl LocalElement {
    /// Validates shapes: one component per stored index, and a tail exactly
    /// when the model is countable.
    pub fn new(alg: Arc<LocalAlgebra>, comps: Vec<CMatrix>, tail: Option<TailRule>) -> Result<Self> {
        if comps.len() != alg.stored_len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                alg.stored_len(),
                comps.len()
            )));
        }
        for (slot, c) in comps.iter().enumerate() {
            if c.dim() != alg.stored_dim(slot) {
                return Err(Error::DimensionMismatch(format!(
                    "component {} has dimension {}, expected {}",
                    alg.stored_index(slot),
                    c.dim(),
                    alg.stored_dim(slot)
                )));
            }
        }
        match (alg.tail_dim(), &tail) {
            (None, None) => {}
            (None, Some(_)) => return Err(Error::Invalid("finite-model elements have no tail".into())),
            (Some(_), None) => return Err(Error::Invalid("countable-model elements need a tail".into())),
            (Some(d), Some(t)) if t.dim() != d => {
                return Err(Error::DimensionMismatch(format!(
                    "tail has dimension {}, expected {d}",
                    t.dim()
                )))
            }
            _ => {}
        }
        Ok(Self { alg, comps, tail })
    }

    /// Builds an element from a function of the fiber dimension, with the
    /// given tail for the countable model.
    pub fn from_fibers(
        alg: &Arc<LocalAlgebra>,
        mut f: impl FnMut(usize) -> CMatrix,
        tail: impl FnOnce(usize) -> TailRule,
    ) -> Self {
        let comps = (0..alg.stored_len()).map(|s| f(alg.stored_dim(s))).collect();
        let tail = alg.tail_dim().map(tail);
        Self {
            alg: alg.clone(),
            comps,
            tail,
        }
    }

    pub fn identity(alg: &Arc<LocalAlgebra>) -> Self {
        Self::from_fibers(alg, CMatrix::identity, |d| TailRule::constant(CMatrix::identity(d)))
    }

    pub fn zero(alg: &Arc<LocalAlgebra>) -> Self {
        Self::from_fibers(alg, CMatrix::zeros, TailRule::zero)
    }

    pub fn algebra(&self) -> &Arc<LocalAlgebra> {
        &self.alg
    }

    pub fn components(&self) -> &[CMatrix] {
        &self.comps
    }

    pub fn tail(&self) -> Option<&TailRule> {
        self.tail.as_ref()
    }

    /// Effective tail degree; 0 in the finite model.
    pub fn tail_degree(&self) -> usize {
        self.tail.as_ref().map_or(0, TailRule::degree)
    }

    fn at_slot(&self, slot: Slot) -> CMatrix {
        match slot {
            Slot::Stored(s) => self.comps[s].clone(),
            Slot::Tail(n) => self.tail.as_ref().expect("countable").eval(n),
        }
    }

    /// The quotient map `a ↦ a_α ∈ A_α`.
    pub fn component(&self, index: &Index) -> Result<CMatrix> {
        Ok(self.at_slot(self.alg.resolve(index)?))
    }

    /// `P_α(a) = ‖a_α‖`.
    pub fn seminorm(&self, index: &Index) -> Result<f64> {
        Ok(self.component(index)?.norm())
    }

    /// `sup_α P_α(a)`, decided exactly from the tail degree.
    pub fn sup_norm(&self) -> SupNorm {
        let prefix = self.comps.iter().map(CMatrix::norm).fold(0.0, f64::max);
        match &self.tail {
            None => SupNorm::Bounded(prefix),
            Some(t) if t.degree() >= 1 => SupNorm::Unbounded,
            Some(t) => SupNorm::Bounded(prefix.max(t.coeffs()[0].norm())),
        }
    }

    pub fn is_in_bounded_part(&self) -> bool {
        self.sup_norm().is_bounded()
    }

    /// Exact zero test (separation of the seminorm family).
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(CMatrix::is_zero) && self.tail.as_ref().is_none_or(TailRule::is_zero)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            alg: self.alg.clone(),
            comps: self.comps.iter().map(CMatrix::adjoint).collect(),
            tail: self.tail.as_ref().map(TailRule::adjoint),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            alg: self.alg.clone(),
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
            tail: self.tail.as_ref().map(|t| t.scale(s)),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    fn combine(
        &self,
        other: &Self,
        f: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
        g: impl Fn(&TailRule, &TailRule) -> TailRule,
    ) -> Self {
        assert!(
            same_algebra(&self.alg, &other.alg),
            "elements belong to different algebras"
        );
        Self {
            alg: self.alg.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
            tail: match (&self.tail, &other.tail) {
                (Some(a), Some(b)) => Some(g(a, b)),
                _ => None,
            },
        }
    }

    /// Checked sum; `ModuleMismatch` across algebras.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(self + other)
    }

    /// Checked product; `ModuleMismatch` across algebras.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(self * other)
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if same_algebra(&self.alg, &other.alg) {
            Ok(())
        } else {
            Err(Error::ModuleMismatch)
        }
    }

    /// Stored components plus, in the countable model, the tail evaluated on
    /// `(N, N + horizon]`.
    fn horizon_components(&self, horizon: u64) -> Vec<CMatrix> {
        let mut out = self.comps.clone();
        if let Some(t) = &self.tail {
            let n0 = self.alg.stored_len() as u64;
            out.extend((n0 + 1..=n0 + horizon).map(|n| t.eval(n)));
        }
        out
    }

    /// `Sp(a) = ⋃_α Sp(a_α)`, deduplicated and sorted.
    ///
    /// Exact for the finite model and for constant tails; for growing tails the
    /// union runs over `n ≤ N + horizon` and is flagged inexact.
    pub fn spectrum(&self, horizon: u64) -> Result<Checked<Vec<Complex64>>> {
        let (mats, exact) = match &self.tail {
            Some(t) if t.degree() >= 1 => (self.horizon_components(horizon), false),
            Some(t) => {
                let mut m = self.comps.clone();
                m.push(t.coeffs()[0].clone());
                (m, true)
            }
            None => (self.comps.clone(), true),
        };
        let mut all = Vec::new();
        for m in &mats {
            all.extend(m.spectrum()?);
        }
        Ok(Checked {
            value: spectrum_union(all),
            exact,
        })
    }

    /// Hermitian within `tol`; the tail is decided coefficientwise, so the
    /// verdict is exact in both models.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.comps.iter().all(|c| c.is_hermitian(tol))
            && self.tail.as_ref().is_none_or(|t| t.is_hermitian(tol))
    }

    /// Positivity: every fiber positive at tolerance `tol`.
    ///
    /// Growing tails are checked on `(N, N + horizon]` together with the
    /// leading coefficient and flagged inexact.
    pub fn is_positive(&self, horizon: u64, tol: f64) -> Checked<bool> {
        let prefix_ok = self.comps.iter().all(|c| c.is_positive(tol));
        match &self.tail {
            None => Checked {
                value: prefix_ok,
                exact: true,
            },
            Some(t) if t.degree() == 0 => Checked {
                value: prefix_ok && t.coeffs()[0].is_positive(tol),
                exact: true,
            },
            Some(t) => {
                let n0 = self.alg.stored_len() as u64;
                let value = prefix_ok
                    && t.is_hermitian(tol)
                    && t.leading().is_positive(tol)
                    && (n0 + 1..=n0 + horizon).all(|n| t.eval(n).is_positive(tol));
                Checked { value, exact: false }
            }
        }
    }

    fn constant_tail(&self) -> Result<Option<&CMatrix>> {
        match &self.tail {
            None => Ok(None),
            Some(t) if t.degree() >= 1 => Err(Error::UnsupportedTail),
            Some(t) => Ok(Some(&t.coeffs()[0])),
        }
    }

    /// The unique positive square root, fiberwise.
    pub fn sqrt(&self, tol: f64) -> Result<Self> {
        let tail = self.constant_tail()?;
        let comps = self.comps.iter().map(|c| c.sqrt(tol)).collect::<Result<Vec<_>>>()?;
        let tail = tail.map(|c| c.sqrt(tol).map(TailRule::constant)).transpose()?;
        Ok(Self {
            alg: self.alg.clone(),
            comps,
            tail,
        })
    }

    /// Fiberwise inverse; `Singular` names the first offending index.
    pub fn inverse(&self, tol: f64) -> Result<Self> {
        let tail = self.constant_tail()?;
        let comps = self
            .comps
            .iter()
            .enumerate()
            .map(|(s, c)| {
                c.inverse(tol).map_err(|_| Error::Singular {
                    index: Some(self.alg.stored_index(s).to_string()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = tail
            .map(|c| {
                c.inverse(tol).map(TailRule::constant).map_err(|_| Error::Singular {
                    index: Some("tail".into()),
                })
            })
            .transpose()?;
        Ok(Self {
            alg: self.alg.clone(),
            comps,
            tail,
        })
    }

    /// Largest entrywise difference over components and tail coefficients.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = (self - other).comps.iter().map(|c| c.max_abs_diff(&CMatrix::zeros(c.dim()))).fold(0.0, f64::max);
        let t = match (&self.tail, &other.tail) {
            (Some(a), Some(b)) => a
                .sub(b)
                .coeffs()
                .iter()
                .map(|c| c.max_abs_diff(&CMatrix::zeros(c.dim())))
                .fold(0.0, f64::max),
            _ => 0.0,
        };
        d.max(t)
    }
}

/// Merges eigenvalues that agree within a relative `1e-12` and sorts.
fn spectrum_union(mut all: Vec<Complex64>) -> Vec<Complex64> {
    sort_spectrum(&mut all);
    let mut out: Vec<Complex64> = Vec::with_capacity(all.len());
    for z in all {
        if !out.iter().any(|w| (w - z).norm() <= 1e-12 * (1.0 + z.norm())) {
            out.push(z);
        }
    }
    out
}

impl<'a> Add<&'a LocalElement> for &'a LocalElement {
    type Output = LocalElement;
    fn add(self, rhs: &LocalElement) -> LocalElement {
        self.combine(rhs, |a, b| a + b, TailRule::add)
    }
}

impl<'a> Sub<&'a LocalElement> for &'a LocalElement {
    type Output = LocalElement;
    fn sub(self, rhs: &LocalElement) -> LocalElement {
        self.combine(rhs, |a, b| a - b, TailRule::sub)
    }
}

impl<'a> Mul<&'a LocalElement> for &'a LocalElement {
    type Output = LocalElement;
    fn mul(self, rhs: &LocalElement) -> LocalElement {
        self.combine(rhs, |a, b| a * b, TailRule::mul)
    }
}

impl Neg for &LocalElement {
    type Output = LocalElement;
    fn neg(self) -> LocalElement {
        self.scale_real(-1.0)
    }
}

/// The closed ideal `I_S = {a : a_α = 0 for α ∈ S}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ideal {
    alg: Arc<LocalAlgebra>,
    kernel: BTreeSet<Index>,
}

impl Ideal {
    pub fn new(alg: &Arc<LocalAlgebra>, kernel: impl IntoIterator<Item = Index>) -> Result<Self> {
        let kernel: BTreeSet<Index> = kernel.into_iter().collect();
        for i in &kernel {
            alg.resolve(i)?;
        }
        Ok(Self {
            alg: alg.clone(),
            kernel,
        })
    }

    /// `I_α`, the kernel of a single seminorm.
    pub fn of_index(alg: &Arc<LocalAlgebra>, index: Index) -> Result<Self> {
        Self::new(alg, [index])
    }

    pub fn algebra(&self) -> &Arc<LocalAlgebra> {
        &self.alg
    }

    pub fn kernel(&self) -> &BTreeSet<Index> {
        &self.kernel
    }

    /// Exact membership: every kernel component is zero.
    pub fn contains(&self, a: &LocalElement) -> bool {
        same_algebra(&self.alg, &a.alg)
            && self
                .kernel
                .iter()
                .all(|i| a.component(i).map(|c| c.is_zero()).unwrap_or(false))
    }

    /// Projects an element into the ideal by zeroing the kernel components.
    ///
    /// Kernel indices past the prefix cannot be zeroed in a polynomial tail.
    pub fn project(&self, a: &LocalElement) -> Result<LocalElement> {
        let mut out = a.clone();
        for i in &self.kernel {
            match self.alg.resolve(i)? {
                Slot::Stored(s) => out.comps[s] = CMatrix::zeros(self.alg.stored_dim(s)),
                Slot::Tail(_) => return Err(Error::UnsupportedTail),
            }
        }
        Ok(out)
    }

    /// The unit of the ideal: `0` on the kernel, `e` elsewhere.
    ///
    /// As a constant net this is an exact approximate identity:
    /// `a·u = a` for all `a ∈ I_S` and `P_α(u) ≤ 1`.
    pub fn approximate_identity(&self) -> Result<LocalElement> {
        if self.kernel.is_empty() {
            return Err(Error::EmptyKernel);
        }
        self.project(&LocalElement::identity(&self.alg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_fibers() -> Arc<LocalAlgebra> {
        LocalAlgebra::finite([("a1", 2), ("a2", 1), ("a3", 3)]).unwrap()
    }

    #[test]
    fn algebra_validation() {
        assert!(LocalAlgebra::finite(Vec::<(String, usize)>::new()).is_err());
        assert!(LocalAlgebra::finite([("x", 1), ("x", 2)]).is_err());
        assert!(LocalAlgebra::finite([("x", 0)]).is_err());
        assert!(LocalAlgebra::countable(2, 0).is_err());
        assert!(LocalAlgebra::countable(0, 3).is_err());
        let alg = LocalAlgebra::finite([("b", 1), ("a", 2)]).unwrap();
        assert_eq!(alg.stored_indices(), vec![Index::from("a"), Index::from("b")]);
    }

    #[test]
    fn index_resolution() {
        let alg = LocalAlgebra::countable(2, 4).unwrap();
        assert_eq!(alg.resolve(&Index::Nat(4)), Ok(Slot::Stored(3)));
        assert_eq!(alg.resolve(&Index::Nat(9)), Ok(Slot::Tail(9)));
        assert!(alg.resolve(&Index::Nat(0)).is_err());
        assert!(alg.resolve(&Index::from("a1")).is_err());
        assert!(alg.parse_index("x").is_err());
        assert!(three_fibers().parse_index("a4").is_err());
    }

    #[test]
    fn seminorm_examples() {
        let alg = three_fibers();
        let e = LocalElement::identity(&alg);
        for i in alg.stored_indices() {
            assert!((e.seminorm(&i).unwrap() - 1.0).abs() < 1e-15);
        }
        let k = Ideal::of_index(&alg, "a2".into()).unwrap().project(&e).unwrap();
        assert_eq!(k.seminorm(&"a2".into()).unwrap(), 0.0);
        assert_eq!(e.seminorm(&"zz".into()), Err(Error::UnknownIndex("zz".into())));

        let c = CMatrix::from_real_diagonal(&[2.0, 0.0]);
        let calg = LocalAlgebra::countable(2, 3).unwrap();
        let a = LocalElement::from_fibers(&calg, CMatrix::zeros, |d| {
            TailRule::new(vec![CMatrix::zeros(d), c.clone()]).unwrap()
        });
        assert!((a.seminorm(&Index::Nat(7)).unwrap() - 14.0).abs() < 1e-13);
    }

    #[test]
    fn sup_norm_examples() {
        let calg = LocalAlgebra::countable(1, 2).unwrap();
        let e = LocalElement::identity(&calg);
        assert_eq!(e.sup_norm(), SupNorm::Bounded(1.0));
        assert!(e.is_in_bounded_part());

        let lin = LocalElement::new(
            calg.clone(),
            vec![CMatrix::identity(1); 2],
            Some(TailRule::new(vec![CMatrix::zeros(1), CMatrix::identity(1)]).unwrap()),
        )
        .unwrap();
        assert_eq!(lin.sup_norm(), SupNorm::Unbounded);
        assert!(!lin.is_in_bounded_part());

        let a = LocalElement::new(
            calg,
            vec![CMatrix::from_real_diagonal(&[3.0]), CMatrix::from_real_diagonal(&[1.0])],
            Some(TailRule::constant(CMatrix::from_real_diagonal(&[-2.0]))),
        )
        .unwrap();
        assert_eq!(a.sup_norm(), SupNorm::Bounded(3.0));
    }

    #[test]
    fn spectrum_is_union_of_fibers() {
        let alg = LocalAlgebra::finite([("p", 2), ("q", 1)]).unwrap();
        let a = LocalElement::new(
            alg.clone(),
            vec![CMatrix::from_real_diagonal(&[1.0, 2.0]), CMatrix::from_real_diagonal(&[3.0])],
            None,
        )
        .unwrap();
        let s = a.spectrum(DEFAULT_HORIZON).unwrap();
        assert!(s.exact);
        let re: Vec<f64> = s.value.iter().map(|z| z.re).collect();
        assert_eq!(re.len(), 3);
        for (got, want) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let e = LocalElement::identity(&alg).spectrum(DEFAULT_HORIZON).unwrap();
        assert_eq!(e.value, vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn growing_tail_spectrum_is_flagged() {
        let calg = LocalAlgebra::countable(1, 2).unwrap();
        let lin = LocalElement::from_fibers(&calg, CMatrix::identity, |d| {
            TailRule::new(vec![CMatrix::zeros(d), CMatrix::identity(d)]).unwrap()
        });
        let s = lin.spectrum(5).unwrap();
        assert!(!s.exact);
        assert_eq!(s.value.len(), 6); // 1 and 3..=7
        let p = lin.is_positive(5, 1e-9);
        assert!(p.value && !p.exact);
    }

    #[test]
    fn positivity_and_errors() {
        let alg = three_fibers();
        let bad = LocalElement::from_fibers(
            &alg,
            |d| {
                let mut diag = vec![1.0; d];
                diag[0] = -1.0;
                CMatrix::from_real_diagonal(&diag)
            },
            TailRule::zero,
        );
        assert!(!bad.is_positive(DEFAULT_HORIZON, 1e-9).value);
        assert_eq!(bad.sqrt(1e-9), Err(Error::NotPositive));

        let one = LocalAlgebra::finite([("only", 1)]).unwrap();
        let two = LocalElement::new(one.clone(), vec![CMatrix::from_real_diagonal(&[2.0])], None).unwrap();
        let inv = two.inverse(1e-9).unwrap();
        assert!((inv.components()[0].get(0, 0).re - 0.5).abs() < 1e-15);

        let sing = LocalElement::zero(&one);
        assert_eq!(
            sing.inverse(1e-9),
            Err(Error::Singular {
                index: Some("only".into())
            })
        );

        let calg = LocalAlgebra::countable(1, 1).unwrap();
        let lin = LocalElement::from_fibers(&calg, CMatrix::identity, |d| {
            TailRule::new(vec![CMatrix::identity(d), CMatrix::identity(d)]).unwrap()
        });
        assert_eq!(lin.inverse(1e-9), Err(Error::UnsupportedTail));
        assert_eq!(lin.sqrt(1e-9), Err(Error::UnsupportedTail));
    }

    #[test]
    fn sqrt_of_diagonals() {
        let alg = LocalAlgebra::finite([("x", 2)]).unwrap();
        let a = LocalElement::new(alg.clone(), vec![CMatrix::from_real_diagonal(&[4.0, 9.0])], None).unwrap();
        let r = a.sqrt(1e-9).unwrap();
        assert!(r.components()[0].max_abs_diff(&CMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);
        let e = LocalElement::identity(&alg);
        assert!(e.sqrt(1e-9).unwrap().max_abs_diff(&e) < 1e-14);
    }

    #[test]
    fn approximate_identity_of_single_kernel() {
        let alg = three_fibers();
        let ideal = Ideal::of_index(&alg, "a1".into()).unwrap();
        let u = ideal.approximate_identity().unwrap();
        assert!(u.components()[0].is_zero());
        assert_eq!(u.components()[1], CMatrix::identity(1));
        assert_eq!(u.components()[2], CMatrix::identity(3));
        assert_eq!(Ideal::new(&alg, []).unwrap().approximate_identity(), Err(Error::EmptyKernel));

        let calg = LocalAlgebra::countable(2, 3).unwrap();
        let beyond = Ideal::of_index(&calg, Index::Nat(10)).unwrap();
        assert_eq!(beyond.approximate_identity(), Err(Error::UnsupportedTail));
    }

    #[test]
    fn tail_arithmetic() {
        let c1 = CMatrix::from_real_diagonal(&[1.0, 2.0]);
        let c2 = CMatrix::from_real_diagonal(&[0.0, 1.0]);
        let p = TailRule::new(vec![c1.clone(), c2.clone()]).unwrap();
        let sq = p.mul(&p);
        assert_eq!(sq.degree(), 2);
        for n in [3u64, 10, 50] {
            let v = p.eval(n);
            assert!(sq.eval(n).max_abs_diff(&(&v * &v)) < 1e-9);
        }
        assert!(p.sub(&p).is_zero());
        let z = TailRule::new(vec![c1, CMatrix::zeros(2), CMatrix::zeros(2)]).unwrap();
        assert_eq!(z.degree(), 0);
    }
}
