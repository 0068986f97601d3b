//! Seeded random instances: algebras, elements, vectors and operators.
//!
//! Entries have independent standard Gaussian real and imaginary parts.
//! Every generator draws only from its own [`Gen`], so a `(seed, stream)`
//! pair fully determines the instance.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cstar_matrix::CMatrix;
use crate::hilbert_module::{HilbertModule, ModuleVector};
use crate::local_algebra::{LocalAlgebra, LocalElement, TailRule};
use crate::operator_algebra::ModuleOperator;
use crate::suite::TrialConfig;

/// Which algebra model to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Finite,
    Countable,
}

pub struct Gen {
    rng: ChaCha8Rng,
    max_dim: usize,
    max_fibers: usize,
    max_rank: usize,
    prefix_len: usize,
}

impl Gen {
    pub fn new(seed: u64, stream: u64, cfg: &TrialConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            max_dim: cfg.max_dim,
            max_fibers: cfg.max_fibers,
            max_rank: cfg.max_rank,
            prefix_len: cfg.prefix_len,
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.gaussian(), self.gaussian())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    pub fn matrix(&mut self, d: usize) -> CMatrix {
        CMatrix::from_fn(d, |_, _| self.complex())
    }

    /// Unitary factor of the QR decomposition of a Gaussian matrix.
    pub fn unitary(&mut self, d: usize) -> CMatrix {
        let g = DMatrix::from_fn(d, d, |_, _| self.complex());
        let q = g.qr().q();
        CMatrix::from_dmatrix(q).expect("square and finite")
    }

    /// `u·diag(λ)·u*` with `λ` uniform in `[0, 3)`.
    pub fn psd_matrix(&mut self, d: usize) -> CMatrix {
        let u = self.unitary(d);
        let diag: Vec<f64> = (0..d).map(|_| self.uniform(0.0, 3.0)).collect();
        &(&u * &CMatrix::from_real_diagonal(&diag)) * &u.adjoint()
    }

    pub fn model(&mut self) -> Model {
        if self.coin() {
            Model::Finite
        } else {
            Model::Countable
        }
    }

    pub fn algebra(&mut self, model: Model) -> Arc<LocalAlgebra> {
        match model {
            Model::Finite => {
                let m = 1 + self.below(self.max_fibers);
                let fibers: Vec<(String, usize)> =
                    (1..=m).map(|i| (format!("a{i}"), 1 + self.below(self.max_dim))).collect();
                LocalAlgebra::finite(fibers).expect("valid labels")
            }
            Model::Countable => {
                let d = 1 + self.below(self.max_dim);
                LocalAlgebra::countable(d, self.prefix_len).expect("valid config")
            }
        }
    }

    /// Tail degree drawn 0, 1, 2 with probabilities 60/30/10.
    pub fn tail_degree(&mut self) -> usize {
        match self.below(10) {
            0..=5 => 0,
            6..=8 => 1,
            _ => 2,
        }
    }

    pub fn rank(&mut self) -> usize {
        1 + self.below(self.max_rank)
    }

    /// Element whose stored components and tail coefficients come from `f`.
    pub fn element_from(
        &mut self,
        alg: &Arc<LocalAlgebra>,
        degree: usize,
        mut f: impl FnMut(&mut Self, usize) -> CMatrix,
    ) -> LocalElement {
        let comps = (0..alg.stored_len()).map(|s| f(self, alg.stored_dim(s))).collect();
        let tail = alg.tail_dim().map(|d| {
            let coeffs = (0..=degree).map(|_| f(self, d)).collect();
            TailRule::new(coeffs).expect("uniform dimension")
        });
        LocalElement::new(alg.clone(), comps, tail).expect("shapes match the algebra")
    }

    pub fn element_of_degree(&mut self, alg: &Arc<LocalAlgebra>, degree: usize) -> LocalElement {
        self.element_from(alg, degree, |g, d| g.matrix(d))
    }

    pub fn element(&mut self, alg: &Arc<LocalAlgebra>) -> LocalElement {
        let degree = self.tail_degree();
        self.element_of_degree(alg, degree)
    }

    /// `b*·b` for `b` of tail degree `degree` (so the result has degree `2·degree`).
    pub fn positive_element_of_degree(&mut self, alg: &Arc<LocalAlgebra>, degree: usize) -> LocalElement {
        let b = self.element_of_degree(alg, degree);
        &b.adjoint() * &b
    }

    pub fn positive_element(&mut self, alg: &Arc<LocalAlgebra>) -> LocalElement {
        let degree = self.tail_degree().div_ceil(2);
        self.positive_element_of_degree(alg, degree)
    }

    /// `(b + b*)/2`.
    pub fn hermitian_element_of_degree(&mut self, alg: &Arc<LocalAlgebra>, degree: usize) -> LocalElement {
        let b = self.element_of_degree(alg, degree);
        (&b + &b.adjoint()).scale_real(0.5)
    }

    pub fn free_module(&mut self, alg: &Arc<LocalAlgebra>) -> Arc<HilbertModule> {
        let k = self.rank();
        HilbertModule::free(alg, k).expect("positive rank")
    }

    pub fn vector_of_degree(&mut self, module: &Arc<HilbertModule>, degree: usize) -> ModuleVector {
        let alg = module.algebra().clone();
        let entries = (0..module.rank()).map(|_| self.element_of_degree(&alg, degree)).collect();
        ModuleVector::new(module, entries).expect("entries match the module")
    }

    pub fn vector(&mut self, module: &Arc<HilbertModule>) -> ModuleVector {
        let alg = module.algebra().clone();
        let entries = (0..module.rank()).map(|_| self.element(&alg)).collect();
        ModuleVector::new(module, entries).expect("entries match the module")
    }

    pub fn operator_of_degree(&mut self, module: &Arc<HilbertModule>, degree: usize) -> ModuleOperator {
        let alg = module.algebra().clone();
        let k = module.rank();
        let rows = (0..k)
            .map(|_| (0..k).map(|_| self.element_of_degree(&alg, degree)).collect())
            .collect();
        ModuleOperator::new(module, rows).expect("entries match the module")
    }

    pub fn operator(&mut self, module: &Arc<HilbertModule>) -> ModuleOperator {
        let degree = self.tail_degree();
        self.operator_of_degree(module, degree)
    }

    /// `(Q + Q*)/2`, self-adjoint exactly.
    pub fn self_adjoint_operator_of_degree(&mut self, module: &Arc<HilbertModule>, degree: usize) -> ModuleOperator {
        let q = self.operator_of_degree(module, degree);
        q.add(&q.adjoint())
            .expect("same module")
            .scale(Complex64::new(0.5, 0.0))
    }

    /// `Q*·Q`.
    pub fn positive_operator_of_degree(&mut self, module: &Arc<HilbertModule>, degree: usize) -> ModuleOperator {
        let q = self.operator_of_degree(module, degree);
        q.adjoint().compose(&q).expect("same module")
    }

    pub fn positive_operator(&mut self, module: &Arc<HilbertModule>) -> ModuleOperator {
        let degree = self.tail_degree().div_ceil(2);
        self.positive_operator_of_degree(module, degree)
    }
}

/// What [`generate`] should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Algebra,
    Element,
    PositiveElement,
    Vector,
    Operator,
    SelfAdjointOperator,
    PositiveOperator,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Algebra,
        Kind::Element,
        Kind::PositiveElement,
        Kind::Vector,
        Kind::Operator,
        Kind::SelfAdjointOperator,
        Kind::PositiveOperator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Algebra => "algebra",
            Kind::Element => "element",
            Kind::PositiveElement => "positive_element",
            Kind::Vector => "vector",
            Kind::Operator => "operator",
            Kind::SelfAdjointOperator => "self_adjoint_operator",
            Kind::PositiveOperator => "positive_operator",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Algebra(Arc<LocalAlgebra>),
    Element(LocalElement),
    Vector(ModuleVector),
    Operator(ModuleOperator),
}

impl Instance {
    pub fn algebra(&self) -> &Arc<LocalAlgebra> {
        match self {
            Instance::Algebra(a) => a,
            Instance::Element(e) => e.algebra(),
            Instance::Vector(v) => v.module().algebra(),
            Instance::Operator(t) => t.module().algebra(),
        }
    }
}

/// Deterministic instance of the requested kind for `cfg.seed`.
pub fn generate(kind: Kind, cfg: &TrialConfig) -> Instance {
    let mut g = Gen::new(cfg.seed, 0, cfg);
    let model = g.model();
    let alg = g.algebra(model);
    match kind {
        Kind::Algebra => Instance::Algebra(alg),
        Kind::Element => Instance::Element(g.element(&alg)),
        Kind::PositiveElement => Instance::Element(g.positive_element(&alg)),
        Kind::Vector => {
            let m = g.free_module(&alg);
            Instance::Vector(g.vector(&m))
        }
        Kind::Operator => {
            let m = g.free_module(&alg);
            Instance::Operator(g.operator(&m))
        }
        Kind::SelfAdjointOperator => {
            let m = g.free_module(&alg);
            let degree = g.tail_degree();
            Instance::Operator(g.self_adjoint_operator_of_degree(&m, degree))
        }
        Kind::PositiveOperator => {
            let m = g.free_module(&alg);
            Instance::Operator(g.positive_operator(&m))
        }
    }
}
