//! Acceptance criteria at their pinned tolerances. Each criterion prints one
//! PASS/FAIL line; the test fails if any criterion fails.
//!
//! Absolute thresholds are applied relative to the magnitude of the compared
//! quantities, `thr·(1 + magnitude)`, like everywhere else in the crate.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use loccstar::cstar_matrix::hausdorff;
use loccstar::hilbert_module::fiber_vector_norm;
use loccstar::suite::oracle::qr_eigenvalues;
use loccstar::suite::{check_indices, run_one, run_suite, sampled_operator_sup, Gen, Model, TrialConfig};
use loccstar::{
    CMatrix, HilbertModule, Ideal, Index, LocalElement, ModuleOperator, ModuleVector, SupNorm,
    TailRule, DEFAULT_TOL,
};

const H: u64 = 64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: usize, total: usize, worst: f64) -> Outcome {
    Outcome {
        pass: failures == 0,
        detail: format!("{failures}/{total} failing, worst slack {worst:.3e}"),
    }
}

/// Tracks `lhs ≤ rhs` over many checks.
#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    worst: Option<f64>,
}

impl Tally {
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.checks += 1;
        let slack = rhs - lhs;
        if slack.is_nan() || slack < 0.0 {
            self.failures += 1;
        }
        self.worst = Some(self.worst.map_or(slack, |w| w.min(slack)));
    }

    fn require(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn done(self) -> Outcome {
        outcome(self.failures, self.checks, self.worst.unwrap_or(f64::INFINITY))
    }
}

fn cfg() -> TrialConfig {
    TrialConfig::default()
}

fn gen(criterion: u64, trial: usize) -> Gen {
    Gen::new(0xacce_0000 + criterion, trial as u64, &cfg())
}

fn model_of(trial: usize) -> Model {
    if trial.is_multiple_of(2) {
        Model::Finite
    } else {
        Model::Countable
    }
}

fn seminorm_axioms() -> Outcome {
    let mut t = Tally::default();
    for model in [Model::Finite, Model::Countable] {
        for trial in 0..200 {
            let mut g = gen(1, trial + if model == Model::Finite { 0 } else { 1000 });
            let alg = g.algebra(model);
            let a = g.element(&alg);
            let b = g.element(&alg);
            let aa = &a.adjoint() * &a;
            let ab = &a * &b;
            let adj = a.adjoint();
            for i in check_indices(&alg, H) {
                let (pa, pb) = (a.seminorm(&i).unwrap(), b.seminorm(&i).unwrap());
                t.le((aa.seminorm(&i).unwrap() - pa * pa).abs(), 1e-8 * (1.0 + pa * pa));
                t.le((adj.seminorm(&i).unwrap() - pa).abs(), 1e-10 * (1.0 + pa));
                t.le(ab.seminorm(&i).unwrap(), pa * pb + 1e-8 * (1.0 + pa * pb));
            }
        }
    }
    t.done()
}

fn spectrum_union() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..100 {
        let mut g = gen(2, trial);
        let alg = g.algebra(Model::Finite);
        let a = g.element(&alg);
        let got = a.spectrum(H).unwrap();
        let mut oracle = Vec::new();
        for c in a.components() {
            oracle.extend(qr_eigenvalues(c).expect("oracle converges"));
        }
        let radius = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
        t.require(got.exact);
        t.le(hausdorff(&got.value, &oracle), 1e-8 * (1.0 + radius));
    }
    t.done()
}

fn suite_properties(ids: &[&str], trials: usize, floor: f64) -> Outcome {
    let cfg = TrialConfig { trials, ..cfg() };
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for id in ids {
        let r = run_one(&cfg, id).unwrap();
        let w = r.worst_margin.unwrap_or(f64::INFINITY);
        if r.failures > 0 || w < floor {
            failures += 1;
        }
        worst = worst.min(w);
        parts.push(format!("{id}:{}", r.failures));
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{} ({trials} trials each), worst margin {worst:.3e}", parts.join(" ")),
    }
}

fn square_root() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..200 {
        let mut g = gen(4, trial);
        let alg = g.algebra(model_of(trial));
        let h = g.element_from(&alg, 0, |g, d| g.psd_matrix(d));
        let root = (&h * &h).sqrt(DEFAULT_TOL).unwrap();
        for i in check_indices(&alg, H) {
            let hi = h.component(&i).unwrap();
            let diff = &root.component(&i).unwrap() - &hi;
            t.le(diff.norm(), 1e-8 * (1.0 + hi.norm()));
        }
        let a = g.positive_element_of_degree(&alg, 0);
        let r = a.sqrt(DEFAULT_TOL).unwrap();
        let back = &(&r * &r) - &a;
        for i in check_indices(&alg, H) {
            t.le(back.seminorm(&i).unwrap(), 1e-8 * (1.0 + a.seminorm(&i).unwrap()));
        }
    }
    t.done()
}

fn cauchy_schwarz() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..500 {
        let mut g = gen(5, trial);
        let alg = g.algebra(model_of(trial));
        let module = HilbertModule::free(&alg, 1 + trial % 4).unwrap();
        let x = g.vector(&module);
        let y = g.vector(&module);
        let (xx, yy) = (x.inner(&x).unwrap(), y.inner(&y).unwrap());
        for i in check_indices(&alg, H) {
            let (pxx, pyy) = (xx.seminorm(&i).unwrap(), yy.seminorm(&i).unwrap());
            t.le(0.0, x.cauchy_schwarz_gap(&y, &i).unwrap() + 1e-8 * (1.0 + pxx * pyy));
            let px = x.seminorm(&i).unwrap();
            t.le(x.cauchy_schwarz_gap(&x, &i).unwrap().abs(), 1e-8 * (1.0 + px.powi(4)));
        }
    }
    t.done()
}

fn smoothing() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..100 {
        let mut g = gen(7, trial);
        let alg = g.algebra(model_of(trial));
        let module = g.free_module(&alg);
        let x = g.vector_of_degree(&module, 0);
        let s1 = x.smooth(1.0, DEFAULT_TOL).unwrap();
        let root = x.inner(&x).unwrap().sqrt(DEFAULT_TOL).unwrap();
        let xr = x.right_mul(&root).unwrap();
        let devs: Vec<ModuleVector> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&s| x.sub(&x.smooth(s, DEFAULT_TOL).unwrap()).unwrap())
            .collect();
        for i in check_indices(&alg, H) {
            t.le(s1.seminorm(&i).unwrap(), 1.0 + 1e-8);
            let bound = xr.seminorm(&i).unwrap();
            let mut prev = f64::INFINITY;
            for (s, dev) in [1e-1, 1e-2, 1e-3].iter().zip(&devs) {
                let d = dev.seminorm(&i).unwrap();
                t.le(d, s * bound + 1e-8 * (1.0 + bound));
                t.le(d, prev + 1e-8 * (1.0 + d));
                prev = d;
            }
        }
    }
    t.done()
}

fn quotient_norm() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..200 {
        let mut g = gen(8, trial);
        let alg = g.algebra(Model::Finite);
        let module = g.free_module(&alg);
        let x = g.vector(&module);
        for i in alg.stored_indices() {
            let p = x.seminorm(&i).unwrap();
            t.le((fiber_vector_norm(&x.quotient(&i).unwrap()) - p).abs(), 1e-9 * (1.0 + p));
            let u = Ideal::of_index(&alg, i.clone()).unwrap().approximate_identity().unwrap();
            let rest = x.sub(&x.right_mul(&u).unwrap()).unwrap();
            match rest.sup_norm() {
                SupNorm::Bounded(v) => t.le((v - p).abs(), 1e-12 * (1.0 + p)),
                SupNorm::Unbounded => t.require(false),
            }
        }
    }
    t.done()
}

fn operator_cstar_identity() -> Outcome {
    let mut t = Tally::default();
    let mut near_sup = 0;
    let trials = 200;
    for trial in 0..trials {
        let mut g = gen(9, trial);
        let alg = g.algebra(model_of(trial));
        let module = g.free_module(&alg);
        let op = g.operator(&module);
        let adj = op.adjoint();
        let tt = adj.compose(&op).unwrap();
        let idx = check_indices(&alg, H);
        for i in &idx {
            let p = op.seminorm(i).unwrap();
            t.le((tt.seminorm(i).unwrap() - p * p).abs(), 1e-8 * (1.0 + p * p));
            t.le((adj.seminorm(i).unwrap() - p).abs(), 1e-10 * (1.0 + p));
        }
        let probe = &idx[trial % idx.len()];
        let p = op.seminorm(probe).unwrap();
        let sampled = sampled_operator_sup(&op, probe, 200, &mut g).unwrap();
        t.le(sampled, p + 1e-8 * (1.0 + p));
        if sampled >= 0.8 * p {
            near_sup += 1;
        }
    }
    let mut out = t.done();
    let ok = near_sup * 100 >= trials * 95;
    out.pass &= ok;
    out.detail += &format!(", sampled sup ≥ 0.8·P̂ on {near_sup}/{trials}");
    out
}

fn adjoint_pairing() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..200 {
        let mut g = gen(10, trial);
        let alg = g.algebra(model_of(trial));
        let module = g.free_module(&alg);
        let op = g.operator(&module);
        let x = g.vector(&module);
        let y = g.vector(&module);
        let d = &op.apply(&x).unwrap().inner(&y).unwrap() - &x.inner(&op.adjoint().apply(&y).unwrap()).unwrap();
        for i in check_indices(&alg, H) {
            let scale = op.seminorm(&i).unwrap() * x.seminorm(&i).unwrap() * y.seminorm(&i).unwrap();
            t.le(d.seminorm(&i).unwrap(), 1e-9 * (1.0 + scale));
        }
    }
    t.done()
}

/// Vector concentrated at one index: the given fiber tuple there, zero at
/// every other stored index, and a constant tail when the index is past the
/// prefix.
fn localized(module: &Arc<HilbertModule>, index: &Index, fiber: &[CMatrix]) -> ModuleVector {
    let alg = module.algebra();
    let past_prefix = matches!(index, Index::Nat(n) if *n as usize > alg.stored_len());
    let entries = fiber
        .iter()
        .map(|m| {
            let comps = alg
                .stored_indices()
                .iter()
                .enumerate()
                .map(|(s, i)| if i == index { m.clone() } else { CMatrix::zeros(alg.stored_dim(s)) })
                .collect();
            let tail = alg.tail_dim().map(|d| {
                if past_prefix {
                    TailRule::constant(m.clone())
                } else {
                    TailRule::zero(d)
                }
            });
            LocalElement::new(alg.clone(), comps, tail).unwrap()
        })
        .collect();
    ModuleVector::new(module, entries).unwrap()
}

fn eigen_witness(op: &ModuleOperator) -> Option<ModuleVector> {
    let module = op.module();
    let alg = module.algebra().clone();
    let mut idx = alg.stored_indices();
    if alg.is_countable() {
        let n0 = alg.stored_len() as u64;
        idx.extend((n0 + 1..=n0 + H).map(Index::Nat));
    }
    for i in idx {
        let m = op.fiber_matrix(&i).unwrap();
        let (values, vectors) = m.hermitian_eigen().unwrap();
        if values[0] >= -DEFAULT_TOL * (1.0 + m.norm()) {
            continue;
        }
        let d = alg.fiber_dim(&i).unwrap();
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
        return Some(localized(module, &i, &fiber));
    }
    None
}

fn form_is_positive(op: &ModuleOperator, x: &ModuleVector) -> bool {
    op.apply(x).unwrap().inner(x).unwrap().is_positive(H, DEFAULT_TOL).value
}

fn positivity_equivalence() -> Outcome {
    let mut t = Tally::default();
    let (mut positive, mut by_sampling, mut by_oracle) = (0, 0, 0);
    for trial in 0..100 {
        let mut g = gen(11, trial);
        let alg = g.algebra(model_of(trial / 2));
        let module = g.free_module(&alg);
        let op = if trial.is_multiple_of(2) {
            g.positive_operator(&module)
        } else {
            let degree = g.tail_degree();
            g.self_adjoint_operator_of_degree(&module, degree)
        };
        if op.is_positive(H, DEFAULT_TOL).value {
            positive += 1;
            for _ in 0..100 {
                let x = g.vector(&module);
                t.require(form_is_positive(&op, &x));
            }
        } else if (0..500).any(|_| !form_is_positive(&op, &g.vector(&module))) {
            by_sampling += 1;
        } else {
            let found = eigen_witness(&op).is_some_and(|x| !form_is_positive(&op, &x));
            by_oracle += usize::from(found);
            t.require(found);
        }
    }
    let mut out = t.done();
    out.detail += &format!(", positive {positive}, witnesses: sampled {by_sampling} eigenvector {by_oracle}");
    out
}

fn bounded_part() -> Outcome {
    let mut t = Tally::default();
    for trial in 0..100 {
        let mut g = gen(12, trial);
        let alg = g.algebra(Model::Countable);
        let degree = trial % 3;
        let a = g.element_of_degree(&alg, degree);
        match (degree, a.sup_norm()) {
            (0, SupNorm::Bounded(v)) => {
                let expected = a
                    .components()
                    .iter()
                    .chain(a.tail().map(|r| &r.coeffs()[0]))
                    .map(CMatrix::norm)
                    .fold(0.0, f64::max);
                t.le((v - expected).abs(), 0.0);
            }
            (d, SupNorm::Unbounded) => t.require(d >= 1),
            _ => t.require(false),
        }
    }
    t.done()
}

fn determinism() -> Outcome {
    let first = serde_json::to_string(&run_suite(&cfg()).unwrap()).unwrap();
    let second = serde_json::to_string(&run_suite(&cfg()).unwrap()).unwrap();
    Outcome {
        pass: first == second,
        detail: format!("{} bytes per report", first.len()),
    }
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 13] = [
        ("seminorm axioms", seminorm_axioms),
        ("spectrum as union of fiber spectra", spectrum_union),
        ("order lemmas", || {
            suite_properties(&["L1.1a", "L1.1c", "L1.1d", "L1.2a", "L1.2b", "L1.2c"], 200, -1e-8)
        }),
        ("square root uniqueness", square_root),
        ("Cauchy-Bunyakovskii inequality", cauchy_schwarz),
        ("module seminorm properties", || {
            suite_properties(&["L2.2-1", "L2.2-2", "L2.2-3"], 200, f64::NEG_INFINITY)
        }),
        ("smoothing", smoothing),
        ("quotient norm identity", quotient_norm),
        ("operator C*-identity", operator_cstar_identity),
        ("adjoint pairing", adjoint_pairing),
        ("positivity equivalence", positivity_equivalence),
        ("bounded part exactness", bounded_part),
        ("suite determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let line = format!("{} {:>2}. {name}: {}\n", if out.pass { "PASS" } else { "FAIL" }, n + 1, out.detail);
        // bypasses the test harness capture so the lines show on every run
        let _ = std::io::stderr().write_all(line.as_bytes());
        if !out.pass {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
