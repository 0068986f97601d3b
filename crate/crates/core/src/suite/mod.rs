//! Seeded property suite: every algebraic identity and inequality of the
//! models, checked on random instances and summarized per property id.
//!
//! Each trial derives its own generator from `(seed, property id, trial)`, so
//! serial and parallel runs produce identical reports.

mod checks;
pub mod gen;
pub mod oracle;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cstar_matrix::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::local_algebra::DEFAULT_HORIZON;

pub use checks::{check_indices, positivity_margin, sampled_operator_sup};
pub use gen::{generate, Gen, Instance, Kind, Model};

/// Parameters of a suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_dim: usize,
    pub max_fibers: usize,
    pub max_rank: usize,
    pub prefix_len: usize,
    pub horizon: u64,
    pub tol: f64,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 200,
            max_dim: 6,
            max_fibers: 5,
            max_rank: 4,
            prefix_len: 8,
            horizon: DEFAULT_HORIZON,
            tol: DEFAULT_TOL,
            threads: None,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bounds = [
            ("trials", self.trials),
            ("max_dim", self.max_dim),
            ("max_fibers", self.max_fibers),
            ("max_rank", self.max_rank),
            ("prefix_len", self.prefix_len),
            ("horizon", self.horizon as usize),
        ];
        if let Some((name, _)) = bounds.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Invalid(format!("{name} must be positive")));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::Invalid("tolerance must be a finite non-negative number".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Invalid("threads must be positive".into()));
        }
        Ok(())
    }

    /// Tolerance ladder derived from the base tolerance `ε`.
    pub fn tolerances(&self) -> Tolerances {
        Tolerances::from_base(self.tol)
    }
}

/// Relative tolerances used by the checks; each is applied as
/// `value * (1 + magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// `10ε`: norm identities and inequalities.
    pub loose: f64,
    /// `ε`: pairings and quotient norms.
    pub base: f64,
    /// `ε/10`: involution isometry.
    pub tight: f64,
    /// `1000ε`: lower side of sampled suprema.
    pub sampled: f64,
    /// `ε/1000`: identities that hold exactly in floating point.
    pub exact: f64,
}

impl Tolerances {
    pub fn from_base(eps: f64) -> Self {
        Self {
            loose: 10.0 * eps,
            base: eps,
            tight: 0.1 * eps,
            sampled: 1000.0 * eps,
            exact: 1e-3 * eps,
        }
    }
}

/// First failing trial, for reproduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub id: String,
    pub trials: usize,
    pub failures: usize,
    /// Smallest slack over all evaluated trials; negative means a failure.
    pub worst_margin: Option<f64>,
    pub skipped: usize,
    pub exact: usize,
    pub horizon_verified: usize,
    pub first_failure: Option<FailureRecord>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Outcome of one trial: the smallest slack over its sub-checks and whether
/// every verdict was exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub exact: bool,
}

impl Default for Margin {
    fn default() -> Self {
        Self {
            value: f64::INFINITY,
            exact: true,
        }
    }
}

impl Margin {
    /// Records `lhs ≤ rhs`.
    pub fn le(&mut self, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        self.value = if slack.is_nan() { f64::NEG_INFINITY } else { self.value.min(slack) };
    }

    /// Records a boolean requirement.
    pub fn require(&mut self, ok: bool) {
        if !ok {
            self.value = self.value.min(-1.0);
        }
    }

    pub fn merge(&mut self, slack: f64, exact: bool) {
        self.le(0.0, slack);
        self.exact &= exact;
    }

    pub fn flag(&mut self, exact: bool) {
        self.exact &= exact;
    }

    pub fn passed(&self) -> bool {
        self.value >= 0.0
    }
}

/// Per-trial context handed to every property check.
pub struct Trial<'a> {
    pub gen: Gen,
    pub cfg: &'a TrialConfig,
    pub tol: Tolerances,
    pub index: usize,
}

impl Trial<'_> {
    /// Alternates between the finite and countable models by trial index.
    pub fn model(&self) -> Model {
        if self.index.is_multiple_of(2) {
            Model::Finite
        } else {
            Model::Countable
        }
    }
}

/// `Ok(None)` marks a skipped (degenerate) trial.
pub type TrialResult = Result<Option<Margin>>;

type PropertyFn = fn(&mut Trial) -> TrialResult;

/// Property ids in report order.
pub const PROPERTY_IDS: [&str; 32] = [
    "Def1.1-1", "Def1.1-2", "Def1.1-3", "Eq1.1", "L1.1a", "L1.1c", "L1.1d", "L1.2a", "L1.2b", "L1.2c",
    "Rem1.1", "ApproxId", "Def2.1", "Eq2.1", "L2.2-1", "L2.2-2", "L2.2-3", "Eq2.4", "L2.3a", "L2.3b",
    "L2.4", "L2.5", "Thm2.3", "Def3.1", "Eq3.1", "L3.2", "Eq3.6", "P3.1a", "P3.1b", "P3.1c", "P3.2",
    "P3.3",
];

fn property_fn(id: &str) -> PropertyFn {
    use checks::*;
    match id {
        "Def1.1-1" => seminorm_submultiplicative,
        "Def1.1-2" => seminorm_involution,
        "Def1.1-3" => seminorm_cstar_identity,
        "Eq1.1" => element_spectrum_union,
        "L1.1a" => order_monotone,
        "L1.1c" => inverse_antitone,
        "L1.1d" => congruence_preserves_order,
        "L1.2a" => resolvent_bound,
        "L1.2b" => absorbed_resolvent_bound,
        "L1.2c" => complement_bound,
        "Rem1.1" => square_root_uniqueness,
        "ApproxId" => ideal_approximate_identity,
        "Def2.1" => inner_product_axioms,
        "Eq2.1" => cauchy_schwarz,
        "L2.2-1" => module_seminorm_axioms,
        "L2.2-2" => module_separation,
        "L2.2-3" => module_seminorm_duality,
        "Eq2.4" => module_sup_norm,
        "L2.3a" => smoothing_bound,
        "L2.3b" => smoothing_limit,
        "L2.4" => module_approximate_identity,
        "L2.5" => quotient_norm,
        "Thm2.3" => quotient_module,
        "Def3.1" => operator_bounded,
        "Eq3.1" => operator_submultiplicative,
        "L3.2" => adjoint_pairing,
        "Eq3.6" => operator_cstar_identity,
        "P3.1a" => operator_spectrum_union,
        "P3.1b" => self_adjoint_criterion,
        "P3.1c" => positivity_equivalence,
        "P3.2" => positive_quadratic_form,
        "P3.3" => operator_bounded_part,
        other => unreachable!("unregistered property {other}"),
    }
}

/// Base seed of a property: the run seed mixed with the property id.
pub fn property_seed(seed: u64, id: &str) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let salt = id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    rng.random::<u64>() ^ salt
}

/// Generator for a single trial of a property; the trial index is the stream.
pub fn trial_gen(cfg: &TrialConfig, id: &str, trial: usize) -> Gen {
    Gen::new(property_seed(cfg.seed, id), trial as u64, cfg)
}

fn run_trial(cfg: &TrialConfig, id: &str, f: PropertyFn, trial: usize) -> TrialResult {
    let mut t = Trial {
        gen: trial_gen(cfg, id, trial),
        cfg,
        tol: cfg.tolerances(),
        index: trial,
    };
    f(&mut t)
}

fn run_property(cfg: &TrialConfig, id: &str) -> PropertyReport {
    let f = property_fn(id);
    let results: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, id, f, trial))
        .collect();

    let mut report = PropertyReport {
        id: id.to_string(),
        trials: cfg.trials,
        failures: 0,
        worst_margin: None,
        skipped: 0,
        exact: 0,
        horizon_verified: 0,
        first_failure: None,
    };
    let seed = property_seed(cfg.seed, id);
    for (trial, result) in results.into_iter().enumerate() {
        let failure = match result {
            Ok(None) => {
                report.skipped += 1;
                None
            }
            Ok(Some(m)) => {
                if m.exact {
                    report.exact += 1;
                } else {
                    report.horizon_verified += 1;
                }
                if m.value.is_finite() {
                    report.worst_margin = Some(report.worst_margin.map_or(m.value, |w: f64| w.min(m.value)));
                }
                (!m.passed()).then_some((m.value.is_finite().then_some(m.value), None))
            }
            Err(e) => Some((None, Some(e.to_string()))),
        };
        if let Some((margin, error)) = failure {
            report.failures += 1;
            if report.first_failure.is_none() {
                report.first_failure = Some(FailureRecord {
                    trial,
                    seed,
                    stream: trial as u64,
                    margin,
                    error,
                });
            }
        }
    }
    report
}

/// Runs every registered property and returns one report per id.
pub fn run_suite(cfg: &TrialConfig) -> Result<Vec<PropertyReport>> {
    cfg.validate()?;
    let run = || PROPERTY_IDS.iter().map(|id| run_property(cfg, id)).collect();
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Runs a single property by id.
pub fn run_one(cfg: &TrialConfig, id: &str) -> Result<PropertyReport> {
    cfg.validate()?;
    if !PROPERTY_IDS.contains(&id) {
        return Err(Error::Invalid(format!("unknown property id `{id}`")));
    }
    Ok(run_property(cfg, id))
}

pub fn suite_passed(reports: &[PropertyReport]) -> bool {
    reports.iter().all(PropertyReport::passed)
}

/// One line per property.
pub fn render_text(reports: &[PropertyReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let margin = r.worst_margin.map_or_else(|| "n/a".to_string(), |m| format!("{m:.3e}"));
        let _ = writeln!(
            out,
            "{:<9} {} trials={} failures={} skipped={} exact={} horizon={} worst_margin={}",
            r.id,
            if r.passed() { "PASS" } else { "FAIL" },
            r.trials,
            r.failures,
            r.skipped,
            r.exact,
            r.horizon_verified,
            margin
        );
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} properties, {} failed", reports.len(), failed);
    out
}
