//! Command-line front end: reads JSON specs, runs one operation and prints a
//! JSON result.
//!
//! Exit status: 0 success, 1 domain error, 2 parse error, 3 suite failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use loccstar::json::{
    algebra_from_spec, algebra_to_spec, complex_pairs, element_from_spec, element_to_spec, operator_from_spec,
    operator_to_spec, vector_from_spec, vector_to_spec, AlgebraSpec, ElementSpec, OperatorSpec, VectorSpec,
};
use loccstar::local_algebra::DEFAULT_HORIZON;
use loccstar::suite::{self, generate, Instance, Kind, TrialConfig};
use loccstar::{Error, LocalAlgebra, LocalElement, ModuleOperator, ModuleVector, SupNorm, DEFAULT_TOL};

const THREADS_VAR: &str = "LOCCSTAR_THREADS";

#[derive(Parser)]
#[command(name = "loccstar", version, about = "Matrix models of locally C*-algebras and Hilbert modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ElemArgs {
    #[arg(long)]
    alg: PathBuf,
    #[arg(long)]
    elem: PathBuf,
}

#[derive(Args)]
struct VecArgs {
    #[arg(long)]
    alg: PathBuf,
    #[arg(long)]
    vec: PathBuf,
}

#[derive(Args)]
struct OpArgs {
    #[arg(long)]
    alg: PathBuf,
    #[arg(long)]
    op: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// P_α(a) at one index.
    Seminorm {
        #[command(flatten)]
        input: ElemArgs,
        #[arg(long)]
        index: String,
        #[command(flatten)]
        common: Common,
    },
    /// Supremum of all seminorms, or "Unbounded".
    SupNorm {
        #[command(flatten)]
        input: ElemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Union of fiber spectra.
    Spectrum {
        #[command(flatten)]
        input: ElemArgs,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Positivity of the element, or of elem2 − elem when --elem2 is given.
    IsPositive {
        #[command(flatten)]
        input: ElemArgs,
        #[arg(long)]
        elem2: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Positive square root.
    Sqrt {
        #[command(flatten)]
        input: ElemArgs,
        #[command(flatten)]
        common: Common,
    },
    Inverse {
        #[command(flatten)]
        input: ElemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Module inner product <vec, vec2>.
    Inner {
        #[command(flatten)]
        input: VecArgs,
        #[arg(long)]
        vec2: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    ModuleSeminorm {
        #[command(flatten)]
        input: VecArgs,
        #[arg(long)]
        index: String,
        #[command(flatten)]
        common: Common,
    },
    /// x·(e + t·sqrt(<x,x>))⁻¹.
    Smooth {
        #[command(flatten)]
        input: VecArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        common: Common,
    },
    OpSeminorm {
        #[command(flatten)]
        input: OpArgs,
        #[arg(long)]
        index: String,
        #[command(flatten)]
        common: Common,
    },
    Adjoint {
        #[command(flatten)]
        input: OpArgs,
        #[command(flatten)]
        common: Common,
    },
    OpSpectrum {
        #[command(flatten)]
        input: OpArgs,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Print a seeded random instance together with its algebra.
    Gen {
        #[arg(long, default_value = "element")]
        kind: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Domain(Error),
    Parse(String),
    Suite(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<String, Failure>;

fn read_spec<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

/// Spec validation failures count as parse errors.
fn parse<T>(r: loccstar::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Parse(e.to_string()))
}

fn load_algebra(path: &Path) -> Result<Arc<LocalAlgebra>, Failure> {
    parse(algebra_from_spec(&read_spec::<AlgebraSpec>(path)?))
}

fn load_element(alg: &Arc<LocalAlgebra>, path: &Path) -> Result<LocalElement, Failure> {
    parse(element_from_spec(alg, &read_spec::<ElementSpec>(path)?))
}

fn load_vector(alg: &Arc<LocalAlgebra>, path: &Path) -> Result<ModuleVector, Failure> {
    parse(vector_from_spec(alg, &read_spec::<VectorSpec>(path)?))
}

fn load_operator(alg: &Arc<LocalAlgebra>, path: &Path) -> Result<ModuleOperator, Failure> {
    parse(operator_from_spec(alg, &read_spec::<OperatorSpec>(path)?))
}

fn elem_input(input: &ElemArgs) -> Result<(Arc<LocalAlgebra>, LocalElement), Failure> {
    let alg = load_algebra(&input.alg)?;
    let a = load_element(&alg, &input.elem)?;
    Ok((alg, a))
}

fn vec_input(input: &VecArgs) -> Result<(Arc<LocalAlgebra>, ModuleVector), Failure> {
    let alg = load_algebra(&input.alg)?;
    let x = load_vector(&alg, &input.vec)?;
    Ok((alg, x))
}

fn op_input(input: &OpArgs) -> Result<(Arc<LocalAlgebra>, ModuleOperator), Failure> {
    let alg = load_algebra(&input.alg)?;
    let t = load_operator(&alg, &input.op)?;
    Ok((alg, t))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("specs serialize")
}

fn sup_value(s: SupNorm) -> Value {
    match s {
        SupNorm::Bounded(v) => json!(v),
        SupNorm::Unbounded => json!("Unbounded"),
    }
}

fn render(result: Value, exact: bool, common: &Common) -> String {
    match common.format {
        Format::Json => json!({"result": result, "exact": exact, "tolerance": common.tol}).to_string(),
        Format::Text => format!("{result}\nexact={exact} tolerance={}", common.tol),
    }
}

fn check_tol(common: &Common) -> Result<(), Failure> {
    if common.tol.is_finite() && common.tol >= 0.0 {
        Ok(())
    } else {
        Err(Failure::Parse("--tol must be a finite non-negative number".into()))
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Parse(format!("{THREADS_VAR} must be a positive integer"))),
        },
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Seminorm { input, index, common } => {
            check_tol(&common)?;
            let (alg, a) = elem_input(&input)?;
            let i = alg.parse_index(&index)?;
            Ok(render(json!(a.seminorm(&i)?), true, &common))
        }
        Command::SupNorm { input, common } => {
            check_tol(&common)?;
            let (_, a) = elem_input(&input)?;
            Ok(render(sup_value(a.sup_norm()), true, &common))
        }
        Command::Spectrum { input, horizon, common } => {
            check_tol(&common)?;
            let (_, a) = elem_input(&input)?;
            let s = a.spectrum(horizon)?;
            Ok(render(json!(complex_pairs(&s.value)), s.exact, &common))
        }
        Command::IsPositive {
            input,
            elem2,
            horizon,
            common,
        } => {
            check_tol(&common)?;
            let (alg, a) = elem_input(&input)?;
            let target = match elem2 {
                Some(path) => &load_element(&alg, &path)? - &a,
                None => a,
            };
            let v = target.is_positive(horizon, common.tol);
            Ok(render(json!(v.value), v.exact, &common))
        }
        Command::Sqrt { input, common } => {
            check_tol(&common)?;
            let (_, a) = elem_input(&input)?;
            let exact = a.tail_degree() == 0;
            Ok(render(to_value(&element_to_spec(&a.sqrt(common.tol)?)), exact, &common))
        }
        Command::Inverse { input, common } => {
            check_tol(&common)?;
            let (_, a) = elem_input(&input)?;
            Ok(render(to_value(&element_to_spec(&a.inverse(common.tol)?)), true, &common))
        }
        Command::Inner { input, vec2, common } => {
            check_tol(&common)?;
            let (alg, x) = vec_input(&input)?;
            let y = load_vector(&alg, &vec2)?;
            Ok(render(to_value(&element_to_spec(&x.inner(&y)?)), true, &common))
        }
        Command::ModuleSeminorm { input, index, common } => {
            check_tol(&common)?;
            let (alg, x) = vec_input(&input)?;
            let i = alg.parse_index(&index)?;
            Ok(render(json!(x.seminorm(&i)?), true, &common))
        }
        Command::Smooth { input, t, common } => {
            check_tol(&common)?;
            let (_, x) = vec_input(&input)?;
            Ok(render(to_value(&vector_to_spec(&x.smooth(t, common.tol)?)), true, &common))
        }
        Command::OpSeminorm { input, index, common } => {
            check_tol(&common)?;
            let (alg, op) = op_input(&input)?;
            let i = alg.parse_index(&index)?;
            Ok(render(json!(op.seminorm(&i)?), true, &common))
        }
        Command::Adjoint { input, common } => {
            check_tol(&common)?;
            let (_, op) = op_input(&input)?;
            Ok(render(to_value(&operator_to_spec(&op.adjoint())), true, &common))
        }
        Command::OpSpectrum { input, horizon, common } => {
            check_tol(&common)?;
            let (_, op) = op_input(&input)?;
            let s = op.spectrum(horizon)?;
            Ok(render(json!(complex_pairs(&s.value)), s.exact, &common))
        }
        Command::Verify {
            seed,
            trials,
            horizon,
            common,
        } => {
            check_tol(&common)?;
            let cfg = TrialConfig {
                seed,
                trials,
                horizon,
                tol: common.tol,
                threads: threads_from_env()?,
                ..TrialConfig::default()
            };
            let reports = parse(suite::run_suite(&cfg))?;
            let out = match common.format {
                Format::Json => serde_json::to_string(&reports).expect("reports serialize"),
                Format::Text => suite::render_text(&reports).trim_end().to_string(),
            };
            if suite::suite_passed(&reports) {
                Ok(out)
            } else {
                Err(Failure::Suite(out))
            }
        }
        Command::Gen { kind, seed, common } => {
            check_tol(&common)?;
            let k = Kind::parse(&kind).ok_or_else(|| Failure::Parse(format!("unknown kind `{kind}`")))?;
            let cfg = TrialConfig {
                seed,
                ..TrialConfig::default()
            };
            let instance = generate(k, &cfg);
            let value = match &instance {
                Instance::Algebra(_) => Value::Null,
                Instance::Element(a) => to_value(&element_to_spec(a)),
                Instance::Vector(x) => to_value(&vector_to_spec(x)),
                Instance::Operator(t) => to_value(&operator_to_spec(t)),
            };
            let result = json!({
                "kind": k.name(),
                "algebra": to_value(&algebra_to_spec(instance.algebra())),
                "value": value,
            });
            Ok(render(result, true, &common))
        }
    }
}

/// Output errors such as a closed pipe are ignored.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            emit(&out);
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            emit(&json!({"error": e.name(), "message": e.to_string()}).to_string());
            ExitCode::from(1)
        }
        Err(Failure::Parse(msg)) => {
            emit(&json!({"error": "ParseError", "message": msg}).to_string());
            ExitCode::from(2)
        }
        Err(Failure::Suite(out)) => {
            emit(&out);
            ExitCode::from(3)
        }
    }
}
