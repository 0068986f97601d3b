//! JSON specs for algebras, elements, vectors and operators.
//!
//! Specs are plain serde structs; the `*_from_spec` functions validate them
//! against an algebra and build the model values, `*_to_spec` go back.
//! Fiber labels are strings in both models: `"a1"` style labels for finite
//! algebras and `"1"`..`"N"` for the stored prefix of a countable one.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cstar_matrix::CMatrix;
use crate::error::{Error, Result};
use crate::hilbert_module::{Flavor, HilbertModule, ModuleVector};
use crate::local_algebra::{Ideal, IndexSet, LocalAlgebra, LocalElement, TailRule};
use crate::operator_algebra::ModuleOperator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub label: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlgebraSpec {
    Finite { fibers: Vec<FiberSpec> },
    Tail { dim: usize, prefix_len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub coeffs: Vec<CMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub components: BTreeMap<String, CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlavorSpec {
    Free,
    Ideal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    pub rank: usize,
    pub flavor: FlavorSpec,
    /// Labels where ideal entries vanish; only for the `ideal` flavor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub module: ModuleSpec,
    pub entries: Vec<ElementSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub rank: usize,
    pub matrix: Vec<Vec<ElementSpec>>,
}

pub fn algebra_from_spec(spec: &AlgebraSpec) -> Result<Arc<LocalAlgebra>> {
    match spec {
        AlgebraSpec::Finite { fibers } => LocalAlgebra::finite(fibers.iter().map(|f| (f.label.clone(), f.dim))),
        AlgebraSpec::Tail { dim, prefix_len } => LocalAlgebra::countable(*dim, *prefix_len),
    }
}

pub fn algebra_to_spec(alg: &LocalAlgebra) -> AlgebraSpec {
    match alg.index_set() {
        IndexSet::Finite(labels) => AlgebraSpec::Finite {
            fibers: labels
                .iter()
                .enumerate()
                .map(|(s, label)| FiberSpec {
                    label: label.clone(),
                    dim: alg.stored_dim(s),
                })
                .collect(),
        },
        IndexSet::Countable { prefix_len } => AlgebraSpec::Tail {
            dim: alg.tail_dim().expect("countable algebras have a tail"),
            prefix_len: *prefix_len,
        },
    }
}

/// Every stored label must be present; a countable element without `tail`
/// gets the zero tail.
pub fn element_from_spec(alg: &Arc<LocalAlgebra>, spec: &ElementSpec) -> Result<LocalElement> {
    let labels: Vec<String> = alg.stored_indices().iter().map(ToString::to_string).collect();
    if let Some(extra) = spec.components.keys().find(|k| !labels.contains(k)) {
        return Err(Error::UnknownIndex(extra.clone()));
    }
    let mut comps = Vec::with_capacity(labels.len());
    for label in &labels {
        match spec.components.get(label) {
            Some(m) => comps.push(m.clone()),
            None => return Err(Error::Invalid(format!("missing component `{label}`"))),
        }
    }
    let tail = match (alg.tail_dim(), &spec.tail) {
        (None, None) => None,
        (None, Some(_)) => return Err(Error::Invalid("finite algebras take no tail".into())),
        (Some(d), None) => Some(TailRule::zero(d)),
        (Some(_), Some(t)) => Some(TailRule::new(t.coeffs.clone())?),
    };
    LocalElement::new(alg.clone(), comps, tail)
}

pub fn element_to_spec(a: &LocalElement) -> ElementSpec {
    let alg = a.algebra();
    ElementSpec {
        components: alg
            .stored_indices()
            .into_iter()
            .zip(a.components())
            .map(|(i, m)| (i.to_string(), m.clone()))
            .collect(),
        tail: a.tail().map(|t| TailSpec {
            coeffs: t.coeffs().to_vec(),
        }),
    }
}

pub fn module_from_spec(alg: &Arc<LocalAlgebra>, spec: &ModuleSpec) -> Result<Arc<HilbertModule>> {
    match spec.flavor {
        FlavorSpec::Free => {
            if spec.kernel.is_some() {
                return Err(Error::Invalid("free modules take no kernel".into()));
            }
            HilbertModule::free(alg, spec.rank)
        }
        FlavorSpec::Ideal => {
            if spec.rank != 1 {
                return Err(Error::Invalid("ideal modules have rank 1".into()));
            }
            let labels = spec.kernel.as_deref().unwrap_or_default();
            let kernel = labels.iter().map(|l| alg.parse_index(l)).collect::<Result<Vec<_>>>()?;
            Ok(HilbertModule::ideal(Ideal::new(alg, kernel)?))
        }
    }
}

pub fn module_to_spec(module: &HilbertModule) -> ModuleSpec {
    match module.flavor() {
        Flavor::Free => ModuleSpec {
            rank: module.rank(),
            flavor: FlavorSpec::Free,
            kernel: None,
        },
        Flavor::Ideal(ideal) => ModuleSpec {
            rank: 1,
            flavor: FlavorSpec::Ideal,
            kernel: Some(ideal.kernel().iter().map(ToString::to_string).collect()),
        },
    }
}

pub fn vector_from_spec(alg: &Arc<LocalAlgebra>, spec: &VectorSpec) -> Result<ModuleVector> {
    let module = module_from_spec(alg, &spec.module)?;
    let entries = spec
        .entries
        .iter()
        .map(|e| element_from_spec(alg, e))
        .collect::<Result<Vec<_>>>()?;
    ModuleVector::new(&module, entries)
}

pub fn vector_to_spec(x: &ModuleVector) -> VectorSpec {
    VectorSpec {
        module: module_to_spec(x.module()),
        entries: x.entries().iter().map(element_to_spec).collect(),
    }
}

/// Operators act on the free module of rank `spec.rank`.
pub fn operator_from_spec(alg: &Arc<LocalAlgebra>, spec: &OperatorSpec) -> Result<ModuleOperator> {
    let module = HilbertModule::free(alg, spec.rank)?;
    let rows = spec
        .matrix
        .iter()
        .map(|row| row.iter().map(|e| element_from_spec(alg, e)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    ModuleOperator::new(&module, rows)
}

pub fn operator_to_spec(t: &ModuleOperator) -> OperatorSpec {
    OperatorSpec {
        rank: t.rank(),
        matrix: t
            .rows()
            .iter()
            .map(|row| row.iter().map(element_to_spec).collect())
            .collect(),
    }
}

/// Complex numbers as `[re, im]` pairs, the same encoding as matrix entries.
pub fn complex_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}
