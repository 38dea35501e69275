//! Serde representation of the text model format.
//!
//! A model document is a TOML file with the top-level keys `metabolites`,
//! `reactions`, `processes`, `machines`, `proteins_g`, `density_limits` and
//! an optional `eukaryote` section. Synthesis costs are positive molecule
//! counts of the consumed metabolite; a negative count marks a by-product.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default)]
    pub metabolites: Vec<MetaboliteDecl>,
    #[serde(default)]
    pub reactions: Vec<ReactionDecl>,
    #[serde(default)]
    pub processes: Vec<ProcessDecl>,
    #[serde(default)]
    pub machines: Vec<MachineDecl>,
    #[serde(default)]
    pub proteins_g: Vec<ProteinDecl>,
    #[serde(default)]
    pub density_limits: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eukaryote: Option<EukaryoteDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaboliteDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_concentration: Option<f64>,
    /// Precursor demand for producing one unit of a fixed metabolite.
    /// Defaults to consuming one unit of the metabolite itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis_cost: Option<IndexMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionDecl {
    pub name: String,
    #[serde(default)]
    pub stoichiometry: IndexMap<String, f64>,
    pub catalysts: Vec<String>,
    pub k_forward: Efficiency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_backward: Option<Efficiency>,
}

/// A catalytic efficiency shared by all catalysts of a reaction, or given
/// per catalyst (isoenzymes usually differ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Efficiency {
    Shared(f64),
    PerCatalyst(IndexMap<String, f64>),
}

impl Efficiency {
    pub fn for_catalyst(&self, catalyst: &str) -> Option<f64> {
        match self {
            Efficiency::Shared(k) => Some(*k),
            Efficiency::PerCatalyst(map) => map.get(catalyst).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDecl {
    pub name: String,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MachineKind {
    Enzyme,
    ProcessMachine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineDecl {
    pub name: String,
    pub kind: MachineKind,
    #[serde(default)]
    pub synthesis_cost: IndexMap<String, f64>,
    #[serde(default)]
    pub process_demand: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compartment: Option<String>,
    #[serde(default)]
    pub density_contribution: Density,
    /// Process carried out by a process machine. When no machine names its
    /// process, machines are paired with processes in declaration order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProteinDecl {
    pub name: String,
    pub concentration: f64,
    #[serde(default)]
    pub synthesis_cost: IndexMap<String, f64>,
    #[serde(default)]
    pub process_demand: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compartment: Option<String>,
    #[serde(default)]
    pub density_contribution: Density,
}

/// Density contribution of one unit of an entity: a scalar applied to the
/// entity's `compartment`, or an explicit per-compartment map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Density {
    Scalar(f64),
    PerCompartment(IndexMap<String, f64>),
}

impl Default for Density {
    fn default() -> Self {
        Density::Scalar(0.0)
    }
}

/// Compartment, interface and fraction data of the eukaryotic problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EukaryoteDecl {
    /// Compartment names; the first one is the cytosol (index 0).
    pub compartments: Vec<String>,
    #[serde(default)]
    pub interfaces: Vec<[String; 2]>,
    /// `[lower, upper]` bounds on volume fractions, keyed by compartment.
    /// Unlisted compartments get `[0, 1]`.
    #[serde(default)]
    pub fraction_bounds: IndexMap<String, [f64; 2]>,
    #[serde(default)]
    pub density_iq: Vec<DensityRowDecl>,
    #[serde(default)]
    pub density_eq: Vec<DensityRowDecl>,
    #[serde(default)]
    pub normalization: Vec<NormalizationDecl>,
    /// Fixed composition demand per unit of each fraction, keyed by
    /// fraction name (compartment name or `a<->b` interface name).
    #[serde(default)]
    pub b_hat: IndexMap<String, f64>,
    /// Metabolite cost per unit of fixed composition of each fraction.
    #[serde(default)]
    pub fraction_synthesis_cost: IndexMap<String, IndexMap<String, f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRowDecl {
    pub name: String,
    #[serde(default)]
    pub machines: IndexMap<String, f64>,
    #[serde(default)]
    pub proteins_g: IndexMap<String, f64>,
    /// Capacity contributed per unit of each fraction.
    #[serde(default)]
    pub fractions: IndexMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationDecl {
    pub fractions: IndexMap<String, f64>,
    pub value: f64,
}

/// Name used for the fraction variable of an interface.
pub fn interface_name(pair: &[String; 2]) -> String {
    format!("{}<->{}", pair[0], pair[1])
}
