//! Model data: ingestion, duplication expansion and compilation into dense
//! matrices.

mod compile;
pub mod document;
mod expand;

pub use compile::{compile, compile_eukaryote};
pub use document::ModelDocument;
pub use expand::expand_duplications;

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use document::{Density, Efficiency, MachineKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate {kind} name `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("{context} references undeclared {kind} `{name}`")]
    DanglingReference {
        context: String,
        kind: &'static str,
        name: String,
    },
    #[error("invariant violated: {invariant} (index {index})")]
    Invariant { invariant: String, index: usize },
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: String,
        found: String,
    },
}

impl ModelError {
    fn invariant(invariant: impl Into<String>, index: usize) -> Self {
        ModelError::Invariant {
            invariant: invariant.into(),
            index,
        }
    }
}

/// Entity counts of a compiled model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    /// Metabolites.
    pub n_s: usize,
    /// Enzymes, equal to the number of reactions.
    pub n_m: usize,
    /// Macromolecular processes, one machine each.
    pub n_p: usize,
    /// All machines, `n_m + n_p`.
    pub n_y: usize,
    /// Proteins with prescribed concentration.
    pub n_g: usize,
    /// Metabolites with prescribed concentration.
    pub n_b: usize,
    /// Density constraints.
    pub n_c: usize,
}

impl Dimensions {
    pub fn new(n_s: usize, n_m: usize, n_p: usize, n_g: usize, n_b: usize, n_c: usize) -> Self {
        Dimensions {
            n_s,
            n_m,
            n_p,
            n_y: n_m + n_p,
            n_g,
            n_b,
            n_c,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_y != self.n_m + self.n_p {
            return Err(ModelError::invariant("n_y = n_m + n_p", self.n_y));
        }
        if self.n_b > self.n_s {
            return Err(ModelError::invariant("n_b <= n_s", self.n_b));
        }
        Ok(())
    }
}

/// Names of the compiled entities, in matrix order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelNames {
    pub metabolites: Vec<String>,
    pub reactions: Vec<String>,
    pub processes: Vec<String>,
    /// Enzymes in reaction order, then process machines in process order.
    pub machines: Vec<String>,
    pub proteins_g: Vec<String>,
    pub fixed_metabolites: Vec<String>,
    pub density_rows: Vec<String>,
    /// Original (pre-duplication) name of each machine.
    pub machine_origins: Vec<String>,
}

/// Dense data of the steady-state growth problem.
///
/// Machine columns (`Y`) hold the enzymes first, enzyme `j` catalysing
/// reaction `j`, followed by the process machines, machine `n_m + i`
/// carrying out process `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetabolicModel {
    pub dims: Dimensions,
    pub omega: DMatrix<f64>,
    pub c_s_y: DMatrix<f64>,
    pub c_s_b: DMatrix<f64>,
    pub c_s_g: DMatrix<f64>,
    pub c_m_y: DMatrix<f64>,
    pub c_m_g: DMatrix<f64>,
    pub k_t: DVector<f64>,
    pub k_e: DVector<f64>,
    /// Backward catalytic efficiencies; equal to `k_e` for reactions that
    /// declare none.
    pub k_e_backward: DVector<f64>,
    pub c_d_y: DMatrix<f64>,
    pub c_d_g: DMatrix<f64>,
    pub d_bar: DVector<f64>,
    pub b_fixed: DVector<f64>,
    pub p_g: DVector<f64>,
    /// Row of each fixed metabolite in the metabolite ordering.
    pub fixed_rows: Vec<usize>,
    pub names: ModelNames,
}

fn check_shape(
    context: &str,
    rows: usize,
    cols: usize,
    m: &DMatrix<f64>,
) -> Result<(), ModelError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(ModelError::Shape {
            context: context.to_string(),
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

fn check_len(context: &str, len: usize, v: &DVector<f64>) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::Shape {
            context: context.to_string(),
            expected: len.to_string(),
            found: v.len().to_string(),
        });
    }
    Ok(())
}

fn first_negative<'a>(values: impl Iterator<Item = &'a f64>) -> Option<usize> {
    values.enumerate().find(|(_, v)| !(**v >= 0.0)).map(|(i, _)| i)
}

fn unique_row_per_column(m: &DMatrix<f64>) -> Option<usize> {
    (0..m.ncols()).find(|&j| m.column(j).iter().filter(|v| **v != 0.0).count() > 1)
}

impl MetabolicModel {
    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.dims;
        d.validate()?;
        check_shape("omega", d.n_s, d.n_m, &self.omega)?;
        check_shape("c_s_y", d.n_s, d.n_y, &self.c_s_y)?;
        check_shape("c_s_b", d.n_s, d.n_b, &self.c_s_b)?;
        check_shape("c_s_g", d.n_s, d.n_g, &self.c_s_g)?;
        check_shape("c_m_y", d.n_p, d.n_y, &self.c_m_y)?;
        check_shape("c_m_g", d.n_p, d.n_g, &self.c_m_g)?;
        check_shape("c_d_y", d.n_c, d.n_y, &self.c_d_y)?;
        check_shape("c_d_g", d.n_c, d.n_g, &self.c_d_g)?;
        check_len("k_t", d.n_p, &self.k_t)?;
        check_len("k_e", d.n_m, &self.k_e)?;
        check_len("k_e_backward", d.n_m, &self.k_e_backward)?;
        check_len("d_bar", d.n_c, &self.d_bar)?;
        check_len("b_fixed", d.n_b, &self.b_fixed)?;
        check_len("p_g", d.n_g, &self.p_g)?;
        if self.fixed_rows.len() != d.n_b {
            return Err(ModelError::Shape {
                context: "fixed_rows".into(),
                expected: d.n_b.to_string(),
                found: self.fixed_rows.len().to_string(),
            });
        }

        let all_finite = [
            &self.omega,
            &self.c_s_y,
            &self.c_s_b,
            &self.c_s_g,
            &self.c_m_y,
            &self.c_m_g,
            &self.c_d_y,
            &self.c_d_g,
        ]
        .iter()
        .all(|m| m.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(ModelError::invariant("matrix entries are finite", 0));
        }

        if let Some(i) = self.k_t.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ModelError::invariant("k_t > 0", i));
        }
        if let Some(i) = first_negative(self.k_e.iter()) {
            return Err(ModelError::invariant("k_e >= 0", i));
        }
        if let Some(i) = first_negative(self.k_e_backward.iter()) {
            return Err(ModelError::invariant("k_e_backward >= 0", i));
        }
        let nonneg: [(&str, &[f64]); 7] = [
            ("c_m_y >= 0", self.c_m_y.as_slice()),
            ("c_m_g >= 0", self.c_m_g.as_slice()),
            ("c_d_y >= 0", self.c_d_y.as_slice()),
            ("c_d_g >= 0", self.c_d_g.as_slice()),
            ("d_bar >= 0", self.d_bar.as_slice()),
            ("b_fixed >= 0", self.b_fixed.as_slice()),
            ("p_g >= 0", self.p_g.as_slice()),
        ];
        for (label, values) in nonneg {
            if let Some(i) = first_negative(values.iter()) {
                return Err(ModelError::invariant(label, i));
            }
        }
        if let Some(j) = unique_row_per_column(&self.c_d_y) {
            return Err(ModelError::invariant(
                "each machine belongs to at most one density row",
                j,
            ));
        }
        if let Some(j) = unique_row_per_column(&self.c_d_g) {
            return Err(ModelError::invariant(
                "each protein belongs to at most one density row",
                j,
            ));
        }
        Ok(())
    }

    /// Index of the machine column carrying out process `i`.
    pub fn process_machine(&self, process: usize) -> usize {
        self.dims.n_m + process
    }

    /// Column indices of every machine whose original name is `name`.
    pub fn machines_named(&self, name: &str) -> Vec<usize> {
        self.names
            .machine_origins
            .iter()
            .zip(&self.names.machines)
            .enumerate()
            .filter(|(_, (origin, own))| origin.as_str() == name || own.as_str() == name)
            .map(|(j, _)| j)
            .collect()
    }
}

/// A referentially valid, name-keyed model.
///
/// Produced by [`load_model`]; [`expand_duplications`] turns it into a
/// one-to-one reaction/catalyst form accepted by [`compile`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawModelSpec {
    pub document: ModelDocument,
    /// Original name of every entity created by duplication.
    pub origins: IndexMap<String, String>,
}

impl RawModelSpec {
    pub fn origin_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.origins.get(name).map(String::as_str).unwrap_or(name)
    }

    /// Re-serialises the model as a document.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.document).expect("model documents always serialise")
    }
}

/// Parses a model document and checks names and references.
pub fn load_model(text: &str) -> Result<RawModelSpec, ModelError> {
    let document: ModelDocument = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let spec = RawModelSpec {
        document,
        origins: IndexMap::new(),
    };
    check_references(&spec.document)?;
    Ok(spec)
}

pub(crate) fn parse_error(text: &str, e: &toml::de::Error) -> ModelError {
    let (line, column) = match e.span() {
        Some(span) => line_column(text, span.start),
        None => (0, 0),
    };
    ModelError::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn unique_names<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<HashSet<&'a str>, ModelError> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(ModelError::Duplicate {
                kind,
                name: name.to_string(),
            });
        }
    }
    Ok(seen)
}

fn require<'a>(
    known: &HashSet<&str>,
    kind: &'static str,
    context: &str,
    names: impl Iterator<Item = &'a String>,
) -> Result<(), ModelError> {
    for name in names {
        if !known.contains(name.as_str()) {
            return Err(ModelError::DanglingReference {
                context: context.to_string(),
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

fn density_keys(d: &Density) -> Vec<&String> {
    match d {
        Density::Scalar(_) => Vec::new(),
        Density::PerCompartment(map) => map.keys().collect(),
    }
}

pub(crate) fn check_references(doc: &ModelDocument) -> Result<(), ModelError> {
    let metabolites = unique_names("metabolite", doc.metabolites.iter().map(|m| m.name.as_str()))?;
    unique_names("reaction", doc.reactions.iter().map(|r| r.name.as_str()))?;
    let processes = unique_names("process", doc.processes.iter().map(|p| p.name.as_str()))?;
    unique_names(
        "machine or protein",
        doc.machines
            .iter()
            .map(|m| m.name.as_str())
            .chain(doc.proteins_g.iter().map(|p| p.name.as_str())),
    )?;
    let compartments: HashSet<&str> = doc.density_limits.keys().map(String::as_str).collect();
    let enzymes: HashSet<&str> = doc
        .machines
        .iter()
        .filter(|m| m.kind == MachineKind::Enzyme)
        .map(|m| m.name.as_str())
        .collect();

    for m in &doc.metabolites {
        if let Some(cost) = &m.synthesis_cost {
            require(&metabolites, "metabolite", &m.name, cost.keys())?;
        }
    }
    for r in &doc.reactions {
        require(&metabolites, "metabolite", &r.name, r.stoichiometry.keys())?;
        if r.catalysts.is_empty() {
            return Err(ModelError::DanglingReference {
                context: r.name.clone(),
                kind: "catalyst",
                name: String::new(),
            });
        }
        require(&enzymes, "enzyme", &r.name, r.catalysts.iter())?;
        for k in std::iter::once(&r.k_forward).chain(r.k_backward.as_ref()) {
            if let Efficiency::PerCatalyst(map) = k {
                let listed: HashSet<&str> = r.catalysts.iter().map(String::as_str).collect();
                require(&listed, "catalyst", &r.name, map.keys())?;
                if let Some(missing) = r.catalysts.iter().find(|c| !map.contains_key(*c)) {
                    return Err(ModelError::DanglingReference {
                        context: format!("{} efficiency", r.name),
                        kind: "catalyst efficiency",
                        name: missing.clone(),
                    });
                }
            }
        }
    }
    for m in &doc.machines {
        require(&metabolites, "metabolite", &m.name, m.synthesis_cost.keys())?;
        require(&processes, "process", &m.name, m.process_demand.keys())?;
        require(&compartments, "compartment", &m.name, m.compartment.iter())?;
        require(&compartments, "compartment", &m.name, density_keys(&m.density_contribution).into_iter())?;
        require(&processes, "process", &m.name, m.process.iter())?;
    }
    for p in &doc.proteins_g {
        require(&metabolites, "metabolite", &p.name, p.synthesis_cost.keys())?;
        require(&processes, "process", &p.name, p.process_demand.keys())?;
        require(&compartments, "compartment", &p.name, p.compartment.iter())?;
        require(&compartments, "compartment", &p.name, density_keys(&p.density_contribution).into_iter())?;
    }

    if let Some(euk) = &doc.eukaryote {
        let comps = unique_names("compartment", euk.compartments.iter().map(String::as_str))?;
        let machine_names: HashSet<&str> = doc.machines.iter().map(|m| m.name.as_str()).collect();
        let protein_names: HashSet<&str> = doc.proteins_g.iter().map(|p| p.name.as_str()).collect();
        let mut fractions: HashSet<String> = comps.iter().map(|c| c.to_string()).collect();
        for pair in &euk.interfaces {
            require(&comps, "compartment", "interface", pair.iter())?;
            fractions.insert(document::interface_name(pair));
        }
        let fractions_ref: HashSet<&str> = fractions.iter().map(String::as_str).collect();
        require(&comps, "compartment", "fraction_bounds", euk.fraction_bounds.keys())?;
        for row in euk.density_iq.iter().chain(&euk.density_eq) {
            require(&machine_names, "machine", &row.name, row.machines.keys())?;
            require(&protein_names, "protein", &row.name, row.proteins_g.keys())?;
            require(&fractions_ref, "fraction", &row.name, row.fractions.keys())?;
        }
        for row in &euk.normalization {
            require(&fractions_ref, "fraction", "normalization", row.fractions.keys())?;
        }
        require(&fractions_ref, "fraction", "b_hat", euk.b_hat.keys())?;
        require(&fractions_ref, "fraction", "fraction_synthesis_cost", euk.fraction_synthesis_cost.keys())?;
        for cost in euk.fraction_synthesis_cost.values() {
            require(&metabolites, "metabolite", "fraction_synthesis_cost", cost.keys())?;
        }
    }
    Ok(())
}

/// Mapping from name to position, in declaration order.
pub(crate) fn index_of<'a>(names: impl Iterator<Item = &'a str>) -> HashMap<&'a str, usize> {
    names.enumerate().map(|(i, n)| (n, i)).collect()
}
