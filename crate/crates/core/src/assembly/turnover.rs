//! Macromolecular and metabolite turnover.
//!
//! Degradation of a machine at rate γ must be compensated by extra synthesis,
//! which costs its composition again, while proteolysis releases residues and
//! consumes energy. Released residues are `release` and the energy demand is
//! `atp_cost`.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::model::{parse_error, MetabolicModel, ModelError};

/// Degradation rates and proteolysis stoichiometry, in model index order.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnoverSpec {
    /// Per metabolite; only fixed-concentration metabolites contribute.
    pub gamma_s: DVector<f64>,
    pub gamma_y: DVector<f64>,
    pub gamma_pg: DVector<f64>,
    /// Metabolites released per degraded machine, `n_s × n_y`.
    pub release: DMatrix<f64>,
    /// Metabolites consumed per degraded machine, `n_s × n_y`.
    pub atp_cost: DMatrix<f64>,
}

impl TurnoverSpec {
    pub fn zeros(model: &MetabolicModel) -> Self {
        let d = model.dims;
        TurnoverSpec {
            gamma_s: DVector::zeros(d.n_s),
            gamma_y: DVector::zeros(d.n_y),
            gamma_pg: DVector::zeros(d.n_g),
            release: DMatrix::zeros(d.n_s, d.n_y),
            atp_cost: DMatrix::zeros(d.n_s, d.n_y),
        }
    }

    /// Multiplies every degradation rate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        TurnoverSpec {
            gamma_s: &self.gamma_s * c,
            gamma_y: &self.gamma_y * c,
            gamma_pg: &self.gamma_pg * c,
            ..self.clone()
        }
    }

    pub fn validate(&self, model: &MetabolicModel) -> Result<(), ModelError> {
        let d = model.dims;
        let shape = |context: &str, expected: String, found: String| ModelError::Shape {
            context: context.to_string(),
            expected,
            found,
        };
        if self.gamma_s.len() != d.n_s {
            return Err(shape("gamma_s", d.n_s.to_string(), self.gamma_s.len().to_string()));
        }
        if self.gamma_y.len() != d.n_y {
            return Err(shape("gamma_y", d.n_y.to_string(), self.gamma_y.len().to_string()));
        }
        if self.gamma_pg.len() != d.n_g {
            return Err(shape("gamma_pg", d.n_g.to_string(), self.gamma_pg.len().to_string()));
        }
        for (context, m) in [("release", &self.release), ("atp_cost", &self.atp_cost)] {
            if m.shape() != (d.n_s, d.n_y) {
                return Err(shape(
                    context,
                    format!("{}x{}", d.n_s, d.n_y),
                    format!("{}x{}", m.nrows(), m.ncols()),
                ));
            }
        }
        let blocks: [(&str, &[f64]); 5] = [
            ("gamma_s >= 0", self.gamma_s.as_slice()),
            ("gamma_y >= 0", self.gamma_y.as_slice()),
            ("gamma_pg >= 0", self.gamma_pg.as_slice()),
            ("release >= 0", self.release.as_slice()),
            ("atp_cost >= 0", self.atp_cost.as_slice()),
        ];
        for (label, values) in blocks {
            if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(ModelError::Invariant {
                    invariant: label.to_string(),
                    index: i,
                });
            }
        }
        Ok(())
    }
}

/// Turnover corrections to the balance (`S`) and capacity (`M`) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnoverMatrices {
    pub gamma_s_y: DMatrix<f64>,
    pub gamma_s_b: DMatrix<f64>,
    pub gamma_s_pg: DMatrix<f64>,
    pub gamma_m_y: DMatrix<f64>,
    pub gamma_m_pg: DMatrix<f64>,
}

/// Builds the correction matrices column by column:
/// `γ_j · (C^S_j + release_j − atp_cost_j)` for machine `j`,
/// `γ_j · C^M_j` in the capacity rows, and likewise for fixed metabolites and
/// proteins.
pub fn build_turnover_matrices(model: &MetabolicModel, t: &TurnoverSpec) -> Result<TurnoverMatrices, ModelError> {
    t.validate(model)?;
    let d = model.dims;
    let mut gamma_s_y = DMatrix::zeros(d.n_s, d.n_y);
    let mut gamma_m_y = DMatrix::zeros(d.n_p, d.n_y);
    for j in 0..d.n_y {
        let g = t.gamma_y[j];
        for i in 0..d.n_s {
            gamma_s_y[(i, j)] = g * (model.c_s_y[(i, j)] + t.release[(i, j)] - t.atp_cost[(i, j)]);
        }
        for i in 0..d.n_p {
            gamma_m_y[(i, j)] = g * model.c_m_y[(i, j)];
        }
    }
    let mut gamma_s_b = DMatrix::zeros(d.n_s, d.n_b);
    for (j, &row) in model.fixed_rows.iter().enumerate() {
        let g = t.gamma_s[row];
        for i in 0..d.n_s {
            gamma_s_b[(i, j)] = g * model.c_s_b[(i, j)];
        }
    }
    let mut gamma_s_pg = DMatrix::zeros(d.n_s, d.n_g);
    let mut gamma_m_pg = DMatrix::zeros(d.n_p, d.n_g);
    for j in 0..d.n_g {
        let g = t.gamma_pg[j];
        for i in 0..d.n_s {
            gamma_s_pg[(i, j)] = g * model.c_s_g[(i, j)];
        }
        for i in 0..d.n_p {
            gamma_m_pg[(i, j)] = g * model.c_m_g[(i, j)];
        }
    }
    Ok(TurnoverMatrices {
        gamma_s_y,
        gamma_s_b,
        gamma_s_pg,
        gamma_m_y,
        gamma_m_pg,
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnoverDocument {
    #[serde(default)]
    metabolites: IndexMap<String, f64>,
    #[serde(default)]
    machines: IndexMap<String, f64>,
    #[serde(default)]
    proteins_g: IndexMap<String, f64>,
    #[serde(default)]
    degradation_release: IndexMap<String, IndexMap<String, f64>>,
    #[serde(default)]
    degradation_atp_cost: IndexMap<String, IndexMap<String, f64>>,
}

/// Reads a turnover document:
///
/// ```toml
/// machines = { ribosome = 0.1 }
/// proteins_g = { housekeeping = 0.05 }
/// metabolites = { atp = 0.0 }
/// [degradation_release.ribosome]
/// amino_acids = 7500.0
/// [degradation_atp_cost.ribosome]
/// atp = 7500.0
/// ```
///
/// Machines may be named by their original name, in which case every copy
/// made during duplication expansion receives the entry. Unlisted species
/// have zero turnover.
pub fn load_turnover(text: &str, model: &MetabolicModel) -> Result<TurnoverSpec, ModelError> {
    let doc: TurnoverDocument = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let mut t = TurnoverSpec::zeros(model);
    let lookup = |names: &[String], name: &str, kind: &'static str| -> Result<usize, ModelError> {
        names.iter().position(|n| n == name).ok_or_else(|| ModelError::DanglingReference {
            context: "turnover".into(),
            kind,
            name: name.to_string(),
        })
    };
    let machines = |name: &str| -> Result<Vec<usize>, ModelError> {
        let cols = model.machines_named(name);
        if cols.is_empty() {
            return Err(ModelError::DanglingReference {
                context: "turnover".into(),
                kind: "machine",
                name: name.to_string(),
            });
        }
        Ok(cols)
    };
    for (name, g) in &doc.metabolites {
        t.gamma_s[lookup(&model.names.metabolites, name, "metabolite")?] = *g;
    }
    for (name, g) in &doc.proteins_g {
        t.gamma_pg[lookup(&model.names.proteins_g, name, "protein")?] = *g;
    }
    for (name, g) in &doc.machines {
        for j in machines(name)? {
            t.gamma_y[j] = *g;
        }
    }
    for (target, source) in [
        (&mut t.release, &doc.degradation_release),
        (&mut t.atp_cost, &doc.degradation_atp_cost),
    ] {
        for (machine, counts) in source {
            for j in machines(machine)? {
                for (met, v) in counts {
                    target[(lookup(&model.names.metabolites, met, "metabolite")?, j)] = *v;
                }
            }
        }
    }
    t.validate(model)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_prokaryotic, assemble_turnover};
    use crate::golden;
    use crate::model::{Dimensions, ModelNames};

    fn bits(m: &DMatrix<f64>) -> Vec<u64> {
        m.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn zero_turnover_gives_zero_matrices() {
        let model = golden::toy_prokaryote_model();
        let g = build_turnover_matrices(&model, &TurnoverSpec::zeros(&model)).unwrap();
        for m in [&g.gamma_s_y, &g.gamma_s_b, &g.gamma_s_pg, &g.gamma_m_y, &g.gamma_m_pg] {
            assert!(m.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn zero_turnover_reproduces_prokaryotic_bits() {
        let model = golden::toy_prokaryote_model();
        for mu in [0.0, 0.37, 1.2] {
            let a = assemble_prokaryotic(&model, mu);
            let b = assemble_turnover(&model, &TurnoverSpec::zeros(&model), mu).unwrap();
            assert_eq!(bits(&a.a_eq), bits(&b.a_eq));
            assert_eq!(bits(&a.a_ineq), bits(&b.a_ineq));
            assert_eq!(a.b_eq.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.b_eq.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            assert_eq!(a.b_ineq.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.b_ineq.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    fn one_machine() -> MetabolicModel {
        // A single process machine; metabolites: amino acid, energy.
        MetabolicModel {
            dims: Dimensions::new(2, 0, 1, 0, 0, 0),
            omega: DMatrix::zeros(2, 0),
            c_s_y: DMatrix::from_row_slice(2, 1, &[-5.0, -10.0]),
            c_s_b: DMatrix::zeros(2, 0),
            c_s_g: DMatrix::zeros(2, 0),
            c_m_y: DMatrix::from_row_slice(1, 1, &[5.0]),
            c_m_g: DMatrix::zeros(1, 0),
            k_t: DVector::from_element(1, 1.0),
            k_e: DVector::zeros(0),
            k_e_backward: DVector::zeros(0),
            c_d_y: DMatrix::zeros(0, 1),
            c_d_g: DMatrix::zeros(0, 0),
            d_bar: DVector::zeros(0),
            b_fixed: DVector::zeros(0),
            p_g: DVector::zeros(0),
            fixed_rows: vec![],
            names: ModelNames {
                metabolites: vec!["aa".into(), "atp".into()],
                processes: vec!["translation".into()],
                machines: vec!["R".into()],
                machine_origins: vec!["R".into()],
                ..ModelNames::default()
            },
        }
    }

    #[test]
    fn capacity_correction_is_rate_times_demand() {
        let model = one_machine();
        let mut t = TurnoverSpec::zeros(&model);
        t.gamma_y[0] = 2.0;
        let g = build_turnover_matrices(&model, &t).unwrap();
        assert_eq!(g.gamma_m_y[(0, 0)], 10.0);
    }

    #[test]
    fn release_enters_balance_rows() {
        let model = one_machine();
        let mut t = TurnoverSpec::zeros(&model);
        t.gamma_y[0] = 0.5;
        t.release[(0, 0)] = 5.0;
        t.atp_cost[(1, 0)] = 3.0;
        let g = build_turnover_matrices(&model, &t).unwrap();
        // Hand assembly: 0.5 * ([-5, -10] + [5, 0] - [0, 3]).
        let expected = DMatrix::from_row_slice(2, 1, &[0.0, -6.5]);
        assert_eq!(g.gamma_s_y, expected);

        let lp = assemble_turnover(&model, &t, 0.2).unwrap();
        // Balance row coefficients on R: 0.2 * c_s_y + Γ.
        assert!((lp.a_eq[(0, 0)] - (0.2 * -5.0 + 0.0)).abs() < 1e-15);
        assert!((lp.a_eq[(1, 0)] - (0.2 * -10.0 - 6.5)).abs() < 1e-15);
        // Capacity row: 0.2 * 5 + 0.5 * 5 - 1.
        assert!((lp.a_ineq[(0, 0)] - (1.0 + 2.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn negative_rate_rejected() {
        let model = one_machine();
        let mut t = TurnoverSpec::zeros(&model);
        t.gamma_y[0] = -1.0;
        assert!(matches!(
            build_turnover_matrices(&model, &t),
            Err(ModelError::Invariant { .. })
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let model = one_machine();
        let mut t = TurnoverSpec::zeros(&model);
        t.gamma_y = DVector::zeros(3);
        assert!(matches!(build_turnover_matrices(&model, &t), Err(ModelError::Shape { .. })));
    }

    #[test]
    fn loads_document_by_original_names() {
        let model = golden::toy_prokaryote_model();
        let text = r#"
machines = { ribosome = 0.1, transporter = 0.2 }
proteins_g = { housekeeping = 0.05 }
[degradation_release.ribosome]
amino_acids = 7500.0
[degradation_atp_cost.ribosome]
atp = 7500.0
"#;
        let t = load_turnover(text, &model).unwrap();
        let r = model.names.machines.iter().position(|m| m == "ribosome").unwrap();
        assert_eq!(t.gamma_y[r], 0.1);
        assert_eq!(t.gamma_y[0], 0.2);
        assert_eq!(t.gamma_pg[0], 0.05);
        let aa = model.names.metabolites.iter().position(|m| m == "amino_acids").unwrap();
        assert_eq!(t.release[(aa, r)], 7500.0);
    }

    #[test]
    fn unknown_machine_is_dangling() {
        let model = golden::toy_prokaryote_model();
        assert!(matches!(
            load_turnover("machines = { ghost = 1.0 }", &model),
            Err(ModelError::DanglingReference { .. })
        ));
    }
}
