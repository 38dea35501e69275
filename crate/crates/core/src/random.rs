//! Seeded random instances for testing and benchmarking.
//!
//! Models are built as documents so they can be written out and reloaded.
//! Each one is a linear pathway fed by an uptake reaction, with every
//! machine costing the pathway's end product, demanding translation and
//! occupying density. Prescribed proteins always exist, so the maximal growth
//! rate is finite, and density caps leave room for them, so zero growth is
//! feasible.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::TurnoverSpec;
use crate::lp::LinearProgram;
use crate::model::document::{
    interface_name, Density, DensityRowDecl, EukaryoteDecl, MachineDecl, MachineKind, MetaboliteDecl, ModelDocument,
    NormalizationDecl, ProcessDecl, ProteinDecl, ReactionDecl, Efficiency,
};
use crate::model::{MetabolicModel, RawModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelOptions {
    /// Upper bound on every entity count.
    pub max_dim: usize,
    /// Adds a compartment section.
    pub eukaryote: bool,
}

impl Default for RandomModelOptions {
    fn default() -> Self {
        RandomModelOptions {
            max_dim: 20,
            eukaryote: false,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn map<const N: usize>(entries: [(&str, f64); N]) -> IndexMap<String, f64> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Log-uniform draw on `[lo, hi]`.
fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// A random model from `seed`.
pub fn random_model(seed: u64, opts: &RandomModelOptions) -> RawModelSpec {
    let mut rng = rng(seed);
    let cap = opts.max_dim.clamp(4, 20);
    let n_s = rng.gen_range(2..=cap.min(6));
    let n_p = rng.gen_range(1..=2);
    let n_g = rng.gen_range(1..=2);
    let n_c = rng.gen_range(1..=2);

    let met = |i: usize| format!("s{i}");
    let product = met(n_s - 1);
    let fixed_end = n_s >= 3 && rng.gen_bool(0.5);
    let metabolites = (0..n_s)
        .map(|i| MetaboliteDecl {
            name: met(i),
            fixed_concentration: (fixed_end && i == n_s - 2).then(|| rng.gen_range(0.5..5.0)),
            synthesis_cost: None,
        })
        .collect();

    let rows: Vec<String> = (0..n_c).map(|i| format!("d{i}")).collect();
    let processes: Vec<ProcessDecl> = (0..n_p)
        .map(|i| ProcessDecl {
            name: format!("p{i}"),
            efficiency: log_uniform(&mut rng, 1e3, 5e4),
        })
        .collect();

    let mut machines = Vec::new();
    let mut reactions = Vec::new();
    let new_machine = |rng: &mut ChaCha8Rng, name: String, kind: MachineKind, process: Option<String>| {
        let size = log_uniform(rng, 100.0, 1000.0);
        let mut demand = map([("p0", size)]);
        if n_p > 1 && rng.gen_bool(0.5) {
            demand.insert("p1".into(), size * rng.gen_range(0.05..0.5));
        }
        MachineDecl {
            name,
            kind,
            synthesis_cost: map([(product.as_str(), size)]),
            process_demand: demand,
            compartment: Some(rows.choose(rng).expect("at least one row").clone()),
            density_contribution: Density::Scalar(size * rng.gen_range(5e-5..2e-4)),
            process,
        }
    };

    // Uptake then a chain s_{i-1} -> s_i; one reaction may get a second
    // catalyst to exercise duplication.
    let duplicate = (n_s + n_p < cap) && rng.gen_bool(0.3);
    let dup_at = rng.gen_range(0..n_s);
    for i in 0..n_s {
        let mut stoich = IndexMap::new();
        if i > 0 {
            stoich.insert(met(i - 1), -1.0);
        }
        stoich.insert(met(i), rng.gen_range(1.0..3.0f64).round());
        let mut catalysts = vec![format!("e{i}")];
        machines.push(new_machine(&mut rng, format!("e{i}"), MachineKind::Enzyme, None));
        let k_forward = if duplicate && i == dup_at {
            catalysts.push(format!("e{i}b"));
            machines.push(new_machine(&mut rng, format!("e{i}b"), MachineKind::Enzyme, None));
            Efficiency::PerCatalyst(
                catalysts
                    .iter()
                    .map(|c| (c.clone(), log_uniform(&mut rng, 100.0, 5000.0)))
                    .collect(),
            )
        } else {
            Efficiency::Shared(log_uniform(&mut rng, 100.0, 5000.0))
        };
        let k_backward = (i > 0 && rng.gen_bool(0.3)).then(|| Efficiency::Shared(log_uniform(&mut rng, 10.0, 1000.0)));
        reactions.push(ReactionDecl {
            name: format!("r{i}"),
            stoichiometry: stoich,
            catalysts,
            k_forward,
            k_backward,
        });
    }
    for i in 0..n_p {
        machines.push(new_machine(&mut rng, format!("m{i}"), MachineKind::ProcessMachine, Some(format!("p{i}"))));
    }

    let proteins_g: Vec<ProteinDecl> = (0..n_g)
        .map(|i| {
            let size = log_uniform(&mut rng, 100.0, 500.0);
            ProteinDecl {
                name: format!("g{i}"),
                concentration: rng.gen_range(0.5..5.0),
                synthesis_cost: map([(product.as_str(), size)]),
                process_demand: map([("p0", size)]),
                compartment: Some(rows.choose(&mut rng).expect("at least one row").clone()),
                density_contribution: Density::Scalar(size * rng.gen_range(1e-5..5e-5)),
            }
        })
        .collect();

    // Room for the basal composition plus a margin. The factor 1.25 leaves
    // the cytosol enough capacity when organelles take part of the volume.
    let mut density_limits = IndexMap::new();
    for row in &rows {
        let basal: f64 = proteins_g
            .iter()
            .filter(|p| p.compartment.as_deref() == Some(row.as_str()))
            .map(|p| match p.density_contribution {
                Density::Scalar(c) => c * p.concentration,
                Density::PerCompartment(_) => unreachable!("generator uses scalars"),
            })
            .sum();
        density_limits.insert(row.clone(), 1.25 * basal + rng.gen_range(0.2..1.0));
    }

    let mut document = ModelDocument {
        metabolites,
        reactions,
        processes,
        machines,
        proteins_g,
        density_limits,
        eukaryote: None,
    };
    if opts.eukaryote {
        document.eukaryote = Some(random_eukaryote(&mut rng, &document));
    }
    RawModelSpec {
        document,
        origins: IndexMap::new(),
    }
}

fn random_eukaryote(rng: &mut ChaCha8Rng, doc: &ModelDocument) -> EukaryoteDecl {
    let compartments: Vec<String> = ["cytosol", "o1", "o2"].map(String::from).to_vec();
    let interfaces = vec![
        ["cytosol".to_string(), "o1".to_string()],
        ["o1".to_string(), "o2".to_string()],
    ];
    let outer = interface_name(&interfaces[0]);
    let inner = interface_name(&interfaces[1]);

    let scalar = |d: &Density| match d {
        Density::Scalar(c) => *c,
        Density::PerCompartment(_) => unreachable!("generator uses scalars"),
    };
    // One enzyme moves into the first organelle; the rest keep their rows,
    // whose capacity now scales with the cytosol fraction.
    let enzymes: Vec<&MachineDecl> = doc.machines.iter().filter(|m| m.kind == MachineKind::Enzyme).collect();
    let moved = enzymes[rng.gen_range(0..enzymes.len())];
    let mut density_iq = Vec::new();
    for (row, limit) in &doc.density_limits {
        let mut decl = DensityRowDecl {
            name: row.clone(),
            fractions: map([("cytosol", *limit)]),
            ..Default::default()
        };
        for m in doc.machines.iter().filter(|m| m.compartment.as_deref() == Some(row.as_str())) {
            if m.name != moved.name {
                decl.machines.insert(m.name.clone(), scalar(&m.density_contribution));
            }
        }
        for p in doc.proteins_g.iter().filter(|p| p.compartment.as_deref() == Some(row.as_str())) {
            decl.proteins_g.insert(p.name.clone(), scalar(&p.density_contribution));
        }
        density_iq.push(decl);
    }
    density_iq.push(DensityRowDecl {
        name: "o1".into(),
        machines: IndexMap::from([(moved.name.clone(), scalar(&moved.density_contribution))]),
        fractions: map([("o1", rng.gen_range(1.0..5.0))]),
        ..Default::default()
    });
    let density_eq = vec![DensityRowDecl {
        name: "o1_membrane".into(),
        machines: IndexMap::from([(moved.name.clone(), 0.1 * scalar(&moved.density_contribution))]),
        fractions: IndexMap::from([(inner.clone(), 1.0)]),
        ..Default::default()
    }];

    let product = doc.metabolites.last().expect("at least one metabolite").name.clone();
    let lo1 = rng.gen_range(0.0..0.05);
    let lo2 = rng.gen_range(0.0..0.05);
    EukaryoteDecl {
        compartments,
        fraction_bounds: IndexMap::from([
            ("o1".to_string(), [lo1, lo1 + rng.gen_range(0.05..0.2)]),
            ("o2".to_string(), [lo2, lo2 + rng.gen_range(0.05..0.2)]),
        ]),
        density_iq,
        density_eq,
        normalization: vec![
            NormalizationDecl {
                fractions: map([("cytosol", 1.0), ("o1", 1.0), ("o2", 1.0)]),
                value: 1.0,
            },
            NormalizationDecl {
                fractions: IndexMap::from([(outer, 1.0), ("o1".to_string(), -2.0)]),
                value: 0.0,
            },
        ],
        b_hat: map([("o1", rng.gen_range(0.1..2.0)), ("o2", rng.gen_range(0.1..2.0))]),
        fraction_synthesis_cost: IndexMap::from([
            ("o1".to_string(), IndexMap::from([(product.clone(), rng.gen_range(10.0..100.0))])),
            ("o2".to_string(), IndexMap::from([(product, rng.gen_range(10.0..100.0))])),
        ]),
        interfaces,
    }
}

/// Random degradation data for `model`. Proteolysis returns part of each
/// machine's own composition, never more than it cost.
pub fn random_turnover(seed: u64, model: &MetabolicModel) -> TurnoverSpec {
    let mut rng = rng(seed);
    let d = model.dims;
    let mut spec = TurnoverSpec::zeros(model);
    for &row in &model.fixed_rows {
        spec.gamma_s[row] = rng.gen_range(0.0..0.5);
    }
    for j in 0..d.n_y {
        spec.gamma_y[j] = rng.gen_range(0.0..0.5);
        let returned = rng.gen_range(0.0..0.9);
        for i in 0..d.n_s {
            let spent = -model.c_s_y[(i, j)];
            if spent > 0.0 {
                spec.release[(i, j)] = returned * spent;
            }
        }
        spec.atp_cost[(rng.gen_range(0..d.n_s), j)] = rng.gen_range(0.0..20.0);
    }
    for k in 0..d.n_g {
        spec.gamma_pg[k] = rng.gen_range(0.0..0.5);
    }
    spec
}

/// A random program with `n` variables and `m` rows, a mix of equality and
/// inequality rows, small integer data and assorted bounds, so that
/// infeasible, unbounded and degenerate cases all occur.
pub fn random_lp(seed: u64, n: usize, m: usize) -> LinearProgram {
    let mut rng = rng(seed);
    let m_eq = rng.gen_range(0..=m.min(n));
    let coeff = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(-3..=3) as f64
        }
    };
    let a_eq = DMatrix::from_fn(m_eq, n, |_, _| coeff(&mut rng));
    let b_eq = DVector::from_fn(m_eq, |_, _| rng.gen_range(-4..=4) as f64);
    let a_ineq = DMatrix::from_fn(m - m_eq, n, |_, _| coeff(&mut rng));
    let b_ineq = DVector::from_fn(m - m_eq, |_, _| rng.gen_range(-2..=6) as f64);
    let mut lower = DVector::zeros(n);
    let mut upper = DVector::from_element(n, f64::INFINITY);
    for j in 0..n {
        match rng.gen_range(0..4) {
            0 => {}
            1 => upper[j] = rng.gen_range(1..=5) as f64,
            2 => {
                lower[j] = f64::NEG_INFINITY;
                upper[j] = rng.gen_range(-2..=5) as f64;
            }
            _ => lower[j] = f64::NEG_INFINITY,
        }
    }
    let objective = DVector::from_fn(n, |_, _| coeff(&mut rng));
    LinearProgram {
        a_eq,
        b_eq,
        a_ineq,
        b_ineq,
        lower,
        upper,
        objective,
        variable_names: (0..n).map(|j| format!("x{j}")).collect(),
    }
}
