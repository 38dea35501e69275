use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use super::document::{interface_name, Density, MachineKind, ModelDocument};
use super::{check_references, index_of, Dimensions, MetabolicModel, ModelError, ModelNames, RawModelSpec};
use crate::assembly::EukaryoticExtension;

/// Assembles the dense model from a one-to-one spec.
pub fn compile(spec: &RawModelSpec) -> Result<MetabolicModel, ModelError> {
    let doc = &spec.document;
    check_references(doc)?;

    let metabolite_idx = index_of(doc.metabolites.iter().map(|m| m.name.as_str()));
    let process_idx = index_of(doc.processes.iter().map(|p| p.name.as_str()));
    let density_idx = index_of(doc.density_limits.keys().map(String::as_str));

    // Enzymes ordered by the reaction they catalyse.
    let mut enzyme_of_reaction = Vec::with_capacity(doc.reactions.len());
    let mut enzyme_uses: IndexMap<&str, usize> = IndexMap::new();
    for (ri, r) in doc.reactions.iter().enumerate() {
        if r.catalysts.len() != 1 {
            return Err(ModelError::invariant(
                "each reaction has exactly one catalyst (expand duplications first)",
                ri,
            ));
        }
        *enzyme_uses.entry(r.catalysts[0].as_str()).or_default() += 1;
        let mi = doc
            .machines
            .iter()
            .position(|m| m.name == r.catalysts[0])
            .expect("references checked");
        enzyme_of_reaction.push(mi);
    }
    for (mi, m) in doc.machines.iter().enumerate() {
        if m.kind == MachineKind::Enzyme && enzyme_uses.get(m.name.as_str()).copied().unwrap_or(0) != 1 {
            return Err(ModelError::invariant(
                "each enzyme catalyses exactly one reaction (expand duplications first)",
                mi,
            ));
        }
    }

    let process_machines = pair_process_machines(doc, &process_idx)?;
    let machine_order: Vec<usize> = enzyme_of_reaction
        .iter()
        .copied()
        .chain(process_machines.iter().copied())
        .collect();

    let fixed: Vec<usize> = doc
        .metabolites
        .iter()
        .enumerate()
        .filter(|(_, m)| m.fixed_concentration.is_some())
        .map(|(i, _)| i)
        .collect();

    let dims = Dimensions::new(
        doc.metabolites.len(),
        doc.reactions.len(),
        doc.processes.len(),
        doc.proteins_g.len(),
        fixed.len(),
        doc.density_limits.len(),
    );

    let mut omega = DMatrix::zeros(dims.n_s, dims.n_m);
    let mut k_e = DVector::zeros(dims.n_m);
    let mut k_e_backward = DVector::zeros(dims.n_m);
    for (j, r) in doc.reactions.iter().enumerate() {
        for (met, coef) in &r.stoichiometry {
            omega[(metabolite_idx[met.as_str()], j)] += coef;
        }
        let catalyst = &r.catalysts[0];
        k_e[j] = r.k_forward.for_catalyst(catalyst).expect("references checked");
        k_e_backward[j] = match &r.k_backward {
            Some(kb) => kb.for_catalyst(catalyst).expect("references checked"),
            None => k_e[j],
        };
    }

    let mut c_s_y = DMatrix::zeros(dims.n_s, dims.n_y);
    let mut c_m_y = DMatrix::zeros(dims.n_p, dims.n_y);
    let mut c_d_y = DMatrix::zeros(dims.n_c, dims.n_y);
    for (j, &mi) in machine_order.iter().enumerate() {
        let m = &doc.machines[mi];
        for (met, count) in &m.synthesis_cost {
            c_s_y[(metabolite_idx[met.as_str()], j)] -= count;
        }
        for (proc, residues) in &m.process_demand {
            c_m_y[(process_idx[proc.as_str()], j)] += residues;
        }
        fill_density(&mut c_d_y, j, &m.compartment, &m.density_contribution, &density_idx);
    }

    let mut c_s_g = DMatrix::zeros(dims.n_s, dims.n_g);
    let mut c_m_g = DMatrix::zeros(dims.n_p, dims.n_g);
    let mut c_d_g = DMatrix::zeros(dims.n_c, dims.n_g);
    let mut p_g = DVector::zeros(dims.n_g);
    for (j, p) in doc.proteins_g.iter().enumerate() {
        p_g[j] = p.concentration;
        for (met, count) in &p.synthesis_cost {
            c_s_g[(metabolite_idx[met.as_str()], j)] -= count;
        }
        for (proc, residues) in &p.process_demand {
            c_m_g[(process_idx[proc.as_str()], j)] += residues;
        }
        fill_density(&mut c_d_g, j, &p.compartment, &p.density_contribution, &density_idx);
    }

    let mut c_s_b = DMatrix::zeros(dims.n_s, dims.n_b);
    let mut b_fixed = DVector::zeros(dims.n_b);
    for (j, &row) in fixed.iter().enumerate() {
        let m = &doc.metabolites[row];
        b_fixed[j] = m.fixed_concentration.expect("filtered on fixed");
        match &m.synthesis_cost {
            Some(cost) => {
                for (met, count) in cost {
                    c_s_b[(metabolite_idx[met.as_str()], j)] -= count;
                }
            }
            None => c_s_b[(row, j)] = -1.0,
        }
    }

    let k_t = DVector::from_iterator(dims.n_p, doc.processes.iter().map(|p| p.efficiency));
    let d_bar = DVector::from_iterator(dims.n_c, doc.density_limits.values().copied());

    let names = ModelNames {
        metabolites: doc.metabolites.iter().map(|m| m.name.clone()).collect(),
        reactions: doc.reactions.iter().map(|r| r.name.clone()).collect(),
        processes: doc.processes.iter().map(|p| p.name.clone()).collect(),
        machines: machine_order.iter().map(|&mi| doc.machines[mi].name.clone()).collect(),
        proteins_g: doc.proteins_g.iter().map(|p| p.name.clone()).collect(),
        fixed_metabolites: fixed.iter().map(|&i| doc.metabolites[i].name.clone()).collect(),
        density_rows: doc.density_limits.keys().cloned().collect(),
        machine_origins: machine_order
            .iter()
            .map(|&mi| spec.origin_of(&doc.machines[mi].name).to_string())
            .collect(),
    };

    let model = MetabolicModel {
        dims,
        omega,
        c_s_y,
        c_s_b,
        c_s_g,
        c_m_y,
        c_m_g,
        k_t,
        k_e,
        k_e_backward,
        c_d_y,
        c_d_g,
        d_bar,
        b_fixed,
        p_g,
        fixed_rows: fixed,
        names,
    };
    model.validate()?;
    Ok(model)
}

fn pair_process_machines(
    doc: &ModelDocument,
    process_idx: &std::collections::HashMap<&str, usize>,
) -> Result<Vec<usize>, ModelError> {
    let machines: Vec<usize> = doc
        .machines
        .iter()
        .enumerate()
        .filter(|(_, m)| m.kind == MachineKind::ProcessMachine)
        .map(|(i, _)| i)
        .collect();
    if machines.len() != doc.processes.len() {
        return Err(ModelError::invariant(
            "one process machine per process",
            machines.len(),
        ));
    }
    if machines.iter().all(|&i| doc.machines[i].process.is_none()) {
        return Ok(machines);
    }
    let mut slots: Vec<Option<usize>> = vec![None; doc.processes.len()];
    for &mi in &machines {
        let Some(proc) = &doc.machines[mi].process else {
            return Err(ModelError::invariant(
                "process machines either all name their process or none do",
                mi,
            ));
        };
        let pi = process_idx[proc.as_str()];
        if slots[pi].replace(mi).is_some() {
            return Err(ModelError::invariant("one process machine per process", pi));
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("counts match")).collect())
}

fn fill_density(
    target: &mut DMatrix<f64>,
    column: usize,
    compartment: &Option<String>,
    density: &Density,
    density_idx: &std::collections::HashMap<&str, usize>,
) {
    match density {
        Density::Scalar(v) => {
            if let Some(c) = compartment {
                target[(density_idx[c.as_str()], column)] += v;
            }
        }
        Density::PerCompartment(map) => {
            for (c, v) in map {
                target[(density_idx[c.as_str()], column)] += v;
            }
        }
    }
}

/// Builds the compartment extension from the document's `eukaryote` section,
/// if present. Names in the section refer to machines by their original
/// (pre-duplication) names; every copy inherits the coefficient.
pub fn compile_eukaryote(
    spec: &RawModelSpec,
    model: &MetabolicModel,
) -> Result<Option<EukaryoticExtension>, ModelError> {
    let Some(euk) = &spec.document.eukaryote else {
        return Ok(None);
    };
    let dims = model.dims;
    let mut fraction_names: Vec<String> = euk.compartments.clone();
    let comp_idx = index_of(euk.compartments.iter().map(String::as_str));
    let mut interfaces = Vec::with_capacity(euk.interfaces.len());
    for pair in &euk.interfaces {
        interfaces.push((comp_idx[pair[0].as_str()], comp_idx[pair[1].as_str()]));
        fraction_names.push(interface_name(pair));
    }
    let n_frac = fraction_names.len();
    let frac_idx = index_of(fraction_names.iter().map(String::as_str));
    let met_idx = index_of(model.names.metabolites.iter().map(String::as_str));
    let prot_idx = index_of(model.names.proteins_g.iter().map(String::as_str));

    let mut c_s_f = DMatrix::zeros(dims.n_s, n_frac);
    for (frac, cost) in &euk.fraction_synthesis_cost {
        let k = frac_idx[frac.as_str()];
        for (met, count) in cost {
            c_s_f[(met_idx[met.as_str()], k)] -= count;
        }
    }
    let mut b_hat = DVector::zeros(n_frac);
    for (frac, v) in &euk.b_hat {
        b_hat[frac_idx[frac.as_str()]] = *v;
    }

    let density_block = |rows: &[super::document::DensityRowDecl]| {
        let mut y = DMatrix::zeros(rows.len(), dims.n_y);
        let mut g = DMatrix::zeros(rows.len(), dims.n_g);
        let mut f = DMatrix::zeros(rows.len(), n_frac);
        for (i, row) in rows.iter().enumerate() {
            for (name, v) in &row.machines {
                for j in model.machines_named(name) {
                    y[(i, j)] += v;
                }
            }
            for (name, v) in &row.proteins_g {
                g[(i, prot_idx[name.as_str()])] += v;
            }
            for (name, v) in &row.fractions {
                f[(i, frac_idx[name.as_str()])] += v;
            }
        }
        (y, g, f)
    };
    let (c_d_iq_y, c_d_iq_g, c_d_iq_f) = density_block(&euk.density_iq);
    let (c_d_eq_y, c_d_eq_g, c_d_eq_f) = density_block(&euk.density_eq);

    let mut c_f_f = DMatrix::zeros(euk.normalization.len(), n_frac);
    let mut c_bar = DVector::zeros(euk.normalization.len());
    for (i, row) in euk.normalization.iter().enumerate() {
        for (name, v) in &row.fractions {
            c_f_f[(i, frac_idx[name.as_str()])] += v;
        }
        c_bar[i] = row.value;
    }

    let n_vol = euk.compartments.len();
    let mut f_lower = DVector::zeros(n_vol);
    let mut f_upper = DVector::from_element(n_vol, 1.0);
    for (name, [lo, hi]) in &euk.fraction_bounds {
        let k = comp_idx[name.as_str()];
        f_lower[k] = *lo;
        f_upper[k] = *hi;
    }

    let ext = EukaryoticExtension {
        n_com: n_vol.saturating_sub(1),
        fraction_names,
        interfaces,
        c_s_f,
        b_hat,
        c_d_iq_y,
        c_d_iq_g,
        c_d_iq_f,
        c_d_eq_y,
        c_d_eq_g,
        c_d_eq_f,
        c_f_f,
        c_bar,
        f_lower,
        f_upper,
        density_iq_names: euk.density_iq.iter().map(|r| r.name.clone()).collect(),
        density_eq_names: euk.density_eq.iter().map(|r| r.name.clone()).collect(),
    };
    ext.validate(&dims)?;
    Ok(Some(ext))
}
