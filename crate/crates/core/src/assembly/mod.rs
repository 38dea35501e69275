//! Growth-rate feasibility problems as linear programs.
//!
//! Columns are ordered `(Y, ν)` for the prokaryotic and turnover problems and
//! `(Y, ν, f)` for the compartmented one. `Y ≥ 0`, `ν` is free, `f ≥ 0`.
//!
//! Equality rows: metabolite balance (one per metabolite, declaration order),
//! then saturated density rows, then fraction normalisation rows.
//! Inequality rows: process capacity (one per process), forward and backward
//! catalytic capacity (one per reaction each), density caps, then upper and
//! lower volume-fraction bounds.

mod eukaryotic;
mod turnover;

pub use eukaryotic::EukaryoticExtension;
pub use turnover::{build_turnover_matrices, load_turnover, TurnoverMatrices, TurnoverSpec};

use nalgebra::{DMatrix, DVector};

use crate::lp::LinearProgram;
use crate::model::{MetabolicModel, ModelError};

/// Row counts of each constraint block of an assembled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLayout {
    pub balance: usize,
    pub density_eq: usize,
    pub normalization: usize,
    pub capacity: usize,
    pub catalysis_forward: usize,
    pub catalysis_backward: usize,
    pub density: usize,
    pub fraction_upper: usize,
    pub fraction_lower: usize,
}

impl RowLayout {
    pub fn of(model: &MetabolicModel, ext: Option<&EukaryoticExtension>) -> Self {
        let d = model.dims;
        RowLayout {
            balance: d.n_s,
            density_eq: ext.map_or(0, |e| e.c_d_eq_y.nrows()),
            normalization: ext.map_or(0, |e| e.c_f_f.nrows()),
            capacity: d.n_p,
            catalysis_forward: d.n_m,
            catalysis_backward: d.n_m,
            density: ext.map_or(d.n_c, |e| e.c_d_iq_y.nrows()),
            fraction_upper: ext.map_or(0, |e| e.n_vol()),
            fraction_lower: ext.map_or(0, |e| e.n_vol()),
        }
    }

    /// First equality row of the normalisation block.
    pub fn normalization_start(&self) -> usize {
        self.balance + self.density_eq
    }

    /// First inequality row of the fraction-bound blocks.
    pub fn fraction_bounds_start(&self) -> usize {
        self.capacity + self.catalysis_forward + self.catalysis_backward + self.density
    }
}

/// The prokaryotic problem at growth rate `mu`.
pub fn assemble_prokaryotic(model: &MetabolicModel, mu: f64) -> LinearProgram {
    assemble(model, None, None, mu)
}

/// The prokaryotic problem with macromolecular turnover.
pub fn assemble_turnover(model: &MetabolicModel, t: &TurnoverSpec, mu: f64) -> Result<LinearProgram, ModelError> {
    let g = build_turnover_matrices(model, t)?;
    Ok(assemble(model, Some(&g), None, mu))
}

/// The compartmented problem with volume and surface fractions.
pub fn assemble_eukaryotic(
    model: &MetabolicModel,
    ext: &EukaryoticExtension,
    mu: f64,
) -> Result<LinearProgram, ModelError> {
    ext.validate(&model.dims)?;
    Ok(assemble(model, None, Some(ext), mu))
}

/// Any combination of the extensions. Turnover inside the compartmented
/// problem enters the balance and capacity rows exactly as in the
/// prokaryotic case.
pub fn assemble(
    model: &MetabolicModel,
    turnover: Option<&TurnoverMatrices>,
    ext: Option<&EukaryoticExtension>,
    mu: f64,
) -> LinearProgram {
    let d = model.dims;
    let n_y = d.n_y;
    let n_m = d.n_m;
    let n_f = ext.map_or(0, |e| e.n_frac());
    let n = n_y + n_m + n_f;
    let (y0, nu0, f0) = (0, n_y, n_y + n_m);

    let mut lower = DVector::zeros(n);
    let upper = DVector::from_element(n, f64::INFINITY);
    for j in nu0..f0 {
        lower[j] = f64::NEG_INFINITY;
    }

    let mut names = Vec::with_capacity(n);
    names.extend(model.names.machines.iter().map(|s| format!("Y:{s}")));
    names.extend(model.names.reactions.iter().map(|s| format!("nu:{s}")));
    if let Some(e) = ext {
        names.extend(e.fraction_names.iter().map(|s| format!("f:{s}")));
    }

    let layout = RowLayout::of(model, ext);

    // Metabolite balance.
    let mut bal = DMatrix::zeros(d.n_s, n);
    let mut bal_rhs = DVector::zeros(d.n_s);
    for i in 0..d.n_s {
        for j in 0..n_y {
            bal[(i, y0 + j)] = mu * model.c_s_y[(i, j)];
        }
        for j in 0..n_m {
            bal[(i, nu0 + j)] = model.omega[(i, j)];
        }
        let mut fixed = 0.0;
        for j in 0..d.n_b {
            fixed += model.c_s_b[(i, j)] * model.b_fixed[j];
        }
        for j in 0..d.n_g {
            fixed += model.c_s_g[(i, j)] * model.p_g[j];
        }
        bal_rhs[i] = -mu * fixed;
    }
    if let Some(g) = turnover {
        for i in 0..d.n_s {
            for j in 0..n_y {
                if g.gamma_s_y[(i, j)] != 0.0 {
                    bal[(i, y0 + j)] += g.gamma_s_y[(i, j)];
                }
            }
            for j in 0..d.n_b {
                if g.gamma_s_b[(i, j)] != 0.0 {
                    bal_rhs[i] -= g.gamma_s_b[(i, j)] * model.b_fixed[j];
                }
            }
            for j in 0..d.n_g {
                if g.gamma_s_pg[(i, j)] != 0.0 {
                    bal_rhs[i] -= g.gamma_s_pg[(i, j)] * model.p_g[j];
                }
            }
        }
    }
    if let Some(e) = ext {
        for i in 0..d.n_s {
            for k in 0..n_f {
                bal[(i, f0 + k)] = mu * e.c_s_f[(i, k)] * e.b_hat[k];
            }
        }
    }

    // Process capacity.
    let mut cap = DMatrix::zeros(d.n_p, n);
    let mut cap_rhs = DVector::zeros(d.n_p);
    for i in 0..d.n_p {
        for j in 0..n_y {
            cap[(i, y0 + j)] = mu * model.c_m_y[(i, j)];
        }
        let machine = model.process_machine(i);
        cap[(i, y0 + machine)] -= model.k_t[i];
        let mut fixed = 0.0;
        for j in 0..d.n_g {
            fixed += model.c_m_g[(i, j)] * model.p_g[j];
        }
        cap_rhs[i] = -mu * fixed;
    }
    if let Some(g) = turnover {
        for i in 0..d.n_p {
            for j in 0..n_y {
                if g.gamma_m_y[(i, j)] != 0.0 {
                    cap[(i, y0 + j)] += g.gamma_m_y[(i, j)];
                }
            }
            for j in 0..d.n_g {
                if g.gamma_m_pg[(i, j)] != 0.0 {
                    cap_rhs[i] -= g.gamma_m_pg[(i, j)] * model.p_g[j];
                }
            }
        }
    }

    // Catalytic capacity, both directions.
    let mut fwd = DMatrix::zeros(n_m, n);
    let mut bwd = DMatrix::zeros(n_m, n);
    for j in 0..n_m {
        fwd[(j, nu0 + j)] = 1.0;
        fwd[(j, y0 + j)] = -model.k_e[j];
        bwd[(j, nu0 + j)] = -1.0;
        bwd[(j, y0 + j)] = -model.k_e_backward[j];
    }
    let zeros_m = DVector::zeros(n_m);

    let mut lp = LinearProgram {
        a_eq: DMatrix::zeros(0, n),
        b_eq: DVector::zeros(0),
        a_ineq: DMatrix::zeros(0, n),
        b_ineq: DVector::zeros(0),
        lower,
        upper,
        objective: DVector::zeros(n),
        variable_names: names,
    };
    lp.push_eq(&bal, &bal_rhs);

    match ext {
        None => {
            lp.push_ineq(&cap, &cap_rhs);
            lp.push_ineq(&fwd, &zeros_m);
            lp.push_ineq(&bwd, &zeros_m);
            let mut dens = DMatrix::zeros(d.n_c, n);
            let mut dens_rhs = DVector::zeros(d.n_c);
            for i in 0..d.n_c {
                for j in 0..n_y {
                    dens[(i, y0 + j)] = model.c_d_y[(i, j)];
                }
                let mut fixed = 0.0;
                for j in 0..d.n_g {
                    fixed += model.c_d_g[(i, j)] * model.p_g[j];
                }
                dens_rhs[i] = model.d_bar[i] - fixed;
            }
            lp.push_ineq(&dens, &dens_rhs);
        }
        Some(e) => {
            let density_rows = |cy: &DMatrix<f64>, cg: &DMatrix<f64>, cf: &DMatrix<f64>| {
                let rows = cy.nrows();
                let mut a = DMatrix::zeros(rows, n);
                let mut rhs = DVector::zeros(rows);
                for i in 0..rows {
                    for j in 0..n_y {
                        a[(i, y0 + j)] = cy[(i, j)];
                    }
                    for k in 0..n_f {
                        a[(i, f0 + k)] = -cf[(i, k)];
                    }
                    let mut fixed = 0.0;
                    for j in 0..d.n_g {
                        fixed += cg[(i, j)] * model.p_g[j];
                    }
                    rhs[i] = -fixed;
                }
                (a, rhs)
            };
            let (eq, eq_rhs) = density_rows(&e.c_d_eq_y, &e.c_d_eq_g, &e.c_d_eq_f);
            lp.push_eq(&eq, &eq_rhs);
            let mut norm = DMatrix::zeros(e.c_f_f.nrows(), n);
            norm.columns_mut(f0, n_f).copy_from(&e.c_f_f);
            lp.push_eq(&norm, &e.c_bar);

            lp.push_ineq(&cap, &cap_rhs);
            lp.push_ineq(&fwd, &zeros_m);
            lp.push_ineq(&bwd, &zeros_m);
            let (iq, iq_rhs) = density_rows(&e.c_d_iq_y, &e.c_d_iq_g, &e.c_d_iq_f);
            lp.push_ineq(&iq, &iq_rhs);

            let i_v = e.i_v();
            let n_vol = e.n_vol();
            let mut sel = DMatrix::zeros(n_vol, n);
            sel.columns_mut(f0, n_f).copy_from(&i_v);
            lp.push_ineq(&sel, &e.f_upper);
            lp.push_ineq(&(-sel), &(-e.f_lower.clone()));
        }
    }
    debug_assert_eq!(
        lp.a_ineq.nrows(),
        layout.fraction_bounds_start() + layout.fraction_upper + layout.fraction_lower
    );
    lp
}

/// Columns of the variable groups in an assembled program.
pub fn column_ranges(model: &MetabolicModel, ext: Option<&EukaryoticExtension>) -> [std::ops::Range<usize>; 3] {
    let n_y = model.dims.n_y;
    let n_m = model.dims.n_m;
    let n_f = ext.map_or(0, |e| e.n_frac());
    [0..n_y, n_y..n_y + n_m, n_y + n_m..n_y + n_m + n_f]
}

/// A model together with its optional extensions; builds the program for
/// any growth rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub model: MetabolicModel,
    pub turnover: Option<TurnoverMatrices>,
    pub eukaryote: Option<EukaryoticExtension>,
}

impl Problem {
    pub fn prokaryotic(model: MetabolicModel) -> Self {
        Problem {
            model,
            turnover: None,
            eukaryote: None,
        }
    }

    pub fn with_turnover(mut self, t: &TurnoverSpec) -> Result<Self, ModelError> {
        self.turnover = Some(build_turnover_matrices(&self.model, t)?);
        Ok(self)
    }

    pub fn with_eukaryote(mut self, ext: EukaryoticExtension) -> Result<Self, ModelError> {
        ext.validate(&self.model.dims)?;
        self.eukaryote = Some(ext);
        Ok(self)
    }

    pub fn build(&self, mu: f64) -> LinearProgram {
        assemble(&self.model, self.turnover.as_ref(), self.eukaryote.as_ref(), mu)
    }
}
