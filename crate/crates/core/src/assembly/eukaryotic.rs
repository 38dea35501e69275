use nalgebra::{DMatrix, DVector};

use crate::model::{Dimensions, MetabolicModel, ModelError};

/// Compartments, interfaces and the fraction variables coupling them.
///
/// The fraction vector `f` holds the volume fractions of the cytosol and
/// the `n_com` organelle compartments, followed by one surface fraction per
/// interface.
#[derive(Debug, Clone, PartialEq)]
pub struct EukaryoticExtension {
    /// Organelle compartments, excluding the cytosol.
    pub n_com: usize,
    pub fraction_names: Vec<String>,
    /// Pairs of compartment indices (0 is the cytosol).
    pub interfaces: Vec<(usize, usize)>,
    pub c_s_f: DMatrix<f64>,
    /// Scales each column of `c_s_f`: the fixed-composition demand per unit
    /// fraction.
    pub b_hat: DVector<f64>,
    pub c_d_iq_y: DMatrix<f64>,
    pub c_d_iq_g: DMatrix<f64>,
    pub c_d_iq_f: DMatrix<f64>,
    pub c_d_eq_y: DMatrix<f64>,
    pub c_d_eq_g: DMatrix<f64>,
    pub c_d_eq_f: DMatrix<f64>,
    pub c_f_f: DMatrix<f64>,
    pub c_bar: DVector<f64>,
    /// Bounds on the volume fractions, `n_com + 1` entries.
    pub f_lower: DVector<f64>,
    pub f_upper: DVector<f64>,
    pub density_iq_names: Vec<String>,
    pub density_eq_names: Vec<String>,
}

impl EukaryoticExtension {
    /// Number of volume fractions, cytosol included.
    pub fn n_vol(&self) -> usize {
        self.n_com + 1
    }

    pub fn n_frac(&self) -> usize {
        self.n_vol() + self.interfaces.len()
    }

    /// Selects the volume fractions out of `f`.
    pub fn i_v(&self) -> DMatrix<f64> {
        let mut sel = DMatrix::zeros(self.n_vol(), self.n_frac());
        for k in 0..self.n_vol() {
            sel[(k, k)] = 1.0;
        }
        sel
    }

    pub fn validate(&self, dims: &Dimensions) -> Result<(), ModelError> {
        let inv = |what: &str, index: usize| ModelError::Invariant {
            invariant: what.to_string(),
            index,
        };
        if self.n_com < 2 {
            return Err(inv("at least two compartments besides the cytosol", self.n_com));
        }
        let n_f = self.n_frac();
        let n_v = self.n_vol();
        for (k, &(a, b)) in self.interfaces.iter().enumerate() {
            if a == b || a >= n_v || b >= n_v {
                return Err(inv("interface joins two distinct declared compartments", k));
            }
        }
        let shape = |context: &str, m: &DMatrix<f64>, rows: usize, cols: usize| {
            if m.shape() == (rows, cols) {
                Ok(())
            } else {
                Err(ModelError::Shape {
                    context: context.to_string(),
                    expected: format!("{rows}x{cols}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                })
            }
        };
        let len = |context: &str, v: &DVector<f64>, n: usize| {
            if v.len() == n {
                Ok(())
            } else {
                Err(ModelError::Shape {
                    context: context.to_string(),
                    expected: n.to_string(),
                    found: v.len().to_string(),
                })
            }
        };
        if self.fraction_names.len() != n_f {
            return Err(ModelError::Shape {
                context: "fraction_names".into(),
                expected: n_f.to_string(),
                found: self.fraction_names.len().to_string(),
            });
        }
        shape("c_s_f", &self.c_s_f, dims.n_s, n_f)?;
        len("b_hat", &self.b_hat, n_f)?;
        let r_iq = self.c_d_iq_y.nrows();
        shape("c_d_iq_y", &self.c_d_iq_y, r_iq, dims.n_y)?;
        shape("c_d_iq_g", &self.c_d_iq_g, r_iq, dims.n_g)?;
        shape("c_d_iq_f", &self.c_d_iq_f, r_iq, n_f)?;
        let r_eq = self.c_d_eq_y.nrows();
        shape("c_d_eq_y", &self.c_d_eq_y, r_eq, dims.n_y)?;
        shape("c_d_eq_g", &self.c_d_eq_g, r_eq, dims.n_g)?;
        shape("c_d_eq_f", &self.c_d_eq_f, r_eq, n_f)?;
        if self.c_f_f.nrows() == 0 {
            return Err(inv("at least one fraction normalisation row", 0));
        }
        shape("c_f_f", &self.c_f_f, self.c_f_f.nrows(), n_f)?;
        len("c_bar", &self.c_bar, self.c_f_f.nrows())?;
        len("f_lower", &self.f_lower, n_v)?;
        len("f_upper", &self.f_upper, n_v)?;
        if let Some(k) = (0..n_v).find(|&k| !(self.f_lower[k] <= self.f_upper[k])) {
            return Err(inv("f_lower <= f_upper", k));
        }
        Ok(())
    }

    /// An extension under which the compartmented problem has the same
    /// feasible `(Y, ν)` set as the prokaryotic one: the cytosol takes the
    /// whole volume, the two mandatory organelles are pinned at zero, and each
    /// density cap of the model becomes an inequality row whose capacity
    /// scales with the cytosol fraction.
    pub fn single_compartment(model: &MetabolicModel) -> Self {
        let d = model.dims;
        let n_com = 2;
        let n_f = n_com + 1;
        let mut c_d_iq_f = DMatrix::zeros(d.n_c, n_f);
        for i in 0..d.n_c {
            c_d_iq_f[(i, 0)] = model.d_bar[i];
        }
        let mut c_f_f = DMatrix::zeros(1, n_f);
        c_f_f[(0, 0)] = 1.0;
        let mut f_upper = DVector::from_element(n_f, 0.0);
        f_upper[0] = 1.0;
        EukaryoticExtension {
            n_com,
            fraction_names: vec!["cytosol".into(), "organelle_a".into(), "organelle_b".into()],
            interfaces: Vec::new(),
            c_s_f: DMatrix::zeros(d.n_s, n_f),
            b_hat: DVector::zeros(n_f),
            c_d_iq_y: model.c_d_y.clone(),
            c_d_iq_g: model.c_d_g.clone(),
            c_d_iq_f,
            c_d_eq_y: DMatrix::zeros(0, d.n_y),
            c_d_eq_g: DMatrix::zeros(0, d.n_g),
            c_d_eq_f: DMatrix::zeros(0, n_f),
            c_f_f,
            c_bar: DVector::from_element(1, 1.0),
            f_lower: DVector::zeros(n_f),
            f_upper,
            density_iq_names: model.names.density_rows.clone(),
            density_eq_names: Vec::new(),
        }
    }
}
