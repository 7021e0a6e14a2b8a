use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::design::DesignMatrix;
use crate::error::{Error, Result};

/// Relative residual norm under which a fit is treated as exact.
pub(crate) const EXACT_FIT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    /// Two-sided.
    pub p: f64,
}

impl Coefficient {
    /// Wald t test with `df` degrees of freedom. A zero standard error gives
    /// `t = 0, p = 1` for a zero estimate and `t = ±∞, p = 0` otherwise.
    pub fn new(name: String, estimate: f64, std_error: f64, df: f64) -> Self {
        let (t, p) = if std_error > 0.0 && std_error.is_finite() {
            let t = estimate / std_error;
            (t, two_sided_p(t, df))
        } else if estimate == 0.0 {
            (0.0, 1.0)
        } else {
            (estimate.signum() * f64::INFINITY, 0.0)
        };
        Coefficient {
            name,
            estimate,
            std_error,
            t,
            p,
        }
    }
}

pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub residual_variance: f64,
    pub rss: f64,
    pub df_resid: usize,
    pub n: usize,
    pub r_squared: f64,
    /// Residuals vanish to rounding error.
    pub exact_fit: bool,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(XᵀX)⁻¹`.
    pub xtx_inv: DMatrix<f64>,
    pub rss: f64,
    pub exact_fit: bool,
}

/// QR least squares. Assumes full column rank has been checked.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::InsufficientData("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::InsufficientData("triangular solve failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let exact_fit = rss.sqrt() <= EXACT_FIT_TOLERANCE * y.norm().max(f64::MIN_POSITIVE);
    let mut beta = beta;
    if exact_fit {
        clean_negligible(&mut beta, x, y);
    }
    Ok(LeastSquares {
        beta,
        xtx_inv,
        rss: if exact_fit { 0.0 } else { rss },
        exact_fit,
    })
}

/// Zeroes coefficients whose contribution to the fitted values is rounding noise.
pub(crate) fn clean_negligible(beta: &mut DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) {
    let scale = y.norm();
    for j in 0..beta.len() {
        if (beta[j] * x.column(j).norm()).abs() <= EXACT_FIT_TOLERANCE * scale {
            beta[j] = 0.0;
        }
    }
}

pub fn ols_fit(design: &DesignMatrix) -> Result<RegressionResult> {
    let (n, p) = (design.n(), design.p());
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} observations for {p} predictors")));
    }
    design.check_rank()?;
    let ls = least_squares(design.x(), design.y())?;
    let df = n - p;
    let sigma2 = ls.rss / df as f64;
    let coefficients = design
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = (sigma2 * ls.xtx_inv[(j, j)]).max(0.0).sqrt();
            Coefficient::new(name.clone(), ls.beta[j], se, df as f64)
        })
        .collect();
    let y = design.y();
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    Ok(RegressionResult {
        coefficients,
        residual_variance: sigma2,
        rss: ls.rss,
        df_resid: df,
        n,
        r_squared: if tss > 0.0 { 1.0 - ls.rss / tss } else { 1.0 },
        exact_fit: ls.exact_fit,
    })
}
