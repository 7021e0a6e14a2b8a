//! Linear mixed model with one random intercept, fitted by profiling the
//! likelihood over the variance ratio `θ = σ_g² / σ_e²`.
//!
//! For a given `θ` the marginal covariance is `σ_e² H` with
//! `H⁻¹ = I − wⱼ 11ᵀ` on each group block, `wⱼ = θ / (1 + nⱼ θ)`, so every
//! quantity reduces to per-group sums and no `n × n` matrix is formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::ols::{clean_negligible, least_squares, Coefficient};
use super::optimize::brent_minimize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Ml,
    #[default]
    Reml,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmmOptions {
    pub method: Method,
    /// Search range over `ln θ`.
    pub log_theta_range: (f64, f64),
    pub grid_points: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LmmOptions {
    fn default() -> Self {
        LmmOptions {
            method: Method::Reml,
            log_theta_range: (-20.0, 12.0),
            grid_points: 161,
            tolerance: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmResult {
    pub fixed_effects: Vec<Coefficient>,
    pub sigma_group2: f64,
    pub sigma_resid2: f64,
    pub theta: f64,
    pub log_likelihood: f64,
    pub method: Method,
    pub converged: bool,
    /// The optimum sits at `θ = 0`.
    pub boundary: bool,
    /// Fixed effects reproduce the response exactly.
    pub exact_fit: bool,
    pub n: usize,
    pub n_groups: usize,
    pub df_resid: usize,
}

impl LmmResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.fixed_effects.iter().find(|c| c.name == name)
    }
}

/// Per-group sufficient statistics, precomputed once per fit.
struct Profile<'a> {
    design: &'a DesignMatrix,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    groups: Vec<usize>,
    sizes: Vec<f64>,
    /// Column sums of X per group.
    sx: Vec<DVector<f64>>,
    sy: Vec<f64>,
}

struct Evaluation {
    beta: DVector<f64>,
    a_inv: DMatrix<f64>,
    q: f64,
    log_lik: f64,
}

impl<'a> Profile<'a> {
    fn new(design: &'a DesignMatrix) -> Result<Self> {
        let groups = design
            .groups()
            .ok_or_else(|| Error::InsufficientData("mixed model needs group labels".into()))?
            .to_vec();
        let (x, y) = (design.x(), design.y());
        let g = design.n_groups();
        let p = design.p();
        let mut sizes = vec![0.0; g];
        let mut sx = vec![DVector::zeros(p); g];
        let mut sy = vec![0.0; g];
        for (i, &gi) in groups.iter().enumerate() {
            sizes[gi] += 1.0;
            sx[gi] += x.row(i).transpose();
            sy[gi] += y[i];
        }
        Ok(Profile {
            design,
            xtx: x.transpose() * x,
            xty: x.transpose() * y,
            groups,
            sizes,
            sx,
            sy,
        })
    }

    fn weights(&self, theta: f64) -> Vec<f64> {
        self.sizes.iter().map(|&n| theta / (1.0 + n * theta)).collect()
    }

    fn evaluate(&self, theta: f64, method: Method) -> Option<Evaluation> {
        let w = self.weights(theta);
        let mut a = self.xtx.clone();
        let mut b = self.xty.clone();
        for ((wj, sx), sy) in w.iter().zip(&self.sx).zip(&self.sy) {
            a -= *wj * sx * sx.transpose();
            b -= *wj * *sy * sx;
        }
        let chol = a.clone().cholesky()?;
        let beta = chol.solve(&b);
        let a_inv = chol.inverse();
        let log_det_a = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();

        let resid = self.design.y() - self.design.x() * &beta;
        let mut group_resid = vec![0.0; w.len()];
        for (i, &g) in self.groups.iter().enumerate() {
            group_resid[g] += resid[i];
        }
        let q = resid.norm_squared() - w.iter().zip(&group_resid).map(|(w, r)| w * r * r).sum::<f64>();
        let log_det_h: f64 = self.sizes.iter().map(|&n| (n * theta).ln_1p()).sum();
        let n = self.design.n() as f64;
        let p = self.design.p() as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let log_lik = match method {
            Method::Ml => -0.5 * (n * (two_pi * q / n).ln() + n + log_det_h),
            Method::Reml => -0.5 * ((n - p) * (two_pi * q / (n - p)).ln() + (n - p) + log_det_h + log_det_a),
        };
        Some(Evaluation {
            beta,
            a_inv,
            q,
            log_lik: if log_lik.is_nan() { f64::NEG_INFINITY } else { log_lik },
        })
    }
}

fn check(design: &DesignMatrix) -> Result<()> {
    let (n, p) = (design.n(), design.p());
    if design.groups().is_none() {
        return Err(Error::InsufficientData("mixed model needs group labels".into()));
    }
    if design.n_groups() < 2 {
        return Err(Error::InsufficientData("mixed model needs at least 2 groups".into()));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} observations for {p} predictors")));
    }
    design.check_rank()
}

/// Profiled log-likelihood at a given `θ ≥ 0`.
pub fn profiled_log_likelihood(design: &DesignMatrix, theta: f64, method: Method) -> Result<f64> {
    check(design)?;
    let profile = Profile::new(design)?;
    Ok(profile
        .evaluate(theta.max(0.0), method)
        .map_or(f64::NEG_INFINITY, |e| e.log_lik))
}

fn assemble(design: &DesignMatrix, eval: Evaluation, theta: f64, method: Method, converged: bool) -> LmmResult {
    let (n, p) = (design.n(), design.p());
    let df = n - p;
    let denom = match method {
        Method::Ml => n as f64,
        Method::Reml => df as f64,
    };
    let sigma2 = (eval.q / denom).max(0.0);
    let fixed_effects = design
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = (sigma2 * eval.a_inv[(j, j)]).max(0.0).sqrt();
            Coefficient::new(name.clone(), eval.beta[j], se, df as f64)
        })
        .collect();
    LmmResult {
        fixed_effects,
        sigma_group2: theta * sigma2,
        sigma_resid2: sigma2,
        theta,
        log_likelihood: eval.log_lik,
        method,
        converged,
        boundary: theta == 0.0,
        exact_fit: false,
        n,
        n_groups: design.n_groups(),
        df_resid: df,
    }
}

/// Fit with `θ` held fixed.
pub fn lmm_fit_at(design: &DesignMatrix, theta: f64, method: Method) -> Result<LmmResult> {
    check(design)?;
    let profile = Profile::new(design)?;
    let theta = theta.max(0.0);
    let eval = profile
        .evaluate(theta, method)
        .ok_or_else(|| Error::InsufficientData("GLS system is not positive definite".into()))?;
    Ok(assemble(design, eval, theta, method, true))
}

pub fn lmm_fit(design: &DesignMatrix, options: &LmmOptions) -> Result<LmmResult> {
    check(design)?;
    let method = options.method;

    // Exact fixed-effect fit: every variance component is zero.
    let ls = least_squares(design.x(), design.y())?;
    if ls.exact_fit {
        let mut beta = ls.beta;
        clean_negligible(&mut beta, design.x(), design.y());
        let df = design.n() - design.p();
        return Ok(LmmResult {
            fixed_effects: design
                .names()
                .iter()
                .enumerate()
                .map(|(j, name)| Coefficient::new(name.clone(), beta[j], 0.0, df as f64))
                .collect(),
            sigma_group2: 0.0,
            sigma_resid2: 0.0,
            theta: 0.0,
            log_likelihood: f64::INFINITY,
            method,
            converged: true,
            boundary: true,
            exact_fit: true,
            n: design.n(),
            n_groups: design.n_groups(),
            df_resid: df,
        });
    }

    let profile = Profile::new(design)?;
    let objective = |t: f64| profile.evaluate(t.exp(), method).map_or(f64::INFINITY, |e| -e.log_lik);
    let (lo, hi) = options.log_theta_range;
    let m = options.grid_points.max(3);
    let step = (hi - lo) / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| objective(t)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(m - 1)];
    let min = brent_minimize(objective, a, b, options.tolerance, options.max_iter);
    let (mut log_theta, mut obj) = (min.x, min.fx);
    if values[best] < obj {
        log_theta = grid[best];
        obj = values[best];
    }
    let at_upper = best == m - 1;
    let mut theta = log_theta.exp();

    let zero = profile.evaluate(0.0, method).map_or(f64::INFINITY, |e| -e.log_lik);
    if zero <= obj {
        theta = 0.0;
    }
    let eval = profile
        .evaluate(theta, method)
        .ok_or_else(|| Error::InsufficientData("GLS system is not positive definite".into()))?;
    Ok(assemble(design, eval, theta, method, min.converged && !at_upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ols::ols_fit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn design(rows: Vec<Vec<f64>>, y: Vec<f64>, groups: &[String], names: &[&str]) -> DesignMatrix {
        DesignMatrix::new(names.iter().map(|s| s.to_string()).collect(), &rows, y)
            .unwrap()
            .with_groups(groups)
            .unwrap()
    }

    /// Dense `n × n` Gaussian likelihood, straight from the definition.
    fn dense_loglik(d: &DesignMatrix, theta: f64, method: Method) -> f64 {
        let n = d.n();
        let g = d.groups().unwrap();
        let h = DMatrix::from_fn(n, n, |i, j| {
            f64::from(u8::from(i == j)) + if g[i] == g[j] { theta } else { 0.0 }
        });
        let h_inv = h.clone().try_inverse().unwrap();
        let x = d.x();
        let a = x.transpose() * &h_inv * x;
        let beta = a.clone().try_inverse().unwrap() * x.transpose() * &h_inv * d.y();
        let r = d.y() - x * beta;
        let q = (r.transpose() * &h_inv * &r)[(0, 0)];
        let p = d.p() as f64;
        let nf = n as f64;
        let tp = 2.0 * std::f64::consts::PI;
        match method {
            Method::Ml => -0.5 * (nf * (tp * q / nf).ln() + nf + h.determinant().ln()),
            Method::Reml => {
                -0.5 * ((nf - p) * (tp * q / (nf - p)).ln() + (nf - p) + h.determinant().ln() + a.determinant().ln())
            }
        }
    }

    fn simulated(seed: u64, groups: usize, per: usize, sigma_g: f64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = vec![];
        let mut y = vec![];
        let mut labels = vec![];
        for g in 0..groups {
            let u = sigma_g * noise.sample(&mut rng);
            let n = per + g % 3;
            for _ in 0..n {
                let x: f64 = rng.random_range(0.0..3.0);
                rows.push(vec![1.0, x]);
                y.push(1.0 + 0.5 * x + u + noise.sample(&mut rng));
                labels.push(format!("g{g:02}"));
            }
        }
        design(rows, y, &labels, &["intercept", "x"])
    }

    #[test]
    fn likelihood_matches_dense_oracle() {
        let d = simulated(1, 5, 4, 1.0);
        for theta in [0.0, 0.3, 2.0] {
            for method in [Method::Ml, Method::Reml] {
                let fast = profiled_log_likelihood(&d, theta, method).unwrap();
                let slow = dense_loglik(&d, theta, method);
                assert!((fast - slow).abs() < 1e-8, "{theta} {method:?}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn optimum_beats_grid() {
        for seed in 0..3 {
            let d = simulated(seed, 8, 5, 0.8);
            let fit = lmm_fit(&d, &LmmOptions::default()).unwrap();
            let at = profiled_log_likelihood(&d, fit.theta, Method::Reml).unwrap();
            for i in 0..200 {
                let t = -10.0 + 20.0 * i as f64 / 199.0;
                assert!(at >= profiled_log_likelihood(&d, t.exp(), Method::Reml).unwrap() - 1e-9);
            }
            assert!(fit.converged);
        }
    }

    #[test]
    fn singleton_groups_at_zero_reproduce_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..12).map(|_| vec![1.0, rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[1] * 2.0 + rng.random_range(-0.3..0.3)).collect();
        let labels: Vec<String> = (0..12).map(|i| format!("{i:02}")).collect();
        let d = design(rows, y, &labels, &["intercept", "x"]);
        let lmm = lmm_fit_at(&d, 0.0, Method::Reml).unwrap();
        let ols = ols_fit(&d).unwrap();
        for (a, b) in lmm.fixed_effects.iter().zip(&ols.coefficients) {
            assert!((a.estimate - b.estimate).abs() < 1e-12);
            assert!((a.std_error - b.std_error).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_response() {
        let labels: Vec<String> = (0..8).map(|i| format!("g{}", i % 2)).collect();
        let rows = (0..8).map(|i| vec![1.0, i as f64]).collect();
        let fit = lmm_fit(
            &design(rows, vec![0.0; 8], &labels, &["intercept", "x"]),
            &LmmOptions::default(),
        )
        .unwrap();
        assert!(fit.exact_fit);
        assert_eq!(fit.sigma_resid2, 0.0);
        assert_eq!(fit.sigma_group2, 0.0);
        assert!(fit.fixed_effects.iter().all(|c| c.estimate == 0.0));
    }

    #[test]
    fn needs_two_groups() {
        let labels = vec!["a".to_string(); 4];
        let rows = (0..4).map(|i| vec![1.0, i as f64]).collect();
        let d = design(rows, vec![1.0, 3.0, 2.0, 5.0], &labels, &["intercept", "x"]);
        assert!(lmm_fit(&d, &LmmOptions::default()).is_err());
    }

    #[test]
    fn ml_variance_below_reml() {
        let d = simulated(11, 10, 6, 1.0);
        let reml = lmm_fit(&d, &LmmOptions::default()).unwrap();
        let ml = lmm_fit(
            &d,
            &LmmOptions {
                method: Method::Ml,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(ml.sigma_group2 <= reml.sigma_group2 + 1e-9);
        assert!(ml.sigma_resid2 > 0.0 && reml.sigma_resid2 > 0.0);
    }
}
