use super::ModelParams;
use crate::error::{Error, Result};

/// AdaDelta (Zeiler, 2012):
///
/// ```text
/// E[g²]  ← ρ·E[g²] + (1−ρ)·g²
/// Δx     = −√(E[Δx²] + ε) / √(E[g²] + ε) · g
/// E[Δx²] ← ρ·E[Δx²] + (1−ρ)·Δx²
/// x      ← x + Δx
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDelta {
    pub rho: f64,
    pub eps: f64,
    sq_grad: Vec<Vec<f64>>,
    sq_update: Vec<Vec<f64>>,
}

impl AdaDelta {
    /// Zero accumulators shaped like `params`.
    pub fn new(params: &ModelParams, rho: f64, eps: f64) -> Self {
        let shapes: Vec<Vec<f64>> = params.groups().iter().map(|g| vec![0.0; g.len()]).collect();
        AdaDelta {
            rho,
            eps,
            sq_grad: shapes.clone(),
            sq_update: shapes,
        }
    }

    /// Running averages of squared gradients, per parameter group.
    pub fn sq_grad(&self) -> &[Vec<f64>] {
        &self.sq_grad
    }

    /// Running averages of squared updates, per parameter group.
    pub fn sq_update(&self) -> &[Vec<f64>] {
        &self.sq_update
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        let shapes_match = params.dims == grads.dims
            && self
                .sq_grad
                .iter()
                .zip(params.groups())
                .all(|(s, g)| s.len() == g.len());
        if !shapes_match {
            return Err(Error::DimensionMismatch {
                expected: self.sq_grad.iter().map(Vec::len).sum(),
                found: grads.parameter_count(),
            });
        }
        let (rho, eps) = (self.rho, self.eps);
        for (((p, g), eg), ex) in params
            .groups_mut()
            .into_iter()
            .zip(grads.groups())
            .zip(self.sq_grad.iter_mut())
            .zip(self.sq_update.iter_mut())
        {
            for i in 0..p.len() {
                eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
                let dx = -((ex[i] + eps).sqrt() / (eg[i] + eps).sqrt()) * g[i];
                ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
                p[i] += dx;
            }
        }
        Ok(())
    }
}
