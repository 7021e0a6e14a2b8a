use nalgebra::DVector;

use super::{Gradients, ModelParams};
use crate::error::{Error, Result};

/// All activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    /// Gate, `σ(W_g x1 + b_g)`.
    pub gate: DVector<f64>,
    /// Gated second word, `gate ⊙ x2`.
    pub gated: DVector<f64>,
    pub z1: DVector<f64>,
    pub z2: DVector<f64>,
    pub hidden: DVector<f64>,
    /// Output score in (0, 1).
    pub score: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn forward(params: &ModelParams, x1: &[f64], x2: &[f64]) -> Result<ForwardTrace> {
    let e = params.dims.embedding;
    for x in [x1, x2] {
        if x.len() != e {
            return Err(Error::DimensionMismatch {
                expected: e,
                found: x.len(),
            });
        }
    }
    let x1 = DVector::from_column_slice(x1);
    let x2 = DVector::from_column_slice(x2);

    let gate = (&params.gate_weight * &x1 + &params.gate_bias).map(sigmoid);
    let gated = gate.component_mul(&x2);
    let z1 = (&params.first_weight * &x1 + &params.first_bias).map(f64::tanh);
    let z2 = (&params.second_weight * &gated + &params.second_bias).map(f64::tanh);
    let hidden = (&params.hidden_weight * z1.component_mul(&z2) + &params.hidden_bias).map(f64::tanh);
    let score = sigmoid(params.output_weight.dot(&hidden) + params.output_bias);

    Ok(ForwardTrace {
        x1,
        x2,
        gate,
        gated,
        z1,
        z2,
        hidden,
        score,
    })
}

/// `max(0, margin − (2·label − 1)·(score − 0.5))`
pub fn hinge_loss(score: f64, label: bool, margin: f64) -> f64 {
    let sign = if label { 1.0 } else { -1.0 };
    (margin - sign * (score - 0.5)).max(0.0)
}

/// One training example: embeddings of the governor and the noun, and the label.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub x1: &'a [f64],
    pub x2: &'a [f64],
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    pub grads: Gradients,
    /// Examples inside the margin band (non-zero loss).
    pub active: usize,
}

/// Summed hinge loss over a batch and its exact gradient with respect to
/// every trainable tensor. Examples with zero loss contribute nothing.
pub fn batch_loss_and_grads(params: &ModelParams, batch: &[Example<'_>], margin: f64) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut grads = ModelParams::zeros(params.dims);
    let mut loss = 0.0;
    let mut active = 0;
    for ex in batch {
        let trace = forward(params, ex.x1, ex.x2)?;
        let l = hinge_loss(trace.score, ex.label, margin);
        if l <= 0.0 {
            continue;
        }
        loss += l;
        active += 1;
        let sign = if ex.label { 1.0 } else { -1.0 };
        accumulate_backward(params, &trace, -sign, &mut grads);
    }
    Ok(BatchLoss { loss, grads, active })
}

/// Backpropagates `d_score` (dℓ/dỹ) through the trace into `grads`.
fn accumulate_backward(params: &ModelParams, t: &ForwardTrace, d_score: f64, grads: &mut Gradients) {
    let d_out = d_score * t.score * (1.0 - t.score);
    grads.output_bias += d_out;
    grads.output_weight.axpy(d_out, &t.hidden, 1.0);

    let d_hidden_pre = (&params.output_weight * d_out).component_mul(&t.hidden.map(|h| 1.0 - h * h));
    let product = t.z1.component_mul(&t.z2);
    grads.hidden_bias += &d_hidden_pre;
    grads.hidden_weight.ger(1.0, &d_hidden_pre, &product, 1.0);

    let d_product = params.hidden_weight.tr_mul(&d_hidden_pre);
    let d_z1_pre = d_product.component_mul(&t.z2).component_mul(&t.z1.map(|z| 1.0 - z * z));
    let d_z2_pre = d_product.component_mul(&t.z1).component_mul(&t.z2.map(|z| 1.0 - z * z));

    grads.first_bias += &d_z1_pre;
    grads.first_weight.ger(1.0, &d_z1_pre, &t.x1, 1.0);
    grads.second_bias += &d_z2_pre;
    grads.second_weight.ger(1.0, &d_z2_pre, &t.gated, 1.0);

    let d_gated = params.second_weight.tr_mul(&d_z2_pre);
    let d_gate_pre = d_gated
        .component_mul(&t.x2)
        .component_mul(&t.gate.map(|g| g * (1.0 - g)));
    grads.gate_bias += &d_gate_pre;
    grads.gate_weight.ger(1.0, &d_gate_pre, &t.x1, 1.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Dims;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_params_give_half() {
        let p = ModelParams::zeros(Dims::new(3, 4, 2).unwrap());
        let t = forward(&p, &[1.0, -2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap();
        assert!(t.gate.iter().all(|&g| g == 0.5));
        assert!(t.z1.iter().chain(t.z2.iter()).all(|&z| z == 0.0));
        assert!(t.hidden.iter().all(|&d| d == 0.0));
        assert_eq!(t.score, 0.5);
    }

    #[test]
    fn scalar_hand_computation() {
        // E = Z = D = 1, all weights one, biases zero, x1 = x2 = 1.
        let mut p = ModelParams::zeros(Dims::new(1, 1, 1).unwrap());
        p.gate_weight[(0, 0)] = 1.0;
        p.first_weight[(0, 0)] = 1.0;
        p.second_weight[(0, 0)] = 1.0;
        p.hidden_weight[(0, 0)] = 1.0;
        p.output_weight[0] = 1.0;
        let t = forward(&p, &[1.0], &[1.0]).unwrap();

        let g = 1.0 / (1.0 + (-1.0f64).exp());
        let z1 = 1.0f64.tanh();
        let z2 = g.tanh();
        let d = (z1 * z2).tanh();
        let y = 1.0 / (1.0 + (-d).exp());
        assert!((g - 0.731059).abs() < 1e-6);
        assert!((z1 - 0.761594).abs() < 1e-6);
        assert!((z2 - 0.623713).abs() < 1e-6);
        assert!((d - 0.442243).abs() < 1e-6);
        assert!((y - 0.608793).abs() < 1e-6);

        assert_eq!(t.gate[0], g);
        assert_eq!(t.gated[0], g);
        assert_eq!(t.z1[0], z1);
        assert_eq!(t.z2[0], z2);
        assert_eq!(t.hidden[0], d);
        assert!((t.score - y).abs() < 1e-15);
    }

    #[test]
    fn zero_second_word_annihilates_gate() {
        let p = ModelParams::init_seeded(Dims::new(4, 3, 2).unwrap(), 9, 0.5).unwrap();
        let t = forward(&p, &[1.0, 2.0, -1.0, 0.3], &[0.0; 4]).unwrap();
        assert!(t.gated.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let p = ModelParams::zeros(Dims::new(3, 2, 2).unwrap());
        assert!(matches!(
            forward(&p, &[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn hinge_cases() {
        assert_eq!(hinge_loss(0.95, true, 0.4), 0.0);
        assert!((hinge_loss(0.5, false, 0.4) - 0.4).abs() < 1e-15);
        // exactly on the margin: inactive
        assert_eq!(hinge_loss(0.9, true, 0.4), 0.0f64.max(0.4 - 0.4));
    }

    #[test]
    fn inactive_examples_have_zero_gradient() {
        let mut p = ModelParams::zeros(Dims::new(2, 2, 1).unwrap());
        p.output_bias = 10.0; // score ≈ 1
        let x = [0.3, -0.2];
        let out = batch_loss_and_grads(
            &p,
            &[Example {
                x1: &x,
                x2: &x,
                label: true,
            }],
            0.4,
        )
        .unwrap();
        assert_eq!(out.active, 0);
        assert_eq!(out.loss, 0.0);
        assert!(out.grads.groups().iter().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn empty_batch_rejected() {
        let p = ModelParams::zeros(Dims::new(2, 2, 1).unwrap());
        assert!(batch_loss_and_grads(&p, &[], 0.4).is_err());
    }

    // Central finite differences over every parameter entry.
    fn finite_difference(params: &ModelParams, ex: &Example<'_>, margin: f64, h: f64) -> ModelParams {
        let mut grads = ModelParams::zeros(params.dims);
        let mut probe = params.clone();
        for gi in 0..10 {
            let len = params.groups()[gi].len();
            for k in 0..len {
                let orig = params.groups()[gi][k];
                probe.groups_mut()[gi][k] = orig + h;
                let up = hinge_loss(forward(&probe, ex.x1, ex.x2).unwrap().score, ex.label, margin);
                probe.groups_mut()[gi][k] = orig - h;
                let down = hinge_loss(forward(&probe, ex.x1, ex.x2).unwrap().score, ex.label, margin);
                probe.groups_mut()[gi][k] = orig;
                grads.groups_mut()[gi][k] = (up - down) / (2.0 * h);
            }
        }
        grads
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dims = Dims::new(4, 5, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10 {
            let p = ModelParams::init(dims, 0.8, &mut rng).unwrap();
            let x1: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x2: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ex = Example {
                x1: &x1,
                x2: &x2,
                label: trial % 2 == 0,
            };
            let analytic = batch_loss_and_grads(&p, &[ex], 0.4).unwrap();
            assert_eq!(analytic.active, 1);
            let numeric = finite_difference(&p, &ex, 0.4, 1e-5);
            for (gi, (a, n)) in analytic.grads.groups().iter().zip(numeric.groups()).enumerate() {
                let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                assert!(diff / scale < 1e-4, "group {gi} rel err {}", diff / scale);
            }
        }
    }
}
