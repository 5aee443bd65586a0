//! Coefficient regularization and displacement smoothness.

use crate::model::{CoeffGrad, CoeffVector};
use crate::objective::LossWeights;

/// `w_id ||b_id||^2 + w_exp ||b_exp||^2 + w_alb ||b_alb||^2`.
pub fn reg_loss(coeffs: &CoeffVector, weights: &LossWeights) -> f64 {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    weights.reg_id * sq(&coeffs.beta_id) + weights.reg_exp * sq(&coeffs.beta_exp) + weights.reg_alb * sq(&coeffs.beta_alb)
}

/// Accumulates `g * d reg_loss / d coeffs` into `grad`.
pub fn reg_loss_vjp(coeffs: &CoeffVector, weights: &LossWeights, g: f64, grad: &mut CoeffGrad) {
    for (dst, src, w) in [
        (&mut grad.beta_id, &coeffs.beta_id, weights.reg_id),
        (&mut grad.beta_exp, &coeffs.beta_exp, weights.reg_exp),
        (&mut grad.beta_alb, &coeffs.beta_alb, weights.reg_alb),
    ] {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += 2.0 * g * w * s;
        }
    }
}

/// Smoothing scale of the total-variation penalty, in displacement units.
pub const TV_DELTA: f64 = 1e-4;

#[inline]
fn charbonnier(d: f64) -> f64 {
    let s = d * d;
    s / ((s + TV_DELTA * TV_DELTA).sqrt() + TV_DELTA)
}

#[inline]
fn charbonnier_grad(d: f64) -> f64 {
    d / (d * d + TV_DELTA * TV_DELTA).sqrt()
}

/// Anisotropic total variation of a square grid with Charbonnier-smoothed
/// absolute differences `sqrt(d^2 + delta^2) - delta`, summed over all
/// horizontal and vertical neighbor pairs.
pub fn tv_loss(disp: &[f64], size: usize) -> f64 {
    let mut sum = 0.0;
    for r in 0..size {
        for c in 0..size {
            let t = r * size + c;
            if c + 1 < size {
                sum += charbonnier(disp[t + 1] - disp[t]);
            }
            if r + 1 < size {
                sum += charbonnier(disp[t + size] - disp[t]);
            }
        }
    }
    sum
}

/// Accumulates `g * d tv_loss / d disp` into `grad`.
pub fn tv_loss_vjp(disp: &[f64], size: usize, g: f64, grad: &mut [f64]) {
    for r in 0..size {
        for c in 0..size {
            let t = r * size + c;
            if c + 1 < size {
                let d = g * charbonnier_grad(disp[t + 1] - disp[t]);
                grad[t + 1] += d;
                grad[t] -= d;
            }
            if r + 1 < size {
                let d = g * charbonnier_grad(disp[t + size] - disp[t]);
                grad[t + size] += d;
                grad[t] -= d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_unit_coefficients() {
        let w = LossWeights::default();
        let mut c = CoeffVector::zeros(3, 2, 2);
        assert_eq!(reg_loss(&c, &w), 0.0);
        c.beta_id[0] = 1.0;
        assert_eq!(reg_loss(&c, &w), 1.0);
    }

    #[test]
    fn matches_loop_and_gradient() {
        let w = LossWeights::default();
        let mut c = CoeffVector::zeros(4, 3, 5);
        for (i, v) in c.beta_id.iter_mut().enumerate() {
            *v = i as f64 * 0.3 - 0.5;
        }
        for (i, v) in c.beta_exp.iter_mut().enumerate() {
            *v = (i as f64).sin();
        }
        for (i, v) in c.beta_alb.iter_mut().enumerate() {
            *v = 2.0 - i as f64;
        }
        let mut e = 0.0;
        for v in &c.beta_id {
            e += w.reg_id * v * v;
        }
        for v in &c.beta_exp {
            e += w.reg_exp * v * v;
        }
        for v in &c.beta_alb {
            e += w.reg_alb * v * v;
        }
        assert!((reg_loss(&c, &w) - e).abs() < 1e-15);
        let mut g = CoeffVector::zeros(4, 3, 5);
        reg_loss_vjp(&c, &w, 1.0, &mut g);
        assert_eq!(g.beta_alb[0], 2.0 * w.reg_alb * 2.0);
    }

    #[test]
    fn tv_is_zero_on_constants_and_matches_finite_differences() {
        assert_eq!(tv_loss(&[0.3; 16], 4), 0.0);
        let d: Vec<f64> = (0..25).map(|i| (i as f64 * 0.9).sin() * 1e-2).collect();
        let mut g = vec![0.0; 25];
        tv_loss_vjp(&d, 5, 1.0, &mut g);
        let h = 1e-8;
        for i in 0..25 {
            let mut a = d.clone();
            let mut b = d.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (tv_loss(&a, 5) - tv_loss(&b, 5)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }
}
