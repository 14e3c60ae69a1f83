//! Parameter updates: plain SGD or SGD with momentum, after optional
//! global-norm clipping.

use super::grad::Gradients;
use super::TrainConfig;
use crate::encoder::SiameseEncoderParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    SgdMomentum,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::SgdMomentum => "momentum",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Some(OptimizerKind::Sgd),
            "momentum" | "sgd-momentum" | "sgdmomentum" => Some(OptimizerKind::SgdMomentum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    momentum: f64,
    clip_norm: Option<f64>,
    velocity: Option<Gradients>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, momentum: f64, clip_norm: Option<f64>) -> Self {
        Self {
            kind,
            learning_rate,
            momentum,
            clip_norm,
            velocity: None,
        }
    }

    pub fn from_config(config: &TrainConfig) -> Self {
        Self::new(config.optimizer, config.learning_rate, config.momentum, config.clip_norm)
    }

    /// Factor applied to `grads` by clipping (1 when no clipping happens).
    pub fn clip_scale(&self, grads: &Gradients) -> f64 {
        match self.clip_norm {
            Some(max) => {
                let n = grads.global_norm();
                if n > max {
                    max / n
                } else {
                    1.0
                }
            }
            None => 1.0,
        }
    }

    pub fn step(&mut self, params: &mut SiameseEncoderParams, grads: &Gradients) -> Result<()> {
        if params.dims() != grads.dims() {
            return Err(Error::ShapeMismatch("gradients"));
        }
        if let Some(block) = grads.first_non_finite() {
            return Err(Error::NonFinite(block));
        }
        let scale = self.clip_scale(grads);
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                let step = lr * scale;
                for (p, g) in params.blocks_mut().into_iter().zip(grads.blocks()) {
                    for (w, &gv) in p.values.iter_mut().zip(g.values) {
                        *w -= step * gv;
                    }
                }
            }
            OptimizerKind::SgdMomentum => {
                let mu = self.momentum;
                let velocity = self
                    .velocity
                    .get_or_insert_with(|| Gradients::zeros(grads.dims()));
                for ((p, g), v) in params
                    .blocks_mut()
                    .into_iter()
                    .zip(grads.blocks())
                    .zip(velocity.blocks_mut())
                {
                    for ((w, &gv), vv) in p.values.iter_mut().zip(g.values).zip(v.values.iter_mut()) {
                        *vv = mu * *vv + scale * gv;
                        *w -= lr * *vv;
                    }
                }
            }
        }
        Ok(())
    }
}

/// One stateless update as configured (momentum starts from zero velocity).
pub fn optimizer_step(
    params: &mut SiameseEncoderParams,
    grads: &Gradients,
    config: &TrainConfig,
) -> Result<()> {
    Optimizer::from_config(config).step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{init_params, EncoderDims};

    fn setup() -> (SiameseEncoderParams, Gradients) {
        let p = init_params(EncoderDims::new(3, 2, 2, 2), 1).unwrap();
        let g = Gradients::zeros(p.dims());
        (p, g)
    }

    #[test]
    fn sgd_arithmetic() {
        let (mut p, mut g) = setup();
        p.blocks_mut()[8].values[0] = 1.0;
        g.blocks_mut()[8].values[0] = 0.5;
        Optimizer::new(OptimizerKind::Sgd, 0.1, 0.0, None).step(&mut p, &g).unwrap();
        assert_eq!(p.dense_bias()[0], 0.95);
    }

    #[test]
    fn zero_gradients_leave_params_bit_identical() {
        let (mut p, g) = setup();
        let before = p.clone();
        Optimizer::new(OptimizerKind::Sgd, 0.1, 0.0, Some(1.0)).step(&mut p, &g).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn clipping_scales_gradients() {
        let (mut p, mut g) = setup();
        p.blocks_mut()[8].values.fill(0.0);
        g.blocks_mut()[8].values[0] = 6.0;
        g.blocks_mut()[8].values[1] = 8.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 1.0, 0.0, Some(1.0));
        assert!((opt.clip_scale(&g) - 0.1).abs() < 1e-15);
        opt.step(&mut p, &g).unwrap();
        assert!((p.dense_bias()[0] + 0.6).abs() < 1e-15);
        assert!((p.dense_bias()[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn momentum_accumulates_velocity() {
        let (mut p, mut g) = setup();
        p.blocks_mut()[8].values[0] = 0.0;
        g.blocks_mut()[8].values[0] = 1.0;
        let mut opt = Optimizer::new(OptimizerKind::SgdMomentum, 0.1, 0.9, None);
        opt.step(&mut p, &g).unwrap();
        assert!((p.dense_bias()[0] + 0.1).abs() < 1e-15);
        opt.step(&mut p, &g).unwrap();
        assert!((p.dense_bias()[0] + 0.1 + 0.19).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let (mut p, _) = setup();
        let g = Gradients::zeros(EncoderDims::new(4, 2, 2, 2));
        assert_eq!(
            Optimizer::new(OptimizerKind::Sgd, 0.1, 0.0, None).step(&mut p, &g),
            Err(Error::ShapeMismatch("gradients"))
        );
    }
}
