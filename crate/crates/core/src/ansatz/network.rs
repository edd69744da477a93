//! Fully-connected networks `x -> T_L(rho(T_{L-1}(... rho(T_1 x))))` with a linear output layer.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::tape::GradientTape;
use crate::ansatz::AnsatzError;
use crate::geometry::{DiscreteFunction, Eval, Located, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    /// `(rho(z), rho'(z), rho''(z))`; the relu derivative at the kink is 0.
    #[inline]
    pub fn eval(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

/// Layer widths `N_0 = d, ..., N_L = 1` and the hidden activation,
/// written as `"1-16-16-1:tanh"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self, AnsatzError> {
        if widths.len() < 2 {
            return Err(AnsatzError::Config("architecture needs at least input and output layers".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(AnsatzError::Config("layer widths must be positive".into()));
        }
        if *widths.last().unwrap() != 1 {
            return Err(AnsatzError::Config("output width must be 1".into()));
        }
        if widths[0] > 2 {
            return Err(AnsatzError::Config("input dimension must be 1 or 2".into()));
        }
        Ok(Architecture { widths, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// `sum_l N_l N_{l-1} + N_l`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Offset of layer `l`'s weight block (row-major `N_l x N_{l-1}`), followed by its biases.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.depth());
        let mut o = 0;
        for w in self.widths.windows(2) {
            offs.push(o);
            o += w[1] * w[0] + w[1];
        }
        offs
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(f, "{}:{}", w.join("-"), self.activation)
    }
}

impl FromStr for Architecture {
    type Err = AnsatzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (widths, act) = s
            .split_once(':')
            .ok_or_else(|| AnsatzError::Config(format!("architecture `{s}` lacks `:activation`")))?;
        let activation = match act.trim() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => return Err(AnsatzError::Config(format!("unknown activation `{other}`"))),
        };
        let widths = widths
            .split('-')
            .map(|w| {
                w.trim()
                    .parse::<usize>()
                    .map_err(|_| AnsatzError::Config(format!("bad layer width `{w}` in `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Architecture::new(widths, activation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFamily {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub seed: u64,
}

impl NetworkFamily {
    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        for w in arch.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        NetworkFamily { arch, params, seed }
    }

    pub fn with_params(arch: Architecture, params: Vec<f64>) -> Result<Self, AnsatzError> {
        if params.len() != arch.param_count() {
            return Err(AnsatzError::Config(format!(
                "architecture {arch} has {} parameters, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        Ok(NetworkFamily {
            arch,
            params,
            seed: 0,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Weight matrix and bias slices of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let offs = self.arch.layer_offsets();
        let (n_in, n_out) = (self.arch.widths[l], self.arch.widths[l + 1]);
        let o = offs[l];
        (
            &self.params[o..o + n_in * n_out],
            &self.params[o + n_in * n_out..o + n_in * n_out + n_out],
        )
    }
}

impl DiscreteFunction for NetworkFamily {
    fn eval(&self, at: &Located) -> Eval {
        GradientTape::record(self, &[at.x]).output(0)
    }
}

/// Values and spatial gradients at `points`.
pub fn eval_network(fam: &NetworkFamily, points: &[Point]) -> Result<Vec<Eval>, AnsatzError> {
    if fam.params.len() != fam.arch.param_count() {
        return Err(AnsatzError::Config(format!(
            "parameter vector has length {}, architecture {} needs {}",
            fam.params.len(),
            fam.arch,
            fam.arch.param_count()
        )));
    }
    let tape = GradientTape::record(fam, points);
    let out: Vec<Eval> = (0..points.len()).map(|i| tape.output(i)).collect();
    if let Some((i, _)) = out
        .iter()
        .enumerate()
        .find(|(_, e)| !e.value.is_finite() || !e.grad.iter().all(|g| g.is_finite()))
    {
        return Err(AnsatzError::NumericalFailure { point: points[i] });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let a: Architecture = "1-16-16-1:tanh".parse().unwrap();
        assert_eq!(a.widths, vec![1, 16, 16, 1]);
        assert_eq!(a.activation, Activation::Tanh);
        assert_eq!(a.to_string(), "1-16-16-1:tanh");
        assert_eq!(a.param_count(), 16 + 16 + 256 + 16 + 16 + 1);
        assert!("1-16-2:tanh".parse::<Architecture>().is_err());
        assert!("1-16-1".parse::<Architecture>().is_err());
        assert!("1-16-1:sigmoid".parse::<Architecture>().is_err());
        assert!("3-4-1:relu".parse::<Architecture>().is_err());
    }

    #[test]
    fn relu_unit_network() {
        // u(x) = 1 * relu(1 * x + 0) + 0
        let arch: Architecture = "1-1-1:relu".parse().unwrap();
        let fam = NetworkFamily::with_params(arch, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let out = eval_network(&fam, &[[0.5, 0.0], [-0.5, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!((out[0].value, out[0].grad[0]), (0.5, 1.0));
        assert_eq!((out[1].value, out[1].grad[0]), (0.0, 0.0));
        assert_eq!(out[2].grad[0], 0.0);
    }

    #[test]
    fn parameter_mismatch_is_a_config_error() {
        let arch: Architecture = "1-4-1:tanh".parse().unwrap();
        assert!(NetworkFamily::with_params(arch.clone(), vec![0.0; 3]).is_err());
        let mut fam = NetworkFamily::init(arch, 1);
        fam.params.pop();
        assert!(matches!(eval_network(&fam, &[[0.1, 0.0]]), Err(AnsatzError::Config(_))));
    }

    #[test]
    fn nan_parameters_report_the_point() {
        let arch: Architecture = "1-3-1:tanh".parse().unwrap();
        let mut fam = NetworkFamily::init(arch, 2);
        let last = fam.params.len() - 1;
        fam.params[last] = f64::NAN;
        match eval_network(&fam, &[[0.25, 0.0]]) {
            Err(AnsatzError::NumericalFailure { point }) => assert_eq!(point, [0.25, 0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn glorot_init_is_seeded_and_bounded() {
        let arch: Architecture = "2-8-8-1:tanh".parse().unwrap();
        let a = NetworkFamily::init(arch.clone(), 42);
        let b = NetworkFamily::init(arch.clone(), 42);
        let c = NetworkFamily::init(arch.clone(), 43);
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
        let (w, bias) = a.layer(1);
        let limit = (6.0_f64 / 16.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= limit));
        assert!(bias.iter().all(|&v| v == 0.0));
    }
}
