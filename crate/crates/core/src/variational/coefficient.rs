use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::geometry::Point;
use crate::variational::VariationalError;

pub type Matrix2 = [[f64; 2]; 2];

/// Named catalog of symmetric elliptic coefficient fields `A(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientField {
    Identity,
    ScaledIdentity(f64),
    /// `[[1.5 + 0.5 sin(pi x), 0.25 cos(pi y)], [0.25 cos(pi y), 1.5 + 0.5 cos(pi x)]]`.
    SmoothAnisotropic,
}

impl CoefficientField {
    pub fn scaled(c: f64) -> Result<Self, VariationalError> {
        if c.is_finite() && c > 0.0 {
            Ok(CoefficientField::ScaledIdentity(c))
        } else {
            Err(VariationalError::InvalidCoefficient(format!(
                "scale must be positive, got {c}"
            )))
        }
    }

    pub fn eval(&self, x: Point) -> Matrix2 {
        match *self {
            CoefficientField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            CoefficientField::ScaledIdentity(c) => [[c, 0.0], [0.0, c]],
            CoefficientField::SmoothAnisotropic => {
                let off = 0.25 * (PI * x[1]).cos();
                [
                    [1.5 + 0.5 * (PI * x[0]).sin(), off],
                    [off, 1.5 + 0.5 * (PI * x[0]).cos()],
                ]
            }
        }
    }

    /// Lower ellipticity bound `alpha`.
    pub fn ellipticity_lower(&self) -> f64 {
        match *self {
            CoefficientField::Identity => 1.0,
            CoefficientField::ScaledIdentity(c) => c,
            // Gershgorin: diagonal in [1, 2], off-diagonal at most 0.25
            CoefficientField::SmoothAnisotropic => 0.75,
        }
    }

    pub fn bound_upper(&self) -> f64 {
        match *self {
            CoefficientField::Identity => 1.0,
            CoefficientField::ScaledIdentity(c) => c,
            CoefficientField::SmoothAnisotropic => 2.25,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CoefficientField::Identity)
            || matches!(self, CoefficientField::ScaledIdentity(c) if *c == 1.0)
    }

    /// `A(x) g`.
    pub fn apply(&self, x: Point, g: Point) -> Point {
        match *self {
            CoefficientField::Identity => g,
            CoefficientField::ScaledIdentity(c) => [c * g[0], c * g[1]],
            CoefficientField::SmoothAnisotropic => {
                let a = self.eval(x);
                [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]]
            }
        }
    }
}

impl fmt::Display for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Identity => f.write_str("identity"),
            CoefficientField::ScaledIdentity(c) => write!(f, "scaled_identity:{c}"),
            CoefficientField::SmoothAnisotropic => f.write_str("anisotropic"),
        }
    }
}

impl FromStr for CoefficientField {
    type Err = VariationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(CoefficientField::Identity),
            "anisotropic" | "smooth_anisotropic" => Ok(CoefficientField::SmoothAnisotropic),
            _ => {
                if let Some(c) = s.strip_prefix("scaled_identity:").or_else(|| s.strip_prefix("scaled:")) {
                    let c: f64 = c
                        .parse()
                        .map_err(|_| VariationalError::InvalidCoefficient(s.to_string()))?;
                    CoefficientField::scaled(c)
                } else {
                    Err(VariationalError::InvalidCoefficient(s.to_string()))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_fields_are_symmetric_and_elliptic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for field in [
            CoefficientField::Identity,
            CoefficientField::ScaledIdentity(2.0),
            CoefficientField::SmoothAnisotropic,
        ] {
            for _ in 0..500 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                let a = field.eval(x);
                assert!((a[0][1] - a[1][0]).abs() <= 1e-14);
                let xi = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
                let n2 = xi[0] * xi[0] + xi[1] * xi[1];
                let ax = field.apply(x, xi);
                let q = xi[0] * ax[0] + xi[1] * ax[1];
                assert!(q >= field.ellipticity_lower() * n2 - 1e-14);
                assert!(q <= field.bound_upper() * n2 + 1e-14);
            }
        }
    }

    #[test]
    fn parses_catalog_names() {
        assert_eq!("identity".parse::<CoefficientField>().unwrap(), CoefficientField::Identity);
        assert_eq!(
            "scaled_identity:2".parse::<CoefficientField>().unwrap(),
            CoefficientField::ScaledIdentity(2.0)
        );
        assert!("scaled:-1".parse::<CoefficientField>().is_err());
        assert!("x^2+1".parse::<CoefficientField>().is_err());
    }
}
