//! Reference-element quadrature rules.
//!
//! Rules are stored on the reference element: `[0, 1]` for segments, the unit
//! right triangle `(0,0), (1,0), (0,1)` for triangles, and `[0, 1]^2` for polar
//! quads (tensor Gauss). One-dimensional points carry `0.0` in the second slot.

use crate::geometry::Point;

/// Shape of the reference element a rule lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceShape {
    Segment,
    Triangle,
    Square,
}

impl ReferenceShape {
    pub fn measure(self) -> f64 {
        match self {
            ReferenceShape::Segment | ReferenceShape::Square => 1.0,
            ReferenceShape::Triangle => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub shape: ReferenceShape,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly (per variable for tensor rules).
    pub exactness_degree: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `n`-point Gauss-Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre_nodes(n);
        QuadratureRule {
            shape: ReferenceShape::Segment,
            points: nodes.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
            weights: weights.iter().map(|w| 0.5 * w).collect(),
            exactness_degree: (2 * n - 1) as u32,
        }
    }

    /// Symmetric 6-point rule on the reference triangle, degree 4.
    pub fn triangle_degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886_32;
        const W1: f64 = 0.223_381_589_678_011_465_70;
        const A2: f64 = 0.091_576_213_509_770_743_46;
        const W2: f64 = 0.109_951_743_655_321_867_64;
        let b1 = 1.0 - 2.0 * A1;
        let b2 = 1.0 - 2.0 * A2;
        let points = vec![
            [A1, A1],
            [b1, A1],
            [A1, b1],
            [A2, A2],
            [b2, A2],
            [A2, b2],
        ];
        let weights = [W1, W1, W1, W2, W2, W2].iter().map(|w| 0.5 * w).collect();
        QuadratureRule {
            shape: ReferenceShape::Triangle,
            points,
            weights,
            exactness_degree: 4,
        }
    }

    /// Tensor product of two `n`-point Gauss rules on `[0, 1]^2`.
    pub fn tensor_gauss(n: usize) -> Self {
        let line = Self::gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (pj, wj) in line.points.iter().zip(&line.weights) {
            for (pi, wi) in line.points.iter().zip(&line.weights) {
                points.push([pi[0], pj[0]]);
                weights.push(wi * wj);
            }
        }
        QuadratureRule {
            shape: ReferenceShape::Square,
            points,
            weights,
            exactness_degree: line.exactness_degree,
        }
    }

    /// Applies `f` at every reference point and sums with the weights.
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Exact integral of `x^a y^b` over the reference element.
pub fn monomial_integral(shape: ReferenceShape, a: u32, b: u32) -> f64 {
    match shape {
        ReferenceShape::Segment => {
            if b == 0 {
                1.0 / (a as f64 + 1.0)
            } else {
                0.0
            }
        }
        ReferenceShape::Square => 1.0 / ((a as f64 + 1.0) * (b as f64 + 1.0)),
        ReferenceShape::Triangle => {
            factorial(a) * factorial(b) / factorial(a + b + 2)
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Largest relative error of `rule` over all monomials up to its exactness degree.
pub fn exactness_defect(rule: &QuadratureRule) -> f64 {
    let deg = rule.exactness_degree;
    let mut worst = 0.0_f64;
    for a in 0..=deg {
        let b_max = match rule.shape {
            ReferenceShape::Segment => 0,
            ReferenceShape::Triangle => deg - a,
            ReferenceShape::Square => deg,
        };
        for b in 0..=b_max {
            let exact = monomial_integral(rule.shape, a, b);
            let approx = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
            worst = worst.max((approx - exact).abs() / exact.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss3_matches_closed_form() {
        let (x, w) = gauss_legendre_nodes(3);
        let s = (0.6_f64).sqrt();
        assert!((x[0] + s).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - s).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for rule in [
            QuadratureRule::gauss_legendre(3),
            QuadratureRule::triangle_degree4(),
            QuadratureRule::tensor_gauss(3),
            QuadratureRule::tensor_gauss(12),
        ] {
            assert!((rule.weight_sum() - rule.shape.measure()).abs() < 1e-14);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn rules_are_exact_to_their_degree() {
        for rule in [
            QuadratureRule::gauss_legendre(3),
            QuadratureRule::gauss_legendre(12),
            QuadratureRule::triangle_degree4(),
            QuadratureRule::tensor_gauss(3),
        ] {
            assert!(exactness_defect(&rule) < 1e-13, "{:?}", rule.shape);
        }
    }

    #[test]
    fn corrupted_rule_is_detected() {
        let mut rule = QuadratureRule::triangle_degree4();
        rule.weights[2] *= 1.01;
        assert!(exactness_defect(&rule) > 1e-4);
    }
}
