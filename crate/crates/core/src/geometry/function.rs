use crate::geometry::mesh::{DomainKind, DomainMesh, Located};
use crate::geometry::Point;

/// Value and spatial gradient of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Eval {
    pub value: f64,
    pub grad: Point,
}

impl Eval {
    pub fn new(value: f64, grad: Point) -> Self {
        Eval { value, grad }
    }

    pub fn zero() -> Self {
        Eval::default()
    }
}

/// A member of `H^1` as seen by the quadrature: value and gradient at located points.
pub trait DiscreteFunction: Sync {
    fn eval(&self, at: &Located) -> Eval;

    fn domain_kind(&self) -> Option<DomainKind> {
        None
    }
}

impl<T: DiscreteFunction + ?Sized> DiscreteFunction for &T {
    fn eval(&self, at: &Located) -> Eval {
        (**self).eval(at)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        (**self).domain_kind()
    }
}

impl<T: DiscreteFunction + ?Sized> DiscreteFunction for Box<T> {
    fn eval(&self, at: &Located) -> Eval {
        (**self).eval(at)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        (**self).domain_kind()
    }
}

/// A closed-form function `x -> (u(x), grad u(x))`.
pub struct Analytic<F> {
    kind: Option<DomainKind>,
    f: F,
}

impl<F> Analytic<F>
where
    F: Fn(Point) -> Eval + Sync,
{
    pub fn new(kind: DomainKind, f: F) -> Self {
        Analytic { kind: Some(kind), f }
    }

    pub fn anywhere(f: F) -> Self {
        Analytic { kind: None, f }
    }
}

impl<F> DiscreteFunction for Analytic<F>
where
    F: Fn(Point) -> Eval + Sync,
{
    fn eval(&self, at: &Located) -> Eval {
        (self.f)(at.x)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        self.kind
    }
}

/// The constant function.
pub struct Constant(pub f64);

impl DiscreteFunction for Constant {
    fn eval(&self, _at: &Located) -> Eval {
        Eval::new(self.0, [0.0, 0.0])
    }
}

/// `a * u + b * v`, evaluated pointwise.
pub struct Combination<U, V> {
    pub a: f64,
    pub u: U,
    pub b: f64,
    pub v: V,
}

impl<U: DiscreteFunction, V: DiscreteFunction> DiscreteFunction for Combination<U, V> {
    fn eval(&self, at: &Located) -> Eval {
        let (eu, ev) = (self.u.eval(at), self.v.eval(at));
        Eval::new(
            self.a * eu.value + self.b * ev.value,
            [
                self.a * eu.grad[0] + self.b * ev.grad[0],
                self.a * eu.grad[1] + self.b * ev.grad[1],
            ],
        )
    }
}

/// `u - v`.
pub fn difference<U: DiscreteFunction, V: DiscreteFunction>(u: U, v: V) -> Combination<U, V> {
    Combination {
        a: 1.0,
        u,
        b: -1.0,
        v,
    }
}

/// Compares the reported gradient of `u` with central differences of its value
/// at each of `points`; returns the worst relative error
/// `|g - g_fd| / max(|g_fd|, 1)` over all points and components.
///
/// Shifted points are re-located on `mesh` so finite-element functions are
/// evaluated in the right cell; points should stay `step` away from cell
/// boundaries for piecewise functions.
pub fn check_gradient_field<U: DiscreteFunction + ?Sized>(
    u: &U,
    mesh: &DomainMesh,
    points: &[Point],
    step: f64,
) -> f64 {
    let at = |x: Point| match mesh.locate(x) {
        Some((cell, local)) => Located {
            x,
            cell: Some(cell),
            local,
        },
        None => Located::free(x),
    };
    let dim = mesh.kind.dim();
    let mut worst = 0.0_f64;
    for &x in points {
        let g = u.eval(&at(x)).grad;
        for k in 0..dim {
            let mut xp = x;
            let mut xm = x;
            xp[k] += step;
            xm[k] -= step;
            let fd = (u.eval(&at(xp)).value - u.eval(&at(xm)).value) / (2.0 * step);
            worst = worst.max((g[k] - fd).abs() / fd.abs().max(1.0));
        }
    }
    worst
}
