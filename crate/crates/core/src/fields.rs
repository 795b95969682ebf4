//! Scalar test functions with optional analytic second derivatives.

use std::f64::consts::PI;

use crate::geometry::Point2;

pub trait ScalarField: Sync {
    fn value(&self, p: Point2) -> f64;

    /// `(d11, d22)` when known analytically.
    fn second_derivatives(&self, _p: Point2) -> Option<(f64, f64)> {
        None
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }

    fn second_derivatives(&self, p: Point2) -> Option<(f64, f64)> {
        (**self).second_derivatives(p)
    }
}

/// Wraps a closure as a field without derivatives.
#[derive(Debug, Clone, Copy)]
pub struct FnField<F>(pub F);

impl<F: Fn(Point2) -> f64 + Sync> ScalarField for FnField<F> {
    fn value(&self, p: Point2) -> f64 {
        (self.0)(p)
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ScalarField for Zero {
    fn value(&self, _p: Point2) -> f64 {
        0.0
    }

    fn second_derivatives(&self, _p: Point2) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// `q(x) = |x|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl ScalarField for Quadratic {
    fn value(&self, p: Point2) -> f64 {
        p.x * p.x + p.y * p.y
    }

    fn second_derivatives(&self, _p: Point2) -> Option<(f64, f64)> {
        Some((2.0, 2.0))
    }
}

/// `a x1 + b x2 + c`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Affine {
    fn default() -> Self {
        Self { a: 3.0, b: -2.0, c: 1.0 }
    }
}

impl ScalarField for Affine {
    fn value(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    fn second_derivatives(&self, _p: Point2) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// `sin(x1) cos(x2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinCos;

impl ScalarField for SinCos {
    fn value(&self, p: Point2) -> f64 {
        p.x.sin() * p.y.cos()
    }

    fn second_derivatives(&self, p: Point2) -> Option<(f64, f64)> {
        let v = -self.value(p);
        Some((v, v))
    }
}

/// `sin(pi x1) sin(pi x2)`; vanishes on the boundary of the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinSin;

impl SinSin {
    /// `int_{(0,1)^2} |grad u|^2 = pi^2 / 2`.
    pub const DIRICHLET_ENERGY: f64 = PI * PI / 2.0;
}

impl ScalarField for SinSin {
    fn value(&self, p: Point2) -> f64 {
        (PI * p.x).sin() * (PI * p.y).sin()
    }

    fn second_derivatives(&self, p: Point2) -> Option<(f64, f64)> {
        let v = -PI * PI * self.value(p);
        Some((v, v))
    }
}

/// Manufactured solution `u0 = x1^2 x2 + x2^2`, with `-Laplace u0 = -2 (x2 + 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Manufactured;

impl Manufactured {
    pub fn forcing(p: Point2) -> f64 {
        -2.0 * (p.y + 1.0)
    }
}

impl ScalarField for Manufactured {
    fn value(&self, p: Point2) -> f64 {
        p.x * p.x * p.y + p.y * p.y
    }

    fn second_derivatives(&self, p: Point2) -> Option<(f64, f64)> {
        Some((2.0 * p.y, 2.0))
    }
}

/// The forcing `-2 (x2 + 1)` of the manufactured problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct ManufacturedForcing;

impl ScalarField for ManufacturedForcing {
    fn value(&self, p: Point2) -> f64 {
        Manufactured::forcing(p)
    }
}
