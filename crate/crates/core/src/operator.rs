//! Pointwise nonlocal operators, second-moment coefficients of truncated
//! kernels, energy seminorms and related diagnostics.
//!
//! Integrals over a neighborhood are computed in polar coordinates about its
//! center. A polygon is fan-triangulated about the center and every fan
//! triangle is split at the foot of the perpendicular from the center, so
//! the rim radius `R(theta)` is smooth on each angular piece; the ball is
//! cut into equal sectors. Each piece carries a tensor Gauss–Legendre rule
//! (angle x radius), which concentrates nodes at the center the way a Duffy
//! map of the triangle would.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::{NeighborhoodSpec, Point2, Polygon, Strategy, SUBSET_TOL};
use crate::kernels::Kernel;
use crate::quadrature::GaussLegendre;
use crate::solver::{offset_weights, Field, OffsetRegion};

/// Tensor Gauss–Legendre settings for the pointwise operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    /// Points per direction.
    pub order: usize,
    /// Use `u(x+z) + u(x-z) - 2u(x)` over half the neighborhood when it is centrally symmetric.
    pub symmetric_pairing: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 16,
            symmetric_pairing: true,
        }
    }
}

impl QuadratureSpec {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::invalid(format!(
                "quadrature order must be >= 2, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Where a polar piece ends radially.
#[derive(Debug, Clone, Copy)]
enum Rim {
    Circle(f64),
    /// Chord between two points given relative to the center.
    Chord(Point2, Point2),
}

impl Rim {
    #[inline]
    fn radius(&self, dir: Point2) -> f64 {
        match *self {
            Rim::Circle(r) => r,
            Rim::Chord(a, b) => {
                let e = b - a;
                a.cross(e) / dir.cross(e)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    theta0: f64,
    theta1: f64,
    rim: Rim,
}

fn sector_pieces(radius: f64, start: f64, span: f64, count: usize) -> Vec<Piece> {
    let step = span / count as f64;
    (0..count)
        .map(|i| Piece {
            theta0: start + step * i as f64,
            theta1: start + step * (i + 1) as f64,
            rim: Rim::Circle(radius),
        })
        .collect()
}

/// Fan pieces for the edges `range` of `poly`, relative to its center.
fn fan_pieces(poly: &Polygon, edges: std::ops::Range<usize>) -> Vec<Piece> {
    let c = poly.center();
    let verts = poly.vertices();
    let n = verts.len();
    let mut pieces = Vec::with_capacity(2 * edges.len());
    for i in edges {
        let a = verts[i] - c;
        let b = verts[(i + 1) % n] - c;
        let theta0 = a.angle();
        let span = a.cross(b).atan2(a.dot(b));
        let rim = Rim::Chord(a, b);
        let e = b - a;
        let t = -a.dot(e) / e.dot(e);
        if t > 0.0 && t < 1.0 {
            let foot = a + e * t;
            let split = a.cross(foot).atan2(a.dot(foot));
            pieces.push(Piece {
                theta0,
                theta1: theta0 + split,
                rim,
            });
            pieces.push(Piece {
                theta0: theta0 + split,
                theta1: theta0 + span,
                rim,
            });
        } else {
            pieces.push(Piece {
                theta0,
                theta1: theta0 + span,
                rim,
            });
        }
    }
    pieces
}

fn check_star_shaped(poly: &Polygon) -> Result<()> {
    if !poly.contains(poly.center()) {
        return Err(Error::invalid("polygon must contain its center"));
    }
    let c = poly.center();
    let backwards = poly
        .edges()
        .any(|(a, b)| (a - c).cross(b - c) <= 0.0);
    if backwards {
        return Err(Error::invalid("polygon is not star-shaped about its center"));
    }
    Ok(())
}

fn require_2d(k: &Kernel) -> Result<()> {
    if k.dim() != 2 {
        return Err(Error::invalid(format!(
            "operators are two-dimensional; kernel has d = {}",
            k.dim()
        )));
    }
    Ok(())
}

/// `(int_P xi_1^2 gamma(|xi|) dxi, int_P xi_2^2 gamma(|xi|) dxi)` for a polygon
/// inside the closed unit disk about its center.
///
/// Finite for every admissible kernel (`s < 4`); the radial factor is
/// integrated exactly through [`Kernel`]'s power substitution.
pub fn sigma_polygon(k: &Kernel, p: &Polygon) -> Result<(f64, f64)> {
    require_2d(k)?;
    if p.circumradius() > 1.0 + SUBSET_TOL {
        return Err(Error::invalid(format!(
            "polygon must lie in the unit disk (circumradius {})",
            p.circumradius()
        )));
    }
    check_star_shaped(p)?;
    let rule = GaussLegendre::new(24);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for piece in fan_pieces(p, 0..p.len()) {
        for (theta, w) in rule.mapped(piece.theta0, piece.theta1) {
            let dir = Point2::polar(1.0, theta);
            let radius = piece.rim.radius(dir);
            let m = k.radial_moment(3.0, radius);
            s1 += w * dir.x * dir.x * m;
            s2 += w * dir.y * dir.y * m;
        }
    }
    Ok((s1, s2))
}

fn check_side_count(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::invalid(format!("side count must be >= 3, got {n}")));
    }
    Ok(())
}

/// Per-coordinate second moment of the constant 2D kernel over the inscribed regular n-gon.
pub fn sigma_regular_constant(n: usize) -> Result<f64> {
    check_side_count(n)?;
    let a = TAU / n as f64;
    Ok(a.sin() / a * (2.0 + a.cos()) / 3.0)
}

/// Same for the 2D peridynamic kernel (`s = 1`):
/// `(n/pi) cos^3(pi/n) int_0^{pi/n} sec^3`.
pub fn sigma_regular_peridynamic(n: usize) -> Result<f64> {
    check_side_count(n)?;
    let half = PI / n as f64;
    let (sec, tan) = (1.0 / half.cos(), half.tan());
    let sec3_integral = 0.5 * (sec * tan + (sec + tan).ln());
    Ok(n as f64 / PI * half.cos().powi(3) * sec3_integral)
}

/// Value of the polygon-truncated constant-kernel operator on `|x|^2`; `4 sigma_n`.
pub fn c_n(n: usize) -> Result<f64> {
    Ok(4.0 * sigma_regular_constant(n)?)
}

fn check_operator_kernel(k: &Kernel) -> Result<()> {
    require_2d(k)?;
    if k.s() > k.dim() as f64 {
        return Err(Error::UnsupportedKernel(format!(
            "pointwise operator needs s <= d; got s = {} (principal-value kernels are not supported)",
            k.s()
        )));
    }
    Ok(())
}

/// Precomputed rules and kernel scaling for polar integrals of `gamma_delta`.
struct PolarIntegrator<'a> {
    kernel: &'a Kernel,
    rule: GaussLegendre,
    delta: f64,
    inv_delta: f64,
    factor: f64,
    /// Map `r = R tau^{1/a}` for non-integer singular exponents.
    power_map: Option<f64>,
}

impl<'a> PolarIntegrator<'a> {
    /// `vanishing` is the order to which the integrand (kernel excluded) vanishes at `r = 0`.
    fn new(kernel: &'a Kernel, delta: f64, order: usize, vanishing: f64) -> Self {
        let s = kernel.s();
        let power_map = (kernel.is_singular() && s.fract() != 0.0).then_some(2.0 - s + vanishing);
        Self {
            kernel,
            rule: GaussLegendre::new(order),
            delta,
            inv_delta: 1.0 / delta,
            factor: kernel.rescale_factor(delta),
            power_map,
        }
    }

    /// `sum over pieces of int dtheta int_0^{R} g(z) gamma_delta(|z|) r dr`.
    fn integrate<G: Fn(Point2) -> f64>(&self, pieces: &[Piece], g: G) -> f64 {
        let mut total = 0.0;
        for piece in pieces {
            for (theta, wt) in self.rule.mapped(piece.theta0, piece.theta1) {
                let dir = Point2::polar(1.0, theta);
                let radius = piece.rim.radius(dir);
                total += wt * self.radial(radius, dir, &g);
            }
        }
        total
    }

    fn radial<G: Fn(Point2) -> f64>(&self, radius: f64, dir: Point2, g: &G) -> f64 {
        match self.power_map {
            None => self.rule.integrate(0.0, radius, |r| {
                g(dir * r) * self.kernel.eval(r * self.inv_delta) * self.factor * r
            }),
            Some(a) => {
                // gamma_delta(r) r = c' r^{1-s}; with g ~ r^m the integrand is r^{a-1} h(r).
                let vanishing = a - 2.0 + self.kernel.s();
                let c = self.kernel.regular_part(0.0) * self.factor * self.delta.powf(self.kernel.s());
                let scale = radius.powf(a) / a;
                scale
                    * self.rule.integrate(0.0, 1.0, |tau| {
                        let r = radius * tau.powf(1.0 / a);
                        c * g(dir * r) / r.powf(vanishing)
                    })
            }
        }
    }
}

/// Pieces covering the neighborhood template around the origin (physical scale).
fn template_pieces(nb: &NeighborhoodSpec, half: bool) -> Result<Vec<Piece>> {
    match nb.strategy {
        Strategy::Ball => Ok(if half {
            sector_pieces(nb.delta, 0.0, PI, 4)
        } else {
            sector_pieces(nb.delta, 0.0, TAU, 8)
        }),
        Strategy::RegularNGon { .. } | Strategy::Nocaps { .. } => {
            let poly = nb
                .polygon_at(Point2::ORIGIN)?
                .expect("polygon strategy yields a polygon");
            let n = poly.len();
            let edges = if half { 0..n / 2 } else { 0..n };
            Ok(fan_pieces(&poly, edges))
        }
    }
}

/// `L u(x) = 2 int (u(y) - u(x)) gamma_{delta,n}(x, y) dy`.
///
/// For the ball and even regular polygons the symmetrized kernel coincides
/// with the one-sided truncation; nocaps neighborhoods are handled with the
/// full two-polygon symmetrization.
pub fn apply_operator<U: ScalarField + ?Sized>(
    u: &U,
    x: Point2,
    k: &Kernel,
    nb: &NeighborhoodSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_operator_kernel(k)?;
    q.validate()?;
    nb.validate()?;
    let ux = u.value(x);

    if nb.is_centrally_symmetric() && q.symmetric_pairing {
        let pieces = template_pieces(nb, true)?;
        let integ = PolarIntegrator::new(k, nb.delta, q.order, 2.0);
        // int_P paired = 2 int_{P/2} paired, and L u = int_P paired.
        return Ok(2.0 * integ.integrate(&pieces, |z| u.value(x + z) + u.value(x - z) - 2.0 * ux));
    }

    let integ = PolarIntegrator::new(k, nb.delta, q.order, 1.0);
    let diff = |z: Point2| u.value(x + z) - ux;
    match nb.strategy {
        Strategy::Ball => Ok(2.0 * integ.integrate(&template_pieces(nb, false)?, diff)),
        Strategy::RegularNGon { n, .. } if n % 2 == 0 => {
            Ok(2.0 * integ.integrate(&template_pieces(nb, false)?, diff))
        }
        Strategy::RegularNGon { n, rotation } => {
            // x lies in P(y) iff y - x lies in the reflected template -P.
            let own = template_pieces(nb, false)?;
            let reflected = NeighborhoodSpec::regular_rotated(nb.delta, n, rotation + PI);
            let other = template_pieces(&reflected, false)?;
            Ok(integ.integrate(&own, diff) + integ.integrate(&other, diff))
        }
        Strategy::Nocaps { .. } => {
            let own = nb.polygon_at(x)?.expect("nocaps yields a polygon");
            let first = integ.integrate(&fan_pieces(&own, 0..own.len()), diff);
            // y over the ball, weighted by [x in P(y)].
            let ball = sector_pieces(nb.delta, 0.0, TAU, 8);
            let second = integ.integrate(&ball, |z| {
                let y = x + z;
                match nb.polygon_at(y) {
                    Ok(Some(py)) if py.contains(x) => u.value(y) - ux,
                    _ => 0.0,
                }
            });
            Ok(first + second)
        }
    }
}

/// `(4 / C_n) L_{delta,n} u(x)`; only for regular polygons.
pub fn rescaled_apply<U: ScalarField + ?Sized>(
    u: &U,
    x: Point2,
    k: &Kernel,
    nb: &NeighborhoodSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    let Strategy::RegularNGon { n, .. } = nb.strategy else {
        return Err(Error::invalid("rescaled operator needs a regular polygon neighborhood"));
    };
    Ok(4.0 / c_n(n)? * apply_operator(u, x, k, nb, q)?)
}

/// `gamma_delta(|y-x|) ([y in P(x)] + [x in P(y)]) / 2`; exactly symmetric in `x, y`.
pub fn symmetrized_gamma(x: Point2, y: Point2, k: &Kernel, nb: &NeighborhoodSpec) -> Result<f64> {
    nb.validate()?;
    let r = (y - x).norm();
    if r >= nb.delta {
        return Ok(0.0);
    }
    let g = k.gamma_rescaled(nb.delta, r)?;
    let (in_x, in_y) = if nb.is_translation_invariant() {
        (nb.template_contains(y - x), nb.template_contains(x - y))
    } else {
        let px = nb.polygon_at(x)?.expect("polygon strategy");
        let py = nb.polygon_at(y)?.expect("polygon strategy");
        (px.contains(y), py.contains(x))
    };
    let count = f64::from(u8::from(in_x)) + f64::from(u8::from(in_y));
    Ok(g * count / 2.0)
}

/// The three nested energies of the norm sandwich.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyNorms {
    /// Kernel cut at the inradius `delta cos(pi/n)` (or `delta` for the ball).
    pub truncated: f64,
    /// Kernel truncated to the neighborhood template.
    pub polygon: f64,
    /// Full-ball kernel.
    pub ball: f64,
}

/// Squared nonlocal energies `int_D int_D (u(y)-u(x))^2 gamma dy dx` of a
/// grid field (zero outside the free cells), for the truncated-ball,
/// template and full-ball kernels with shared cell-pair quadrature.
pub fn energy_norm_sq(
    field: &Field,
    k: &Kernel,
    nb: &NeighborhoodSpec,
    refine: usize,
) -> Result<EnergyNorms> {
    require_2d(k)?;
    if k.s() >= k.dim() as f64 {
        return Err(Error::UnsupportedKernel(format!(
            "cell-pair energies need s < d; got s = {}",
            k.s()
        )));
    }
    nb.validate()?;
    let inner = match nb.strategy {
        Strategy::Ball => nb.delta,
        Strategy::RegularNGon { n, .. } => nb.delta * (PI / n as f64).cos(),
        Strategy::Nocaps { .. } => {
            return Err(Error::Unsupported(
                "energy norms need a translation-invariant neighborhood".into(),
            ))
        }
    };
    let grid = field.grid();
    let delta = nb.delta;
    let regions = [
        OffsetRegion::new(move |z: Point2| z.norm() < inner, move |z: Point2| (z.norm() - inner).abs()),
        OffsetRegion::new(|z: Point2| nb.template_contains(z), |z: Point2| nb.template_boundary_distance(z)),
        OffsetRegion::new(move |z: Point2| z.norm() < delta, move |z: Point2| (z.norm() - delta).abs()),
    ];
    let weights = offset_weights(grid.h(), delta, k, &regions, refine)?;

    let side = grid.cells_per_side();
    let full = field.full_values();
    let side_i = side as i64;
    let rows: Vec<[f64; 3]> = (0..side)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 3];
            for j in 0..side {
                let ui = full[i * side + j];
                for &((di, dj), w) in &weights {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= side_i || nj >= side_i {
                        continue;
                    }
                    let d = full[ni as usize * side + nj as usize] - ui;
                    let d2 = d * d;
                    acc[0] += w[0] * d2;
                    acc[1] += w[1] * d2;
                    acc[2] += w[2] * d2;
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for row in rows {
        for c in 0..3 {
            total[c] += row[c];
        }
    }
    Ok(EnergyNorms {
        truncated: total[0],
        polygon: total[1],
        ball: total[2],
    })
}

/// `|L phi(x) - sigma_1 d11 phi(x) - sigma_2 d22 phi(x)|`, with `sigma_i` the
/// second moments of the unit-scaled neighborhood.
pub fn taylor_residual<U: ScalarField + ?Sized>(
    phi: &U,
    x: Point2,
    k: &Kernel,
    nb: &NeighborhoodSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    let (d11, d22) = phi
        .second_derivatives(x)
        .ok_or_else(|| Error::invalid("taylor residual needs analytic second derivatives"))?;
    let lu = apply_operator(phi, x, k, nb, q)?;
    let (s1, s2) = match nb.polygon_at(x)? {
        None => {
            let m = k.second_moment(1.0)?;
            (m, m)
        }
        Some(poly) => sigma_polygon(k, &poly.rescaled(nb.delta))?,
    };
    Ok((lu - s1 * d11 - s2 * d22).abs())
}

/// `sup_x int_{B_delta(x) \ P(x)} gamma_delta`, the kernel mass lost by the
/// polygonal truncation. Constant in `x` for translation-invariant templates;
/// nocaps neighborhoods are sampled at `sample_points` positions within one
/// triangulation period.
pub fn k_gamma_estimate(k: &Kernel, nb: &NeighborhoodSpec, sample_points: usize) -> Result<f64> {
    require_2d(k)?;
    nb.validate()?;
    match nb.strategy {
        Strategy::Ball => Ok(0.0),
        Strategy::RegularNGon { .. } => lost_mass(k, nb, Point2::ORIGIN),
        Strategy::Nocaps { grid_h } => {
            if sample_points == 0 {
                return Err(Error::invalid("need at least one sample point"));
            }
            // Kronecker sequence over one period cell of the triangulation.
            const A1: f64 = 0.754_877_666_246_692_7;
            const A2: f64 = 0.569_840_290_998_053_3;
            (0..sample_points)
                .map(|i| {
                    let t = i as f64;
                    let x = Point2::new((0.5 + A1 * t).fract() * grid_h, (0.5 + A2 * t).fract() * grid_h);
                    lost_mass(k, nb, x)
                })
                .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
        }
    }
}

fn lost_mass(k: &Kernel, nb: &NeighborhoodSpec, x: Point2) -> Result<f64> {
    let poly = nb.polygon_at(x)?.expect("polygon strategy");
    check_star_shaped(&poly)?;
    let rule = GaussLegendre::new(24);
    let factor = k.rescale_factor(nb.delta);
    let delta = nb.delta;
    let mut total = 0.0;
    for piece in fan_pieces(&poly, 0..poly.len()) {
        for (theta, w) in rule.mapped(piece.theta0, piece.theta1) {
            let rho = piece.rim.radius(Point2::polar(1.0, theta)) / delta;
            if rho >= 1.0 {
                continue;
            }
            // int_{R}^{delta} gamma_delta(r) r dr = factor delta^2 int_rho^1 t gamma(t) dt
            let radial = rule.integrate(rho, 1.0, |t| t * k.eval(t));
            total += w * factor * delta * delta * radial;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Affine, Quadratic, SinCos};
    use crate::geometry::regular_polygon;
    use crate::kernels::KernelFamily;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unit_ngon(n: usize) -> Polygon {
        regular_polygon(Point2::ORIGIN, 1.0, n, 0.0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(sigma_regular_constant(4).unwrap(), 4.0 / (3.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(sigma_regular_constant(6).unwrap(), 0.689_161_119_277_240_1, epsilon = 1e-14);
        assert!((sigma_regular_constant(1_000_000).unwrap() - 1.0).abs() < 1e-10);
        let sec3 = 0.5 * (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln());
        let want = 4.0 / PI * 0.5f64.sqrt().powi(3) * sec3;
        assert_abs_diff_eq!(sigma_regular_peridynamic(4).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.516_688_6, epsilon = 1e-7);
        assert!((sigma_regular_peridynamic(1_000_000).unwrap() - 1.0).abs() < 1e-9);
        assert!(sigma_regular_constant(2).is_err());
        assert!(sigma_regular_peridynamic(2).is_err());
        assert!(c_n(2).is_err());
    }

    #[test]
    fn c_n_matches_both_formulas() {
        for n in [3, 4, 5, 8, 17, 64, 1000] {
            let c = c_n(n).unwrap();
            assert_eq!(c, 4.0 * sigma_regular_constant(n).unwrap());
            let a = TAU / n as f64;
            let direct = a.sin() / (PI / (2.0 * n as f64)) * (2.0 + a.cos()) / 3.0;
            assert!((c - direct).abs() < 1e-14, "n = {n}");
        }
        assert_abs_diff_eq!(c_n(4).unwrap(), 16.0 / (3.0 * PI), epsilon = 1e-15);
        assert!((c_n(1_000_000).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_quadrature_matches_closed_forms() {
        let c = Kernel::constant_2d();
        let p = Kernel::peridynamic_2d();
        for n in [3, 4, 6, 8, 16, 64] {
            let (a, b) = sigma_polygon(&c, &unit_ngon(n)).unwrap();
            let want = sigma_regular_constant(n).unwrap();
            assert!((a - want).abs() < 1e-12 && (b - want).abs() < 1e-12, "constant n={n}");
            let (a, b) = sigma_polygon(&p, &unit_ngon(n)).unwrap();
            let want = sigma_regular_peridynamic(n).unwrap();
            assert!((a - want).abs() < 1e-12 && (b - want).abs() < 1e-12, "peridynamic n={n}");
        }
    }

    #[test]
    fn sigma_of_fine_polygon_approaches_one() {
        for k in [
            Kernel::constant_2d(),
            Kernel::peridynamic_2d(),
            Kernel::new(KernelFamily::Linear, 2, None).unwrap(),
            Kernel::new(KernelFamily::GaussianLike, 2, None).unwrap(),
        ] {
            let (a, b) = sigma_polygon(&k, &unit_ngon(4096)).unwrap();
            assert!((a - 1.0).abs() < 1e-5 && (b - 1.0).abs() < 1e-5, "{:?}: {a} {b}", k.family());
        }
    }

    #[test]
    fn sigma_rejects_polygons_outside_unit_disk() {
        let big = regular_polygon(Point2::ORIGIN, 1.5, 6, 0.0).unwrap();
        assert!(sigma_polygon(&Kernel::constant_2d(), &big).is_err());
    }

    #[test]
    fn quadratic_on_ball_is_four() {
        let k = Kernel::constant_2d();
        let q = QuadratureSpec::default();
        for delta in [0.2, 0.1, 0.05] {
            let nb = NeighborhoodSpec::ball(delta);
            let v = apply_operator(&Quadratic, Point2::new(0.3, 0.7), &k, &nb, &q).unwrap();
            assert_abs_diff_eq!(v, 4.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_on_octagon_is_c8() {
        let k = Kernel::constant_2d();
        let q = QuadratureSpec::default();
        let c8 = c_n(8).unwrap();
        // Sum of eight fan triangles, sec^4 integrated in closed form.
        assert_abs_diff_eq!(c8, 3.249_669_872_909_058, epsilon = 1e-13);
        for delta in [0.1, 0.05] {
            let nb = NeighborhoodSpec::regular(delta, 8);
            let v = apply_operator(&Quadratic, Point2::new(0.4, 0.2), &k, &nb, &q).unwrap();
            assert_abs_diff_eq!(v, c8, epsilon = 1e-10);
            let r = rescaled_apply(&Quadratic, Point2::new(0.4, 0.2), &k, &nb, &q).unwrap();
            assert_abs_diff_eq!(r, 4.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn affine_fields_vanish() {
        let k = Kernel::peridynamic_2d();
        let q = QuadratureSpec::default();
        let x = Point2::new(0.5, 0.5);
        for nb in [
            NeighborhoodSpec::ball(0.1),
            NeighborhoodSpec::regular(0.1, 6),
            NeighborhoodSpec::regular_rotated(0.1, 12, 0.3),
        ] {
            let v = apply_operator(&Affine::default(), x, &k, &nb, &q).unwrap();
            assert!(v.abs() < 1e-10, "{nb:?}: {v}");
        }
    }

    #[test]
    fn unpaired_quadrature_agrees_with_paired() {
        let k = Kernel::constant_2d();
        let nb = NeighborhoodSpec::regular(0.1, 8);
        let x = Point2::new(0.3, 0.4);
        let paired = apply_operator(&SinCos, x, &k, &nb, &QuadratureSpec::default()).unwrap();
        let plain = QuadratureSpec {
            order: 16,
            symmetric_pairing: false,
        };
        let one_sided = apply_operator(&SinCos, x, &k, &nb, &plain).unwrap();
        assert!((paired - one_sided).abs() < 1e-10, "{paired} vs {one_sided}");
    }

    #[test]
    fn odd_polygon_uses_symmetrized_kernel() {
        // For |x|^2 the symmetrized triangle kernel still gives 2 * 2 sigma.
        let k = Kernel::constant_2d();
        let nb = NeighborhoodSpec::regular(0.1, 3);
        let v = apply_operator(&Quadratic, Point2::new(0.5, 0.5), &k, &nb, &QuadratureSpec::default()).unwrap();
        let (s1, s2) = sigma_polygon(&k, &unit_ngon(3)).unwrap();
        assert_abs_diff_eq!(v, 2.0 * (s1 + s2), epsilon = 1e-9);
        let affine = apply_operator(&Affine::default(), Point2::new(0.5, 0.5), &k, &nb, &QuadratureSpec::default()).unwrap();
        assert!(affine.abs() < 1e-10);
    }

    #[test]
    fn operator_argument_errors() {
        let q = QuadratureSpec::default();
        let nb = NeighborhoodSpec::ball(0.1);
        let frac = Kernel::new(KernelFamily::Singular, 2, Some(3.0)).unwrap();
        assert!(matches!(
            apply_operator(&Quadratic, Point2::ORIGIN, &frac, &nb, &q),
            Err(Error::UnsupportedKernel(_))
        ));
        let k = Kernel::constant_2d();
        assert!(matches!(
            apply_operator(&Quadratic, Point2::ORIGIN, &k, &nb, &QuadratureSpec::with_order(1)),
            Err(Error::InvalidArgument(_))
        ));
        let k3 = Kernel::new(KernelFamily::Constant, 3, None).unwrap();
        assert!(apply_operator(&Quadratic, Point2::ORIGIN, &k3, &nb, &q).is_err());
        assert!(rescaled_apply(&Quadratic, Point2::ORIGIN, &k, &nb, &q).is_err());
    }

    #[test]
    fn singular_kernel_at_d_is_accepted() {
        let k = Kernel::new(KernelFamily::Singular, 2, Some(2.0)).unwrap();
        let v = apply_operator(&Quadratic, Point2::ORIGIN, &k, &NeighborhoodSpec::ball(0.1), &QuadratureSpec::default())
            .unwrap();
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn fractional_integrable_kernel_on_quadratic() {
        let k = Kernel::new(KernelFamily::Singular, 2, Some(1.5)).unwrap();
        let v = apply_operator(&Quadratic, Point2::ORIGIN, &k, &NeighborhoodSpec::ball(0.1), &QuadratureSpec::default())
            .unwrap();
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn symmetrized_gamma_examples() {
        let k = Kernel::constant_2d();
        let nb = NeighborhoodSpec::regular(0.1, 8);
        let x = Point2::new(0.2, 0.3);
        let y = Point2::new(0.25, 0.33);
        let a = symmetrized_gamma(x, y, &k, &nb).unwrap();
        assert_eq!(a.to_bits(), symmetrized_gamma(y, x, &k, &nb).unwrap().to_bits());
        assert_relative_eq!(a, k.gamma_rescaled(0.1, (y - x).norm()).unwrap(), max_relative = 1e-14);
        assert_eq!(symmetrized_gamma(x, Point2::new(0.9, 0.9), &k, &nb).unwrap(), 0.0);
        // Just inside the ball but outside the octagon, near a side midpoint direction.
        let mid = Point2::polar(0.097, PI / 8.0);
        assert_eq!(symmetrized_gamma(x, x + mid, &k, &nb).unwrap(), 0.0);
    }

    #[test]
    fn taylor_residual_vanishes_for_quadratics() {
        let k = Kernel::constant_2d();
        let q = QuadratureSpec::default();
        let x = Point2::new(0.3, 0.4);
        for nb in [NeighborhoodSpec::ball(0.1), NeighborhoodSpec::regular(0.1, 8)] {
            assert!(taylor_residual(&Quadratic, x, &k, &nb, &q).unwrap() < 1e-9);
            assert!(taylor_residual(&Affine::default(), x, &k, &nb, &q).unwrap() < 1e-10);
        }
        let no_derivs = crate::fields::FnField(|p: Point2| p.x);
        assert!(taylor_residual(&no_derivs, x, &k, &NeighborhoodSpec::ball(0.1), &q).is_err());
    }

    #[test]
    fn k_gamma_closed_form() {
        let k = Kernel::constant_2d();
        let n = 8.0;
        for delta in [0.1, 0.05] {
            let v = k_gamma_estimate(&k, &NeighborhoodSpec::regular(delta, 8), 1).unwrap();
            let want = 4.0 / (delta * delta) * (1.0 - n / TAU * (TAU / n).sin());
            assert!((v - want).abs() < 1e-9 * want, "{v} vs {want}");
        }
        assert_eq!(k_gamma_estimate(&k, &NeighborhoodSpec::ball(0.1), 1).unwrap(), 0.0);
        let fine = k_gamma_estimate(&k, &NeighborhoodSpec::regular(0.1, 4096), 1).unwrap();
        assert!(fine < 1e-3);
    }

    #[test]
    fn k_gamma_nocaps_samples() {
        let k = Kernel::constant_2d();
        let nb = NeighborhoodSpec::nocaps(0.1, 0.02);
        let v = k_gamma_estimate(&k, &nb, 8).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(k_gamma_estimate(&k, &nb, 0).is_err());
    }
}
