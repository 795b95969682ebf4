//! Polygonal approximations of disks: regular inscribed polygons, the
//! "nocaps" polygons cut out of a uniform triangulation, and the measures
//! used to judge them (area ratio, inradius, caps, quasi-uniformity).

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for "vertex lies within the ball".
pub const SUBSET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(r * c, r * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point2) -> f64 {
        (other - self).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// A simple, counter-clockwise polygon approximating a ball around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    center: Point2,
}

impl Polygon {
    /// Validates vertex count, finiteness, orientation and simplicity.
    pub fn new(vertices: Vec<Point2>, center: Point2) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if !center.is_finite() || vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("polygon coordinates must be finite"));
        }
        let poly = Self { vertices, center };
        let area = poly.signed_area();
        if area <= 0.0 {
            return Err(Error::invalid(format!(
                "polygon must be counter-clockwise with positive area (signed area {area:e})"
            )));
        }
        if poly.self_intersects() {
            return Err(Error::invalid("polygon is self-intersecting"));
        }
        Ok(poly)
    }

    /// Skips validation; callers guarantee a simple CCW polygon.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>, center: Point2) -> Self {
        debug_assert!(vertices.len() >= 3);
        Self { vertices, center }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn side_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges().map(|(a, b)| a.distance(b))
    }

    /// Crossing-number point-in-polygon test. Points on the boundary may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the nearest edge.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= 0.0
        })
    }

    /// Largest distance from the center to a vertex.
    pub fn circumradius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance(self.center))
            .fold(0.0, f64::max)
    }

    /// Shift to the origin and scale by `1/delta`: the unit-ball template.
    pub fn rescaled(&self, delta: f64) -> Polygon {
        let inv = 1.0 / delta;
        let vertices = self
            .vertices
            .iter()
            .map(|&v| (v - self.center) * inv)
            .collect();
        Polygon {
            vertices,
            center: Point2::ORIGIN,
        }
    }

    /// The same shape moved so its center sits at `center`.
    pub fn translated_to(&self, center: Point2) -> Polygon {
        let shift = center - self.center;
        Polygon {
            vertices: self.vertices.iter().map(|&v| v + shift).collect(),
            center,
        }
    }

    /// Central angle (about the center) subtended by the longest side.
    pub fn longest_side_central_angle(&self) -> f64 {
        self.edges()
            .max_by(|(a, b), (c, d)| a.distance(*b).total_cmp(&c.distance(*d)))
            .map(|(a, b)| {
                let (u, v) = (a - self.center, b - self.center);
                u.cross(v).atan2(u.dot(v)).abs()
            })
            .unwrap_or(0.0)
    }

    fn self_intersects(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                // Adjacent edges share a vertex.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_cross(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Regular n-gon inscribed in the circle of radius `delta` about `center`,
/// first vertex at angle `rotation`.
pub fn regular_polygon(center: Point2, delta: f64, n: usize, rotation: f64) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::invalid(format!("regular polygon needs n >= 3, got {n}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !center.is_finite() || !rotation.is_finite() {
        return Err(Error::invalid("center and rotation must be finite"));
    }
    let step = TAU / n as f64;
    let vertices = (0..n)
        .map(|i| center + Point2::polar(delta, rotation + step * i as f64))
        .collect();
    Ok(Polygon::from_ccw_unchecked(vertices, center))
}

/// Shoelace area; errors on degenerate (non-positive) area.
pub fn polygon_area(p: &Polygon) -> Result<f64> {
    let area = p.signed_area();
    if area > 0.0 {
        Ok(area)
    } else {
        Err(Error::invalid(format!("degenerate polygon (area {area:e})")))
    }
}

/// Minimum distance from the polygon's center to its edges.
pub fn inradius_centered(p: &Polygon) -> Result<f64> {
    if !p.contains(p.center()) {
        return Err(Error::invalid("polygon center lies outside the polygon"));
    }
    Ok(p.boundary_distance(p.center()))
}

/// Area of the unit-disk cap cut off by a chord of central angle `theta`.
pub fn cap_area(theta: f64) -> Result<f64> {
    if !(0.0..=TAU).contains(&theta) {
        return Err(Error::invalid(format!("cap angle must lie in [0, 2pi], got {theta}")));
    }
    Ok(0.5 * (theta - theta.sin()))
}

/// `|p| / (pi delta^2)`.
pub fn area_ratio(p: &Polygon, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(polygon_area(p)? / (PI * delta * delta))
}

/// Inscribed polygon whose vertices are the crossings of the circle of radius
/// `delta` about `center` with the edges of the uniform triangulation of pitch
/// `grid_h` (lines x = kh, y = kh and diagonals y - x = kh).
///
/// Every arc between consecutive crossings is replaced by its chord.
pub fn nocaps_polygon(center: Point2, delta: f64, grid_h: f64) -> Result<Polygon> {
    if !(grid_h > 0.0) || !grid_h.is_finite() {
        return Err(Error::invalid(format!("grid_h must be positive, got {grid_h}")));
    }
    if !(delta > 2.0 * grid_h) || !delta.is_finite() {
        return Err(Error::invalid(format!(
            "nocaps needs delta > 2 grid_h (delta = {delta}, grid_h = {grid_h})"
        )));
    }
    if !center.is_finite() {
        return Err(Error::invalid("center must be finite"));
    }

    let mut angles = Vec::new();
    let mut push_pair = |foot: Point2, dir: Point2, offset2: f64| {
        let t2 = delta * delta - offset2;
        if t2 < 0.0 {
            return;
        }
        let t = t2.sqrt();
        angles.push((foot + dir * t - center).angle());
        angles.push((foot - dir * t - center).angle());
    };

    let k_range = |lo: f64, hi: f64| (lo / grid_h).ceil() as i64..=(hi / grid_h).floor() as i64;

    for k in k_range(center.x - delta, center.x + delta) {
        let x = k as f64 * grid_h;
        let off = x - center.x;
        push_pair(Point2::new(x, center.y), Point2::new(0.0, 1.0), off * off);
    }
    for k in k_range(center.y - delta, center.y + delta) {
        let y = k as f64 * grid_h;
        let off = y - center.y;
        push_pair(Point2::new(center.x, y), Point2::new(1.0, 0.0), off * off);
    }
    // Diagonals y - x = c with unit normal (-1, 1)/sqrt(2).
    let normal = Point2::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let along = Point2::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let reach = delta * std::f64::consts::SQRT_2;
    let base = center.y - center.x;
    for k in k_range(base - reach, base + reach) {
        let c = k as f64 * grid_h;
        let signed = normal.dot(center) - c * std::f64::consts::FRAC_1_SQRT_2;
        let foot = center - normal * signed;
        push_pair(foot, along, signed * signed);
    }

    angles.sort_by(f64::total_cmp);
    let tol = SUBSET_TOL;
    let mut unique: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        if unique.last().is_none_or(|&last| a - last > tol) {
            unique.push(a);
        }
    }
    while unique.len() > 1 && unique[0] + TAU - unique[unique.len() - 1] <= tol {
        unique.pop();
    }
    if unique.len() < 3 {
        return Err(Error::invalid("nocaps construction produced fewer than 3 vertices"));
    }
    let vertices = unique
        .into_iter()
        .map(|a| center + Point2::polar(delta, a))
        .collect();
    Ok(Polygon::from_ccw_unchecked(vertices, center))
}

/// `(longest side / shortest side, delta / inradius)`.
pub fn quasi_uniformity(p: &Polygon, delta: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for len in p.side_lengths() {
        lo = lo.min(len);
        hi = hi.max(len);
    }
    if !(lo > 0.0) {
        return Err(Error::invalid("polygon has a zero-length side"));
    }
    let r = inradius_centered(p)?;
    Ok((hi / lo, delta / r))
}

/// How the interaction neighborhood around each point is shaped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Ball,
    RegularNGon { n: usize, rotation: f64 },
    /// Chords of the circle's crossings with a triangulation of pitch `grid_h`.
    Nocaps { grid_h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub delta: f64,
    #[serde(flatten)]
    pub strategy: Strategy,
}

impl NeighborhoodSpec {
    pub fn ball(delta: f64) -> Self {
        Self {
            delta,
            strategy: Strategy::Ball,
        }
    }

    pub fn regular(delta: f64, n: usize) -> Self {
        Self::regular_rotated(delta, n, 0.0)
    }

    pub fn regular_rotated(delta: f64, n: usize, rotation: f64) -> Self {
        Self {
            delta,
            strategy: Strategy::RegularNGon { n, rotation },
        }
    }

    pub fn nocaps(delta: f64, grid_h: f64) -> Self {
        Self {
            delta,
            strategy: Strategy::Nocaps { grid_h },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        match self.strategy {
            Strategy::Ball => Ok(()),
            Strategy::RegularNGon { n, rotation } => {
                if n < 3 {
                    Err(Error::invalid(format!("side count must be >= 3, got {n}")))
                } else if !rotation.is_finite() {
                    Err(Error::invalid("rotation must be finite"))
                } else {
                    Ok(())
                }
            }
            Strategy::Nocaps { grid_h } => {
                if grid_h > 0.0 && self.delta > 2.0 * grid_h {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "nocaps needs delta > 2 grid_h (delta = {}, grid_h = {grid_h})",
                        self.delta
                    )))
                }
            }
        }
    }

    /// The polygon around `x`, or `None` for the Euclidean ball.
    pub fn polygon_at(&self, x: Point2) -> Result<Option<Polygon>> {
        match self.strategy {
            Strategy::Ball => Ok(None),
            Strategy::RegularNGon { n, rotation } => {
                regular_polygon(x, self.delta, n, rotation).map(Some)
            }
            Strategy::Nocaps { grid_h } => nocaps_polygon(x, self.delta, grid_h).map(Some),
        }
    }

    /// Whether the same shape (up to translation) is used at every point.
    pub fn is_translation_invariant(&self) -> bool {
        !matches!(self.strategy, Strategy::Nocaps { .. })
    }

    /// Ball and even regular polygons are symmetric under z -> -z.
    pub fn is_centrally_symmetric(&self) -> bool {
        match self.strategy {
            Strategy::Ball => true,
            Strategy::RegularNGon { n, .. } => n % 2 == 0,
            Strategy::Nocaps { .. } => false,
        }
    }

    /// Membership of offset `z = y - x` in the neighborhood of a point, for
    /// translation-invariant strategies.
    pub fn template_contains(&self, z: Point2) -> bool {
        match self.strategy {
            Strategy::Ball => z.norm() < self.delta,
            Strategy::RegularNGon { n, rotation } => {
                regular_contains(z, self.delta, n, rotation)
            }
            Strategy::Nocaps { .. } => {
                panic!("nocaps neighborhoods are not translation invariant")
            }
        }
    }

    /// Distance from offset `z` to the template boundary (translation-invariant strategies).
    pub fn template_boundary_distance(&self, z: Point2) -> f64 {
        match self.strategy {
            Strategy::Ball => (z.norm() - self.delta).abs(),
            Strategy::RegularNGon { n, rotation } => {
                let poly = regular_polygon(Point2::ORIGIN, self.delta, n, rotation)
                    .expect("validated regular template");
                poly.boundary_distance(z)
            }
            Strategy::Nocaps { .. } => {
                panic!("nocaps neighborhoods are not translation invariant")
            }
        }
    }
}

/// Point-in-regular-polygon test for an offset from the polygon center.
pub fn regular_contains(z: Point2, delta: f64, n: usize, rotation: f64) -> bool {
    let r = z.norm();
    if r >= delta {
        return false;
    }
    let apothem = delta * (PI / n as f64).cos();
    if r < apothem {
        return true;
    }
    let step = TAU / n as f64;
    let rel = (z.angle() - rotation).rem_euclid(TAU);
    let sector = (rel / step).floor();
    let mid = (sector + 0.5) * step;
    r * (rel - mid).cos() < apothem
}
