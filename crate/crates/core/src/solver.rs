//! Piecewise-constant discretization of the volume-constrained problem
//! `-L u = f` on `(0,1)^2` over a uniform grid that also covers the
//! interaction layer, with matrix-free conjugate gradients.
//!
//! Pair weights depend only on the cell offset, so the operator is a
//! convolution stencil applied to a zero-padded array of free-cell values.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::{NeighborhoodSpec, Point2, Strategy};
use crate::kernels::Kernel;

/// Default sub-sampling of offsets near the template rim.
pub const DEFAULT_REFINE: usize = 4;

/// Guard against `ceil` of quotients like 0.25 / 0.125 landing one cell high.
const CELL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Center lies in the open unit square.
    Free,
    /// Center lies in the interaction layer.
    Constrained,
}

/// Uniform cells covering `[-L, 1+L]^2`, `L = ceil(delta/h) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: f64,
    delta: f64,
    layer: usize,
    interior: usize,
    side: usize,
}

impl Grid {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Layer thickness in cells.
    pub fn layer_cells(&self) -> usize {
        self.layer
    }

    /// Layer thickness as a length.
    pub fn layer_width(&self) -> f64 {
        self.layer as f64 * self.h
    }

    /// Free cells along each axis.
    pub fn interior_cells(&self) -> usize {
        self.interior
    }

    /// All cells along each axis.
    pub fn cells_per_side(&self) -> usize {
        self.side
    }

    pub fn dof(&self) -> usize {
        self.interior * self.interior
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        let origin = -self.layer_width();
        Point2::new(
            origin + (i as f64 + 0.5) * self.h,
            origin + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn cell_kind(&self, i: usize, j: usize) -> CellKind {
        let free = |k: usize| k >= self.layer && k < self.layer + self.interior;
        if free(i) && free(j) {
            CellKind::Free
        } else {
            CellKind::Constrained
        }
    }

    /// Center of the free cell with interior index `(a, b)`.
    pub fn free_center(&self, a: usize, b: usize) -> Point2 {
        self.cell_center(a + self.layer, b + self.layer)
    }

    /// Free-cell centers in storage order (x index major).
    pub fn free_centers(&self) -> impl Iterator<Item = Point2> + '_ {
        let n = self.interior;
        (0..n * n).map(move |idx| self.free_center(idx / n, idx % n))
    }
}

/// Builds the grid for horizon `delta` and cell size `h`.
pub fn build_grid(h: f64, delta: f64) -> Result<Grid> {
    if !(h > 0.0) || !h.is_finite() || !delta.is_finite() {
        return Err(Error::invalid(format!("need finite h > 0, got h = {h}")));
    }
    if h >= delta {
        return Err(Error::invalid(format!(
            "cell size must be below the horizon (h = {h}, delta = {delta})"
        )));
    }
    let layer = (delta / h - CELL_EPS).ceil() as usize;
    let interior = (1.0 / h - 0.5 - CELL_EPS).ceil() as usize;
    let span = 1.0 + 2.0 * layer as f64 * h;
    let side = ((span / h - CELL_EPS).ceil() as usize).max(interior + 2 * layer);
    Ok(Grid {
        h,
        delta,
        layer,
        interior,
        side,
    })
}

/// Per-free-cell values on a grid; constrained cells are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.dof()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.dof() {
            return Err(Error::invalid(format!(
                "expected {} free-cell values, got {}",
                grid.dof(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `u` at free-cell centers.
    pub fn sample<U: ScalarField + ?Sized>(grid: &Grid, u: &U) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.free_centers().map(|c| u.value(c)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values over every grid cell (row-major over `cells_per_side^2`), zero on the layer.
    pub fn full_values(&self) -> Vec<f64> {
        let g = &self.grid;
        let side = g.side;
        let mut out = vec![0.0; side * side];
        for a in 0..g.interior {
            let row = (a + g.layer) * side + g.layer;
            out[row..row + g.interior]
                .copy_from_slice(&self.values[a * g.interior..(a + 1) * g.interior]);
        }
        out
    }

    pub fn dot(&self, other: &Field) -> f64 {
        dot(&self.values, &other.values)
    }
}

/// A set of offsets `z` with a membership test and a distance to its boundary.
pub(crate) struct OffsetRegion<'a> {
    contains: Box<dyn Fn(Point2) -> bool + Sync + 'a>,
    boundary_distance: Box<dyn Fn(Point2) -> f64 + Sync + 'a>,
}

impl<'a> OffsetRegion<'a> {
    pub(crate) fn new(
        contains: impl Fn(Point2) -> bool + Sync + 'a,
        boundary_distance: impl Fn(Point2) -> f64 + Sync + 'a,
    ) -> Self {
        Self {
            contains: Box::new(contains),
            boundary_distance: Box::new(boundary_distance),
        }
    }
}

/// Cell-pair weights `h^4 * mean(gamma_delta(|z|) [z in region])` for each
/// centrally symmetric region, over offsets up to `ceil(delta/h) + 1` cells.
///
/// Offsets within `sqrt(2) h` of any region boundary are averaged over
/// `refine x refine` sub-offsets, the same ones for every region, so nested
/// regions give ordered weights. Weights are computed on one half-plane of
/// offsets and mirrored, making `w(-d) = w(d)` exact.
pub(crate) fn offset_weights<const R: usize>(
    h: f64,
    delta: f64,
    k: &Kernel,
    regions: &[OffsetRegion<'_>; R],
    refine: usize,
) -> Result<Vec<((i64, i64), [f64; R])>> {
    if refine == 0 {
        return Err(Error::invalid("refine must be at least 1"));
    }
    let radius = (delta / h - CELL_EPS).ceil() as i64 + 1;
    let factor = k.rescale_factor(delta);
    let inv_delta = 1.0 / delta;
    let h4 = h.powi(4);
    let near = std::f64::consts::SQRT_2 * h;
    let subs: Vec<f64> = (0..refine)
        .map(|a| ((a as f64 + 0.5) / refine as f64 - 0.5) * h)
        .collect();

    let weight_at = |z: Point2| -> [f64; R] {
        let kernel = k.eval(z.norm() * inv_delta) * factor;
        std::array::from_fn(|r| if (regions[r].contains)(z) { kernel } else { 0.0 })
    };

    let mut half = Vec::new();
    for di in 0..=radius {
        for dj in -radius..=radius {
            if di == 0 && dj <= 0 {
                continue;
            }
            let z = Point2::new(di as f64 * h, dj as f64 * h);
            let refined = refine > 1 && regions.iter().any(|reg| (reg.boundary_distance)(z) < near);
            let w: [f64; R] = if refined {
                let mut acc = [0.0; R];
                for &sx in &subs {
                    for &sy in &subs {
                        let v = weight_at(Point2::new(z.x + sx, z.y + sy));
                        for r in 0..R {
                            acc[r] += v[r];
                        }
                    }
                }
                let count = (refine * refine) as f64;
                acc.map(|a| a / count * h4)
            } else {
                weight_at(z).map(|v| v * h4)
            };
            if w.iter().any(|&v| v != 0.0) {
                half.push(((di, dj), w));
            }
        }
    }
    let mut all = Vec::with_capacity(2 * half.len());
    for &((di, dj), w) in &half {
        all.push(((-di, -dj), w));
    }
    all.extend(half);
    all.sort_by_key(|&(d, _)| d);
    Ok(all)
}

/// Convolution weights `w(d)` of the discrete bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    h: f64,
    offsets: Vec<(i64, i64, f64)>,
}

impl Stencil {
    pub fn offsets(&self) -> &[(i64, i64, f64)] {
        &self.offsets
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Largest `|di|` or `|dj|` with nonzero weight.
    pub fn radius(&self) -> usize {
        self.offsets
            .iter()
            .map(|&(i, j, _)| i.unsigned_abs().max(j.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn weight_sum(&self) -> f64 {
        self.offsets.iter().map(|o| o.2).sum()
    }

    pub fn weight(&self, di: i64, dj: i64) -> f64 {
        self.offsets
            .iter()
            .find(|o| o.0 == di && o.1 == dj)
            .map_or(0.0, |o| o.2)
    }

    /// Discrete analogue of `int z_1^2 gamma`, i.e. the diffusion coefficient
    /// the stencil reproduces on quadratics.
    pub fn second_moment(&self) -> f64 {
        let h = self.h;
        self.offsets
            .iter()
            .map(|&(di, _, w)| 0.5 * w * (di as f64 * h).powi(2) / (h * h * h * h))
            .sum()
    }
}

/// `w(d) = 2 gamma_delta(|d| h) [d h in template] h^4`, rim offsets refined.
pub fn build_stencil(grid: &Grid, k: &Kernel, nb: &NeighborhoodSpec, refine: usize) -> Result<Stencil> {
    nb.validate()?;
    if k.dim() != 2 {
        return Err(Error::invalid(format!("stencil is two-dimensional; kernel has d = {}", k.dim())));
    }
    if k.s() >= k.dim() as f64 {
        return Err(Error::UnsupportedKernel(format!(
            "cell-pair weights need s < d; got s = {}",
            k.s()
        )));
    }
    match nb.strategy {
        Strategy::Ball => {}
        Strategy::RegularNGon { n, .. } if n % 2 == 0 => {}
        Strategy::RegularNGon { n, .. } => {
            return Err(Error::Unsupported(format!(
                "solver needs an even side count (got {n}); odd templates are not centrally symmetric"
            )))
        }
        Strategy::Nocaps { .. } => {
            return Err(Error::Unsupported(
                "solver needs a translation-invariant neighborhood".into(),
            ))
        }
    }
    let region = [OffsetRegion::new(
        |z: Point2| nb.template_contains(z),
        |z: Point2| nb.template_boundary_distance(z),
    )];
    let weights = offset_weights(grid.h(), nb.delta, k, &region, refine)?;
    Ok(Stencil {
        h: grid.h(),
        offsets: weights
            .into_iter()
            .map(|((di, dj), [w])| (di, dj, 2.0 * w))
            .collect(),
    })
}

/// Zero-padded copy of the free block, padded by the stencil radius.
struct Padded {
    side: usize,
    pad: usize,
    data: Vec<f64>,
}

impl Padded {
    fn new(interior: usize, pad: usize) -> Self {
        let side = interior + 2 * pad;
        Self {
            side,
            pad,
            data: vec![0.0; side * side],
        }
    }

    fn load(&mut self, interior: usize, values: &[f64]) {
        for a in 0..interior {
            let row = (a + self.pad) * self.side + self.pad;
            self.data[row..row + interior].copy_from_slice(&values[a * interior..(a + 1) * interior]);
        }
    }
}

/// Matrix-free `A u` on free cells, with `A ~ -L` (rows scaled by `1/h^2`).
struct Operator {
    interior: usize,
    diag: f64,
    /// (linear offset into the padded array, weight / h^2)
    taps: Vec<(isize, f64)>,
    pad: usize,
}

impl Operator {
    fn new(stencil: &Stencil, grid: &Grid) -> Self {
        let pad = stencil.radius();
        let side = (grid.interior + 2 * pad) as isize;
        let inv_h2 = 1.0 / (stencil.h * stencil.h);
        let taps = stencil
            .offsets
            .iter()
            .map(|&(di, dj, w)| (di as isize * side + dj as isize, w * inv_h2))
            .collect::<Vec<_>>();
        let diag = taps.iter().map(|t| t.1).sum();
        Self {
            interior: grid.interior,
            diag,
            taps,
            pad,
        }
    }

    /// `out_i = sum_d w(d) / h^2 * padded[i + d]` over free cells.
    fn neighbor_sum(&self, padded: &Padded, out: &mut [f64]) {
        let n = self.interior;
        let side = padded.side;
        out.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
            let base = (a + self.pad) * side + self.pad;
            for (b, slot) in row.iter_mut().enumerate() {
                let center = (base + b) as isize;
                let mut acc = 0.0;
                for &(off, w) in &self.taps {
                    acc += w * padded.data[(center + off) as usize];
                }
                *slot = acc;
            }
        });
    }

    fn apply(&self, padded: &mut Padded, u: &[f64], out: &mut [f64]) {
        padded.load(self.interior, u);
        self.neighbor_sum(padded, out);
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = self.diag * ui - *o;
        }
    }
}

/// `(A u)_i = sum_d w(d) (u_i - u_{i+d}) / h^2`, with `u = 0` off the free cells.
pub fn assemble_apply(stencil: &Stencil, field: &Field) -> Field {
    let grid = field.grid();
    let op = Operator::new(stencil, grid);
    let mut padded = Padded::new(grid.interior, op.pad);
    let mut out = vec![0.0; grid.dof()];
    op.apply(&mut padded, field.values(), &mut out);
    Field {
        grid: grid.clone(),
        values: out,
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: Field,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Default relative residual for [`solve`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Solves the homogeneous volume-constrained problem `A u = f`.
pub fn solve(stencil: &Stencil, grid: &Grid, f: &dyn ScalarField, tol: f64) -> Result<Field> {
    solve_with_constraint(stencil, grid, f, None, tol).map(|s| s.field)
}

/// Solves `A u = f` with `u = g` on the layer (`g = None` means zero).
///
/// Known layer values move to the right-hand side:
/// `b_i = f(c_i) + sum_{i+d in layer} w(d) / h^2 g(c_{i+d})`.
pub fn solve_with_constraint(
    stencil: &Stencil,
    grid: &Grid,
    f: &dyn ScalarField,
    g: Option<&dyn ScalarField>,
    tol: f64,
) -> Result<Solution> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if (stencil.h - grid.h).abs() > 1e-15 * grid.h {
        return Err(Error::invalid("stencil and grid use different cell sizes"));
    }
    let op = Operator::new(stencil, grid);
    let n = grid.interior;
    let dof = grid.dof();
    let mut padded = Padded::new(n, op.pad);

    let mut b: Vec<f64> = grid.free_centers().map(|c| f.value(c)).collect();
    if let Some(g) = g {
        // Layer values in the padding, zeros inside.
        let origin = grid.free_center(0, 0);
        for a in 0..padded.side {
            for c in 0..padded.side {
                let inside = (op.pad..op.pad + n).contains(&a) && (op.pad..op.pad + n).contains(&c);
                if !inside {
                    let p = Point2::new(
                        origin.x + (a as f64 - op.pad as f64) * grid.h,
                        origin.y + (c as f64 - op.pad as f64) * grid.h,
                    );
                    padded.data[a * padded.side + c] = g.value(p);
                }
            }
        }
        let mut lift = vec![0.0; dof];
        op.neighbor_sum(&padded, &mut lift);
        for (bi, li) in b.iter_mut().zip(&lift) {
            *bi += li;
        }
        padded.data.fill(0.0);
    }

    let max_iter = ((10.0 * (dof as f64).sqrt()).ceil() as usize).max(10);
    let (x, iterations, relative_residual) = conjugate_gradient(
        |u, out| op.apply(&mut padded, u, out),
        &b,
        tol,
        max_iter,
    )?;
    Ok(Solution {
        field: Field {
            grid: grid.clone(),
            values: x,
        },
        iterations,
        relative_residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain CG from a zero initial guess; returns `(x, iterations, |r| / |b|)`.
fn conjugate_gradient<A: FnMut(&[f64], &mut [f64])>(
    mut apply: A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, it, rel));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
    })
}

/// `sqrt(sum_free h^2 (u_i - exact(c_i))^2)`.
pub fn l2_error(u: &Field, exact: &dyn ScalarField) -> f64 {
    let h = u.grid().h();
    let sum: f64 = u
        .grid()
        .free_centers()
        .zip(u.values())
        .map(|(c, &v)| {
            let d = v - exact.value(c);
            d * d
        })
        .sum();
    (h * h * sum).sqrt()
}
