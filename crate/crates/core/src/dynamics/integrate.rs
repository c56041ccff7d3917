//! Multi-time integral sections by ordered axis sweeps.
//!
//! Starting from one point, the grid is filled by integrating `X_{a₁}`
//! along the first axis of `order`, then `X_{a₂}` from every point reached
//! so far, and so on. For an integrable k-vector field the result does not
//! depend on the order, so comparing two orders measures integrability.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::field::KVectorSource;
use crate::linalg::max_abs;
use crate::{Error, Result};

/// Step count and step size along one time axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub steps: usize,
    pub h: f64,
}

impl FromStr for GridAxis {
    type Err = Error;
    /// `"steps@h"`, e.g. `"1000@1e-3"`.
    fn from_str(s: &str) -> Result<GridAxis> {
        let bad = || Error::Invalid(format!("grid axis `{s}` is not of the form steps@h"));
        let (steps, h) = s.trim().split_once('@').ok_or_else(bad)?;
        let steps: usize = steps.trim().parse().map_err(|_| bad())?;
        let h: f64 = h.trim().parse().map_err(|_| bad())?;
        if steps == 0 || !(h.is_finite() && h > 0.0) {
            return Err(Error::Invalid(format!("grid axis `{s}` needs steps > 0 and h > 0")));
        }
        Ok(GridAxis { steps, h })
    }
}

/// Comma-separated list of axes, `"1000@1e-3,500@2e-3"`.
pub fn parse_grid(s: &str) -> Result<Vec<GridAxis>> {
    s.split(',').map(str::parse).collect()
}

/// Phase points indexed by a multi-index; the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTimeGrid {
    axes: Vec<GridAxis>,
    order: Vec<usize>,
    points: Vec<Vec<f64>>,
}

impl MultiTimeGrid {
    fn new(axes: &[GridAxis], order: &[usize], start: &[f64]) -> MultiTimeGrid {
        let total = axes.iter().map(|a| a.steps + 1).product();
        let mut points = vec![vec![f64::NAN; start.len()]; total];
        points[0] = start.to_vec();
        MultiTimeGrid {
            axes: axes.to_vec(),
            order: order.to_vec(),
            points,
        }
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    /// Axis order used by the sweep.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.steps + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (i, a)| acc * (a.steps + 1) + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.axes.len()];
        for (slot, a) in index.iter_mut().zip(&self.axes).rev() {
            *slot = flat % (a.steps + 1);
            flat /= a.steps + 1;
        }
        index
    }

    pub fn point(&self, index: &[usize]) -> &[f64] {
        &self.points[self.flat_index(index)]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn times(&self, index: &[usize]) -> Vec<f64> {
        index.iter().zip(&self.axes).map(|(i, a)| *i as f64 * a.h).collect()
    }

    /// Whether the point was reached (escaped sweeps leave NaN holes).
    pub fn is_reached(&self, flat: usize) -> bool {
        self.points[flat].iter().all(|x| !x.is_nan())
    }

    /// The same grid pushed through `f`; unreached points stay NaN.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<MultiTimeGrid> {
        let mut points = Vec::with_capacity(self.points.len());
        let mut width = None;
        for (flat, z) in self.points.iter().enumerate() {
            if self.is_reached(flat) {
                let image = f(z)?;
                width = Some(image.len());
                points.push(image);
            } else {
                points.push(Vec::new());
            }
        }
        let width = width.unwrap_or(0);
        for p in &mut points {
            if p.is_empty() {
                *p = vec![f64::NAN; width];
            }
        }
        Ok(MultiTimeGrid {
            axes: self.axes.clone(),
            order: self.order.clone(),
            points,
        })
    }

    /// CSV with header `t1..tk` followed by `names`.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.axes.len())
            .map(|a| format!("t{a}"))
            .chain(names.iter().cloned())
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for flat in 0..self.points.len() {
            let index = self.multi_index(flat);
            let row: Vec<String> = self
                .times(&index)
                .iter()
                .chain(&self.points[flat])
                .map(|v| format!("{v:?}"))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Integral section together with its diagnostics.
#[derive(Clone, Debug)]
pub struct IntegralSection {
    pub grid: MultiTimeGrid,
    /// Max `‖∂φ/∂t^κ − X_κ∘φ‖_∞` by finite differences on the grid.
    pub hdw_residual: f64,
    /// Max distance to the grid swept in reversed axis order; infinite if
    /// that sweep escaped the domain.
    pub path_defect: f64,
}

fn check_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    for &a in order {
        if a >= k || seen[a] {
            return Err(Error::Invalid(format!("axis order {order:?} is not a permutation of 0..{k}")));
        }
        seen[a] = true;
    }
    if order.len() != k {
        return Err(Error::Invalid(format!("axis order {order:?} is not a permutation of 0..{k}")));
    }
    Ok(())
}

/// One classical Runge–Kutta increment `z_{n+1} − z_n`.
fn rk4_increment(x: &dyn KVectorSource, axis: usize, z: &[f64], h: f64) -> Result<Vec<f64>> {
    let shifted = |base: &[f64], slope: &[f64], c: f64| -> Vec<f64> {
        base.iter().zip(slope).map(|(b, s)| b + c * s).collect()
    };
    let k1 = x.eval(z)?.swap_remove(axis);
    let k2 = x.eval(&shifted(z, &k1, h / 2.0))?.swap_remove(axis);
    let k3 = x.eval(&shifted(z, &k2, h / 2.0))?.swap_remove(axis);
    let k4 = x.eval(&shifted(z, &k3, h))?.swap_remove(axis);
    Ok((0..z.len())
        .map(|i| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Adds `increment` to `z` with Kahan compensation carried in `carry`, so
/// rounding does not accumulate along a line.
fn compensated_add(z: &mut [f64], carry: &mut [f64], increment: &[f64]) {
    for ((zi, ci), di) in z.iter_mut().zip(carry.iter_mut()).zip(increment) {
        let y = di - *ci;
        let t = *zi + y;
        *ci = (t - *zi) - y;
        *zi = t;
    }
}

/// The raw ordered sweep. On leaving the domain (or on an evaluation
/// failure) the partial grid is returned inside [`Error::DomainEscape`].
pub fn sweep(
    x: &dyn KVectorSource,
    start: &[f64],
    axes: &[GridAxis],
    order: &[usize],
    inside: &dyn Fn(&[f64]) -> bool,
) -> Result<MultiTimeGrid> {
    let k = x.k();
    if axes.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: axes.len(),
        });
    }
    if start.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: start.len(),
        });
    }
    check_order(order, k)?;
    let mut grid = MultiTimeGrid::new(axes, order, start);
    if !inside(start) {
        return Err(Error::DomainEscape {
            index: vec![0; k],
            partial: Some(Box::new(grid)),
        });
    }
    for (s, &axis) in order.iter().enumerate() {
        let pending = &order[s..];
        let seeds: Vec<usize> = (0..grid.len())
            .filter(|&flat| {
                let index = grid.multi_index(flat);
                pending.iter().all(|&b| index[b] == 0)
            })
            .collect();
        for flat in seeds {
            let mut index = grid.multi_index(flat);
            let mut z = grid.points[flat].clone();
            let mut carry = vec![0.0; z.len()];
            for step in 1..=axes[axis].steps {
                index[axis] = step;
                let next = rk4_increment(x, axis, &z, axes[axis].h).map(|d| {
                    let mut p = z.clone();
                    let mut c = carry.clone();
                    compensated_add(&mut p, &mut c, &d);
                    (p, c)
                });
                match next {
                    Ok((p, c)) if inside(&p) => {
                        z = p;
                        carry = c;
                    }
                    _ => {
                        return Err(Error::DomainEscape {
                            index,
                            partial: Some(Box::new(grid)),
                        })
                    }
                }
                let target = grid.flat_index(&index);
                grid.points[target] = z.clone();
            }
        }
    }
    Ok(grid)
}

/// Fourth-order finite-difference derivative along `axis` at `index`:
/// centred where two neighbours exist on each side, one-sided five-point
/// stencils at the first two and last two points. Axes with fewer than
/// four steps fall back to second-order central differences in the
/// interior. Returns `None` where no stencil fits or a needed point was
/// not reached.
pub fn fd_derivative(grid: &MultiTimeGrid, index: &[usize], axis: usize) -> Option<Vec<f64>> {
    let steps = grid.axes[axis].steps;
    let h = grid.axes[axis].h;
    let i = index[axis];
    let at = |j: usize| {
        let mut m = index.to_vec();
        m[axis] = j;
        grid.point(&m)
    };
    let (offsets, weights, denom): (Vec<usize>, &[f64], f64) = if steps >= 4 {
        if i >= 2 && i + 2 <= steps {
            (vec![i - 2, i - 1, i + 1, i + 2], &[1.0, -8.0, 8.0, -1.0], 12.0)
        } else if i == 0 {
            ((0..5).collect(), &[-25.0, 48.0, -36.0, 16.0, -3.0], 12.0)
        } else if i == 1 {
            ((0..5).collect(), &[-3.0, -10.0, 18.0, -6.0, 1.0], 12.0)
        } else if i == steps - 1 {
            ((steps - 4..=steps).collect(), &[-1.0, 6.0, -18.0, 10.0, 3.0], 12.0)
        } else {
            ((steps - 4..=steps).collect(), &[3.0, -16.0, 36.0, -48.0, 25.0], 12.0)
        }
    } else if i >= 1 && i < steps {
        (vec![i - 1, i + 1], &[-1.0, 1.0], 2.0)
    } else {
        return None;
    };
    let dim = grid.points[0].len();
    let mut out = vec![0.0; dim];
    for (&j, &w) in offsets.iter().zip(weights) {
        let p = at(j);
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    for o in &mut out {
        *o /= denom * h;
    }
    out.iter().all(|v| !v.is_nan()).then_some(out)
}

/// Max `‖∂φ/∂t^κ − X_κ∘φ‖_∞` over grid points with a stencil.
pub fn grid_residual(x: &dyn KVectorSource, grid: &MultiTimeGrid) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for flat in 0..grid.len() {
        let index = grid.multi_index(flat);
        let mut values = None;
        for axis in 0..grid.axes.len() {
            let Some(d) = fd_derivative(grid, &index, axis) else {
                continue;
            };
            if values.is_none() {
                values = Some(x.eval(&grid.points[flat])?);
            }
            let v = &values.as_ref().expect("just set")[axis];
            let diff: Vec<f64> = d.iter().zip(v).map(|(a, b)| a - b).collect();
            worst = worst.max(max_abs(&diff));
        }
    }
    Ok(worst)
}

/// Sweeps in `order`, then measures the residual and the distance to the
/// sweep in reversed order.
pub fn integrate_section(
    x: &dyn KVectorSource,
    start: &[f64],
    axes: &[GridAxis],
    order: &[usize],
    inside: &dyn Fn(&[f64]) -> bool,
) -> Result<IntegralSection> {
    let grid = sweep(x, start, axes, order, inside)?;
    let hdw_residual = grid_residual(x, &grid)?;
    let path_defect = if x.k() < 2 {
        0.0
    } else {
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        match sweep(x, start, axes, &reversed, inside) {
            Ok(other) => grid
                .points
                .iter()
                .zip(&other.points)
                .map(|(a, b)| a.iter().zip(b).fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs())))
                .fold(0.0, f64::max),
            Err(Error::DomainEscape { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    };
    Ok(IntegralSection {
        grid,
        hdw_residual,
        path_defect,
    })
}

/// `max |f(φ) − f(φ(0))|` over reached grid points.
pub fn max_deviation(grid: &MultiTimeGrid, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    let reference = f(grid.start())?;
    let mut worst: f64 = 0.0;
    for (flat, z) in grid.points.iter().enumerate() {
        if grid.is_reached(flat) {
            worst = worst.max((f(z)? - reference).abs());
        }
    }
    Ok(worst)
}
