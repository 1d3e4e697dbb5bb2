//! Romberg integration over the real frequency axis.
//!
//! The line is truncated to a symmetric window and cut into panels at every
//! declared jump point, so that each panel sees a smooth integrand. Each panel
//! is integrated by trapezoid refinement with full Richardson extrapolation.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::ModelParams;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_LEVEL: usize = 22;
/// Absolute convergence floor for panels whose integral is close to zero.
pub const ABS_FLOOR: f64 = 1e-15;
/// Convergence is not tested before this level (2^MIN_LEVEL intervals).
pub const MIN_LEVEL: usize = 5;
/// Half-width of the integration window in units of `max(omega_c, W)`.
pub const WINDOW_FACTOR: f64 = 30.0;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("empty or reversed panel [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error(
        "Romberg did not converge on [{lo}, {hi}] after {levels} levels \
         (best {best}, est_error {est_error:e})"
    )]
    NotConverged {
        lo: f64,
        hi: f64,
        levels: usize,
        best: Complex64,
        est_error: f64,
    },
}

/// Scalar types the integrator can accumulate.
pub trait QuadValue:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// A function of frequency together with where it jumps and how fast it decays.
pub struct Integrand<F> {
    eval: F,
    jump_points: Vec<f64>,
    tail_scale: f64,
}

impl<F, T> Integrand<F>
where
    F: Fn(f64) -> T + Sync,
    T: QuadValue,
{
    /// Jump points are sorted and deduplicated; non-finite entries are dropped.
    pub fn new(eval: F, jump_points: impl IntoIterator<Item = f64>, tail_scale: f64) -> Self {
        let mut jump_points: Vec<f64> = jump_points.into_iter().filter(|x| x.is_finite()).collect();
        jump_points.sort_by(f64::total_cmp);
        jump_points.dedup();
        Integrand {
            eval,
            jump_points,
            tail_scale,
        }
    }

    pub fn eval(&self, omega: f64) -> T {
        (self.eval)(omega)
    }

    pub fn jump_points(&self) -> &[f64] {
        &self.jump_points
    }

    pub fn tail_scale(&self) -> f64 {
        self.tail_scale
    }

    /// Adds break points that are not discontinuities. Only useful for testing
    /// that the result does not depend on where panels are cut.
    pub fn with_extra_splits(mut self, splits: impl IntoIterator<Item = f64>) -> Self {
        self.jump_points.extend(splits.into_iter().filter(|x| x.is_finite()));
        self.jump_points.sort_by(f64::total_cmp);
        self.jump_points.dedup();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub est_error: f64,
    pub panels: usize,
    pub levels_used: Vec<usize>,
}

/// Romberg integration of a smooth function over `[lo, hi]`.
///
/// Row `n` of the table is the trapezoid rule on `2^n` intervals; column `m`
/// removes the `h^{2m}` error term. The endpoints are sampled one ulp inside
/// the panel, so a discontinuity sitting exactly on an endpoint contributes its
/// one-sided limit. Stops once two successive diagonal entries agree to
/// `rel_tol` (or [`ABS_FLOOR`]) at a level of at least [`MIN_LEVEL`].
pub fn romberg_panel<F, T>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_level: usize,
) -> Result<QuadratureResult<T>, QuadratureError>
where
    F: Fn(f64) -> T,
    T: QuadValue,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(QuadratureError::InvalidInterval { lo, hi });
    }
    let width = hi - lo;
    let mut prev_row: Vec<T> = vec![(f(lo.next_up()) + f(hi.next_down())) * (0.5 * width)];
    let mut row: Vec<T> = Vec::with_capacity(max_level + 1);
    let mut last_diff = f64::INFINITY;

    for level in 1..=max_level {
        let n_new = 1usize << (level - 1);
        let h = width / (1usize << level) as f64;
        let mut sum = T::default();
        for k in 0..n_new {
            sum = sum + f(lo + (2 * k + 1) as f64 * h);
        }
        row.clear();
        row.push(prev_row[0] * 0.5 + sum * h);
        let mut factor = 1.0;
        for m in 1..=level {
            factor *= 4.0;
            let refined = row[m - 1] + (row[m - 1] - prev_row[m - 1]) * (1.0 / (factor - 1.0));
            row.push(refined);
        }

        let best = row[level];
        last_diff = (best - prev_row[level - 1]).magnitude();
        if level >= MIN_LEVEL && last_diff <= (rel_tol * best.magnitude()).max(ABS_FLOOR) {
            return Ok(QuadratureResult {
                value: best,
                est_error: last_diff,
                panels: 1,
                levels_used: vec![level],
            });
        }
        std::mem::swap(&mut prev_row, &mut row);
    }

    Err(QuadratureError::NotConverged {
        lo,
        hi,
        levels: max_level,
        best: prev_row[max_level].to_complex(),
        est_error: last_diff,
    })
}

/// Integration window `[-Ω, Ω]` with `Ω = 30 max(omega_c, W)`.
pub fn window(p: &ModelParams) -> f64 {
    WINDOW_FACTOR * p.omega_c().max(p.w())
}

/// Integrates over `[lo, hi]`, splitting at every jump point strictly inside.
/// Panels run in parallel; the sum is taken in panel order.
pub fn integrate_window<F, T>(
    f: &Integrand<F>,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_level: usize,
) -> Result<QuadratureResult<T>, QuadratureError>
where
    F: Fn(f64) -> T + Sync,
    T: QuadValue,
{
    if !(lo < hi) {
        return Err(QuadratureError::InvalidInterval { lo, hi });
    }
    let mut edges = vec![lo];
    edges.extend(f.jump_points.iter().copied().filter(|&x| x > lo && x < hi));
    edges.push(hi);

    let panels: Vec<QuadratureResult<T>> = edges
        .par_windows(2)
        .map(|e| romberg_panel(&f.eval, e[0], e[1], rel_tol, max_level))
        .collect::<Result<_, _>>()?;

    let mut value = T::default();
    let mut est_error = 0.0;
    let mut levels_used = Vec::with_capacity(panels.len());
    for panel in &panels {
        value = value + panel.value;
        est_error += panel.est_error;
        levels_used.extend_from_slice(&panel.levels_used);
    }
    Ok(QuadratureResult {
        value,
        est_error,
        panels: panels.len(),
        levels_used,
    })
}

/// Integral over the whole real line.
///
/// The error estimate adds the two truncated tails, bounded as
/// `tail_scale * |f(±Ω)|` for an integrand decaying like `exp(-|ω| / tail_scale)`.
pub fn integrate_line<F, T>(f: &Integrand<F>, rel_tol: f64, p: &ModelParams) -> Result<QuadratureResult<T>, QuadratureError>
where
    F: Fn(f64) -> T + Sync,
    T: QuadValue,
{
    let om = window(p);
    let mut res = integrate_window(f, -om, om, rel_tol, DEFAULT_MAX_LEVEL)?;
    let tail = f.tail_scale * (f.eval(-om).magnitude() + f.eval(om).magnitude());
    res.est_error += tail;
    Ok(res)
}
