//! One-particle correlation, steady-state current and parameter sweeps.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dyson::{ClosedForm, DysonError};
use crate::model::{ModelError, ModelParams};
use crate::quadrature::{self, Integrand, QuadratureError};

/// Largest imaginary part tolerated in an integral that must be real.
pub const REALITY_TOL: f64 = 1e-10;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ObservableError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("C({i},{j}) at eV = {ev}: {source}")]
    CorrelationQuadrature {
        i: usize,
        j: usize,
        ev: f64,
        source: QuadratureError,
    },
    #[error("I at eV = {ev}: {source}")]
    CurrentQuadrature { ev: f64, source: QuadratureError },
    #[error("eV = {ev}: {source}")]
    Dyson { ev: f64, source: DysonError },
    #[error("{what} at eV = {ev} has imaginary part {im:e}")]
    NotReal { what: String, ev: f64, im: f64 },
    #[error("bias grid must be non-empty and sorted")]
    Grid,
    #[error("distance {d} must satisfy 1 <= d < {len}")]
    Distance { d: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub i: usize,
    pub j: usize,
    pub ev: f64,
    pub value: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPoint {
    pub ev: f64,
    pub value: f64,
    pub est_error: f64,
}

/// The bias values where the lead occupations jump, plus the wire Fermi point.
pub fn jump_points(p: &ModelParams) -> [f64; 3] {
    let half = 0.5 * p.ev();
    [-half.abs(), 0.0, half.abs()]
}

// Evaluates `body` on a closed form at `omega`. A failed closed form is recorded
// in `slot` and poisons the sample with NaN, which stops the integration.
fn with_closed_form(
    omega: f64,
    p: &ModelParams,
    slot: &OnceLock<DysonError>,
    body: impl FnOnce(&ClosedForm) -> Complex64,
) -> Complex64 {
    match ClosedForm::new(omega, p) {
        Ok(cf) => body(&cf),
        Err(e) => {
            let _ = slot.set(e);
            Complex64::new(f64::NAN, f64::NAN)
        }
    }
}

/// Integrand of `C_ij`: `-(i/2) (F_ij + F_ji) / 2π`.
pub fn correlation_integrand(omega: f64, i: usize, j: usize, p: &ModelParams) -> Result<Complex64, ObservableError> {
    p.check_site(i)?;
    p.check_site(j)?;
    let cf = ClosedForm::new(omega, p).map_err(|source| ObservableError::Dyson { ev: p.ev(), source })?;
    Ok(correlation_sample(&cf, i as i64, j as i64))
}

#[inline]
fn correlation_sample(cf: &ClosedForm, i: i64, j: i64) -> Complex64 {
    let sum = cf.f_full_unchecked(i, j) + cf.f_full_unchecked(j, i);
    Complex64::new(0.0, -0.5) * sum / (2.0 * PI)
}

/// `C_ij = -∫ dω/2π (i/2) (F_ij(ω) + F_ji(ω))`.
pub fn correlation(i: usize, j: usize, p: &ModelParams, rel_tol: f64) -> Result<CorrelationPoint, ObservableError> {
    p.check_site(i)?;
    p.check_site(j)?;
    let (si, sj) = (i as i64, j as i64);
    let failure = OnceLock::new();
    let integrand = Integrand::new(
        |omega| with_closed_form(omega, p, &failure, |cf| correlation_sample(cf, si, sj)),
        jump_points(p),
        p.omega_c(),
    );
    let res = quadrature::integrate_line(&integrand, rel_tol, p);
    if let Some(source) = failure.get() {
        return Err(ObservableError::Dyson {
            ev: p.ev(),
            source: source.clone(),
        });
    }
    let res = res.map_err(|source| ObservableError::CorrelationQuadrature {
        i,
        j,
        ev: p.ev(),
        source,
    })?;
    if res.value.im.abs() >= REALITY_TOL {
        return Err(ObservableError::NotReal {
            what: format!("C({i},{j})"),
            ev: p.ev(),
            im: res.value.im,
        });
    }
    Ok(CorrelationPoint {
        i,
        j,
        ev: p.ev(),
        value: res.value.re,
        est_error: res.est_error,
    })
}

#[inline]
fn current_sample(cf: &ClosedForm, t_prime: f64) -> Complex64 {
    let (gr_1l, ga_l1) = cf.gr_1l_and_ga_l1();
    let prefactor = 0.5 * t_prime.powi(4);
    prefactor * ga_l1 * gr_1l * cf.lead_imbalance() / (2.0 * PI)
}

/// Integrand of the current.
pub fn current_integrand(omega: f64, p: &ModelParams) -> Result<Complex64, ObservableError> {
    let cf = ClosedForm::new(omega, p).map_err(|source| ObservableError::Dyson { ev: p.ev(), source })?;
    Ok(current_sample(&cf, p.t_prime()))
}

/// Steady current in units `e = ħ = 1`,
/// `I = (T'^4 / 2) ∫ dω/2π G^a_L1 G^r_1L [(g^a_αα - g^r_αα) f_α'α' + f_αα (g^r_α'α' - g^a_α'α')]`.
pub fn current(p: &ModelParams, rel_tol: f64) -> Result<CurrentPoint, ObservableError> {
    let failure = OnceLock::new();
    let t_prime = p.t_prime();
    let integrand = Integrand::new(
        |omega| with_closed_form(omega, p, &failure, |cf| current_sample(cf, t_prime)),
        jump_points(p),
        // |G_L1|^2 decays twice as fast as a single wire function
        0.5 * p.omega_c(),
    );
    let res = quadrature::integrate_line(&integrand, rel_tol, p);
    if let Some(source) = failure.get() {
        return Err(ObservableError::Dyson {
            ev: p.ev(),
            source: source.clone(),
        });
    }
    let res = res.map_err(|source| ObservableError::CurrentQuadrature { ev: p.ev(), source })?;
    if res.value.im.abs() >= REALITY_TOL {
        return Err(ObservableError::NotReal {
            what: "I".to_string(),
            ev: p.ev(),
            im: res.value.im,
        });
    }
    Ok(CurrentPoint {
        ev: p.ev(),
        value: res.value.re,
        est_error: res.est_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Abscissa {
    Bias(f64),
    Site(usize),
}

impl Abscissa {
    pub fn as_f64(self) -> f64 {
        match self {
            Abscissa::Bias(x) => x,
            Abscissa::Site(i) => i as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: Abscissa,
    pub outcome: Result<Measurement, ObservableError>,
}

/// Table of `(x, observable, est_error)` rows in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub rows: Vec<SweepRow>,
}

/// Fixed 12-significant-digit scientific notation; non-finite values print as `nan`.
pub fn format_sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".to_string()
    }
}

impl SweepResult {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_err())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ObservableError> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().err())
    }

    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.x.as_f64()).collect()
    }

    /// Values and error estimates, `None` if any row failed.
    pub fn measurements(&self) -> Option<Vec<Measurement>> {
        self.rows.iter().map(|r| r.outcome.as_ref().ok().copied()).collect()
    }

    pub fn values(&self) -> Option<Vec<f64>> {
        Some(self.measurements()?.into_iter().map(|m| m.value).collect())
    }

    /// CSV with a header line, LF line endings, failed rows as `nan`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{},{},est_error", self.x_label, self.y_label)?;
        for row in &self.rows {
            let x = match row.x {
                Abscissa::Bias(v) => format_sci(v),
                Abscissa::Site(i) => i.to_string(),
            };
            let (v, e) = match &row.outcome {
                Ok(m) => (m.value, m.est_error),
                Err(_) => (f64::NAN, f64::NAN),
            };
            writeln!(out, "{x},{},{}", format_sci(v), format_sci(e))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

fn check_grid(grid: &[f64]) -> Result<(), ObservableError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] <= w[1])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(ObservableError::Grid);
    }
    Ok(())
}

fn correlation_row(i: usize, j: usize, p: &ModelParams, rel_tol: f64) -> Result<Measurement, ObservableError> {
    correlation(i, j, p, rel_tol).map(|c| Measurement {
        value: c.value,
        est_error: c.est_error,
    })
}

/// `C_ij` over a grid of biases.
pub fn sweep_bias(i: usize, j: usize, ev_grid: &[f64], p: &ModelParams, rel_tol: f64) -> Result<SweepResult, ObservableError> {
    check_grid(ev_grid)?;
    p.check_site(i)?;
    p.check_site(j)?;
    let rows = ev_grid
        .par_iter()
        .map(|&ev| SweepRow {
            x: Abscissa::Bias(ev),
            outcome: p.with_bias(ev).map_err(Into::into).and_then(|q| correlation_row(i, j, &q, rel_tol)),
        })
        .collect();
    Ok(SweepResult {
        x_label: "eV",
        y_label: "C",
        rows,
    })
}

/// `C_{i0, i}` for every wire site `i`.
pub fn sweep_distance(i0: usize, p: &ModelParams, rel_tol: f64) -> Result<SweepResult, ObservableError> {
    p.check_site(i0)?;
    let rows = (1..=p.wire_length())
        .into_par_iter()
        .map(|i| SweepRow {
            x: Abscissa::Site(i),
            outcome: correlation_row(i0, i, p, rel_tol),
        })
        .collect();
    Ok(SweepResult {
        x_label: "i",
        y_label: "C",
        rows,
    })
}

/// `C_{i, i+d}` for `i = 1..=L-d`.
pub fn sweep_position(d: usize, p: &ModelParams, rel_tol: f64) -> Result<SweepResult, ObservableError> {
    let len = p.wire_length();
    if d == 0 || d >= len {
        return Err(ObservableError::Distance { d, len });
    }
    let rows = (1..=len - d)
        .into_par_iter()
        .map(|i| SweepRow {
            x: Abscissa::Site(i),
            outcome: correlation_row(i, i + d, p, rel_tol),
        })
        .collect();
    Ok(SweepResult {
        x_label: "i",
        y_label: "C",
        rows,
    })
}

/// Current over a grid of biases.
pub fn sweep_iv(ev_grid: &[f64], p: &ModelParams, rel_tol: f64) -> Result<SweepResult, ObservableError> {
    check_grid(ev_grid)?;
    let rows = ev_grid
        .par_iter()
        .map(|&ev| SweepRow {
            x: Abscissa::Bias(ev),
            outcome: p
                .with_bias(ev)
                .map_err(Into::into)
                .and_then(|q| current(&q, rel_tol))
                .map(|c| Measurement {
                    value: c.value,
                    est_error: c.est_error,
                }),
        })
        .collect();
    Ok(SweepResult {
        x_label: "eV",
        y_label: "I",
        rows,
    })
}

/// Indices `k` where the sign flips between significant entries `k` and the
/// next significant entry. An entry is significant when `|value| > factor * est_error`.
pub fn significant_sign_changes(rows: &[Measurement], factor: f64) -> Vec<(usize, usize)> {
    let significant: Vec<usize> = (0..rows.len())
        .filter(|&k| rows[k].value.abs() > factor * rows[k].est_error && rows[k].value != 0.0)
        .collect();
    significant
        .windows(2)
        .filter(|w| rows[w[0]].value.signum() != rows[w[1]].value.signum())
        .map(|w| (w[0], w[1]))
        .collect()
}

/// True if the sequence both rises and falls by more than the combined error.
pub fn is_non_monotonic(rows: &[Measurement]) -> bool {
    let mut rises = false;
    let mut falls = false;
    for w in rows.windows(2) {
        let delta = w[1].value - w[0].value;
        let noise = w[0].est_error + w[1].est_error;
        rises |= delta > noise;
        falls |= delta < -noise;
    }
    rises && falls
}

/// True if no step decreases by more than the combined error estimate.
pub fn is_nondecreasing(rows: &[Measurement]) -> bool {
    rows.windows(2)
        .all(|w| w[1].value - w[0].value >= -(w[0].est_error + w[1].est_error))
}

/// Pearson correlation between a position profile and its mirror image
/// `C_{i,i+d} -> C_{L-d+1-i, L+1-i}`, i.e. the same row list reversed.
pub fn mirror_correlation_coefficient(profile: &[f64]) -> f64 {
    let n = profile.len() as f64;
    let mirrored: Vec<f64> = profile.iter().rev().copied().collect();
    let mean = profile.iter().sum::<f64>() / n;
    let cov: f64 = profile.iter().zip(&mirrored).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let var: f64 = profile.iter().map(|a| (a - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    cov / var
}

/// Mirrored-pair sum of the bias-induced change of a position profile,
/// `Σ_i [ΔC_{i,i+d} + ΔC_{L-d+1-i, L+1-i}]` with `ΔC = C(eV) - C(0)`.
/// Returned together with the largest `|ΔC|` for scale.
pub fn net_enhancement(biased: &[f64], equilibrium: &[f64]) -> (f64, f64) {
    let delta: Vec<f64> = biased.iter().zip(equilibrium).map(|(a, b)| a - b).collect();
    let sum = delta.iter().zip(delta.iter().rev()).map(|(a, b)| a + b).sum();
    let amplitude = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (sum, amplitude)
}

/// First bias above zero where `C_ij` changes sign between significant grid
/// points, refined by bisection to `bias_tol`.
pub fn first_zero_crossing(
    i: usize,
    j: usize,
    grid: &[f64],
    p: &ModelParams,
    rel_tol: f64,
    bias_tol: f64,
) -> Result<Option<f64>, ObservableError> {
    let sweep = sweep_bias(i, j, grid, p, rel_tol)?;
    if let Some(err) = sweep.failures().next() {
        return Err(err.clone());
    }
    let rows = sweep.measurements().expect("no failed rows");
    let Some(&(a, b)) = significant_sign_changes(&rows, 10.0).first() else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (grid[a], grid[b]);
    let lo_sign = rows[a].value.signum();
    while hi - lo > bias_tol {
        let mid = 0.5 * (lo + hi);
        let c = correlation(i, j, &p.with_bias(mid)?, rel_tol)?;
        if c.value.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(value: f64, est_error: f64) -> Measurement {
        Measurement { value, est_error }
    }

    #[test]
    fn decoupled_correlation_vanishes() {
        let p = ModelParams::new(2.0, 0.0, 20, 1.0).unwrap();
        for (i, j) in [(4, 8), (1, 20), (7, 7)] {
            let c = correlation(i, j, &p, 1e-10).unwrap();
            assert!(c.value.abs() < 1e-12, "C({i},{j}) = {}", c.value);
        }
    }

    #[test]
    fn decoupled_current_vanishes() {
        let p = ModelParams::new(2.0, 0.0, 20, 1.0).unwrap();
        assert!(current(&p, 1e-10).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn correlation_is_symmetric_bitwise() {
        let p = ModelParams::default().with_bias(0.6).unwrap();
        let a = correlation(3, 11, &p, 1e-10).unwrap();
        let b = correlation(11, 3, &p, 1e-10).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn integrand_equals_imaginary_part_of_keldysh() {
        let p = ModelParams::default().with_bias(1.0).unwrap();
        for &omega in &[-5.0, -0.7, -0.1, 0.2, 0.45, 3.3] {
            let raw = correlation_integrand(omega, 4, 8, &p).unwrap();
            let f = crate::dyson::f_full(omega, 4, 8, &p).unwrap();
            assert!(raw.im.abs() < 1e-12);
            assert!((raw.re - f.im / (2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_inputs() {
        let p = ModelParams::default();
        assert!(matches!(correlation(0, 3, &p, 1e-10), Err(ObservableError::Model(_))));
        assert_eq!(sweep_bias(4, 8, &[], &p, 1e-10), Err(ObservableError::Grid));
        assert_eq!(sweep_iv(&[1.0, 0.0], &p, 1e-10), Err(ObservableError::Grid));
        assert_eq!(sweep_position(20, &p, 1e-10), Err(ObservableError::Distance { d: 20, len: 20 }));
        assert!(sweep_position(0, &p, 1e-10).is_err());
    }

    #[test]
    fn csv_layout() {
        let sweep = SweepResult {
            x_label: "eV",
            y_label: "C",
            rows: vec![
                SweepRow {
                    x: Abscissa::Bias(0.5),
                    outcome: Ok(m(-1.25e-3, 3.0e-14)),
                },
                SweepRow {
                    x: Abscissa::Bias(1.0),
                    outcome: Err(ObservableError::Grid),
                },
            ],
        };
        assert_eq!(
            sweep.to_csv_string(),
            "eV,C,est_error\n5.00000000000e-1,-1.25000000000e-3,3.00000000000e-14\n1.00000000000e0,nan,nan\n"
        );
        assert!(sweep.has_failures());
        assert_eq!(sweep.values(), None);
    }

    #[test]
    fn sign_change_detection_ignores_noise() {
        let rows = [m(0.0, 0.0), m(1.0, 0.01), m(0.001, 0.01), m(-0.5, 0.01), m(-0.4, 0.01), m(0.3, 0.01)];
        assert_eq!(significant_sign_changes(&rows, 10.0), vec![(1, 3), (4, 5)]);
        assert!(is_non_monotonic(&rows));
        assert!(!is_nondecreasing(&rows));
        assert!(is_nondecreasing(&[m(0.0, 0.0), m(1.0, 0.1), m(0.95, 0.1)]));
    }

    #[test]
    fn mirror_statistics() {
        assert!((mirror_correlation_coefficient(&[1.0, 2.0, -2.0, -1.0]) + 1.0).abs() < 1e-15);
        assert!((mirror_correlation_coefficient(&[1.0, 2.0, 2.0, 1.0]) - 1.0).abs() < 1e-15);
        let (sum, amp) = net_enhancement(&[1.0, 2.0, -2.0, -1.0], &[0.0; 4]);
        assert_eq!(sum, 0.0);
        assert_eq!(amp, 2.0);
    }
}
