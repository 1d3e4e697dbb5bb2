//! Self-checks run by `kwire validate`: closed forms against the dense
//! solver, structural identities, and the symmetries of the observables.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyson::ClosedForm;
use crate::model::{self, ModelParams, Side};
use crate::observables;
use crate::oracle::{self, BasisIndex};

pub const SEED: u64 = 0x006b_7769_7265;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative agreement between closed forms and the dense solve.
    pub oracle_rel: f64,
    /// Absolute agreement used when the reference is below 1e-6.
    pub oracle_abs: f64,
    /// Conjugation, anti-Hermiticity and residual identities.
    pub identity: f64,
    /// Lead Keldysh consistency.
    pub lead: f64,
    /// Mirror/bias symmetry of correlations.
    pub mirror: f64,
    /// Zero bias and antisymmetry of the current.
    pub current: f64,
    /// Correlation and current at T' = 0.
    pub null: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle_rel: 1e-10,
            oracle_abs: 1e-12,
            identity: 1e-12,
            lead: 1e-14,
            mirror: 1e-8,
            current: 1e-10,
            null: 1e-12,
        }
    }
}

impl Tolerances {
    /// Every tolerance replaced by `tol`.
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            oracle_rel: tol,
            oracle_abs: tol,
            identity: tol,
            lead: tol,
            mirror: tol,
            current: tol,
            null: tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Mismatch measure: absolute below 1e-6, relative otherwise. Returns
/// `(error, tolerance)` so that callers can report both.
pub fn oracle_mismatch(closed: Complex64, reference: Complex64, tol: &Tolerances) -> (f64, f64) {
    let diff = (closed - reference).norm();
    if reference.norm() < 1e-6 {
        (diff, tol.oracle_abs)
    } else {
        (diff / reference.norm(), tol.oracle_rel)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub omega: f64,
    pub i: usize,
    pub j: usize,
    pub ev: f64,
}

/// Deterministic random tuples: `omega` in `[-3 omega_c, 3 omega_c]`, sites in
/// `1..=L`, bias in `[-2, 2]`.
pub fn random_samples(p: &ModelParams, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wc = p.omega_c();
    let l = p.wire_length();
    (0..n)
        .map(|_| Sample {
            omega: rng.gen_range(-3.0 * wc..=3.0 * wc),
            i: rng.gen_range(1..=l),
            j: rng.gen_range(1..=l),
            ev: rng.gen_range(-2.0..=2.0),
        })
        .collect()
}

/// Worst normalized mismatch (error / tolerance) over all closed-form
/// quantities at one sample. Values `<= 1` pass.
pub fn worst_oracle_ratio(s: &Sample, p: &ModelParams, tol: &Tolerances) -> Result<f64, String> {
    let q = p.with_bias(s.ev).map_err(|e| e.to_string())?;
    let (gr, ga, f) = oracle::solve_dyson(s.omega, &q).map_err(|e| e.to_string())?;
    let cf = ClosedForm::new(s.omega, &q).map_err(|e| e.to_string())?;
    let l = q.wire_length();
    let ix = |b: BasisIndex| b.index(&q);
    let (alpha, alpha_p) = (ix(BasisIndex::Alpha), ix(BasisIndex::AlphaPrime));

    let mut pairs: Vec<(Complex64, Complex64)> = Vec::new();
    let (g1, gl) = cf.ga_boundary(s.j).map_err(|e| e.to_string())?;
    pairs.push((g1, ga.data[(1, s.j)]));
    pairs.push((gl, ga.data[(l, s.j)]));
    let (ta, tb) = cf.ga_terminal(s.j).map_err(|e| e.to_string())?;
    pairs.push((ta, ga.data[(alpha, s.j)]));
    pairs.push((tb, ga.data[(alpha_p, s.j)]));
    let (fa, fb) = cf.f_terminal(s.j).map_err(|e| e.to_string())?;
    pairs.push((fa, f.data[(alpha, s.j)]));
    pairs.push((fb, f.data[(alpha_p, s.j)]));
    pairs.push((cf.f_full(s.i, s.j).map_err(|e| e.to_string())?, f.data[(s.i, s.j)]));
    let (gr_1l, ga_l1) = cf.gr_1l_and_ga_l1();
    pairs.push((gr_1l, gr.data[(1, l)]));
    pairs.push((ga_l1, ga.data[(l, 1)]));

    Ok(pairs
        .into_iter()
        .map(|(c, r)| {
            let (err, t) = oracle_mismatch(c, r, tol);
            err / t
        })
        .fold(0.0, f64::max))
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn oracle_equivalence(p: &ModelParams, tol: &Tolerances) -> CheckOutcome {
    let mut worst = 0.0f64;
    for s in random_samples(p, 100, SEED) {
        match worst_oracle_ratio(&s, p, tol) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return outcome("oracle equivalence", false, e),
        }
    }
    outcome(
        "oracle equivalence",
        worst <= 1.0,
        format!("100 samples, worst error/tolerance = {worst:.3e}"),
    )
}

fn matrix_identities(p: &ModelParams, tol: &Tolerances) -> CheckOutcome {
    let mut worst = 0.0f64;
    for s in random_samples(p, 50, SEED ^ 1) {
        let q = match p.with_bias(s.ev) {
            Ok(q) => q,
            Err(e) => return outcome("matrix identities", false, e.to_string()),
        };
        let sol = match oracle::solve_dyson(s.omega, &q) {
            Ok(sol) => sol,
            Err(e) => return outcome("matrix identities", false, e.to_string()),
        };
        let (gr, ga, f) = &sol;
        worst = worst
            .max(oracle::norm_inf(&(gr.data.adjoint() - &ga.data)))
            .max(oracle::norm_inf(&(f.data.adjoint() + &f.data)));
        for r in oracle::dyson_residuals(s.omega, &q, &sol) {
            worst = worst.max(r);
        }
        if let Ok(cf) = ClosedForm::new(s.omega, &q) {
            let a = cf.f_full(s.i, s.j).unwrap_or_default();
            let b = cf.f_full(s.j, s.i).unwrap_or_default();
            worst = worst.max((a + b.conj()).norm());
        }
    }
    outcome(
        "conjugation, anti-Hermiticity, residuals",
        worst <= tol.identity,
        format!("worst deviation {worst:.3e}"),
    )
}

fn reduced_solver(p: &ModelParams, tol: &Tolerances) -> CheckOutcome {
    let mut worst = 0.0f64;
    for s in random_samples(p, 20, SEED ^ 2) {
        let q = p.with_bias(s.ev).unwrap_or(*p);
        match (oracle::solve_dyson(s.omega, &q), oracle::solve_dyson_reduced(s.omega, &q)) {
            (Ok(a), Ok(b)) => {
                worst = worst
                    .max(oracle::norm_inf(&(&a.0.data - &b.0.data)))
                    .max(oracle::norm_inf(&(&a.1.data - &b.1.data)))
                    .max(oracle::norm_inf(&(&a.2.data - &b.2.data)));
            }
            (Err(e), _) | (_, Err(e)) => return outcome("reduced solve", false, e.to_string()),
        }
    }
    outcome(
        "reduced 4x4 solve vs full solve",
        worst <= tol.identity,
        format!("worst deviation {worst:.3e}"),
    )
}

fn lead_consistency(p: &ModelParams, tol: &Tolerances) -> CheckOutcome {
    let mut worst = 0.0f64;
    for s in random_samples(p, 100, SEED ^ 3) {
        let q = p.with_bias(s.ev).unwrap_or(*p);
        let spectral = model::g_lead_r(s.omega, &q) - model::g_lead_a(s.omega, &q);
        for side in [Side::Left, Side::Right] {
            let expected = spectral * model::sgn(s.omega - side.chemical_potential(&q));
            worst = worst.max((model::f_lead(s.omega, side, &q) - expected).norm());
        }
    }
    outcome(
        "lead Keldysh = (g_r - g_a) sgn(w - mu)",
        worst <= tol.lead,
        format!("worst deviation {worst:.3e}"),
    )
}

fn current_symmetries(p: &ModelParams, tol: &Tolerances, rel_tol: f64) -> CheckOutcome {
    let run = || -> Result<(f64, f64), observables::ObservableError> {
        let zero = observables::current(&p.with_bias(0.0)?, rel_tol)?.value;
        let plus = observables::current(&p.with_bias(1.0)?, rel_tol)?.value;
        let minus = observables::current(&p.with_bias(-1.0)?, rel_tol)?.value;
        Ok((zero.abs(), (plus + minus).abs()))
    };
    match run() {
        Ok((zero, anti)) => outcome(
            "current: I(0) = 0, I(-eV) = -I(eV)",
            zero <= tol.current && anti <= tol.current,
            format!("|I(0)| = {zero:.3e}, |I(1) + I(-1)| = {anti:.3e}"),
        ),
        Err(e) => outcome("current symmetries", false, e.to_string()),
    }
}

fn mirror_symmetry(p: &ModelParams, tol: &Tolerances, rel_tol: f64) -> CheckOutcome {
    let l = p.wire_length();
    let pairs = [(4.min(l), 8.min(l)), (1, l), (2.min(l), 2.min(l))];
    let run = || -> Result<f64, observables::ObservableError> {
        let mut worst = 0.0f64;
        for &(i, j) in &pairs {
            let a = observables::correlation(i, j, &p.with_bias(1.0)?, rel_tol)?.value;
            let b = observables::correlation(p.mirror_site(i), p.mirror_site(j), &p.with_bias(-1.0)?, rel_tol)?.value;
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => outcome(
            "C_ij(eV) = C_mirror(-eV)",
            worst <= tol.mirror,
            format!("worst deviation {worst:.3e}"),
        ),
        Err(e) => outcome("mirror symmetry", false, e.to_string()),
    }
}

fn decoupled_null(p: &ModelParams, tol: &Tolerances, rel_tol: f64) -> CheckOutcome {
    let run = || -> Result<f64, observables::ObservableError> {
        let q = p.with_coupling(0.0)?.with_bias(1.0)?;
        let l = q.wire_length();
        let c = observables::correlation(4.min(l), 8.min(l), &q, rel_tol)?.value;
        let i = observables::current(&q, rel_tol)?.value;
        Ok(c.abs().max(i.abs()))
    };
    match run() {
        Ok(worst) => outcome(
            "T' = 0: C and I vanish",
            worst <= tol.null,
            format!("largest |value| {worst:.3e}"),
        ),
        Err(e) => outcome("decoupled null", false, e.to_string()),
    }
}

/// Runs every check in a fixed order.
pub fn run_all(p: &ModelParams, tol: &Tolerances, rel_tol: f64) -> Vec<CheckOutcome> {
    vec![
        oracle_equivalence(p, tol),
        matrix_identities(p, tol),
        reduced_solver(p, tol),
        lead_consistency(p, tol),
        current_symmetries(p, tol, rel_tol),
        mirror_symmetry(p, tol, rel_tol),
        decoupled_null(p, tol, rel_tol),
    ]
}
