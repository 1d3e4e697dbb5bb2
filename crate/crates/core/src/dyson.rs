//! Closed-form perturbed Green functions of the lead-wire-lead system.
//!
//! The self-energy only couples terminal α to site 1 and terminal α' to site L,
//! so the Dyson equations collapse to 2x2 systems on the boundary sites. The
//! advanced chain (`G^a_1j`, `G^a_Lj`, then `G^a_αj`, `G^a_α'j`) feeds the
//! Keldysh chain (`F_αj`, `F_α'j`, then `F_ij`). Retarded quantities are taken
//! as conjugates of the advanced ones.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{self, ModelError, ModelParams, Side};

/// Denominators with modulus below this are reported as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DysonError {
    #[error("{which} denominator vanishes at omega = {omega}")]
    Singular { omega: f64, which: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `(1 - g^a_11 T'^2 g^a_αα)(1 - g^a_LL T'^2 g^a_α'α') - g^a_1L T'^2 g^a_α'α' g^a_L1 T'^2 g^a_αα`.
pub fn advanced_denominator(omega: f64, p: &ModelParams) -> Complex64 {
    let t2 = p.t_prime() * p.t_prime();
    let lead = model::g_lead_a(omega, p);
    let l = p.wire_length() as i64;
    let g11 = model::wire_a(omega, 0, p);
    let g1l = model::wire_a(omega, 1 - l, p);
    let gl1 = model::wire_a(omega, l - 1, p);
    let gll = model::wire_a(omega, 0, p);
    (1.0 - g11 * t2 * lead) * (1.0 - gll * t2 * lead) - g1l * t2 * lead * gl1 * t2 * lead
}

/// Retarded counterpart of [`advanced_denominator`], built from retarded factors.
pub fn retarded_denominator(omega: f64, p: &ModelParams) -> Complex64 {
    let t2 = p.t_prime() * p.t_prime();
    let lead = model::g_lead_r(omega, p);
    let l = p.wire_length() as i64;
    let g11 = model::wire_r(omega, 0, p);
    let g1l = model::wire_r(omega, 1 - l, p);
    let gl1 = model::wire_r(omega, l - 1, p);
    let gll = model::wire_r(omega, 0, p);
    (1.0 - lead * t2 * g11) * (1.0 - lead * t2 * gll) - lead * t2 * g1l * lead * t2 * gl1
}

/// Per-frequency evaluation context.
///
/// Holds the lead functions, the boundary-site wire functions and both
/// denominators for one `omega`, so that repeated column queries share them.
#[derive(Debug, Clone)]
pub struct ClosedForm<'a> {
    p: &'a ModelParams,
    omega: f64,
    t: f64,
    lead_r: Complex64,
    lead_a: Complex64,
    f_left: Complex64,
    f_right: Complex64,
    ga11: Complex64,
    ga1l: Complex64,
    gal1: Complex64,
    gall: Complex64,
    gr11: Complex64,
    gr1l: Complex64,
    grl1: Complex64,
    grll: Complex64,
    den_a: Complex64,
    den_r: Complex64,
}

impl<'a> ClosedForm<'a> {
    pub fn new(omega: f64, p: &'a ModelParams) -> Result<Self, DysonError> {
        let l = p.wire_length() as i64;
        let den_a = advanced_denominator(omega, p);
        let den_r = retarded_denominator(omega, p);
        if den_a.norm() < SINGULAR_THRESHOLD {
            return Err(DysonError::Singular {
                omega,
                which: "advanced",
            });
        }
        if den_r.norm() < SINGULAR_THRESHOLD {
            return Err(DysonError::Singular {
                omega,
                which: "retarded",
            });
        }
        Ok(ClosedForm {
            p,
            omega,
            t: p.t_prime(),
            lead_r: model::g_lead_r(omega, p),
            lead_a: model::g_lead_a(omega, p),
            f_left: model::f_lead(omega, Side::Left, p),
            f_right: model::f_lead(omega, Side::Right, p),
            ga11: model::wire_a(omega, 0, p),
            ga1l: model::wire_a(omega, 1 - l, p),
            gal1: model::wire_a(omega, l - 1, p),
            gall: model::wire_a(omega, 0, p),
            gr11: model::wire_r(omega, 0, p),
            gr1l: model::wire_r(omega, 1 - l, p),
            grl1: model::wire_r(omega, l - 1, p),
            grll: model::wire_r(omega, 0, p),
            den_a,
            den_r,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn advanced_denominator(&self) -> Complex64 {
        self.den_a
    }

    pub fn retarded_denominator(&self) -> Complex64 {
        self.den_r
    }

    fn site(&self, s: usize) -> Result<i64, DysonError> {
        self.p.check_site(s)?;
        Ok(s as i64)
    }

    #[inline]
    fn wire_f(&self, i: i64, j: i64) -> Complex64 {
        model::wire_f(self.omega, i - j, self.p)
    }

    #[inline]
    fn wire_a(&self, i: i64, j: i64) -> Complex64 {
        model::wire_a(self.omega, i - j, self.p)
    }

    #[inline]
    fn wire_r(&self, i: i64, j: i64) -> Complex64 {
        model::wire_r(self.omega, i - j, self.p)
    }

    /// `(G^a_1j, G^a_Lj)`.
    pub fn ga_boundary(&self, j: usize) -> Result<(Complex64, Complex64), DysonError> {
        let j = self.site(j)?;
        Ok(self.ga_boundary_unchecked(j))
    }

    fn ga_boundary_unchecked(&self, j: i64) -> (Complex64, Complex64) {
        let t2 = self.t * self.t;
        let l = self.p.wire_length() as i64;
        let g1j = self.wire_a(1, j);
        let glj = self.wire_a(l, j);
        let left = 1.0 - self.ga11 * t2 * self.lead_a;
        let right = 1.0 - self.gall * t2 * self.lead_a;
        let ga1j = (g1j * right + self.ga1l * t2 * self.lead_a * glj) / self.den_a;
        let galj = (glj * left + g1j * t2 * self.lead_a * self.gal1) / self.den_a;
        (ga1j, galj)
    }

    /// `(G^a_αj, G^a_α'j) = (g^a_αα T' G^a_1j, g^a_α'α' T' G^a_Lj)`.
    pub fn ga_terminal(&self, j: usize) -> Result<(Complex64, Complex64), DysonError> {
        let j = self.site(j)?;
        let (ga1j, galj) = self.ga_boundary_unchecked(j);
        Ok(self.ga_terminal_from(ga1j, galj))
    }

    #[inline]
    fn ga_terminal_from(&self, ga1j: Complex64, galj: Complex64) -> (Complex64, Complex64) {
        (self.lead_a * self.t * ga1j, self.lead_a * self.t * galj)
    }

    /// `(F_αj, F_α'j)`.
    pub fn f_terminal(&self, j: usize) -> Result<(Complex64, Complex64), DysonError> {
        let j = self.site(j)?;
        Ok(self.column(j).f_terminal)
    }

    fn column(&self, j: i64) -> Column {
        let t = self.t;
        let t2 = t * t;
        let l = self.p.wire_length() as i64;
        let (ga1j, galj) = self.ga_boundary_unchecked(j);
        let (gaaj, gapj) = self.ga_terminal_from(ga1j, galj);

        // Right-hand sides of the two terminal rows of the Keldysh equation.
        let src_left = self.lead_r
            * t
            * (self.wire_f(1, j) + self.wire_f(1, 1) * t * gaaj + self.wire_f(1, l) * t * gapj)
            + self.f_left * t * ga1j;
        let src_right = self.lead_r
            * t
            * (self.wire_f(l, j) + self.wire_f(l, 1) * t * gaaj + self.wire_f(l, l) * t * gapj)
            + self.f_right * t * galj;

        let keep_left = 1.0 - self.lead_r * t2 * self.gr11;
        let keep_right = 1.0 - self.lead_r * t2 * self.grll;
        let f_alpha = (keep_right * src_left + self.lead_r * t2 * self.gr1l * src_right) / self.den_r;
        let f_alpha_p = (keep_left * src_right + self.lead_r * t2 * self.grl1 * src_left) / self.den_r;

        Column {
            ga_terminal: (gaaj, gapj),
            f_terminal: (f_alpha, f_alpha_p),
        }
    }

    /// Keldysh Green function `F_ij` inside the wire.
    pub fn f_full(&self, i: usize, j: usize) -> Result<Complex64, DysonError> {
        let i = self.site(i)?;
        let j = self.site(j)?;
        Ok(self.f_full_unchecked(i, j))
    }

    pub(crate) fn f_full_unchecked(&self, i: i64, j: i64) -> Complex64 {
        let t = self.t;
        let l = self.p.wire_length() as i64;
        let col = self.column(j);
        let (f_alpha, f_alpha_p) = col.f_terminal;
        let (gaaj, gapj) = col.ga_terminal;
        self.wire_f(i, j)
            + self.wire_r(i, 1) * t * f_alpha
            + self.wire_r(i, l) * t * f_alpha_p
            + self.wire_f(i, 1) * t * gaaj
            + self.wire_f(i, l) * t * gapj
    }

    /// `(G^r_1L, G^a_L1)` with `G^r_1L = conj(G^a_L1)`.
    pub fn gr_1l_and_ga_l1(&self) -> (Complex64, Complex64) {
        let (_, ga_l1) = self.ga_boundary_unchecked(1);
        (ga_l1.conj(), ga_l1)
    }

    /// Lead factor of the current integrand,
    /// `(g^a_αα - g^r_αα) f_α'α' + f_αα (g^r_α'α' - g^a_α'α')`.
    pub(crate) fn lead_imbalance(&self) -> Complex64 {
        (self.lead_a - self.lead_r) * self.f_right + self.f_left * (self.lead_r - self.lead_a)
    }
}

#[derive(Debug, Clone, Copy)]
struct Column {
    ga_terminal: (Complex64, Complex64),
    f_terminal: (Complex64, Complex64),
}

pub fn ga_boundary(omega: f64, j: usize, p: &ModelParams) -> Result<(Complex64, Complex64), DysonError> {
    ClosedForm::new(omega, p)?.ga_boundary(j)
}

pub fn ga_terminal(omega: f64, j: usize, p: &ModelParams) -> Result<(Complex64, Complex64), DysonError> {
    ClosedForm::new(omega, p)?.ga_terminal(j)
}

pub fn f_terminal(omega: f64, j: usize, p: &ModelParams) -> Result<(Complex64, Complex64), DysonError> {
    ClosedForm::new(omega, p)?.f_terminal(j)
}

pub fn f_full(omega: f64, i: usize, j: usize, p: &ModelParams) -> Result<Complex64, DysonError> {
    ClosedForm::new(omega, p)?.f_full(i, j)
}

pub fn gr_1l_and_ga_l1(omega: f64, p: &ModelParams) -> Result<(Complex64, Complex64), DysonError> {
    Ok(ClosedForm::new(omega, p)?.gr_1l_and_ga_l1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decoupled(ev: f64) -> ModelParams {
        ModelParams::new(2.0, 0.0, 20, ev).unwrap()
    }

    #[test]
    fn decoupled_limit_is_unperturbed() {
        let p = decoupled(1.0);
        for &omega in &[-7.3, -0.5, 0.0, 0.2, 0.5, 3.0] {
            assert_eq!(advanced_denominator(omega, &p), Complex64::new(1.0, 0.0));
            let cf = ClosedForm::new(omega, &p).unwrap();
            for j in [1, 8, 20] {
                let (g1, gl) = cf.ga_boundary(j).unwrap();
                assert_eq!(g1, model::g_wire_a(omega, 1, j, &p).unwrap());
                assert_eq!(gl, model::g_wire_a(omega, 20, j, &p).unwrap());
                assert_eq!(cf.ga_terminal(j).unwrap(), (Complex64::default(), Complex64::default()));
                assert_eq!(cf.f_terminal(j).unwrap(), (Complex64::default(), Complex64::default()));
                for i in [1, 4, 20] {
                    assert_eq!(cf.f_full(i, j).unwrap(), model::f_wire(omega, i, j, &p).unwrap());
                }
            }
            let (gr, ga) = cf.gr_1l_and_ga_l1();
            assert_eq!(ga, model::g_wire_a(omega, 20, 1, &p).unwrap());
            assert_eq!(gr, model::g_wire_r(omega, 1, 20, &p).unwrap());
        }
    }

    #[test]
    fn denominator_moves_away_from_one_when_coupled() {
        let p = ModelParams::default();
        let d = advanced_denominator(0.0, &p);
        assert!((d - 1.0).norm() > 1e-3);
    }

    #[test]
    fn denominators_bounded_away_from_zero() {
        let p = ModelParams::default();
        let om = 30.0 * std::f64::consts::PI;
        let n = 200_000;
        let mut smallest = f64::INFINITY;
        for k in 0..=n {
            let omega = -om + 2.0 * om * k as f64 / n as f64;
            smallest = smallest
                .min(advanced_denominator(omega, &p).norm())
                .min(retarded_denominator(omega, &p).norm());
        }
        assert!(smallest > 1e-12, "smallest |D| = {smallest}");
    }

    #[test]
    fn terminal_functions_scale_with_boundary_values() {
        let p = ModelParams::default().with_bias(0.7).unwrap();
        let cf = ClosedForm::new(0.3, &p).unwrap();
        let (g1, gl) = cf.ga_boundary(8).unwrap();
        let (ta, tb) = cf.ga_terminal(8).unwrap();
        let lead = model::g_lead_a(0.3, &p);
        assert!((ta - lead * 0.5 * g1).norm() < 1e-16);
        assert!((tb - lead * 0.5 * gl).norm() < 1e-16);
    }

    #[test]
    fn rejects_bad_sites() {
        let p = ModelParams::default();
        assert!(matches!(f_full(0.1, 0, 3, &p), Err(DysonError::Model(_))));
        assert!(ga_boundary(0.1, 21, &p).is_err());
        assert!(f_terminal(0.1, 21, &p).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_denominators(omega in -100.0f64..100.0, tp in 0.0f64..2.0) {
            let p = ModelParams::default().with_coupling(tp).unwrap();
            let diff = advanced_denominator(omega, &p).conj() - retarded_denominator(omega, &p);
            prop_assert!(diff.norm() < 1e-14);
        }

        #[test]
        fn keldysh_is_anti_hermitian(
            omega in -95.0f64..95.0,
            ev in -2.0f64..2.0,
            i in 1usize..=20,
            j in 1usize..=20,
        ) {
            let p = ModelParams::default().with_bias(ev).unwrap();
            let cf = ClosedForm::new(omega, &p).unwrap();
            let s = cf.f_full(i, j).unwrap() + cf.f_full(j, i).unwrap().conj();
            prop_assert!(s.norm() < 1e-12);
        }

        #[test]
        fn current_pair_is_conjugate(omega in -95.0f64..95.0) {
            let p = ModelParams::default();
            let (gr, ga) = gr_1l_and_ga_l1(omega, &p).unwrap();
            prop_assert_eq!(gr, ga.conj());
            let prod = ga * gr;
            prop_assert!(prod.re >= 0.0 && prod.im.abs() <= 1e-15 * prod.re.max(1e-300));
        }
    }
}
