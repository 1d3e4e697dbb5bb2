//! Model parameters and the unperturbed Green functions of the leads and the wire.
//!
//! Energies are measured in units with `e = ħ = 1`. The wire uses a linearized
//! dispersion with the Fermi points moved to the origin, so every wire Green
//! function depends on the two site indices only through `i - j` (in units of
//! the lattice constant). Both leads carry a Lorentzian local spectrum of
//! half-width `W`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("lead band width W must be positive and finite, got {0}")]
    BandWidth(f64),
    #[error("coupling T' must be non-negative and finite, got {0}")]
    Coupling(f64),
    #[error("wire length must be at least 2 sites, got {0}")]
    WireLength(usize),
    #[error("bias eV must be finite, got {0}")]
    Bias(f64),
    #[error("Fermi velocity must be positive and finite, got {0}")]
    FermiVelocity(f64),
    #[error("lattice constant must be positive and finite, got {0}")]
    LatticeConstant(f64),
    #[error("site {site} is outside the wire 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },
}

/// Physical constants of the lead-wire-lead system.
///
/// The wire cutoff `omega_c = v_F * pi / a` and the density of states
/// `rho = 1 / (2 pi)` are derived on demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    w: f64,
    t_prime: f64,
    wire_length: usize,
    ev: f64,
    v_f: f64,
    a: f64,
}

impl Default for ModelParams {
    /// `W = 2`, `T' = 0.5`, `L = 20`, no bias, `v_F = a = 1`.
    fn default() -> Self {
        ModelParams {
            w: 2.0,
            t_prime: 0.5,
            wire_length: 20,
            ev: 0.0,
            v_f: 1.0,
            a: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(w: f64, t_prime: f64, wire_length: usize, ev: f64) -> Result<Self, ModelError> {
        Self::with_lattice(w, t_prime, wire_length, ev, 1.0, 1.0)
    }

    pub fn with_lattice(
        w: f64,
        t_prime: f64,
        wire_length: usize,
        ev: f64,
        v_f: f64,
        a: f64,
    ) -> Result<Self, ModelError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ModelError::BandWidth(w));
        }
        if !(t_prime.is_finite() && t_prime >= 0.0) {
            return Err(ModelError::Coupling(t_prime));
        }
        if wire_length < 2 {
            return Err(ModelError::WireLength(wire_length));
        }
        if !ev.is_finite() {
            return Err(ModelError::Bias(ev));
        }
        if !(v_f.is_finite() && v_f > 0.0) {
            return Err(ModelError::FermiVelocity(v_f));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::LatticeConstant(a));
        }
        Ok(ModelParams {
            w,
            t_prime,
            wire_length,
            ev,
            v_f,
            a,
        })
    }

    /// Same system at a different bias.
    pub fn with_bias(self, ev: f64) -> Result<Self, ModelError> {
        Self::with_lattice(self.w, self.t_prime, self.wire_length, ev, self.v_f, self.a)
    }

    /// Same system with a different lead-wire coupling.
    pub fn with_coupling(self, t_prime: f64) -> Result<Self, ModelError> {
        Self::with_lattice(self.w, t_prime, self.wire_length, self.ev, self.v_f, self.a)
    }

    /// Same system with a different number of wire sites.
    pub fn with_wire_length(self, wire_length: usize) -> Result<Self, ModelError> {
        Self::with_lattice(self.w, self.t_prime, wire_length, self.ev, self.v_f, self.a)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn t_prime(&self) -> f64 {
        self.t_prime
    }

    pub fn wire_length(&self) -> usize {
        self.wire_length
    }

    pub fn ev(&self) -> f64 {
        self.ev
    }

    pub fn v_f(&self) -> f64 {
        self.v_f
    }

    pub fn lattice_constant(&self) -> f64 {
        self.a
    }

    pub fn omega_c(&self) -> f64 {
        self.v_f * PI / self.a
    }

    pub fn rho(&self) -> f64 {
        1.0 / (2.0 * PI)
    }

    /// Mirror image of a wire site, `i -> L + 1 - i`.
    pub fn mirror_site(&self, site: usize) -> usize {
        self.wire_length + 1 - site
    }

    pub fn check_site(&self, site: usize) -> Result<(), ModelError> {
        if (1..=self.wire_length).contains(&site) {
            Ok(())
        } else {
            Err(ModelError::SiteOutOfRange {
                site,
                len: self.wire_length,
            })
        }
    }
}

/// Which lead/terminal pair.
///
/// `Left` is terminal α, attached to site 1, at chemical potential `+eV/2`.
/// `Right` is terminal α', attached to site L, at `-eV/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn chemical_potential(self, p: &ModelParams) -> f64 {
        match self {
            Side::Left => 0.5 * p.ev,
            Side::Right => -0.5 * p.ev,
        }
    }

    /// Wire site the terminal couples to.
    pub fn site(self, p: &ModelParams) -> usize {
        match self {
            Side::Left => 1,
            Side::Right => p.wire_length,
        }
    }
}

/// Sign function with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Retarded lead Green function `1 / (omega + iW)`, the same for both terminals.
#[inline]
pub fn g_lead_r(omega: f64, p: &ModelParams) -> Complex64 {
    Complex64::new(omega, p.w).inv()
}

/// Advanced lead Green function `1 / (omega - iW)`.
#[inline]
pub fn g_lead_a(omega: f64, p: &ModelParams) -> Complex64 {
    Complex64::new(omega, -p.w).inv()
}

/// Keldysh lead Green function `-2iW sgn(omega - mu) / (omega^2 + W^2)`.
#[inline]
pub fn f_lead(omega: f64, side: Side, p: &ModelParams) -> Complex64 {
    let mu = side.chemical_potential(p);
    let w = p.w;
    Complex64::new(0.0, -2.0 * w * sgn(omega - mu) / (omega * omega + w * w))
}

// Unchecked wire forms. `dist` is the signed site difference i - j.

#[inline]
pub(crate) fn wire_cutoff(omega: f64, p: &ModelParams) -> f64 {
    (-omega.abs() / p.omega_c()).exp()
}

#[inline]
pub(crate) fn wire_r(omega: f64, dist: i64, p: &ModelParams) -> Complex64 {
    let amp = 2.0 * PI * p.rho() / p.v_f * wire_cutoff(omega, p);
    let phase = omega * dist.unsigned_abs() as f64 / p.v_f;
    -I * amp * Complex64::from_polar(1.0, phase)
}

#[inline]
pub(crate) fn wire_a(omega: f64, dist: i64, p: &ModelParams) -> Complex64 {
    wire_r(omega, dist, p).conj()
}

#[inline]
pub(crate) fn wire_f(omega: f64, dist: i64, p: &ModelParams) -> Complex64 {
    let amp = 4.0 * PI * p.rho() / p.v_f * wire_cutoff(omega, p);
    let c = (omega * dist as f64 / p.v_f).cos();
    Complex64::new(0.0, -amp * c * sgn(omega))
}

#[inline]
fn dist(i: usize, j: usize) -> i64 {
    i as i64 - j as i64
}

/// Retarded wire Green function between sites `i` and `j`.
pub fn g_wire_r(omega: f64, i: usize, j: usize, p: &ModelParams) -> Result<Complex64, ModelError> {
    p.check_site(i)?;
    p.check_site(j)?;
    Ok(wire_r(omega, dist(i, j), p))
}

/// Advanced wire Green function between sites `i` and `j`.
pub fn g_wire_a(omega: f64, i: usize, j: usize, p: &ModelParams) -> Result<Complex64, ModelError> {
    p.check_site(i)?;
    p.check_site(j)?;
    Ok(wire_a(omega, dist(i, j), p))
}

/// Keldysh wire Green function between sites `i` and `j`. Odd in `omega`.
pub fn f_wire(omega: f64, i: usize, j: usize, p: &ModelParams) -> Result<Complex64, ModelError> {
    p.check_site(i)?;
    p.check_site(j)?;
    Ok(wire_f(omega, dist(i, j), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lead_values() {
        let p = ModelParams::default();
        assert!(close(g_lead_r(0.0, &p), Complex64::new(0.0, -0.5), 1e-15));
        assert!(close(g_lead_r(2.0, &p), Complex64::new(0.25, -0.25), 1e-15));
        assert!(close(g_lead_r(-2.0, &p), Complex64::new(-0.25, -0.25), 1e-15));
        assert!(close(g_lead_a(0.0, &p), Complex64::new(0.0, 0.5), 1e-15));
        assert!(close(g_lead_a(2.0, &p), Complex64::new(0.25, 0.25), 1e-15));
    }

    #[test]
    fn lead_keldysh_values() {
        let p = ModelParams::default().with_bias(1.0).unwrap();
        assert_eq!(f_lead(0.0, Side::Left, &p), Complex64::new(0.0, 1.0));
        assert_eq!(f_lead(0.5, Side::Left, &p), Complex64::new(0.0, 0.0));
        assert_eq!(f_lead(-0.5, Side::Right, &p), Complex64::new(0.0, 0.0));
        let p0 = ModelParams::default();
        assert_eq!(f_lead(0.0, Side::Left, &p0).norm(), 0.0);
    }

    #[test]
    fn wire_values() {
        let p = ModelParams::default();
        assert!(close(g_wire_r(0.0, 3, 7, &p).unwrap(), Complex64::new(0.0, -1.0), 1e-15));
        assert!(close(g_wire_a(0.0, 3, 7, &p).unwrap(), Complex64::new(0.0, 1.0), 1e-15));
        let e1 = (-1.0f64).exp();
        assert!(close(g_wire_r(PI, 5, 5, &p).unwrap(), Complex64::new(0.0, -e1), 1e-15));
        assert!(close(g_wire_a(PI, 5, 5, &p).unwrap(), Complex64::new(0.0, e1), 1e-15));
        assert!(close(f_wire(PI, 5, 5, &p).unwrap(), Complex64::new(0.0, -2.0 * e1), 1e-15));
        assert!((g_wire_r(PI, 5, 5, &p).unwrap().im + 0.367879).abs() < 1e-6);
        assert!((f_wire(PI, 5, 5, &p).unwrap().im + 0.735759).abs() < 1e-6);
        assert_eq!(f_wire(0.0, 2, 9, &p).unwrap().norm(), 0.0);
    }

    #[test]
    fn site_range_is_checked() {
        let p = ModelParams::default();
        assert_eq!(
            g_wire_r(0.1, 0, 3, &p),
            Err(ModelError::SiteOutOfRange { site: 0, len: 20 })
        );
        assert!(g_wire_a(0.1, 3, 21, &p).is_err());
        assert!(f_wire(0.1, 21, 3, &p).is_err());
        assert!(f_wire(0.1, 20, 1, &p).is_ok());
    }

    #[test]
    fn invalid_params_rejected() {
        assert_eq!(ModelParams::new(0.0, 0.5, 20, 0.0), Err(ModelError::BandWidth(0.0)));
        assert_eq!(ModelParams::new(2.0, -0.1, 20, 0.0), Err(ModelError::Coupling(-0.1)));
        assert_eq!(ModelParams::new(2.0, 0.5, 1, 0.0), Err(ModelError::WireLength(1)));
        assert!(ModelParams::new(2.0, 0.5, 20, f64::NAN).is_err());
        assert!(ModelParams::with_lattice(2.0, 0.5, 20, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::with_lattice(2.0, 0.5, 20, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn derived_constants() {
        let p = ModelParams::default();
        assert_eq!(p.omega_c(), PI);
        assert_eq!(p.rho(), 1.0 / (2.0 * PI));
        let q = ModelParams::with_lattice(2.0, 0.5, 20, 0.0, 2.0, 0.5).unwrap();
        assert_eq!(q.omega_c(), 2.0 * PI / 0.5);
        assert_eq!(Side::Left.mirror(), Side::Right);
        assert_eq!(Side::Right.site(&p), 20);
    }

    proptest! {
        #[test]
        fn conjugation_and_anti_hermiticity(
            omega in -30.0f64..30.0,
            ev in -3.0f64..3.0,
            i in 1usize..=20,
            j in 1usize..=20,
        ) {
            let p = ModelParams::default().with_bias(ev).unwrap();
            prop_assert_eq!(g_lead_a(omega, &p), g_lead_r(omega, &p).conj());
            let gr = g_wire_r(omega, j, i, &p).unwrap();
            prop_assert_eq!(g_wire_a(omega, i, j, &p).unwrap(), gr.conj());
            prop_assert_eq!(g_wire_r(omega, i, j, &p).unwrap(), gr);
            for side in [Side::Left, Side::Right] {
                let f = f_lead(omega, side, &p);
                prop_assert_eq!(f.conj(), -f);
            }
            let fij = f_wire(omega, i, j, &p).unwrap();
            prop_assert_eq!(fij.conj(), -f_wire(omega, j, i, &p).unwrap());
            prop_assert_eq!(f_wire(-omega, i, j, &p).unwrap(), -fij);
            let modulus = g_wire_r(omega, i, j, &p).unwrap().norm();
            prop_assert!((modulus - (-omega.abs() / PI).exp()).abs() < 1e-15);
        }

        // The lead Keldysh function is the spectral difference weighted by the
        // zero-temperature factor 1 - 2n = sgn(omega - mu).
        #[test]
        fn lead_keldysh_consistency(omega in -50.0f64..50.0, ev in -3.0f64..3.0) {
            let p = ModelParams::default().with_bias(ev).unwrap();
            let spectral = g_lead_r(omega, &p) - g_lead_a(omega, &p);
            for side in [Side::Left, Side::Right] {
                let expected = spectral * sgn(omega - side.chemical_potential(&p));
                prop_assert!((f_lead(omega, side, &p) - expected).norm() < 1e-14);
            }
        }
    }
}
