//! Reference solver for the matrix Dyson equations.
//!
//! Works on the full `(L+2)`-dimensional basis `{α, 1..L, α'}` with dense
//! complex linear algebra and no use of the closed forms in [`crate::dyson`]:
//!
//! ```text
//! G^r = g^r + g^r Σ G^r
//! G^a = g^a + g^a Σ G^a
//! F   = f + g^r Σ F + f Σ G^a
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{self, ModelParams, Side};

pub type CMatrix = DMatrix<Complex64>;

/// Reciprocal condition numbers below this are treated as singular.
pub const MIN_RCOND: f64 = 1e-14;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OracleError {
    #[error("singular Dyson system at omega = {omega} (rcond = {rcond:e})")]
    Singular { omega: f64, rcond: f64 },
}

/// Position in the finite basis. `Alpha = 0`, wire sites `1..=L`, `AlphaPrime = L + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisIndex {
    Alpha,
    Site(usize),
    AlphaPrime,
}

impl BasisIndex {
    pub fn index(self, p: &ModelParams) -> usize {
        match self {
            BasisIndex::Alpha => 0,
            BasisIndex::Site(s) => s,
            BasisIndex::AlphaPrime => p.wire_length() + 1,
        }
    }

    pub fn from_index(k: usize, p: &ModelParams) -> Option<Self> {
        let l = p.wire_length();
        match k {
            0 => Some(BasisIndex::Alpha),
            k if k <= l => Some(BasisIndex::Site(k)),
            k if k == l + 1 => Some(BasisIndex::AlphaPrime),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Retarded,
    Advanced,
    Keldysh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenMatrix {
    pub role: Role,
    pub omega: f64,
    pub data: CMatrix,
}

impl GreenMatrix {
    pub fn get(&self, row: BasisIndex, col: BasisIndex, p: &ModelParams) -> Complex64 {
        self.data[(row.index(p), col.index(p))]
    }

    /// Wire-site entry.
    pub fn site(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }
}

fn dim(p: &ModelParams) -> usize {
    p.wire_length() + 2
}

/// Block-diagonal `(g^r, g^a, f)`: the leads are disconnected from the wire.
pub fn unperturbed_matrices(omega: f64, p: &ModelParams) -> (GreenMatrix, GreenMatrix, GreenMatrix) {
    let n = dim(p);
    let l = p.wire_length();
    let mut gr = CMatrix::zeros(n, n);
    let mut ga = CMatrix::zeros(n, n);
    let mut f = CMatrix::zeros(n, n);

    for (k, side) in [(0, Side::Left), (l + 1, Side::Right)] {
        gr[(k, k)] = model::g_lead_r(omega, p);
        ga[(k, k)] = model::g_lead_a(omega, p);
        f[(k, k)] = model::f_lead(omega, side, p);
    }
    for i in 1..=l {
        for j in 1..=l {
            // sites are in range by construction
            gr[(i, j)] = model::g_wire_r(omega, i, j, p).unwrap();
            ga[(i, j)] = model::g_wire_a(omega, i, j, p).unwrap();
            f[(i, j)] = model::f_wire(omega, i, j, p).unwrap();
        }
    }
    let wrap = |role, data| GreenMatrix { role, omega, data };
    (wrap(Role::Retarded, gr), wrap(Role::Advanced, ga), wrap(Role::Keldysh, f))
}

/// Lead-wire hopping: `T'` at `(α,1)`, `(1,α)`, `(α',L)`, `(L,α')`.
pub fn sigma_matrix(p: &ModelParams) -> DMatrix<f64> {
    let n = dim(p);
    let l = p.wire_length();
    let t = p.t_prime();
    let mut s = DMatrix::zeros(n, n);
    s[(0, 1)] = t;
    s[(1, 0)] = t;
    s[(l + 1, l)] = t;
    s[(l, l + 1)] = t;
    s
}

fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

fn norm_1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU-factorized `1 - g Σ`, with a reciprocal condition number in the 1-norm.
struct Factorized {
    lu: nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factorized {
    fn new(a: CMatrix, omega: f64) -> Result<Self, OracleError> {
        let n = a.nrows();
        let a_norm = norm_1(&a);
        let lu = a.lu();
        let inv = lu
            .solve(&CMatrix::identity(n, n))
            .ok_or(OracleError::Singular { omega, rcond: 0.0 })?;
        let rcond = 1.0 / (a_norm * norm_1(&inv));
        if !(rcond >= MIN_RCOND) {
            return Err(OracleError::Singular { omega, rcond });
        }
        Ok(Factorized { lu })
    }

    fn solve(&self, b: &CMatrix) -> CMatrix {
        // factorization was already checked to be invertible
        self.lu.solve(b).expect("non-singular LU")
    }
}

/// Solves all three Dyson equations on the full basis.
///
/// `G^r = (1 - g^r Σ)^{-1} g^r`, `G^a = (1 - g^a Σ)^{-1} g^a` and
/// `F = (1 - g^r Σ)^{-1} (f + f Σ G^a)`.
pub fn solve_dyson(omega: f64, p: &ModelParams) -> Result<(GreenMatrix, GreenMatrix, GreenMatrix), OracleError> {
    let (gr, ga, f) = unperturbed_matrices(omega, p);
    let n = dim(p);
    let sigma = complexify(&sigma_matrix(p));
    let one = CMatrix::identity(n, n);

    let lhs_r = Factorized::new(&one - &gr.data * &sigma, omega)?;
    let lhs_a = Factorized::new(&one - &ga.data * &sigma, omega)?;

    let big_gr = lhs_r.solve(&gr.data);
    let big_ga = lhs_a.solve(&ga.data);
    let rhs_f = &f.data + &f.data * &sigma * &big_ga;
    let big_f = lhs_r.solve(&rhs_f);

    let wrap = |role, data| GreenMatrix { role, omega, data };
    Ok((
        wrap(Role::Retarded, big_gr),
        wrap(Role::Advanced, big_ga),
        wrap(Role::Keldysh, big_f),
    ))
}

/// Same solution using only the rank-4 coupled subspace `{α, 1, L, α'}`.
///
/// Rows of the perturbed functions on the coupled subspace come from a 4x4
/// solve; every other row follows by one back-substitution through `Σ`.
pub fn solve_dyson_reduced(omega: f64, p: &ModelParams) -> Result<(GreenMatrix, GreenMatrix, GreenMatrix), OracleError> {
    let (gr, ga, f) = unperturbed_matrices(omega, p);
    let l = p.wire_length();
    let sigma = complexify(&sigma_matrix(p));
    let coupled = [0, 1, l, l + 1];

    let sub = |m: &CMatrix| m.select_rows(coupled.iter()).select_columns(coupled.iter());
    let rows = |m: &CMatrix| m.select_rows(coupled.iter());
    let cols = |m: &CMatrix| m.select_columns(coupled.iter());

    let sigma_pp = sub(&sigma);
    let one = CMatrix::identity(4, 4);
    let lhs_r = Factorized::new(&one - sub(&gr.data) * &sigma_pp, omega)?;
    let lhs_a = Factorized::new(&one - sub(&ga.data) * &sigma_pp, omega)?;

    let gr_p = lhs_r.solve(&rows(&gr.data));
    let ga_p = lhs_a.solve(&rows(&ga.data));
    let f_p = lhs_r.solve(&(rows(&f.data) + sub(&f.data) * &sigma_pp * &ga_p));

    let big_gr = &gr.data + cols(&gr.data) * &sigma_pp * &gr_p;
    let big_ga = &ga.data + cols(&ga.data) * &sigma_pp * &ga_p;
    let big_f = &f.data + cols(&gr.data) * &sigma_pp * &f_p + cols(&f.data) * &sigma_pp * &ga_p;

    let wrap = |role, data| GreenMatrix { role, omega, data };
    Ok((
        wrap(Role::Retarded, big_gr),
        wrap(Role::Advanced, big_ga),
        wrap(Role::Keldysh, big_f),
    ))
}

/// Max-row-sum norm.
pub fn norm_inf(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Infinity-norm residuals of the three printed Dyson equations.
pub fn dyson_residuals(omega: f64, p: &ModelParams, solved: &(GreenMatrix, GreenMatrix, GreenMatrix)) -> [f64; 3] {
    let (gr, ga, f) = unperturbed_matrices(omega, p);
    let sigma = complexify(&sigma_matrix(p));
    let (big_gr, big_ga, big_f) = solved;
    let r = &big_gr.data - &gr.data - &gr.data * &sigma * &big_gr.data;
    let a = &big_ga.data - &ga.data - &ga.data * &sigma * &big_ga.data;
    let k = &big_f.data - &f.data - &gr.data * &sigma * &big_f.data - &f.data * &sigma * &big_ga.data;
    [norm_inf(&r), norm_inf(&a), norm_inf(&k)]
}
