//! Dense complex linear algebra: operators, states and Hermitian spectra.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! dozen). Unitary evolution is computed exactly through the Hermitian
//! eigendecomposition rather than by series expansion, so group-law and
//! unitarity defects stay at rounding level.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative tolerance for Hermiticity checks:
/// `max |A[i][j] - conj(A[j][i])| <= HERMITICITY_TOL * (1 + frob_norm(A))`.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Absolute tolerance on state normalization (pure norm, density trace).
pub const STATE_TOL: f64 = 1e-10;

fn frob(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense complex square matrix with an optional cached Hermiticity flag.
#[derive(Debug, Clone)]
pub struct Operator {
    mat: DMatrix<C64>,
    hermitian_hint: Option<bool>,
}

impl Operator {
    /// Wraps a square matrix without any checks.
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrix must be square");
        Operator {
            mat,
            hermitian_hint: None,
        }
    }

    /// Builds an operator from row-major nested entries, rejecting ragged or
    /// non-finite input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::validation("operator", "dimension must be >= 1"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    object: format!("operator row {i}"),
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::validation(
                        "operator",
                        format!("entry ({i},{j}) is not finite"),
                    ));
                }
            }
        }
        Ok(Operator::from_matrix(DMatrix::from_fn(dim, dim, |i, j| {
            rows[i][j]
        })))
    }

    pub(crate) fn hermitian_unchecked(mat: DMatrix<C64>) -> Self {
        let mut op = Operator::from_matrix(mat);
        debug_assert!(op.hermiticity_defect() <= HERMITICITY_TOL * (1.0 + op.frob_norm()));
        op.hermitian_hint = Some(true);
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Operator::hermitian_unchecked(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator::hermitian_unchecked(DMatrix::identity(dim, dim))
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let d = entries.len();
        Operator::hermitian_unchecked(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(entries[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Rank-one projector `|v><v| / <v|v>`.
    pub fn outer(v: &DVector<C64>) -> Self {
        let n2 = v.norm_squared();
        let d = v.len();
        Operator::hermitian_unchecked(DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj() / n2))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Frobenius norm `sqrt(sum |A_ij|^2)`.
    pub fn frob_norm(&self) -> f64 {
        frob(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A[i][j] - conj(A[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        match self.hermitian_hint {
            Some(flag) => flag,
            None => self.hermiticity_defect() <= HERMITICITY_TOL * (1.0 + self.frob_norm()),
        }
    }

    /// Verifies Hermiticity and caches the result, or fails hard.
    pub fn hermitian_checked(mut self) -> Result<Self> {
        if self.hermitian_hint == Some(true) {
            return Ok(self);
        }
        let defect = self.hermiticity_defect();
        let bound = HERMITICITY_TOL * (1.0 + self.frob_norm());
        if defect > bound {
            return Err(Error::NotHermitian(format!(
                "defect {defect:.3e} exceeds {bound:.3e}"
            )));
        }
        self.hermitian_hint = Some(true);
        Ok(self)
    }

    /// `(A + A^dag) / 2`; discards rounding-level asymmetry.
    pub fn hermitized(&self) -> Operator {
        let m = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        Operator::hermitian_unchecked(m)
    }

    pub fn scaled(&self, z: C64) -> Operator {
        Operator::from_matrix(&self.mat * z)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat + &rhs.mat)
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat - &rhs.mat)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat * &rhs.mat)
    }
}

/// Pure vector or density-matrix state.
#[derive(Debug, Clone)]
pub enum State {
    Pure(DVector<C64>),
    Density(Operator),
}

impl State {
    /// Pure state from amplitudes; the squared norm must be 1 within
    /// [`STATE_TOL`].
    pub fn pure(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let v = DVector::from_vec(amplitudes);
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {n2} differs from 1 by more than {STATE_TOL:.0e}"
            )));
        }
        Ok(State::Pure(v))
    }

    /// Density matrix: Hermitian, unit trace, positive semidefinite.
    pub fn density(op: Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let spectrum = hermitian_eig(&op)?;
        if let Some(&lowest) = spectrum.eigenvalues().first() {
            if lowest < -STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "density matrix has negative eigenvalue {lowest:.3e}"
                )));
            }
        }
        Ok(State::Density(op))
    }

    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.len(),
            State::Density(op) => op.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }
}

/// Eigendecomposition of a Hermitian operator: ascending real eigenvalues
/// and a unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    basis: Operator,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary of eigenvectors (as columns).
    pub fn basis(&self) -> &Operator {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(E) V^dag`.
    pub fn reconstruct(&self) -> Operator {
        let v = self.basis.matrix();
        let d = self.dim();
        let diag = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(self.eigenvalues[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Operator::from_matrix(v * diag * v.adjoint()).hermitized()
    }

    /// Exact evolution operator `U(t) = V exp(-i E t) V^dag` (hbar = 1).
    pub fn evolution(&self, t: f64) -> Operator {
        let v = self.basis.matrix();
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            let phase = (-C64::i() * self.eigenvalues[j] * t).exp();
            col *= phase;
        }
        Operator::from_matrix(scaled * v.adjoint())
    }

    /// Applies `U(t)` to a vector without building the full matrix product.
    pub fn evolve_vector(&self, t: f64, psi: &DVector<C64>) -> DVector<C64> {
        let v = self.basis.matrix();
        let mut w = v.adjoint() * psi;
        for (i, entry) in w.iter_mut().enumerate() {
            *entry *= (-C64::i() * self.eigenvalues[i] * t).exp();
        }
        v * w
    }

    /// `V^dag A V`: the operator expressed in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &Operator) -> DMatrix<C64> {
        let v = self.basis.matrix();
        v.adjoint() * a.matrix() * v
    }

    /// `V M V^dag`: back from the eigenbasis.
    pub fn from_eigenbasis(&self, m: &DMatrix<C64>) -> Operator {
        let v = self.basis.matrix();
        Operator::from_matrix(v * m * v.adjoint())
    }

    /// `max |(V^dag V - 1)_ij|` as a Frobenius norm.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.basis.matrix();
        let d = self.dim();
        frob(&(v.adjoint() * v - DMatrix::<C64>::identity(d, d)))
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Deterministic for identical input. Fails with `NotHermitian` when the
/// input violates the Hermiticity tolerance and `NumericalFailure` when the
/// underlying QL iteration does not converge.
pub fn hermitian_eig(a: &Operator) -> Result<Spectrum> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian(format!(
            "hermiticity defect {:.3e}",
            a.hermiticity_defect()
        )));
    }
    let d = a.dim();
    let eig = a
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigendecomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let basis = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Spectrum {
        eigenvalues,
        basis: Operator::from_matrix(basis),
    })
}

/// `exp(-i H t)` through the eigendecomposition of a Hermitian `H`.
pub fn evolve_unitary(h: &Operator, t: f64) -> Result<Operator> {
    Ok(hermitian_eig(h)?.evolution(t))
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            object: "commutator".into(),
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(&(a * b) - &(b * a))
}

/// `Tr(rho A)` (pure states: `<psi|A|psi>`).
pub fn expectation(rho: &State, a: &Operator) -> Result<C64> {
    if rho.dim() != a.dim() {
        return Err(Error::DimMismatch {
            object: "expectation".into(),
            expected: rho.dim(),
            got: a.dim(),
        });
    }
    Ok(expect_matrix(rho, a.matrix()))
}

pub(crate) fn expect_matrix(rho: &State, m: &DMatrix<C64>) -> C64 {
    match rho {
        State::Pure(psi) => psi.dotc(&(m * psi)),
        State::Density(r) => (r.matrix() * m).trace(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    pub(crate) fn sigma_x() -> Operator {
        Operator::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap()
    }

    pub(crate) fn sigma_y() -> Operator {
        Operator::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
        .unwrap()
    }

    pub(crate) fn sigma_z() -> Operator {
        Operator::diagonal(&[1.0, -1.0])
    }

    fn basis_state(dim: usize, k: usize) -> State {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        State::pure(amps).unwrap()
    }

    #[test]
    fn eig_identity() {
        let s = hermitian_eig(&Operator::identity(2)).unwrap();
        assert_abs_diff_eq!(s.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues()[1], 1.0, epsilon = 1e-12);
        assert!(s.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn eig_sigma_z_sorted() {
        let s = hermitian_eig(&sigma_z()).unwrap();
        assert_abs_diff_eq!(s.eigenvalues()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_two_level_rabi() {
        // omega sigma_z/2 + v sigma_x with omega = 2, v = sqrt(3):
        // lambda^2 = omega^2/4 + v^2 = 4, so the levels sit at +-2.
        let v = 3.0f64.sqrt();
        let h = Operator::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(v, 0.0)],
            vec![C64::new(v, 0.0), C64::new(-1.0, 0.0)],
        ])
        .unwrap();
        let s = hermitian_eig(&h).unwrap();
        assert_abs_diff_eq!(s.eigenvalues()[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_level_evolution_is_unitary() {
        let v = 3.0f64.sqrt();
        let h = Operator::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(v, 0.0)],
            vec![C64::new(v, 0.0), C64::new(-1.0, 0.0)],
        ])
        .unwrap();
        let u = evolve_unitary(&h, std::f64::consts::FRAC_PI_4).unwrap();
        let defect = (&(&u.adjoint() * &u) - &Operator::identity(2)).frob_norm();
        assert!(defect < 1e-12, "unitarity defect {defect:.3e}");
    }

    #[test]
    fn outer_builds_rank_one_projectors() {
        let v = DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]);
        let p = Operator::outer(&v);
        assert!((&(&p * &p) - &p).frob_norm() < 1e-12);
        assert_abs_diff_eq!(p.trace().re, 1.0, epsilon = 1e-12);
        assert!(p.is_hermitian());
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Operator::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let u = evolve_unitary(&sigma_x(), 0.0).unwrap();
        assert!((&u - &Operator::identity(2)).frob_norm() < 1e-12);
    }

    #[test]
    fn evolve_sigma_z_pi() {
        // exp(-i sigma_z pi) = diag(e^{-i pi}, e^{i pi}) = -1
        let u = evolve_unitary(&sigma_z(), std::f64::consts::PI).unwrap();
        let minus_one = Operator::identity(2).scaled(C64::new(-1.0, 0.0));
        assert!((&u - &minus_one).frob_norm() < 1e-12);
    }

    #[test]
    fn commutator_examples() {
        let zero = commutator(&sigma_z(), &sigma_z()).unwrap();
        assert_eq!(zero.frob_norm(), 0.0);

        // [sigma_x, sigma_y] = 2i sigma_z
        let c = commutator(&sigma_x(), &sigma_y()).unwrap();
        let want = sigma_z().scaled(C64::new(0.0, 2.0));
        assert!((&c - &want).frob_norm() < 1e-12);

        let d1 = Operator::diagonal(&[2.0, 5.0]);
        let d2 = Operator::diagonal(&[-1.0, 7.0]);
        assert_eq!(commutator(&d1, &d2).unwrap().frob_norm(), 0.0);

        assert!(matches!(
            commutator(&sigma_x(), &Operator::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let ket0 = basis_state(2, 0);
        assert_abs_diff_eq!(
            expectation(&ket0, &sigma_z()).unwrap().re,
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            expectation(&ket0, &sigma_x()).unwrap().norm(),
            0.0,
            epsilon = 1e-12
        );

        let mixed = State::density(Operator::diagonal(&[0.5, 0.5])).unwrap();
        for traceless in [sigma_x(), sigma_y(), sigma_z()] {
            assert_abs_diff_eq!(
                expectation(&mixed, &traceless).unwrap().norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn frob_norm_examples() {
        assert_eq!(Operator::zeros(3).frob_norm(), 0.0);
        assert_abs_diff_eq!(
            Operator::identity(2).frob_norm(),
            2.0f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(sigma_x().frob_norm(), 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn state_validation() {
        assert!(State::pure(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        assert!(State::density(Operator::diagonal(&[1.5, 0.5])).is_err());
        assert!(State::density(Operator::diagonal(&[1.2, -0.2])).is_err());
        assert!(State::density(Operator::diagonal(&[0.3, 0.7])).is_ok());
    }

    fn arb_hermitian(max_dim: usize) -> impl Strategy<Value = Operator> {
        (1..=max_dim, any::<u64>()).prop_map(|(d, seed)| {
            // cheap deterministic generator; proptest drives the seed
            let mut s = seed | 1;
            let mut next = move || {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let b = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
            Operator::from_matrix((&b + b.adjoint()) * C64::new(0.5, 0.0))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn eig_reconstructs(h in arb_hermitian(8)) {
            let s = hermitian_eig(&h).unwrap();
            let err = (&s.reconstruct() - &h).frob_norm() / (1.0 + h.frob_norm());
            prop_assert!(err <= 1e-9, "reconstruction error {err:.3e}");
            prop_assert!(s.orthonormality_defect() <= 1e-9);
            let asc = s.eigenvalues().windows(2).all(|w| w[0] <= w[1]);
            prop_assert!(asc);
        }

        #[test]
        fn evolution_group_law(h in arb_hermitian(8), t1 in -3.0..3.0f64, t2 in -3.0..3.0f64) {
            let s = hermitian_eig(&h).unwrap();
            let d = h.dim();
            let u1 = s.evolution(t1);
            let u2 = s.evolution(t2);
            let u12 = s.evolution(t1 + t2);
            let unit = &u1.adjoint() * &u1;
            prop_assert!((&unit - &Operator::identity(d)).frob_norm() <= 1e-9);
            prop_assert!((&(&u1 * &u2) - &u12).frob_norm() <= 1e-9);
        }

        #[test]
        fn expectation_linearity(h in arb_hermitian(6), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let d = h.dim();
            let other = Operator::identity(d).scaled(C64::new(0.3, 0.1));
            let mut amps = vec![C64::new(0.0, 0.0); d];
            amps[0] = C64::new(1.0, 0.0);
            let rho = State::pure(amps).unwrap();
            let combo = &h.scaled(C64::new(a, 0.0)) + &other.scaled(C64::new(b, 0.0));
            let lhs = expectation(&rho, &combo).unwrap();
            let rhs = expectation(&rho, &h).unwrap() * a + expectation(&rho, &other).unwrap() * b;
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
        }
    }
}
