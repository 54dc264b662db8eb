//! Physical scenario declaration and validation: Hamiltonian, initial state,
//! the measured observable with its eigenprojectors, and the family of final
//! subspaces used for postselection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, Operator, Spectrum, State};

/// Frobenius tolerance for projector idempotency, orthogonality and
/// completeness checks.
pub const PROJECTOR_TOL: f64 = 1e-9;

fn check_projector(name: &str, p: &Operator) -> Result<()> {
    if !p.is_hermitian() {
        return Err(Error::InvalidProjector {
            name: name.into(),
            reason: format!("not Hermitian (defect {:.3e})", p.hermiticity_defect()),
        });
    }
    let idem = (&(p * p) - p).frob_norm();
    if idem > PROJECTOR_TOL {
        return Err(Error::InvalidProjector {
            name: name.into(),
            reason: format!("not idempotent (|P^2 - P| = {idem:.3e})"),
        });
    }
    Ok(())
}

/// The measured observable: distinct eigenvalues with one orthogonal
/// projector each. Projectors may have rank above one (degenerate values);
/// together they must resolve the identity.
#[derive(Debug, Clone)]
pub struct ObservableSpec {
    values: Vec<f64>,
    projectors: Vec<Operator>,
}

impl ObservableSpec {
    pub fn new(values: Vec<f64>, projectors: Vec<Operator>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("observable", "needs at least one value"));
        }
        if values.len() != projectors.len() {
            return Err(Error::DimMismatch {
                object: "observable values vs projectors".into(),
                expected: values.len(),
                got: projectors.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation("observable.values", "non-finite value"));
            }
            for w in &values[i + 1..] {
                if v == w {
                    return Err(Error::DegenerateInput(format!(
                        "observable values must be distinct (repeated {v})"
                    )));
                }
            }
        }
        let dim = projectors[0].dim();
        for (k, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimMismatch {
                    object: format!("observable projector {k}"),
                    expected: dim,
                    got: p.dim(),
                });
            }
            check_projector(&format!("observable projector {k}"), p)?;
        }
        for j in 0..projectors.len() {
            for k in j + 1..projectors.len() {
                let cross = (&projectors[j] * &projectors[k]).frob_norm();
                if cross > PROJECTOR_TOL {
                    return Err(Error::InvalidProjector {
                        name: format!("observable projectors {j},{k}"),
                        reason: format!("not orthogonal (|Pj Pk| = {cross:.3e})"),
                    });
                }
            }
        }
        let mut sum = Operator::zeros(dim);
        for p in &projectors {
            sum = &sum + p;
        }
        let residual = (&sum - &Operator::identity(dim)).frob_norm();
        if residual > PROJECTOR_TOL {
            return Err(Error::IncompleteObservable { residual });
        }
        Ok(ObservableSpec { values, projectors })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn projector(&self, k: usize) -> Result<&Operator> {
        self.projectors.get(k).ok_or(Error::UnknownIndex {
            index: k,
            count: self.projectors.len(),
        })
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    /// `sum_k chi_k P_k` (useful for checking the declared spectrum).
    pub fn reconstruct(&self) -> Operator {
        let dim = self.projectors[0].dim();
        let mut acc = Operator::zeros(dim);
        for (v, p) in self.values.iter().zip(&self.projectors) {
            acc = &acc + &p.scaled(C64::new(*v, 0.0));
        }
        acc.hermitized()
    }
}

/// Labelled projectors onto final subspaces. Completeness is declared, not
/// inferred: postselecting on a single subspace is legitimate, but sum rules
/// need the whole family.
#[derive(Debug, Clone)]
pub struct FinalFamily {
    labels: Vec<String>,
    projectors: Vec<Operator>,
    complete: bool,
}

impl FinalFamily {
    pub fn new(labels: Vec<String>, projectors: Vec<Operator>, complete: bool) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("finals", "needs at least one projector"));
        }
        if labels.len() != projectors.len() {
            return Err(Error::DimMismatch {
                object: "final labels vs projectors".into(),
                expected: labels.len(),
                got: projectors.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[i + 1..].iter().any(|m| m == l) {
                return Err(Error::DegenerateInput(format!(
                    "duplicate final label `{l}`"
                )));
            }
        }
        let dim = projectors[0].dim();
        for (label, p) in labels.iter().zip(&projectors) {
            if p.dim() != dim {
                return Err(Error::DimMismatch {
                    object: format!("final projector `{label}`"),
                    expected: dim,
                    got: p.dim(),
                });
            }
            check_projector(&format!("final projector `{label}`"), p)?;
        }
        if complete {
            let mut sum = Operator::zeros(dim);
            for p in &projectors {
                sum = &sum + p;
            }
            let residual = (&sum - &Operator::identity(dim)).frob_norm();
            if residual > PROJECTOR_TOL {
                return Err(Error::IncompleteFinals(format!(
                    "declared complete but the projector sum differs from identity by {residual:.3e}"
                )));
            }
        }
        Ok(FinalFamily {
            labels,
            projectors,
            complete,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn complete(&self) -> bool {
        self.complete
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn projector(&self, i: usize) -> &Operator {
        &self.projectors[i]
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }
}

/// Raw ingredients of a scenario, before validation.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub hamiltonian: Operator,
    pub initial: State,
    pub observable_values: Vec<f64>,
    pub observable_projectors: Vec<Operator>,
    pub final_labels: Vec<String>,
    pub final_projectors: Vec<Operator>,
    pub finals_complete: bool,
}

/// A validated scenario with the Hamiltonian spectrum precomputed.
#[derive(Debug, Clone)]
pub struct SystemModel {
    hamiltonian: Operator,
    initial: State,
    observable: ObservableSpec,
    finals: FinalFamily,
    spectrum: Spectrum,
}

impl SystemModel {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn observable(&self) -> &ObservableSpec {
        &self.observable
    }

    pub fn finals(&self) -> &FinalFamily {
        &self.finals
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn final_index(&self, label: &str) -> Result<usize> {
        self.finals
            .index_of(label)
            .ok_or_else(|| Error::UnknownFinal(label.to_string()))
    }

    /// Round-trips the validated model back into raw form.
    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            hamiltonian: self.hamiltonian.clone(),
            initial: self.initial.clone(),
            observable_values: self.observable.values().to_vec(),
            observable_projectors: self.observable.projectors().to_vec(),
            final_labels: self.finals.labels().to_vec(),
            final_projectors: self.finals.projectors().to_vec(),
            finals_complete: self.finals.complete(),
        }
    }
}

/// Checks every invariant and returns the validated model with its
/// Hamiltonian spectrum cached.
pub fn validate_system(spec: ModelSpec) -> Result<SystemModel> {
    let hamiltonian = spec.hamiltonian.hermitian_checked().map_err(|e| match e {
        Error::NotHermitian(msg) => Error::NotHermitian(format!("hamiltonian: {msg}")),
        other => other,
    })?;
    let dim = hamiltonian.dim();

    if spec.initial.dim() != dim {
        return Err(Error::DimMismatch {
            object: "initial state".into(),
            expected: dim,
            got: spec.initial.dim(),
        });
    }
    // Re-validate states that were constructed manually.
    let initial = match spec.initial {
        State::Pure(v) => State::pure(v.iter().copied().collect())?,
        State::Density(op) => State::density(op)?,
    };

    let observable = ObservableSpec::new(spec.observable_values, spec.observable_projectors)?;
    if observable.projectors()[0].dim() != dim {
        return Err(Error::DimMismatch {
            object: "observable projectors".into(),
            expected: dim,
            got: observable.projectors()[0].dim(),
        });
    }
    let finals = FinalFamily::new(spec.final_labels, spec.final_projectors, spec.finals_complete)?;
    if finals.projectors()[0].dim() != dim {
        return Err(Error::DimMismatch {
            object: "final projectors".into(),
            expected: dim,
            got: finals.projectors()[0].dim(),
        });
    }

    let spectrum = hermitian_eig(&hamiltonian)?;
    Ok(SystemModel {
        hamiltonian,
        initial,
        observable,
        finals,
        spectrum,
    })
}

/// Orthogonal projector onto the span of the given vectors.
///
/// Fails with `DegenerateInput` when the vectors are linearly dependent
/// beyond tolerance (smallest singular value below `1e-10` of the largest).
pub fn projector_from_subspace(vectors: &[DVector<C64>]) -> Result<Operator> {
    if vectors.is_empty() {
        return Err(Error::validation("subspace", "needs at least one vector"));
    }
    let dim = vectors[0].len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimMismatch {
                object: format!("subspace vector {i}"),
                expected: dim,
                got: v.len(),
            });
        }
    }
    if vectors.len() > dim {
        return Err(Error::DegenerateInput(format!(
            "{} vectors cannot be independent in dimension {dim}",
            vectors.len()
        )));
    }
    let stacked = DMatrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]);
    let svd = stacked.svd(true, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if smin < 1e-10 * smax {
        return Err(Error::DegenerateInput(format!(
            "singular value ratio {:.3e} below 1e-10",
            smin / smax
        )));
    }
    let u = svd
        .u
        .ok_or_else(|| Error::NumericalFailure("SVD did not produce U".into()))?;
    Ok(Operator::from_matrix(&u * u.adjoint()).hermitized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ket(dim: usize, k: usize) -> DVector<C64> {
        DVector::from_fn(dim, |i, _| if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    fn two_level_spec() -> ModelSpec {
        let v = 3.0f64.sqrt();
        ModelSpec {
            hamiltonian: Operator::from_rows(&[
                vec![c(-1.0, 0.0), c(v, 0.0)],
                vec![c(v, 0.0), c(1.0, 0.0)],
            ])
            .unwrap(),
            initial: State::pure(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            observable_values: vec![-1.0, 1.0],
            observable_projectors: vec![
                Operator::diagonal(&[1.0, 0.0]),
                Operator::diagonal(&[0.0, 1.0]),
            ],
            final_labels: vec!["0".into(), "1".into()],
            final_projectors: vec![
                Operator::diagonal(&[1.0, 0.0]),
                Operator::diagonal(&[0.0, 1.0]),
            ],
            finals_complete: true,
        }
    }

    #[test]
    fn accepts_two_level_scenario() {
        let model = validate_system(two_level_spec()).unwrap();
        assert_eq!(model.dim(), 2);
        assert_abs_diff_eq!(model.spectrum().eigenvalues()[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.spectrum().eigenvalues()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_repeated_projector() {
        let mut spec = two_level_spec();
        spec.observable_projectors = vec![
            Operator::diagonal(&[1.0, 0.0]),
            Operator::diagonal(&[1.0, 0.0]),
        ];
        // identical projectors are not orthogonal, and they also fail
        // completeness; orthogonality trips first
        let err = validate_system(spec).unwrap_err();
        assert!(matches!(err, Error::InvalidProjector { .. }));

        // orthogonal but incomplete family
        let mut spec = two_level_spec();
        spec.observable_values = vec![-1.0];
        spec.observable_projectors = vec![Operator::diagonal(&[1.0, 0.0])];
        let err = validate_system(spec).unwrap_err();
        assert!(matches!(err, Error::IncompleteObservable { .. }));
    }

    #[test]
    fn rejects_bad_density() {
        let mut spec = two_level_spec();
        spec.initial = State::Density(Operator::diagonal(&[1.0, 1.0]));
        let err = validate_system(spec).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn validate_is_idempotent() {
        let model = validate_system(two_level_spec()).unwrap();
        let again = validate_system(model.to_spec()).unwrap();
        assert_eq!(
            model.hamiltonian().matrix(),
            again.hamiltonian().matrix()
        );
        assert_eq!(
            model.spectrum().basis().matrix(),
            again.spectrum().basis().matrix()
        );
        assert_eq!(model.spectrum().eigenvalues(), again.spectrum().eigenvalues());
    }

    #[test]
    fn projector_from_single_vector() {
        let p = projector_from_subspace(&[ket(2, 0)]).unwrap();
        assert!((&p - &Operator::diagonal(&[1.0, 0.0])).frob_norm() < 1e-12);
    }

    #[test]
    fn projector_from_full_basis_is_identity() {
        let p = projector_from_subspace(&[ket(2, 0), ket(2, 1)]).unwrap();
        assert!((&p - &Operator::identity(2)).frob_norm() < 1e-12);
    }

    #[test]
    fn projector_from_diagonal_vector() {
        let s = 1.0 / 2.0f64.sqrt();
        let v = DVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let p = projector_from_subspace(std::slice::from_ref(&v)).unwrap();
        let want = Operator::from_rows(&[
            vec![c(0.5, 0.0), c(0.5, 0.0)],
            vec![c(0.5, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        assert!((&p - &want).frob_norm() < 1e-12);
        // P v = v
        let pv = p.matrix() * &v;
        assert!((pv - v).norm() < 1e-10);
    }

    #[test]
    fn projector_rejects_dependent_vectors() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]);
        let w = &v * c(2.0, 0.0);
        assert!(matches!(
            projector_from_subspace(&[v, w]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn observable_reconstruction_spectrum() {
        // sum_k chi_k P_k must reproduce the chi values with multiplicity
        // equal to the projector ranks
        let p0 = projector_from_subspace(&[ket(3, 0)]).unwrap();
        let p12 = projector_from_subspace(&[ket(3, 1), ket(3, 2)]).unwrap();
        let obs = ObservableSpec::new(vec![0.5, 2.0], vec![p0, p12]).unwrap();
        let spec = hermitian_eig(&obs.reconstruct()).unwrap();
        let got: Vec<f64> = spec.eigenvalues().to_vec();
        for (a, b) in got.iter().zip([0.5, 2.0, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn finals_completeness_is_declared() {
        // postselecting on a single subspace is fine when not declared complete
        let fam = FinalFamily::new(
            vec!["up".into()],
            vec![Operator::diagonal(&[1.0, 0.0])],
            false,
        )
        .unwrap();
        assert!(!fam.complete());

        let err = FinalFamily::new(
            vec!["up".into()],
            vec![Operator::diagonal(&[1.0, 0.0])],
            true,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IncompleteFinals(_)));
    }
}
