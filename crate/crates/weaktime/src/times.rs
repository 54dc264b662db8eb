//! Time observables built from the accumulated projector operator.
//!
//! The central object is `F(chi, t)`: the time integral over `[0, t]` of the
//! observable eigenprojector in the interaction picture. Its expectation in
//! the initial state is the unconditional dwell time; sandwiching it with an
//! evolved final-subspace projector yields the two postselected components
//! `tau1` (symmetrized part) and `tau2` (commutator part). When the evolved
//! final projector commutes with `F`, `tau2` carries no weight and the
//! conditional time is detector-independent; otherwise the measured value
//! picks up `c * tau2` with a coefficient `c` set by the pointer state.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{expect_matrix, expectation, Operator};
use crate::model::SystemModel;

/// Numerical floors for the conditional-time operations.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Postselection probabilities below this floor raise
    /// `VanishingPostselection` instead of producing huge times.
    pub p_min: f64,
    /// Relative Frobenius norm below which a commutator counts as zero.
    pub definiteness_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            p_min: 1e-10,
            definiteness_threshold: 1e-9,
        }
    }
}

/// Evaluation route for the accumulated operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FMethod {
    /// Closed form in the Hamiltonian eigenbasis (default).
    ExactEigenbasis,
    /// Composite Simpson quadrature of the interaction-picture projector;
    /// `steps: None` picks the automatic rule from [`quadrature_steps`].
    Quadrature { steps: Option<usize> },
}

/// The accumulated operator `F(chi, t)` together with how it was built.
#[derive(Debug, Clone)]
pub struct FOperator {
    pub chi_value: f64,
    pub t: f64,
    pub matrix: Operator,
    pub method: FMethod,
}

/// Output of [`conditional_components`].
#[derive(Debug, Clone, Copy)]
pub struct ConditionalResult {
    pub tau1: f64,
    pub tau2: f64,
    /// Probability of the final subspace at time `t`.
    pub prob_f: f64,
    /// Relative Frobenius norm of the evolved-projector/F commutator.
    pub commutator_norm: f64,
    /// True when `commutator_norm` is at or below the threshold, i.e. the
    /// conditional time does not depend on the detector.
    pub definite: bool,
}

/// Residuals of the postselection averaging identities at one time.
///
/// The probability-weighted sums are evaluated in undivided form
/// (`p_f tau_f` is an expectation with no division), so they stay defined
/// even for finals the system never reaches. The per-final totals over the
/// observable spectrum do need `tau_f` itself; finals whose probability
/// sits below the floor are listed in `skipped_finals` instead.
#[derive(Debug, Clone)]
pub struct SumRuleReport {
    pub t: f64,
    /// Per chi index: `|sum_f p_f tau1_f(chi) - tau(chi)|`.
    pub tau1_weighted: Vec<f64>,
    /// Per chi index: `|sum_f p_f tau2_f(chi)|`.
    pub tau2_weighted: Vec<f64>,
    /// Labels of the finals retained for the per-final totals.
    pub retained_finals: Vec<String>,
    /// Per retained final: `|sum_chi tau1_f(chi) - t|`.
    pub chi_total_tau1: Vec<f64>,
    /// Per retained final: `|sum_chi tau2_f(chi)|`.
    pub chi_total_tau2: Vec<f64>,
    /// Finals with postselection probability below the floor.
    pub skipped_finals: Vec<String>,
}

impl SumRuleReport {
    pub fn max_residual(&self) -> f64 {
        self.tau1_weighted
            .iter()
            .chain(&self.tau2_weighted)
            .chain(&self.chi_total_tau1)
            .chain(&self.chi_total_tau2)
            .fold(0.0f64, |a, &b| a.max(b))
    }
}

// Below this value of |omega * t| the phase integral switches to its Taylor
// series; removes the 0/0 at coinciding eigenvalues deterministically.
const PHASE_SERIES_CUTOFF: f64 = 1e-8;

// Discarded imaginary residues above this are treated as an upstream bug.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

// Keeps the relative commutator norm finite when F vanishes (t = 0).
const NORM_FLOOR: f64 = 1e-30;

/// `int_0^t exp(i omega s) ds`, series-guarded near `omega t = 0`.
fn phase_integral(omega: f64, t: f64) -> C64 {
    let x = omega * t;
    if x.abs() < PHASE_SERIES_CUTOFF {
        // t (1 + i x/2 - x^2/6)
        C64::new(1.0 - x * x / 6.0, 0.5 * x) * t
    } else {
        C64::new(x.sin() / omega, (1.0 - x.cos()) / omega)
    }
}

fn real_part(z: C64, context: &str) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NumericalFailure(format!(
            "imaginary residue {:.3e} in {context}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Number of Simpson intervals for quadrature over `[0, t]`: at least 200,
/// and at least 20 points per period of the fastest Bohr frequency
/// (bounded by the Frobenius norm of the Hamiltonian); always even.
pub fn quadrature_steps(model: &SystemModel, t: f64, requested: Option<usize>) -> usize {
    let mut n = match requested {
        Some(n) => n.max(2),
        None => {
            let scale = 20.0 * model.hamiltonian().frob_norm() * t;
            (scale.ceil() as usize).max(200)
        }
    };
    if n % 2 == 1 {
        n += 1;
    }
    n
}

/// `U_S^dag(t) A U_S(t)`.
pub fn interaction_picture(model: &SystemModel, a: &Operator, t: f64) -> Result<Operator> {
    if a.dim() != model.dim() {
        return Err(Error::DimMismatch {
            object: "interaction_picture operand".into(),
            expected: model.dim(),
            got: a.dim(),
        });
    }
    if !t.is_finite() {
        return Err(Error::validation("t", "time must be finite"));
    }
    let u = model.spectrum().evolution(t);
    let rotated = &(&u.adjoint() * a) * &u;
    if a.is_hermitian() {
        Ok(rotated.hermitized())
    } else {
        Ok(rotated)
    }
}

/// Builds `F(chi_k, t)` by the requested route.
///
/// The exact route evaluates the time integral elementwise in the
/// Hamiltonian eigenbasis through [`phase_integral`]; the quadrature route
/// Simpson-integrates the interaction-picture projector and exists to
/// cross-check the exact one.
pub fn accumulate_f(
    model: &SystemModel,
    chi_index: usize,
    t: f64,
    method: FMethod,
) -> Result<FOperator> {
    let proj = model.observable().projector(chi_index)?;
    let chi_value = model.observable().values()[chi_index];
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(FOperator {
            chi_value,
            t,
            matrix: Operator::zeros(model.dim()),
            method,
        });
    }
    let matrix = match method {
        FMethod::ExactEigenbasis => {
            let spectrum = model.spectrum();
            let energies = spectrum.eigenvalues();
            let mut in_basis = spectrum.to_eigenbasis(proj);
            let d = model.dim();
            for i in 0..d {
                for j in 0..d {
                    in_basis[(i, j)] *= phase_integral(energies[i] - energies[j], t);
                }
            }
            spectrum.from_eigenbasis(&in_basis).hermitized()
        }
        FMethod::Quadrature { steps } => {
            let n = quadrature_steps(model, t, steps);
            let h = t / n as f64;
            let d = model.dim();
            let mut acc = Operator::zeros(d);
            for i in 0..=n {
                let weight = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let node = interaction_picture(model, proj, h * i as f64)?;
                acc = &acc + &node.scaled(C64::new(weight, 0.0));
            }
            acc.scaled(C64::new(h / 3.0, 0.0)).hermitized()
        }
    };
    Ok(FOperator {
        chi_value,
        t,
        matrix,
        method,
    })
}

/// Probability that the observable holds the value `chi_k` at time `t`.
pub fn presence_probability(model: &SystemModel, chi_index: usize, t: f64) -> Result<f64> {
    let proj = model.observable().projector(chi_index)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let tilted = interaction_picture(model, proj, t)?;
    real_part(
        expectation(model.initial(), &tilted)?,
        "presence probability",
    )
}

/// Unconditional dwell time: expectation of `F(chi_k, t)` in the initial
/// state. Equals the time integral of [`presence_probability`].
pub fn dwell_time(model: &SystemModel, chi_index: usize, t: f64) -> Result<f64> {
    let f = accumulate_f(model, chi_index, t, FMethod::ExactEigenbasis)?;
    real_part(expectation(model.initial(), &f.matrix)?, "dwell time")
}

/// Total time spent in a region of observable values (a set of chi indices).
pub fn region_time(model: &SystemModel, chi_indices: &[usize], t: f64) -> Result<f64> {
    if chi_indices.is_empty() {
        return Err(Error::validation("region", "index set must be nonempty"));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut total = 0.0;
    for &k in chi_indices {
        if seen.insert(k) {
            total += dwell_time(model, k, t)?;
        }
    }
    Ok(total)
}

struct ConditionalParts {
    prob: f64,
    pf_f: C64,
    f_pf: C64,
    commutator_norm: f64,
}

fn conditional_parts(
    model: &SystemModel,
    f_op: &FOperator,
    final_index: usize,
    t: f64,
) -> Result<ConditionalParts> {
    let p_tilde = interaction_picture(model, model.finals().projector(final_index), t)?;
    let prob = real_part(
        expectation(model.initial(), &p_tilde)?,
        "postselection probability",
    )?;
    let pf = p_tilde.matrix() * f_op.matrix.matrix();
    let fp = f_op.matrix.matrix() * p_tilde.matrix();
    let comm = crate::linalg::Operator::from_matrix(&pf - &fp);
    let commutator_norm =
        comm.frob_norm() / (p_tilde.frob_norm() * f_op.matrix.frob_norm() + NORM_FLOOR);
    Ok(ConditionalParts {
        prob,
        pf_f: expect_matrix(model.initial(), &pf),
        f_pf: expect_matrix(model.initial(), &fp),
        commutator_norm,
    })
}

/// Both postselected time components for the value `chi_k` with final
/// subspace `final_label`, plus the definiteness diagnostics.
pub fn conditional_components(
    model: &SystemModel,
    chi_index: usize,
    final_label: &str,
    t: f64,
    tol: &Tolerances,
) -> Result<ConditionalResult> {
    let f_idx = model.final_index(final_label)?;
    let f_op = accumulate_f(model, chi_index, t, FMethod::ExactEigenbasis)?;
    let parts = conditional_parts(model, &f_op, f_idx, t)?;
    if parts.prob < tol.p_min {
        return Err(Error::VanishingPostselection {
            prob: parts.prob,
            p_min: tol.p_min,
        });
    }
    let sym = parts.pf_f + parts.f_pf;
    let tau1 = real_part(sym, "symmetrized conditional time")? / (2.0 * parts.prob);
    let comm = parts.pf_f - parts.f_pf;
    if comm.re.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NumericalFailure(format!(
            "real residue {:.3e} in commutator expectation",
            comm.re
        )));
    }
    let tau2 = comm.im / (2.0 * parts.prob);
    Ok(ConditionalResult {
        tau1,
        tau2,
        prob_f: parts.prob,
        commutator_norm: parts.commutator_norm,
        definite: parts.commutator_norm <= tol.definiteness_threshold,
    })
}

/// The conditional duration read off a detector with coefficient `c`:
/// `tau1 + c * tau2`. Independent of `c` exactly when the definiteness
/// condition holds.
pub fn conditional_time(
    model: &SystemModel,
    chi_index: usize,
    final_label: &str,
    t: f64,
    detector_coeff: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let comps = conditional_components(model, chi_index, final_label, t, tol)?;
    Ok(comps.tau1 + detector_coeff * comps.tau2)
}

/// Relative commutator norm and the definiteness verdict. Unlike the
/// conditional times this needs no postselection probability: the
/// commutator exists regardless.
pub fn definiteness_check(
    model: &SystemModel,
    chi_index: usize,
    final_label: &str,
    t: f64,
    threshold: f64,
) -> Result<(f64, bool)> {
    let f_idx = model.final_index(final_label)?;
    let f_op = accumulate_f(model, chi_index, t, FMethod::ExactEigenbasis)?;
    let parts = conditional_parts(model, &f_op, f_idx, t)?;
    Ok((
        parts.commutator_norm,
        parts.commutator_norm <= threshold,
    ))
}

/// Verifies the averaging identities: weighting the conditional components
/// by the final-state probabilities must reproduce the unconditional dwell
/// time (and cancel the commutator parts), and summing a conditional time
/// over the whole observable spectrum must give `t`.
pub fn sum_rule_report(model: &SystemModel, t: f64, tol: &Tolerances) -> Result<SumRuleReport> {
    if !model.finals().complete() {
        return Err(Error::IncompleteFinals(
            "sum rules need a final family declared complete".into(),
        ));
    }
    let n_chi = model.observable().len();
    let n_f = model.finals().len();

    let mut f_ops = Vec::with_capacity(n_chi);
    let mut dwell = Vec::with_capacity(n_chi);
    for k in 0..n_chi {
        let f_op = accumulate_f(model, k, t, FMethod::ExactEigenbasis)?;
        dwell.push(real_part(
            expectation(model.initial(), &f_op.matrix)?,
            "dwell time",
        )?);
        f_ops.push(f_op);
    }

    // undivided products p_f tau_f and the probabilities themselves
    let mut probs = vec![0.0; n_f];
    let mut sym = vec![vec![0.0; n_f]; n_chi];
    let mut comm = vec![vec![0.0; n_f]; n_chi];
    for fi in 0..n_f {
        for (k, f_op) in f_ops.iter().enumerate() {
            let parts = conditional_parts(model, f_op, fi, t)?;
            probs[fi] = parts.prob;
            sym[k][fi] =
                real_part(parts.pf_f + parts.f_pf, "symmetrized conditional time")? / 2.0;
            comm[k][fi] = (parts.pf_f - parts.f_pf).im / 2.0;
        }
    }

    let tau1_weighted = (0..n_chi)
        .map(|k| {
            let avg: f64 = (0..n_f).map(|fi| sym[k][fi]).sum();
            (avg - dwell[k]).abs()
        })
        .collect();
    let tau2_weighted = (0..n_chi)
        .map(|k| {
            let avg: f64 = (0..n_f).map(|fi| comm[k][fi]).sum();
            avg.abs()
        })
        .collect();

    let mut retained_finals = Vec::new();
    let mut skipped_finals = Vec::new();
    let mut chi_total_tau1 = Vec::new();
    let mut chi_total_tau2 = Vec::new();
    for fi in 0..n_f {
        let label = model.finals().labels()[fi].clone();
        if probs[fi] < tol.p_min {
            skipped_finals.push(label);
            continue;
        }
        let total1: f64 = (0..n_chi).map(|k| sym[k][fi] / probs[fi]).sum();
        let total2: f64 = (0..n_chi).map(|k| comm[k][fi] / probs[fi]).sum();
        chi_total_tau1.push((total1 - t).abs());
        chi_total_tau2.push(total2.abs());
        retained_finals.push(label);
    }

    Ok(SumRuleReport {
        t,
        tau1_weighted,
        tau2_weighted,
        retained_finals,
        chi_total_tau1,
        chi_total_tau2,
        skipped_finals,
    })
}
