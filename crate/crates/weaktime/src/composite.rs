//! Finite-coupling ground truth: the full system-pointer composite.
//!
//! The pointer is a wavefunction on a uniform coordinate grid, coupled to
//! the system through one observable eigenprojector. Because the coupling
//! is diagonal in the pointer coordinate, the composite evolves exactly,
//! one grid point at a time, with no time-splitting error. Times are read
//! off the pointer momentum shift, `tau = -delta<p>/gamma`, and compared
//! against the first-order formulas by sweeping the coupling down.
//!
//! Momentum expectations are computed spectrally (FFT, multiply by the
//! momentum grid, inverse FFT); the Gaussian boundary-decay invariant keeps
//! the periodic wrap below rounding.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, Operator, State};
use crate::model::SystemModel;
use crate::times::{conditional_components, dwell_time, Tolerances};

/// Squared-amplitude decay required at the grid edges, relative to the peak.
pub const BOUNDARY_DECAY: f64 = 1e-12;

/// Eigen-ensemble weights below this are dropped when expanding a mixed
/// initial state.
const ENSEMBLE_WEIGHT_FLOOR: f64 = 1e-12;

/// Pointer construction parameters. `q_extent` is the half-width `Q` of the
/// grid `[-Q, Q)`, `grid_points` must be a power of two.
#[derive(Debug, Clone, Copy)]
pub struct DetectorSpec {
    pub q_extent: f64,
    pub grid_points: usize,
    pub sigma: f64,
    pub chirp: f64,
    pub q0: f64,
    pub p0: f64,
    pub gamma: f64,
}

impl DetectorSpec {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Normalized pointer wavefunction on its grid.
#[derive(Debug, Clone)]
pub struct DetectorState {
    q: Vec<f64>,
    dq: f64,
    amplitudes: Vec<C64>,
    pub gamma: f64,
    pub sigma: f64,
    pub chirp: f64,
    pub q0: f64,
    pub p0: f64,
}

impl DetectorState {
    pub fn grid(&self) -> &[f64] {
        &self.q
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dq
    }
}

/// First and mixed moments of the pointer, and the coefficient
/// `c = 2 (<q><p> - Re<q p>)` that weights the commutator time component.
#[derive(Debug, Clone, Copy)]
pub struct DetectorMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub re_qp: f64,
    pub coeff_c: f64,
}

/// Pointer-grid-indexed family of system vectors: the entangled composite
/// `|Psi> = sum_j sqrt(dq) |q_j> (x) psi_j`.
#[derive(Debug, Clone)]
pub struct CompositeState {
    q: Vec<f64>,
    dq: f64,
    dim: usize,
    spinors: Vec<DVector<C64>>,
}

impl CompositeState {
    pub fn norm(&self) -> f64 {
        self.spinors.iter().map(|s| s.norm_squared()).sum::<f64>() * self.dq
    }

    pub fn grid_len(&self) -> usize {
        self.q.len()
    }

    pub fn spinor(&self, j: usize) -> &DVector<C64> {
        &self.spinors[j]
    }
}

/// Builds the pointer state
/// `Phi(q) ~ exp(-(1 + i chirp)(q - q0)^2 / (4 sigma^2) + i p0 q)`,
/// grid-normalized.
pub fn make_detector(spec: &DetectorSpec) -> Result<DetectorState> {
    if !spec.grid_points.is_power_of_two() || spec.grid_points < 8 {
        return Err(Error::InvalidDetector(format!(
            "grid_points must be a power of two >= 8, got {}",
            spec.grid_points
        )));
    }
    if !spec.sigma.is_finite() || spec.sigma <= 0.0 {
        return Err(Error::InvalidDetector(format!(
            "sigma must be positive, got {}",
            spec.sigma
        )));
    }
    if spec.gamma <= 0.0 {
        return Err(Error::ZeroCoupling(spec.gamma));
    }
    if spec.q_extent < 8.0 * spec.sigma {
        return Err(Error::GridTooSmall(format!(
            "extent {} below 8 sigma = {}",
            spec.q_extent,
            8.0 * spec.sigma
        )));
    }
    let n = spec.grid_points;
    let dq = 2.0 * spec.q_extent / n as f64;
    let q: Vec<f64> = (0..n).map(|j| -spec.q_extent + dq * j as f64).collect();
    let width = 4.0 * spec.sigma * spec.sigma;
    let mut amplitudes: Vec<C64> = q
        .iter()
        .map(|&qj| {
            let u = qj - spec.q0;
            let arg = C64::new(-u * u / width, -spec.chirp * u * u / width + spec.p0 * qj);
            arg.exp()
        })
        .collect();
    let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq;
    let scale = C64::new(1.0 / norm2.sqrt(), 0.0);
    for a in &mut amplitudes {
        *a *= scale;
    }
    let peak = amplitudes.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let edge = amplitudes[0].norm_sqr().max(amplitudes[n - 1].norm_sqr());
    if edge > BOUNDARY_DECAY * peak {
        return Err(Error::GridTooSmall(format!(
            "edge amplitude ratio {:.3e} above {BOUNDARY_DECAY:.0e}",
            edge / peak
        )));
    }
    Ok(DetectorState {
        q,
        dq,
        amplitudes,
        gamma: spec.gamma,
        sigma: spec.sigma,
        chirp: spec.chirp,
        q0: spec.q0,
        p0: spec.p0,
    })
}

/// FFT plans plus the signed momentum grid for one spatial grid.
struct SpectralGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    momenta: Vec<f64>,
}

impl SpectralGrid {
    fn new(n: usize, dq: f64) -> Self {
        let mut planner = FftPlanner::new();
        let dp = 2.0 * std::f64::consts::PI / (n as f64 * dq);
        let momenta = (0..n)
            .map(|k| {
                let signed = if k < n / 2 {
                    k as isize
                } else {
                    k as isize - n as isize
                };
                signed as f64 * dp
            })
            .collect();
        SpectralGrid {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            momenta,
        }
    }

    /// Returns `p_hat` applied to the amplitude function of q.
    fn apply_momentum(&self, amplitudes: &[C64]) -> Vec<C64> {
        let mut buf = amplitudes.to_vec();
        self.forward.process(&mut buf);
        for (b, &p) in buf.iter_mut().zip(&self.momenta) {
            *b *= p;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }
}

/// Grid moments of the pointer: `<q>` by direct quadrature, `<p>` and
/// `Re<q p>` through the spectral momentum representation (the Hermitian
/// symmetrization `(qp + pq)/2` has exactly this real part).
pub fn detector_moments(det: &DetectorState) -> DetectorMoments {
    let grid = SpectralGrid::new(det.q.len(), det.dq);
    let mean_q: f64 = det
        .q
        .iter()
        .zip(&det.amplitudes)
        .map(|(&q, a)| q * a.norm_sqr())
        .sum::<f64>()
        * det.dq;
    let p_amp = grid.apply_momentum(&det.amplitudes);
    let mut mean_p = 0.0;
    let mut re_qp = 0.0;
    for ((a, pa), &q) in det.amplitudes.iter().zip(&p_amp).zip(&det.q) {
        let overlap = a.conj() * pa;
        mean_p += overlap.re;
        re_qp += q * overlap.re;
    }
    mean_p *= det.dq;
    re_qp *= det.dq;
    DetectorMoments {
        mean_q,
        mean_p,
        re_qp,
        coeff_c: 2.0 * (mean_q * mean_p - re_qp),
    }
}

fn evolve_grid(
    hamiltonian: &Operator,
    coupling_projector: &Operator,
    det: &DetectorState,
    t: f64,
    psi0: &DVector<C64>,
) -> Result<CompositeState> {
    let dim = hamiltonian.dim();
    let spinors: Vec<DVector<C64>> = det
        .q
        .par_iter()
        .zip(det.amplitudes.par_iter())
        .map(|(&qj, &amp)| -> Result<DVector<C64>> {
            let shifted = hamiltonian + &coupling_projector.scaled(C64::new(det.gamma * qj, 0.0));
            let spectrum = hermitian_eig(&shifted.hermitized())?;
            Ok(spectrum.evolve_vector(t, psi0) * amp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositeState {
        q: det.q.clone(),
        dq: det.dq,
        dim,
        spinors,
    })
}

/// Evolves the composite for time `t` with the coupling attached to the
/// `chi_index` eigenprojector. The per-grid-point generator
/// `H_S + gamma q_j P_k` is diagonalized exactly; the pointer carries no
/// free Hamiltonian of its own.
///
/// Mixed initial states are rejected; expand them into their eigen-ensemble
/// and combine the runs convexly (as [`convergence_study`] does).
pub fn evolve_composite(
    model: &SystemModel,
    det: &DetectorState,
    chi_index: usize,
    t: f64,
) -> Result<CompositeState> {
    let proj = model.observable().projector(chi_index)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let psi0 = match model.initial() {
        State::Pure(v) => v,
        State::Density(_) => return Err(Error::MixedStateUnsupported),
    };
    evolve_grid(model.hamiltonian(), proj, det, t, psi0)
}

fn momentum_sum(c: &CompositeState, grid: &SpectralGrid) -> f64 {
    let mut total = 0.0;
    let n = c.q.len();
    let mut component = vec![C64::new(0.0, 0.0); n];
    for m in 0..c.dim {
        for (j, slot) in component.iter_mut().enumerate() {
            *slot = c.spinors[j][m];
        }
        let p_comp = grid.apply_momentum(&component);
        total += component
            .iter()
            .zip(&p_comp)
            .map(|(a, pa)| (a.conj() * pa).re)
            .sum::<f64>();
    }
    total * c.dq
}

/// Pointer-momentum expectation over the whole composite.
pub fn mean_momentum(c: &CompositeState) -> f64 {
    let grid = SpectralGrid::new(c.q.len(), c.dq);
    momentum_sum(c, &grid)
}

fn postselect_raw(c: &CompositeState, projector: &Operator) -> (f64, f64) {
    let projected = CompositeState {
        q: c.q.clone(),
        dq: c.dq,
        dim: c.dim,
        spinors: c
            .spinors
            .iter()
            .map(|s| projector.matrix() * s)
            .collect(),
    };
    let prob = projected.norm();
    let grid = SpectralGrid::new(c.q.len(), c.dq);
    (prob, momentum_sum(&projected, &grid))
}

/// Applies the final-subspace projector to every grid spinor and returns
/// the postselection probability together with the conditional momentum
/// expectation of the surviving (renormalized) composite.
pub fn postselect(
    c: &CompositeState,
    model: &SystemModel,
    final_label: &str,
    p_min: f64,
) -> Result<(f64, f64)> {
    let idx = model.final_index(final_label)?;
    let (prob, p_sum) = postselect_raw(c, model.finals().projector(idx));
    if prob < p_min {
        return Err(Error::VanishingPostselection { prob, p_min });
    }
    Ok((prob, p_sum / prob))
}

/// Converts a pointer-momentum shift into a time: `tau = -delta_p / gamma`.
pub fn extract_time(delta_p: f64, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::ZeroCoupling(gamma));
    }
    Ok(-delta_p / gamma)
}

/// One row of a coupling sweep.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub gamma: f64,
    pub tau_oracle: f64,
    pub tau_formula: f64,
    pub abs_error: f64,
}

/// Whether a sweep row is inside the asymptotic window where the
/// error-halving ratio test is meaningful.
pub fn in_convergence_regime(abs_error: f64, tau_formula: f64) -> bool {
    abs_error < 0.1 * tau_formula.abs() + 1e-6
}

fn ensemble_members(state: &State) -> Result<Vec<(f64, DVector<C64>)>> {
    match state {
        State::Pure(v) => Ok(vec![(1.0, v.clone())]),
        State::Density(rho) => {
            let spectrum = hermitian_eig(rho)?;
            let basis = spectrum.basis().matrix();
            Ok(spectrum
                .eigenvalues()
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > ENSEMBLE_WEIGHT_FLOOR)
                .map(|(i, &w)| (w, basis.column(i).clone_owned()))
                .collect())
        }
    }
}

/// Sweeps the coupling strength downward and tabulates the simulated time
/// against the first-order formula (the dwell time when `final_label` is
/// `None`, otherwise `tau1 + c tau2` with `c` taken from the detector
/// template). Mixed initial states run as convex eigen-ensembles.
pub fn convergence_study(
    model: &SystemModel,
    chi_index: usize,
    final_label: Option<&str>,
    t: f64,
    gammas: &[f64],
    template: &DetectorSpec,
    tol: &Tolerances,
) -> Result<Vec<ConvergenceRow>> {
    if gammas.is_empty() {
        return Err(Error::validation("gammas", "list must be nonempty"));
    }
    for pair in gammas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::validation("gammas", "must be strictly descending"));
        }
    }
    if gammas.iter().any(|&g| g <= 0.0) {
        return Err(Error::ZeroCoupling(
            *gammas.iter().find(|&&g| g <= 0.0).unwrap(),
        ));
    }
    let proj = model.observable().projector(chi_index)?.clone();
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }

    let reference = make_detector(&template.with_gamma(gammas[0]))?;
    let moments = detector_moments(&reference);
    let tau_formula = match final_label {
        None => dwell_time(model, chi_index, t)?,
        Some(label) => {
            let comps = conditional_components(model, chi_index, label, t, tol)?;
            comps.tau1 + moments.coeff_c * comps.tau2
        }
    };

    let members = ensemble_members(model.initial())?;
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let det = make_detector(&template.with_gamma(gamma))?;
        let p_init = detector_moments(&det).mean_p;
        let tau_oracle = match final_label {
            None => {
                let mut delta_p = 0.0;
                for (w, psi) in &members {
                    let evolved = evolve_grid(model.hamiltonian(), &proj, &det, t, psi)?;
                    delta_p += w * (mean_momentum(&evolved) - p_init);
                }
                extract_time(delta_p, gamma)?
            }
            Some(label) => {
                let idx = model.final_index(label)?;
                let p_f = model.finals().projector(idx);
                let mut prob = 0.0;
                let mut p_sum = 0.0;
                for (w, psi) in &members {
                    let evolved = evolve_grid(model.hamiltonian(), &proj, &det, t, psi)?;
                    let (member_prob, member_sum) = postselect_raw(&evolved, p_f);
                    prob += w * member_prob;
                    p_sum += w * member_sum;
                }
                if prob < tol.p_min {
                    return Err(Error::VanishingPostselection {
                        prob,
                        p_min: tol.p_min,
                    });
                }
                extract_time(p_sum / prob - p_init, gamma)?
            }
        };
        rows.push(ConvergenceRow {
            gamma,
            tau_oracle,
            tau_formula,
            abs_error: (tau_oracle - tau_formula).abs(),
        });
    }
    Ok(rows)
}
