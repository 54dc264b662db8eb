//! Closed-form reference for the driven two-level system.
//!
//! Basis ordering: index 0 is the lower level `|0>` (energy `-omega/2`),
//! index 1 the upper level `|1>`. The coupling `v` enters through
//! `Omega = sqrt(omega^2 + 4 |v|^2)` only, so it may be complex.
//!
//! These expressions exist to cross-validate the general machinery in
//! [`crate::times`]; the equivalence of the two routes is the central test
//! of both modules.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{Operator, State};
use crate::model::{validate_system, ModelSpec, SystemModel};

/// Level splitting and coupling of the two-level system.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelParams {
    omega: f64,
    v: C64,
    big_omega: f64,
}

impl TwoLevelParams {
    pub fn new(omega: f64, v: C64) -> Self {
        let big_omega = (omega * omega + 4.0 * v.norm_sqr()).sqrt();
        TwoLevelParams { omega, v, big_omega }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn v(&self) -> C64 {
        self.v
    }

    /// The population oscillation frequency `sqrt(omega^2 + 4 |v|^2)`.
    pub fn big_omega(&self) -> f64 {
        self.big_omega
    }
}

/// Which level a closed-form quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Zero,
    One,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Zero => "0",
            Level::One => "1",
        }
    }
}

/// Closed-form conditional components for a fixed final level:
/// the symmetrized and commutator parts for time spent in level 0, and the
/// symmetrized part for time spent in level 1.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalClosed {
    pub tau1_level0: f64,
    pub tau2_level0: f64,
    pub tau1_level1: f64,
}

/// Assembles the validated two-level model: `H = omega sigma_3 / 2 +
/// v sigma_+ + conj(v) sigma_-`, initial state `|0>`, level projectors as
/// both the observable and the (complete) final family.
pub fn build_two_level(omega: f64, v: C64) -> SystemModel {
    let half = 0.5 * omega;
    let spec = ModelSpec {
        hamiltonian: Operator::from_rows(&[
            vec![C64::new(-half, 0.0), v.conj()],
            vec![v, C64::new(half, 0.0)],
        ])
        .expect("finite square matrix"),
        initial: State::pure(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .expect("unit basis vector"),
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
    };
    validate_system(spec).expect("two-level model is valid by construction")
}

/// Unconditional dwell times `(tau0, tau1)` in the two levels.
///
/// `tau1` is evaluated as `t - tau0`, which is the same expression with the
/// cancellation done exactly. The `Omega = 0` point (zero Hamiltonian) takes
/// its limit `(t, 0)`.
pub fn dwell_closed(params: &TwoLevelParams, t: f64) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let om = params.big_omega;
    if om == 0.0 {
        return Ok((t, 0.0));
    }
    let g2 = (params.omega / om) * (params.omega / om);
    let tau0 = 0.5 * (1.0 + g2) * t + (om * t).sin() * (1.0 - g2) / (2.0 * om);
    Ok((tau0, t - tau0))
}

/// Occupation probability of `level` at time `t` starting from `|0>`.
pub fn rabi_probability(params: &TwoLevelParams, t: f64, level: Level) -> f64 {
    let om = params.big_omega;
    let p1 = if om == 0.0 {
        0.0
    } else {
        let g2 = (params.omega / om) * (params.omega / om);
        (1.0 - g2) * (0.5 * om * t).sin().powi(2)
    };
    match level {
        Level::Zero => 1.0 - p1,
        Level::One => p1,
    }
}

// Guard radius in Omega*t around the singular points of the conditional
// closed forms; inside it the weak-coupling expansion has broken down.
const SINGULAR_GUARD: f64 = 0.01;

fn distance_to_multiple(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

/// Closed-form conditional components for the given final level.
///
/// Final level 1 is singular at `Omega t = 2 pi n` (the postselection
/// probability vanishes there); final level 0 is singular only for
/// `omega = 0` at `Omega t = pi (2n+1)`.
pub fn conditional_closed(
    params: &TwoLevelParams,
    t: f64,
    final_level: Level,
) -> Result<ConditionalClosed> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let om = params.big_omega;
    let omega_t = om * t;
    match final_level {
        Level::One => {
            if om == 0.0 || distance_to_multiple(omega_t, 2.0 * std::f64::consts::PI) < SINGULAR_GUARD {
                return Err(Error::SingularPostselection { omega_t });
            }
            let x = 0.5 * omega_t;
            let tau2 = (params.omega / (om * om)) * (1.0 - x * x.cos() / x.sin());
            Ok(ConditionalClosed {
                tau1_level0: 0.5 * t,
                tau2_level0: tau2,
                tau1_level1: 0.5 * t,
            })
        }
        Level::Zero => {
            if om == 0.0 {
                return Ok(ConditionalClosed {
                    tau1_level0: t,
                    tau2_level0: 0.0,
                    tau1_level1: 0.0,
                });
            }
            if params.omega == 0.0
                && distance_to_multiple(omega_t - std::f64::consts::PI, 2.0 * std::f64::consts::PI)
                    < SINGULAR_GUARD
            {
                return Err(Error::SingularPostselection { omega_t });
            }
            let g2 = (params.omega / om) * (params.omega / om);
            let a = 1.0 - g2;
            let (s, c) = omega_t.sin_cos();
            let (sh, ch) = (0.5 * omega_t).sin_cos();
            let denom = (1.0 + g2) + a * c;
            let tau1_level0 =
                ((1.0 + 3.0 * g2) * t + a * ((2.0 / om) * s + t * c)) / (2.0 * denom);
            let tau2_level0 =
                (params.omega / om) * a * sh * (t * ch - (2.0 / om) * sh) / denom;
            let tau1_level1 = a * (t + t * c - (2.0 / om) * s) / (2.0 * denom);
            Ok(ConditionalClosed {
                tau1_level0,
                tau2_level0,
                tau1_level1,
            })
        }
    }
}
