//! Command implementations behind the CLI: time-series sweeps, the
//! definiteness check, coupling sweeps against the composite simulator, and
//! the figure presets.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::composite::{convergence_study, detector_moments, make_detector};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::series::TimeSeries;
use crate::times::{
    conditional_components, definiteness_check, dwell_time, interaction_picture,
    presence_probability,
};
use crate::twolevel::{conditional_closed, dwell_closed, Level, TwoLevelParams};

fn sample_grid(t_max: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect()
}

/// Unconditional sweep: dwell time and presence probability per observable
/// value over the scenario time grid.
pub fn cmd_dwell(sc: &Scenario) -> Result<TimeSeries> {
    let n_chi = sc.model.observable().len();
    let mut header = vec!["t".to_string()];
    header.extend((0..n_chi).map(|k| format!("tau{k}")));
    header.extend((0..n_chi).map(|k| format!("p{k}")));
    let mut series = TimeSeries::new(header);

    let rows: Vec<Result<Vec<Option<f64>>>> = sample_grid(sc.t_max, sc.samples)
        .par_iter()
        .map(|&t| {
            let mut row = Vec::with_capacity(1 + 2 * n_chi);
            row.push(Some(t));
            for k in 0..n_chi {
                row.push(Some(dwell_time(&sc.model, k, t)?));
            }
            for k in 0..n_chi {
                row.push(Some(presence_probability(&sc.model, k, t)?));
            }
            Ok(row)
        })
        .collect();
    for row in rows {
        series.push_row(row?);
    }
    Ok(series)
}

/// Postselected sweep for one final label: probability, both time
/// components, the combined conditional time (detector coefficient from the
/// scenario detector, or 0 without one), and the commutator norm, per
/// observable value. Rows whose postselection probability sits below the
/// floor keep `t`, the probability and the commutator norms, and leave the
/// time fields empty.
pub fn cmd_conditional(sc: &Scenario, final_label: &str) -> Result<TimeSeries> {
    let f_idx = sc.model.final_index(final_label)?;
    let n_chi = sc.model.observable().len();
    let coeff = match &sc.detector {
        Some(spec) => detector_moments(&make_detector(spec)?).coeff_c,
        None => 0.0,
    };

    let mut header = vec!["t".to_string(), "prob_f".to_string()];
    for k in 0..n_chi {
        header.push(format!("tau1_{k}"));
        header.push(format!("tau2_{k}"));
        header.push(format!("tau_full_{k}"));
        header.push(format!("comm_norm_{k}"));
    }
    let mut series = TimeSeries::new(header);

    let tol = sc.tolerances;
    let rows: Vec<Result<Vec<Option<f64>>>> = sample_grid(sc.t_max, sc.samples)
        .par_iter()
        .map(|&t| {
            let mut row = Vec::with_capacity(2 + 4 * n_chi);
            row.push(Some(t));
            let p_tilde = interaction_picture(&sc.model, sc.model.finals().projector(f_idx), t)?;
            let prob = crate::linalg::expectation(sc.model.initial(), &p_tilde)?.re;
            row.push(Some(prob));
            for k in 0..n_chi {
                if prob < tol.p_min {
                    let (norm, _) = definiteness_check(
                        &sc.model,
                        k,
                        final_label,
                        t,
                        tol.definiteness_threshold,
                    )?;
                    row.push(None);
                    row.push(None);
                    row.push(None);
                    row.push(Some(norm));
                } else {
                    let c = conditional_components(&sc.model, k, final_label, t, &tol)?;
                    row.push(Some(c.tau1));
                    row.push(Some(c.tau2));
                    row.push(Some(c.tau1 + coeff * c.tau2));
                    row.push(Some(c.commutator_norm));
                }
            }
            Ok(row)
        })
        .collect();
    for row in rows {
        series.push_row(row?);
    }
    Ok(series)
}

/// Outcome of the definiteness check.
#[derive(Debug, Clone, Copy)]
pub struct CheckReport {
    pub commutator_norm: f64,
    pub threshold: f64,
    pub definite: bool,
}

impl CheckReport {
    pub fn render(&self) -> String {
        format!(
            "commutator_norm={:.6e} threshold={:.6e} verdict={}",
            self.commutator_norm,
            self.threshold,
            if self.definite { "DEFINITE" } else { "INDEFINITE" }
        )
    }
}

/// Evaluates the definiteness condition for one `(chi, final, t)` triple.
pub fn cmd_check(
    sc: &Scenario,
    chi_index: usize,
    final_label: &str,
    t: f64,
) -> Result<CheckReport> {
    let threshold = sc.tolerances.definiteness_threshold;
    let (commutator_norm, definite) =
        definiteness_check(&sc.model, chi_index, final_label, t, threshold)?;
    Ok(CheckReport {
        commutator_norm,
        threshold,
        definite,
    })
}

/// Coupling sweep against the composite simulator. Needs the scenario's
/// detector block as the pointer template.
pub fn cmd_oracle(
    sc: &Scenario,
    final_label: Option<&str>,
    chi_index: usize,
    t: f64,
    gammas: &[f64],
) -> Result<TimeSeries> {
    let template = sc
        .detector
        .as_ref()
        .ok_or_else(|| Error::validation("detector", "the oracle command needs a detector block"))?;
    if gammas.is_empty() {
        return Err(Error::validation("gammas", "list must be nonempty"));
    }
    let rows = convergence_study(
        &sc.model,
        chi_index,
        final_label,
        t,
        gammas,
        template,
        &sc.tolerances,
    )?;
    let mut series = TimeSeries::new(vec![
        "gamma".into(),
        "tau_oracle".into(),
        "tau_formula".into(),
        "abs_error".into(),
    ]);
    for r in rows {
        series.push_row(vec![
            Some(r.gamma),
            Some(r.tau_oracle),
            Some(r.tau_formula),
            Some(r.abs_error),
        ]);
    }
    Ok(series)
}

/// Figure presets over `t` in `[0, 10]` with 1000 samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigPreset {
    /// Dwell times of both levels, the `t/2` line, and the two
    /// final-level-0 symmetrized conditional times.
    Fig1,
    /// The final-level-0 commutator component for level 0.
    Fig2,
}

impl FigPreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fig1" => Ok(FigPreset::Fig1),
            "fig2" => Ok(FigPreset::Fig2),
            other => Err(Error::validation(
                "preset",
                format!("unknown preset `{other}` (expected fig1 or fig2)"),
            )),
        }
    }
}

/// Reproduces the two-level example curves (`omega = 2`, `Omega = 4`) as a
/// deterministic table. The `t/2` line is emitted directly from its closed
/// value, so no postselection-singularity guard applies to it.
pub fn cmd_figures(preset: FigPreset) -> Result<TimeSeries> {
    let params = TwoLevelParams::new(2.0, C64::new(3.0f64.sqrt(), 0.0));
    let grid = sample_grid(10.0, 1000);
    match preset {
        FigPreset::Fig1 => {
            let mut series = TimeSeries::new(vec![
                "t".into(),
                "tau0".into(),
                "tau1".into(),
                "tau1_1_of_0".into(),
                "tau0_1_of_0".into(),
                "tau0_1_of_1".into(),
            ]);
            for t in grid {
                let (tau0, tau1) = dwell_closed(&params, t)?;
                let cond0 = conditional_closed(&params, t, Level::Zero)?;
                series.push_row(vec![
                    Some(t),
                    Some(tau0),
                    Some(tau1),
                    Some(0.5 * t),
                    Some(cond0.tau1_level0),
                    Some(cond0.tau1_level1),
                ]);
            }
            Ok(series)
        }
        FigPreset::Fig2 => {
            let mut series = TimeSeries::new(vec!["t".into(), "tau0_2_of_0".into()]);
            for t in grid {
                let cond0 = conditional_closed(&params, t, Level::Zero)?;
                series.push_row(vec![Some(t), Some(cond0.tau2_level0)]);
            }
            Ok(series)
        }
    }
}
