//! Scenario documents: JSON with nested maps and lists.
//!
//! Complex numbers are two-element arrays `[re, im]`; matrices are
//! row-major nested lists. The system block is either the `two-level`
//! preset (`omega`, `v`) or an explicit Hamiltonian/initial/observable/
//! finals description. See `scenarios/` at the repository root for worked
//! examples.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::composite::DetectorSpec;
use crate::error::{Error, Result};
use crate::linalg::{Operator, State};
use crate::model::{validate_system, ModelSpec, SystemModel};
use crate::times::Tolerances;
use crate::twolevel::build_two_level;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: Option<String>,
    system: SystemDoc,
    #[serde(default)]
    detector: Option<DetectorDoc>,
    #[serde(default)]
    time: Option<TimeDoc>,
    #[serde(default)]
    tolerances: Option<ToleranceDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    omega: Option<f64>,
    #[serde(default)]
    v: Option<[f64; 2]>,
    #[serde(default)]
    hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    initial: Option<InitialDoc>,
    #[serde(default)]
    observable: Option<ObservableDoc>,
    #[serde(default)]
    finals: Option<FinalsDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    #[serde(default)]
    pure: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    density: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableDoc {
    values: Vec<f64>,
    projectors: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FinalsDoc {
    labels: Vec<String>,
    projectors: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    complete: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorDoc {
    #[serde(rename = "Q")]
    q_extent: f64,
    #[serde(rename = "N")]
    grid_points: usize,
    sigma: f64,
    #[serde(default)]
    chirp: f64,
    #[serde(default)]
    q0: f64,
    #[serde(default)]
    p0: f64,
    gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeDoc {
    t_max: f64,
    samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceDoc {
    #[serde(default)]
    p_min: Option<f64>,
    #[serde(default)]
    definiteness_threshold: Option<f64>,
    #[serde(default)]
    quadrature_n: Option<usize>,
}

/// A fully validated scenario, ready for the commands.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    pub detector: Option<DetectorSpec>,
    pub t_max: f64,
    pub samples: usize,
    pub tolerances: Tolerances,
    pub quadrature_steps: Option<usize>,
}

fn to_complex(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

fn to_operator(rows: &[Vec<[f64; 2]>], path: &str) -> Result<Operator> {
    let converted: Vec<Vec<C64>> = rows
        .iter()
        .map(|row| row.iter().map(|&z| to_complex(z)).collect())
        .collect();
    Operator::from_rows(&converted).map_err(|e| Error::validation(path, e.to_string()))
}

fn build_explicit(doc: SystemDoc) -> Result<SystemModel> {
    let hamiltonian = to_operator(
        doc.hamiltonian
            .as_ref()
            .ok_or_else(|| Error::validation("system.hamiltonian", "missing field"))?,
        "system.hamiltonian",
    )?;
    let initial_doc = doc
        .initial
        .ok_or_else(|| Error::validation("system.initial", "missing field"))?;
    let initial = match (initial_doc.pure, initial_doc.density) {
        (Some(amps), None) => State::pure(amps.into_iter().map(to_complex).collect())
            .map_err(|e| Error::validation("system.initial.pure", e.to_string()))?,
        (None, Some(rows)) => {
            let op = to_operator(&rows, "system.initial.density")?;
            State::density(op)
                .map_err(|e| Error::validation("system.initial.density", e.to_string()))?
        }
        _ => {
            return Err(Error::validation(
                "system.initial",
                "exactly one of `pure` or `density` is required",
            ))
        }
    };
    let observable = doc
        .observable
        .ok_or_else(|| Error::validation("system.observable", "missing field"))?;
    let finals = doc
        .finals
        .ok_or_else(|| Error::validation("system.finals", "missing field"))?;

    let observable_projectors = observable
        .projectors
        .iter()
        .enumerate()
        .map(|(k, rows)| to_operator(rows, &format!("system.observable.projectors[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let final_projectors = finals
        .projectors
        .iter()
        .enumerate()
        .map(|(k, rows)| to_operator(rows, &format!("system.finals.projectors[{k}]")))
        .collect::<Result<Vec<_>>>()?;

    validate_system(ModelSpec {
        hamiltonian,
        initial,
        observable_values: observable.values,
        observable_projectors,
        final_labels: finals.labels,
        final_projectors,
        finals_complete: finals.complete,
    })
}

fn build_system(doc: SystemDoc) -> Result<SystemModel> {
    match doc.preset.as_deref() {
        Some("two-level") => {
            let omega = doc
                .omega
                .ok_or_else(|| Error::validation("system.omega", "missing field"))?;
            let v = doc
                .v
                .ok_or_else(|| Error::validation("system.v", "missing field"))?;
            if !omega.is_finite() || !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::validation("system", "non-finite parameter"));
            }
            Ok(build_two_level(omega, to_complex(v)))
        }
        Some(other) => Err(Error::validation(
            "system.preset",
            format!("unknown preset `{other}` (expected `two-level`)"),
        )),
        None => build_explicit(doc),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;

    let model = build_system(doc.system)?;

    let (t_max, samples) = match doc.time {
        Some(time) => (time.t_max, time.samples),
        None => (10.0, 1000),
    };
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::validation("time.t_max", "must be positive"));
    }
    if samples < 2 {
        return Err(Error::validation("time.samples", "must be at least 2"));
    }

    let detector = doc.detector.map(|d| DetectorSpec {
        q_extent: d.q_extent,
        grid_points: d.grid_points,
        sigma: d.sigma,
        chirp: d.chirp,
        q0: d.q0,
        p0: d.p0,
        gamma: d.gamma,
    });

    let mut tolerances = Tolerances::default();
    let mut quadrature_steps = None;
    if let Some(t) = doc.tolerances {
        if let Some(p_min) = t.p_min {
            if !p_min.is_finite() || p_min <= 0.0 {
                return Err(Error::validation("tolerances.p_min", "must be positive"));
            }
            tolerances.p_min = p_min;
        }
        if let Some(thr) = t.definiteness_threshold {
            if !thr.is_finite() || thr <= 0.0 {
                return Err(Error::validation(
                    "tolerances.definiteness_threshold",
                    "must be positive",
                ));
            }
            tolerances.definiteness_threshold = thr;
        }
        quadrature_steps = t.quadrature_n;
    }

    Ok(Scenario {
        name: doc.name.unwrap_or_else(|| "unnamed".into()),
        model,
        detector,
        t_max,
        samples,
        tolerances,
        quadrature_steps,
    })
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PRESET: &str = r#"{
        "name": "demo",
        "system": { "preset": "two-level", "omega": 2.0, "v": [1.7320508, 0.0] },
        "time": { "t_max": 10.0, "samples": 1000 }
    }"#;

    #[test]
    fn preset_parses_to_expected_splitting() {
        let sc = parse_scenario(PRESET).unwrap();
        assert_eq!(sc.samples, 1000);
        // Omega = 4 within the precision of the truncated sqrt(3)
        let eigs = sc.model.spectrum().eigenvalues();
        assert_abs_diff_eq!(eigs[1] - eigs[0], 4.0, epsilon = 1e-6);
    }

    #[test]
    fn missing_initial_names_the_path() {
        let text = r#"{
            "system": {
                "hamiltonian": [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]],
                "observable": {
                    "values": [0.0, 1.0],
                    "projectors": [
                        [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
                        [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]
                    ]
                },
                "finals": {
                    "labels": ["a", "b"],
                    "projectors": [
                        [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
                        [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]
                    ],
                    "complete": true
                }
            }
        }"#;
        let err = parse_scenario(text).unwrap_err();
        match err {
            Error::Validation { path, .. } => assert_eq!(path, "system.initial"),
            other => panic!("expected Validation, got {other:?}"),
        }
    }

    #[test]
    fn single_sample_is_rejected() {
        let text = r#"{
            "system": { "preset": "two-level", "omega": 2.0, "v": [1.7320508, 0.0] },
            "time": { "t_max": 10.0, "samples": 1 }
        }"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, Error::Validation { ref path, .. } if path == "time.samples"));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            parse_scenario("{ not json"),
            Err(Error::Parse(_))
        ));
        // unknown fields are rejected too
        let text = r#"{
            "system": { "preset": "two-level", "omega": 2.0, "v": [1.0, 0.0] },
            "typo_field": 1
        }"#;
        assert!(matches!(parse_scenario(text), Err(Error::Parse(_))));
    }

    #[test]
    fn explicit_system_round_trips() {
        let text = r#"{
            "name": "three-level",
            "system": {
                "hamiltonian": [
                    [[1.0,0.0],[0.5,0.0],[0.0,0.0]],
                    [[0.5,0.0],[0.0,0.0],[0.3,0.0]],
                    [[0.0,0.0],[0.3,0.0],[-1.0,0.0]]
                ],
                "initial": { "pure": [[1.0,0.0],[0.0,0.0],[0.0,0.0]] },
                "observable": {
                    "values": [0.0, 1.0],
                    "projectors": [
                        [[[1.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[0.0,0.0]]],
                        [[[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[1.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[1.0,0.0]]]
                    ]
                },
                "finals": {
                    "labels": ["ground", "rest"],
                    "projectors": [
                        [[[1.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[0.0,0.0]]],
                        [[[0.0,0.0],[0.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[1.0,0.0],[0.0,0.0]],
                         [[0.0,0.0],[0.0,0.0],[1.0,0.0]]]
                    ],
                    "complete": true
                }
            },
            "detector": { "Q": 16.0, "N": 512, "sigma": 1.0, "gamma": 0.001 },
            "tolerances": { "p_min": 1e-9 }
        }"#;
        let sc = parse_scenario(text).unwrap();
        assert_eq!(sc.model.dim(), 3);
        assert_eq!(sc.model.observable().len(), 2);
        assert!(sc.detector.is_some());
        assert_eq!(sc.tolerances.p_min, 1e-9);
        // rank-2 projector supported
        assert_abs_diff_eq!(
            sc.model.observable().projector(1).unwrap().trace().re,
            2.0,
            epsilon = 1e-12
        );
    }
}
