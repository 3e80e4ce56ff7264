//! Continuation sweeps over decreasing ratios.
//!
//! Each stage starts from the previous stage's minimizer, moved onto the new
//! constraint by the homotopy projection. A failed stage leaves a marked
//! record and the next stage starts again from the default seed.

use log::warn;
use serde::Serialize;

use crate::axisym::{classify_shape, isothermal_coordinate, AxisymProfile};
use crate::blowup::{analyze_neck, NeckReport, ScalingPoint};
use crate::error::{Error, Result};
use crate::optimizer::{default_seed, run, FlowConfig, FlowState, Representation, Surface};

pub const SWEEP_CSV_HEADER: &str =
    "sigma,willmore,totalA2,neck_lambda,conf_t,conf_r,multiplier,multiplier_over_lambda,shape";

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRecord {
    pub sigma: f64,
    pub willmore: f64,
    pub total_a2: f64,
    pub neck_lambda: Option<f64>,
    pub conf_t: Option<f64>,
    pub conf_r: Option<f64>,
    pub multiplier: Option<f64>,
    pub multiplier_over_lambda: Option<f64>,
    /// Shape label, or "failed".
    pub shape: String,
    /// "default seed", "continued from sigma = ..." or "reseeded after failure".
    pub seeded_from: String,
    pub termination: Option<String>,
    pub iterations: usize,
    pub residual: f64,
    pub catenoid_residual: Option<f64>,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn csv_row(&self) -> String {
        let f = crate::io::fmt_f64;
        let o = |v: Option<f64>| v.map(f).unwrap_or_else(|| "nan".into());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            f(self.sigma),
            f(self.willmore),
            f(self.total_a2),
            o(self.neck_lambda),
            o(self.conf_t),
            o(self.conf_r),
            o(self.multiplier),
            o(self.multiplier_over_lambda),
            self.shape
        )
    }

    pub fn scaling_point(&self) -> Option<ScalingPoint> {
        Some(ScalingPoint {
            sigma: self.sigma,
            lambda: self.neck_lambda?,
            t: self.conf_t?,
            r: self.conf_r?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Final flow state per stage; None for failed stages.
    pub states: Vec<Option<FlowState>>,
    pub records: Vec<SweepRecord>,
    pub necks: Vec<Option<NeckReport>>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn scaling_points(&self) -> Vec<ScalingPoint> {
        self.records
            .iter()
            .filter(|r| !r.failed())
            .filter_map(|r| r.scaling_point())
            .collect()
    }

    /// (sigma, Lambda, lambda_neck) for the multiplier series.
    pub fn multiplier_series(&self) -> Vec<(f64, Option<f64>, f64)> {
        self.records
            .iter()
            .filter(|r| !r.failed())
            .filter_map(|r| Some((r.sigma, r.multiplier, r.neck_lambda?)))
            .collect()
    }
}

/// Neck report of a profile, or None without a neck (or when the scales are
/// not separated enough to cut it out).
pub fn profile_neck(profile: &AxisymProfile) -> Option<NeckReport> {
    let iso = isothermal_coordinate(profile).ok()?;
    match analyze_neck(profile, &iso) {
        Ok((r, _)) => Some(r),
        Err(Error::ScalesNotSeparated(_)) => crate::blowup::detect_neck(profile, &iso).ok(),
        Err(_) => None,
    }
}

fn record(state: &FlowState, sigma: f64, seeded_from: String) -> Result<(SweepRecord, Option<NeckReport>)> {
    let m = state.metrics()?;
    let lambda = state.multiplier().lambda;
    let (neck, shape) = match &state.surface {
        Surface::Axisym(p) => (profile_neck(p), classify_shape(p)?.label.as_str().to_string()),
        Surface::Mesh(_) => (None, "unclassified".to_string()),
    };
    let lam_neck = neck.as_ref().map(|r| r.lambda);
    Ok((
        SweepRecord {
            sigma,
            willmore: m.willmore,
            total_a2: m.total_a2,
            neck_lambda: lam_neck,
            conf_t: neck.as_ref().map(|r| r.t),
            conf_r: neck.as_ref().map(|r| r.r),
            multiplier: lambda,
            multiplier_over_lambda: match (lambda, lam_neck) {
                (Some(a), Some(b)) => Some(a / b),
                _ => None,
            },
            shape,
            seeded_from,
            termination: state.termination.map(|t| t.as_str().to_string()),
            iterations: state.iteration,
            residual: state.residual(),
            catenoid_residual: neck.as_ref().and_then(|r| r.fit.as_ref()).map(|f| f.residual),
            failure: None,
        },
        neck,
    ))
}

fn failed_record(sigma: f64, seeded_from: String, e: &Error) -> SweepRecord {
    SweepRecord {
        sigma,
        willmore: f64::NAN,
        total_a2: f64::NAN,
        neck_lambda: None,
        conf_t: None,
        conf_r: None,
        multiplier: None,
        multiplier_over_lambda: None,
        shape: "failed".into(),
        seeded_from,
        termination: None,
        iterations: 0,
        residual: f64::NAN,
        catenoid_residual: None,
        failure: Some(e.to_string()),
    }
}

/// Runs `minimize` at each ratio in turn, continuing from the previous
/// stage. `template.sigma_target` is ignored.
pub fn sweep(sigmas: &[f64], template: &FlowConfig) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(Error::Config("empty sigma list".into()));
    }
    for w in sigmas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config(format!(
                "sigmas must be strictly decreasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    let mut out = SweepResult {
        states: Vec::new(),
        records: Vec::new(),
        necks: Vec::new(),
    };
    let mut prev: Option<(f64, FlowState)> = None;
    let mut after_failure = false;
    for &sigma in sigmas {
        let mut config = template.clone();
        config.sigma_target = sigma;
        config.validate()?;
        let (label, attempt) = match &prev {
            Some((ps, state)) => (format!("continued from sigma = {ps}"), continue_from(state, &config)),
            None => {
                let label = if after_failure {
                    "reseeded after failure"
                } else {
                    "default seed"
                };
                (label.to_string(), fresh(&config))
            }
        };
        match attempt.and_then(|s| record(&s, sigma, label.clone()).map(|r| (s, r))) {
            Ok((state, (rec, neck))) => {
                out.records.push(rec);
                out.necks.push(neck);
                out.states.push(Some(state.clone()));
                prev = Some((sigma, state));
                after_failure = false;
            }
            Err(e) => {
                warn!("sweep stage sigma = {sigma} failed: {e}");
                out.records.push(failed_record(sigma, label, &e));
                out.necks.push(None);
                out.states.push(None);
                prev = None;
                after_failure = true;
            }
        }
    }
    Ok(out)
}

fn fresh(config: &FlowConfig) -> Result<FlowState> {
    let seed = default_seed(config)?;
    let mut s = FlowState::new(&seed, config)?;
    run(&mut s, config)?;
    Ok(s)
}

fn continue_from(prev: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let mut s = match (prev.grid(), config.representation) {
        (Some(g), Representation::Axisym) if (g.h - config.grid_step).abs() < 1e-15 => {
            FlowState::from_grid(g.clone(), config)?
        }
        _ => FlowState::new(&prev.surface, config)?,
    };
    run(&mut s, config)?;
    Ok(s)
}
