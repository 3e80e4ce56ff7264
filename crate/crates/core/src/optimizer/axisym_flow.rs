//! Projected quasi-Newton flow on the conformal tangent-angle grid.
//!
//! The base metric is the H^1 one: W is close to (pi/2) sum h (psi' + sin psi)^2
//! in these variables, whose Hessian is (pi/h) times the discrete Laplacian,
//! so the inverse Laplacian is the natural preconditioner. Each step
//! removes the sigma component of the quasi-Newton direction, moves, and
//! retracts onto the constraint by Newton along the preconditioned
//! gradient of sigma.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::optimizer::config::{FlowConfig, HistoryRow, Termination};
use crate::optimizer::grid::{ConformalProfile, GridEval};
use crate::optimizer::lbfgs::{dot, Lbfgs};

/// Solves the Dirichlet Laplacian tridiag(-1, 2, -1) on free nodes; pinned
/// entries of the result are zero.
pub fn laplacian_solve(free: &[bool], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    for i in 0..n {
        if !free[i] {
            c[i] = 0.0;
            d[i] = 0.0;
            continue;
        }
        let sub = if i > 0 && free[i - 1] { -1.0 } else { 0.0 };
        let sup = if i + 1 < n && free[i + 1] { -1.0 } else { 0.0 };
        let prev_c = if i > 0 { c[i - 1] } else { 0.0 };
        let prev_d = if i > 0 { d[i - 1] } else { 0.0 };
        let m = 2.0 - sub * prev_c;
        c[i] = sup / m;
        d[i] = (v[i] - sub * prev_d) / m;
    }
    for i in (0..n).rev() {
        if !free[i] {
            continue;
        }
        let next = if i + 1 < n && free[i + 1] { x[i + 1] } else { 0.0 };
        x[i] = d[i] - c[i] * next;
    }
    x
}

fn masked(free: &[bool], v: &[f64]) -> Vec<f64> {
    v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

/// Newton retraction of `grid` onto sigma = target along `dir`.
pub fn retract(grid: &ConformalProfile, dir: &[f64], target: f64, tol: f64) -> Result<(ConformalProfile, GridEval)> {
    let mut tau = 0.0;
    let mut g = grid.clone();
    for _ in 0..50 {
        g.psi = axpy(tau, dir, &grid.psi);
        let e = g.evaluate(false)?;
        let r = e.sigma - target;
        if r.abs() < tol {
            let e = g.evaluate(true)?;
            return Ok((g, e));
        }
        let slope = dot(&e.grad_sigma, dir);
        if !(slope.abs() > 0.0) {
            break;
        }
        let delta = -r / slope;
        // keep Newton steps modest in angle
        let cap = 0.5 / dir.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        tau += delta.clamp(-cap, cap);
    }
    Err(Error::Projection(format!(
        "Newton on sigma did not reach {target} in 50 iterations"
    )))
}

/// Engine state carried between steps.
#[derive(Debug, Clone)]
pub struct AxisymEngine {
    pub grid: ConformalProfile,
    pub eval: GridEval,
    pub memory: Lbfgs,
    pub segment: usize,
    pub since_regrid: usize,
    pub lambda: f64,
    pub residual: f64,
}

impl AxisymEngine {
    fn base(&self) -> impl Fn(&[f64]) -> Vec<f64> + use<> {
        let free = self.grid.free();
        move |v: &[f64]| laplacian_solve(&free, v)
    }

    /// Projects a grid onto the constraint and builds the engine.
    pub fn new(grid: ConformalProfile, config: &FlowConfig) -> Result<Self> {
        let (grid, eval) = project_grid(&grid, config.sigma_target, config.constraint_tolerance)?;
        let mut e = AxisymEngine {
            memory: Lbfgs::new(config.memory, grid.h / PI),
            grid,
            eval,
            segment: 0,
            since_regrid: 0,
            lambda: f64::NAN,
            residual: f64::INFINITY,
        };
        e.update_residual();
        Ok(e)
    }

    /// Like `new`, but walks sigma to the target in stages of at most 0.05
    /// with a short relaxation flow at each stage, so seeds far from the
    /// constraint set do not have to be projected in one jump.
    pub fn with_homotopy(grid: ConformalProfile, config: &FlowConfig) -> Result<Self> {
        let mut sigma = grid.evaluate(false)?.sigma;
        let mut grid = grid;
        let target = config.sigma_target;
        // stages bounded in both absolute and relative change of sigma
        let next = |s: f64| -> f64 {
            let stepped = s + (target - s).clamp(-0.05, 0.05);
            if target < s {
                stepped.max(s / 1.2)
            } else {
                stepped.min(s * 1.2)
            }
        };
        while (sigma - target).abs() > 0.05 || (sigma / target).ln().abs() > 1.2f64.ln() {
            sigma = next(sigma);
            let stage = FlowConfig {
                sigma_target: sigma,
                tolerance: 1e-3,
                ..config.clone()
            };
            let mut e = AxisymEngine::new(grid, &stage)?;
            for it in 0..200 {
                if e.step(&stage, it)?.is_err() {
                    break;
                }
            }
            grid = e.grid;
        }
        AxisymEngine::new(grid, config)
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let free = self.grid.free();
        (masked(&free, &self.eval.grad_w), masked(&free, &self.eval.grad_sigma))
    }

    /// Multiplier and relative constrained-gradient norm in the base metric.
    fn update_residual(&mut self) {
        let (g, a) = self.split();
        let base = self.base();
        let (bg, ba) = (base(&g), base(&a));
        let lambda = dot(&a, &bg) / dot(&a, &ba);
        let l = axpy(-lambda, &a, &g);
        let bl = base(&l);
        self.lambda = lambda;
        self.residual = (dot(&l, &bl) / dot(&g, &bg)).sqrt();
    }

    /// One accepted step, or the termination reason if no step can be taken.
    pub fn step(
        &mut self,
        config: &FlowConfig,
        iteration: usize,
    ) -> Result<std::result::Result<HistoryRow, Termination>> {
        if self.residual < config.tolerance {
            return Ok(Err(Termination::Converged));
        }
        self.maybe_regrid(config)?;
        let free = self.grid.free();
        let (g, a) = self.split();
        let hg = self.memory.apply(&g, self.base());
        let ha = self.memory.apply(&a, self.base());
        let lam = dot(&a, &hg) / dot(&a, &ha);
        let d: Vec<f64> = hg.iter().zip(&ha).map(|(x, y)| -(x - lam * y)).collect();
        let slope = dot(&g, &d);
        if !(slope < 0.0) {
            // the model lost positive definiteness; restart from the base metric
            self.memory.clear();
            self.memory.gamma = self.grid.h / PI;
            return self.step(config, iteration);
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut alpha = config.initial_step.min(0.3 / dmax);
        let w0 = self.eval.willmore;
        let base_dir = laplacian_solve(&free, &a);
        for _ in 0..=config.max_backtracks {
            if alpha < 1e-14 {
                break;
            }
            let mut trial = self.grid.clone();
            trial.psi = axpy(alpha, &d, &self.grid.psi);
            let accepted = match retract(&trial, &base_dir, config.sigma_target, config.constraint_tolerance) {
                Ok((t, e)) if e.willmore <= w0 + config.armijo * alpha * slope && t.to_profile().validate().is_ok() => {
                    Some((t, e))
                }
                _ => None,
            };
            if let Some((t, e)) = accepted {
                let old_l = axpy(-lam, &a, &g);
                let s: Vec<f64> = t.psi.iter().zip(&self.grid.psi).map(|(x, y)| x - y).collect();
                self.grid = t;
                self.eval = e;
                let (g1, a1) = self.split();
                let y: Vec<f64> = axpy(-lam, &a1, &g1).iter().zip(&old_l).map(|(x, y)| x - y).collect();
                let free = self.grid.free();
                self.memory.push(s, y, |v: &[f64]| laplacian_solve(&free, v));
                self.update_residual();
                self.since_regrid += 1;
                return Ok(Ok(HistoryRow {
                    iteration,
                    willmore: self.eval.willmore,
                    sigma: self.eval.sigma,
                    lambda: self.lambda,
                    step_size: alpha,
                    residual: self.residual,
                    segment: self.segment,
                }));
            }
            alpha *= config.backtrack_factor;
        }
        Ok(Err(Termination::Stalled))
    }

    fn maybe_regrid(&mut self, config: &FlowConfig) -> Result<()> {
        if self.since_regrid < 20 {
            return Ok(());
        }
        self.since_regrid = 0;
        let tail = self.grid.x(self.grid.n()) - self.grid.last_equator();
        if tail > config.tail_length - 1.5 && tail < config.tail_length + 3.0 {
            return Ok(());
        }
        let fresh = self.grid.regrid(config.tail_length);
        let (grid, eval) = project_grid(&fresh, config.sigma_target, config.constraint_tolerance)?;
        self.grid = grid;
        self.eval = eval;
        self.memory.clear();
        self.memory.gamma = self.grid.h / PI;
        self.segment += 1;
        self.update_residual();
        Ok(())
    }
}

/// Retraction of a grid profile onto sigma = target along the
/// preconditioned gradient of sigma.
pub fn project_grid(grid: &ConformalProfile, target: f64, tol: f64) -> Result<(ConformalProfile, GridEval)> {
    let free = grid.free();
    let e = grid.evaluate(false)?;
    let dir = laplacian_solve(&free, &masked(&free, &e.grad_sigma));
    let scale = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale < 1e-9 {
        return Err(Error::DegenerateMultiplier);
    }
    // far from the target, walk in a few damped stages
    let mut g = grid.clone();
    let mut sigma = e.sigma;
    for _ in 0..20 {
        if (sigma - target).abs() < 0.05 {
            break;
        }
        let mid = sigma + (target - sigma).clamp(-0.05, 0.05);
        let ev = g.evaluate(false)?;
        let dir = laplacian_solve(&free, &masked(&free, &ev.grad_sigma));
        let (ng, ne) = retract(&g, &dir, mid, 1e-6)?;
        g = ng;
        sigma = ne.sigma;
    }
    let ev = g.evaluate(false)?;
    let dir = laplacian_solve(&free, &masked(&free, &ev.grad_sigma));
    let out = retract(&g, &dir, target, tol)?;
    out.0.to_profile().validate()?;
    Ok(out)
}
