//! Constrained minimization of W at fixed isoperimetric ratio.
//!
//! Both representations use the same scheme: a quasi-Newton direction with
//! its sigma component removed, a step, a Newton retraction back onto the
//! constraint and an Armijo test on W. Exported surfaces are rescaled to
//! unit area; W, sigma and the multiplier do not see the scale.

pub mod axisym_flow;
pub mod config;
pub mod grid;
pub mod lbfgs;
pub mod mesh_flow;
pub mod sweep;

use log::{debug, info};

use crate::axisym::profile::{ellipsoid_profile, metrics_unchecked};
use crate::axisym::{axisym_gradient, axisym_metrics, resample_conformal, revolve, AxisymProfile};
use crate::error::{Error, Result};
use crate::functionals::{metrics, Evaluation, MultiplierEstimate, SurfaceMetrics};
use crate::mesh::{ellipsoid, TriMesh, Vec3};

use axisym_flow::AxisymEngine;
use mesh_flow::MeshEngine;

pub use config::{FlowConfig, HistoryRow, Representation, Termination};
pub use grid::ConformalProfile;
pub use sweep::{sweep, SweepRecord, SweepResult, SWEEP_CSV_HEADER};

/// Seed ratio above which prolate seeds are used, below which two-lobe ones.
pub const PROLATE_SEED_THRESHOLD: f64 = 0.7;

/// A surface in either representation.
#[derive(Debug, Clone)]
pub enum Surface {
    Mesh(TriMesh),
    Axisym(AxisymProfile),
}

impl Surface {
    pub fn metrics(&self) -> Result<SurfaceMetrics> {
        match self {
            Surface::Mesh(m) => metrics(m),
            Surface::Axisym(p) => axisym_metrics(p),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Surface::Mesh(_) => Representation::Mesh,
            Surface::Axisym(_) => Representation::Axisym,
        }
    }

    /// Rescaled to unit area (meshes about their centroid).
    pub fn normalized(&self) -> Result<Surface> {
        let a = self.metrics()?.area;
        let s = a.sqrt().recip();
        Ok(match self {
            Surface::Mesh(m) => {
                let c = m.centroid();
                Surface::Mesh(m.map_vertices(|p| c + (p - c) * s))
            }
            Surface::Axisym(p) => Surface::Axisym(p.scaled(s)),
        })
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Axisym(Box<AxisymEngine>),
    Mesh(Box<MeshEngine>),
}

/// State of a running flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    /// Current surface at unit area.
    pub surface: Surface,
    pub iteration: usize,
    pub history: Vec<HistoryRow>,
    pub termination: Option<Termination>,
    /// W of the seed after projection onto the constraint.
    pub initial_willmore: f64,
    engine: Engine,
}

impl FlowState {
    /// Projects the seed onto the constraint and prepares the flow.
    pub fn new(seed: &Surface, config: &FlowConfig) -> Result<Self> {
        config.validate()?;
        let engine = match seed {
            Surface::Axisym(p) => {
                let grid = ConformalProfile::from_profile(p, config.grid_step, config.tail_length)?;
                Engine::Axisym(Box::new(AxisymEngine::with_homotopy(grid, config)?))
            }
            Surface::Mesh(m) => {
                let m = match MeshEngine::new(m.clone(), config) {
                    Err(Error::DegenerateMultiplier) => MeshEngine::new(ellipsoidal_perturbation(m), config)?,
                    other => other?,
                };
                Engine::Mesh(Box::new(m))
            }
        };
        Ok(Self::from_engine(engine, seed.clone()))
    }

    /// Continues from a tangent-angle grid (projected onto the target first).
    pub fn from_grid(grid: ConformalProfile, config: &FlowConfig) -> Result<Self> {
        config.validate()?;
        let engine = Engine::Axisym(Box::new(AxisymEngine::with_homotopy(grid, config)?));
        let surface = match &engine {
            Engine::Axisym(e) => Surface::Axisym(e.grid.to_profile()),
            Engine::Mesh(_) => unreachable!(),
        };
        Ok(Self::from_engine(engine, surface))
    }

    fn from_engine(engine: Engine, surface: Surface) -> Self {
        let mut s = FlowState {
            surface,
            iteration: 0,
            history: Vec::new(),
            termination: None,
            initial_willmore: f64::NAN,
            engine,
        };
        s.refresh_surface();
        s.initial_willmore = s.willmore();
        s
    }

    fn refresh_surface(&mut self) {
        self.surface = match &self.engine {
            Engine::Axisym(e) => Surface::Axisym(e.grid.to_profile()),
            Engine::Mesh(e) => {
                let m = &e.mesh;
                let c = m.centroid();
                let s = e.eval.metrics.area.sqrt().recip();
                Surface::Mesh(m.map_vertices(|p| (p - c) * s))
            }
        };
    }

    pub fn willmore(&self) -> f64 {
        match &self.engine {
            Engine::Axisym(e) => e.eval.willmore,
            Engine::Mesh(e) => e.eval.metrics.willmore,
        }
    }

    pub fn sigma(&self) -> f64 {
        match &self.engine {
            Engine::Axisym(e) => e.eval.sigma,
            Engine::Mesh(e) => e.eval.metrics.sigma,
        }
    }

    /// Current multiplier.
    pub fn lambda(&self) -> f64 {
        match &self.engine {
            Engine::Axisym(e) => e.lambda,
            Engine::Mesh(e) => e.lambda,
        }
    }

    /// Relative constrained-gradient norm in the flow's own metric.
    pub fn residual(&self) -> f64 {
        match &self.engine {
            Engine::Axisym(e) => e.residual,
            Engine::Mesh(e) => e.residual,
        }
    }

    /// Full metrics of the current (unit-area) surface.
    pub fn metrics(&self) -> Result<SurfaceMetrics> {
        match &self.surface {
            Surface::Axisym(p) => Ok(metrics_unchecked(p)?.0),
            Surface::Mesh(m) => metrics(m),
        }
    }

    /// Multiplier report in the common format. For profiles, Lambda and the
    /// residual come from the flow metric on the tangent-angle grid.
    pub fn multiplier(&self) -> MultiplierEstimate {
        match &self.engine {
            Engine::Axisym(e) => MultiplierEstimate {
                lambda: Some(e.lambda),
                residual: e.residual,
                relative_residual: e.residual,
                conditioning: crate::optimizer::lbfgs::dot(&e.eval.grad_sigma, &e.eval.grad_sigma),
                degenerate: false,
            },
            Engine::Mesh(e) => Evaluation::new(&e.mesh)
                .map(|v| v.multiplier())
                .unwrap_or(MultiplierEstimate {
                    lambda: None,
                    residual: f64::NAN,
                    relative_residual: f64::NAN,
                    conditioning: 0.0,
                    degenerate: true,
                }),
        }
    }

    /// Conformal tangent-angle grid of a profile flow.
    pub fn grid(&self) -> Option<&ConformalProfile> {
        match &self.engine {
            Engine::Axisym(e) => Some(&e.grid),
            Engine::Mesh(_) => None,
        }
    }
}

fn ellipsoidal_perturbation(m: &TriMesh) -> TriMesh {
    let c = m.centroid();
    m.map_vertices(|p| {
        let d = p - c;
        c + Vec3::new(d.x, d.y, 1.2 * d.z)
    })
}

/// One accepted step (or a termination). A terminated state is returned unchanged.
pub fn flow_step(mut state: FlowState, config: &FlowConfig) -> Result<FlowState> {
    take_step(&mut state, config)?;
    Ok(state)
}

fn take_step(state: &mut FlowState, config: &FlowConfig) -> Result<()> {
    if state.termination.is_some() {
        return Ok(());
    }
    let it = state.iteration;
    let out = match &mut state.engine {
        Engine::Axisym(e) => e.step(config, it)?,
        Engine::Mesh(e) => e.step(config, it)?,
    };
    match out {
        Ok(row) => {
            state.history.push(row);
            state.iteration += 1;
            if state.iteration >= config.max_iterations {
                state.termination = Some(Termination::MaxIterations);
            }
            state.refresh_surface();
        }
        Err(t) => state.termination = Some(t),
    }
    Ok(())
}

/// Runs the flow from `seed` to termination.
pub fn minimize(seed: &Surface, config: &FlowConfig) -> Result<FlowState> {
    let mut state = FlowState::new(seed, config)?;
    info!(
        "flow start: sigma {} W {} ({:?})",
        config.sigma_target,
        state.willmore(),
        seed.representation()
    );
    run(&mut state, config)?;
    Ok(state)
}

pub(crate) fn run(state: &mut FlowState, config: &FlowConfig) -> Result<()> {
    while state.termination.is_none() {
        take_step(state, config)?;
        if state.iteration.is_multiple_of(500) {
            debug!(
                "iteration {} W {} residual {:.3e}",
                state.iteration,
                state.willmore(),
                state.residual()
            );
        }
    }
    info!(
        "flow end: {} after {} steps, W {} residual {:.3e}",
        state.termination.unwrap().as_str(),
        state.iteration,
        state.willmore(),
        state.residual()
    );
    Ok(())
}

/// Retraction onto sigma = target followed by rescaling to unit area.
/// Round spheres, where the constraint gradient vanishes, are first
/// replaced by a fixed ellipsoidal perturbation (axis ratio 1.2).
pub fn project_constraint(surface: &Surface, target: f64, tol: f64) -> Result<Surface> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!("sigma target must lie in (0,1), got {target}")));
    }
    let m = surface.metrics()?;
    if (m.sigma - target).abs() < tol {
        return surface.normalized();
    }
    match surface {
        Surface::Mesh(mesh) => {
            let (out, _) = match mesh_flow::project_mesh(mesh, target, tol) {
                Err(Error::DegenerateMultiplier) => {
                    mesh_flow::project_mesh(&ellipsoidal_perturbation(mesh), target, tol)?
                }
                other => other?,
            };
            Surface::Mesh(out).normalized()
        }
        Surface::Axisym(p) => {
            let p = if axisym_gradient(p)?.multiplier.degenerate {
                let n = p.len() - 1;
                let scale = m.area.sqrt() / (4.0 * std::f64::consts::PI).sqrt();
                ellipsoid_profile(scale, 1.2 * scale, n)
            } else {
                p.clone()
            };
            Surface::Axisym(project_profile(&p, target, tol)?).normalized()
        }
    }
}

/// Newton on sigma along the position gradient of sigma (poles move along
/// the axis only).
fn project_profile(p: &AxisymProfile, target: f64, tol: f64) -> Result<AxisymProfile> {
    use crate::axisym::profile::{profile_area, profile_gradients, profile_volume};
    use crate::functionals::isoperimetric_ratio;
    let mut cur = p.clone();
    for _ in 0..50 {
        let s = &cur.samples;
        let (a, v) = (profile_area(s), profile_volume(s));
        let sigma = isoperimetric_ratio(a, v);
        if (sigma - target).abs() < tol {
            cur.validate()?;
            return Ok(cur);
        }
        let g = profile_gradients(s);
        let n = s.len();
        let dir: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let d = [
                    sigma * (g.dv[i][0] / v - 1.5 * g.da[i][0] / a),
                    sigma * (g.dv[i][1] / v - 1.5 * g.da[i][1] / a),
                ];
                if i == 0 || i == n - 1 {
                    [0.0, d[1]]
                } else {
                    d
                }
            })
            .collect();
        let slope: f64 = dir.iter().map(|d| d[0] * d[0] + d[1] * d[1]).sum();
        if !(slope > 0.0) {
            break;
        }
        let tau = (target - sigma) / slope;
        let dmax = dir.iter().map(|d| d[0].abs().max(d[1].abs())).fold(0.0, f64::max);
        let cap = 0.05 * a.sqrt() / dmax.max(1e-300);
        let tau = tau.clamp(-cap, cap);
        cur = AxisymProfile::new(
            s.iter()
                .zip(&dir)
                .map(|(q, d)| [q[0] + tau * d[0], q[1] + tau * d[1]])
                .collect(),
        );
    }
    Err(Error::Projection(format!(
        "Newton on sigma did not reach {target} in 50 iterations"
    )))
}

/// Prolate ellipsoid profile with the given ratio (unit area).
pub fn prolate_seed(sigma: f64, samples: usize) -> Result<AxisymProfile> {
    let at = |c: f64| axisym_metrics(&ellipsoid_profile(1.0, c, samples)).map(|m| m.sigma);
    let (mut lo, mut hi) = (1.0, 1.0);
    while at(hi)? > sigma {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Projection(format!("no ellipsoid reaches sigma {sigma}")));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = ellipsoid_profile(1.0, 0.5 * (lo + hi), samples);
    let a = axisym_metrics(&p)?.area;
    Ok(p.scaled(a.sqrt().recip()))
}

/// Default seed: prolate ellipsoid at or above the regime boundary, the
/// analytic two-lobe profile below it. Mesh seeds are revolved profiles
/// (ellipsoids from an icosphere).
pub fn default_seed(config: &FlowConfig) -> Result<Surface> {
    let sigma = config.sigma_target;
    let profile = if sigma >= PROLATE_SEED_THRESHOLD {
        prolate_seed(sigma, 2000)?
    } else {
        grid::two_lobe_seed(sigma, config.grid_step, config.tail_length)?.to_profile()
    };
    Ok(match config.representation {
        Representation::Axisym => Surface::Axisym(profile),
        Representation::Mesh => {
            if sigma >= PROLATE_SEED_THRESHOLD {
                let p = &profile.samples;
                let c = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max)
                    - p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
                let a = 2.0 * p.iter().map(|q| q[0]).fold(0.0, f64::max);
                Surface::Mesh(ellipsoid(config.mesh_level as u32, 0.5 * a, 0.5 * a, 0.5 * c)?)
            } else {
                let angular = 10 * (1 << config.mesh_level);
                let q = resample_conformal(&profile, angular, 0.05)?;
                Surface::Mesh(revolve(&q, angular)?)
            }
        }
    })
}
