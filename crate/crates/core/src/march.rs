//! Discretized time marching: slab samplers, per-step training loops with
//! warm starts, and chained evaluation of the converged steps.
//!
//! A march splits the horizon into uniform slabs of width `dt`. Each step
//! trains until every monitored penalty mean falls below the threshold, then
//! the next step starts from the converged parameters (warm start). Locally
//! parameterized systems (Van der Pol, Lorenz, the hysteretic frame) carry
//! their slab-end state forward through the trial construction, so the
//! composite solution is continuous by construction; field problems keep a
//! single global network and accumulate sample points from earlier slabs.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diff::{Bundle, Expression, Graph, Nd, Workspace};
use crate::error::{CoreError, Result};
use crate::excitation::Excitation;
use crate::optim::{AdamState, DecaySchedule};
use crate::policy::{MlpPolicy, SigmaMode};
use crate::residuals::bouc_wen::{equation_of_motion, EomParams};
use crate::residuals::burgers::{burgers, burgers_trial, BurgersParams};
use crate::residuals::couette::{
    couette_bc_rows, couette_eq_reward, wall_weight_schedule, BoundarySegment, CouetteParams,
};
use crate::residuals::lorenz::{lorenz, LorenzParams};
use crate::residuals::neg_sum_squares;
use crate::residuals::schrodinger::{
    schrodinger_bc_rows, schrodinger_eq_reward, schrodinger_ic_rows, HALF_WIDTH,
};
use crate::residuals::van_der_pol::{van_der_pol, VdpParams};

/// Half-open fuzz for domain membership checks on query points.
const DOMAIN_FUZZ: f64 = 1e-9;

/// Per-iteration sample counts for the condition sets a problem monitors.
///
/// Fields a problem does not use are ignored; zero is only legal there.
#[derive(Clone, Copy, Debug)]
pub struct BatchSizes {
    /// Interior equation points drawn in the current slab (or interior of
    /// the steady domain).
    pub equation: usize,
    /// Equation points added per already-converged slab, capped by
    /// `MarchConfig::prev_cap`.
    pub prev_per_step: usize,
    /// Rim points: edge-matching pairs, or channel wall points.
    pub boundary: usize,
    /// Start-profile points, or channel inlet/outlet points.
    pub initial: usize,
}

impl BatchSizes {
    /// Sizes for a locally parameterized system (one equation set).
    pub fn local(equation: usize) -> Self {
        BatchSizes {
            equation,
            prev_per_step: 0,
            boundary: 0,
            initial: 0,
        }
    }
}

/// Knobs shared by every march.
#[derive(Clone, Debug)]
pub struct MarchConfig {
    /// Slab width in the equation's time unit.
    pub dt: f64,
    /// Number of slabs; the horizon is `n_steps * dt`.
    pub n_steps: usize,
    /// Convergence bar applied to every monitored penalty mean.
    pub threshold: f64,
    /// Gradient-step budget per slab before the step is flagged.
    pub max_iters_per_step: u64,
    /// Learning-rate schedule indexed by the global iteration counter.
    pub lr: DecaySchedule,
    /// Seed for the single sampling stream of the whole march.
    pub seed: u64,
    /// Per-iteration sample counts.
    pub batch: BatchSizes,
    /// Upper bound on accumulated previous-slab points per iteration.
    pub prev_cap: usize,
    /// Multiply the objective by the policy likelihood weight.
    pub weighting: bool,
    /// Reset Adam moments at the start of every slab.
    pub reset_adam_per_step: bool,
    /// Stop marching at the first slab that fails to converge.
    pub fail_fast: bool,
    /// Zero the wall-clock fields so reruns are byte-identical.
    pub deterministic: bool,
}

impl MarchConfig {
    /// Rejects non-positive widths, empty horizons, and undersized caps.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "slab width must be positive and finite, got {}",
                self.dt
            )));
        }
        if self.n_steps == 0 {
            return Err(CoreError::InvalidConfig(
                "n_steps must be at least 1".into(),
            ));
        }
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "convergence threshold must be positive and finite, got {}",
                self.threshold
            )));
        }
        if self.max_iters_per_step == 0 {
            return Err(CoreError::InvalidConfig(
                "max_iters_per_step must be at least 1".into(),
            ));
        }
        if self.batch.equation == 0 {
            return Err(CoreError::InvalidConfig(
                "equation batch size must be at least 1".into(),
            ));
        }
        if self.batch.prev_per_step > 0 && self.prev_cap < self.batch.prev_per_step {
            return Err(CoreError::InvalidConfig(format!(
                "prev_cap {} is below the per-step batch size {}",
                self.prev_cap, self.batch.prev_per_step
            )));
        }
        Ok(())
    }
}

/// One equation instance a march can solve.
#[derive(Clone, Debug)]
pub enum Problem {
    /// Forced Van der Pol oscillator, components (x, y).
    VanDerPol(VdpParams),
    /// Lorenz system from a given start, components (x, y, z).
    Lorenz {
        params: LorenzParams,
        start: [f64; 3],
    },
    /// Three-story hysteretic frame under ground excitation, components
    /// (x1..x3, v1..v3, z1..z3).
    EquationOfMotion {
        params: EomParams,
        excitation: Excitation,
    },
    /// Viscous Burgers on x in [-1, 1] with the hard-constraint trial.
    Burgers(BurgersParams),
    /// Focusing Schrodinger on x in [-5, 5], components (Re u, Im u).
    Schrodinger {
        /// Also match the spatial derivatives at the two edges.
        match_derivatives: bool,
    },
    /// Steady plane Couette-Poiseuille channel, components (u, v, p).
    Couette(CouetteParams),
}

impl Problem {
    /// Short identifier used in artifact headers and filenames.
    pub fn name(&self) -> &'static str {
        match self {
            Problem::VanDerPol(_) => "van_der_pol",
            Problem::Lorenz { .. } => "lorenz",
            Problem::EquationOfMotion { .. } => "equation_of_motion",
            Problem::Burgers(_) => "burgers",
            Problem::Schrodinger { .. } => "schrodinger",
            Problem::Couette(_) => "couette",
        }
    }

    /// True when each slab trains a local network in the slab time.
    pub fn is_time_local(&self) -> bool {
        matches!(
            self,
            Problem::VanDerPol(_) | Problem::Lorenz { .. } | Problem::EquationOfMotion { .. }
        )
    }

    /// True when there is no time axis at all.
    pub fn is_steady(&self) -> bool {
        matches!(self, Problem::Couette(_))
    }

    /// Names of the monitored penalty means, in logging order.
    pub fn component_names(&self) -> Vec<&'static str> {
        match self {
            Problem::Schrodinger { .. } => vec!["edge_matching", "initial_profile", "equation"],
            Problem::Couette(_) => {
                vec!["moving_wall", "fixed_wall", "inlet", "outlet", "equation"]
            }
            _ => vec!["equation"],
        }
    }

    /// Names of the solution components, in evaluator output order.
    pub fn solution_names(&self) -> Vec<&'static str> {
        match self {
            Problem::VanDerPol(_) => vec!["x", "y"],
            Problem::Lorenz { .. } => vec!["x", "y", "z"],
            Problem::EquationOfMotion { .. } => {
                vec!["x1", "x2", "x3", "v1", "v2", "v3", "z1", "z2", "z3"]
            }
            Problem::Burgers(_) => vec!["u"],
            Problem::Schrodinger { .. } => vec!["u_re", "u_im"],
            Problem::Couette(_) => vec!["u", "v", "p"],
        }
    }

    /// Slab-start state at t = 0 for locally parameterized systems.
    fn initial_state(&self) -> Vec<f64> {
        match self {
            Problem::VanDerPol(p) => vec![p.x0, p.y0],
            Problem::Lorenz { start, .. } => start.to_vec(),
            Problem::EquationOfMotion { .. } => vec![0.0; 9],
            _ => Vec::new(),
        }
    }

    /// (count, input_dim, output_dims) the policies must match.
    fn policy_shape(&self) -> (usize, usize, Vec<usize>) {
        match self {
            Problem::VanDerPol(_) => (1, 1, vec![2]),
            Problem::Lorenz { .. } => (1, 1, vec![3]),
            Problem::EquationOfMotion { .. } => (1, 1, vec![9]),
            Problem::Burgers(_) => (1, 2, vec![1]),
            Problem::Schrodinger { .. } => (1, 2, vec![2]),
            Problem::Couette(_) => (3, 2, vec![1, 1, 1]),
        }
    }

    fn validate_policies(&self, policies: &[MlpPolicy]) -> Result<()> {
        let (count, input_dim, output_dims) = self.policy_shape();
        if policies.len() != count {
            return Err(CoreError::InvalidConfig(format!(
                "{} expects {} policy network(s), got {}",
                self.name(),
                count,
                policies.len()
            )));
        }
        for (k, (pol, out)) in policies.iter().zip(&output_dims).enumerate() {
            if pol.input_dim() != input_dim || pol.output_dim() != *out {
                return Err(CoreError::InvalidConfig(format!(
                    "{} policy {} must map {} -> {}, got {} -> {}",
                    self.name(),
                    k,
                    input_dim,
                    out,
                    pol.input_dim(),
                    pol.output_dim()
                )));
            }
        }
        Ok(())
    }

    /// Spatial bounds of each non-time input, for query validation.
    fn spatial_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Problem::Burgers(_) => vec![(-1.0, 1.0)],
            Problem::Schrodinger { .. } => vec![(-HALF_WIDTH, HALF_WIDTH)],
            Problem::Couette(_) => vec![(0.0, 0.5), (-0.005, 0.005)],
            _ => Vec::new(),
        }
    }
}

/// Converged state of one slab.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based slab index.
    pub step: usize,
    /// Slab start time.
    pub t_start: f64,
    /// Slab end time.
    pub t_end: f64,
    /// Gradient steps spent on this slab.
    pub iterations: u64,
    /// Global iteration counter after this slab finished.
    pub global_iter_end: u64,
    /// Whether every monitored mean passed the threshold.
    pub converged: bool,
    /// Final monitored penalty means, in `component_names` order.
    pub components: Vec<f64>,
    /// Flat parameter vector at the end of the slab.
    pub params: Vec<f64>,
    /// Slab-start state for locally parameterized systems, else empty.
    pub prev: Vec<f64>,
    /// Wall-clock spent on this slab in milliseconds (0 when deterministic).
    pub wall_ms: f64,
}

/// One logged gradient step.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRow {
    /// Global iteration index the learning rate was computed at.
    pub global_iter: u64,
    /// 1-based slab index.
    pub step: usize,
    /// Learning rate applied by this gradient step.
    pub lr: f64,
    /// Monitored penalty means before the step, in `component_names` order.
    pub components: Vec<f64>,
}

/// Every gradient step of a march, with the component naming.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub component_names: Vec<String>,
    pub rows: Vec<IterRow>,
}

/// Everything a finished march produces.
pub struct MarchOutcome {
    pub records: Vec<StepRecord>,
    pub log: TrainLog,
    pub evaluator: ChainedEvaluator,
    /// True iff every recorded slab converged.
    pub all_converged: bool,
}

/// One monitored condition set: a compiled penalty expression plus its
/// per-iteration sampler and external weight schedule.
struct CondSet {
    expr: Expression,
    ws: Workspace,
    weight: DecaySchedule,
    /// Row-major batch of `expr.n_inputs()` columns for the given slab.
    sample: Box<dyn Fn(&mut ChaCha8Rng, usize) -> Vec<f64>>,
}

/// First-order bundle in the lone differentiation input of `g`.
fn d1_bundle(g: &Graph, u: &Nd, input: usize) -> Bundle<Nd> {
    Bundle::new(u.clone(), vec![g.diff(u, input)], vec![])
}

fn anchor(g: &Graph, total_params: usize) {
    // Touch the last slot so every compiled expression sees the full
    // parameter count even when trailing sigma slots are never read.
    let _ = g.param(total_params - 1);
}

fn param_bases(policies: &[MlpPolicy]) -> (Vec<usize>, usize) {
    let mut bases = Vec::with_capacity(policies.len());
    let mut total = 0;
    for p in policies {
        bases.push(total);
        total += p.params().len();
    }
    (bases, total)
}

/// Equation set for one slab of a locally parameterized system.
///
/// The slab-start state enters as graph constants, so these graphs are
/// rebuilt every step; the compiled expression reads the sampled local time
/// (and, for the excited frame, the ground acceleration) as inputs.
fn build_local_sets(
    problem: &Problem,
    policy: &MlpPolicy,
    total: usize,
    prev: &[f64],
    t_start: f64,
    config: &MarchConfig,
) -> Result<Vec<CondSet>> {
    let g = Graph::new();
    let tau = g.input(0);
    let mu = policy.emit(&g, &[tau.clone()], 0);
    let dt = config.dt;
    let n = config.batch.equation;

    let (penalty, sample): (Nd, Box<dyn Fn(&mut ChaCha8Rng, usize) -> Vec<f64>>) = match problem {
        Problem::VanDerPol(p) => {
            let xh = tau.clone() * mu[0].clone() + prev[0];
            let yh = tau.clone() * mu[1].clone() + prev[1];
            let xb = d1_bundle(&g, &xh, 0);
            let yb = d1_bundle(&g, &yh, 0);
            let t = tau.clone() + t_start;
            let penalty = -van_der_pol(&t, &xb, &yb, p);
            let sample = Box::new(move |rng: &mut ChaCha8Rng, _: usize| {
                (0..n).map(|_| dt - rng.gen_range(0.0..dt)).collect()
            }) as Box<_>;
            (penalty, sample)
        }
        Problem::Lorenz { params, .. } => {
            let xh = tau.clone() * mu[0].clone() + prev[0];
            let yh = tau.clone() * mu[1].clone() + prev[1];
            let zh = tau.clone() * mu[2].clone() + prev[2];
            let xb = d1_bundle(&g, &xh, 0);
            let yb = d1_bundle(&g, &yh, 0);
            let zb = d1_bundle(&g, &zh, 0);
            let penalty = -lorenz(&xb, &yb, &zb, params);
            let sample = Box::new(move |rng: &mut ChaCha8Rng, _: usize| {
                (0..n).map(|_| dt - rng.gen_range(0.0..dt)).collect()
            }) as Box<_>;
            (penalty, sample)
        }
        Problem::EquationOfMotion { params, excitation } => {
            let accel = g.input(1);
            // Displacements get a quadratic trial pinning both the position
            // and the velocity at the slab start; drifts are first order.
            let mut xs = Vec::with_capacity(3);
            let mut zs = Vec::with_capacity(3);
            for k in 0..3 {
                let xh = tau.sq() * mu[k].clone() + tau.clone() * prev[3 + k] + prev[k];
                let dx = g.diff(&xh, 0);
                let ddx = g.diff(&dx, 0);
                xs.push(Bundle::new(xh, vec![dx], vec![ddx]));
            }
            for k in 0..3 {
                let zh = tau.clone() * mu[6 + k].clone() + prev[6 + k];
                zs.push(d1_bundle(&g, &zh, 0));
            }
            let penalty = -equation_of_motion(&xs, &zs, &accel, params)?;
            let exc = excitation.clone();
            let sample = Box::new(move |rng: &mut ChaCha8Rng, _: usize| {
                let mut v = Vec::with_capacity(2 * n);
                for _ in 0..n {
                    let tau = dt - rng.gen_range(0.0..dt);
                    v.push(tau);
                    v.push(exc.at(t_start + tau).expect("span checked at march start"));
                }
                v
            }) as Box<_>;
            (penalty, sample)
        }
        _ => {
            return Err(CoreError::InvalidConfig(
                "field problems do not build local slab graphs".into(),
            ))
        }
    };

    anchor(&g, total);
    let expr = g.compile(&[penalty])?;
    let mut ws = Workspace::new();
    expr.bind(&mut ws);
    Ok(vec![CondSet {
        expr,
        ws,
        weight: DecaySchedule::constant(1.0),
        sample,
    }])
}

/// Condition sets for the global-network problems, compiled once per march.
fn build_field_sets(
    problem: &Problem,
    policies: &[MlpPolicy],
    bases: &[usize],
    total: usize,
    config: &MarchConfig,
) -> Result<Vec<CondSet>> {
    let dt = config.dt;
    let b = config.batch;
    let cap = config.prev_cap;
    let mut sets = Vec::new();

    let mut push = |penalty: Nd,
                    g: &Graph,
                    weight: DecaySchedule,
                    sample: Box<dyn Fn(&mut ChaCha8Rng, usize) -> Vec<f64>>|
     -> Result<()> {
        anchor(g, total);
        let expr = g.compile(&[penalty])?;
        let mut ws = Workspace::new();
        expr.bind(&mut ws);
        sets.push(CondSet {
            expr,
            ws,
            weight,
            sample,
        });
        Ok(())
    };

    match problem {
        Problem::Burgers(p) => {
            let g = Graph::new();
            let x = g.input(0);
            let t = g.input(1);
            let f = &policies[0].emit(&g, &[x.clone(), t.clone()], 0)[0];
            let u = burgers_trial(&x, &t, f);
            let ux = g.diff(&u, 0);
            let ub = Bundle::new(
                u.clone(),
                vec![ux.clone(), g.diff(&u, 1)],
                vec![g.diff(&ux, 0)],
            );
            let penalty = -burgers(&ub, p);
            push(
                penalty,
                &g,
                DecaySchedule::constant(1.0),
                slab_sampler(b.equation, b.prev_per_step, cap, dt, move |rng, v, t| {
                    v.push(rng.gen_range(-1.0..1.0));
                    v.push(t);
                }),
            )?;
        }
        Problem::Schrodinger { match_derivatives } => {
            // Edge matching at x = +/- 5.
            {
                let g = Graph::new();
                let xm = g.input(0);
                let xp = g.input(1);
                let t = g.input(2);
                let om = policies[0].emit(&g, &[xm.clone(), t.clone()], 0);
                let op = policies[0].emit(&g, &[xp.clone(), t.clone()], 0);
                let bm: Vec<Bundle<Nd>> = om.iter().map(|u| d1_bundle(&g, u, 0)).collect();
                let bp: Vec<Bundle<Nd>> = op.iter().map(|u| d1_bundle(&g, u, 1)).collect();
                let rows =
                    schrodinger_bc_rows((&bm[0], &bm[1]), (&bp[0], &bp[1]), *match_derivatives);
                let penalty = -neg_sum_squares(&xm, &rows);
                let nb = b.boundary;
                push(
                    penalty,
                    &g,
                    DecaySchedule::constant(1.0),
                    Box::new(move |rng, step| {
                        let t1 = step as f64 * dt;
                        let mut v = Vec::with_capacity(3 * nb);
                        for _ in 0..nb {
                            v.push(-HALF_WIDTH);
                            v.push(HALF_WIDTH);
                            v.push(t1 - rng.gen_range(0.0..t1));
                        }
                        v
                    }),
                )?;
            }
            // Start profile at t = 0.
            {
                let g = Graph::new();
                let x = g.input(0);
                let zero = g.constant(0.0);
                let o = policies[0].emit(&g, &[x.clone(), zero], 0);
                let (ra, rb) = schrodinger_ic_rows(&x, &o[0], &o[1]);
                let penalty = -neg_sum_squares(&x, &[ra, rb]);
                let ni = b.initial;
                push(
                    penalty,
                    &g,
                    DecaySchedule::constant(1.0),
                    Box::new(move |rng, _| {
                        (0..ni)
                            .map(|_| rng.gen_range(-HALF_WIDTH..HALF_WIDTH))
                            .collect()
                    }),
                )?;
            }
            // Field equation.
            {
                let g = Graph::new();
                let x = g.input(0);
                let t = g.input(1);
                let o = policies[0].emit(&g, &[x.clone(), t.clone()], 0);
                let full = |u: &Nd| {
                    let ux = g.diff(u, 0);
                    Bundle::new(
                        u.clone(),
                        vec![ux.clone(), g.diff(u, 1)],
                        vec![g.diff(&ux, 0)],
                    )
                };
                let penalty = -schrodinger_eq_reward(&full(&o[0]), &full(&o[1]));
                push(
                    penalty,
                    &g,
                    DecaySchedule::constant(1.0),
                    slab_sampler(b.equation, b.prev_per_step, cap, dt, move |rng, v, t| {
                        v.push(rng.gen_range(-HALF_WIDTH..HALF_WIDTH));
                        v.push(t);
                    }),
                )?;
            }
        }
        Problem::Couette(p) => {
            let emit3 = |g: &Graph, pt: &[Nd; 2]| -> [Nd; 3] {
                let u = policies[0].emit(g, pt, bases[0]);
                let v = policies[1].emit(g, pt, bases[1]);
                let q = policies[2].emit(g, pt, bases[2]);
                [u[0].clone(), v[0].clone(), q[0].clone()]
            };
            let (x_lo, x_hi) = (0.0, 0.5);
            let (y_lo, y_hi) = (-0.005, 0.005);
            // Rim segments; walls share the annealed weight schedule.
            let rims: [(BoundarySegment, usize, DecaySchedule); 4] = [
                (
                    BoundarySegment::MovingWall,
                    b.boundary - b.boundary / 2,
                    wall_weight_schedule(),
                ),
                (
                    BoundarySegment::FixedWall,
                    b.boundary / 2,
                    wall_weight_schedule(),
                ),
                (
                    BoundarySegment::Inlet,
                    b.initial - b.initial / 2,
                    DecaySchedule::constant(1.0),
                ),
                (
                    BoundarySegment::Outlet,
                    b.initial / 2,
                    DecaySchedule::constant(1.0),
                ),
            ];
            for (seg, count, weight) in rims {
                if count == 0 {
                    return Err(CoreError::InvalidConfig(format!(
                        "channel rim segment {seg:?} has an empty batch"
                    )));
                }
                let g = Graph::new();
                let s = g.input(0);
                let pt: [Nd; 2] = match seg {
                    BoundarySegment::MovingWall => [s.clone(), g.constant(y_hi)],
                    BoundarySegment::FixedWall => [s.clone(), g.constant(y_lo)],
                    BoundarySegment::Inlet => [g.constant(x_lo), s.clone()],
                    BoundarySegment::Outlet => [g.constant(x_hi), s.clone()],
                };
                let [u, v, q] = emit3(&g, &pt);
                let rows = couette_bc_rows(seg, &u, &v, &q);
                let penalty = -neg_sum_squares(&s, &rows);
                let horizontal = matches!(
                    seg,
                    BoundarySegment::MovingWall | BoundarySegment::FixedWall
                );
                let (lo, hi) = if horizontal {
                    (x_lo, x_hi)
                } else {
                    (y_lo, y_hi)
                };
                push(
                    penalty,
                    &g,
                    weight,
                    Box::new(move |rng, _| (0..count).map(|_| rng.gen_range(lo..hi)).collect()),
                )?;
            }
            // Interior field equations.
            let g = Graph::new();
            let x = g.input(0);
            let y = g.input(1);
            let [u, v, q] = emit3(&g, &[x.clone(), y.clone()]);
            let full = |w: &Nd| {
                let wx = g.diff(w, 0);
                let wy = g.diff(w, 1);
                Bundle::new(
                    w.clone(),
                    vec![wx.clone(), wy.clone()],
                    vec![g.diff(&wx, 0), g.diff(&wy, 1)],
                )
            };
            let qb = Bundle::new(q.clone(), vec![g.diff(&q, 0), g.diff(&q, 1)], vec![]);
            let penalty = -couette_eq_reward(&full(&u), &full(&v), &qb, p);
            let ne = b.equation;
            push(
                penalty,
                &g,
                DecaySchedule::constant(1.0),
                Box::new(move |rng, _| {
                    let mut v = Vec::with_capacity(2 * ne);
                    for _ in 0..ne {
                        v.push(rng.gen_range(x_lo..x_hi));
                        v.push(rng.gen_range(y_lo..y_hi));
                    }
                    v
                }),
            )?;
        }
        _ => {
            return Err(CoreError::InvalidConfig(
                "locally parameterized systems rebuild their graphs per slab".into(),
            ))
        }
    }
    Ok(sets)
}

/// Sampler drawing `current` points in slab `step` plus up to `cap`
/// accumulated points across the already-converged slabs, each written by
/// `fill(rng, out, t)`.
fn slab_sampler(
    current: usize,
    prev_per_step: usize,
    cap: usize,
    dt: f64,
    fill: impl Fn(&mut ChaCha8Rng, &mut Vec<f64>, f64) + 'static,
) -> Box<dyn Fn(&mut ChaCha8Rng, usize) -> Vec<f64>> {
    Box::new(move |rng, step| {
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        let n_prev = (prev_per_step * (step - 1)).min(cap);
        let mut v = Vec::with_capacity(2 * (current + n_prev));
        for _ in 0..current {
            let t = t1 - rng.gen_range(0.0..(t1 - t0));
            fill(rng, &mut v, t);
        }
        for _ in 0..n_prev {
            let t = t0 - rng.gen_range(0.0..t0);
            fill(rng, &mut v, t);
        }
        v
    })
}

/// Expression mapping query inputs to the solution components of one slab.
///
/// Locally parameterized systems read the local time and bake the slab-start
/// state in as constants; field problems read the global coordinates.
fn build_solution(
    problem: &Problem,
    policies: &[MlpPolicy],
    bases: &[usize],
    total: usize,
    prev: &[f64],
) -> Result<Expression> {
    let g = Graph::new();
    let outputs: Vec<Nd> = match problem {
        Problem::VanDerPol(_) | Problem::Lorenz { .. } => {
            let tau = g.input(0);
            let mu = policies[0].emit(&g, &[tau.clone()], 0);
            mu.iter()
                .zip(prev)
                .map(|(m, &p0)| tau.clone() * m.clone() + p0)
                .collect()
        }
        Problem::EquationOfMotion { .. } => {
            let tau = g.input(0);
            let mu = policies[0].emit(&g, &[tau.clone()], 0);
            let mut out = Vec::with_capacity(9);
            for k in 0..3 {
                out.push(tau.sq() * mu[k].clone() + tau.clone() * prev[3 + k] + prev[k]);
            }
            for k in 0..3 {
                out.push(g.diff(&out[k], 0));
            }
            for k in 0..3 {
                out.push(tau.clone() * mu[6 + k].clone() + prev[6 + k]);
            }
            out
        }
        Problem::Burgers(_) => {
            let x = g.input(0);
            let t = g.input(1);
            let f = &policies[0].emit(&g, &[x.clone(), t.clone()], 0)[0];
            vec![burgers_trial(&x, &t, f)]
        }
        Problem::Schrodinger { .. } => {
            let x = g.input(0);
            let t = g.input(1);
            policies[0].emit(&g, &[x, t], 0)
        }
        Problem::Couette(_) => {
            let x = g.input(0);
            let y = g.input(1);
            let pt = [x, y];
            let mut out = Vec::with_capacity(3);
            for (pol, &base) in policies.iter().zip(bases) {
                out.push(pol.emit(&g, &pt, base)[0].clone());
            }
            out
        }
    };
    anchor(&g, total);
    g.compile(&outputs)
}

/// One sampling + forward + backward sweep over every condition set.
///
/// Returns the per-set penalty means; the weighted gradient of the summed
/// objective is accumulated into `grad` (cleared here first).
fn iteration_pass(
    sets: &mut [CondSet],
    flat: &[f64],
    w_lik: f64,
    global_iter: u64,
    step: usize,
    rng: &mut ChaCha8Rng,
    grad: &mut [f64],
) -> Result<Vec<f64>> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut means = Vec::with_capacity(sets.len());
    for (k, set) in sets.iter_mut().enumerate() {
        let batch = (set.sample)(rng, step);
        let ni = set.expr.n_inputs();
        let rows = batch.len() / ni;
        debug_assert_eq!(batch.len() % ni, 0);
        set.expr.load_params(&mut set.ws, flat)?;
        // External weight: the annealed multiplier and the batch mean both
        // enter through the reverse seed, so the monitored mean stays raw.
        let seed = w_lik * set.weight.value_at(global_iter) / rows as f64;
        let mut mean = 0.0;
        for r in 0..rows {
            set.expr
                .load_inputs(&mut set.ws, &batch[r * ni..(r + 1) * ni])?;
            set.expr.forward(&mut set.ws);
            mean += set.expr.output(&set.ws, 0);
            set.expr.backward_into(&mut set.ws, 0, seed, grad)?;
        }
        mean /= rows as f64;
        if !mean.is_finite() {
            return Err(CoreError::NonFinite {
                what: "penalty mean",
                iteration: global_iter,
                index: k,
            });
        }
        means.push(mean);
    }
    Ok(means)
}

struct StepOutcome {
    iterations: u64,
    converged: bool,
    components: Vec<f64>,
}

/// Trains one slab until every monitored mean passes the threshold.
///
/// The check runs on each fresh batch before the gradient step, so a warm
/// start that already satisfies the bar spends zero iterations.
#[allow(clippy::too_many_arguments)]
fn train_step(
    sets: &mut [CondSet],
    flat: &mut [f64],
    adam: &mut AdamState,
    config: &MarchConfig,
    w_lik: f64,
    global_iter: &mut u64,
    step: usize,
    rng: &mut ChaCha8Rng,
    log: &mut TrainLog,
    grad: &mut [f64],
) -> Result<StepOutcome> {
    let mut iterations = 0;
    loop {
        let means = iteration_pass(sets, flat, w_lik, *global_iter, step, rng, grad)?;
        if means.iter().all(|m| *m <= config.threshold) {
            return Ok(StepOutcome {
                iterations,
                converged: true,
                components: means,
            });
        }
        if iterations >= config.max_iters_per_step {
            return Ok(StepOutcome {
                iterations,
                converged: false,
                components: means,
            });
        }
        let lr = config.lr.value_at(*global_iter);
        adam.step(flat, grad, lr)?;
        log.rows.push(IterRow {
            global_iter: *global_iter,
            step,
            lr,
            components: means,
        });
        *global_iter += 1;
        iterations += 1;
    }
}

/// Runs the full march and returns the per-slab records, the iteration log,
/// and the chained evaluator over the converged steps.
pub fn march(
    problem: &Problem,
    policies: Vec<MlpPolicy>,
    config: &MarchConfig,
) -> Result<MarchOutcome> {
    config.validate()?;
    problem.validate_policies(&policies)?;
    if problem.is_steady() && config.n_steps != 1 {
        return Err(CoreError::InvalidConfig(format!(
            "the steady channel trains in exactly one step, got n_steps = {}",
            config.n_steps
        )));
    }
    if let Problem::EquationOfMotion { excitation, .. } = problem {
        let (lo, hi) = excitation.span();
        let horizon = config.dt * config.n_steps as f64;
        if lo > 0.0 || hi < horizon {
            return Err(CoreError::InvalidConfig(format!(
                "excitation span [{lo}, {hi}] does not cover the horizon [0, {horizon}]"
            )));
        }
    }

    let (bases, total) = param_bases(&policies);
    let mut flat = Vec::with_capacity(total);
    for p in &policies {
        flat.extend_from_slice(p.params());
    }
    // The weight is detached and the actions are the means, so sigma never
    // receives a gradient and the factor is constant across the march.
    let w_lik = if config.weighting {
        let mut w = 1.0;
        for p in &policies {
            w *= p.likelihood_weight()?;
        }
        w
    } else {
        1.0
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(total);
    let mut grad = vec![0.0; total];
    let mut global_iter: u64 = 0;
    let mut log = TrainLog {
        component_names: problem
            .component_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: Vec::new(),
    };
    let mut records: Vec<StepRecord> = Vec::new();
    let mut all_converged = true;
    let mut prev = problem.initial_state();

    let mut field_sets = if problem.is_time_local() {
        None
    } else {
        Some(build_field_sets(problem, &policies, &bases, total, config)?)
    };

    for step in 1..=config.n_steps {
        let t_start = (step - 1) as f64 * config.dt;
        if config.reset_adam_per_step {
            adam.reset();
        }
        let started = Instant::now();
        let mut local_sets;
        let sets: &mut [CondSet] = match field_sets.as_mut() {
            Some(s) => s,
            None => {
                local_sets =
                    build_local_sets(problem, &policies[0], total, &prev, t_start, config)?;
                &mut local_sets
            }
        };
        let outcome = train_step(
            sets,
            &mut flat,
            &mut adam,
            config,
            w_lik,
            &mut global_iter,
            step,
            &mut rng,
            &mut log,
            &mut grad,
        )?;
        let wall_ms = if config.deterministic {
            0.0
        } else {
            started.elapsed().as_secs_f64() * 1e3
        };
        records.push(StepRecord {
            step,
            t_start,
            t_end: t_start + config.dt,
            iterations: outcome.iterations,
            global_iter_end: global_iter,
            converged: outcome.converged,
            components: outcome.components,
            params: flat.clone(),
            prev: prev.clone(),
            wall_ms,
        });
        if problem.is_time_local() {
            // Slab-end state becomes the next slab start, evaluated through
            // the same expression the evaluator rebuilds, bit for bit.
            let sol = build_solution(problem, &policies, &bases, total, &prev)?;
            prev = sol.evaluate(&[config.dt], &flat)?;
        }
        if !outcome.converged {
            all_converged = false;
            if config.fail_fast {
                break;
            }
        }
    }

    let steps = records
        .iter()
        .map(|r| EvalStep {
            params: r.params.clone(),
            prev: r.prev.clone(),
        })
        .collect();
    let evaluator = ChainedEvaluator {
        problem: problem.clone(),
        policies,
        bases,
        total,
        dt: config.dt,
        steps,
    };
    Ok(MarchOutcome {
        records,
        log,
        evaluator,
        all_converged,
    })
}

struct EvalStep {
    params: Vec<f64>,
    prev: Vec<f64>,
}

/// Dispatches each query to the slab that owns it and evaluates that slab's
/// converged network (with its trial transform).
pub struct ChainedEvaluator {
    problem: Problem,
    policies: Vec<MlpPolicy>,
    bases: Vec<usize>,
    total: usize,
    dt: f64,
    steps: Vec<EvalStep>,
}

impl ChainedEvaluator {
    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// End of the covered time span (0 for the steady channel).
    pub fn horizon(&self) -> f64 {
        if self.problem.is_steady() {
            0.0
        } else {
            self.steps.len() as f64 * self.dt
        }
    }

    /// Names of the evaluated components.
    pub fn solution_names(&self) -> Vec<&'static str> {
        self.problem.solution_names()
    }

    /// Clones of the policy networks carrying one slab's parameters.
    pub fn step_policies(&self, step: usize) -> Result<Vec<MlpPolicy>> {
        let rec = self.steps.get(step.wrapping_sub(1)).ok_or_else(|| {
            CoreError::InvalidConfig(format!(
                "step {step} outside the marched range 1..={}",
                self.steps.len()
            ))
        })?;
        let mut out = Vec::with_capacity(self.policies.len());
        for (pol, &base) in self.policies.iter().zip(&self.bases) {
            let mut p = pol.clone();
            let n = p.params().len();
            p.set_params(&rec.params[base..base + n])?;
            out.push(p);
        }
        Ok(out)
    }

    /// Owning slab and local time for a query time.
    ///
    /// Slabs are right-inclusive; a time on a slab boundary snaps to the
    /// slab that ends there so the local time is exactly `dt`.
    fn slab_for(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.steps.len();
        let horizon = n as f64 * self.dt;
        if !t.is_finite() || t < -DOMAIN_FUZZ || t > horizon + DOMAIN_FUZZ * horizon.max(1.0) {
            return Err(CoreError::OutOfDomain(format!(
                "t = {t} outside the marched span [0, {horizon}]"
            )));
        }
        let q = t / self.dt;
        let r = q.round();
        if (q - r).abs() < 1e-9 && r >= 1.0 {
            return Ok(((r as usize).min(n), self.dt));
        }
        let i = (q.ceil().max(1.0) as usize).min(n);
        let tau = (t - (i - 1) as f64 * self.dt).clamp(0.0, self.dt);
        Ok((i, tau))
    }

    fn check_spatial(&self, point: &[f64]) -> Result<()> {
        for (coord, (lo, hi)) in point.iter().zip(self.problem.spatial_bounds()) {
            let fuzz = DOMAIN_FUZZ * (hi - lo).max(1.0);
            if !coord.is_finite() || *coord < lo - fuzz || *coord > hi + fuzz {
                return Err(CoreError::OutOfDomain(format!(
                    "coordinate {coord} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates one query point; see `evaluate_batch` for the layouts.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        let pts = [point.to_vec()];
        Ok(self.evaluate_batch(&pts)?.pop().expect("one point in"))
    }

    /// Evaluates many query points, grouping by owning slab.
    ///
    /// Point layouts: `[t]` for the oscillators and the frame, `[x, t]` for
    /// the field equations, `[x, y]` for the steady channel.
    pub fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let expect = if self.problem.is_time_local() { 1 } else { 2 };
        let mut by_slab: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut locals = vec![0.0; points.len()];
        for (idx, p) in points.iter().enumerate() {
            if p.len() != expect {
                return Err(CoreError::ShapeMismatch {
                    context: "evaluator query point",
                    expected: expect,
                    got: p.len(),
                });
            }
            let slab = if self.problem.is_steady() {
                self.check_spatial(p)?;
                1
            } else if self.problem.is_time_local() {
                let (i, tau) = self.slab_for(p[0])?;
                locals[idx] = tau;
                i
            } else {
                self.check_spatial(&p[..1])?;
                let (i, _) = self.slab_for(p[1])?;
                i
            };
            by_slab.entry(slab).or_default().push(idx);
        }

        let mut out = vec![Vec::new(); points.len()];
        if self.problem.is_time_local() {
            for (&slab, indices) in &by_slab {
                let rec = &self.steps[slab - 1];
                let sol = build_solution(
                    &self.problem,
                    &self.policies,
                    &self.bases,
                    self.total,
                    &rec.prev,
                )?;
                let mut ws = Workspace::new();
                sol.bind(&mut ws);
                sol.load_params(&mut ws, &rec.params)?;
                for &idx in indices {
                    out[idx] = sol.evaluate_with(&mut ws, &[locals[idx]])?;
                }
            }
        } else {
            let sol = build_solution(&self.problem, &self.policies, &self.bases, self.total, &[])?;
            let mut ws = Workspace::new();
            sol.bind(&mut ws);
            for (&slab, indices) in &by_slab {
                sol.load_params(&mut ws, &self.steps[slab - 1].params)?;
                for &idx in indices {
                    out[idx] = sol.evaluate_with(&mut ws, &points[idx])?;
                }
            }
        }
        Ok(out)
    }
}

/// Per-component error summary against reference values.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionMetrics {
    pub max_abs_err: Vec<f64>,
    pub rms_err: Vec<f64>,
}

/// Evaluated solution on a set of query points, with optional reference
/// values and their error summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionRecord {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub reference: Option<Vec<Vec<f64>>>,
    pub metrics: Option<SolutionMetrics>,
}

/// Evaluates the chained solution on `points`, comparing against reference
/// values when given (same point order, one row per point).
pub fn evaluate_solution(
    evaluator: &ChainedEvaluator,
    points: &[Vec<f64>],
    reference: Option<&[Vec<f64>]>,
) -> Result<SolutionRecord> {
    let values = evaluator.evaluate_batch(points)?;
    let n_comp = evaluator.solution_names().len();
    let mut metrics = None;
    let mut stored = None;
    if let Some(rf) = reference {
        if rf.len() != points.len() {
            return Err(CoreError::ShapeMismatch {
                context: "reference row count",
                expected: points.len(),
                got: rf.len(),
            });
        }
        let mut max_abs = vec![0.0_f64; n_comp];
        let mut sq = vec![0.0_f64; n_comp];
        for (v, r) in values.iter().zip(rf) {
            if r.len() != n_comp {
                return Err(CoreError::ShapeMismatch {
                    context: "reference component count",
                    expected: n_comp,
                    got: r.len(),
                });
            }
            for c in 0..n_comp {
                let e = (v[c] - r[c]).abs();
                max_abs[c] = max_abs[c].max(e);
                sq[c] += e * e;
            }
        }
        let n = points.len().max(1) as f64;
        let rms = sq.iter().map(|s| (s / n).sqrt()).collect();
        metrics = Some(SolutionMetrics {
            max_abs_err: max_abs,
            rms_err: rms,
        });
        stored = Some(rf.to_vec());
    }
    Ok(SolutionRecord {
        points: points.to_vec(),
        values,
        reference: stored,
        metrics,
    })
}

/// Builds the policy networks for a problem with the conventional input
/// normalization (each physical range mapped onto [-1, 1]).
pub fn default_policies(
    problem: &Problem,
    config: &MarchConfig,
    hidden: &[usize],
    sigma: SigmaMode,
    seed: u64,
) -> Result<Vec<MlpPolicy>> {
    let (count, input_dim, output_dims) = problem.policy_shape();
    let horizon = config.dt * config.n_steps as f64;
    let ranges: Vec<(f64, f64)> = match problem {
        Problem::VanDerPol(_) | Problem::Lorenz { .. } | Problem::EquationOfMotion { .. } => {
            vec![(0.0, config.dt)]
        }
        Problem::Burgers(_) => vec![(-1.0, 1.0), (0.0, horizon)],
        Problem::Schrodinger { .. } => vec![(-HALF_WIDTH, HALF_WIDTH), (0.0, horizon)],
        Problem::Couette(_) => vec![(0.0, 0.5), (-0.005, 0.005)],
    };
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let pol = MlpPolicy::init(
            input_dim,
            hidden,
            output_dims[k],
            sigma,
            seed.wrapping_add(k as u64),
        )?
        .with_input_ranges(&ranges)?;
        out.push(pol);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dt: f64, n_steps: usize) -> MarchConfig {
        MarchConfig {
            dt,
            n_steps,
            threshold: 1e-3,
            max_iters_per_step: 150,
            lr: DecaySchedule::new(0.01, 0.99, 50, 1e-4),
            seed: 7,
            batch: BatchSizes::local(20),
            prev_cap: 1_000,
            weighting: true,
            reset_adam_per_step: false,
            fail_fast: false,
            deterministic: true,
        }
    }

    fn vdp_problem() -> Problem {
        Problem::VanDerPol(VdpParams::default())
    }

    #[test]
    fn trial_pins_the_slab_start_exactly() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 3);
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let (bases, total) = param_bases(&policies);
        let prev = vec![0.731, -2.25];
        let sol = build_solution(&problem, &policies, &bases, total, &prev).unwrap();
        let flat: Vec<f64> = policies[0].params().to_vec();
        let at_zero = sol.evaluate(&[0.0], &flat).unwrap();
        assert_eq!(at_zero, prev);
    }

    #[test]
    fn quadratic_trial_pins_position_velocity_and_drift() {
        let excitation = Excitation::synthetic(5, 1.0, 0.01, 0.5, 5.0, 1.0);
        let problem = Problem::EquationOfMotion {
            params: EomParams::default(),
            excitation,
        };
        let config = tiny_config(0.05, 2);
        let policies =
            default_policies(&problem, &config, &[6, 6], SigmaMode::Fixed(0.1), 11).unwrap();
        let (bases, total) = param_bases(&policies);
        let prev: Vec<f64> = (0..9).map(|k| 0.1 * k as f64 - 0.3).collect();
        let sol = build_solution(&problem, &policies, &bases, total, &prev).unwrap();
        let flat: Vec<f64> = policies[0].params().to_vec();
        let at_zero = sol.evaluate(&[0.0], &flat).unwrap();
        assert_eq!(at_zero, prev);
    }

    #[test]
    fn field_trial_is_exact_at_the_initial_instant() {
        let problem = Problem::Burgers(BurgersParams::default());
        let config = tiny_config(0.1, 2);
        let policies =
            default_policies(&problem, &config, &[6, 6], SigmaMode::Fixed(0.1), 4).unwrap();
        let (bases, total) = param_bases(&policies);
        let sol = build_solution(&problem, &policies, &bases, total, &[]).unwrap();
        let flat: Vec<f64> = policies[0].params().to_vec();
        for k in 0..20 {
            let x = -1.0 + 2.0 * k as f64 / 19.0;
            let got = sol.evaluate(&[x, 0.0], &flat).unwrap()[0];
            assert_eq!(got, -(std::f64::consts::PI * x).sin());
        }
    }

    #[test]
    fn mini_march_is_deterministic() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 3);
        let run = || {
            let policies =
                default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
            march(&problem, policies, &config).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.records, b.records);
        assert_eq!(a.log, b.log);
        assert_eq!(a.all_converged, b.all_converged);
    }

    #[test]
    fn warm_start_chains_the_slab_ends_exactly() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 3);
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        for k in 1..out.records.len() {
            let t_boundary = k as f64 * config.dt;
            let through_evaluator = out.evaluator.evaluate(&[t_boundary]).unwrap();
            assert_eq!(through_evaluator, out.records[k].prev);
        }
    }

    #[test]
    fn learning_rate_follows_the_global_schedule() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 3);
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        assert!(!out.log.rows.is_empty());
        for pair in out.log.rows.windows(2) {
            assert_eq!(pair[1].global_iter, pair[0].global_iter + 1);
        }
        for row in &out.log.rows {
            assert_eq!(row.lr, config.lr.value_at(row.global_iter));
        }
    }

    #[test]
    fn weighting_scales_the_gradient_uniformly() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 2);
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 9).unwrap();
        let (_, total) = param_bases(&policies);
        let flat: Vec<f64> = policies[0].params().to_vec();
        let w = policies[0].likelihood_weight().unwrap();
        // sigma = 0.1 on two outputs: w = (1 / (sqrt(2 pi) 0.1))^2 = 1 / (2 pi 0.01).
        assert!((w - 1.0 / (2.0 * std::f64::consts::PI * 0.01)).abs() < 1e-9);

        let prev = problem.initial_state();
        let mut grad_plain = vec![0.0; total];
        let mut grad_weighted = vec![0.0; total];
        let mut sets =
            build_local_sets(&problem, &policies[0], total, &prev, 0.0, &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        iteration_pass(&mut sets, &flat, 1.0, 0, 1, &mut rng, &mut grad_plain).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        iteration_pass(&mut sets, &flat, w, 0, 1, &mut rng, &mut grad_weighted).unwrap();
        for (a, b) in grad_plain.iter().zip(&grad_weighted) {
            assert!((b - w * a).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn non_converged_steps_are_flagged_and_fail_fast_stops() {
        let problem = vdp_problem();
        let mut config = tiny_config(0.1, 3);
        config.threshold = 1e-15;
        config.max_iters_per_step = 3;
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        assert!(!out.all_converged);
        assert_eq!(out.records.len(), 3);
        for r in &out.records {
            assert!(!r.converged);
            assert_eq!(r.iterations, 3);
            assert!(r.components.iter().any(|c| *c > config.threshold));
        }

        config.fail_fast = true;
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.evaluator.n_steps(), 1);
    }

    #[test]
    fn evaluator_rejects_points_outside_the_span() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 2);
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 3).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        assert!(matches!(
            out.evaluator.evaluate(&[0.5]),
            Err(CoreError::OutOfDomain(_))
        ));
        assert!(matches!(
            out.evaluator.evaluate(&[-0.05]),
            Err(CoreError::OutOfDomain(_))
        ));
        assert!(out.evaluator.evaluate(&[0.2]).is_ok());
    }

    #[test]
    fn rejects_mismatched_policies() {
        let problem = vdp_problem();
        let config = tiny_config(0.1, 2);
        // Three outputs instead of the oscillator's two.
        let wrong = vec![MlpPolicy::init(1, &[8], 3, SigmaMode::Fixed(0.1), 3).unwrap()];
        assert!(matches!(
            march(&problem, wrong, &config),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn excitation_must_cover_the_horizon() {
        let excitation = Excitation::synthetic(5, 0.05, 0.01, 0.5, 5.0, 1.0);
        let problem = Problem::EquationOfMotion {
            params: EomParams::default(),
            excitation,
        };
        let config = tiny_config(0.05, 2);
        let policies =
            default_policies(&problem, &config, &[6, 6], SigmaMode::Fixed(0.1), 11).unwrap();
        assert!(matches!(
            march(&problem, policies, &config),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn field_march_runs_and_keeps_the_start_profile() {
        let problem = Problem::Burgers(BurgersParams::default());
        let mut config = tiny_config(0.05, 2);
        config.threshold = 5e-2;
        config.batch = BatchSizes {
            equation: 30,
            prev_per_step: 30,
            boundary: 0,
            initial: 0,
        };
        let policies =
            default_policies(&problem, &config, &[8, 8], SigmaMode::Fixed(0.1), 6).unwrap();
        let out = march(&problem, policies, &config).unwrap();
        // The hard constraint holds at t = 0 no matter what was learned.
        for k in 0..10 {
            let x = -0.9 + 0.2 * k as f64;
            let got = out.evaluator.evaluate(&[x, 0.0]).unwrap()[0];
            assert_eq!(got, -(std::f64::consts::PI * x).sin());
        }
        // Boundary times snap to the slab that ends there.
        let (slab, tau) = out.evaluator.slab_for(0.05).unwrap();
        assert_eq!(slab, 1);
        assert_eq!(tau, config.dt);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut c = tiny_config(0.1, 2);
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = tiny_config(0.1, 2);
        c.threshold = -1.0;
        assert!(c.validate().is_err());
        let mut c = tiny_config(0.1, 2);
        c.batch.prev_per_step = 50;
        c.prev_cap = 10;
        assert!(c.validate().is_err());
        let c = tiny_config(0.1, 2);
        assert!(c.validate().is_ok());
    }
}
