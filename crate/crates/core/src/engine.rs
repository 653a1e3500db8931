//! Fixed-step simulation of the coupled leader / observer / follower system.
//!
//! State layout: `[v (m) | eta (N x m, row-major) | x_1 | ... | x_N]`. The
//! control input is recomputed inside every Runge-Kutta stage.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::exosystem::Exosystem;
use crate::graph::{
    diag_lyapunov, has_leader_spanning_tree, laplacian_family, BalanceError, GaugePartition,
    LyapunovCertificate, LyapunovError, SignedDigraph,
};
use crate::linalg::{norm2, norm_inf};
use crate::observer::{gauged_rhs_into, mu_bound, ndo_rhs_into, recommended_gain, to_row_major, ObserverError};
use crate::ode::{step_plan, OdeSystem, Rk4};
use crate::regulation::{
    control_law, plant_rhs_into, ControllerGains, GaugedNonlinearity, Nonlinearity, RegulatedAgent,
    RegulationError, XMapChain,
};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;
/// Errors at or below this level are treated as numerical floor by rate fits.
pub const ERROR_FLOOR: f64 = 1e-12;
/// Minimum number of above-floor samples for a rate fit.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error("graph has no spanning tree rooted at the leader")]
    NoSpanningTree,
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Regulation(#[from] RegulationError),
    #[error("state norm exceeded {threshold} at t = {time}")]
    BlowUp { time: f64, threshold: f64, trajectory: Box<Trajectory> },
}

/// A follower with its controller.
#[derive(Clone, Debug)]
pub struct ControlledAgent {
    pub agent: RegulatedAgent,
    pub gains: ControllerGains,
    pub xmaps: XMapChain,
}

impl ControlledAgent {
    pub fn new(agent: RegulatedAgent, gains: ControllerGains, xmaps: XMapChain) -> Result<Self, RegulationError> {
        let r = agent.order();
        if gains.order() != r {
            return Err(RegulationError::DimensionMismatch { what: "gain order", expected: r, found: gains.order() });
        }
        if xmaps.order() != r {
            return Err(RegulationError::DimensionMismatch { what: "output chain order", expected: r, found: xmaps.order() });
        }
        Ok(ControlledAgent { agent, gains, xmaps })
    }
}

/// Everything one run needs. Agents are optional (observer-only runs).
#[derive(Clone)]
pub struct Scenario {
    pub graph: SignedDigraph,
    pub partition: GaugePartition,
    pub exo: Arc<dyn Exosystem>,
    pub agents: Vec<ControlledAgent>,
    pub mu: f64,
    pub t_final: f64,
    pub dt: f64,
    pub v0: Vec<f64>,
    /// `N x m` initial estimates.
    pub eta0: DMatrix<f64>,
    pub blowup_threshold: f64,
    /// Record every k-th step (the final state is always recorded).
    pub record_every: usize,
}

impl core::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Scenario")
            .field("n_followers", &self.graph.n_followers())
            .field("exo", &self.exo.name())
            .field("agents", &self.agents.len())
            .field("mu", &self.mu)
            .field("t_final", &self.t_final)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: SignedDigraph,
        partition: GaugePartition,
        exo: Arc<dyn Exosystem>,
        mu: f64,
        v0: Vec<f64>,
        eta0: DMatrix<f64>,
        t_final: f64,
        dt: f64,
    ) -> Self {
        Scenario {
            graph,
            partition,
            exo,
            agents: Vec::new(),
            mu,
            t_final,
            dt,
            v0,
            eta0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            record_every: 1,
        }
    }

    /// Attaches one controlled agent per follower; each `phi` is taken from
    /// the partition.
    pub fn with_agents(mut self, agents: Vec<ControlledAgent>) -> Self {
        self.agents = agents;
        for (k, a) in self.agents.iter_mut().enumerate() {
            if let Some(&s) = self.partition.signs().get(k) {
                a.agent.phi = s;
            }
        }
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn n_steps(&self) -> usize {
        step_plan(self.t_final, self.dt).0
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |s: String| Err(EngineError::InvalidScenario(s));
        let n = self.graph.n_followers();
        let m = self.exo.dim_state();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be at least dt = {}", self.t_final, self.dt));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(ObserverError::InvalidGain(self.mu).into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blow-up threshold must be positive".into());
        }
        if self.v0.len() != m {
            return bad(format!("leader state has length {}, expected {m}", self.v0.len()));
        }
        if self.eta0.shape() != (n, m) {
            return bad(format!("initial estimates are {:?}, expected ({n}, {m})", self.eta0.shape()));
        }
        self.partition.check(&self.graph)?;
        if !has_leader_spanning_tree(&self.graph) {
            return Err(EngineError::NoSpanningTree);
        }
        if !self.agents.is_empty() {
            if self.agents.len() != n {
                return bad(format!("{} agents for {n} followers", self.agents.len()));
            }
            if self.exo.dim_output() != 1 {
                return Err(RegulationError::OutputNotScalar(self.exo.dim_output()).into());
            }
            for (k, a) in self.agents.iter().enumerate() {
                if a.agent.phi != self.partition.signs()[k] {
                    return bad(format!("agent {} sign disagrees with the partition", k + 1));
                }
                if a.gains.order() != a.agent.order() || a.xmaps.order() != a.agent.order() {
                    return bad(format!("agent {} controller order mismatch", k + 1));
                }
            }
        }
        let all_finite = self.v0.iter().chain(self.eta0.iter()).chain(self.agents.iter().flat_map(|a| a.agent.state.iter())).all(|x| x.is_finite());
        if !all_finite {
            return bad("non-finite initial condition".into());
        }
        Ok(())
    }
}

/// Recorded samples of one run. Per-sample blocks are stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub n_followers: usize,
    pub dim_state: usize,
    pub dim_output: usize,
    /// Plant orders (empty for observer-only runs).
    pub orders: Vec<usize>,
    /// Gauge signs used for `e`.
    pub phi: Vec<f64>,
    pub times: Vec<f64>,
    /// `m` values per sample.
    pub leader: Vec<f64>,
    /// `q` values per sample.
    pub leader_output: Vec<f64>,
    /// `N m` values per sample.
    pub eta: Vec<f64>,
    /// `sum r_i` values per sample.
    pub x: Vec<f64>,
    /// `N` values per sample (agents only).
    pub u: Vec<f64>,
    /// `N` tracking errors per sample (agents only).
    pub e: Vec<f64>,
    pub blowup_threshold: f64,
    /// False when the run stopped early.
    pub completed: bool,
}

impl Trajectory {
    fn empty(n: usize, m: usize, q: usize, orders: Vec<usize>, phi: Vec<f64>, threshold: f64) -> Self {
        Trajectory {
            n_followers: n,
            dim_state: m,
            dim_output: q,
            orders,
            phi,
            times: Vec::new(),
            leader: Vec::new(),
            leader_output: Vec::new(),
            eta: Vec::new(),
            x: Vec::new(),
            u: Vec::new(),
            e: Vec::new(),
            blowup_threshold: threshold,
            completed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_agents(&self) -> bool {
        !self.orders.is_empty()
    }

    fn x_width(&self) -> usize {
        self.orders.iter().sum()
    }

    fn x_offset(&self, i: usize) -> usize {
        self.orders[..i].iter().sum()
    }

    pub fn leader_at(&self, k: usize) -> &[f64] {
        &self.leader[k * self.dim_state..(k + 1) * self.dim_state]
    }

    pub fn leader_output_at(&self, k: usize) -> &[f64] {
        &self.leader_output[k * self.dim_output..(k + 1) * self.dim_output]
    }

    /// `eta_i` of follower index `i` (0-based) at sample `k`.
    pub fn eta_at(&self, k: usize, i: usize) -> &[f64] {
        let m = self.dim_state;
        let base = k * self.n_followers * m + i * m;
        &self.eta[base..base + m]
    }

    pub fn x_at(&self, k: usize, i: usize) -> &[f64] {
        let base = k * self.x_width() + self.x_offset(i);
        &self.x[base..base + self.orders[i]]
    }

    pub fn u_at(&self, k: usize, i: usize) -> f64 {
        self.u[k * self.n_followers + i]
    }

    pub fn e_at(&self, k: usize, i: usize) -> f64 {
        self.e[k * self.n_followers + i]
    }

    /// `y_i = x_1i`.
    pub fn output_at(&self, k: usize, i: usize) -> f64 {
        self.x_at(k, i)[0]
    }

    /// `x_i - phi_i x(v)` at sample `k`, the regulation-manifold deviation.
    pub fn manifold_deviation(&self, k: usize, i: usize, xmaps: &XMapChain) -> Vec<f64> {
        let v = self.leader_at(k);
        let phi = self.phi[i];
        self.x_at(k, i).iter().enumerate().map(|(s, x)| x - phi * xmaps.eval(s + 1, v)).collect()
    }

    /// Largest absolute state entry over all samples.
    pub fn max_state_norm(&self) -> f64 {
        [norm_inf(&self.leader), norm_inf(&self.eta), norm_inf(&self.x)].into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { libm::fmax(a, b) })
    }
}

struct ClosedLoop<'a> {
    sc: &'a Scenario,
    phi: Vec<f64>,
    // Some(H) integrates the gauged coordinates z = phi eta, x~ = phi x
    gauged: Option<DMatrix<f64>>,
    nonlinearities: Vec<Arc<dyn Nonlinearity>>,
    x_offsets: Vec<usize>,
    dim: usize,
    scratch: Vec<f64>,
}

impl<'a> ClosedLoop<'a> {
    fn new(sc: &'a Scenario, gauged: Option<DMatrix<f64>>) -> Self {
        let n = sc.graph.n_followers();
        let m = sc.exo.dim_state();
        let signs = sc.partition.values();
        let phi = if gauged.is_some() { vec![1.0; n] } else { signs.clone() };
        let nonlinearities = sc
            .agents
            .iter()
            .zip(&signs)
            .map(|(a, &s)| match gauged {
                Some(_) => Arc::new(GaugedNonlinearity { inner: a.agent.nonlinearity.clone(), sign: s }) as Arc<dyn Nonlinearity>,
                None => a.agent.nonlinearity.clone(),
            })
            .collect();
        let mut x_offsets = Vec::with_capacity(sc.agents.len());
        let mut off = m + n * m;
        for a in &sc.agents {
            x_offsets.push(off);
            off += a.agent.order();
        }
        ClosedLoop { sc, phi, gauged, nonlinearities, x_offsets, dim: off, scratch: vec![0.0; 2 * m] }
    }

    fn initial_state(&self) -> Vec<f64> {
        let sc = self.sc;
        let signs = sc.partition.values();
        let m = sc.exo.dim_state();
        let mut y = Vec::with_capacity(self.dim);
        y.extend_from_slice(&sc.v0);
        let eta = to_row_major(&sc.eta0);
        let gauge = |i: usize| if self.gauged.is_some() { signs[i] } else { 1.0 };
        for (k, e) in eta.iter().enumerate() {
            y.push(gauge(k / m) * e);
        }
        for (i, a) in sc.agents.iter().enumerate() {
            y.extend(a.agent.state.iter().map(|x| gauge(i) * x));
        }
        y
    }

    fn control(&mut self, y: &[f64], i: usize) -> f64 {
        let m = self.sc.exo.dim_state();
        let a = &self.sc.agents[i];
        let off = self.x_offsets[i];
        let x = &y[off..off + a.agent.order()];
        let eta_i = &y[m + i * m..m + (i + 1) * m];
        control_law(x, self.phi[i], self.nonlinearities[i].as_ref(), a.gains.beta(), &a.xmaps, eta_i, &mut self.scratch)
    }

    fn record(&mut self, t: f64, y: &[f64], traj: &mut Trajectory) {
        let sc = self.sc;
        let m = sc.exo.dim_state();
        let n = sc.graph.n_followers();
        let v = &y[..m];
        traj.times.push(t);
        traj.leader.extend_from_slice(v);
        let mut y0 = vec![0.0; sc.exo.dim_output()];
        sc.exo.output(v, &mut y0);
        traj.leader_output.extend_from_slice(&y0);
        traj.eta.extend_from_slice(&y[m..m + n * m]);
        if !sc.agents.is_empty() {
            traj.x.extend_from_slice(&y[m + n * m..]);
            for i in 0..n {
                let u = self.control(y, i);
                traj.u.push(u);
                traj.e.push(y[self.x_offsets[i]] - self.phi[i] * y0[0]);
            }
        }
    }
}

impl OdeSystem for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let sc = self.sc;
        let m = sc.exo.dim_state();
        let n = sc.graph.n_followers();
        let (v, rest) = y.split_at(m);
        let eta = &rest[..n * m];
        sc.exo.drift(v, &mut dy[..m]);
        match &self.gauged {
            None => ndo_rhs_into(&sc.graph, &self.phi, sc.exo.as_ref(), sc.mu, eta, v, &mut dy[m..m + n * m], &mut self.scratch),
            Some(h) => gauged_rhs_into(h, sc.exo.as_ref(), sc.mu, eta, v, &mut dy[m..m + n * m]),
        }
        for i in 0..sc.agents.len() {
            let u = self.control(y, i);
            let off = self.x_offsets[i];
            let r = sc.agents[i].agent.order();
            plant_rhs_into(&y[off..off + r], self.nonlinearities[i].as_ref(), u, v, &mut dy[off..off + r]);
        }
    }
}

fn run(sc: &Scenario, gauged: Option<DMatrix<f64>>) -> Result<Trajectory, EngineError> {
    sc.validate()?;
    let mut sys = ClosedLoop::new(sc, gauged);
    let mut traj = Trajectory::empty(
        sc.graph.n_followers(),
        sc.exo.dim_state(),
        sc.exo.dim_output(),
        sc.agents.iter().map(|a| a.agent.order()).collect(),
        sys.phi.clone(),
        sc.blowup_threshold,
    );
    let mut y = sys.initial_state();
    let mut rk = Rk4::new(y.len());
    let (steps, last) = step_plan(sc.t_final, sc.dt);
    sys.record(0.0, &y, &mut traj);
    for k in 0..steps {
        let h = if k + 1 == steps { last } else { sc.dt };
        rk.step(&mut sys, k as f64 * sc.dt, h, &mut y);
        let t = if k + 1 == steps { sc.t_final } else { (k + 1) as f64 * sc.dt };
        let norm = norm_inf(&y);
        if !(norm <= sc.blowup_threshold) {
            sys.record(t, &y, &mut traj);
            return Err(EngineError::BlowUp { time: t, threshold: sc.blowup_threshold, trajectory: Box::new(traj) });
        }
        if (k + 1) % sc.record_every == 0 || k + 1 == steps {
            sys.record(t, &y, &mut traj);
        }
    }
    traj.completed = true;
    Ok(traj)
}

/// Runs the signed closed loop. Identical scenarios give bitwise-identical
/// trajectories.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory, EngineError> {
    run(scenario, None)
}

/// Runs the same scenario in gauged coordinates `z_i = phi_i eta_i`,
/// `x~_i = phi_i x_i` using the unsigned matrix `H`. The returned trajectory
/// holds `z`, `x~`, `phi_i u_i` and `phi_i e_i`, with all signs `+1`.
pub fn integrate_gauged(scenario: &Scenario) -> Result<Trajectory, EngineError> {
    let h = laplacian_family(&scenario.graph, &scenario.partition)?.h_unsigned;
    run(scenario, Some(h))
}

/// The gain design for a scenario graph and leader.
#[derive(Clone, Debug, PartialEq)]
pub struct GainDesign {
    pub certificate: LyapunovCertificate,
    pub mu_bound: f64,
    pub recommended: f64,
}

/// Certificate for the gauged `H`, the bound `mu_1` and `safety_factor * mu_1`.
pub fn design_gain(
    graph: &SignedDigraph,
    partition: &GaugePartition,
    exo: &dyn Exosystem,
    safety_factor: f64,
) -> Result<GainDesign, EngineError> {
    let mats = laplacian_family(graph, partition)?;
    let certificate = diag_lyapunov(&mats.h_unsigned)?;
    let mu = mu_bound(&certificate, &exo.linear_part())?;
    Ok(GainDesign { certificate, mu_bound: mu, recommended: recommended_gain(mu, safety_factor) })
}

/// Final-time errors and exponential-rate fits of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// `|e_i(t_final)|` (empty without agents).
    pub final_tracking: Vec<f64>,
    /// `||eta_i - phi_i v||` at `t_final`.
    pub final_estimation: Vec<f64>,
    /// `|y_i - y_0|` for `phi_i = +1`, `|y_i + y_0|` for `phi_i = -1`.
    pub bipartite_residuals: Vec<f64>,
    /// Slope of `log max_i ||eta_i - phi_i v||`; see [`fit_log_rate`].
    pub estimation_rate: Option<f64>,
    /// Slope of `log max_i |e_i|`; see [`fit_log_rate`].
    pub tracking_rate: Option<f64>,
    /// No state entry exceeded the blow-up threshold and the run completed.
    pub bounded: bool,
}

/// Max over followers of `||eta_i - phi_i v||` at each sample.
pub fn estimation_error_series(traj: &Trajectory, gp: &GaugePartition) -> Vec<f64> {
    let phi = gp.values();
    (0..traj.len())
        .map(|k| {
            let v = traj.leader_at(k);
            (0..traj.n_followers)
                .map(|i| {
                    let d: Vec<f64> = traj.eta_at(k, i).iter().zip(v).map(|(e, x)| e - phi[i] * x).collect();
                    norm2(&d)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Max over followers of `|y_i - phi_i y_0|` at each sample.
pub fn tracking_error_series(traj: &Trajectory, gp: &GaugePartition) -> Vec<f64> {
    if !traj.has_agents() {
        return Vec::new();
    }
    let phi = gp.values();
    (0..traj.len())
        .map(|k| {
            let y0 = traj.leader_output_at(k)[0];
            (0..traj.n_followers).map(|i| libm::fabs(traj.output_at(k, i) - phi[i] * y0)).fold(0.0, f64::max)
        })
        .collect()
}

/// Least-squares slope of `log(error)` against time over the second half of
/// the resolved window `[t_first, t_floor]`, where `t_floor` is the first
/// sample at or below [`ERROR_FLOOR`] (the last sample if none is). Only
/// samples above the floor enter the fit. `None` with fewer than
/// [`MIN_FIT_SAMPLES`] usable samples.
pub fn fit_log_rate(times: &[f64], errors: &[f64]) -> Option<f64> {
    let t0 = *times.first()?;
    let t_end = times
        .iter()
        .zip(errors)
        .find(|(_, &e)| e <= ERROR_FLOOR)
        .map_or(*times.last()?, |(&t, _)| t);
    let mid = 0.5 * (t0 + t_end);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|(&t, &e)| t >= mid && t <= t_end && e > ERROR_FLOOR && e.is_finite())
        .map(|(&t, &e)| (t, libm::log(e)))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, l)| (t - tm) * (l - lm)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn convergence_report(traj: &Trajectory, gp: &GaugePartition) -> ConvergenceReport {
    let phi = gp.values();
    let last = traj.len().saturating_sub(1);
    let final_estimation = if traj.is_empty() {
        Vec::new()
    } else {
        let v = traj.leader_at(last);
        (0..traj.n_followers)
            .map(|i| {
                let d: Vec<f64> = traj.eta_at(last, i).iter().zip(v).map(|(e, x)| e - phi[i] * x).collect();
                norm2(&d)
            })
            .collect()
    };
    let (final_tracking, bipartite_residuals) = if traj.has_agents() && !traj.is_empty() {
        let y0 = traj.leader_output_at(last)[0];
        (0..traj.n_followers)
            .map(|i| {
                let y = traj.output_at(last, i);
                let e = libm::fabs(y - phi[i] * y0);
                let sync = if phi[i] > 0.0 { libm::fabs(y - y0) } else { libm::fabs(y + y0) };
                (e, sync)
            })
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    let estimation_rate = fit_log_rate(&traj.times, &estimation_error_series(traj, gp));
    let tracking_rate = if traj.has_agents() { fit_log_rate(&traj.times, &tracking_error_series(traj, gp)) } else { None };
    let max_norm = traj.max_state_norm();
    ConvergenceReport {
        final_tracking,
        final_estimation,
        bipartite_residuals,
        estimation_rate,
        tracking_rate,
        bounded: traj.completed && max_norm <= traj.blowup_threshold,
    }
}

/// Test problems for [`order_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderProblem {
    /// `x' = -x`, `x(0) = 1`.
    Decay,
    /// `x' = y`, `y' = -x`, `(x, y)(0) = (1, 0)`.
    Harmonic,
    /// `x' = 0`, `x(0) = 1`.
    Zero,
}

impl OrderProblem {
    fn initial(self) -> Vec<f64> {
        match self {
            OrderProblem::Decay | OrderProblem::Zero => vec![1.0],
            OrderProblem::Harmonic => vec![1.0, 0.0],
        }
    }

    fn exact(self, t: f64) -> Vec<f64> {
        match self {
            OrderProblem::Decay => vec![libm::exp(-t)],
            OrderProblem::Harmonic => vec![libm::cos(t), -libm::sin(t)],
            OrderProblem::Zero => vec![1.0],
        }
    }
}

impl OdeSystem for OrderProblem {
    fn dim(&self) -> usize {
        self.initial().len()
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        match self {
            OrderProblem::Decay => dy[0] = -y[0],
            OrderProblem::Harmonic => {
                dy[0] = y[1];
                dy[1] = -y[0];
            }
            OrderProblem::Zero => dy[0] = 0.0,
        }
    }
}

/// Global errors at `dt` and `dt / 2` and their ratio (about 16 for RK4).
#[derive(Clone, Debug, PartialEq)]
pub struct OrderReport {
    pub error_coarse: f64,
    pub error_fine: f64,
    /// `None` when the coarse error is exactly zero.
    pub ratio: Option<f64>,
}

/// Accepted band for the step-halving error ratio.
pub const ORDER_RATIO_BAND: (f64, f64) = (12.0, 20.0);

impl OrderReport {
    /// True when the ratio lies in [`ORDER_RATIO_BAND`] or the check was skipped.
    pub fn passed(&self) -> bool {
        self.ratio.is_none_or(|r| (ORDER_RATIO_BAND.0..=ORDER_RATIO_BAND.1).contains(&r))
    }
}

pub fn order_check(problem: OrderProblem, dt: f64, t_end: f64) -> OrderReport {
    let exact = problem.exact(t_end);
    let error = |h: f64| {
        let mut sys = problem;
        let y = crate::ode::integrate_to(&mut sys, &problem.initial(), t_end, h);
        let d: Vec<f64> = y.iter().zip(&exact).map(|(a, b)| a - b).collect();
        norm2(&d)
    };
    let error_coarse = error(dt);
    let error_fine = error(0.5 * dt);
    let ratio = (error_coarse != 0.0).then(|| error_coarse / error_fine);
    OrderReport { error_coarse, error_fine, ratio }
}
