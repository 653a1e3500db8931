//! The four-pendulum benchmark: Van der Pol leader over a four-follower
//! signed digraph with partition `{1, 2} / {3, 4}`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::engine::{design_gain, ControlledAgent, EngineError, GainDesign, Scenario};
use crate::exosystem::{Exosystem, VanDerPol};
use crate::graph::{structural_balance, Edge, SignedDigraph};
use crate::regulation::{build_xmaps, choose_gains, repeated_pole, RegulatedAgent};

pub fn benchmark_edges() -> Vec<Edge> {
    alloc::vec![
        Edge::new(0, 1, 1.0),
        Edge::new(1, 2, 1.0),
        Edge::new(4, 2, -1.0),
        Edge::new(1, 3, -1.0),
        Edge::new(2, 4, -1.0),
        Edge::new(3, 4, 1.0),
    ]
}

pub fn benchmark_graph() -> SignedDigraph {
    SignedDigraph::new(4, &benchmark_edges()).expect("benchmark edges are valid")
}

pub const BENCHMARK_V0: [f64; 2] = [0.1, 0.2];
pub const BENCHMARK_X0: [[f64; 2]; 4] = [[0.3, 0.4], [0.5, 0.6], [0.7, 0.8], [0.9, 1.0]];

/// `eta_i(0) = ((i - 1) 0.2, (i - 1) 0.2)`.
pub fn benchmark_eta0() -> DMatrix<f64> {
    DMatrix::from_fn(4, 2, |i, _| i as f64 * 0.2)
}

/// Run parameters of the benchmark; `mu = None` selects `max(10, mu_rec)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkParams {
    pub mu: Option<f64>,
    pub safety_factor: f64,
    pub dt: f64,
    pub t_final: f64,
    pub pole: f64,
    pub record_every: usize,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            mu: None,
            safety_factor: crate::observer::DEFAULT_SAFETY_FACTOR,
            dt: 1e-3,
            t_final: 30.0,
            pole: -2.0,
            record_every: 1,
        }
    }
}

/// Floor applied to the recommended gain when none is given.
pub const BENCHMARK_MIN_GAIN: f64 = 10.0;

/// Gain design for the benchmark graph and leader.
pub fn benchmark_gain(safety_factor: f64) -> Result<GainDesign, EngineError> {
    let g = benchmark_graph();
    let gp = structural_balance(&g)?;
    design_gain(&g, &gp, &VanDerPol, safety_factor)
}

/// Observer-only benchmark scenario.
pub fn benchmark_observer(params: &BenchmarkParams) -> Result<Scenario, EngineError> {
    let g = benchmark_graph();
    let gp = structural_balance(&g)?;
    let exo: Arc<dyn Exosystem> = Arc::new(VanDerPol);
    let mu = match params.mu {
        Some(mu) => mu,
        None => libm::fmax(BENCHMARK_MIN_GAIN, design_gain(&g, &gp, exo.as_ref(), params.safety_factor)?.recommended),
    };
    let mut sc = Scenario::new(g, gp, exo, mu, BENCHMARK_V0.to_vec(), benchmark_eta0(), params.t_final, params.dt);
    sc.record_every = params.record_every;
    Ok(sc)
}

/// Full closed loop with pendulum followers.
pub fn benchmark_closed_loop(params: &BenchmarkParams) -> Result<Scenario, EngineError> {
    let sc = benchmark_observer(params)?;
    let gains = choose_gains(&repeated_pole(params.pole, 2))?;
    let xmaps = build_xmaps(sc.exo.clone(), 2, None)?;
    let agents = BENCHMARK_X0
        .iter()
        .map(|&x0| ControlledAgent::new(RegulatedAgent::pendulum(x0), gains.clone(), xmaps.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sc.with_agents(agents))
}
