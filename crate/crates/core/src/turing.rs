//! One-row bipartite regulation problems for binary pattern synthesis.
//!
//! Each row is a leader-fed signed path. Dark pixels join `V1` and settle at
//! `y_0 = -1`; white pixels join `V2` and settle at `+1`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::engine::{design_gain, integrate, ControlledAgent, EngineError, Scenario};
use crate::exosystem::{ConstantExosystem, Exosystem};
use crate::graph::{Edge, GaugePartition, Sign, SignedDigraph};
use crate::regulation::{build_xmaps, choose_gains, repeated_pole, RegulatedAgent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pixel {
    Dark,
    White,
}

impl Pixel {
    pub fn sign(self) -> Sign {
        match self {
            Pixel::Dark => Sign::Plus,
            Pixel::White => Sign::Minus,
        }
    }
}

/// Path `k -> k+1` with weight `+1` between equal colours and `-1` otherwise;
/// the leader feeds pixel 1. The partition is read off the colours.
///
/// # Panics
/// If `row` is empty.
pub fn build_row_network(row: &[Pixel]) -> (SignedDigraph, GaugePartition) {
    assert!(!row.is_empty(), "row must contain at least one pixel");
    let mut edges = vec![Edge::new(0, 1, 1.0)];
    for (k, pair) in row.windows(2).enumerate() {
        let w = if pair[0] == pair[1] { 1.0 } else { -1.0 };
        edges.push(Edge::new(k + 1, k + 2, w));
    }
    let g = SignedDigraph::new(row.len(), &edges).expect("path edges are valid");
    let gp = GaugePartition::from_signs(row.iter().map(|p| p.sign()).collect());
    (g, gp)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuringParams {
    /// Lower bound on the observer gain; the run uses
    /// `max(mu, safety_factor * mu_1)`.
    pub mu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub safety_factor: f64,
    /// Repeated closed-loop pole of every follower.
    pub pole: f64,
}

impl Default for TuringParams {
    fn default() -> Self {
        TuringParams { mu: 10.0, dt: 0.01, t_final: 30.0, safety_factor: crate::observer::DEFAULT_SAFETY_FACTOR, pole: -2.0 }
    }
}

/// Leader state: `v_1 = -1` is the output, `v_2 = 1` is carried inertly.
pub const TURING_LEADER: [f64; 2] = [-1.0, 1.0];

/// The full observer + pendulum scenario for one row, started from rest.
pub fn row_scenario(row: &[Pixel], params: &TuringParams) -> Result<Scenario, EngineError> {
    let (g, gp) = build_row_network(row);
    let exo: Arc<dyn Exosystem> = Arc::new(ConstantExosystem { dim: 2 });
    let design = design_gain(&g, &gp, exo.as_ref(), params.safety_factor)?;
    let mu = libm::fmax(params.mu, design.recommended);
    let gains = choose_gains(&repeated_pole(params.pole, 2))?;
    let xmaps = build_xmaps(exo.clone(), 2, None)?;
    let n = row.len();
    let agents = (0..n)
        .map(|_| ControlledAgent::new(RegulatedAgent::pendulum([0.0, 0.0]), gains.clone(), xmaps.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sc = Scenario::new(g, gp, exo, mu, TURING_LEADER.to_vec(), DMatrix::zeros(n, 2), params.t_final, params.dt)
        .with_agents(agents);
    sc.record_every = sc.n_steps().max(1);
    Ok(sc)
}

/// Outputs `y_i(t_final)` of one row.
pub fn simulate_row(row: &[Pixel], params: &TuringParams) -> Result<Vec<f64>, EngineError> {
    let sc = row_scenario(row, params)?;
    let traj = integrate(&sc)?;
    let last = traj.len() - 1;
    Ok((0..row.len()).map(|i| traj.output_at(last, i)).collect())
}
