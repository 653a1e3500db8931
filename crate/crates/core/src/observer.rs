//! The nonlinear distributed observer over a signed digraph:
//!
//! ```text
//! eta_i' = phi_i a(phi_i eta_i)
//!        + mu ( sum_j a_ij (eta_j - sgn(a_ij) eta_i) + a_i0 (phi_i v - eta_i) )
//! ```
//!
//! plus its gauged form `z_i = phi_i eta_i`, the coupling-gain bound and the
//! unsigned and linear special cases used as cross-checks.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::exosystem::Exosystem;
use crate::graph::{GaugePartition, LyapunovCertificate, Sign, SignedDigraph};
use crate::linalg::{self, norm2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObserverError {
    #[error("coupling gain must be positive and finite, got {0}")]
    InvalidGain(f64),
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("edge {from} -> {to} has negative weight; the unsigned observer needs nonnegative weights")]
    NegativeWeight { from: usize, to: usize },
    #[error("certificate has min eig(Q) = {0}, not positive")]
    InvalidCertificate(f64),
}

/// Stacked estimates `eta` (row `i` is follower `i + 1`) and the gain `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverState {
    pub eta: DMatrix<f64>,
    pub mu: f64,
}

impl ObserverState {
    pub fn new(eta: DMatrix<f64>, mu: f64) -> Result<Self, ObserverError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(ObserverError::InvalidGain(mu));
        }
        Ok(ObserverState { eta, mu })
    }

    /// All estimates at zero.
    pub fn zeros(n: usize, m: usize, mu: f64) -> Result<Self, ObserverError> {
        Self::new(DMatrix::zeros(n, m), mu)
    }
}

pub(crate) fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub(crate) fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

fn check_dims(
    g_n: usize,
    exo: &dyn Exosystem,
    state: &ObserverState,
    v: &[f64],
) -> Result<(), ObserverError> {
    let m = exo.dim_state();
    let checks = [
        ("estimate rows", g_n, state.eta.nrows()),
        ("estimate columns", m, state.eta.ncols()),
        ("leader state length", m, v.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(ObserverError::DimensionMismatch { what, expected, found });
        }
    }
    if !(state.mu > 0.0 && state.mu.is_finite()) {
        return Err(ObserverError::InvalidGain(state.mu));
    }
    Ok(())
}

/// Row-major observer right-hand side. `eta` and `out` are `N x m`, `scratch`
/// needs `2 m` entries.
pub(crate) fn ndo_rhs_into(
    g: &SignedDigraph,
    phi: &[f64],
    exo: &dyn Exosystem,
    mu: f64,
    eta: &[f64],
    v: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) {
    let m = v.len();
    let (gauged, drift) = scratch.split_at_mut(m);
    for i in 0..g.n_followers() {
        let eta_i = &eta[i * m..(i + 1) * m];
        let p = phi[i];
        for (w, e) in gauged.iter_mut().zip(eta_i) {
            *w = p * e;
        }
        exo.drift(gauged, &mut drift[..m]);
        let row = &mut out[i * m..(i + 1) * m];
        for k in 0..m {
            let mut coupling = 0.0;
            for &(j, a) in g.follower_in_edges(i) {
                let s = Sign::of(a).value();
                coupling += a * (eta[j * m + k] - s * eta_i[k]);
            }
            let a0 = g.leader_weight(i + 1);
            if a0 != 0.0 {
                coupling += a0 * (p * v[k] - eta_i[k]);
            }
            row[k] = p * drift[k] + mu * coupling;
        }
    }
}

/// `eta'` for every follower, as an `N x m` matrix.
pub fn ndo_rhs(
    g: &SignedDigraph,
    gp: &GaugePartition,
    exo: &dyn Exosystem,
    state: &ObserverState,
    v: &[f64],
) -> Result<DMatrix<f64>, ObserverError> {
    check_dims(g.n_followers(), exo, state, v)?;
    if gp.len() != g.n_followers() {
        return Err(ObserverError::DimensionMismatch {
            what: "partition length",
            expected: g.n_followers(),
            found: gp.len(),
        });
    }
    let (n, m) = state.eta.shape();
    let eta = to_row_major(&state.eta);
    let mut out = vec![0.0; n * m];
    let mut scratch = vec![0.0; 2 * m];
    ndo_rhs_into(g, &gp.values(), exo, state.mu, &eta, v, &mut out, &mut scratch);
    Ok(from_row_major(n, m, &out))
}

/// `z_i = phi_i eta_i`. Applying it twice returns `eta`.
pub fn gauge_coordinates(state: &ObserverState, gp: &GaugePartition) -> DMatrix<f64> {
    let mut z = state.eta.clone();
    for (i, s) in gp.signs().iter().enumerate() {
        if *s == Sign::Minus {
            z.row_mut(i).neg_mut();
        }
    }
    z
}

/// Per-follower `||eta_i - phi_i v||` and their maximum.
pub fn estimation_error(state: &ObserverState, gp: &GaugePartition, v: &[f64]) -> (Vec<f64>, f64) {
    let per_agent: Vec<f64> = gp
        .signs()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let d: Vec<f64> = state.eta.row(i).iter().zip(v).map(|(e, x)| e - s.value() * x).collect();
            norm2(&d)
        })
        .collect();
    let max = per_agent.iter().copied().fold(0.0, f64::max);
    (per_agent, max)
}

/// Row-major gauged closed loop `z' = a(z) - mu (H kron I)(z - 1 kron v)`.
pub(crate) fn gauged_rhs_into(
    h: &DMatrix<f64>,
    exo: &dyn Exosystem,
    mu: f64,
    z: &[f64],
    v: &[f64],
    out: &mut [f64],
) {
    let m = v.len();
    let n = h.nrows();
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        exo.drift(&z[i * m..(i + 1) * m], row);
        for k in 0..m {
            let mut coupling = 0.0;
            for j in 0..n {
                let hij = h[(i, j)];
                if hij != 0.0 {
                    coupling += hij * (z[j * m + k] - v[k]);
                }
            }
            row[k] -= mu * coupling;
        }
    }
}

/// The observer in gauged coordinates, evaluated at `z` (`N x m`).
pub fn gauged_rhs(
    h_unsigned: &DMatrix<f64>,
    exo: &dyn Exosystem,
    mu: f64,
    z: &DMatrix<f64>,
    v: &[f64],
) -> DMatrix<f64> {
    let (n, m) = z.shape();
    let mut out = vec![0.0; n * m];
    gauged_rhs_into(h_unsigned, exo, mu, &to_row_major(z), v, &mut out);
    from_row_major(n, m, &out)
}

/// Floor applied to the gain bound before the safety factor.
pub const MU_FLOOR: f64 = 1e-6;

/// Safety factor standing in for the trajectory-dependent part of the gain
/// threshold.
pub const DEFAULT_SAFETY_FACTOR: f64 = 2.0;

/// The gain bound `mu_1 = 2 lambda_max(sym(P kron M)) / lambda_min(Q)`.
///
/// `lambda_max` is taken over the symmetric part because only the quadratic
/// form `z^T (P kron M) z` enters the Lyapunov derivative. Above `mu_1` the
/// observer error is exponentially stable at `v = 0`; it is an estimate for
/// general leader trajectories, see [`recommended_gain`].
pub fn mu_bound(cert: &LyapunovCertificate, m: &DMatrix<f64>) -> Result<f64, ObserverError> {
    if !(cert.q_min_eig > 0.0) {
        return Err(ObserverError::InvalidCertificate(cert.q_min_eig));
    }
    let q_min = linalg::min_symmetric_eigenvalue(&cert.q);
    if !(q_min > 0.0) {
        return Err(ObserverError::InvalidCertificate(q_min));
    }
    let pm = cert.p_matrix().kronecker(m);
    let lambda_max = linalg::max_symmetric_eigenvalue(&pm);
    Ok(2.0 * lambda_max / q_min)
}

/// `safety_factor * max(mu_1, MU_FLOOR)`.
pub fn recommended_gain(mu_1: f64, safety_factor: f64) -> f64 {
    safety_factor * libm::fmax(mu_1, MU_FLOOR)
}

/// The observer on an unsigned graph: `eta_i' = a(eta_i) + mu sum_{j=0..N} a_ij (eta_j - eta_i)`
/// with `eta_0 = v`.
pub fn unsigned_reduction_rhs(
    g: &SignedDigraph,
    exo: &dyn Exosystem,
    state: &ObserverState,
    v: &[f64],
) -> Result<DMatrix<f64>, ObserverError> {
    check_dims(g.n_followers(), exo, state, v)?;
    if let Some(e) = g.edges().into_iter().find(|e| e.weight < 0.0) {
        return Err(ObserverError::NegativeWeight { from: e.from, to: e.to });
    }
    let (n, m) = state.eta.shape();
    let a = g.weights();
    let mut out = DMatrix::zeros(n, m);
    let mut drift = vec![0.0; m];
    for i in 0..n {
        let eta_i: Vec<f64> = state.eta.row(i).iter().copied().collect();
        exo.drift(&eta_i, &mut drift);
        for k in 0..m {
            let mut coupling = 0.0;
            // followers first, then the leader, as in the signed observer
            for j in (1..=n).chain(0..1) {
                let aij = a[(i + 1, j)];
                if aij != 0.0 {
                    let eta_j = if j == 0 { v[k] } else { state.eta[(j - 1, k)] };
                    coupling += aij * (eta_j - eta_i[k]);
                }
            }
            out[(i, k)] = drift[k] + state.mu * coupling;
        }
    }
    Ok(out)
}

/// The observer for a linear leader `a(v) = S v`:
/// `eta_i' = S eta_i + mu ( sum_j a_ij (eta_j - sgn(a_ij) eta_i) + a_i0 (phi_i v - eta_i) )`.
pub fn linear_reduction_rhs(
    g: &SignedDigraph,
    gp: &GaugePartition,
    s: &DMatrix<f64>,
    state: &ObserverState,
    v: &[f64],
) -> Result<DMatrix<f64>, ObserverError> {
    let (n, m) = state.eta.shape();
    let checks = [
        ("estimate rows", g.n_followers(), n),
        ("partition length", g.n_followers(), gp.len()),
        ("S rows", m, s.nrows()),
        ("S columns", m, s.ncols()),
        ("leader state length", m, v.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(ObserverError::DimensionMismatch { what, expected, found });
        }
    }
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        let p = gp.signs()[i].value();
        for k in 0..m {
            let drift: f64 = s.row(k).iter().zip(state.eta.row(i).iter()).map(|(a, b)| a * b).sum();
            let mut coupling = 0.0;
            for &(j, a) in g.follower_in_edges(i) {
                coupling += a * (state.eta[(j, k)] - Sign::of(a).value() * state.eta[(i, k)]);
            }
            let a0 = g.leader_weight(i + 1);
            if a0 != 0.0 {
                coupling += a0 * (p * v[k] - state.eta[(i, k)]);
            }
            out[(i, k)] = drift + state.mu * coupling;
        }
    }
    Ok(out)
}
