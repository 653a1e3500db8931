//! Nonlinear distributed observers and bipartite output regulation for
//! multi-agent systems over static signed digraphs.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation: graph algebra, exosystem models, observer and controller
//! right-hand sides, and a fixed-step RK4 engine. File formats, the CLI and
//! parallel drivers live in the `bireg` companion crate.
//!
//! Node `0` of a [`SignedDigraph`] is always the leader (the exosystem);
//! followers are nodes `1..=N`. Per-follower vectors and the `N x N` graph
//! matrices are indexed by `node - 1`.


#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod engine;
pub mod exosystem;
pub mod graph;
pub mod linalg;
pub mod observer;
pub mod ode;
pub mod presets;
pub mod regulation;
pub mod sampling;
pub mod turing;

pub use engine::{
    convergence_report, design_gain, integrate, integrate_gauged, order_check, ConvergenceReport,
    ControlledAgent, EngineError, GainDesign, OrderProblem, OrderReport, Scenario, Trajectory,
};
pub use exosystem::{
    builtin_exosystem, decomposition_residual, evaluate, validate_assumptions, AssumptionReport,
    ConstantExosystem, ExoError, Exosystem, FnExosystem, LinearExosystem, VanDerPol,
};
pub use graph::{
    diag_lyapunov, has_leader_spanning_tree, laplacian_family, structural_balance, BalanceError,
    CertificateMethod, Edge, GaugePartition, GraphError, GraphMatrices, LyapunovCertificate,
    LyapunovError, Sign, SignedDigraph,
};
pub use observer::{
    estimation_error, gauge_coordinates, gauged_rhs, linear_reduction_rhs, mu_bound, ndo_rhs,
    recommended_gain, unsigned_reduction_rhs, ObserverError, ObserverState,
    DEFAULT_SAFETY_FACTOR,
};
pub use regulation::{
    build_xmaps, choose_gains, control_input, plant_rhs, tracking_error, ControllerGains,
    Nonlinearity, Pendulum, RegulatedAgent, RegulationError, XMap, XMapChain, ZeroNonlinearity,
};
pub use turing::{build_row_network, simulate_row, Pixel, TuringParams};
