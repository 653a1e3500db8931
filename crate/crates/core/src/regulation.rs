//! Chain-of-integrator followers and the certainty-equivalence control law
//!
//! ```text
//! u_i = sum_{s=1}^{r+1} phi_i beta_s x_s(phi_i eta_i) - f_i(x_i, phi_i eta_i) - sum_{s=1}^{r} beta_s x_si
//! ```
//!
//! where `x_1 = g` and `x_{s+1} = (dx_s/dv) a(v)` is the output chain of the
//! leader and `beta_{r+1} = 1`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::exosystem::Exosystem;
use crate::graph::Sign;
use crate::linalg;
use crate::sampling::halton_box;

/// One map `v -> x_s(v)` of the output chain.
pub type XMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegulationError {
    #[error("plant order must be at least 1")]
    ZeroOrder,
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("pole {re} + {im}i is not in the open left half-plane")]
    UnstablePole { re: f64, im: f64 },
    #[error("pole {re} + {im}i has no matching conjugate")]
    UnpairedPole { re: f64, im: f64 },
    #[error("gains give a companion matrix that is not Hurwitz")]
    NotHurwitz,
    #[error("the output chain needs a scalar leader output, got dimension {0}")]
    OutputNotScalar(usize),
    #[error("map x_{index} disagrees with the chain recursion (relative defect {defect:e})")]
    ChainMismatch { index: usize, defect: f64 },
    #[error("numerical output chain refused for order {0} > {MAX_NUMERIC_ORDER}; supply closed-form maps")]
    ExcessiveOrder(usize),
    #[error("control law produced a non-finite value")]
    NonFinite,
}

/// The matched nonlinearity `f_i(x_i, v)` of the last integrator.
pub trait Nonlinearity: Send + Sync {
    fn eval(&self, x: &[f64], v: &[f64]) -> f64;

    fn name(&self) -> &str {
        "custom"
    }
}

/// Damped pendulum `f(x, v) = -2 sin(x_1) - x_2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pendulum;

impl Nonlinearity for Pendulum {
    fn eval(&self, x: &[f64], _v: &[f64]) -> f64 {
        -2.0 * libm::sin(x[0]) - x[1]
    }

    fn name(&self) -> &str {
        "pendulum"
    }
}

/// Pure integrator chain, `f = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNonlinearity;

impl Nonlinearity for ZeroNonlinearity {
    fn eval(&self, _x: &[f64], _v: &[f64]) -> f64 {
        0.0
    }

    fn name(&self) -> &str {
        "none"
    }
}

/// A nonlinearity from a closure.
pub struct FnNonlinearity(pub Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>);

impl Nonlinearity for FnNonlinearity {
    fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        (self.0)(x, v)
    }
}

/// `phi f(phi x, w)`: the nonlinearity seen in gauged coordinates `x~ = phi x`.
pub(crate) struct GaugedNonlinearity {
    pub inner: Arc<dyn Nonlinearity>,
    pub sign: f64,
}

impl Nonlinearity for GaugedNonlinearity {
    fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        // orders are tiny; the buffer only avoids a heap allocation per call
        let mut buf = [0.0; 16];
        let flipped = &mut buf[..x.len()];
        for (f, xi) in flipped.iter_mut().zip(x) {
            *f = self.sign * xi;
        }
        self.sign * self.inner.eval(flipped, v)
    }
}

/// A follower `x_s' = x_{s+1}`, `x_r' = f(x, v) + u`, `y = x_1`.
#[derive(Clone)]
pub struct RegulatedAgent {
    pub nonlinearity: Arc<dyn Nonlinearity>,
    pub phi: Sign,
    pub state: Vec<f64>,
}

impl core::fmt::Debug for RegulatedAgent {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RegulatedAgent")
            .field("nonlinearity", &self.nonlinearity.name())
            .field("phi", &self.phi)
            .field("state", &self.state)
            .finish()
    }
}

/// Longest supported integrator chain.
pub const MAX_ORDER: usize = 16;

impl RegulatedAgent {
    /// The order is the length of `state`; `phi` starts at `+1` and is set
    /// from the graph partition when the agent joins a scenario.
    pub fn new(nonlinearity: Arc<dyn Nonlinearity>, state: Vec<f64>) -> Result<Self, RegulationError> {
        if state.is_empty() {
            return Err(RegulationError::ZeroOrder);
        }
        if state.len() > MAX_ORDER {
            return Err(RegulationError::DimensionMismatch { what: "plant order", expected: MAX_ORDER, found: state.len() });
        }
        Ok(RegulatedAgent { nonlinearity, phi: Sign::Plus, state })
    }

    pub fn pendulum(x0: [f64; 2]) -> Self {
        Self::new(Arc::new(Pendulum), x0.to_vec()).expect("order 2")
    }

    pub fn with_phi(mut self, phi: Sign) -> Self {
        self.phi = phi;
        self
    }

    pub fn order(&self) -> usize {
        self.state.len()
    }

    pub fn output(&self) -> f64 {
        self.state[0]
    }
}

/// `beta_1..beta_r` and the companion pair `(A, B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerGains {
    beta: Vec<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl ControllerGains {
    /// Validates that the companion matrix is Hurwitz.
    pub fn from_beta(beta: Vec<f64>) -> Result<Self, RegulationError> {
        let r = beta.len();
        if r == 0 {
            return Err(RegulationError::ZeroOrder);
        }
        let a = DMatrix::from_fn(r, r, |i, j| if i + 1 == r { -beta[j] } else if j == i + 1 { 1.0 } else { 0.0 });
        let mut b = DVector::zeros(r);
        b[r - 1] = 1.0;
        if !beta.iter().all(|x| x.is_finite()) || linalg::eigenvalues(&a).iter().any(|ev| ev.re >= 0.0) {
            return Err(RegulationError::NotHurwitz);
        }
        Ok(ControllerGains { beta, a, b })
    }

    pub fn order(&self) -> usize {
        self.beta.len()
    }

    /// `beta_1..beta_r` (`beta_{r+1} = 1` is implicit).
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn companion(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn input_vector(&self) -> &DVector<f64> {
        &self.b
    }
}

/// Gains placing the companion eigenvalues at `poles`:
/// `prod (s - p_k) = s^r + beta_r s^{r-1} + ... + beta_1`.
pub fn choose_gains(poles: &[Complex<f64>]) -> Result<ControllerGains, RegulationError> {
    if poles.is_empty() {
        return Err(RegulationError::ZeroOrder);
    }
    for p in poles {
        if !(p.re < 0.0) || !p.im.is_finite() {
            return Err(RegulationError::UnstablePole { re: p.re, im: p.im });
        }
    }
    let scale = poles.iter().map(|p| libm::hypot(p.re, p.im)).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut used = vec![false; poles.len()];
    for (k, p) in poles.iter().enumerate() {
        if used[k] || libm::fabs(p.im) <= tol {
            used[k] = true;
            continue;
        }
        used[k] = true;
        let partner = (0..poles.len()).find(|&j| !used[j] && { let d = poles[j] - p.conj(); libm::hypot(d.re, d.im) } <= tol);
        match partner {
            Some(j) => used[j] = true,
            None => return Err(RegulationError::UnpairedPole { re: p.re, im: p.im }),
        }
    }
    // coefficients of the monic polynomial, lowest degree first
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (d, c) in coeffs.iter().enumerate() {
            next[d + 1] += *c;
            next[d] -= *c * p;
        }
        coeffs = next;
    }
    let beta = coeffs[..poles.len()].iter().map(|c| c.re).collect();
    ControllerGains::from_beta(beta)
}

/// `r` copies of a real pole.
pub fn repeated_pole(pole: f64, r: usize) -> Vec<Complex<f64>> {
    vec![Complex::new(pole, 0.0); r]
}

/// Step of the fourth-order central stencil used for the numerical output
/// chain. Each nesting level multiplies roundoff by about `1 / h`.
pub const CHAIN_FD_STEP: f64 = 2e-2;
/// Step and tolerance for verifying supplied maps against the recursion.
pub const VERIFY_FD_STEP: f64 = 1e-5;
pub const VERIFY_REL_TOL: f64 = 1e-4;
pub const VERIFY_SAMPLES: usize = 100;
/// Largest order for which a purely numerical chain is built.
pub const MAX_NUMERIC_ORDER: usize = 4;

/// The output chain `x_1..x_{r+1}`.
#[derive(Clone)]
pub struct XMapChain {
    maps: Vec<XMap>,
    closed_form: bool,
}

impl core::fmt::Debug for XMapChain {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("XMapChain").field("order", &self.order()).field("closed_form", &self.closed_form).finish()
    }
}

impl XMapChain {
    /// The plant order `r` this chain serves (`maps.len() - 1`).
    pub fn order(&self) -> usize {
        self.maps.len() - 1
    }

    /// `x_s(v)` for `s` in `1..=r+1`.
    pub fn eval(&self, s: usize, v: &[f64]) -> f64 {
        (self.maps[s - 1])(v)
    }

    pub fn maps(&self) -> &[XMap] {
        &self.maps
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_form
    }
}

fn directional_fd(f: &XMap, exo: &dyn Exosystem, v: &[f64], h: f64, fourth_order: bool) -> f64 {
    let m = v.len();
    let mut a = vec![0.0; m];
    exo.drift(v, &mut a);
    let mut probe = v.to_vec();
    let mut out = 0.0;
    for k in 0..m {
        if a[k] == 0.0 {
            continue;
        }
        let mut at = |d: f64| {
            probe[k] = v[k] + d;
            let y = f(&probe);
            probe[k] = v[k];
            y
        };
        let d = if fourth_order {
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        } else {
            (at(h) - at(-h)) / (2.0 * h)
        };
        out += d * a[k];
    }
    out
}

/// Builds the chain for a plant of order `r`.
///
/// Supplied maps (or, failing that, the exosystem's own closed-form chain)
/// are checked against the recursion with central differences at
/// deterministic sample points. Without closed forms the chain is built by
/// nested central differences along `a`, which loses accuracy with depth and
/// is refused above [`MAX_NUMERIC_ORDER`].
pub fn build_xmaps(
    exo: Arc<dyn Exosystem>,
    r: usize,
    analytic: Option<Vec<XMap>>,
) -> Result<XMapChain, RegulationError> {
    if r == 0 {
        return Err(RegulationError::ZeroOrder);
    }
    if exo.dim_output() != 1 {
        return Err(RegulationError::OutputNotScalar(exo.dim_output()));
    }
    if let Some(maps) = analytic.or_else(|| exo.output_chain(r)) {
        if maps.len() != r + 1 {
            return Err(RegulationError::DimensionMismatch { what: "output chain length", expected: r + 1, found: maps.len() });
        }
        let chain = XMapChain { maps, closed_form: true };
        verify_chain(exo.as_ref(), &chain)?;
        return Ok(chain);
    }
    if r > MAX_NUMERIC_ORDER {
        return Err(RegulationError::ExcessiveOrder(r));
    }
    let g_exo = exo.clone();
    let mut maps: Vec<XMap> = vec![Arc::new(move |v: &[f64]| {
        let mut y = [0.0];
        g_exo.output(v, &mut y);
        y[0]
    })];
    for _ in 0..r {
        let prev = maps.last().expect("nonempty").clone();
        let e = exo.clone();
        maps.push(Arc::new(move |v: &[f64]| directional_fd(&prev, e.as_ref(), v, CHAIN_FD_STEP, true)));
    }
    let chain = XMapChain { maps, closed_form: false };
    verify_chain(exo.as_ref(), &chain)?;
    Ok(chain)
}

/// Largest relative defect of `x_1 = g` and `x_{s+1} = (dx_s/dv) a` over the
/// verification samples in `[-2, 2]^m`.
pub fn chain_defect(exo: &dyn Exosystem, chain: &XMapChain) -> Vec<f64> {
    let m = exo.dim_state();
    let samples = halton_box(&vec![(-2.0, 2.0); m], VERIFY_SAMPLES);
    let mut worst = vec![0.0f64; chain.maps.len()];
    let mut y = [0.0];
    for v in &samples {
        exo.output(v, &mut y);
        let x1 = chain.eval(1, v);
        worst[0] = libm::fmax(worst[0], libm::fabs(x1 - y[0]) / libm::fmax(1.0, libm::fabs(y[0])));
        for s in 1..chain.maps.len() {
            let fd = directional_fd(&chain.maps[s - 1], exo, v, VERIFY_FD_STEP, false);
            let exact = chain.eval(s + 1, v);
            let defect = libm::fabs(exact - fd) / libm::fmax(1.0, libm::fabs(exact));
            worst[s] = libm::fmax(worst[s], if defect.is_nan() { f64::INFINITY } else { defect });
        }
    }
    worst
}

fn verify_chain(exo: &dyn Exosystem, chain: &XMapChain) -> Result<(), RegulationError> {
    for (k, defect) in chain_defect(exo, chain).into_iter().enumerate() {
        if !(defect <= VERIFY_REL_TOL) {
            return Err(RegulationError::ChainMismatch { index: k + 1, defect });
        }
    }
    Ok(())
}

/// The control law with explicit arguments; `scratch` must hold `m` entries.
pub(crate) fn control_law(
    x: &[f64],
    phi: f64,
    f: &dyn Nonlinearity,
    beta: &[f64],
    xm: &XMapChain,
    eta_i: &[f64],
    scratch: &mut [f64],
) -> f64 {
    let r = x.len();
    let gauged = &mut scratch[..eta_i.len()];
    for (w, e) in gauged.iter_mut().zip(eta_i) {
        *w = phi * e;
    }
    let mut feedforward = 0.0;
    for s in 1..=r + 1 {
        let b = if s == r + 1 { 1.0 } else { beta[s - 1] };
        feedforward += phi * b * xm.eval(s, gauged);
    }
    let feedback: f64 = beta.iter().zip(x).map(|(b, xs)| b * xs).sum();
    feedforward - f.eval(x, gauged) - feedback
}

/// `u_i` for one follower given its estimate `eta_i`.
pub fn control_input(
    agent: &RegulatedAgent,
    gains: &ControllerGains,
    xm: &XMapChain,
    eta_i: &[f64],
) -> Result<f64, RegulationError> {
    let r = agent.order();
    if gains.order() != r {
        return Err(RegulationError::DimensionMismatch { what: "gain order", expected: r, found: gains.order() });
    }
    if xm.order() != r {
        return Err(RegulationError::DimensionMismatch { what: "output chain order", expected: r, found: xm.order() });
    }
    let mut scratch = vec![0.0; eta_i.len()];
    let u = control_law(&agent.state, agent.phi.value(), agent.nonlinearity.as_ref(), gains.beta(), xm, eta_i, &mut scratch);
    if u.is_finite() {
        Ok(u)
    } else {
        Err(RegulationError::NonFinite)
    }
}

pub(crate) fn plant_rhs_into(x: &[f64], f: &dyn Nonlinearity, u: f64, v: &[f64], out: &mut [f64]) {
    let r = x.len();
    out[..r - 1].copy_from_slice(&x[1..]);
    out[r - 1] = f.eval(x, v) + u;
}

/// `x_i'` under input `u` and leader state `v`.
pub fn plant_rhs(agent: &RegulatedAgent, u: f64, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; agent.order()];
    plant_rhs_into(&agent.state, agent.nonlinearity.as_ref(), u, v, &mut out);
    out
}

/// `e_i = y_i - phi_i y_0`.
pub fn tracking_error(y_i: &[f64], y0: &[f64], phi: Sign) -> Vec<f64> {
    assert_eq!(y_i.len(), y0.len(), "output dimensions differ");
    y_i.iter().zip(y0).map(|(y, r)| y - phi.value() * r).collect()
}
