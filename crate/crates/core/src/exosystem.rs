//! Leader systems `v' = a(v)`, `y0 = g(v)` with the decomposition
//! `a(v) = M v + diag(d(v)) v`, `d_i(v) <= 0`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{dmatrix, DMatrix};

use crate::linalg::norm2;
use crate::sampling::halton_box;

/// An autonomous leader system.
///
/// Implementations must be pure: identical inputs give identical outputs.
pub trait Exosystem: Send + Sync {
    /// State dimension `m`.
    fn dim_state(&self) -> usize;

    /// Output dimension `q`.
    fn dim_output(&self) -> usize;

    /// Writes `a(v)` into `out` (length `m`).
    fn drift(&self, v: &[f64], out: &mut [f64]);

    /// Writes `g(v)` into `out` (length `q`).
    fn output(&self, v: &[f64], out: &mut [f64]);

    /// `M`, the Jacobian of `a` at the origin.
    fn linear_part(&self) -> DMatrix<f64>;

    /// Writes the diagonal `d(v)` of `T(v)` into `out` (length `m`).
    fn damping(&self, v: &[f64], out: &mut [f64]);

    /// Closed-form output chain `x_1 = g`, `x_{s+1} = (dx_s/dv) a` up to
    /// `x_{order+1}`, when known.
    fn output_chain(&self, _order: usize) -> Option<Vec<crate::regulation::XMap>> {
        None
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// `v1' = v2`, `v2' = -v1 + (1 - v1^2) v2`, `y0 = v1`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VanDerPol;

impl Exosystem for VanDerPol {
    fn dim_state(&self) -> usize {
        2
    }

    fn dim_output(&self) -> usize {
        1
    }

    fn drift(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[1];
        out[1] = -v[0] + (1.0 - v[0] * v[0]) * v[1];
    }

    fn output(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[0];
    }

    fn linear_part(&self) -> DMatrix<f64> {
        dmatrix![0.0, 1.0; -1.0, 1.0]
    }

    fn damping(&self, v: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = -v[0] * v[0];
    }

    fn output_chain(&self, order: usize) -> Option<Vec<crate::regulation::XMap>> {
        use alloc::sync::Arc;
        if order > 2 {
            return None;
        }
        let maps: [crate::regulation::XMap; 3] = [
            Arc::new(|v: &[f64]| v[0]),
            Arc::new(|v: &[f64]| v[1]),
            Arc::new(|v: &[f64]| -v[0] + (1.0 - v[0] * v[0]) * v[1]),
        ];
        Some(maps.into_iter().take(order + 1).collect())
    }

    fn name(&self) -> &str {
        "vanderpol"
    }
}

/// `v' = 0` in `R^m` with `y0 = v1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantExosystem {
    pub dim: usize,
}

impl Exosystem for ConstantExosystem {
    fn dim_state(&self) -> usize {
        self.dim
    }

    fn dim_output(&self) -> usize {
        1
    }

    fn drift(&self, _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn output(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[0];
    }

    fn linear_part(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim)
    }

    fn damping(&self, _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn output_chain(&self, order: usize) -> Option<Vec<crate::regulation::XMap>> {
        use alloc::sync::Arc;
        let mut maps: Vec<crate::regulation::XMap> = vec![Arc::new(|v: &[f64]| v[0])];
        maps.extend((0..order).map(|_| Arc::new(|_: &[f64]| 0.0) as crate::regulation::XMap));
        Some(maps)
    }

    fn name(&self) -> &str {
        if self.dim == 2 {
            "constant2"
        } else {
            "constant"
        }
    }
}

/// `v' = S v` with `y0 = v1`; `d(v) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearExosystem {
    pub s: DMatrix<f64>,
}

impl Exosystem for LinearExosystem {
    fn dim_state(&self) -> usize {
        self.s.nrows()
    }

    fn dim_output(&self) -> usize {
        1
    }

    fn drift(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.s.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    fn output(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[0];
    }

    fn linear_part(&self) -> DMatrix<f64> {
        self.s.clone()
    }

    fn damping(&self, _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn name(&self) -> &str {
        "linear"
    }
}

type VecFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A user-supplied exosystem built from closures.
pub struct FnExosystem {
    dim_state: usize,
    dim_output: usize,
    drift: VecFn,
    output: VecFn,
    m: DMatrix<f64>,
    damping: VecFn,
}

impl FnExosystem {
    pub fn new(
        dim_output: usize,
        m: DMatrix<f64>,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        output: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        damping: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert!(m.is_square(), "M must be square");
        FnExosystem {
            dim_state: m.nrows(),
            dim_output,
            drift: Box::new(drift),
            output: Box::new(output),
            m,
            damping: Box::new(damping),
        }
    }
}

impl Exosystem for FnExosystem {
    fn dim_state(&self) -> usize {
        self.dim_state
    }

    fn dim_output(&self) -> usize {
        self.dim_output
    }

    fn drift(&self, v: &[f64], out: &mut [f64]) {
        (self.drift)(v, out)
    }

    fn output(&self, v: &[f64], out: &mut [f64]) {
        (self.output)(v, out)
    }

    fn linear_part(&self) -> DMatrix<f64> {
        self.m.clone()
    }

    fn damping(&self, v: &[f64], out: &mut [f64]) {
        (self.damping)(v, out)
    }
}

/// Built-in exosystems by configuration name.
pub fn builtin_exosystem(name: &str) -> Option<Arc<dyn Exosystem>> {
    match name {
        "vanderpol" => Some(Arc::new(VanDerPol)),
        "constant2" => Some(Arc::new(ConstantExosystem { dim: 2 })),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExoError {
    #[error("state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exosystem produced a non-finite value")]
    NonFinite,
}

/// `(a(v), g(v))`.
pub fn evaluate(exo: &dyn Exosystem, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ExoError> {
    if v.len() != exo.dim_state() {
        return Err(ExoError::DimensionMismatch { expected: exo.dim_state(), found: v.len() });
    }
    let mut drift = vec![0.0; exo.dim_state()];
    let mut output = vec![0.0; exo.dim_output()];
    exo.drift(v, &mut drift);
    exo.output(v, &mut output);
    if drift.iter().chain(&output).all(|x| x.is_finite()) {
        Ok((drift, output))
    } else {
        Err(ExoError::NonFinite)
    }
}

/// `|| a(v) - M v - diag(d(v)) v ||_2`.
pub fn decomposition_residual(exo: &dyn Exosystem, v: &[f64]) -> f64 {
    let m = exo.linear_part();
    let n = exo.dim_state();
    let mut a = vec![0.0; n];
    let mut d = vec![0.0; n];
    exo.drift(v, &mut a);
    exo.damping(v, &mut d);
    let r: Vec<f64> = (0..n)
        .map(|i| {
            let mv: f64 = m.row(i).iter().zip(v).map(|(x, y)| x * y).sum();
            a[i] - mv - d[i] * v[i]
        })
        .collect();
    norm2(&r)
}

/// Outcome of [`validate_assumptions`]. Bounded trajectories are not checked
/// here; the engine monitors them per run.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub samples: usize,
    pub max_residual: f64,
    /// `max_i max_v d_i(v)`.
    pub max_damping: f64,
    /// `||a(0)||` and `||g(0)||`.
    pub origin_drift: f64,
    pub origin_output: f64,
    pub decomposition_ok: bool,
    pub damping_ok: bool,
    pub origin_ok: bool,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.decomposition_ok && self.damping_ok && self.origin_ok
    }
}

/// Absolute slack for `d_i(v) <= 0` and the zero-at-origin checks.
pub const ASSUMPTION_TOL: f64 = 1e-12;

/// Checks the decomposition, the sign of `d(v)`, and `a(0) = 0`, `g(0) = 0` on
/// `n_samples` Halton points of `sample_box` (one `(lo, hi)` per state
/// coordinate).
pub fn validate_assumptions(exo: &dyn Exosystem, sample_box: &[(f64, f64)], n_samples: usize) -> AssumptionReport {
    let n = exo.dim_state();
    assert_eq!(sample_box.len(), n, "sample box dimension must match the state dimension");
    assert!(n_samples >= 1, "need at least one sample");
    let zero = vec![0.0; n];
    let mut a0 = vec![0.0; n];
    let mut g0 = vec![0.0; exo.dim_output()];
    exo.drift(&zero, &mut a0);
    exo.output(&zero, &mut g0);

    let mut max_residual = 0.0f64;
    let mut max_damping = f64::NEG_INFINITY;
    let mut decomposition_ok = true;
    let mut a = vec![0.0; n];
    let mut d = vec![0.0; n];
    for v in halton_box(sample_box, n_samples) {
        exo.drift(&v, &mut a);
        exo.damping(&v, &mut d);
        let r = decomposition_residual(exo, &v);
        let scale = 1.0 + norm2(&v) + norm2(&a);
        decomposition_ok &= r <= ASSUMPTION_TOL * scale;
        max_residual = libm::fmax(max_residual, r);
        for &di in &d {
            max_damping = libm::fmax(max_damping, di);
        }
    }
    let origin_drift = norm2(&a0);
    let origin_output = norm2(&g0);
    AssumptionReport {
        samples: n_samples,
        max_residual,
        max_damping,
        origin_drift,
        origin_output,
        decomposition_ok,
        damping_ok: max_damping <= ASSUMPTION_TOL,
        origin_ok: origin_drift <= ASSUMPTION_TOL && origin_output <= ASSUMPTION_TOL,
    }
}
