//! Classical fixed-step fourth-order Runge-Kutta.

use alloc::vec;
use alloc::vec::Vec;

/// An explicit first-order system `y' = F(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// RK4 stepper with preallocated stage buffers.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 { k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], stage: vec![0.0; dim] }
    }

    /// Advances `y` from `t` to `t + dt` in place.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &mut S, t: f64, dt: f64, y: &mut [f64]) {
        let half = 0.5 * dt;
        sys.rhs(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k1[i];
        }
        sys.rhs(t + half, &self.stage, &mut self.k2);
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k2[i];
        }
        sys.rhs(t + half, &self.stage, &mut self.k3);
        for i in 0..y.len() {
            self.stage[i] = y[i] + dt * self.k3[i];
        }
        sys.rhs(t + dt, &self.stage, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Step count and size of the final step for covering `[0, t_final]` with
/// steps of `dt`. A final step shorter than `1e-9 dt` is absorbed.
pub fn step_plan(t_final: f64, dt: f64) -> (usize, f64) {
    let ratio = t_final / dt;
    let full = libm::floor(ratio + 1e-9);
    let rest = t_final - full * dt;
    if rest > 1e-9 * dt {
        (full as usize + 1, rest)
    } else {
        (full as usize, dt)
    }
}

/// Integrates `sys` from `y0` at `t = 0` to `t_final`; returns the final state.
pub fn integrate_to<S: OdeSystem + ?Sized>(sys: &mut S, y0: &[f64], t_final: f64, dt: f64) -> Vec<f64> {
    let mut y = y0.to_vec();
    let mut rk = Rk4::new(y.len());
    let (steps, last) = step_plan(t_final, dt);
    for k in 0..steps {
        let h = if k + 1 == steps { last } else { dt };
        rk.step(sys, k as f64 * dt, h, &mut y);
    }
    y
}
