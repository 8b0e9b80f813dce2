//! Fixed-step integrators used to cross-check the closed-form propagation.
//!
//! Both integrators hold the control constant across each step, sampling it
//! at the step midpoint, so a step grid aligned with the control grid is exact
//! up to the RK4 truncation error.

use num_complex::Complex64;

use crate::bloch::{BlochState, Offset, CONTROL_STEPS};

/// Default step count: `dt = duration / 1e5`.
pub const DEFAULT_ORACLE_STEPS: usize = 100_000;

/// Piecewise-constant control `t ↦ u_k` over `CONTROL_STEPS` equal steps.
pub fn step_control(signs: &[i8], total_time: f64) -> impl Fn(f64) -> f64 + '_ {
    let step = total_time / signs.len().max(1) as f64;
    move |t: f64| {
        let k = if step > 0.0 { (t / step).floor() as isize } else { 0 };
        let k = k.clamp(0, signs.len() as isize - 1) as usize;
        f64::from(signs[k])
    }
}

fn steps_for(duration: f64, dt: f64) -> usize {
    assert!(dt > 0.0, "oracle step must be positive");
    (duration / dt).round().max(1.0) as usize
}

fn bloch_rhs(s: [f64; 3], delta: f64, u: f64) -> [f64; 3] {
    [-delta * s[1], delta * s[0] - u * s[2], u * s[1]]
}

/// Classical RK4 integration of the Bloch equations.
///
/// `dt` is rounded so that an integer number of steps covers `duration`.
pub fn rk4_oracle<F: Fn(f64) -> f64>(
    s0: BlochState,
    delta: Offset,
    control: F,
    duration: f64,
    dt: f64,
) -> BlochState {
    if duration == 0.0 {
        return s0;
    }
    let d = delta.value();
    let n = steps_for(duration, dt);
    let h = duration / n as f64;
    let mut s = s0.to_array();
    for i in 0..n {
        let u = control((i as f64 + 0.5) * h);
        let k1 = bloch_rhs(s, d, u);
        let k2 = bloch_rhs(axpy(s, 0.5 * h, k1), d, u);
        let k3 = bloch_rhs(axpy(s, 0.5 * h, k2), d, u);
        let k4 = bloch_rhs(axpy(s, h, k3), d, u);
        for j in 0..3 {
            s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    BlochState::new(s[0], s[1], s[2])
}

fn axpy(s: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

/// Amplitudes `(c1, c2)` of the two-level state.
pub type Amplitudes = [Complex64; 2];

fn schrodinger_rhs(c: Amplitudes, delta: f64, u: f64) -> Amplitudes {
    // dψ/dt = -i H ψ,  H = ½ [[Δ, u], [u, -Δ]]
    let mi = Complex64::new(0.0, -0.5);
    [
        mi * (delta * c[0] + u * c[1]),
        mi * (u * c[0] - delta * c[1]),
    ]
}

fn caxpy(c: Amplitudes, a: f64, k: Amplitudes) -> Amplitudes {
    [c[0] + k[0] * a, c[1] + k[1] * a]
}

/// RK4 integration of `i dψ/dt = H ψ` with `H = ½ [[Δ, u], [u, -Δ]]`.
pub fn schrodinger_oracle<F: Fn(f64) -> f64>(
    c0: Amplitudes,
    delta: Offset,
    control: F,
    duration: f64,
    dt: f64,
) -> Amplitudes {
    if duration == 0.0 {
        return c0;
    }
    let d = delta.value();
    let n = steps_for(duration, dt);
    let h = duration / n as f64;
    let mut c = c0;
    for i in 0..n {
        let u = control((i as f64 + 0.5) * h);
        let k1 = schrodinger_rhs(c, d, u);
        let k2 = schrodinger_rhs(caxpy(c, 0.5 * h, k1), d, u);
        let k3 = schrodinger_rhs(caxpy(c, 0.5 * h, k2), d, u);
        let k4 = schrodinger_rhs(caxpy(c, h, k3), d, u);
        for j in 0..2 {
            c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
    }
    c
}

/// Integrates a full 100-step protocol with the Bloch RK4 oracle at the default step.
pub fn rk4_protocol(s0: BlochState, delta: Offset, signs: &[i8], total_time: f64) -> BlochState {
    debug_assert_eq!(signs.len(), CONTROL_STEPS);
    let dt = total_time / DEFAULT_ORACLE_STEPS as f64;
    rk4_oracle(s0, delta, step_control(signs, total_time), total_time, dt)
}
