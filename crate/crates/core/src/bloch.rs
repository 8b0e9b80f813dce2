//! Exact dynamics of the driven two-level system in Bloch coordinates.
//!
//! The state evolves as
//!
//! ```text
//! dx/dt = -Δ y
//! dy/dt =  Δ x - u z
//! dz/dt =  u y
//! ```
//!
//! with the control bounded by `|u| <= 1`. For a constant control `u = ε = ±1`
//! the system is a rotation about the axis `(ε, 0, Δ)` at angular frequency
//! `Ω = sqrt(1 + Δ²)`, which [`propagate_bang`] evaluates in closed form.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Number of equal control steps in a protocol.
pub const CONTROL_STEPS: usize = 100;

/// Tolerance on `|c1|² + |c2|² = 1` accepted by [`bloch_from_amplitudes`].
pub const AMPLITUDE_NORM_TOL: f64 = 1e-9;

const ARCCOS_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlochError {
    #[error("offset must be finite, got {0}")]
    NonFiniteOffset(f64),
    #[error("offset {0} outside the two-bang regime |Δ| <= 1")]
    OffsetOutOfRange(f64),
    #[error("amplitudes not normalized: |c1|²+|c2|² = {0}")]
    Unnormalized(f64),
    #[error("protocol needs {CONTROL_STEPS} signs in {{-1, +1}}, got {0}")]
    InvalidControl(String),
    #[error("duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
}

/// Point `(x, y, z)` on the unit Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    /// Ground state `ψ = (1, 0)`.
    pub const NORTH: BlochState = BlochState { x: 0.0, y: 0.0, z: 1.0 };
    /// Excited state `ψ = (0, 1)`, the transfer target.
    pub const SOUTH: BlochState = BlochState { x: 0.0, y: 0.0, z: -1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Largest per-component absolute difference.
    pub fn max_abs_diff(&self, other: &BlochState) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

impl fmt::Display for BlochState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.12}, {:.12}, {:.12})", self.x, self.y, self.z)
    }
}

/// Detuning Δ between drive and transition frequency.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Offset(f64);

impl Offset {
    pub fn new(delta: f64) -> Result<Self, BlochError> {
        if delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(BlochError::NonFiniteOffset(delta))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `Ω = sqrt(1 + Δ²)`.
    pub fn omega(self) -> f64 {
        (1.0 + self.0 * self.0).sqrt()
    }
}

impl TryFrom<f64> for Offset {
    type Error = BlochError;

    fn try_from(delta: f64) -> Result<Self, Self::Error> {
        Offset::new(delta)
    }
}

/// `Ω = sqrt(1 + Δ²)`, rejecting non-finite offsets.
pub fn omega(delta: f64) -> Result<f64, BlochError> {
    Offset::new(delta).map(Offset::omega)
}

/// Control sign `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Constant control `u = ε` held for `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangSegment {
    pub sign: Sign,
    pub duration: f64,
}

impl BangSegment {
    pub fn new(sign: Sign, duration: f64) -> Result<Self, BlochError> {
        if duration.is_finite() && duration >= 0.0 {
            Ok(Self { sign, duration })
        } else {
            Err(BlochError::InvalidDuration(duration))
        }
    }
}

/// Evolves `s0` under a constant control for `seg.duration`.
///
/// With `A = y0` and `B = (Δ x0 - ε z0) / Ω`:
///
/// ```text
/// y(t) = A cos(Ωt) + B sin(Ωt)
/// x(t) = x0 - ΔB/Ω - (Δ/Ω)(A sin(Ωt) - B cos(Ωt))
/// z(t) = z0 + εB/Ω + (ε/Ω)(A sin(Ωt) - B cos(Ωt))
/// ```
///
/// A zero duration returns `s0` untouched.
pub fn propagate_bang(s0: BlochState, delta: Offset, seg: BangSegment) -> BlochState {
    if seg.duration == 0.0 {
        return s0;
    }
    let d = delta.value();
    let eps = seg.sign.value();
    let w = delta.omega();
    let a = s0.y;
    let b = (d * s0.x - eps * s0.z) / w;
    let (sin, cos) = (w * seg.duration).sin_cos();
    let s = a * sin - b * cos;
    BlochState {
        x: s0.x - d * b / w - (d / w) * s,
        y: a * cos + b * sin,
        z: s0.z + eps * b / w + (eps / w) * s,
    }
}

/// Applies the 100-step sign sequence, each step lasting `total_time / 100`.
pub fn propagate_signs(
    s0: BlochState,
    delta: Offset,
    signs: &[i8],
    total_time: f64,
) -> Result<BlochState, BlochError> {
    if signs.len() != CONTROL_STEPS {
        return Err(BlochError::InvalidControl(format!(
            "length {}",
            signs.len()
        )));
    }
    if !(total_time.is_finite() && total_time >= 0.0) {
        return Err(BlochError::InvalidDuration(total_time));
    }
    let step = total_time / CONTROL_STEPS as f64;
    let mut s = s0;
    for &u in signs {
        let sign = Sign::from_i8(u)
            .ok_or_else(|| BlochError::InvalidControl(format!("value {u}")))?;
        s = propagate_bang(s, delta, BangSegment { sign, duration: step });
    }
    Ok(s)
}

/// Euclidean distance to the south pole `(0, 0, -1)`.
pub fn target_distance(s: BlochState) -> f64 {
    (s.x * s.x + s.y * s.y + (s.z + 1.0) * (s.z + 1.0)).sqrt()
}

/// Bang durations of the two-arc north-to-south transfer and the total time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTimes {
    pub t1: f64,
    pub t2: f64,
    pub t_star: f64,
}

/// `t1 = (π - arccos Δ²)/Ω`, `t2 = (π + arccos Δ²)/Ω`, `t* = 2π/Ω`.
pub fn optimal_times(delta: f64) -> Result<OptimalTimes, BlochError> {
    let offset = Offset::new(delta)?;
    let sq = delta * delta;
    if sq > 1.0 + ARCCOS_SLACK {
        return Err(BlochError::OffsetOutOfRange(delta));
    }
    let w = offset.omega();
    let acos = sq.min(1.0).acos();
    Ok(OptimalTimes {
        t1: (PI - acos) / w,
        t2: (PI + acos) / w,
        t_star: 2.0 * PI / w,
    })
}

/// Protocol duration `T = t*(Δ) = 2π/Ω` used for every dataset record.
pub fn protocol_time(delta: Offset) -> f64 {
    2.0 * PI / delta.omega()
}

/// Maps amplitudes `(c1, c2)` to Bloch coordinates
/// `x = 2 Re(c1* c2)`, `y = 2 Im(c1* c2)`, `z = |c1|² - |c2|²`.
///
/// This is the expectation of the Pauli operators, the convention under
/// which `i dψ/dt = ½(Δσz + uσx) ψ` reproduces the Bloch equations above.
pub fn bloch_from_amplitudes(c1: Complex64, c2: Complex64) -> Result<BlochState, BlochError> {
    let n = c1.norm_sqr() + c2.norm_sqr();
    if !((n - 1.0).abs() <= AMPLITUDE_NORM_TOL) {
        return Err(BlochError::Unnormalized(n));
    }
    let rho = c1.conj() * c2;
    Ok(BlochState {
        x: 2.0 * rho.re,
        y: 2.0 * rho.im,
        z: c1.norm_sqr() - c2.norm_sqr(),
    })
}
