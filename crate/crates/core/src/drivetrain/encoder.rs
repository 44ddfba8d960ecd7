//! Quadrature encoder sampled from a continuous angle.
//!
//! Counts are derived from the true angle rather than by simulating edges:
//! `floor(angle / 360 * counts_per_rev)`. At steady speed this is equivalent
//! to an edge counter and the count error stays below one quantum. Flooring
//! (rather than truncation) keeps the quantisation error one-sided around
//! zero, so the difference of two encoders is also within one quantum.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderRole {
    /// Insertion encoder.
    Ie,
    /// Rotary encoder.
    Re,
}

/// Edges decoded per line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    X1,
    X2,
    #[default]
    X4,
}

impl Quadrature {
    pub fn multiplier(self) -> u32 {
        match self {
            Quadrature::X1 => 1,
            Quadrature::X2 => 2,
            Quadrature::X4 => 4,
        }
    }

    pub fn from_multiplier(m: u32) -> Option<Self> {
        match m {
            1 => Some(Quadrature::X1),
            2 => Some(Quadrature::X2),
            4 => Some(Quadrature::X4),
            _ => None,
        }
    }
}

/// Which shaft the code wheel is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncoderMount {
    /// On the nut, after the belt stage.
    #[default]
    Nut,
    /// On the motor back-shaft, before the belt stage.
    Motor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncoderSpecError {
    ZeroLines,
}

impl fmt::Display for EncoderSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderSpecError::ZeroLines => write!(f, "encoder must have at least one line per revolution"),
        }
    }
}

impl core::error::Error for EncoderSpecError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSpec {
    lines_per_rev: u32,
    quadrature: Quadrature,
    role: EncoderRole,
    mount: EncoderMount,
}

impl EncoderSpec {
    /// 1250-line optical encoder read in x4 quadrature, nut mounted.
    pub const fn prototype(role: EncoderRole) -> EncoderSpec {
        EncoderSpec {
            lines_per_rev: 1250,
            quadrature: Quadrature::X4,
            role,
            mount: EncoderMount::Nut,
        }
    }

    pub fn new(
        lines_per_rev: u32,
        quadrature: Quadrature,
        role: EncoderRole,
        mount: EncoderMount,
    ) -> Result<Self, EncoderSpecError> {
        if lines_per_rev == 0 {
            return Err(EncoderSpecError::ZeroLines);
        }
        Ok(Self {
            lines_per_rev,
            quadrature,
            role,
            mount,
        })
    }

    pub fn lines_per_rev(&self) -> u32 {
        self.lines_per_rev
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn role(&self) -> EncoderRole {
        self.role
    }

    pub fn mount(&self) -> EncoderMount {
        self.mount
    }

    pub fn with_role(self, role: EncoderRole) -> Self {
        Self { role, ..self }
    }

    pub fn counts_per_rev(&self) -> u32 {
        self.lines_per_rev * self.quadrature.multiplier()
    }

    /// Smallest resolvable rotation of the encoded shaft, degrees.
    pub fn quantum_deg(&self) -> f64 {
        360.0 / f64::from(self.counts_per_rev())
    }

    /// Absolute count position of `angle` relative to the origin.
    pub fn count_of(&self, angle: f64) -> i64 {
        libm::floor(angle * f64::from(self.counts_per_rev()) / 360.0) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EncoderState {
    /// Counts reported to the controller. Held while counting is disabled.
    pub counts: i64,
    /// Hardware edge position; always tracks the shaft.
    pub raw_counts: i64,
    pub counting_enabled: bool,
    pub last_true_angle: f64,
}

impl EncoderState {
    /// Counting encoder at the origin.
    pub fn new() -> Self {
        Self {
            counting_enabled: true,
            ..Self::default()
        }
    }

    /// Sample the shaft at `true_angle`.
    ///
    /// While counting, reported counts follow the hardware counter
    /// incrementally; while frozen they are held and the edges in between are
    /// never credited.
    pub fn sample(&self, spec: &EncoderSpec, true_angle: f64) -> EncoderState {
        let raw = spec.count_of(true_angle);
        let counts = if self.counting_enabled {
            self.counts + (raw - self.raw_counts)
        } else {
            self.counts
        };
        EncoderState {
            counts,
            raw_counts: raw,
            counting_enabled: self.counting_enabled,
            last_true_angle: true_angle,
        }
    }
}

/// Free-function form of [`EncoderState::sample`].
pub fn encoder_sample(e: &EncoderState, spec: &EncoderSpec, true_angle: f64) -> EncoderState {
    e.sample(spec, true_angle)
}
