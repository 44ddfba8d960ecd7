//! Screw/spline differential kinematics.
//!
//! The shaft carries a screw groove and a spline groove. The screw nut and the
//! spline nut are turned independently; the shaft rotates with the spline nut
//! and translates by one lead for every revolution the screw nut gains on the
//! spline nut.
//!
//! Sign convention: with a right-hand thread, a positive relative rotation
//! (screw nut ahead of spline nut) advances the needle (positive insertion).
//!
//! Angles are continuous accumulators in degrees and are never wrapped.

use core::fmt;
use core::ops::{Add, Sub};

/// Default tolerance used by [`classify_motion`] callers, in rpm.
pub const DEFAULT_MODE_TOLERANCE_RPM: f64 = 0.5;

/// Thread hand of the shaft's screw groove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Handedness {
    #[default]
    Right,
    Left,
}

impl Handedness {
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Right => 1.0,
            Handedness::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScrewSpecError {
    NonPositiveLead(f64),
    ZeroStarts,
}

impl fmt::Display for ScrewSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScrewSpecError::NonPositiveLead(lead) => {
                write!(f, "screw lead must be positive and finite, got {lead} mm/rev")
            }
            ScrewSpecError::ZeroStarts => write!(f, "screw must have at least one start"),
        }
    }
}

impl core::error::Error for ScrewSpecError {}

/// Lead-screw geometry.
///
/// Only the lead enters the kinematics; `starts` describes the thread form
/// (a 4-start thread with a 20 mm lead has a 5 mm pitch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewSpec {
    lead: f64,
    starts: u32,
    handedness: Handedness,
}

impl ScrewSpec {
    /// The 4-start 20x20 mm lead screw nut of the prototype.
    pub const PROTOTYPE: ScrewSpec = ScrewSpec {
        lead: 20.0,
        starts: 4,
        handedness: Handedness::Right,
    };

    pub fn new(lead: f64, starts: u32, handedness: Handedness) -> Result<Self, ScrewSpecError> {
        if !(lead.is_finite() && lead > 0.0) {
            return Err(ScrewSpecError::NonPositiveLead(lead));
        }
        if starts == 0 {
            return Err(ScrewSpecError::ZeroStarts);
        }
        Ok(Self {
            lead,
            starts,
            handedness,
        })
    }

    /// Axial travel per relative revolution, mm/rev.
    pub fn lead(&self) -> f64 {
        self.lead
    }

    pub fn starts(&self) -> u32 {
        self.starts
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    /// Axial distance between adjacent thread crests, mm.
    pub fn pitch(&self) -> f64 {
        self.lead / f64::from(self.starts)
    }

    /// Signed lead: insertion per degree of relative rotation times 360.
    fn signed_lead(&self) -> f64 {
        self.handedness.sign() * self.lead
    }
}

impl Default for ScrewSpec {
    fn default() -> Self {
        Self::PROTOTYPE
    }
}

/// Rotation of the two nuts, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NutAngles {
    pub screw: f64,
    pub spline: f64,
}

impl NutAngles {
    pub const fn new(screw: f64, spline: f64) -> Self {
        Self { screw, spline }
    }
}

impl Add for NutAngles {
    type Output = NutAngles;

    fn add(self, rhs: Self) -> Self {
        NutAngles::new(self.screw + rhs.screw, self.spline + rhs.spline)
    }
}

impl Sub for NutAngles {
    type Output = NutAngles;

    fn sub(self, rhs: Self) -> Self {
        NutAngles::new(self.screw - rhs.screw, self.spline - rhs.spline)
    }
}

/// Needle pose: insertion depth in mm and needle rotation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShaftPose {
    pub insertion: f64,
    pub rotation: f64,
}

impl ShaftPose {
    pub const fn new(insertion: f64, rotation: f64) -> Self {
        Self {
            insertion,
            rotation,
        }
    }
}

impl Add for ShaftPose {
    type Output = ShaftPose;

    fn add(self, rhs: Self) -> Self {
        ShaftPose::new(self.insertion + rhs.insertion, self.rotation + rhs.rotation)
    }
}

impl Sub for ShaftPose {
    type Output = ShaftPose;

    fn sub(self, rhs: Self) -> Self {
        ShaftPose::new(self.insertion - rhs.insertion, self.rotation - rhs.rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionMode {
    /// Screw nut turns, spline nut held: pure translation.
    Linear,
    /// Both nuts at the same speed and direction: pure rotation.
    Rotary,
    /// Any other combination: coupled translation and rotation.
    Spiral,
    Idle,
}

/// Shaft pose produced by the given nut angles.
pub fn forward_kinematics(nuts: NutAngles, spec: &ScrewSpec) -> ShaftPose {
    ShaftPose {
        insertion: spec.signed_lead() * (nuts.screw - nuts.spline) / 360.0,
        rotation: nuts.spline,
    }
}

/// Nut angles that produce `pose`.
pub fn inverse_kinematics(pose: ShaftPose, spec: &ScrewSpec) -> NutAngles {
    NutAngles {
        screw: pose.rotation + pose.insertion * 360.0 / spec.signed_lead(),
        spline: pose.rotation,
    }
}

/// Classify the shaft motion produced by a pair of nut speeds.
///
/// A negative tolerance is treated as zero.
pub fn classify_motion(screw_rate: f64, spline_rate: f64, tol: f64) -> MotionMode {
    let tol = tol.max(0.0);
    let screw_still = screw_rate.abs() <= tol;
    let spline_still = spline_rate.abs() <= tol;
    if screw_still && spline_still {
        MotionMode::Idle
    } else if spline_still {
        MotionMode::Linear
    } else if (screw_rate - spline_rate).abs() <= tol {
        MotionMode::Rotary
    } else {
        MotionMode::Spiral
    }
}
