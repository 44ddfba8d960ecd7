//! Position display from the two encoders.
//!
//! The insertion reading is the insertion encoder minus the rotary encoder,
//! scaled by the lead; the rotary reading is the rotary encoder alone. Both
//! are expressed in physical units (mm, degrees).

use crate::drivetrain::{Drivetrain, EncoderMount, EncoderSpec, TransmissionConfig};
use crate::kinematics::ScrewSpec;

/// Position shown to the operator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisplayedPosition {
    /// mm
    pub insertion: f64,
    /// degrees
    pub rotary: f64,
}

/// How the insertion reading behaves while the needle is being rotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObserverMethod {
    /// Hold the insertion reading and stop crediting IE counts.
    #[default]
    Freeze,
    /// Keep both encoders counting and always report IE - RE.
    General,
}

/// Display for raw counts when both encoders share `enc` and `cfg`.
pub fn displayed_position(
    ie_counts: i64,
    re_counts: i64,
    enc: &EncoderSpec,
    cfg: &TransmissionConfig,
    spec: &ScrewSpec,
) -> DisplayedPosition {
    let per_rev = nut_counts_per_rev(enc, cfg);
    let relative = (ie_counts - re_counts) as f64;
    DisplayedPosition {
        insertion: spec.handedness().sign() * spec.lead() * relative / per_rev,
        rotary: 360.0 * re_counts as f64 / per_rev,
    }
}

fn nut_counts_per_rev(enc: &EncoderSpec, cfg: &TransmissionConfig) -> f64 {
    let cpr = f64::from(enc.counts_per_rev());
    match enc.mount() {
        EncoderMount::Nut => cpr,
        EncoderMount::Motor => cpr / cfg.ratio(),
    }
}

/// Display for raw counts on a drivetrain whose two sides may differ.
pub fn drivetrain_display(ie_counts: i64, re_counts: i64, train: &Drivetrain) -> DisplayedPosition {
    let ie_per_rev = nut_counts_per_rev(&train.ie, &train.screw_transmission);
    let re_per_rev = nut_counts_per_rev(&train.re, &train.spline_transmission);
    if ie_per_rev == re_per_rev {
        return displayed_position(
            ie_counts,
            re_counts,
            &train.ie,
            &train.screw_transmission,
            &train.screw,
        );
    }
    let relative = ie_counts as f64 / ie_per_rev - re_counts as f64 / re_per_rev;
    DisplayedPosition {
        insertion: train.screw.handedness().sign() * train.screw.lead() * relative,
        rotary: 360.0 * re_counts as f64 / re_per_rev,
    }
}

/// Bookkeeping that turns hardware counts into the operator display.
///
/// Outside a freeze the insertion reading is the absolute IE - RE value. A
/// released freeze keeps showing the held value until the hardware counts next
/// move, so the reading is continuous at the release and never carries the
/// counts lost while IE was ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverState {
    /// Insertion reading held during a freeze.
    pub held_insertion: Option<f64>,
    /// Held value and the hardware reading at the last release, until the
    /// counts move.
    pub released: Option<(f64, DisplayedPosition)>,
}

impl ObserverState {
    fn current(&self, raw: DisplayedPosition) -> f64 {
        match (self.held_insertion, self.released) {
            (Some(held), _) => held,
            (None, Some((held, at))) if at == raw => held,
            _ => raw.insertion,
        }
    }

    pub fn display(&self, raw: DisplayedPosition) -> DisplayedPosition {
        DisplayedPosition {
            insertion: self.current(raw),
            rotary: raw.rotary,
        }
    }

    pub fn freeze(&mut self, raw: DisplayedPosition) {
        if self.held_insertion.is_none() {
            self.held_insertion = Some(self.current(raw));
            self.released = None;
        }
    }

    /// Release a freeze; the held value stays until the counts move.
    pub fn release(&mut self, raw: DisplayedPosition) {
        if let Some(held) = self.held_insertion.take() {
            self.released = Some((held, raw));
        }
    }

    /// Drop a pending release once the hardware reading has moved on.
    pub fn observe(&mut self, raw: DisplayedPosition) {
        if matches!(self.released, Some((_, at)) if at != raw) {
            self.released = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivetrain::EncoderRole;

    const ENC: EncoderSpec = EncoderSpec::prototype(EncoderRole::Ie);
    const CFG: TransmissionConfig = TransmissionConfig::PROTOTYPE;
    const SPEC: ScrewSpec = ScrewSpec::PROTOTYPE;

    #[test]
    fn equal_counts_read_as_pure_rotation() {
        let d = displayed_position(5000, 5000, &ENC, &CFG, &SPEC);
        assert_eq!(d, DisplayedPosition { insertion: 0.0, rotary: 360.0 });
    }

    #[test]
    fn insertion_is_ie_minus_re() {
        // oracle: lead x (ie - re) / counts_per_rev
        let d = displayed_position(5000, 0, &ENC, &CFG, &SPEC);
        assert_eq!(d.insertion, 20.0 * (5000.0 - 0.0) / 5000.0);
        assert_eq!(d.rotary, 0.0);
        assert_eq!(
            displayed_position(0, 0, &ENC, &CFG, &SPEC),
            DisplayedPosition::default()
        );
    }

    #[test]
    fn freeze_and_release_are_continuous() {
        let mut obs = ObserverState::default();
        let raw = displayed_position(12_500, 0, &ENC, &CFG, &SPEC);
        assert_eq!(obs.display(raw).insertion, 50.0);
        obs.freeze(raw);
        // RE advances, IE held
        let raw = displayed_position(12_500, 5000, &ENC, &CFG, &SPEC);
        assert_eq!(obs.display(raw).insertion, 50.0);
        assert_eq!(obs.display(raw).rotary, 360.0);
        obs.release(raw);
        assert_eq!(obs.display(raw).insertion, 50.0);
        // once the counts move the absolute reading takes over
        let moved = displayed_position(12_501, 5000, &ENC, &CFG, &SPEC);
        obs.observe(moved);
        assert_eq!(obs.released, None);
        assert_eq!(obs.display(moved).insertion, 20.0 * 7501.0 / 5000.0);
        // freezing twice keeps the first held value
        obs.freeze(moved);
        obs.freeze(displayed_position(0, 0, &ENC, &CFG, &SPEC));
        assert_eq!(obs.held_insertion, Some(20.0 * 7501.0 / 5000.0));
    }

    #[test]
    fn unequal_sides_use_per_side_scaling() {
        let train = Drivetrain {
            spline_transmission: TransmissionConfig::new(24, 48).unwrap(),
            re: EncoderSpec::new(
                1250,
                crate::drivetrain::Quadrature::X4,
                EncoderRole::Re,
                EncoderMount::Motor,
            )
            .unwrap(),
            ..Drivetrain::default()
        };
        // 2500 motor counts = half a motor turn = one nut turn at 1:2
        let d = drivetrain_display(5000, 2500, &train);
        approx::assert_abs_diff_eq!(d.insertion, 0.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(d.rotary, 360.0, epsilon = 1e-12);
    }
}
