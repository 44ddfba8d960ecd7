use diffdrive_core::control::{ControllerMode, DEFAULT_CONTROL_PERIOD};
use diffdrive_core::drivetrain::{
    DriveState, Drivetrain, EncoderSpec, EncoderState, MotorCommand, MotorRole, Quadrature,
};
use diffdrive_core::experiments::{axis_speed, run_drift_experiment, Axis};
use diffdrive_core::kinematics::{
    forward_kinematics, inverse_kinematics, Handedness, NutAngles, ScrewSpec, ShaftPose,
};
use diffdrive_core::sim::{SimConfig, Simulator};
use proptest::prelude::*;

fn screw_spec() -> impl Strategy<Value = ScrewSpec> {
    (0.5f64..50.0, 1u32..6, any::<bool>()).prop_map(|(lead, starts, right)| {
        let hand = if right { Handedness::Right } else { Handedness::Left };
        ScrewSpec::new(lead, starts, hand).unwrap()
    })
}

/// Angles on a 1/64 degree grid: sums and differences stay exact in f64.
fn grid_angle() -> impl Strategy<Value = f64> {
    (-2_000_000i64..2_000_000).prop_map(|k| k as f64 / 64.0)
}

proptest! {
    #[test]
    fn inverse_then_forward_is_identity(
        insertion in -400.0f64..400.0,
        rotation in -1.0e4f64..1.0e4,
        spec in screw_spec(),
    ) {
        let pose = ShaftPose::new(insertion, rotation);
        let back = forward_kinematics(inverse_kinematics(pose, &spec), &spec);
        prop_assert!((back.insertion - insertion).abs() <= 1e-9);
        prop_assert!((back.rotation - rotation).abs() <= 1e-9);
    }

    #[test]
    fn equal_increments_leave_insertion_unchanged(
        screw in grid_angle(),
        spline in grid_angle(),
        delta in grid_angle(),
        spec in screw_spec(),
    ) {
        let before = forward_kinematics(NutAngles::new(screw, spline), &spec);
        let after = forward_kinematics(NutAngles::new(screw + delta, spline + delta), &spec);
        prop_assert_eq!(before.insertion, after.insertion);
        prop_assert_eq!(after.rotation, spline + delta);
    }

    #[test]
    fn forward_kinematics_is_linear(
        a in (-1.0e4f64..1.0e4, -1.0e4f64..1.0e4),
        b in (-1.0e4f64..1.0e4, -1.0e4f64..1.0e4),
        spec in screw_spec(),
    ) {
        let a = NutAngles::new(a.0, a.1);
        let b = NutAngles::new(b.0, b.1);
        let sum = forward_kinematics(a + b, &spec);
        let parts = forward_kinematics(a, &spec) + forward_kinematics(b, &spec);
        prop_assert!((sum.insertion - parts.insertion).abs() <= 1e-9);
        prop_assert!((sum.rotation - parts.rotation).abs() <= 1e-9);
    }

    #[test]
    fn doubling_lead_doubles_insertion(
        screw in -1.0e4f64..1.0e4,
        spline in -1.0e4f64..1.0e4,
        lead in 0.5f64..50.0,
    ) {
        let single = ScrewSpec::new(lead, 4, Handedness::Right).unwrap();
        let double = ScrewSpec::new(2.0 * lead, 4, Handedness::Right).unwrap();
        let nuts = NutAngles::new(screw, spline);
        let p1 = forward_kinematics(nuts, &single);
        let p2 = forward_kinematics(nuts, &double);
        prop_assert!((p2.insertion - 2.0 * p1.insertion).abs() <= 1e-9 * (1.0 + p1.insertion.abs()));
        prop_assert_eq!(p1.rotation, p2.rotation);
    }

    #[test]
    fn encoder_error_below_one_quantum(
        angles in prop::collection::vec(-5000.0f64..5000.0, 1..200),
        lines in 1u32..5000,
        quad in prop::sample::select(vec![Quadrature::X1, Quadrature::X2, Quadrature::X4]),
    ) {
        let spec = EncoderSpec::new(
            lines,
            quad,
            diffdrive_core::drivetrain::EncoderRole::Ie,
            diffdrive_core::drivetrain::EncoderMount::Nut,
        ).unwrap();
        let cpr = f64::from(spec.counts_per_rev());
        let mut e = EncoderState::new();
        for angle in angles {
            e = e.sample(&spec, angle);
            let measured = e.counts as f64 / cpr * 360.0;
            prop_assert!((measured - angle).abs() < spec.quantum_deg() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn actual_speed_never_exceeds_cap(
        commands in prop::collection::vec((-500.0f64..500.0, -500.0f64..500.0, any::<bool>()), 1..50),
        eps in -0.099f64..0.099,
    ) {
        let train = Drivetrain::default();
        let mut s = DriveState::default().with_speed_mismatch(eps).unwrap();
        for (im, rm, enabled) in commands {
            let mut cmd = MotorCommand::signed(MotorRole::Insertion, im);
            cmd.enabled = enabled;
            s.insertion_motor.apply_command(&cmd, &train.insertion_motor);
            s.rotary_motor.apply_command(&MotorCommand::signed(MotorRole::Rotary, rm), &train.rotary_motor);
            s = train.step(&s, 0.001).unwrap();
            let im_cap = train.insertion_motor.real_speed_cap() * s.insertion_motor.mismatch_factor;
            prop_assert!(s.insertion_motor.actual_speed.abs() <= im_cap + 1e-12);
            prop_assert!(s.rotary_motor.actual_speed.abs() <= train.rotary_motor.real_speed_cap() + 1e-12);
            prop_assert!(s.insertion_motor.commanded_speed <= train.insertion_motor.real_speed_cap());
            if !enabled {
                prop_assert_eq!(s.insertion_motor.actual_speed, 0.0);
            }
            // composition consistency
            prop_assert_eq!(s.pose, forward_kinematics(s.nuts, &train.screw));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_loop_reaches_and_holds_target(
        insertion in -150.0f64..150.0,
    ) {
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(&cfg).unwrap();
        sim.set_insertion_target(insertion);
        let settled = sim.run_until_settled(10.0).unwrap();
        let bound = insertion.abs() / axis_speed(Axis::Insertion, &cfg) + 5.0 * DEFAULT_CONTROL_PERIOD;
        prop_assert!(settled <= bound + 1e-9, "target {} settled {} bound {}", insertion, settled, bound);
        for _ in 0..100 {
            let out = sim.tick().unwrap();
            prop_assert!(!out.insertion.enabled && !out.rotary.enabled);
            prop_assert!((sim.display().insertion - insertion).abs() <= cfg.controller.insertion_tol);
            prop_assert!((sim.drive().pose.insertion - insertion).abs()
                <= cfg.controller.insertion_tol + cfg.drivetrain.insertion_quantum());
        }
    }

    #[test]
    fn rotation_enabled_reaches_rotary_target(
        rotary in -1500.0f64..1500.0,
    ) {
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(&cfg).unwrap();
        sim.set_rotation_enable(true);
        sim.set_rotary_target(rotary);
        let settled = sim.run_until_settled(10.0).unwrap();
        let bound = rotary.abs() / axis_speed(Axis::Rotary, &cfg) + 5.0 * DEFAULT_CONTROL_PERIOD;
        prop_assert!(settled <= bound + 1e-9, "target {} settled {} bound {}", rotary, settled, bound);
        prop_assert!((sim.drive().pose.rotation - rotary).abs() <= 0.5 + 0.072);
        prop_assert_eq!(sim.mode(), ControllerMode::RotationEnabled);
        prop_assert_eq!(sim.drive().pose.insertion, 0.0);
    }

    #[test]
    fn commands_never_exceed_cap(
        targets in prop::collection::vec((-100.0f64..100.0, -720.0f64..720.0, any::<bool>()), 1..4),
        eps in -0.05f64..0.05,
        pid in any::<bool>(),
    ) {
        let mut cfg = SimConfig { mismatch: eps, ..SimConfig::default() };
        cfg.controller.pid_enabled = pid;
        let mut sim = Simulator::new(&cfg).unwrap();
        for (ins, rot, rotate) in targets {
            sim.set_rotation_enable(rotate);
            sim.set_insertion_target(ins);
            sim.set_rotary_target(rot);
            for _ in 0..50 {
                let out = sim.tick().unwrap();
                prop_assert!(out.insertion.speed <= cfg.drivetrain.insertion_motor.real_speed_cap());
                prop_assert!(out.rotary.speed <= cfg.drivetrain.rotary_motor.real_speed_cap());
            }
        }
    }
}

#[test]
fn drift_is_proportional_to_mismatch() {
    let cfg = SimConfig::default();
    let lead = cfg.drivetrain.screw.lead();
    let slopes: Vec<f64> = [0.005, 0.015, 0.03]
        .iter()
        .map(|&eps| {
            let d = run_drift_experiment(7, eps, &cfg).unwrap();
            d.insertion_drift / eps
        })
        .collect();
    for s in &slopes {
        // slope = lead * revolutions
        assert!((s - lead * 7.0).abs() / (lead * 7.0) < 0.01, "slopes {slopes:?}");
    }
}

#[test]
fn trajectories_are_bit_identical() {
    let run = || {
        let cfg = SimConfig {
            mismatch: 0.015,
            ..SimConfig::default()
        };
        let mut sim = Simulator::new(&cfg).unwrap();
        let mut trace = Vec::new();
        sim.set_insertion_target(37.0);
        sim.set_rotary_target(-45.0);
        for k in 0..400 {
            if k == 150 {
                sim.set_rotation_enable(true);
                sim.set_rotary_target(700.0);
            }
            sim.tick().unwrap();
            let d = sim.drive();
            trace.push((
                d.pose.insertion.to_bits(),
                d.pose.rotation.to_bits(),
                d.ie.counts,
                d.re.counts,
                d.time.to_bits(),
            ));
        }
        trace
    };
    assert_eq!(run(), run());
}

#[test]
fn time_is_non_decreasing_and_pose_consistent() {
    let train = Drivetrain::default();
    let mut s = DriveState::default();
    s.insertion_motor
        .apply_command(&MotorCommand::signed(MotorRole::Insertion, 40.0), &train.insertion_motor);
    s.rotary_motor
        .apply_command(&MotorCommand::signed(MotorRole::Rotary, -25.0), &train.rotary_motor);
    let mut t = s.time;
    for _ in 0..5000 {
        s = train.step(&s, 0.001).unwrap();
        assert!(s.time >= t);
        t = s.time;
        assert_eq!(s.pose, forward_kinematics(s.nuts, &train.screw));
    }
}
