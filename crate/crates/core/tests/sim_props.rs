use legform_core::sim::{
    evaluate, fitness, fitness_from_trace, joint_angles, JointAngles, LegModel, StaticPose, Trajectory, STANDARD_STEPS,
};
use legform_core::{GridDims, LegRig, MediumModel, StepTrajectory, TorqueTrace, VoxelGrid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn phase_deltas_are_bounded() {
    let bound = 60.0 / 999.0 + 1e-12;
    for step in 1..STANDARD_STEPS {
        let (a, b) = (joint_angles(step - 1).unwrap(), joint_angles(step).unwrap());
        for (x, y) in [(a.coxa, b.coxa), (a.femur, b.femur), (a.tibia, b.tibia)] {
            assert!((y - x).abs() <= bound, "step {step}: {x} -> {y}");
        }
    }
}

#[test]
fn phase_boundaries_hold_end_points() {
    assert_eq!(joint_angles(999).unwrap(), joint_angles(1000).unwrap());
    assert_eq!(joint_angles(1999).unwrap(), joint_angles(2000).unwrap());
    assert_eq!(StepTrajectory::default().n_steps(), 3000);
}

proptest! {
    #[test]
    fn fitness_falls_as_occupancy_rises(t in 1e-6f64..1e3, d1 in 0.0f64..100.0, extra in 1e-6f64..50.0) {
        prop_assert!(fitness(t, d1 + extra) < fitness(t, d1));
    }

    #[test]
    fn trace_fitness_is_the_formula(values in prop::collection::vec(0.0f64..5.0, 1..40), delta in 0.0f64..100.0) {
        prop_assume!(values.iter().sum::<f64>() > 0.0);
        let trace = TorqueTrace::from_joint_torques(values.iter().map(|&v| [v, -v / 2.0, 0.0]).collect());
        let mean = values.iter().map(|v| 1.5 * v).sum::<f64>() / values.len() as f64;
        let f = fitness_from_trace(&trace, delta).unwrap();
        prop_assert!((f - 1.0 / (mean + mean * delta / 5.0)).abs() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn static_gravity_torque_grows_with_mass(seed in any::<u64>()) {
        let dims = GridDims::new(4, 8, 4, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rig = LegRig::default();
        let dry = MediumModel { terrain_height: -1e6, ..MediumModel::soil() };
        let pose = StaticPose { angles: JointAngles::new(0.0, 0.0, 0.0), n_steps: 1, dt: 1e-3 };
        let mut grid = VoxelGrid::empty(dims);
        grid.set(0, 7, 0, true);
        let mut last = 0.0;
        for _ in 0..20 {
            grid.set(rng.random_range(0..4), rng.random_range(0..8), rng.random_range(0..4), true);
            let tau = LegModel::new(&rig, &grid).unwrap().joint_torques(&pose, &dry, 0).unwrap()[1].abs();
            prop_assert!(tau >= last);
            last = tau;
        }
    }
}

#[test]
fn submerged_torque_opposes_sweep() {
    // during the sweep the coxa drives the leg backwards; resistance pushes it forwards
    let grid = VoxelGrid::full(GridDims::new(4, 32, 4, 5.0).unwrap());
    let rig = LegRig { gravity: 0.0, ..LegRig::default() };
    let model = LegModel::new(&rig, &grid).unwrap();
    let tau = model.joint_torques(&StepTrajectory::default(), &MediumModel::soil(), 1500).unwrap();
    assert!(tau[0] > 0.0);
}

#[test]
fn fluid_prefers_slim_columns() {
    let dims = GridDims::default();
    let column = VoxelGrid::from_fn(dims, |x, _, z| x == 8 && z == 8);
    let block = VoxelGrid::full(dims);
    let traj = StepTrajectory::default();
    let (fc, _) = evaluate(&column, &LegRig::default(), &traj, &MediumModel::fluid()).unwrap();
    let (fb, _) = evaluate(&block, &LegRig::default(), &traj, &MediumModel::fluid()).unwrap();
    assert!(fc > fb);
}
