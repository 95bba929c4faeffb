use wavetrain::adjoint::{
    effective_matrix, forward_sample, sample_gradient, sgd_step, train_medium, GradientForm, LearningRate,
    MediumExperimentConfig, MediumLayout, TargetSpec,
};
use wavetrain::helmholtz::SolverOptions;
use wavetrain::random::{random_complex_matrix, random_complex_vector};
use wavetrain::{RngSeed, Role};

fn small_layout() -> MediumLayout {
    MediumLayout {
        emitters: 2,
        receivers: 2,
        transducer_pitch: 1.5,
        trainable_width: 2.0,
        trainable_height: 2.5,
        band_cells: 8,
        band_margin: 1.0,
        gap: 0.8,
        ..MediumLayout::default()
    }
}

#[test]
fn small_gradient_step_lowers_cost_for_most_samples() {
    let setup = small_layout().build().unwrap();
    let opts = SolverOptions::with_tolerance(1e-10);
    let w0 = effective_matrix(&setup.medium, &setup.emitters, &setup.receivers, &opts).unwrap();
    let mut rng = RngSeed(21).rng();
    let target = random_complex_matrix(2, 2, &mut rng).unwrap();
    let target = target.scale((w0.frobenius_norm() / target.frobenius_norm()).into());
    let trials = 8;
    let mut descents = 0;
    for _ in 0..trials {
        let a = random_complex_vector(2, &mut rng).unwrap();
        let o_t = target.mul_vec(&a).unwrap();
        let (fwd, grad) = sample_gradient(
            &setup.medium,
            &setup.emitters,
            &setup.receivers,
            &a,
            &o_t,
            GradientForm::Full,
            &opts,
        )
        .unwrap();
        // step small enough that the first-order model predicts a 1 % drop
        let slope: f64 = grad.values().iter().zip(grad.cell_derivatives()).map(|(g, d)| g * d).sum();
        let eta = 0.01 * fwd.cost / slope;
        let stepped = sgd_step(&setup.medium, &grad, eta).unwrap();
        let after = forward_sample(&stepped, &setup.emitters, &setup.receivers, &a, &o_t, &opts).unwrap();
        let drop = (fwd.cost - after.cost) / fwd.cost;
        if drop > 0.005 && drop < 0.015 {
            descents += 1;
        }
    }
    assert_eq!(descents, trials, "first-order prediction held in {descents}/{trials} samples");
}

// The receivers sit roughly 1e-6 below the near field of the emitters, so a
// residual tolerance `tol` leaves about 1e3·tol relative error in a coupling.
// Both checks below run at 1e-12 and allow 1e-8 relative; a genuine asymmetry
// or nonlinearity shows up at order one.
const READOUT_TOL: f64 = 1e-12;
const READOUT_REL: f64 = 1e-8;

#[test]
fn effective_matrix_is_linear_map() {
    let setup = small_layout().build().unwrap();
    let opts = SolverOptions::with_tolerance(READOUT_TOL);
    let w = effective_matrix(&setup.medium, &setup.emitters, &setup.receivers, &opts).unwrap();
    let a = random_complex_vector(2, &mut RngSeed(5).rng()).unwrap();
    let direct = forward_sample(&setup.medium, &setup.emitters, &setup.receivers, &a, &w.mul_vec(&a).unwrap(), &opts)
        .unwrap();
    let scale = w.frobenius_norm() * a.norm();
    let miss = direct.cost.sqrt() / scale;
    assert!(miss <= READOUT_REL, "relative mismatch {miss:e}");
}

#[test]
fn swapping_roles_transposes_the_matrix() {
    let setup = small_layout().build().unwrap();
    let opts = SolverOptions::with_tolerance(READOUT_TOL);
    let fwd = effective_matrix(&setup.medium, &setup.emitters, &setup.receivers, &opts).unwrap();
    let rx_as_tx = setup.receivers.array().with_role(Role::Emitter).sample(setup.medium.geometry()).unwrap();
    let tx_as_rx = setup.emitters.array().with_role(Role::Receiver).sample(setup.medium.geometry()).unwrap();
    let rev = effective_matrix(&setup.medium, &rx_as_tx, &tx_as_rx, &opts).unwrap();
    let scale = fwd.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rel = rev.max_abs_diff(&fwd.transpose()).unwrap() / scale;
    assert!(rel <= READOUT_REL, "relative mismatch {rel:e}");
}

#[test]
fn short_training_run_cuts_error() {
    let cfg = MediumExperimentConfig {
        layout: small_layout(),
        target: TargetSpec::Matched { factor: 1.0 },
        iterations: 60,
        ..MediumExperimentConfig::default()
    };
    let out = train_medium(&cfg).unwrap();
    assert_eq!(out.record.len(), 60);
    assert!(out.eta0 > 0.0);
    assert!(
        out.record.trailing_mean(10) < 0.5 * out.record.leading_mean(10),
        "leading {} trailing {}",
        out.record.leading_mean(10),
        out.record.trailing_mean(10)
    );
    // the band and the frozen cells never move
    for ((k0, k1), &t) in out.initial_medium.k_real().iter().zip(out.medium.k_real()).zip(out.medium.trainable_mask()) {
        if !t {
            assert_eq!(k0, k1);
        }
    }
    assert_eq!(out.initial_medium.k_imag(), out.medium.k_imag());
}

#[test]
fn zero_learning_rate_leaves_medium_untouched() {
    let cfg = MediumExperimentConfig {
        layout: small_layout(),
        target: TargetSpec::Matched { factor: 1.0 },
        iterations: 3,
        learning_rate: LearningRate::Fixed(0.0),
        ..MediumExperimentConfig::default()
    };
    let out = train_medium(&cfg).unwrap();
    assert_eq!(out.medium, out.initial_medium);
    let s = out.record.nrmse_series();
    assert!(s.iter().all(|x| x.is_finite()));
}
