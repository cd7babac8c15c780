use giantstep_core::analysis::{alignment_report, spike_bulk};
use giantstep_core::hermite::{factorial, he_poly, Quadrature};
use giantstep_core::network::{gradient_matrix, init_symmetric, ridge_dual, ridge_primal, ridge_second_layer, train_first_layer};
use giantstep_core::rng::{fill_gaussian, substream, Purpose};
use giantstep_core::target::{gaussian_inputs, sample_dataset};
use giantstep_core::{Activation, Link, Mat, MultiIndexTarget, SecondLayerDist, TrainConfig, Vector};
use proptest::prelude::*;

fn gaussian_mat(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = substream(seed, Purpose::MonteCarlo, 99);
    let mut v = vec![0.0; rows * cols];
    fill_gaussian(&mut rng, &mut v);
    Mat::from_vec(rows, cols, v)
}

fn orthogonal(d: usize, seed: u64) -> Mat {
    gaussian_mat(d, d, seed).qr().q()
}

fn target(link: &str, d: usize) -> MultiIndexTarget {
    MultiIndexTarget::aligned(Link::Polynomial(link.parse().unwrap()), d).unwrap()
}

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Relu), Just(Activation::Erf), Just(Activation::Tanh), (1u32..4).prop_map(Activation::Hermite)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermite_polynomials_are_orthogonal(j in 0u32..14, k in 0u32..14) {
        let q = Quadrature::gauss_hermite(40);
        let v = q.integrate(|x| he_poly(j, x) * he_poly(k, x));
        let exact = if j == k { factorial(k) } else { 0.0 };
        prop_assert!((v - exact).abs() <= 1e-9 * factorial(j.max(k)));
    }

    #[test]
    fn alignment_ignores_row_scale(seed in any::<u64>(), scales in prop::collection::vec(0.01f64..100.0, 6)) {
        let t = target("z1 + z2*z3", 9);
        let w = gaussian_mat(6, 9, seed);
        let scaled = Mat::from_fn(6, 9, |i, j| w[(i, j)] * scales[i]);
        let (a, b) = (alignment_report(&w, &t).unwrap(), alignment_report(&scaled, &t).unwrap());
        for (x, y) in a.neurons.iter().zip(&b.neurons) {
            prop_assert!((x.ratio.unwrap() - y.ratio.unwrap()).abs() < 1e-12);
            for (c, e) in x.cosines.as_ref().unwrap().iter().zip(y.cosines.as_ref().unwrap()) {
                prop_assert!((c - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alignment_is_rotation_invariant(seed in any::<u64>()) {
        let d = 7;
        let t = target("z1 + z1*z2", d);
        let q = orthogonal(d, seed);
        let rotated = MultiIndexTarget::new(t.teacher() * q.transpose(), t.link().clone()).unwrap();
        let w = gaussian_mat(5, d, seed ^ 1);
        let a = alignment_report(&w, &t).unwrap();
        let b = alignment_report(&(&w * q.transpose()), &rotated).unwrap();
        for (x, y) in a.neurons.iter().zip(&b.neurons) {
            prop_assert!((x.ratio.unwrap() - y.ratio.unwrap()).abs() < 1e-10);
            prop_assert!((x.norm - y.norm).abs() < 1e-10);
        }
    }

    #[test]
    fn spike_plus_bulk_reconstructs_the_gradient(seed in any::<u64>(), act in activation(), mu1 in -2.0f64..2.0) {
        let (d, p, n) = (6, 8, 40);
        let t = target("z1 + z2^2", d);
        let net = init_symmetric(p, d, seed, SecondLayerDist::Gaussian, act).unwrap();
        let batch = sample_dataset(&t, n, seed).unwrap();
        let g = gradient_matrix(&net, &batch);
        let sb = spike_bulk(&g, &net.second_layer, &batch, mu1).unwrap();
        prop_assert!((sb.reconstruct() + &g).amax() < 1e-12);
    }

    #[test]
    fn linear_student_has_no_bulk_at_init(seed in any::<u64>()) {
        let t = target("z1 + z1*z2", 5);
        let net = init_symmetric(10, 5, seed, SecondLayerDist::Uniform, Activation::Identity).unwrap();
        let batch = sample_dataset(&t, 30, seed).unwrap();
        let g = gradient_matrix(&net, &batch);
        let sb = spike_bulk(&g, &net.second_layer, &batch, 1.0).unwrap();
        prop_assert!(sb.delta.amax() < 1e-12);
    }

    #[test]
    fn ridge_solution_is_stationary(seed in any::<u64>(), n in 3usize..30, p in 3usize..30, lambda in 1e-3f64..10.0) {
        let x = gaussian_mat(n, p, seed);
        let y = Vector::from_column_slice(gaussian_mat(n, 1, seed ^ 7).as_slice());
        let a = ridge_second_layer(&x, &y, lambda).unwrap();
        // ∇ (‖Xa − y‖² + λ‖a‖²) / 2 = Xᵀ(Xa − y) + λa.
        let grad = x.tr_mul(&(&x * &a - &y)) + &a * lambda;
        prop_assert!(grad.amax() < 1e-8 * (1.0 + y.amax() * x.amax()));
        let (pr, du) = (ridge_primal(&x, &y, lambda).unwrap(), ridge_dual(&x, &y, lambda).unwrap());
        prop_assert!((pr - du).amax() < 1e-8 * (1.0 + a.amax()));
    }

    #[test]
    fn symmetric_init_gives_zero_output_and_paired_gradients(seed in any::<u64>(), act in activation()) {
        let (d, p) = (6, 12);
        let t = target("z1 + z1*z2", d);
        let net = init_symmetric(p, d, seed, SecondLayerDist::Uniform, act).unwrap();
        let z = gaussian_inputs(20, d, seed);
        prop_assert!(net.forward(&z).unwrap().amax() < 1e-12);
        let g = gradient_matrix(&net, &sample_dataset(&t, 50, seed).unwrap());
        for i in 0..p / 2 {
            prop_assert!((g.row(i) + g.row(p - 1 - i)).amax() < 1e-12);
        }
    }

    #[test]
    fn training_is_bit_reproducible(seed in any::<u64>(), steps in 1usize..4) {
        let t = target("z1 + z2*z3", 8);
        let mut tc = TrainConfig::new(8, 10, 24, steps);
        tc.seed = seed;
        let run = || {
            let mut net = init_symmetric(10, 8, seed, tc.second_layer_dist, tc.activation.clone()).unwrap();
            train_first_layer(&mut net, &t, &tc).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(&a, &b);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            prop_assert!(x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}

#[test]
fn different_seeds_give_different_runs() {
    let t = target("z1", 8);
    let run = |seed| {
        let mut tc = TrainConfig::new(8, 10, 24, 1);
        tc.seed = seed;
        let mut net = init_symmetric(10, 8, seed, tc.second_layer_dist, tc.activation.clone()).unwrap();
        train_first_layer(&mut net, &t, &tc).unwrap().snapshots
    };
    assert_ne!(run(1), run(2));
}
