mod support;

use myvt::nn::{read_checkpoint, write_checkpoint, Activation, AdamState, Mlp};
use myvt::rng::Rng;
use support::gradcheck;

#[test]
fn random_architectures_match_finite_differences() {
    let mut rng = Rng::new(2024);
    for arch in 0..5 {
        let out = 1 + rng.index(3);
        let net = gradcheck::random_mlp(&mut rng, out, Activation::Tanh);
        let (p, x) = gradcheck::mlp_errors(&net, &mut rng, 10);
        assert!(p <= 1e-4 && x <= 1e-4, "arch {arch} {:?}: param {p:e}, input {x:e}", net.dims());
    }
}

#[test]
fn relu_network_matches_finite_differences_away_from_kinks() {
    let mut rng = Rng::new(3);
    let net = Mlp::new(&[4, 12, 12, 2], &[Activation::Relu, Activation::Relu, Activation::Identity], &mut rng, 1.0).unwrap();
    let (p, x) = gradcheck::mlp_errors(&net, &mut rng, 10);
    assert!(p <= 1e-4 && x <= 1e-4, "param {p:e}, input {x:e}");
}

#[test]
fn zero_output_gradient_gives_zero_gradients() {
    let mut rng = Rng::new(4);
    let net = Mlp::new(&[3, 5, 2], &[Activation::Tanh, Activation::Identity], &mut rng, 1.0).unwrap();
    let (_, tape) = net.forward(&[0.1, -0.2, 0.3]).unwrap();
    let (g, dx) = net.backward(&tape, &[0.0, 0.0]).unwrap();
    assert!(g.iter().chain(&dx).all(|v| *v == 0.0));
}

#[test]
fn composition_input_gradient_chains_through_both_networks() {
    // d/d eps of h(V(eps)) equals backprop through V of grad_x h at V(eps).
    let mut rng = Rng::new(5);
    let gen = Mlp::new(&[3, 8, 4], &[Activation::Tanh, Activation::Identity], &mut rng, 1.0).unwrap();
    let critic = Mlp::new(&[4, 6, 1], &[Activation::Sigmoid, Activation::Identity], &mut rng, 1.0).unwrap();
    let eps = rng.normal_vec(3);
    let (x, tape) = gen.forward(&eps).unwrap();
    let (_, grad_x) = critic.input_gradient(&x).unwrap();
    let (_, chained) = gen.backward(&tape, &grad_x).unwrap();
    let fd = support::central_difference(
        |e| critic.predict(&gen.predict(e).unwrap()).unwrap()[0],
        &eps,
        1e-5,
    );
    assert!(support::max_rel_err(&chained, &fd, 1e-3) <= 1e-4);
}

#[test]
fn forward_is_pure() {
    let mut rng = Rng::new(6);
    let net = Mlp::new(&[5, 7, 3], &[Activation::Relu, Activation::Identity], &mut rng, 1.0).unwrap();
    let x = rng.normal_vec(5);
    assert_eq!(net.predict(&x).unwrap(), net.predict(&x).unwrap());
}

#[test]
fn adam_first_step_has_magnitude_eta() {
    let mut p = vec![1.0, -2.0, 0.5];
    let mut adam = AdamState::new(3);
    adam.step(&mut p, &[3.0, -0.01, 0.0], 0.1).unwrap();
    assert!((p[0] - 0.9).abs() < 1e-6);
    assert!((p[1] - (-1.9)).abs() < 1e-4);
    assert_eq!(p[2], 0.5);
}

#[test]
fn checkpoint_file_round_trip() {
    let mut rng = Rng::new(8);
    let net = Mlp::new(&[6, 9, 1], &[Activation::Tanh, Activation::Sigmoid], &mut rng, 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("critic.ckpt");
    write_checkpoint(&net, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_checkpoint(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, net);
}
