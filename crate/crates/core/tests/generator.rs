use nalgebra::{DMatrix, DVector};
use onebit::experiments::REFERENCE_NET_SEED;
use onebit::generator::{
    active_branch, branch_apply, brute_force_region_count, count_pieces_bound, encode_group_sparse, forward,
    group_sparse_network, Hyperplane, ReluNetwork, WeightScale,
};
use onebit::linalg::{norm, Matrix};
use onebit::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_net() -> ReluNetwork {
    ReluNetwork::new_random_gaussian(&[2, 64, 1024], WeightScale::default(), REFERENCE_NET_SEED).unwrap()
}

/// Straightforward dense evaluation with nalgebra, sharing no code with the
/// crate's forward pass.
fn dense_forward(net: &ReluNetwork, x: &[f64]) -> Vec<f64> {
    let mut v = DVector::from_column_slice(x);
    for w in net.weights() {
        let m = DMatrix::from_row_slice(w.rows(), w.cols(), w.as_slice());
        v = (m * v).map(|t| t.max(0.0));
    }
    v.as_slice().to_vec()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / norm(b).max(1e-300)
}

#[test]
fn reference_net_architecture() {
    let net = reference_net();
    assert_eq!(net.dims(), &[2, 64, 1024]);
    assert_eq!((net.weights()[0].rows(), net.weights()[0].cols()), (64, 2));
    assert_eq!((net.weights()[1].rows(), net.weights()[1].cols()), (1024, 64));
    assert_eq!(net, reference_net());
}

#[test]
fn scalar_network_is_relu() {
    let net = ReluNetwork::new_random_gaussian(&[1, 1], WeightScale::default(), 3).unwrap();
    let w = net.weights()[0][(0, 0)];
    for x in [-2.0, -0.5, 0.0, 0.7, 3.0] {
        assert_eq!(net.forward(&[x]).unwrap(), vec![(w * x).max(0.0)]);
    }
}

#[test]
fn weight_variance_matches_fanout_rule() {
    let net = ReluNetwork::new_random_gaussian(&[3, 300, 300], WeightScale::default(), 11).unwrap();
    for (i, w) in net.weights().iter().enumerate() {
        let n = w.as_slice().len() as f64;
        let mean = w.as_slice().iter().sum::<f64>() / n;
        let var = w.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let want = 1.0 / net.dims()[i + 1] as f64;
        assert!((var / want - 1.0).abs() < 0.1, "layer {i}: variance {var} vs {want}");
    }
}

#[test]
fn invalid_dims_are_configuration_errors() {
    for dims in [vec![], vec![3], vec![2, 0, 4]] {
        assert!(matches!(
            ReluNetwork::new_random_gaussian(&dims, WeightScale::default(), 0),
            Err(Error::Config(_))
        ));
    }
}

#[test]
fn forward_hand_example_and_zero() {
    let w = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
    let net = ReluNetwork::new(vec![1, 2], vec![w], "hand").unwrap();
    assert_eq!(forward(&net, &[1.0]).unwrap(), vec![1.0, 0.0]);
    assert_eq!(forward(&reference_net(), &[0.0, 0.0]).unwrap(), vec![0.0; 1024]);
    assert!(matches!(forward(&net, &[1.0, 2.0]), Err(Error::Dimension { .. })));
}

#[test]
fn reference_net_forward_matches_dense_oracle() {
    let net = reference_net();
    let x0 = [1.0, 1.0];
    let got = net.forward(&x0).unwrap();
    assert!(rel_err(&got, &dense_forward(&net, &x0)) <= 1e-12);
    assert!(got.iter().all(|&v| v >= 0.0));
}

#[test]
fn branch_agrees_with_masked_evaluation_for_random_z() {
    let net = reference_net();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
    let branch = active_branch(&net, &x).unwrap();
    // Independent masked evaluation from the anchor's pre-activation signs.
    let w1 = &net.weights()[0];
    let w2 = &net.weights()[1];
    let pre1: Vec<f64> = (0..64).map(|i| w1[(i, 0)] * x[0] + w1[(i, 1)] * x[1]).collect();
    let h1: Vec<f64> = pre1.iter().map(|v| v.max(0.0)).collect();
    let pre2: Vec<f64> = (0..1024).map(|i| (0..64).map(|j| w2[(i, j)] * h1[j]).sum()).collect();
    for _ in 0..100 {
        let z = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let a: Vec<f64> = (0..64)
            .map(|i| {
                if pre1[i] > 0.0 {
                    w1[(i, 0)] * z[0] + w1[(i, 1)] * z[1]
                } else {
                    0.0
                }
            })
            .collect();
        let want: Vec<f64> = (0..1024)
            .map(|i| {
                if pre2[i] > 0.0 {
                    (0..64).map(|j| w2[(i, j)] * a[j]).sum()
                } else {
                    0.0
                }
            })
            .collect();
        let got = branch_apply(&branch, &z).unwrap();
        assert!(rel_err(&got, &want) <= 1e-12);
        let via_matrix = branch.composite().mul_vec(&z);
        assert!(rel_err(&via_matrix, &want) <= 1e-12);
    }
    assert_eq!(branch_apply(&branch, &[0.0, 0.0]).unwrap(), vec![0.0; 1024]);
}

#[test]
fn zero_anchor_has_empty_branch() {
    let net = reference_net();
    let b = active_branch(&net, &[0.0, 0.0]).unwrap();
    assert!(b.masks().iter().flatten().all(|&m| !m));
    assert_eq!(b.composite().max_abs(), 0.0);
}

#[test]
fn network_json_shape() {
    let net = ReluNetwork::new_random_gaussian(&[2, 3, 4], WeightScale::default(), 1).unwrap();
    let v: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
    assert_eq!(v["dims"], serde_json::json!([2, 3, 4]));
    assert_eq!(v["weights"][1].as_array().unwrap().len(), 4);
    assert_eq!(v["weights"][1][0].as_array().unwrap().len(), 3);
    assert!(v["label"].is_string());
    assert_eq!(ReluNetwork::from_json(&net.to_json()).unwrap(), net);
}

#[test]
fn group_sparse_examples() {
    let net = group_sparse_network(1, 4).unwrap();
    assert_eq!(net.forward(&[5.0, 1.0]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    assert_eq!(net.forward(&[0.0, 1.0]).unwrap(), vec![0.0; 4]);
    assert_eq!(encode_group_sparse(&[0.0, 0.0, 0.6, 0.0], 1).unwrap(), vec![6.6, 1.0]);
    assert_eq!(encode_group_sparse(&[0.0, 1.0, 0.0, 0.0], 1).unwrap(), vec![5.0, 1.0]);
    assert_eq!(encode_group_sparse(&[0.0; 6], 2).unwrap(), vec![0.0, 0.0, 1.0]);
    assert_eq!(group_sparse_network(2, 8).unwrap().dims()[1], 2 + 8);
    assert!(matches!(group_sparse_network(3, 8), Err(Error::Config(_))));
    assert!(matches!(encode_group_sparse(&[0.5, 0.5], 1), Err(Error::Domain(_))));
    assert!(matches!(encode_group_sparse(&[-0.1, 0.0], 1), Err(Error::Domain(_))));
    assert!(matches!(encode_group_sparse(&[1.5, 0.0], 1), Err(Error::Domain(_))));
}

#[test]
fn piece_bound_values() {
    assert_eq!(count_pieces_bound(3, 2), 7);
    assert_eq!(count_pieces_bound(1, 1), 2);
    assert_eq!(count_pieces_bound(4, 2), 11);
    assert_eq!(count_pieces_bound(2, 5), 4);
    assert_eq!(count_pieces_bound(0, 0), 1);
}

fn random_planes(rng: &mut ChaCha8Rng, n: usize, k: usize, affine: bool) -> Vec<Hyperplane> {
    (0..n)
        .map(|_| Hyperplane {
            normal: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            offset: if affine { rng.random_range(-1.0..1.0) } else { 0.0 },
        })
        .collect()
}

#[test]
fn region_oracle_small_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    assert_eq!(
        brute_force_region_count(&random_planes(&mut rng, 1, 2, false)).unwrap(),
        2
    );
    assert_eq!(
        brute_force_region_count(&random_planes(&mut rng, 2, 2, false)).unwrap(),
        4
    );
    // Lines through the origin cut the plane into 2n sectors.
    assert_eq!(
        brute_force_region_count(&random_planes(&mut rng, 5, 2, false)).unwrap(),
        10
    );
    assert_eq!(
        brute_force_region_count(&random_planes(&mut rng, 4, 2, true)).unwrap(),
        11
    );
    assert_eq!(
        brute_force_region_count(&random_planes(&mut rng, 5, 2, true)).unwrap(),
        16
    );
    assert!(matches!(
        brute_force_region_count(&random_planes(&mut rng, 13, 2, true)),
        Err(Error::OracleScale(_))
    ));
    assert!(matches!(
        brute_force_region_count(&random_planes(&mut rng, 3, 4, true)),
        Err(Error::OracleScale(_))
    ));
}

fn small_net() -> impl Strategy<Value = (Vec<usize>, u64)> {
    (1usize..4, prop::collection::vec(1usize..12, 1..4), any::<u64>()).prop_map(|(k, mut rest, seed)| {
        rest.insert(0, k);
        (rest, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn branch_consistency((dims, seed) in small_net(), xs in prop::collection::vec(-3.0f64..3.0, 3)) {
        let net = ReluNetwork::new_random_gaussian(&dims, WeightScale::default(), seed).unwrap();
        let x = &xs[..dims[0]];
        let g = net.forward(x).unwrap();
        let b = net.active_branch(x).unwrap();
        prop_assert_eq!(b.apply(x).unwrap(), g.clone());
        let gc = b.composite().mul_vec(x);
        let scale = norm(&g).max(1.0);
        for (a, c) in gc.iter().zip(&g) {
            prop_assert!((a - c).abs() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn positive_homogeneity((dims, seed) in small_net(), xs in prop::collection::vec(-3.0f64..3.0, 3), c in 0.0f64..50.0) {
        let net = ReluNetwork::new_random_gaussian(&dims, WeightScale::default(), seed).unwrap();
        let x = &xs[..dims[0]];
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let lhs = net.forward(&cx).unwrap();
        let rhs: Vec<f64> = net.forward(x).unwrap().iter().map(|v| c * v).collect();
        let scale = norm(&rhs);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn branch_is_linear((dims, seed) in small_net(), v in prop::collection::vec(-3.0f64..3.0, 9), al in -2.0f64..2.0, be in -2.0f64..2.0) {
        let net = ReluNetwork::new_random_gaussian(&dims, WeightScale::default(), seed).unwrap();
        let k = dims[0];
        let (x, z1, z2) = (&v[..k], &v[3..3 + k], &v[6..6 + k]);
        let b = net.active_branch(x).unwrap();
        let mix: Vec<f64> = z1.iter().zip(z2).map(|(a, c)| al * a + be * c).collect();
        let lhs = b.apply(&mix).unwrap();
        let h1 = b.apply(z1).unwrap();
        let h2 = b.apply(z2).unwrap();
        let scale = 1.0 + norm(&h1) + norm(&h2);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (al * h1[i] + be * h2[i])).abs() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_sparse_round_trip(k in 1usize..5, b in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = k * b;
        let mut target = vec![0.0; d];
        for blk in 0..k {
            if rng.random_bool(0.8) {
                target[blk * b + rng.random_range(0..b)] = rng.random_range(0.0..=1.0);
            }
        }
        let n = norm(&target);
        if n > 1.0 {
            target.iter_mut().for_each(|v| *v /= n);
        }
        let net = group_sparse_network(k, d).unwrap();
        let out = net.forward(&encode_group_sparse(&target, k).unwrap()).unwrap();
        for (o, t) in out.iter().zip(&target) {
            prop_assert!((o - t).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn piece_bound_dominates_oracle(k in 1usize..=3, n in 1usize..=8, affine in any::<bool>(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planes = random_planes(&mut rng, n, k, affine);
        let count = brute_force_region_count(&planes).unwrap() as u128;
        let bound = count_pieces_bound(n as u64, k as u64);
        prop_assert!(count <= bound);
        if affine {
            prop_assert_eq!(count, bound);
        }
    }
}
