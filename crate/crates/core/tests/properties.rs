use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use ldamp::channel::{array_response, generate_dataset, synthesize_channel, ChannelImage, PathParameters};
use ldamp::denoise::WienerDenoiser;
use ldamp::measurement::{measure, sample_selection_network};
use ldamp::rng::rng_from_seed;
use ldamp::se::se_run;

fn freq() -> impl Strategy<Value = f64> {
    -0.5f64..0.4999
}

fn path() -> impl Strategy<Value = PathParameters> {
    (-3.0f64..3.0, freq(), freq()).prop_map(|(g, a, e)| PathParameters::new(g, a, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn array_response_has_unit_norm(az in freq(), el in freq(), m in 1usize..40, n in 1usize..40) {
        let a = array_response(az, el, m, n).unwrap();
        prop_assert!((a.frobenius_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vectorize_round_trip(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        let img = ChannelImage::from_column_major(rows, cols, data).unwrap();
        let v = img.vectorize();
        prop_assert_eq!(v.devectorize(rows, cols).unwrap(), img.clone());
        prop_assert!((v.norm() - img.frobenius_norm()).abs() <= 1e-12 * img.frobenius_norm().max(1.0));
    }

    #[test]
    fn synthesis_is_additive_in_paths(
        first in proptest::collection::vec(path(), 1..4),
        second in proptest::collection::vec(path(), 1..4),
    ) {
        let (m, n) = (8, 6);
        let unscaled = |paths: &[PathParameters]| {
            let h = synthesize_channel(paths, m, n).unwrap();
            let amp = ((m * n) as f64 / paths.len() as f64).sqrt();
            h.as_column_major().iter().map(|v| v / amp).collect::<Vec<_>>()
        };
        let mut both = first.clone();
        both.extend(second.iter().copied());
        let sum: Vec<f64> = unscaled(&first).iter().zip(unscaled(&second)).map(|(a, b)| a + b).collect();
        for (x, y) in unscaled(&both).iter().zip(&sum) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn adjoint_consistency(k in 1usize..30, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let op = sample_selection_network(k, 5, 6, &mut rng).unwrap();
        let h: Vec<f64> = (0..30).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let lhs: f64 = op.apply(&h).unwrap().iter().zip(&z).map(|(a, b)| a * b).sum();
        let rhs: f64 = h.iter().zip(op.apply_adjoint(&z).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn basis_vector_maps_to_scaled_column(col in 0usize..30, seed in any::<u64>()) {
        let op = sample_selection_network(12, 5, 6, &mut rng_from_seed(seed)).unwrap();
        let mut e = vec![0.0; 30];
        e[col] = 1.0;
        for (i, v) in op.apply(&e).unwrap().iter().enumerate() {
            prop_assert_eq!(*v, op.entry(i, col));
            prop_assert!((v.abs() - 1.0 / 30f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn se_noise_identity_holds_exactly(delta in 0.01f64..1.0, noise in 0.0f64..2.0, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let h: Vec<f64> = (0..64).map(|_| StandardNormal.sample(&mut rng)).collect();
        let traj = se_run(&h, &WienerDenoiser::new(), 4, delta, noise, 2, &mut rng).unwrap();
        for l in 0..4 {
            prop_assert_eq!(traj.sigma_e_sq[l], traj.theta[l] / delta + noise);
        }
    }
}

#[test]
fn measurement_noise_is_zero_mean() {
    let mut rng = rng_from_seed(1);
    let op = sample_selection_network(4, 4, 4, &mut rng).unwrap();
    let h: Vec<f64> = (0..16).map(|i| i as f64 / 4.0).collect();
    let clean = op.apply(&h).unwrap();
    let trials = 20_000;
    let mut mean = vec![0.0; 4];
    for _ in 0..trials {
        for (m, v) in mean.iter_mut().zip(measure(&op, &h, 1.0, &mut rng).unwrap()) {
            *m += v / trials as f64;
        }
    }
    // Standard error of each mean is 1/sqrt(20000) ≈ 0.007.
    for (m, c) in mean.iter().zip(&clean) {
        assert!((m - c).abs() < 0.03, "{m} vs {c}");
    }
}

#[test]
fn dataset_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bchd");
    let b = dir.path().join("b.bchd");
    generate_dataset(16, 4, 16, 16, 42).unwrap().save(&a).unwrap();
    generate_dataset(16, 4, 16, 16, 42).unwrap().save(&b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn full_size_training_set_header() {
    // 16640 samples of 64x64, streamed to memory; only the header and size are checked.
    let ds = generate_dataset(16640, 4, 64, 64, 1).unwrap();
    let mut buf = Vec::new();
    ds.write(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"BCHD");
    assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 16640);
    assert_eq!(buf.len(), 28 + 16640 * 4096 * 4);
}
