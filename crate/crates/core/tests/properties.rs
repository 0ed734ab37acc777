use nalgebra::{DMatrix, SymmetricEigen};
use ncamon::baselines::{fit_pca, gram_matrix};
use ncamon::encoder::{flatten_params, loss_gradients, nca_loss, with_params, Mlp};
use ncamon::evaluation::{far, mdr, RunMetrics, Statistic};
use ncamon::monitoring::{
    control_limit, fit_feature_stats, kde_density, read_records, t2_statistic, write_records, ControlLimits, MonitorRecord,
};
use ncamon::nca::procrustes_rotation;
use ncamon::DataMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn frame(seed: u64, n: usize, p: usize) -> DMatrix<f64> {
    gaussian(seed, n, n).qr().q().columns(0, p).into_owned()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoder_gradient_matches_central_difference(seed in 0u64..10_000, n in 2usize..=6, p in 1usize..=3, rows in 1usize..=10) {
        let p = p.min(n - 1);
        let x = DataMatrix::new(gaussian(seed, rows, n)).unwrap();
        let b = frame(seed + 1, n, p);
        let base = Mlp::init(&[n, (n + p).div_ceil(2), p], seed).unwrap();
        let params: Vec<f64> = gaussian(seed + 2, base.n_params(), 1).iter().map(|v| 0.5 * v).collect();
        let enc = with_params(&base, &params);
        let (_, grads) = loss_gradients(&enc, &x, &b).unwrap();
        let loss = |w: &[f64]| {
            let g = with_params(&enc, w).forward_matrix(x.values()).unwrap();
            (x.values() - g * b.transpose()).norm_squared()
        };
        let mut work = flatten_params(&enc);
        for (i, a) in grads.flatten().into_iter().enumerate() {
            let orig = work[i];
            work[i] = orig + 1e-5;
            let up = loss(&work);
            work[i] = orig - 1e-5;
            let down = loss(&work);
            work[i] = orig;
            let fd = (up - down) / 2e-5;
            prop_assert!((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()) < 1e-6, "param {i}: {a} vs {fd}");
        }
    }

    #[test]
    fn forward_is_row_equivariant(seed in 0u64..10_000, rows in 1usize..40) {
        let x = gaussian(seed, rows, 5);
        let enc = Mlp::init(&[5, 4, 2], seed).unwrap();
        let g = enc.forward_matrix(&x).unwrap();
        let mut order: Vec<usize> = (0..rows).collect();
        order.reverse();
        order.rotate_left(seed as usize % rows);
        let shuffled = x.select_rows(order.iter());
        let gs = enc.forward_matrix(&shuffled).unwrap();
        prop_assert_eq!(gs, g.select_rows(order.iter()));
    }

    #[test]
    fn nca_loss_is_nonnegative_and_zero_on_exact_fit(seed in 0u64..10_000, rows in 1usize..20) {
        let b = frame(seed, 4, 2);
        let g = gaussian(seed + 1, rows, 2);
        let exact = DataMatrix::new(&g * b.transpose()).unwrap();
        prop_assert!(nca_loss(&exact, &g, &b).unwrap() < 1e-20);
        let noisy = DataMatrix::new(gaussian(seed + 2, rows, 4)).unwrap();
        prop_assert!(nca_loss(&noisy, &g, &b).unwrap() >= 0.0);
    }

    #[test]
    fn procrustes_beats_every_random_frame(seed in 0u64..10_000, rows in 3usize..15) {
        let m = gaussian(seed, rows, 4);
        let t = gaussian(seed + 1, rows, 2);
        let h = procrustes_rotation(&m, &t).unwrap().rotation;
        let objective = |f: &DMatrix<f64>| (&m - &t * f.transpose()).norm_squared();
        let best = objective(&h);
        for k in 0..20 {
            prop_assert!(best <= objective(&frame(seed * 31 + k, 4, 2)) + 1e-9);
        }
        prop_assert!((h.transpose() * &h - DMatrix::<f64>::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn t2_is_invariant_under_feature_reparameterization(seed in 0u64..10_000) {
        let g = gaussian(seed, 50, 2);
        let mut a = gaussian(seed + 1, 2, 2);
        while a.determinant().abs() < 0.1 {
            a += DMatrix::<f64>::identity(2, 2);
        }
        let mapped = &g * a.transpose();
        let (s, sm) = (fit_feature_stats(&g).unwrap(), fit_feature_stats(&mapped).unwrap());
        let probes = gaussian(seed + 2, 5, 2);
        for i in 0..5 {
            let raw: Vec<f64> = probes.row(i).iter().copied().collect();
            let moved: Vec<f64> = (probes.row(i) * a.transpose()).iter().copied().collect();
            let (t, tm) = (t2_statistic(&raw, &s).unwrap(), t2_statistic(&moved, &sm).unwrap());
            prop_assert!((t - tm).abs() < 1e-8 * t.max(1.0), "{t} vs {tm}");
        }
    }

    #[test]
    fn kde_density_nonnegative_and_limit_monotone(seed in 0u64..10_000, q in -50.0f64..50.0) {
        let samples: Vec<f64> = gaussian(seed, 40, 1).iter().map(|v| v.exp()).collect();
        prop_assert!(kde_density(&samples, 0.3, q) >= 0.0);
        let mut last = f64::NEG_INFINITY;
        for conf in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let l = control_limit(&samples, 0.3, conf).unwrap();
            prop_assert!(l >= last);
            last = l;
        }
    }

    #[test]
    fn metrics_survive_records_csv(seed in 0u64..10_000, len in 2usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let onset = rng.random_range(1..len);
        let records: Vec<MonitorRecord> = (0..len)
            .map(|i| MonitorRecord {
                sample_index: i,
                t2: rng.random::<f64>() * 10.0,
                spe: rng.random::<f64>(),
                t2_alarm: rng.random(),
                spe_alarm: rng.random(),
            })
            .collect();
        let limits = ControlLimits { t2_limit: 5.0, spe_limit: 0.5, h_t2: 1.0, h_spe: 0.1, confidence: 0.99 };
        let mut buf = Vec::new();
        write_records(&mut buf, &records, &limits).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(RunMetrics::from_records(&back, onset).unwrap(), RunMetrics::from_records(&records, onset).unwrap());
        let misses = records[onset..].iter().filter(|r| !r.t2_alarm).count();
        let expected = (100 * misses) as f64 / (len - onset) as f64;
        prop_assert_eq!(mdr(&records, onset, Statistic::T2).unwrap(), expected);
        prop_assert!((0.0..=100.0).contains(&far(&records, onset, Statistic::Spe).unwrap()));
    }
}

#[test]
fn pca_reconstruction_error_matches_discarded_spectrum() {
    let mix = gaussian(3, 6, 6);
    let raw = gaussian(4, 120, 6) * mix;
    let rows = raw.nrows() as f64;
    let mean = raw.row_mean();
    let centered = DMatrix::from_fn(120, 6, |i, j| raw[(i, j)] - mean[j]);
    let x = DataMatrix::new(centered.clone()).unwrap();
    let mut eig: Vec<f64> = SymmetricEigen::new(centered.transpose() * &centered / (rows - 1.0))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    for p in 1..6 {
        let pca = fit_pca(&x, p).unwrap();
        let recon = pca.reconstruct(&pca.extract(&x).unwrap()).unwrap();
        let err = (&centered - recon).norm_squared();
        let expected = (rows - 1.0) * eig[p..].iter().sum::<f64>();
        assert!((err - expected).abs() < 1e-6, "p={p}: {err} vs {expected}");
    }
}

#[test]
fn gram_matrix_is_positive_semidefinite() {
    let x = gaussian(9, 60, 4);
    let k = gram_matrix(&x, 4.0);
    assert_eq!(k, k.transpose());
    let min = SymmetricEigen::new(k).eigenvalues.min();
    assert!(min > -1e-10, "{min}");
}
