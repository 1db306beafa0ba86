use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbcpmu::chain::{pll_sample, ChainModel};
use sbcpmu::characterization::{
    characterize_counters, delay_statistics, one_counter_estimate, simulate_counts, CounterRow,
    VarianceConvention,
};

#[test]
fn counter_mean_error_scales_as_inverse_sqrt_n() {
    let (fk, ts, r) = (100e6, 1.0 / 5e3, 1.0 - 16.02e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut points = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let means: Vec<f64> = (0..300)
            .map(|_| {
                let c = simulate_counts(r, fk, ts, n, &mut rng);
                one_counter_estimate(&c, fk, ts).unwrap().ratio_mean
            })
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let sd = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt();
        points.push(((n as f64).ln(), sd.ln()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = points.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn idle_profile_draws_match_mean() {
    let model = ChainModel::bundled().pll_profile("Idle").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..1000).map(|_| pll_sample(&model, &mut rng)).collect();
    let s = delay_statistics(&xs).unwrap();
    assert!((s.mean * 1e6 - 6.59).abs() < 0.11, "{}", s.mean * 1e6);
    assert!(s.min >= 4.55e-6 && s.max <= 14.65e-6);
}

#[test]
fn counter_report_lists_frequency_error_candidates() {
    let mut rows = Vec::new();
    for (t, counts) in [(20.0, [20000u64, 19999]), (40.0, [20000, 20000])] {
        for d in ["a", "b"] {
            for i in 0..40 {
                rows.push(CounterRow {
                    count: counts[(i + usize::from(d == "b")) % 2],
                    device: d.into(),
                    temperature_c: Some(t),
                });
            }
        }
    }
    let r = characterize_counters(&rows, 100e6, 1.0 / 5e3, 10, 50.0, VarianceConvention::Unbiased).unwrap();
    let names: Vec<&str> = r.frequency_error_bands.iter().map(|b| b.source.as_str()).collect();
    assert_eq!(names, ["estimator", "within-device", "within-device at 20 C", "within-device at 40 C", "total"]);
    for b in &r.frequency_error_bands {
        assert!((b.frequency_error_hz - 50.0 * b.std_ppm * 1e-6).abs() < 1e-15);
    }
}
