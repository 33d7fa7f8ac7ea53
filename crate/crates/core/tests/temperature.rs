use proptest::prelude::*;
use resokit::synth::{synth_temperature_series, temperature_fixture};
use resokit::temperature::{ensemble_statistics, fit_temperature_sweep, FitStrategy};
use resokit::units::microev_to_joules;
use resokit::TempModelParams;

fn temperatures() -> Vec<f64> {
    (1..=14).map(|k| 0.05 * k as f64).collect()
}

fn start(f0: f64) -> TempModelParams {
    TempModelParams::new(1e-4, microev_to_joules(300.0).unwrap(), 0.5, f0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fix_alpha_round_trip(
        delta_uev in 150.0f64..500.0,
        f_tan in 5e-5f64..1e-3,
        alpha in 0.3f64..1.0,
        f0 in 4e9f64..10e9,
    ) {
        let truth = TempModelParams::new(f_tan, microev_to_joules(delta_uev).unwrap(), alpha, f0).unwrap();
        let series = synth_temperature_series(&truth, &temperatures(), 0.0, 1).unwrap();
        let fit = fit_temperature_sweep(&series, &FitStrategy::FixAlpha { alpha }, &start(series.f0())).unwrap();
        let p = fit.params;
        prop_assert!((p.delta_0 - truth.delta_0).abs() / truth.delta_0 < 1e-4, "gap {:e} vs {:e}", p.delta_0, truth.delta_0);
        prop_assert!((p.f_tan_delta - f_tan).abs() / f_tan < 1e-4, "F tan {:e} vs {:e}", p.f_tan_delta, f_tan);
        prop_assert_eq!(p.alpha, alpha);
    }

    #[test]
    fn fix_delta_round_trip(
        delta_uev in 150.0f64..400.0,
        f_tan in 1e-4f64..1e-3,
        alpha in 0.3f64..1.0,
    ) {
        let truth = TempModelParams::new(f_tan, microev_to_joules(delta_uev).unwrap(), alpha, 6e9).unwrap();
        let series = synth_temperature_series(&truth, &temperatures(), 0.0, 1).unwrap();
        let strategy = FitStrategy::FixDelta { delta_0: truth.delta_0 };
        let p = fit_temperature_sweep(&series, &strategy, &start(series.f0())).unwrap().params;
        prop_assert!((p.alpha - alpha).abs() / alpha < 1e-4, "alpha {} vs {}", p.alpha, alpha);
        prop_assert!((p.f_tan_delta - f_tan).abs() / f_tan < 1e-4, "F {:e} vs {:e}", p.f_tan_delta, f_tan);
    }
}

#[test]
fn jittered_ensemble_recovers_gap() {
    let truth = TempModelParams::new(5.9e-4, microev_to_joules(351.0).unwrap(), 0.999, 5e9).unwrap();
    for seed in 0..5 {
        let fx = temperature_fixture("R", &truth, 7, 0.0, &temperatures(), 1e-7, seed).unwrap();
        let fits: Vec<_> = fx
            .members
            .iter()
            .map(|m| {
                fit_temperature_sweep(
                    &m.series,
                    &FitStrategy::FixAlpha { alpha: 0.999 },
                    &start(m.series.f0()),
                )
                .unwrap()
                .params
            })
            .collect();
        let e = ensemble_statistics(&fits).unwrap();
        assert!(
            (e.mean.delta_0 - truth.delta_0).abs() / truth.delta_0 < 0.02,
            "seed {seed}"
        );
        assert!(e.spread.delta_0.unwrap() > 0.0);
        assert!(e.spread.alpha.is_none());
    }
}

#[test]
fn gap_sweep_brackets_truth() {
    let truth = TempModelParams::new(2.5e-4, microev_to_joules(210.0).unwrap(), 0.6, 8e9).unwrap();
    let series = synth_temperature_series(&truth, &temperatures(), 0.0, 1).unwrap();
    let gaps = [190.0, 210.0, 230.0].map(|d| microev_to_joules(d).unwrap()).to_vec();
    let fit = fit_temperature_sweep(
        &series,
        &FitStrategy::FixDeltaSweep { delta_0: gaps },
        &start(series.f0()),
    )
    .unwrap();
    assert_eq!(fit.sweep.len(), 3);
    let (lo, hi) = fit
        .sweep
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.alpha), hi.max(p.alpha))
        });
    assert!(lo <= 0.6 && 0.6 <= hi, "alpha range [{lo}, {hi}]");
    assert!((fit.params.alpha - 0.6).abs() < 1e-3);
    assert!((fit.params.f_tan_delta - 2.5e-4).abs() / 2.5e-4 < 0.05);
}
