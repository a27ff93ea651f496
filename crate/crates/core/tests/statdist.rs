use proptest::prelude::*;
use vmpc_core::scenario::{builtin_model, ScenarioId};
use vmpc_core::stats::{cdf_mse, fit, ks_test, sample, DistSpec, Family};

#[test]
fn sampling_is_deterministic_per_seed() {
    let spec = DistSpec::birnbaum_saunders(13.62, 1.867).unwrap();
    assert_eq!(sample(&spec, 1, 9), sample(&spec, 1, 9));
    assert_ne!(sample(&spec, 5, 9), sample(&spec, 5, 10));
}

#[test]
fn weibull_sample_passes_ks_against_itself() {
    let spec = DistSpec::weibull(1.317, 1.306).unwrap();
    let xs = sample(&spec, 100_000, 2024);
    let r = ks_test(&xs, &spec, 0.01).unwrap();
    assert!(r.p_value > 0.01, "{r:?}");
    assert!(cdf_mse(&xs, &spec).unwrap() < 8.1e-4);
}

#[test]
fn poisson_sample_mean() {
    let xs = sample(&DistSpec::poisson(12.2).unwrap(), 100_000, 31);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 12.2).abs() < 0.1, "{mean}");
}

#[test]
fn table_parameters_survive_sample_fit_roundtrip() {
    for (i, id) in ScenarioId::ALL.into_iter().enumerate() {
        let m = builtin_model(id);
        let specs = [
            DistSpec::birnbaum_saunders(m.lifetime.eta, m.lifetime.gamma).unwrap(),
            DistSpec::log_normal(m.excess_delay.psi, m.excess_delay.rho).unwrap(),
            DistSpec::weibull(m.rel_doppler.zeta, m.rel_doppler.kappa).unwrap(),
        ];
        for (j, spec) in specs.iter().enumerate() {
            let xs = sample(spec, 10_000, 1000 + 10 * i as u64 + j as u64);
            let got = fit(spec.family(), &xs).unwrap();
            for (a, b) in got.param_vec().iter().zip(spec.param_vec()) {
                assert!(((a - b) / b).abs() < 0.05, "{id} {spec} -> {got}");
            }
        }
    }
}

fn continuous_spec() -> impl Strategy<Value = DistSpec> {
    prop_oneof![
        (0.1f64..60.0, 0.2f64..3.0).prop_map(|(a, b)| DistSpec::birnbaum_saunders(a, b).unwrap()),
        (-1.0f64..4.0, 0.2f64..2.5).prop_map(|(a, b)| DistSpec::log_normal(a, b).unwrap()),
        (0.1f64..5.0, 0.5f64..4.0).prop_map(|(a, b)| DistSpec::weibull(a, b).unwrap()),
        (0.1f64..10.0).prop_map(|a| DistSpec::exponential(a).unwrap()),
        (0.3f64..10.0, 0.1f64..5.0).prop_map(|(a, b)| DistSpec::gamma(a, b).unwrap()),
    ]
}

fn any_spec() -> impl Strategy<Value = DistSpec> {
    prop_oneof![
        continuous_spec(),
        (0.1f64..40.0).prop_map(|l| DistSpec::poisson(l).unwrap()),
        (-2.0f64..30.0, 0.3f64..6.0).prop_map(|(m, s)| DistSpec::discretized_normal(m, s).unwrap()),
        (0.3f64..10.0, 0.2f64..5.0).prop_map(|(k, t)| DistSpec::discretized_gamma(k, t).unwrap()),
    ]
}

proptest! {
    #[test]
    fn cdf_monotone_with_limits(spec in any_spec(), a in 0.0f64..200.0, b in 0.0f64..200.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(spec.cdf(lo) <= spec.cdf(hi) + 1e-15);
        prop_assert_eq!(spec.cdf(-1.0), 0.0);
        prop_assert!((spec.cdf(1e12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quantile_roundtrip(spec in continuous_spec(), p in 0.001f64..0.999) {
        let x = spec.quantile(p);
        prop_assert!((spec.cdf(x) - p).abs() < 1e-8);
    }

    #[test]
    fn samples_lie_in_support(spec in any_spec(), seed in any::<u64>()) {
        for x in sample(&spec, 50, seed) {
            prop_assert!(x >= 0.0 && x.is_finite());
            if spec.is_discrete() {
                prop_assert_eq!(x.fract(), 0.0);
            }
        }
    }

    #[test]
    fn fits_preserve_family(spec in continuous_spec(), seed in any::<u64>()) {
        let xs = sample(&spec, 200, seed);
        if let Ok(got) = fit(spec.family(), &xs) {
            prop_assert_eq!(got.family(), spec.family());
        }
        prop_assert!(fit(Family::Poisson, &xs).is_err() || xs.iter().all(|x| x.fract() == 0.0));
    }
}
