mod common;

use proptest::prelude::*;

use rainrisk::eval::{mae, prepare_design, rmse, split, Alignment, HorizonMode, SplitConfig};
use rainrisk::garch::{fit_garch, forecast_garch, VarianceFamily, VarianceSpec};
use rainrisk::io::{ingest_production, ingest_rainfall};
use rainrisk::mean::{fit_mean, forecast_mean, select_order, MeanSpec};
use rainrisk::optim::OptSettings;
use rainrisk::risk::{build_regressor, RiskConfig, RiskVariant};
use rainrisk::series::{difference, integrate, AnnualSeries};

#[test]
fn fixture_order_selection_and_forecast() {
    let prod = ingest_production(common::production_fixture()).unwrap();
    let design = prepare_design(&prod, None, 3, 1, 3).unwrap();
    assert_eq!(design.train.len(), prod.len() - 3 - 1);
    assert_eq!(
        design.forecast_years,
        [prod.end_year() - 2, prod.end_year()]
    );

    let opt = OptSettings::default();
    let sel = select_order(&MeanSpec::arima(0, 1, 0), &design.train, &[], 2, 2, &opt).unwrap();
    assert!(sel.spec.p <= 2 && sel.spec.q <= 2);
    let fc = forecast_mean(&sel, 3, &[]).unwrap();
    assert_eq!(fc.levels.len(), 3);
    // levels stay within a plausible band of the last training level
    let last = prod.get(prod.end_year() - 3).unwrap();
    assert!(fc.levels.iter().all(|l| (l - last).abs() < 0.5 * last));
}

#[test]
fn lagged_regressor_uses_previous_year() {
    let prod = ingest_production(common::production_fixture()).unwrap();
    let rain = ingest_rainfall(common::rainfall_fixture()).unwrap();
    let cfg = RiskConfig::default();
    let rv = build_regressor(&rain, RiskVariant::RV1, &cfg).unwrap();
    let design = prepare_design(
        &prod,
        Some((&rain, RiskVariant::RV1, Alignment::Lag1, &cfg)),
        3,
        1,
        3,
    )
    .unwrap();
    let first_year = design.train.start_year();
    assert_eq!(design.exog_train[0][0], rv.get(first_year - 1).unwrap());
    let test_start = design.forecast_years[0];
    assert_eq!(design.exog_future[0][0], rv.get(test_start - 1).unwrap());
}

#[test]
fn garch_forecast_on_fixture_is_positive() {
    let prod = ingest_production(common::production_fixture()).unwrap();
    let design = prepare_design(&prod, None, 3, 1, 3).unwrap();
    let opt = OptSettings::default();
    for family in VarianceFamily::ALL {
        let spec = MeanSpec::arima(0, 1, 0);
        let fit = match fit_garch(
            &spec,
            &VarianceSpec::garch11(family),
            &design.train,
            &[],
            &opt,
        ) {
            Ok(f) => f,
            Err(rainrisk::Error::NotConverged { .. }) => continue,
            Err(e) => panic!("{family}: {e}"),
        };
        let base = fit_mean(&spec, &design.train, &[], &opt).unwrap();
        assert!(fit.loglik >= base.loglik - 1e-4, "{family}");
        let fc = forecast_garch(&fit, 3, &[]).unwrap();
        assert!(fc.variance.iter().all(|v| *v > 0.0 && v.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn difference_then_integrate_roundtrips(
        values in prop::collection::vec(-1e3f64..1e3, 6..30),
        d in 1usize..3,
    ) {
        let s = AnnualSeries::new(1900, values.clone(), "t").unwrap();
        let ds = difference(&s, d).unwrap();
        let back = integrate(ds.values(), ds.head_levels(), d).unwrap();
        for (a, b) in back.iter().zip(&values[d..]) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn split_partitions_series(n in 5usize..60, holdout in 1usize..4) {
        let s = AnnualSeries::new(1950, (0..n).map(|v| v as f64).collect(), "t").unwrap();
        let (train, test) = split(&s, &SplitConfig { holdout }).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        prop_assert_eq!(train.end_year() + 1, test.start_year());
        prop_assert_eq!(test.len(), holdout);
    }

    #[test]
    fn cumulative_errors_are_consistent(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..6),
    ) {
        let (a, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = mae(&a, &f, HorizonMode::Cumulative).unwrap();
        let r = rmse(&a, &f, HorizonMode::Cumulative).unwrap();
        for (mi, ri) in m.iter().zip(&r) {
            prop_assert!(*mi <= ri + 1e-9);
            prop_assert!(*mi >= 0.0);
        }
    }
}
