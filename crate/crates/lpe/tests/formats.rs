use lpe::io::{read_series, read_ticks, write_series, write_ticks};
use lpe::Error;
use lpe_core::path::ParamPathSpec;
use lpe_core::sim::{
    simulate_noisy_diffusion, simulate_poisson_counts, simulate_tv_ma1, simulate_uncertainty_zones, Ma1SimSpec,
    NoisyDiffusionSpec, TickSeries, UzSimSpec,
};
use lpe_core::ObservationSeries;
use proptest::prelude::*;

fn series_roundtrip(series: &ObservationSeries) {
    let mut buf = Vec::new();
    write_series(&mut buf, series).unwrap();
    let back = read_series(buf.as_slice(), Some(series.horizon())).unwrap();
    assert_eq!(&back, series);
}

fn ticks_roundtrip(ticks: &TickSeries) {
    let mut buf = Vec::new();
    write_ticks(&mut buf, ticks).unwrap();
    let back = read_ticks(buf.as_slice(), ticks.tick()).unwrap();
    assert_eq!(&back, ticks);
}

#[test]
fn simulated_series_roundtrip() {
    let path = ParamPathSpec::cosine(vec![0.1, 0.5, 1.0], vec![0.0, 0.2, 0.4], vec![0.0, 4.0, 4.0]).unwrap();
    series_roundtrip(&simulate_tv_ma1(&Ma1SimSpec { n: 500, horizon: 1.0, path, seed: 1 }).unwrap());
    let spec = NoisyDiffusionSpec::new(
        400,
        2.5,
        ParamPathSpec::constant(vec![1.0]),
        ParamPathSpec::constant(vec![0.3]),
        2,
    );
    series_roundtrip(&simulate_noisy_diffusion(&spec).unwrap());
    let counts = simulate_poisson_counts(&ParamPathSpec::constant(vec![3.0]), 300, 1.0, 300.0, 3).unwrap();
    series_roundtrip(&counts);
}

#[test]
fn simulated_ticks_roundtrip() {
    for (tick, m) in [(0.001, 1), (0.01, 3), (0.25, 2)] {
        let mut spec = UzSimSpec::constant(tick, 0.2, 400.0 * tick * tick, 1.0, 5);
        spec.jump_probs = vec![1.0 / m as f64; m];
        spec.x0 = 37.0;
        ticks_roundtrip(&simulate_uncertainty_zones(&spec).unwrap());
    }
}

#[test]
fn default_horizon_is_the_sum_of_increments() {
    let s = read_series("dt,value\n0.25,1\n0.5,2\n".as_bytes(), None).unwrap();
    assert_eq!(s.horizon(), 0.75);
    let s = read_series("dt,value,value2\n1,1,-1\n1,2,-2\n".as_bytes(), Some(3.0)).unwrap();
    assert_eq!((s.dim(), s.len(), s.horizon()), (2, 2, 3.0));
    assert_eq!(s.column(1), [-1.0, -2.0]);
}

#[test]
fn tick_files_keep_only_price_changes() {
    let text = "time,price\n0,10.00\n1,10.00\n2,10.01\n3,10.01\n4,10.00\n";
    let t = read_ticks(text.as_bytes(), 0.01).unwrap();
    assert_eq!(t.times(), [0.0, 2.0, 4.0]);
    assert_eq!(t.levels(), [1000, 1001, 1000]);
}

#[test]
fn malformed_files_name_line_and_column() {
    let err = read_series("dt,value\n0.1,1\n0.1,x\n".as_bytes(), None).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, ref column, .. } if column == "value"), "{err}");
    let err = read_series("dt,val\n0.1,1\n".as_bytes(), None).unwrap_err();
    assert!(matches!(err, Error::Header { .. }), "{err}");
    let err = read_ticks("time,price\n0,1.00\n1,1.005\n".as_bytes(), 0.01).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, ref column, .. } if column == "price"), "{err}");
    let err = read_ticks("time,price\n1,1.00\n0,1.01\n".as_bytes(), 0.01).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, ref column, .. } if column == "time"), "{err}");
}

proptest! {
    #[test]
    fn arbitrary_series_roundtrip(
        rows in prop::collection::vec((1e-6f64..10.0, -1e6f64..1e6, -1e-300f64..1e-300), 1..40)
    ) {
        let dts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let values: Vec<f64> = rows.iter().flat_map(|r| [r.1, r.2]).collect();
        let horizon = dts.iter().sum();
        series_roundtrip(&ObservationSeries::new(2, values, dts, horizon).unwrap());
    }

    #[test]
    fn arbitrary_ticks_roundtrip(steps in prop::collection::vec((1e-6f64..1.0, -3i64..4), 1..60), start in -50_000i64..50_000) {
        let mut times = vec![0.0];
        let mut levels = vec![start];
        for (dt, jump) in steps {
            if jump == 0 {
                continue;
            }
            times.push(times.last().unwrap() + dt);
            levels.push(levels.last().unwrap() + jump);
        }
        for tick in [0.001, 0.05, 1.0] {
            ticks_roundtrip(&TickSeries::new(tick, times.clone(), levels.clone()).unwrap());
        }
    }
}
