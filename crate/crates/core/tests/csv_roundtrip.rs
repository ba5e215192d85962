use mefsc::aggregate::MomentSeries;
use mefsc::bench::{read_global_errors, read_moments, write_errors, write_moments};
use mefsc::reference::error_metrics;
use proptest::prelude::*;

fn series(names: &[&str], times: &[f64], values: &[f64]) -> MomentSeries {
    let mut s = MomentSeries::new(names.iter().map(|n| n.to_string()).collect());
    let n = names.len();
    for (i, &t) in times.iter().enumerate() {
        let row = &values[i * 2 * n..(i + 1) * 2 * n];
        s.push(t, &row[..n], &row[n..]);
    }
    s
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e300..1e300f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_round_trip_exactly(rows in 1usize..20, values in prop::collection::vec(finite(), 160)) {
        let names = ["u1", "u2"];
        let times: Vec<f64> = (0..rows).map(|i| i as f64 * 0.005).collect();
        let solver = series(&names, &times, &values[..rows * 4]);
        let reference = series(&names, &times, &values[80..80 + rows * 4]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("moments.csv");
        write_moments(&path, &solver, &reference).unwrap();
        let (s, r) = read_moments(&path).unwrap();
        // bitwise: -0.0 and subnormals must survive too
        let bits = |m: &MomentSeries| -> Vec<u64> {
            m.times.iter().chain(m.mean.iter().flatten()).chain(m.variance.iter().flatten()).map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&s), bits(&solver));
        prop_assert_eq!(bits(&r), bits(&reference));
        prop_assert_eq!(s.components, solver.components);
    }
}

#[test]
fn errors_file_ends_with_global_row() {
    let times = [0.0, 0.5, 1.0];
    let a = series(&["u"], &times, &[1.0, 0.0, 2.0, 1.0, 3.0, 4.0]);
    let b = series(&["u"], &times, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    let errors = error_metrics(&a, &b).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("errors.csv");
    write_errors(&path, &errors).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + times.len() + 1);
    assert!(lines.last().unwrap().starts_with("GLOBAL,"));

    // mean errors 0, 1, 2 and variance errors 0, 0, 3 averaged with dt / T = 1/2
    let global = read_global_errors(&path).unwrap();
    let get = |k: &str| global.iter().find(|(n, _)| n.contains(k)).map(|(_, v)| *v).unwrap();
    assert_eq!(get("mean"), 1.5);
    assert_eq!(get("var"), 1.5);
}
