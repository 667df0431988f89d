use arm_core::data::{
    generate_synthetic, load_csv, read_csv, split, write_csv, DatasetSchema, RawDataset, SplitConfig, SyntheticSpec,
};
use arm_core::error::DataError;
use arm_core::Monotonicity;
use proptest::prelude::*;

fn tiny_schema() -> DatasetSchema {
    DatasetSchema::from_json(
        r#"{
            "label": {"column": "RiskPerformance", "positive": ["Bad"], "negative": ["Good"]},
            "default_missing_codes": [-7, -8, -9],
            "features": [
                {"name": "a", "monotonicity": "Decreasing"},
                {"name": "b", "monotonicity": "Increasing"}
            ],
            "subscales": [{"name": "All", "features": ["a", "b"]}]
        }"#,
    )
    .unwrap()
}

#[test]
fn well_formed_file_loads_with_mapped_labels() {
    let csv = "b,RiskPerformance,a\n1,Bad,3\n2,Good,-9\n,Good,4.5\n";
    let data = read_csv(csv.as_bytes(), &tiny_schema()).unwrap();
    assert_eq!(data.n_rows(), 3);
    assert_eq!(data.labels, vec![1, 0, 0]);
    assert_eq!(data.rows[0], vec![Some(3.0), Some(1.0)]);
    assert_eq!(data.rows[1], vec![None, Some(2.0)]);
    assert_eq!(data.rows[2], vec![Some(4.5), None]);
}

#[test]
fn bad_files_are_rejected() {
    let schema = tiny_schema();
    let missing = read_csv("a,RiskPerformance\n1,Bad\n".as_bytes(), &schema);
    assert!(matches!(missing, Err(DataError::MissingColumn(c)) if c == "b"));
    let garbled = read_csv("a,b,RiskPerformance\n1,x,Bad\n".as_bytes(), &schema);
    assert!(matches!(garbled, Err(DataError::UnparsableValue { row: 0, .. })));
    let label = read_csv("a,b,RiskPerformance\n1,2,Maybe\n".as_bytes(), &schema);
    assert!(matches!(label, Err(DataError::UnknownLabelValue { row: 0, .. })));
}

#[test]
fn fico_schema_requires_its_columns() {
    let csv = "RiskPerformance,MSinceOldestTradeOpen\nBad,1\n";
    assert!(matches!(
        read_csv(csv.as_bytes(), &DatasetSchema::fico()),
        Err(DataError::MissingColumn(c)) if c == "ExternalRiskEstimate"
    ));
}

#[test]
fn files_on_disk_round_trip() {
    let spec = SyntheticSpec::fico_like(300, 9);
    let data = generate_synthetic(&spec).unwrap();
    let schema = spec.schema();
    let dir = std::env::temp_dir().join(format!("arm-core-data-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("synthetic.csv");
    write_csv(&data, &schema.label, std::fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(load_csv(&path, &schema).unwrap(), data);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn zero_missingness_leaves_no_gaps() {
    let data = generate_synthetic(&SyntheticSpec::fico_like(2000, 3).without_missing()).unwrap();
    assert!(data.rows.iter().flatten().all(Option::is_some));
}

#[test]
fn synthetic_default_rate_is_monotone_in_every_constrained_feature() {
    let mut failures = Vec::new();
    for seed in 1..=5 {
        failures.extend(monotonicity_failures(seed));
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

fn monotonicity_failures(seed: u64) -> Vec<String> {
    let spec = SyntheticSpec::fico_like(10_000, seed);
    let data = generate_synthetic(&spec).unwrap();
    let rate = data.positive_rate();
    let mut failures = Vec::new();
    if !(0.45..=0.55).contains(&rate) {
        failures.push(format!("seed {seed}: positive rate {rate}"));
    }
    for (p, feature) in spec.features.iter().enumerate() {
        if feature.monotonicity == Monotonicity::None {
            continue;
        }
        let mut observed: Vec<(f64, u8)> = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter_map(|(r, &y)| r[p].map(|x| (x, y)))
            .collect();
        observed.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Quintile bins that never split a run of equal values.
        let mut rates = Vec::new();
        let mut start = 0;
        for q in 1..=5 {
            let mut end = observed.len() * q / 5;
            while end < observed.len() && end > 0 && observed[end].0 == observed[end - 1].0 {
                end += 1;
            }
            if end > start {
                let bin = &observed[start..end];
                rates.push(bin.iter().map(|o| f64::from(o.1)).sum::<f64>() / bin.len() as f64);
                start = end;
            }
        }
        assert!(rates.len() >= 2, "{}", feature.name);
        let monotone = match feature.monotonicity {
            Monotonicity::Decreasing => rates.windows(2).all(|w| w[1] <= w[0]),
            Monotonicity::Increasing => rates.windows(2).all(|w| w[1] >= w[0]),
            Monotonicity::None => unreachable!(),
        };
        if !monotone {
            failures.push(format!("seed {seed} {}: {rates:?}", feature.name));
        }
    }
    failures
}

#[test]
fn splits_partition_the_rows() {
    let labels: Vec<u8> = (0..100).map(|i| (i % 3 == 0) as u8).collect();
    let splits = split(&labels, &SplitConfig::default()).unwrap();
    assert_eq!(splits.len(), 5);
    for s in &splits {
        assert_eq!(s.test.len(), 20);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }
    assert_eq!(splits, split(&labels, &SplitConfig::default()).unwrap());
    let other = split(&labels, &SplitConfig { seed: 8, ..Default::default() }).unwrap();
    assert_ne!(splits, other);
    assert!(matches!(split(&[1; 50], &SplitConfig::default()), Err(DataError::SingleClassDataset)));
}

fn value() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        4 => (-1e6f64..1e6).prop_map(Some),
        2 => (0i32..500).prop_map(|v| Some(f64::from(v))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec((value(), value(), 0u8..2), 1..40),
    ) {
        let schema = tiny_schema();
        // Values equal to a missing code would legitimately come back missing.
        let codes = [-7.0, -8.0, -9.0];
        let clean = |v: Option<f64>| v.filter(|x| !codes.contains(x));
        let data = RawDataset::new(
            vec!["a".into(), "b".into()],
            rows.iter().map(|r| vec![clean(r.0), clean(r.1)]).collect(),
            rows.iter().map(|r| r.2).collect(),
        ).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &schema.label, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &schema).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn different_seeds_give_different_splits(seed in any::<u64>()) {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let a = split(&labels, &SplitConfig { seed, ..Default::default() }).unwrap();
        let b = split(&labels, &SplitConfig { seed: seed.wrapping_add(1), ..Default::default() }).unwrap();
        prop_assert_ne!(a, b);
    }
}
