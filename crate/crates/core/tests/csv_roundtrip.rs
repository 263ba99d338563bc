use eerm_core::ingest::{load_csv, synth_gaussian, write_csv, CsvColumns};
use eerm_core::{GaussianMoments, ValueKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesized_dataset_survives_csv(seed in any::<u64>(), m in 1usize..40) {
        let d = synth_gaussian(&GaussianMoments::tradeoff_reference(), m, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let cols = CsvColumns::default_for(1);
        write_csv(std::fs::File::create(&path).unwrap(), &d, &cols, &[format!("seed={seed}")]).unwrap();
        let back = load_csv(&path, &cols.schema(ValueKind::Numeric, ValueKind::Numeric)).unwrap();
        prop_assert_eq!(back, d);
    }
}
