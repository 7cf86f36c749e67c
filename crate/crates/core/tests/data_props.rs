use myvt::data::{make_dataset, read_dataset, write_dataset, SyntheticSpec, TruthCase};
use myvt::train::presets::{dataset_spec, CaseStudy};

fn column_stats(rows: &[Vec<f64>], truth: &[f64], j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r[j] - truth[j]).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r[j] - truth[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn per_coordinate_noise_variance_near_four_hundredths() {
    let data = make_dataset(&SyntheticSpec::default()).unwrap();
    for j in 0..data.dim() {
        let (_, var) = column_stats(&data.examples, &data.truth, j);
        assert!((0.03..=0.05).contains(&var), "coordinate {j}: variance {var}");
    }
}

#[test]
fn noise_mean_is_within_five_standard_errors() {
    for case in [TruthCase::Sparse, TruthCase::PiecewiseConstant] {
        let spec = SyntheticSpec { case, seed: 9, ..SyntheticSpec::default() };
        let data = make_dataset(&spec).unwrap();
        let bound = 5.0 * spec.noise_std / (spec.n_examples as f64).sqrt();
        for j in 0..data.dim() {
            let (mean, _) = column_stats(&data.examples, &data.truth, j);
            assert!(mean.abs() <= bound, "coordinate {j}: mean {mean}");
        }
    }
}

#[test]
fn same_seed_same_bytes_different_seed_different_data() {
    let spec = dataset_spec(CaseStudy::PiecewiseConstant, 42);
    let bytes = |s: &SyntheticSpec| {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &make_dataset(s).unwrap()).unwrap();
        buf
    };
    let a = bytes(&spec);
    assert_eq!(a, bytes(&spec));
    assert_ne!(a, bytes(&SyntheticSpec { seed: 43, ..spec }));
    assert_eq!(read_dataset(a.as_slice()).unwrap(), make_dataset(&dataset_spec(CaseStudy::PiecewiseConstant, 42)).unwrap());
}

#[test]
fn case_study_truths_have_their_structure() {
    let sparse = make_dataset(&dataset_spec(CaseStudy::Sparse, 0)).unwrap();
    assert_eq!(sparse.examples.len(), 500);
    assert_eq!(sparse.truth.iter().filter(|v| **v != 0.0).count(), 5);
    let pwc = make_dataset(&dataset_spec(CaseStudy::PiecewiseConstant, 0)).unwrap();
    assert!(pwc.truth.windows(2).filter(|w| w[0] != w[1]).count() <= 4);
}
