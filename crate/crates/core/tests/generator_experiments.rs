use lbpbevm::datasets::{generate_synthetic, SynthSpec};
use lbpbevm::ebt::{train_ebt, EbtParams};
use lbpbevm::features::{extract_all, ExtractionConfig};
use lbpbevm::metrics::{evaluate, ncc_matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn two_gaussians(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let c = i % 2;
            let shift = if c == 0 { -1.0 } else { 1.0 };
            ((0..dim).map(|_| shift + noise.sample(rng)).collect(), c)
        })
        .unzip()
}

#[test]
fn oob_accuracy_on_separated_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (x, y) = two_gaussians(&mut rng, 200, 512);
    let classes = vec!["neg".to_string(), "pos".to_string()];
    let params = EbtParams {
        seed: 5,
        ..EbtParams::default()
    };
    let model = train_ebt(&x, &y, &classes, params).unwrap();
    let oob = model.oob_accuracy(&x, &y).unwrap().unwrap();
    assert!(oob >= 0.95, "oob accuracy {oob}");

    let (hx, hy) = two_gaussians(&mut rng, 200, 512);
    let held_out = evaluate(&model, &hx, &hy).unwrap().accuracy;
    assert!(held_out >= 0.95, "held-out accuracy {held_out}");
}

#[test]
fn same_class_ncc_dominates_cross_class() {
    let spec = SynthSpec::new(6, 6, 8192, 3);
    let traces = generate_synthetic(&spec).unwrap();
    let rows = extract_all(&traces.signals, &ExtractionConfig::default()).unwrap();
    let labels = traces.labels();

    let firsts: Vec<&Vec<f64>> = (0..6)
        .map(|c| &rows[labels.iter().position(|&l| l == c).unwrap()])
        .collect();
    let cross = ncc_matrix(&firsts).unwrap();
    let min_cross = (0..6)
        .flat_map(|a| (0..6).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| cross[a][b])
        .fold(f64::INFINITY, f64::min);

    for c in 0..6 {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r)
            .collect();
        assert_eq!(members.len(), 6);
        let within = ncc_matrix(&members).unwrap();
        let min_within = within.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert!(
            min_within >= min_cross,
            "class {}: min within {min_within} < min cross {min_cross}",
            traces.classes[c]
        );
    }
}
