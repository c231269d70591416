//! Acceptance criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test -p lbpbevm --test acceptance -- --nocapture` to see them.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use lbpbevm::bevm::{self, evm_map};
use lbpbevm::datasets::{generate_synthetic, FeatureDataset, SynthSpec, TraceDataset};
use lbpbevm::ebt::{ensemble_predict, train_ebt, EbtParams};
use lbpbevm::features::{extract_all, extract_lbp_bevm, Descriptor, ExtractionConfig, Normalization};
use lbpbevm::metrics::{kfold_evaluate, ncc, ncc_matrix};
use lbpbevm::signal2d::{PowerMatrix, PowerSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Serializes the suite so wall-clock checks are not skewed by siblings.
fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(name: &str, pass: bool, detail: String) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name} failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> PowerMatrix {
    let values = (0..rows * cols).map(|_| r.random_range(0.0..100.0)).collect();
    PowerMatrix::from_vec(rows, cols, values).unwrap()
}

/// EVM of the window centred at (i, j), summed term by term from the
/// moment definitions with 1-based index ramps.
fn evm_by_summation(m: &PowerMatrix, i: usize, j: usize, n: usize) -> f64 {
    let h = n / 2;
    let at = |u: usize, v: usize| m.get(i - h + u - 1, j - h + v - 1);
    let mut mass = 0.0;
    let (mut si, mut sj) = (0.0, 0.0);
    for u in 1..=n {
        for v in 1..=n {
            let p = at(u, v);
            mass += p;
            si += u as f64 * p;
            sj += v as f64 * p;
        }
    }
    let (ic, jc) = (si / mass, sj / mass);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for u in 1..=n {
        for v in 1..=n {
            let p = at(u, v);
            let (du, dv) = (u as f64 - ic, v as f64 - jc);
            a += du * du * p;
            b += dv * dv * p;
            c += du * dv * p;
        }
    }
    // Larger root of t^2 - (a + b) t + (ab - c^2).
    let tr = a + b;
    let det = a * b - c * c;
    let pev = 0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt());
    pev / m.get(i, j)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn constant_region_evm_is_4200_for_kernel_15() {
    let _g = exclusive();
    let start = Instant::now();
    let evm = evm_map(&PowerMatrix::constant(60, 60, 7.5).unwrap(), 15).unwrap();
    let worst = evm
        .valid_values()
        .map(|(_, _, v)| rel_err(v, 4200.0))
        .fold(0.0, f64::max);
    let count = evm.valid_values().count();
    let elapsed = start.elapsed();
    report(
        "constant-region EVM, n = 15",
        count > 0 && worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("{count} values, max relative error {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn constant_region_evm_matches_closed_form() {
    let _g = exclusive();
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, expected) in [(3, 6.0), (5, 50.0), (7, 196.0), (9, 540.0), (15, 4200.0)] {
        let closed = (n * (n * n * n - n)) as f64 / 12.0;
        let m = PowerMatrix::constant(2 * n + 3, 2 * n + 5, 3.25).unwrap();
        let oracle = evm_by_summation(&m, n, n + 1, n);
        let evm = evm_map(&m, n).unwrap();
        let worst = evm
            .valid_values()
            .map(|(_, _, v)| rel_err(v, closed))
            .fold(0.0, f64::max);
        let ok = closed == expected
            && bevm::constant_region_evm(n) == expected
            && rel_err(oracle, expected) <= 1e-9
            && worst <= 1e-9;
        pass &= ok;
        lines.push(format!("n={n}: oracle {oracle}, map err {worst:.1e}"));
    }
    let elapsed = start.elapsed();
    report(
        "constant-region EVM closed form",
        pass && elapsed < Duration::from_secs(5),
        format!("{}; {elapsed:?}", lines.join("; ")),
    );
}

#[test]
fn default_threshold_sends_constant_matrix_to_down_histogram() {
    let _g = exclusive();
    let signal = PowerSignal::new(vec![42.0; 60 * 60], 1.0).unwrap();
    let cfg = ExtractionConfig {
        normalization: Normalization::Counts,
        ..ExtractionConfig::default()
    };
    let f = extract_lbp_bevm(&signal, &cfg).unwrap();
    let up: f64 = f.h_up().iter().sum();
    let down: f64 = f.h_down().iter().sum();
    let valid = ((60 - 14) * (60 - 14)) as f64;
    report(
        "default threshold on a constant matrix",
        up == 0.0 && down == valid && f.h_down()[255] == valid,
        format!("h_up mass {up}, h_down mass {down} of {valid}"),
    );
}

#[test]
fn features_are_scale_invariant() {
    let _g = exclusive();
    let mut spec = SynthSpec::new(5, 20, 4096, 11);
    spec.noise_sigma = 2.0;
    let traces = generate_synthetic(&spec).unwrap();
    let cfg = ExtractionConfig::default();
    let mut mismatches = 0;
    for s in &traces.signals {
        let base = extract_lbp_bevm(s, &cfg).unwrap();
        for c in [0.5, 3.0, 1000.0] {
            if extract_lbp_bevm(&s.scaled(c).unwrap(), &cfg).unwrap() != base {
                mismatches += 1;
            }
        }
    }
    report(
        "scale invariance",
        traces.signals.len() == 100 && mismatches == 0,
        format!("{} traces x 3 factors, {mismatches} mismatches", traces.signals.len()),
    );
}

#[test]
fn low_threshold_recovers_plain_lbp() {
    let _g = exclusive();
    let mut r = rng(5);
    let n = 5;
    let h = n / 2;
    let mut mismatches = 0;
    for _ in 0..50 {
        let (rows, cols) = (r.random_range(8..30), r.random_range(8..30));
        let m = random_matrix(&mut r, rows, cols);
        let signal = PowerSignal::new(m.as_slice().to_vec(), 1.0).unwrap();
        let cfg = ExtractionConfig {
            width: Some(cols),
            kernel: n,
            threshold: -1.0,
            normalization: Normalization::Counts,
            ..ExtractionConfig::default()
        };
        let f = extract_lbp_bevm(&signal, &cfg).unwrap();

        let mut expected = vec![0.0; 256];
        let offsets = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];
        for i in h..rows - h {
            for j in h..cols - h {
                let centre = m.get(i, j);
                let mut code = 0usize;
                for (k, (di, dj)) in offsets.iter().enumerate() {
                    let nb = m.get((i as isize + di) as usize, (j as isize + dj) as usize);
                    if nb >= centre {
                        code |= 1 << k;
                    }
                }
                expected[code] += 1.0;
            }
        }
        if f.h_up() != expected.as_slice() || f.h_down().iter().any(|&v| v != 0.0) {
            mismatches += 1;
        }
    }
    report(
        "plain-LBP recovery",
        mismatches == 0,
        format!("50 matrices, {mismatches} mismatches"),
    );
}

#[test]
fn ncc_properties_hold() {
    let _g = exclusive();
    let mut r = rng(6);
    let mut failures = 0;
    for _ in 0..1000 {
        let d = r.random_range(1..64);
        let mut draw = || -> Vec<f64> {
            loop {
                let v: Vec<f64> = (0..d).map(|_| r.random_range(-10.0..10.0)).collect();
                if v.iter().any(|&x| x != 0.0) {
                    return v;
                }
            }
        };
        let (a, b) = (draw(), draw());
        let ab = ncc(&a, &b).unwrap();
        let ok = ncc(&a, &a).unwrap() == 1.0 && ab == ncc(&b, &a).unwrap() && ab.abs() <= 1.0 + 1e-12;
        failures += usize::from(!ok);
    }
    let vecs: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..32).map(|_| r.random_range(0.0..1.0)).collect())
        .collect();
    let grid = ncc_matrix(&vecs).unwrap();
    let unit_diagonal = (0..20).all(|i| grid[i][i] == 1.0);
    report(
        "NCC properties",
        failures == 0 && unit_diagonal,
        format!("1000 pairs, {failures} failures, unit diagonal {unit_diagonal}"),
    );
}

fn gaussian_classes(r: &mut ChaCha8Rng, per_class: usize, dim: usize, centres: &[f64]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, &mu) in centres.iter().enumerate() {
        for _ in 0..per_class {
            x.push(
                (0..dim)
                    .map(|d| mu * ((d % 3) as f64 - 1.0) + noise.sample(r))
                    .collect(),
            );
            y.push(c);
        }
    }
    (x, y)
}

#[test]
fn ensemble_vote_matches_brute_force_recount() {
    let _g = exclusive();
    let mut r = rng(7);
    let centres = [0.0, 0.6, 1.2];
    let (train_x, train_y) = gaussian_classes(&mut r, 60, 10, &centres);
    let (test_x, _) = gaussian_classes(&mut r, 167, 10, &centres);
    let test_x = &test_x[..500];
    let classes: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let params = EbtParams {
        learners: 12,
        max_splits: 20,
        seed: 3,
        bootstrap: true,
    };
    let model = train_ebt(&train_x, &train_y, &classes, params).unwrap();

    let mut disagreements = 0;
    for x in test_x {
        let mut votes = [0usize; 3];
        let mut mass = [0.0f64; 3];
        for tree in model.trees() {
            let (class, dist) = tree.predict(x).unwrap();
            votes[class] += 1;
            for (m, d) in mass.iter_mut().zip(dist) {
                *m += d;
            }
        }
        let mut best = 0;
        for c in 1..3 {
            if votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) {
                best = c;
            }
        }
        if ensemble_predict(&model, x).unwrap() != best {
            disagreements += 1;
        }
    }
    let again = train_ebt(&train_x, &train_y, &classes, params).unwrap();
    let identical = model.to_json().as_bytes() == again.to_json().as_bytes();
    report(
        "ensemble vote and reproducibility",
        disagreements == 0 && identical,
        format!(
            "{} test points, {disagreements} disagreements, identical JSON {identical}",
            test_x.len()
        ),
    );
}

struct DeskScale {
    traces: TraceDataset,
    lbp_bevm: FeatureDataset,
}

fn desk_scale() -> &'static DeskScale {
    static CORPUS: OnceLock<DeskScale> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let traces = generate_synthetic(&SynthSpec::desk_scale(42)).unwrap();
        let lbp_bevm = features_of(&traces, Descriptor::LbpBevm);
        DeskScale { traces, lbp_bevm }
    })
}

fn features_of(traces: &TraceDataset, descriptor: Descriptor) -> FeatureDataset {
    let cfg = ExtractionConfig {
        descriptor,
        ..ExtractionConfig::default()
    };
    FeatureDataset {
        rows: extract_all(&traces.signals, &cfg).unwrap(),
        labels: traces.labels(),
        classes: traces.classes.clone(),
        source: traces.source.clone(),
    }
}

#[test]
fn desk_scale_identification() {
    let _g = exclusive();
    let start = Instant::now();
    let corpus = desk_scale();
    let params = EbtParams {
        seed: 42,
        ..EbtParams::default()
    };
    let ours = kfold_evaluate(&corpus.lbp_bevm, 10, params, 42).unwrap();
    let baseline = kfold_evaluate(&features_of(&corpus.traces, Descriptor::Lbp), 10, params, 42).unwrap();
    let elapsed = start.elapsed();
    report(
        "desk-scale identification",
        corpus.lbp_bevm.len() == 240
            && ours.accuracy >= 0.95
            && ours.macro_f1 >= 0.95
            && ours.accuracy >= baseline.accuracy
            && elapsed <= Duration::from_secs(600),
        format!(
            "LBP-BEVM accuracy {:.4} macro-F1 {:.4}; LBP accuracy {:.4}; {elapsed:?}",
            ours.accuracy, ours.macro_f1, baseline.accuracy
        ),
    );
}

#[test]
fn within_class_similarity_exceeds_cross_class() {
    let _g = exclusive();
    let ds = &desk_scale().lbp_bevm;
    let grid = ncc_matrix(&ds.rows).unwrap();
    let (mut within, mut nw, mut cross, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..ds.len() {
        for b in a + 1..ds.len() {
            if ds.labels[a] == ds.labels[b] {
                within += grid[a][b];
                nw += 1;
            } else {
                cross += grid[a][b];
                nc += 1;
            }
        }
    }
    let (within, cross) = (within / nw as f64, cross / nc as f64);
    report(
        "within- vs cross-class NCC",
        within - cross >= 0.2,
        format!("within {within:.4}, cross {cross:.4}, gap {:.4}", within - cross),
    );
}

#[test]
fn extraction_and_query_throughput() {
    let _g = exclusive();
    let corpus = desk_scale();
    let model = train_ebt(
        &corpus.lbp_bevm.rows,
        &corpus.lbp_bevm.labels,
        &corpus.lbp_bevm.classes,
        EbtParams::default(),
    )
    .unwrap();

    let mut r = rng(10);
    let day: Vec<f64> = (0..86_400)
        .map(|t| 80.0 + 60.0 * ((t / 900) % 2) as f64 + r.random_range(0.0..5.0))
        .collect();
    let signal = PowerSignal::new(day, 1.0).unwrap();
    let cfg = ExtractionConfig::default();

    let start = Instant::now();
    let query = extract_lbp_bevm(&signal, &cfg).unwrap().into_values();
    let extract_time = start.elapsed();

    let start = Instant::now();
    let class = ensemble_predict(&model, &query).unwrap();
    let query_time = start.elapsed();

    report(
        "throughput",
        class < corpus.lbp_bevm.classes.len()
            && extract_time < Duration::from_secs(1)
            && query_time < Duration::from_millis(100),
        format!("86400-sample extraction {extract_time:?}, single query {query_time:?}"),
    );
}
