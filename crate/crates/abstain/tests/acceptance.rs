//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use abstain::mcs::{decode_binary, encode_binary, load_mcs, save_mcs, Format};
use abstain::Error as IoError;
use abstain_core::metrics::{compute_all, compute_item, normalize_metric};
use abstain_core::patch::{tile_grid, SlideImage};
use abstain_core::selection::{accuracy_vs_threshold, arq_sweep, referral_curve};
use abstain_core::stats::{correlation_report, wasserstein_1d};
use abstain_core::{
    simulate, ItemUncertainty, LabelSet, McSampleSet, Metric, SimConfig, Simulation, Statistic,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_secs), || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

/// The shared synthetic dataset: default simulator configuration.
struct Dataset {
    sim: Simulation,
    items: Vec<ItemUncertainty>,
    correct: Vec<bool>,
    elapsed: Duration,
}

fn dataset() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| {
        let start = Instant::now();
        let sim = simulate(&SimConfig::default()).expect("default config is valid");
        let items = compute_all(&sim.samples);
        let correct = items
            .iter()
            .zip(sim.labels.as_slice())
            .map(|(u, &l)| u.predicted_class == l)
            .collect();
        Dataset {
            sim,
            items,
            correct,
            elapsed: start.elapsed(),
        }
    })
}

fn metric_oracle_suite() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
    let mut compared = 0;
    for _ in 0..100 {
        let set = common::random_set(&mut rng, 16, 8, 6);
        for i in 0..set.items() {
            let got = compute_item(&set, i).map_err(|e| e.to_string())?;
            let want = common::oracle_metrics(&set, i);
            ensure(got.predicted_class == want.predicted_class, || {
                format!("argmax differs on item {i}")
            })?;
            let pairs = [
                ("sigma", got.sigma_uncertainty, want.sigma),
                ("entropy", got.entropy, want.entropy),
                ("mi", got.mutual_information, want.mi),
                ("feinman", got.feinman, want.feinman),
                ("leibig", got.leibig, want.leibig),
                ("kwon-aleatoric", got.kwon_aleatoric, want.kwon_aleatoric),
                ("kwon-epistemic", got.kwon_epistemic, want.kwon_epistemic),
            ];
            for (name, a, b) in pairs {
                // the absolute floor only matters for values that are zero up to rounding
                ensure(common::close(a, b, 1e-10, 1e-15), || {
                    format!("{name}: {a:e} vs oracle {b:e}")
                })?;
                compared += 1;
            }
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!(
        "{compared} metric values within rel 1e-10 in {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn with_passes(set: &McSampleSet, order: &[usize]) -> McSampleSet {
    let probs = order
        .iter()
        .flat_map(|&t| (0..set.items()).flat_map(move |i| set.row(t, i).iter().copied()))
        .collect();
    McSampleSet::new(order.len(), set.items(), set.classes(), probs).unwrap()
}

fn values(u: &ItemUncertainty) -> Vec<f64> {
    Metric::ALL.iter().map(|&m| u.value(m)).collect()
}

fn algebraic_identities() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
    for k in 0..1000 {
        let t = rng.random_range(1..=16);
        let c = rng.random_range(2..=6);
        let set = McSampleSet::new(t, 1, c, common::random_probs(&mut rng, t, c)).unwrap();
        let u = compute_item(&set, 0).map_err(|e| e.to_string())?;
        let gini = 1.0 - u.mean_probs.iter().map(|m| m * m).sum::<f64>();
        ensure(
            (u.kwon_aleatoric + u.kwon_epistemic - gini).abs() <= 1e-12,
            || {
                format!(
                    "item {k}: aleatoric + epistemic = {:e}, 1 - sum mu^2 = {gini:e}",
                    u.kwon_aleatoric + u.kwon_epistemic
                )
            },
        )?;
        ensure((u.feinman - u.kwon_epistemic).abs() <= 1e-12, || {
            format!("item {k}: feinman != kwon epistemic")
        })?;
        ensure(u.mutual_information <= u.entropy + 1e-12, || {
            format!("item {k}: MI exceeds entropy")
        })?;

        let doubled: Vec<usize> = (0..t).chain(0..t).collect();
        let mut shuffled: Vec<usize> = (0..t).collect();
        shuffled.shuffle(&mut rng);
        for (what, order) in [("duplicated", doubled), ("permuted", shuffled)] {
            let other = compute_item(&with_passes(&set, &order), 0).map_err(|e| e.to_string())?;
            for (a, b) in values(&u).into_iter().zip(values(&other)) {
                ensure((a - b).abs() <= 1e-12, || {
                    format!("item {k}: {what} passes moved a metric by {:e}", a - b)
                })?;
            }
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!(
        "1000 items in {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn hand_cases() -> Check {
    let near = |name: &str, got: f64, want: f64, tol: f64| {
        ensure((got - want).abs() <= tol, || {
            format!("{name} = {got}, expected {want}")
        })
    };
    let ln2 = std::f64::consts::LN_2;
    let a = McSampleSet::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let u = compute_item(&a, 0).map_err(|e| e.to_string())?;
    near("sigma", u.sigma_uncertainty, 0.5, 1e-12)?;
    near("entropy", u.entropy, ln2, 1e-12)?;
    near("mi", u.mutual_information, ln2, 1e-12)?;
    near("feinman", u.feinman, 0.5, 1e-12)?;
    near("leibig", u.leibig, 0.5, 1e-12)?;
    near("kwon aleatoric", u.kwon_aleatoric, 0.0, 1e-12)?;
    near("kwon epistemic", u.kwon_epistemic, 0.5, 1e-12)?;

    let b = McSampleSet::new(2, 1, 2, vec![0.8, 0.2, 0.6, 0.4]).unwrap();
    let u = compute_item(&b, 0).map_err(|e| e.to_string())?;
    near("mu0", u.mean_probs[0], 0.7, 1e-12)?;
    near("mu1", u.mean_probs[1], 0.3, 1e-12)?;
    near("sigma", u.sigma_uncertainty, 0.1, 1e-12)?;
    near("feinman", u.feinman, 0.02, 1e-12)?;
    near("kwon aleatoric", u.kwon_aleatoric, 0.40, 1e-12)?;
    near("kwon epistemic", u.kwon_epistemic, 0.02, 1e-12)?;
    // H(0.7, 0.3) - (H(0.8, 0.2) + H(0.6, 0.4)) / 2 evaluated at 50 digits
    near("mi", u.mutual_information, 0.024157256781171305, 1e-6)?;
    Ok(format!("mi = {:.9}", u.mutual_information))
}

fn error_uncertainty_correlation() -> Check {
    let start = Instant::now();
    let data = dataset();
    let report = correlation_report(&data.items, &data.sim.labels, Metric::Entropy, 20)
        .map_err(|e| e.to_string())?;
    let rho = report.spearman_rho.value().ok_or("spearman unavailable")?;
    let w1 = match report.wasserstein {
        Statistic::Value(v) => v,
        other => return Err(format!("wasserstein {other:?}")),
    };
    ensure(rho >= 0.9, || format!("spearman {rho:.4} < 0.9"))?;
    ensure(w1 > 0.0, || "wasserstein is 0".into())?;
    within(data.elapsed + start.elapsed(), 30)?;
    Ok(format!(
        "rho = {rho:.4}, W1 = {w1:.4} ({} correct, {} wrong) in {:.2}s",
        report.n_correct,
        report.n_error,
        (data.elapsed + start.elapsed()).as_secs_f64()
    ))
}

fn referral_improvement() -> Check {
    let data = dataset();
    let sigma: Vec<f64> = data.items.iter().map(|u| u.sigma_uncertainty).collect();
    let referral = referral_curve(&sigma, &data.correct, &[0.0, 0.2]).map_err(|e| e.to_string())?;
    let (base, referred) = (referral.points[0].1, referral.points[1].1);
    ensure(referred - base >= 0.02, || {
        format!("accuracy {base:.4} -> {referred:.4} at 20% referral")
    })?;
    let normalized = normalize_metric(&sigma).map_err(|e| e.to_string())?;
    let threshold = accuracy_vs_threshold(&normalized, &data.correct, &[0.5, 1.0])
        .map_err(|e| e.to_string())?;
    let (half, full) = (threshold.points[0].1, threshold.points[1].1);
    ensure(half >= full, || {
        format!("accuracy at u=0.5 ({half:.4}) < at u=1 ({full:.4})")
    })?;
    Ok(format!(
        "referral 0% {base:.4} -> 20% {referred:.4}; threshold 0.5 {half:.4} >= 1.0 {full:.4}"
    ))
}

fn arq_tradeoff() -> Check {
    let data = dataset();
    let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.5).collect();
    let curve = arq_sweep(&data.sim.samples, &data.sim.labels, &grid, 1.0, 0.0)
        .map_err(|e| e.to_string())?;
    let ys: Vec<f64> = curve.ys().collect();
    let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let interior = (1..ys.len() - 1).find(|&k| ys[k] == best);
    let k = interior.ok_or_else(|| format!("maximum {best} only at the grid ends"))?;
    ensure(best > ys[0], || {
        format!("ARQ max {best} does not exceed ARQ(0) {}", ys[0])
    })?;
    Ok(format!(
        "ARQ(0) = {:.4}, max {best:.4} at epsilon {}",
        ys[0], grid[k]
    ))
}

fn wasserstein_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0007);
    let sample = |rng: &mut ChaCha8Rng, max: usize| -> Vec<f64> {
        let n = rng.random_range(1..=max);
        // a coarse grid half the time so that ties are common
        if rng.random_bool(0.5) {
            (0..n)
                .map(|_| rng.random_range(-4..=4) as f64 / 4.0)
                .collect()
        } else {
            (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
        }
    };
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (a, b) = (sample(&mut rng, 6), sample(&mut rng, 6));
        let got = wasserstein_1d(&a, &b).map_err(|e| e.to_string())?;
        let want = common::brute_force_w1(&a, &b);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-9, || {
            format!("pair {k}: {got} vs coupling optimum {want}")
        })?;
    }
    for k in 0..1000 {
        let (a, b, c) = (
            sample(&mut rng, 20),
            sample(&mut rng, 20),
            sample(&mut rng, 20),
        );
        let w = |x: &[f64], y: &[f64]| wasserstein_1d(x, y).unwrap();
        ensure((w(&a, &b) - w(&b, &a)).abs() <= 1e-12, || {
            format!("triple {k}: asymmetric")
        })?;
        ensure(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-12, || {
            format!("triple {k}: triangle inequality fails")
        })?;
    }
    Ok(format!(
        "200 pairs, max deviation {worst:.1e}; 1000 triples"
    ))
}

fn file_format_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0008);
    let mut worst_csv: f64 = 0.0;
    for k in 0..50 {
        let raw = common::random_set(&mut rng, 8, 8, 6);
        // the binary payload is f32, so start from values it can hold exactly
        let narrowed: Vec<f64> = raw.as_slice().iter().map(|&v| v as f32 as f64).collect();
        let set = McSampleSet::new(raw.passes(), raw.items(), raw.classes(), narrowed)
            .map_err(|e| e.to_string())?;
        let labels = LabelSet::new(
            (0..set.items())
                .map(|_| rng.random_range(0..set.classes()))
                .collect(),
            set.classes(),
        )
        .unwrap();

        let bin = dir.path().join(format!("{k}.mcs"));
        save_mcs(&set, Some(&labels), &bin, Format::Binary).map_err(|e| e.to_string())?;
        let (back, back_labels) = load_mcs(&bin, Format::Binary).map_err(|e| e.to_string())?;
        let exact = back
            .as_slice()
            .iter()
            .zip(set.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(exact && back_labels.as_ref() == Some(&labels), || {
            format!("set {k}: binary round trip differs")
        })?;

        let csv = dir.path().join(format!("{k}.csv"));
        save_mcs(&raw, Some(&labels), &csv, Format::Csv).map_err(|e| e.to_string())?;
        let (back, back_labels) = load_mcs(&csv, Format::Csv).map_err(|e| e.to_string())?;
        for (a, b) in back.as_slice().iter().zip(raw.as_slice()) {
            worst_csv = worst_csv.max((a - b).abs());
        }
        ensure(
            worst_csv <= 1e-9 && back_labels.as_ref() == Some(&labels),
            || format!("set {k}: csv round trip differs"),
        )?;
    }

    let good = McSampleSet::new(1, 1, 2, vec![0.5, 0.5]).unwrap();
    let mut bytes = encode_binary(&good, None).unwrap();
    bytes[0] ^= 0xFF;
    ensure(
        matches!(decode_binary(&bytes), Err(IoError::BadMagic)),
        || "corrupted magic accepted".into(),
    )?;

    let with_header = |header: &str, values: &[f32]| {
        let mut b = b"MCS1".to_vec();
        b.extend_from_slice(&(header.len() as u32).to_le_bytes());
        b.extend_from_slice(header.as_bytes());
        b.extend(values.iter().flat_map(|v| v.to_le_bytes()));
        b
    };
    let header = r#"{"format_version":1,"T":3,"N":1,"C":2,"has_labels":false}"#;
    let short = with_header(header, &[0.5, 0.5, 0.5, 0.5]);
    ensure(
        matches!(decode_binary(&short), Err(IoError::PayloadLength { .. })),
        || "bad dimensions accepted".into(),
    )?;
    let header = r#"{"format_version":1,"T":1,"N":1,"C":2,"has_labels":false}"#;
    let off = with_header(header, &[0.9, 0.2]);
    ensure(
        matches!(
            decode_binary(&off),
            Err(IoError::Data(
                abstain_core::Error::RowSumOutOfTolerance { .. }
            ))
        ),
        || "out-of-simplex row accepted".into(),
    )?;
    Ok(format!(
        "50 sets; binary bit-exact, csv max deviation {worst_csv:.1e}; 3 corruptions rejected"
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_abstain"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "abstain {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn path(p: &Path) -> &str {
    p.to_str().expect("temp paths are utf-8")
}

fn patch_pipeline() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut img = SlideImage::filled(400, 200, [255, 255, 255]).unwrap();
    for y in 0..200 {
        for x in 0..200 {
            img.set_pixel(x, y, [214, 130, 180]);
        }
    }
    let slide = dir.path().join("half_tissue.ppm");
    abstain::image::write_ppm(&img, &slide).map_err(|e| e.to_string())?;
    let out = dir.path().join("patches");
    run_cli(&[
        "patches",
        "--slide",
        path(&slide),
        "--threshold",
        "0.5",
        "--outdir",
        path(&out),
    ])?;
    let manifest = fs::read_to_string(out.join("manifest.csv")).map_err(|e| e.to_string())?;
    let golden = include_str!("fixtures/half_tissue_manifest.csv");
    ensure(manifest == golden, || {
        format!("manifest differs from golden:\n{manifest}")
    })?;
    let rows: Vec<&str> = manifest.lines().skip(1).collect();
    let kept = rows.iter().filter(|r| r.ends_with(",true")).count();
    ensure(rows.len() == 2 && kept == 1, || {
        format!("{} cells, {kept} kept", rows.len())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0009);
    for _ in 0..20 {
        let (w, h) = (rng.random_range(1..=700), rng.random_range(1..=700));
        let size = rng.random_range(1..=260);
        let cells = tile_grid(&SlideImage::filled(w, h, [0, 0, 0]).unwrap(), "r", size)
            .map_err(|e| e.to_string())?;
        let expected = (w / size) * (h / size);
        ensure(cells.len() == expected, || {
            format!(
                "{w}x{h} by {size}: {} cells, expected {expected}",
                cells.len()
            )
        })?;
    }
    Ok("2 cells, 1 kept, manifest matches golden; 20 random tilings".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("criterion4.mcs");
    run_cli(&["simulate", "--out", path(&input)])?;
    let variants: [&[&str]; 3] = [&["metrics"], &["select", "--epsilon", "1.5"], &["select"]];
    for extra in variants {
        let mut reference: Option<Vec<u8>> = None;
        for threads in ["1", "2", "8", "1", "8"] {
            let mut args = extra.to_vec();
            args.extend(["--input", path(&input), "--threads", threads]);
            let report = run_cli(&args)?;
            match &reference {
                None => reference = Some(report),
                Some(r) => ensure(*r == report, || {
                    format!("{extra:?} differs with --threads {threads}")
                })?,
            }
        }
    }
    Ok(
        "metrics, select and the select sweep are byte-identical over 5 runs with 1/2/8 threads"
            .into(),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric oracle suite", metric_oracle_suite),
        ("algebraic identities", algebraic_identities),
        ("hand cases", hand_cases),
        (
            "error-uncertainty correlation",
            error_uncertainty_correlation,
        ),
        ("referral improvement", referral_improvement),
        ("ARQ tradeoff", arq_tradeoff),
        ("Wasserstein exactness", wasserstein_exactness),
        ("file-format round trip", file_format_round_trip),
        ("patch pipeline", patch_pipeline),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
