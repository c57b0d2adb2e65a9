//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sedpp::dataio::derive_weak_tags;
use sedpp::metrics::{match_intervals, score};
use sedpp::optimizer::{
    default_space, dichotomic_search, optimize_class_dependent, optimize_class_independent,
    Dimension, Evaluator, Search, SearchResult, TuneOutcome, TuningOptions, ValueKind,
};
use sedpp::segmentation::{
    binarize_absolute, binarize_hysteresis, compute_datawise_thresholds, merge_and_prune,
    segment_dataset,
};
use sedpp::synthgen::{generate, SynthCorpus, SynthSpec};
use sedpp::types::{default_margin_frames, CHALLENGE_MARGIN_SECONDS, DEFAULT_FRAME_DURATION};
use sedpp::{
    AnnotationSet, ClipPrediction, Collars, Counts, Event, Method, ParameterSpace, ScoreReport,
    Segment,
};

const SEED: u64 = 42;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn corpus_spec() -> SynthSpec {
    SynthSpec {
        seed: SEED,
        ..SynthSpec::default()
    }
}

fn corpus() -> SynthCorpus {
    generate(&corpus_spec()).expect("default synthetic spec is valid")
}

fn options() -> TuningOptions {
    let margin = default_margin_frames(DEFAULT_FRAME_DURATION, CHALLENGE_MARGIN_SECONDS);
    TuningOptions {
        collars: Collars::default(),
        min_gap_frames: margin,
        min_len_frames: margin,
        use_oracle: true,
    }
}

fn tune(method: Method, search: &Search, evaluator: &Evaluator) -> TuneOutcome {
    if method.is_class_dependent() {
        optimize_class_dependent(method, search, evaluator).unwrap()
    } else {
        optimize_class_independent(method, search, evaluator).unwrap()
    }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// AC1

fn event(clip: &str, class: &str, onset: f64, offset: f64) -> Event {
    Event::new(clip, class, onset, offset).unwrap()
}

fn annotations(events: &[Event]) -> AnnotationSet {
    let mut set = AnnotationSet::new();
    for e in events {
        set.add_clip(&format!("{}.wav", e.clip_id), Some(10.0));
        set.add_event(e.clone()).unwrap();
    }
    set
}

fn metric_fixtures() -> Check {
    let c = Collars::default();
    let tp = match_intervals(&[(1.0, 3.0)], &[(1.15, 2.7)], &c);
    ensure!(
        tp == Counts {
            tp: 1,
            fp: 0,
            fn_: 0
        },
        "within-collar pair: {tp:?}"
    );
    let miss = match_intervals(&[(1.0, 3.0)], &[(1.25, 3.0)], &c);
    ensure!(
        miss == Counts {
            tp: 0,
            fp: 1,
            fn_: 1
        },
        "late onset: {miss:?}"
    );

    let refs = vec![
        event("a", "A", 1.0, 3.0),
        event("a", "B", 4.0, 6.0),
        event("a", "B", 7.0, 8.0),
        event("b", "A", 0.5, 2.0),
    ];
    let set = annotations(&refs);

    let perfect = score(&set, &refs, &c).unwrap();
    ensure!(
        perfect.macro_f1 == 1.0 && perfect.error_rate == 0.0,
        "perfect: F1 {} ER {}",
        perfect.macro_f1,
        perfect.error_rate
    );
    let empty = score(&set, &[], &c).unwrap();
    ensure!(
        empty.macro_f1 == 0.0 && empty.error_rate == 1.0,
        "empty: F1 {} ER {}",
        empty.macro_f1,
        empty.error_rate
    );

    // A: 2 TP. B: one TP, one late onset (FP + FN).
    let preds = vec![
        event("a", "A", 1.15, 2.7),
        event("a", "B", 4.25, 6.0),
        event("a", "B", 7.1, 8.1),
        event("b", "A", 0.5, 2.0),
    ];
    let r = score(&set, &preds, &c).unwrap();
    let a = r.class("A").unwrap();
    let b = r.class("B").unwrap();
    ensure!(
        a.counts
            == Counts {
                tp: 2,
                fp: 0,
                fn_: 0
            },
        "A counts {:?}",
        a.counts
    );
    ensure!(
        b.counts
            == Counts {
                tp: 1,
                fp: 1,
                fn_: 1
            },
        "B counts {:?}",
        b.counts
    );
    ensure!(close(a.f1.unwrap(), 1.0, 1e-12), "A F1 {:?}", a.f1);
    ensure!(close(b.f1.unwrap(), 0.5, 1e-12), "B F1 {:?}", b.f1);
    ensure!(close(r.macro_f1, 0.75, 1e-12), "macro-F1 {}", r.macro_f1);
    ensure!(close(r.error_rate, 2.0 / 4.0, 1e-12), "ER {}", r.error_rate);

    // One class perfect, one class entirely missed.
    let half = ScoreReport::from_class_counts(BTreeMap::from([
        (
            "A".to_string(),
            Counts {
                tp: 3,
                fp: 0,
                fn_: 0,
            },
        ),
        (
            "B".to_string(),
            Counts {
                tp: 0,
                fp: 0,
                fn_: 2,
            },
        ),
    ]));
    ensure!(
        close(half.macro_f1, 0.5, 1e-12),
        "half macro-F1 {}",
        half.macro_f1
    );
    // Two references: one TP, one FP, one FN.
    let er = ScoreReport::from_class_counts(BTreeMap::from([(
        "A".to_string(),
        Counts {
            tp: 1,
            fp: 1,
            fn_: 1,
        },
    )]));
    ensure!(close(er.error_rate, 1.0, 1e-12), "ER {}", er.error_rate);

    Ok("hand fixtures exact; perfect 1.0/0.0; empty ER 1.0".into())
}

// AC2

fn random_curve(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=300);
    match rng.random_range(0..3) {
        0 => (0..len).map(|_| rng.random::<f64>()).collect(),
        1 => {
            let mut v: f64 = rng.random();
            (0..len)
                .map(|_| {
                    v = (v + rng.random_range(-0.15..0.15)).clamp(0.0, 1.0);
                    v
                })
                .collect()
        }
        // Few distinct levels so thresholds land exactly on values.
        _ => (0..len)
            .map(|_| rng.random_range(0..=4) as f64 / 4.0)
            .collect(),
    }
}

fn random_threshold(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.3) {
        rng.random_range(0..=4) as f64 / 4.0
    } else {
        rng.random()
    }
}

fn hysteresis_collapse() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = 20_000;
    for i in 0..n {
        let x = random_curve(&mut rng);
        let t = random_threshold(&mut rng);
        ensure!(
            binarize_hysteresis(&x, t, t).unwrap() == binarize_absolute(&x, t),
            "curve {i}: collapse fails at t = {t}"
        );

        let (a, b) = (random_threshold(&mut rng), random_threshold(&mut rng));
        let (high, low) = (a.max(b), a.min(b));
        let hyst = binarize_hysteresis(&x, high, low).unwrap();
        let strict = binarize_absolute(&x, high);
        let loose = binarize_absolute(&x, low);
        for f in 0..x.len() {
            ensure!(
                !strict[f] || hyst[f],
                "curve {i}: frame {f} above high but inactive"
            );
            ensure!(
                !hyst[f] || loose[f],
                "curve {i}: frame {f} active below low"
            );
        }
        let lower = low * rng.random::<f64>();
        let wider = binarize_hysteresis(&x, high, lower).unwrap();
        ensure!(
            hyst.iter().zip(&wider).all(|(&h, &w)| !h || w),
            "curve {i}: lowering t_low shrank the mask"
        );
    }
    Ok(format!("{n} random curves"))
}

// AC3

fn merge_prune_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = 20_000;
    for i in 0..n {
        let mut segs = Vec::new();
        let mut pos = rng.random_range(0..5);
        for _ in 0..rng.random_range(0..20) {
            let len = rng.random_range(1..15);
            segs.push(Segment::new(0, pos, pos + len));
            pos += len + rng.random_range(1..15);
        }
        let gap = rng.random_range(0..12);
        let min_len = rng.random_range(0..12);
        let out = merge_and_prune(&segs, gap, min_len);
        for w in out.windows(2) {
            ensure!(
                w[1].start_frame - w[0].end_frame >= gap,
                "case {i}: gap {} < {gap}",
                w[1].start_frame - w[0].end_frame
            );
        }
        ensure!(
            out.iter().all(|s| s.len() >= min_len),
            "case {i}: short segment survives"
        );
        for s in &out {
            let inside = |f: usize| segs.iter().any(|r| r.start_frame <= f && f < r.end_frame);
            ensure!(
                inside(s.start_frame) && inside(s.end_frame - 1),
                "case {i}: output boundary not on an input segment"
            );
        }
        ensure!(
            merge_and_prune(&out, gap, min_len) == out,
            "case {i}: not idempotent"
        );
    }
    Ok(format!("{n} random segment lists"))
}

// AC4

fn datawise_thresholds() -> Check {
    let corpus = corpus();
    let t = compute_datawise_thresholds(&corpus.predictions).unwrap();
    let n_classes = t.class_names.len();
    // Concatenate, then average frame-major with a compensated sum.
    let mut columns = vec![Vec::new(); n_classes];
    for clip in &corpus.predictions {
        for f in 0..clip.n_frames() {
            for (c, col) in columns.iter_mut().enumerate() {
                col.push(clip.get(f, c));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (c, col) in columns.iter().enumerate() {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &v in col {
            let y = v - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        let mean = sum / col.len() as f64;
        worst = worst.max((mean - t.per_class[c]).abs());
    }
    ensure!(worst <= 1e-9, "CDDWA deviates by {worst:e}");
    let global = t.per_class.iter().sum::<f64>() / n_classes as f64;
    ensure!(
        close(t.global, global, 1e-12),
        "CIDWA {} vs mean {}",
        t.global,
        global
    );
    Ok(format!(
        "max deviation {worst:.1e} over {n_classes} classes"
    ))
}

// AC5

fn optimizer_oracle() -> Check {
    let f = |x: &[f64]| -(x[0] - 0.37).powi(2);
    let space =
        ParameterSpace::new(vec![Dimension::new("t", 0.0, 1.0, ValueKind::Real)], 5, 3).unwrap();
    let r = dichotomic_search(&f, &space).unwrap();
    ensure!(r.best == vec![0.375], "quadratic best {:?}", r.best);

    let corpus = corpus();
    let (dicho, fine) = single_thread(|| {
        let evaluator =
            Evaluator::new(&corpus.predictions, &corpus.annotations, options()).unwrap();
        let dicho = tune(
            Method::Cia,
            &Search::Dichotomic(default_space(Method::Cia.family(), 9, 4).unwrap()),
            &evaluator,
        );
        let grid = vec![
            (
                "window".to_string(),
                (0..16).map(|i| (2 * i + 1) as f64).collect(),
            ),
            (
                "threshold".to_string(),
                (0..=100).map(|i| i as f64 / 100.0).collect(),
            ),
        ];
        let fine = tune(Method::Cia, &Search::Grid(grid), &evaluator);
        (dicho, fine)
    });
    ensure!(
        dicho.macro_f1 >= 0.99 * fine.macro_f1,
        "dichotomic {} < 0.99 x fine grid {}",
        dicho.macro_f1,
        fine.macro_f1
    );
    Ok(format!(
        "quadratic -> 0.375; CIA dichotomic {:.4} ({} evals) vs fine grid {:.4} ({} evals)",
        dicho.macro_f1, dicho.evaluations, fine.macro_f1, fine.evaluations
    ))
}

// AC6

fn class_dependent_dominance() -> Check {
    let mut lines = Vec::new();
    let hard = SynthSpec {
        seed: SEED,
        inside_prob: 0.5,
        outside_prob: 0.2,
        noise_sigma: 0.4,
        ..SynthSpec::default()
    };
    for (label, spec) in [("default", corpus_spec()), ("noisy", hard)] {
        let corpus = generate(&spec).unwrap();
        let evaluator =
            Evaluator::new(&corpus.predictions, &corpus.annotations, options()).unwrap();
        for (ci, cd) in [(Method::Cia, Method::Cda), (Method::Cih, Method::Cdh)] {
            let grid = Search::Grid(default_space(ci.family(), 9, 1).unwrap().initial_grid());
            let a = tune(ci, &grid, &evaluator).macro_f1;
            let b = tune(cd, &grid, &evaluator).macro_f1;
            ensure!(b >= a, "{label}: {cd} {b} < {ci} {a}");
            lines.push(format!("{label}: {cd} {b:.4} >= {ci} {a:.4}"));
        }
    }
    Ok(lines.join("; "))
}

// AC7

fn trace_count(r: &SearchResult) -> usize {
    r.trace
        .iter()
        .map(|s| s.grid.iter().map(Vec::len).product::<usize>())
        .sum()
}

fn evaluation_counts() -> Check {
    let f = |x: &[f64]| -x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
    for (dims, points, steps) in [(1, 5, 3), (2, 9, 4), (3, 4, 5)] {
        let space = ParameterSpace::new(
            (0..dims)
                .map(|d| Dimension::new(&format!("x{d}"), 0.0, 1.0, ValueKind::Real))
                .collect(),
            points,
            steps,
        )
        .unwrap();
        let r = dichotomic_search(&f, &space).unwrap();
        let expected = steps * points.pow(dims as u32);
        ensure!(
            r.evaluations == expected,
            "{dims}D: {} != {expected}",
            r.evaluations
        );
    }

    let corpus = generate(&SynthSpec {
        seed: SEED,
        n_clips: 30,
        noise_sigma: 0.15,
        ..SynthSpec::default()
    })
    .unwrap();
    let evaluator = Evaluator::new(&corpus.predictions, &corpus.annotations, options()).unwrap();
    let n_classes = evaluator.class_names().len();

    // Odd window snapping: counts follow the per-step grids exactly.
    for method in [Method::Cia, Method::Cih, Method::Cda] {
        let out = tune(
            method,
            &Search::Dichotomic(default_space(method.family(), 9, 4).unwrap()),
            &evaluator,
        );
        for (label, r) in &out.searches {
            ensure!(
                r.evaluations == trace_count(r),
                "{method}/{label}: count != trace"
            );
        }
        ensure!(
            out.evaluations
                == out
                    .searches
                    .iter()
                    .map(|(_, r)| r.evaluations)
                    .sum::<usize>(),
            "{method}: total != sum of searches"
        );
    }

    let frozen_window = ParameterSpace::new(
        vec![
            Dimension::new("window", 9.0, 9.0, ValueKind::OddInteger),
            Dimension::new("threshold", 0.0, 1.0, ValueKind::Real),
        ],
        9,
        4,
    )
    .unwrap();
    let searches = [
        (
            "grid",
            Search::Grid(
                default_space(Method::Cia.family(), 9, 1)
                    .unwrap()
                    .initial_grid(),
            ),
        ),
        ("dichotomic", Search::Dichotomic(frozen_window)),
    ];
    let mut detail = Vec::new();
    for (name, search) in &searches {
        let ci = tune(Method::Cia, search, &evaluator).evaluations;
        let cd = tune(Method::Cda, search, &evaluator).evaluations;
        ensure!(
            cd == n_classes * ci,
            "{name}: CDA {cd} != {n_classes} x CIA {ci}"
        );
        detail.push(format!("{name} CIA {ci} / CDA {cd}"));
    }
    Ok(format!("steps x points^dims exact; {}", detail.join(", ")))
}

// AC8

fn synthetic_recovery() -> Check {
    let corpus = corpus();
    let (train, test) = corpus.predictions.split_at(50);
    let outcome = single_thread(|| {
        let evaluator = Evaluator::new(train, &corpus.annotations, options()).unwrap();
        tune(
            Method::Cda,
            &Search::Dichotomic(default_space(Method::Cda.family(), 9, 4).unwrap()),
            &evaluator,
        )
    });
    let tags = derive_weak_tags(&corpus.annotations);
    let events = segment_dataset(test, &outcome.config, Some(&tags)).unwrap();
    let held_out = corpus
        .annotations
        .subset(test.iter().map(ClipPrediction::clip_id));
    let report = score(&held_out, &events, &Collars::default()).unwrap();
    ensure!(
        report.macro_f1 >= 0.90,
        "held-out macro-F1 {}",
        report.macro_f1
    );
    Ok(format!(
        "train macro-F1 {:.4}, held-out macro-F1 {:.4}, ER {:.4}",
        outcome.macro_f1, report.macro_f1, report.error_rate
    ))
}

// AC9

fn sedpp(dir: &Path, args: &[&str], threads: usize) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sedpp"))
        .args(args)
        .current_dir(dir)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "sedpp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn cli_run(root: &Path, threads: usize) -> BTreeMap<String, Vec<u8>> {
    let dir = root.join(format!("t{threads}"));
    // Relative paths: reports record their inputs.
    let d = |name: &str| name.to_string();
    fs::create_dir_all(&dir).unwrap();
    sedpp(
        &dir,
        &[
            "synth",
            "--seed",
            "42",
            "--clips",
            "40",
            "--noise-sigma",
            "0.15",
            "--out-dir",
            &d("corpus"),
        ],
        threads,
    );
    let preds = d("corpus/predictions");
    let refs = d("corpus/annotations.tsv");
    let mut stdout = Vec::new();
    for method in ["CIH", "CDA"] {
        let cfg = d(&format!("{method}.cfg"));
        let est = d(&format!("{method}.tsv"));
        let o = sedpp(
            &dir,
            &[
                "optimize",
                "--pred-dir",
                &preds,
                "--ref",
                &refs,
                "--method",
                method,
                "--points",
                "5",
                "--steps",
                "3",
                "--out-config",
                &cfg,
            ],
            threads,
        );
        stdout.extend(o.stdout);
        sedpp(
            &dir,
            &[
                "segment",
                "--pred-dir",
                &preds,
                "--method",
                method,
                "--config",
                &cfg,
                "--tags",
                &d("corpus/weak.tsv"),
                "--out",
                &est,
            ],
            threads,
        );
        stdout.extend(sedpp(&dir, &["evaluate", "--ref", &refs, "--est", &est], threads).stdout);
    }
    sedpp(
        &dir,
        &[
            "segment",
            "--pred-dir",
            &preds,
            "--method",
            "CDDWA",
            "--out",
            &d("cddwa.tsv"),
        ],
        threads,
    );
    let mut files = dir_bytes(&dir);
    files.insert("<stdout>".into(), stdout);
    files
}

fn determinism() -> Check {
    let corpus = generate(&SynthSpec {
        seed: SEED,
        n_clips: 40,
        noise_sigma: 0.15,
        ..SynthSpec::default()
    })
    .unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let evaluator =
                    Evaluator::new(&corpus.predictions, &corpus.annotations, options()).unwrap();
                [Method::Cih, Method::Cds].map(|m| {
                    tune(
                        m,
                        &Search::Dichotomic(default_space(m.family(), 5, 3).unwrap()),
                        &evaluator,
                    )
                })
            })
    };
    let (one, four, again) = (run(1), run(4), run(4));
    ensure!(
        one == four && four == again,
        "library tuning differs across thread counts"
    );
    ensure!(
        serde_json::to_vec(&one).unwrap() == serde_json::to_vec(&four).unwrap(),
        "serialized tuning reports differ"
    );

    let tmp = tempfile::tempdir().unwrap();
    let a = cli_run(tmp.path(), 1);
    let b = cli_run(tmp.path(), 4);
    ensure!(a.keys().eq(b.keys()), "CLI runs wrote different files");
    for (name, bytes) in &a {
        ensure!(
            b[name] == *bytes,
            "CLI output {name} differs between 1 and 4 threads"
        );
    }
    Ok(format!(
        "library and {} CLI artifacts identical across 1/4 threads",
        a.len()
    ))
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            id: "AC1",
            name: "metric correctness",
            limit: Some(Duration::from_secs(1)),
            run: metric_fixtures,
        },
        Criterion {
            id: "AC2",
            name: "hysteresis collapse",
            limit: Some(Duration::from_secs(10)),
            run: hysteresis_collapse,
        },
        Criterion {
            id: "AC3",
            name: "merge/prune contract",
            limit: Some(Duration::from_secs(5)),
            run: merge_prune_contract,
        },
        Criterion {
            id: "AC4",
            name: "data-wise threshold oracle",
            limit: None,
            run: datawise_thresholds,
        },
        Criterion {
            id: "AC5",
            name: "optimizer oracle equivalence",
            limit: Some(Duration::from_secs(300)),
            run: optimizer_oracle,
        },
        Criterion {
            id: "AC6",
            name: "class-dependent dominance",
            limit: None,
            run: class_dependent_dominance,
        },
        Criterion {
            id: "AC7",
            name: "evaluation-count accounting",
            limit: None,
            run: evaluation_counts,
        },
        Criterion {
            id: "AC8",
            name: "end-to-end synthetic recovery",
            limit: Some(Duration::from_secs(300)),
            run: synthetic_recovery,
        },
        Criterion {
            id: "AC9",
            name: "determinism",
            limit: None,
            run: determinism,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id.eq_ignore_ascii_case(f)) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("[PASS] {} {} ({:.2?}): {detail}", c.id, c.name, elapsed),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {} ({:.2?}): {detail}", c.id, c.name, elapsed);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
