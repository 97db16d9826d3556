//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crashviz::client::{BackendConfig, ClientError, GenerationClient, ResponseCache};
use crashviz::corpus::{synthetic_corpus, DEFAULT_CASES, DEFAULT_SEED};
use crashviz::pipeline::{evaluate_store, run_batch, RunStatus};
use crashviz::ratings::select_sheets;
use crashviz::record_io::RecordSlot;
use crashviz::store::CaseStore;
use crashviz_core::geometry::TurnMovement;
use crashviz_core::perturb::Corruption;
use crashviz_core::prompt::{Attachment, DAMAGE_GUIDE};
use crashviz_core::{
    aggregate, build_prompt, build_scene, classify_movement, evaluate_auto, render_report, render_svg,
    standard_template, Compass, MetricId, Rater, RenderOptions, ReportFormat, ScoreSheet, Tolerances,
};

const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const END_TO_END_BUDGET: Duration = Duration::from_secs(60);
const RENDER_REPEATS: usize = 1000;
const CASES: u64 = 79;
const GOLDEN_PROMPT: &str = include_str!("../../core/tests/golden/prompt_default.txt");

/// Published per-metric means, metric order, per model.
const PUBLISHED_MEANS: [(&str, [f64; 10]); 3] = [
    ("GPT-4o", [0.95, 0.98, 0.91, 0.42, 0.16, 0.47, 0.30, 0.44, 0.42, 0.91]),
    ("Gemini-1.5-Flash", [0.70, 0.93, 0.98, 0.44, 0.02, 0.19, 0.26, 0.07, 0.16, 0.93]),
    ("Janus-4o", [0.33, 1.00, 1.00, 0.09, 0.00, 0.07, 0.00, 0.00, 0.00, 0.98]),
];
/// Column sums of the published cells.
const PUBLISHED_COLUMN_SUMS: [(&str, f64); 3] = [("GPT-4o", 5.96), ("Gemini-1.5-Flash", 4.68), ("Janus-4o", 3.47)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dp2(x: f64) -> String {
    format!("{x:.2}")
}

fn oracle_self_consistency() -> Outcome {
    let started = Instant::now();
    let tpl = standard_template();
    let records = synthetic_corpus(DEFAULT_CASES, DEFAULT_SEED, &tpl);
    let mut perfect = 0;
    for r in &records {
        let Ok(scene) = build_scene(r, &tpl) else { continue };
        if evaluate_auto("oracle", &scene, r, &tpl, &Tolerances::default()).is_ok_and(|s| s.total() == 10) {
            perfect += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        records.len() == 79 && perfect == 79 && elapsed < ORACLE_BUDGET,
        format!("{perfect}/{} cases score 10/10 in {:.2} s (budget {} s)", records.len(), elapsed.as_secs_f64(), ORACLE_BUDGET.as_secs()),
    )
}

fn perturbation_flips() -> Outcome {
    let tpl = standard_template();
    let tol = Tolerances::default();
    let (mut detected, mut total) = (0, 0);
    let mut misses = Vec::new();
    for r in synthetic_corpus(DEFAULT_CASES, DEFAULT_SEED, &tpl) {
        let scene = build_scene(&r, &tpl).expect("corpus records build");
        for (metric, corruption) in Corruption::TARGETED {
            total += 1;
            let Some(bad) = corruption.apply(&scene, &tpl) else {
                misses.push(format!("{} m{}: not applicable", r.case_id, metric.number()));
                continue;
            };
            let sheet = evaluate_auto("perturbed", &bad, &r, &tpl, &tol).expect("truth builds");
            let flipped: Vec<MetricId> = MetricId::ALL.into_iter().filter(|m| !sheet.score(*m)).collect();
            if flipped == corruption.expected_flips() && flipped.contains(&metric) {
                detected += 1;
            } else if misses.len() < 5 {
                misses.push(format!("{} m{}: flipped {:?}", r.case_id, metric.number(), flipped));
            }
        }
    }
    let mut detail = format!("{detected}/{total} targeted corruptions flip exactly their metrics (m4 co-flips m5)");
    if !misses.is_empty() {
        detail.push_str(&format!("; first misses: {}", misses.join(", ")));
    }
    outcome(detected == total, detail)
}

fn movement_classification() -> Outcome {
    let mut agree = 0;
    for entry in Compass::ALL {
        for exit in Compass::ALL {
            // Counterclockwise circulation lowers the compass azimuth.
            let swept = (entry.bearing_deg() - exit.bearing_deg()).rem_euclid(360.0);
            let expected = match swept as u32 {
                0 => TurnMovement::UTurn,
                90 => TurnMovement::RightTurn,
                180 => TurnMovement::Through,
                270 => TurnMovement::LeftTurn,
                other => panic!("leg bearings are not 90 degrees apart: {other}"),
            };
            if classify_movement(entry, exit) == expected {
                agree += 1;
            }
        }
    }
    outcome(agree == 16, format!("{agree}/16 (entry, exit) pairs match the swept-angle oracle"))
}

fn geometry_constants() -> Outcome {
    let t = standard_template();
    let pass = t.outer_radius() == 82.5 && t.island_radius == 52.5 && t.num_circulating_lanes == 2 && t.lane_width == 15.0;
    outcome(
        pass,
        format!(
            "outer radius {} ft, island {} ft, {} lanes of {} ft (exact)",
            t.outer_radius(),
            t.island_radius,
            t.num_circulating_lanes,
            t.lane_width
        ),
    )
}

fn prompt_golden() -> Outcome {
    let text = build_prompt(&standard_template(), None).text;
    let identical = text.as_bytes() == GOLDEN_PROMPT.as_bytes();
    let headers = [
        "Roundabout Layout (Always Use This Configuration)",
        "From the Crash Report, Extract and Interpret",
        "Final Output",
    ]
    .iter()
    .all(|h| text.contains(h));
    let guide = DAMAGE_GUIDE.iter().filter(|l| text.lines().any(|t| t == **l)).count();
    outcome(
        identical && headers && guide == 13,
        format!("byte-identical: {identical}, section headers: {headers}, guide lines: {guide}/13"),
    )
}

/// 79 sheets per model where metric m scores 1 on the first k sheets, k
/// being the count whose k/79 is nearest the published mean.
fn published_fixtures() -> Vec<ScoreSheet> {
    let mut sheets = Vec::new();
    for (model, means) in PUBLISHED_MEANS {
        let counts = means.map(|m| (m * CASES as f64).round() as u64);
        for i in 0..CASES {
            let mut s = ScoreSheet::new(&format!("case-{:03}", i + 1), model, Rater::Consensus);
            for (metric, k) in MetricId::ALL.into_iter().zip(counts) {
                s.set(metric, i < k);
            }
            sheets.push(s);
        }
    }
    sheets
}

fn published_aggregation() -> Outcome {
    let report = aggregate(&published_fixtures()).expect("fixtures are non-empty");
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for (model, means) in PUBLISHED_MEANS {
        let m = report.model(model).expect("model present");
        for (metric, published) in MetricId::ALL.into_iter().zip(means) {
            cells += 1;
            let s = m.stat(metric);
            if dp2(s.mean) != dp2(published) {
                mismatches.push(format!("{model} m{}: {}/79={} vs {}", metric.number(), s.ones, dp2(s.mean), dp2(published)));
            }
        }
    }
    let mut totals_ok = true;
    let mut totals = Vec::new();
    for (model, sum) in PUBLISHED_COLUMN_SUMS {
        let total = report.model(model).expect("model present").total;
        totals_ok &= dp2(total) == dp2(sum);
        totals.push(format!("{model} {}", dp2(total)));
    }
    let markdown = String::from_utf8(render_report(&report, ReportFormat::Markdown)).expect("utf-8");
    let footnotes = [("GPT-4o", "6.29"), ("Gemini-1.5-Flash", "5.28"), ("Janus-4o", "3.64")]
        .iter()
        .all(|(model, published)| {
            markdown.lines().any(|l| l.starts_with("[^") && l.contains(model) && l.contains(published))
        });
    let mut detail = format!(
        "{}/{cells} cells exact at 2 dp; totals {} (expected 5.96/4.68/3.47): {}; discrepancy footnotes: {footnotes}",
        cells - mismatches.len(),
        totals.join(", "),
        if totals_ok { "match" } else { "differ" },
    );
    if !mismatches.is_empty() {
        detail.push_str(&format!("; no k/79 reproduces: {}", mismatches.join("; ")));
    }
    outcome(mismatches.is_empty() && totals_ok && footnotes, detail)
}

fn renderer_determinism() -> Outcome {
    let tpl = standard_template();
    let record = synthetic_corpus(1, DEFAULT_SEED, &tpl).remove(0);
    let scene = build_scene(&record, &tpl).expect("corpus records build");
    let unique: HashSet<Vec<u8>> = (0..RENDER_REPEATS)
        .map(|_| render_svg(&scene, &RenderOptions::default()).expect("default options"))
        .collect();
    outcome(unique.len() == 1, format!("{RENDER_REPEATS} renders, {} unique byte sequence(s)", unique.len()))
}

async fn mock_end_to_end() -> Outcome {
    let started = Instant::now();
    let tpl = standard_template();
    let dir = tempfile::tempdir().expect("temp dir");
    let store = Arc::new(CaseStore::open(dir.path()).expect("store"));
    let cache = store.cache().expect("cache");
    let client = Arc::new(GenerationClient::new(BackendConfig::mock("mock"), tpl.clone(), Some(cache)).expect("mock config"));
    let slots = synthetic_corpus(DEFAULT_CASES, DEFAULT_SEED, &tpl).into_iter().map(RecordSlot::Valid).collect();
    let manifest = match run_batch(store.clone(), slots, &tpl, &[client], 8).await {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("run_batch failed: {e}")),
    };
    let ok = manifest.count(RunStatus::Ok);
    let scored = evaluate_store(&store, &tpl, &Tolerances::default(), None).map(|s| s.scored).unwrap_or(0);
    let sheets = select_sheets(&store.all_sheets().unwrap_or_default()).sheets;
    let all_ones = aggregate(&sheets).is_ok_and(|r| {
        r.models.len() == 1 && r.models[0].per_metric.iter().all(|s| dp2(s.mean) == "1.00" && s.n == 79)
    });
    let elapsed = started.elapsed();
    outcome(
        ok == 79 && scored == 79 && all_ones && elapsed < END_TO_END_BUDGET,
        format!(
            "{ok}/79 generated ok, {scored} auto-scored, all means 1.00: {all_ones}, {:.2} s (budget {} s)",
            elapsed.as_secs_f64(),
            END_TO_END_BUDGET.as_secs()
        ),
    )
}

async fn client_behavior() -> Outcome {
    const TOKEN_ENV: &str = "CRASHVIZ_ACCEPTANCE_TOKEN";
    std::env::set_var(TOKEN_ENV, "t");
    let bundle = |tag: &str| {
        build_prompt(
            &standard_template(),
            Some(Attachment::crash_report("record.json", "application/json", tag.as_bytes().to_vec())),
        )
    };
    let config = |url: &str| {
        let mut c = BackendConfig::http("stub", url, "stub-model");
        c.auth_token_env = TOKEN_ENV.into();
        c.backoff_base_ms = 2;
        c.max_retries = 3;
        c
    };
    let client = |c, cache| GenerationClient::new(c, standard_template(), cache).expect("valid config");
    let mut results = Vec::new();

    let (stub, url) = common::start_stub().await;
    for _ in 0..8 {
        stub.push(503, b"busy");
    }
    let err = client(config(&url), None).generate(&bundle("a"), None).await.err();
    results.push(("retry cap", matches!(err, Some(ClientError::BackendUnreachable { attempts: 4, .. })) && stub.hits() == 4));

    let (stub, url) = common::start_stub().await;
    stub.push(503, b"busy");
    stub.push(503, b"busy");
    let ok = client(config(&url), None).generate(&bundle("a"), None).await;
    results.push(("retry then success", ok.is_ok_and(|r| r.attempts == 3) && stub.hits() == 3));

    let (stub, url) = common::start_stub().await;
    stub.push(404, b"no such model");
    let err = client(config(&url), None).generate(&bundle("a"), None).await.err();
    results.push(("no retry on 4xx", matches!(err, Some(ClientError::BackendRejected { status: Some(404), .. })) && stub.hits() == 1));

    let (stub, url) = common::start_stub().await;
    let dir = tempfile::tempdir().expect("temp dir");
    let cache = ResponseCache::open(dir.path()).expect("cache");
    let _ = client(config(&url), Some(cache.clone())).generate(&bundle("a"), None).await;
    let warm = client(config(&url), Some(cache));
    let hit = warm.generate(&bundle("a"), None).await;
    results.push(("cache hit, zero calls", hit.is_ok_and(|r| r.from_cache) && warm.request_count() == 0 && stub.hits() == 1));

    let (stub, url) = common::start_stub().await;
    *stub.delay.lock().expect("lock") = Duration::from_millis(30);
    let mut limited = config(&url);
    limited.max_inflight = 3;
    let c = Arc::new(client(limited, None));
    let jobs: Vec<_> = (0..12)
        .map(|i| {
            let c = c.clone();
            let b = bundle(&i.to_string());
            tokio::spawn(async move { c.generate(&b, None).await })
        })
        .collect();
    let mut all_ok = true;
    for j in jobs {
        all_ok &= j.await.is_ok_and(|r| r.is_ok());
    }
    results.push(("max_inflight respected", all_ok && stub.peak() <= 3 && stub.hits() == 12));

    let pass = results.iter().all(|(_, ok)| *ok);
    let detail = results
        .iter()
        .map(|(name, ok)| format!("{name}: {}", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

#[tokio::main]
async fn main() -> ExitCode {
    let checks: Vec<(&str, Outcome)> = vec![
        ("oracle self-consistency", oracle_self_consistency()),
        ("perturbation flips", perturbation_flips()),
        ("movement classification", movement_classification()),
        ("geometry constants", geometry_constants()),
        ("prompt golden file", prompt_golden()),
        ("aggregation against published means", published_aggregation()),
        ("renderer determinism", renderer_determinism()),
        ("mock end-to-end", mock_end_to_end().await),
        ("client behavior", client_behavior().await),
    ];
    let mut failed = 0;
    for (name, o) in &checks {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
