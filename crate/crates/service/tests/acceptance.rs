//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::cell::Cell;
use std::collections::HashSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use flux_backend::{BackendError, ImageBackend, MockBackend, PanelImage};
use flux_core::affect::{
    rarity_multiplier, replay, AffectModel, EmojiLexicon, EmotionVector, FluxConfig,
    KeywordEntry, KeywordVocabulary, NarrativeState,
};
use flux_core::prompt::{dedup_phrases, split_phrases};
use flux_core::{
    classify_aspect, defaults, rasterize_sketch, snap_resolution, synthesize, AspectThresholds,
    CharacterAnchor, CompositionClass, Exact, GenerationRequest, Genre, PanelBox, PanelEvent,
    Resolution, SketchStrokes, SynthesisInput,
};
use flux_service::{api, Assets, Engine, PanelInput, SessionSettings, TurnResponse};
use http_body_util::BodyExt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn prop_result(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn shipped() -> AffectModel<f64> {
    AffectModel::new(defaults::lexicon().unwrap(), defaults::vocabulary().unwrap())
}

fn keywords(model: &AffectModel<f64>) -> Vec<String> {
    model.vocabulary.iter().map(|e| e.keyword.clone()).collect()
}

fn emojis(model: &AffectModel<f64>) -> Vec<String> {
    model.lexicon.iter().map(|(e, _)| e.to_string()).collect()
}

// ---------------------------------------------------------------------------
// scripted CLI session

const TRAGEDY_SCRIPT: &str = r#"{
  "anchor": "a red-haired detective in a trench coat",
  "start_ms": 1700000000000,
  "turns": [
    {"box": {"x": 0, "y": 0, "width": 512, "height": 512}, "keyword": "Street", "emoji": "🥀"},
    {"box": {"x": 520, "y": 0, "width": 1024, "height": 512}, "keyword": "Street", "emoji": "🥀",
     "strokes": {"strokes": [[[0, 400], [1023, 400]]], "stroke_width": 3}},
    {"box": {"x": 0, "y": 520, "width": 300, "height": 600}, "keyword": "Street", "emoji": "🥀"},
    {"box": {"x": 320, "y": 520, "width": 512, "height": 512}, "keyword": "Street", "emoji": "🥀"},
    {"box": {"x": 840, "y": 520, "width": 960, "height": 480}, "keyword": "Street", "emoji": "🥀",
     "strokes": {"strokes": [[[10, 10], [900, 470], [10, 470]]], "stroke_width": 5}},
    {"box": {"x": 0, "y": 1200, "width": 512, "height": 512}, "keyword": "Street", "emoji": "🥀"}
  ]
}"#;

struct CliRun {
    out: TempDir,
    responses: Vec<TurnResponse>,
    elapsed: Duration,
}

fn run_cli(script: &str) -> Result<CliRun, String> {
    let out = TempDir::new().map_err(|e| e.to_string())?;
    let script_path = out.path().join("session.json");
    std::fs::write(&script_path, script).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_flux"))
        .args(["run", "--script"])
        .arg(&script_path)
        .args(["--backend", "mock", "--out"])
        .arg(out.path().join("out"))
        .env("FLUX_LOG", "warn")
        .output()
        .map_err(|e| format!("spawn flux: {e}"))?;
    let elapsed = start.elapsed();
    if !output.status.success() {
        return Err(format!("flux run failed: {}", String::from_utf8_lossy(&output.stderr)));
    }
    let responses = String::from_utf8_lossy(&output.stdout)
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<Vec<TurnResponse>, _>>()
        .map_err(|e| format!("bad CLI output: {e}"))?;
    Ok(CliRun { out, responses, elapsed })
}

impl CliRun {
    fn comic(&self) -> std::path::PathBuf {
        self.out.path().join("out").join("comic")
    }
}

fn flux_by_fourth_panel(run: &CliRun) -> Outcome {
    // independent oracle: unit injection, beta 1, geometric accumulation
    let alpha: f64 = 0.8;
    let oracle: Vec<f64> = (1..=6).map(|t| (1.0 - alpha.powi(t)) / (1.0 - alpha)).collect();
    let reported = [1.0, 1.8, 2.44, 2.952, 3.3616, 3.68928];
    if run.responses.len() != 6 {
        return Err(format!("expected 6 responses, got {}", run.responses.len()));
    }
    for (i, r) in run.responses.iter().enumerate() {
        let t = r.state.tragedy;
        if (t - oracle[i]).abs() > 1e-9 || (t - reported[i]).abs() > 1e-9 {
            return Err(format!("turn {}: tragedy {t}, expected {}", i + 1, oracle[i]));
        }
        if [r.state.romance, r.state.chaos, r.state.mystery] != [0.0; 3] {
            return Err(format!("turn {}: off-axis components {:?}", i + 1, r.state));
        }
    }
    let first_flux = run.responses.iter().position(|r| r.flux_triggered_this_turn).map(|i| i + 1);
    let oracle_flux = oracle.iter().position(|&v| v > 2.5).map(|i| i + 1);
    if first_flux != Some(4) || oracle_flux != Some(4) {
        return Err(format!("first flux at {first_flux:?} (oracle {oracle_flux:?})"));
    }
    if run.responses[3].active_genre != Some(Genre::Tragedy) {
        return Err("turn 4 not Tragedy".into());
    }
    if run.responses.iter().filter(|r| r.flux_triggered_this_turn).count() != 1 {
        return Err("flux reported more than once".into());
    }
    if run.elapsed >= Duration::from_secs(5) {
        return Err(format!("runtime {:?}", run.elapsed));
    }
    Ok(format!("tragedy {:?}, flux at turn 4, {:.2?}", reported, run.elapsed))
}

fn channel_means(bytes: Vec<u8>) -> Result<[f64; 3], String> {
    let img = PanelImage {
        width: 0,
        height: 0,
        bytes,
        backend_id: String::new(),
        request_digest: String::new(),
    };
    let rgb = img.decode_rgb().map_err(|e| e.to_string())?;
    let mut sum = [0u64; 3];
    for p in rgb.pixels() {
        for c in 0..3 {
            sum[c] += u64::from(p.0[c]);
        }
    }
    let n = f64::from(rgb.width() * rgb.height());
    Ok(sum.map(|s| s as f64 / n))
}

fn mock_genre_shift(first: &CliRun, second: &CliRun) -> Outcome {
    let mut notes = Vec::new();
    for turn in 1..=6 {
        let name = format!("panel_{turn:02}.png");
        let a = std::fs::read(first.comic().join(&name)).map_err(|e| format!("{name}: {e}"))?;
        let b = std::fs::read(second.comic().join(&name)).map_err(|e| format!("{name}: {e}"))?;
        if a != b {
            return Err(format!("{name} differs between runs"));
        }
        let [r, g, bl] = channel_means(a)?;
        if turn < 4 {
            if r != g || g != bl {
                return Err(format!("{name} (pre-flux) not neutral: {r:.1}/{g:.1}/{bl:.1}"));
            }
        } else if bl <= r {
            return Err(format!("{name} (post-flux) blue {bl:.1} <= red {r:.1}"));
        }
        notes.push(format!("{turn}:{r:.0}/{bl:.0}"));
    }
    Ok(format!("r/b means {}; reruns byte-identical", notes.join(" ")))
}

// ---------------------------------------------------------------------------
// affect properties

fn replay_equivalence() -> Outcome {
    let model = shipped();
    let (kws, ems) = (keywords(&model), emojis(&model));
    let config = FluxConfig::default();
    let strategy = prop::collection::vec((0..kws.len(), 0..ems.len(), 0u32..4), 0..=20);
    let mut runner = runner(1000);
    let total = Cell::new(0usize);
    let result = runner.run(&strategy, |turns| {
        let mut folded = NarrativeState::initial();
        let mut events = Vec::new();
        for (k, e, reroll) in turns {
            let ev = PanelEvent::new_panel(folded.turn_index + 1, &kws[k], &ems[e]);
            folded = folded
                .step(&ev.keyword, &ev.emoji, &model.lexicon, &model.vocabulary, &config)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let mut last = ev.clone();
            events.push(ev);
            // regenerations interleaved in the log must not disturb replay
            if reroll == 3 {
                last = last.regenerated(1);
                events.push(last);
            }
        }
        let replayed = replay(&events, &model.lexicon, &model.vocabulary, &config)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(replayed, folded);
        total.set(total.get() + 1);
        Ok(())
    });
    prop_result(result)?;
    Ok(format!("{} sequences, component-exact", total.get()))
}

fn decay_convergence() -> Outcome {
    let model = shipped();
    let config = FluxConfig::default();
    let idle_kw = model
        .vocabulary
        .iter()
        .find(|e| e.weights == EmotionVector::zero())
        .ok_or("no zero-weight keyword")?
        .keyword
        .clone();
    let idle_emoji = model
        .lexicon
        .iter()
        .find(|(_, w)| **w == EmotionVector::zero())
        .ok_or("no zero-weight emoji")?
        .0
        .to_string();
    let factor = 0.8f64.powi(20);
    let worst = Cell::new(0.0f64);
    let result = runner(1000).run(&prop::array::uniform4(0.0f64..=10.0), |start| {
        let mut state = NarrativeState::initial();
        state.current = EmotionVector::from_array(start);
        for _ in 0..20 {
            state = state
                .step(&idle_kw, &idle_emoji, &model.lexicon, &model.vocabulary, &config)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
        for (s0, s20) in start.iter().zip(state.current.to_array()) {
            let want = s0 * factor;
            let rel = if want == 0.0 { s20.abs() } else { ((s20 - want) / want).abs() };
            worst.set(worst.get().max(rel));
            prop_assert!(rel <= 1e-9, "start {} -> {}, want {}", s0, s20, want);
        }
        Ok(())
    });
    prop_result(result)?;
    Ok(format!("1000 states, worst relative error {:.1e}", worst.get()))
}

#[derive(Debug, Clone)]
struct RandomModel {
    emoji: Vec<[f64; 4]>,
    keywords: Vec<([f64; 4], u64)>,
}

impl RandomModel {
    fn build(&self) -> AffectModel<f64> {
        const GLYPHS: [&str; 6] = ["🥀", "😍", "🔥", "🔮", "😢", "🌀"];
        let lexicon = EmojiLexicon::new(
            self.emoji
                .iter()
                .enumerate()
                .map(|(i, w)| (GLYPHS[i].to_string(), EmotionVector::from_array(*w))),
        )
        .unwrap();
        let vocabulary = KeywordVocabulary::new(self.keywords.iter().enumerate().map(|(i, (w, f))| KeywordEntry {
            keyword: format!("kw{i}"),
            weights: EmotionVector::from_array(*w),
            frequency: *f,
            scene_fragment: format!("scene {i}"),
        }))
        .unwrap();
        AffectModel::new(lexicon, vocabulary)
    }

    /// Largest per-component injection any keyword/emoji pair can make.
    fn max_injection(&self) -> f64 {
        let mut m = 0.0f64;
        for (kw, _) in &self.keywords {
            for em in &self.emoji {
                for c in 0..4 {
                    m = m.max(kw[c] + em[c]);
                }
            }
        }
        m
    }
}

fn boundedness() -> Outcome {
    let weights = || prop::array::uniform4(0.0f64..=1.0);
    let model = (
        prop::collection::vec(weights(), 1..=6),
        prop::collection::vec((weights(), 0u64..=100), 1..6),
    )
        .prop_map(|(emoji, mut keywords)| {
            keywords[0].1 = keywords[0].1.max(1);
            RandomModel { emoji, keywords }
        });
    let strategy = model.prop_flat_map(|m| {
        let turns = prop::collection::vec((0..m.keywords.len(), 0..m.emoji.len()), 1..=80);
        (Just(m), turns)
    });
    let config = FluxConfig::default();
    let closest = Cell::new(0.0f64);
    let result = runner(1000).run(&strategy, |(sample, turns)| {
        let model = sample.build();
        let m = sample.max_injection();
        let bound = m * 3.0 / (1.0 - 0.8);
        let mut state = NarrativeState::initial();
        for (k, e) in turns {
            state = state
                .step(&format!("kw{k}"), model.lexicon.iter().nth(e).unwrap().0, &model.lexicon, &model.vocabulary, &config)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            for c in state.current.to_array() {
                prop_assert!(c <= bound, "component {} exceeds bound {}", c, bound);
                if bound > 0.0 {
                    closest.set(closest.get().max(c / bound));
                }
            }
        }
        Ok(())
    });
    prop_result(result)?;
    Ok(format!("1000 random models/sessions, peak at {:.1}% of 15m", closest.get() * 100.0))
}

fn argmax_invariance() -> Outcome {
    let exact = AffectModel::<Exact>::new(defaults::lexicon().unwrap(), defaults::vocabulary().unwrap());
    let float = shipped();
    let (kws, ems) = (keywords(&float), emojis(&float));
    let config_exact = FluxConfig::<Exact>::default();
    let config = FluxConfig::default();
    // c = num/den in (0, 10]
    let factor = (1i128..=1000, 1i128..=100).prop_filter("c <= 10", |(n, d)| *n <= 10 * *d);
    let strategy = (factor, prop::collection::vec((0..kws.len(), 0..ems.len()), 1..=20));
    let checked = Cell::new(0usize);
    let result = runner(300).run(&strategy, |((num, den), turns)| {
        let c = Exact::new(num, den);
        let scaled = exact.scaled(c);
        let scaled_f = float.scaled(num as f64 / den as f64);
        let (mut a, mut b) = (NarrativeState::<Exact>::initial(), NarrativeState::<Exact>::initial());
        let (mut fa, mut fb) = (NarrativeState::initial(), NarrativeState::initial());
        for (k, e) in turns {
            a = a.step(&kws[k], &ems[e], &exact.lexicon, &exact.vocabulary, &config_exact).unwrap();
            b = b.step(&kws[k], &ems[e], &scaled.lexicon, &scaled.vocabulary, &config_exact).unwrap();
            prop_assert_eq!(a.current.dominant(), b.current.dominant());
            fa = fa.step(&kws[k], &ems[e], &float.lexicon, &float.vocabulary, &config).unwrap();
            fb = fb.step(&kws[k], &ems[e], &scaled_f.lexicon, &scaled_f.vocabulary, &config).unwrap();
            // in floating point, only compare when the leader is clear
            let arr = fa.current.to_array();
            let mut sorted = arr;
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0] - sorted[1] > 1e-9 * sorted[0].max(1.0) {
                prop_assert_eq!(fa.current.dominant(), fb.current.dominant());
            }
            checked.set(checked.get() + 1);
        }
        Ok(())
    });
    prop_result(result)?;
    Ok(format!("{} states across 300 sessions (exact rationals and f64)", checked.get()))
}

fn beta_range() -> Outcome {
    let model = shipped();
    let config = FluxConfig::default();
    let entries: Vec<_> = model.vocabulary.iter().collect();
    let max_f = entries.iter().map(|e| e.frequency).max().ok_or("empty vocabulary")?;
    let min_f = entries.iter().map(|e| e.frequency).min().unwrap();
    for e in &entries {
        let beta = rarity_multiplier(&e.keyword, &model.vocabulary, &config).map_err(|x| x.to_string())?;
        if !(1.0..=3.0).contains(&beta) {
            return Err(format!("{}: beta {beta}", e.keyword));
        }
        // independent oracle
        let want = (1.0 + 2.0 * (1.0 - e.frequency as f64 / max_f as f64)).clamp(1.0, 3.0);
        if (beta - want).abs() > 1e-12 {
            return Err(format!("{}: beta {beta}, oracle {want}", e.keyword));
        }
        if e.frequency == max_f && beta != 1.0 {
            return Err(format!("most frequent {} has beta {beta}", e.keyword));
        }
        if e.frequency == min_f && min_f == 0 && beta != 3.0 {
            return Err(format!("least frequent {} has beta {beta}", e.keyword));
        }
    }
    if min_f != 0 {
        return Err(format!("least frequent keyword has frequency {min_f}; beta 3 endpoint not reached"));
    }
    Ok(format!("{} keywords within [1, 3], endpoints 1.0 and 3.0 reached", entries.len()))
}

// ---------------------------------------------------------------------------
// prompt and spatial contracts

fn prompt_contracts() -> Outcome {
    let styles = defaults::styles().unwrap();
    let model = shipped();
    let scenes: Vec<String> = model.vocabulary.iter().map(|e| e.scene_fragment.clone()).collect();
    let pool: Vec<String> = styles
        .modifiers()
        .flat_map(|m| m.positive.iter().chain(&m.negative).cloned())
        .chain(styles.base_negative.iter().cloned())
        .chain(["red hair".to_string(), "trench coat".to_string(), "freckles".to_string()])
        .collect();
    let anchor = prop::collection::vec(0..pool.len(), 1..4);
    let strategy = (
        anchor,
        0..scenes.len(),
        prop::option::of(0..4usize),
        0..3usize,
        any::<u64>(),
    );
    let count = Cell::new(0usize);
    let result = runner(500).run(&strategy, |(anchor_idx, scene, genre, class, seed)| {
        let anchor_text = anchor_idx.iter().map(|&i| pool[i].as_str()).collect::<Vec<_>>().join(", ");
        let anchor = CharacterAnchor::new(anchor_text.clone()).unwrap();
        let class = [CompositionClass::Panoramic, CompositionClass::Medium, CompositionClass::CloseUp][class];
        let modifier = genre.map(|g| styles.modifier(Genre::ALL[g]).unwrap());
        let req: GenerationRequest = synthesize(SynthesisInput {
            anchor: &anchor,
            directive: styles.composition.directive(class),
            scene_fragment: &scenes[scene],
            active: modifier,
            base_negative: &styles.base_negative,
            seed,
            panel_index: 1,
            size: Resolution { width: 512, height: 512 },
            control_image: None,
        })
        .map_err(|e| TestCaseError::fail(e.to_string()))?;

        prop_assert!(req.prompt.starts_with(&anchor_text));
        let positive: HashSet<&str> = split_phrases(&req.prompt).collect();
        let negative: Vec<&str> = split_phrases(&req.negative_prompt).collect();
        for n in &negative {
            prop_assert!(!positive.contains(n), "{:?} on both sides", n);
            prop_assert!(!req.prompt.contains(n), "{:?} occurs in the prompt", n);
        }
        let body: Vec<&str> = split_phrases(&req.prompt[anchor_text.len()..]).collect();
        let once = dedup_phrases(&body);
        prop_assert_eq!(dedup_phrases(&once), once.clone());
        prop_assert_eq!(once.len(), body.len(), "duplicate phrase after the anchor");
        let neg_once = dedup_phrases(&negative);
        prop_assert_eq!(neg_once.len(), negative.len());
        count.set(count.get() + 1);
        Ok(())
    });
    prop_result(result)?;
    Ok(format!("{} requests: anchor prefix, disjoint phrase sets, idempotent dedup", count.get()))
}

fn spatial_contracts() -> Outcome {
    let t = AspectThresholds::default();
    let boundary = [
        (PanelBox::new(0, 0, 900, 500), CompositionClass::Panoramic),
        (PanelBox::new(0, 0, 1800, 1000), CompositionClass::Panoramic),
        (PanelBox::new(0, 0, 67, 100), CompositionClass::CloseUp),
        (PanelBox::new(0, 0, 670, 1000), CompositionClass::CloseUp),
        (PanelBox::new(0, 0, 1799, 1000), CompositionClass::Medium),
        (PanelBox::new(0, 0, 671, 1000), CompositionClass::Medium),
        (PanelBox::new(0, 0, 512, 512), CompositionClass::Medium),
    ];
    for (b, want) in boundary {
        let got = classify_aspect(&b, &t);
        if got != want {
            return Err(format!("{}x{} classified {got:?}, expected {want:?}", b.width, b.height));
        }
    }
    let strategy = (1u32..=2048, 1u32..=2048, 64u32..=1024).prop_flat_map(|(w, h, max_side)| {
        let point = (0..=w, 0..=h).prop_map(|(x, y)| flux_core::spatial::Point { x, y });
        let stroke = prop::collection::vec(point, 2..6);
        (Just((w, h, max_side)), prop::collection::vec(stroke, 0..4), 1u32..=12)
    });
    let result = runner(500).run(&strategy, |((w, h, max_side), strokes, width)| {
        let b = PanelBox::new(0, 0, w, h);
        let ratio = f64::from(w) / f64::from(h);
        let want = if ratio >= 1.8 {
            CompositionClass::Panoramic
        } else if ratio <= 0.67 {
            CompositionClass::CloseUp
        } else {
            CompositionClass::Medium
        };
        prop_assert_eq!(classify_aspect(&b, &t), want);
        let size = snap_resolution(&b, max_side);
        prop_assert!(size.width.is_multiple_of(64) && size.height.is_multiple_of(64));
        prop_assert!(size.width >= 64 && size.height >= 64);
        prop_assert!(size.width <= max_side.max(64) && size.height <= max_side.max(64));
        let sketch = SketchStrokes { strokes, stroke_width: width };
        let a = rasterize_sketch(&sketch, &b, size);
        let again = rasterize_sketch(&sketch, &b, size);
        prop_assert_eq!(a.to_png(), again.to_png());
        prop_assert_eq!(a.pixels.len() as u64, u64::from(size.width) * u64::from(size.height));
        Ok(())
    });
    prop_result(result)?;
    Ok("boundaries 1.8/0.67 + 500 random boxes: total, 64-grid, byte-identical rasters".into())
}

// ---------------------------------------------------------------------------
// service-level fault injection and export

struct Switchable {
    inner: MockBackend,
    down: AtomicBool,
}

#[async_trait]
impl ImageBackend for Switchable {
    fn id(&self) -> &str {
        "switchable"
    }

    async fn generate(&self, request: &GenerationRequest) -> Result<PanelImage, BackendError> {
        if self.down.load(Ordering::SeqCst) {
            return Err(BackendError::BackendUnreachable {
                attempts: 3,
                last_error: "injected fault".into(),
            });
        }
        self.inner.generate(request).await
    }
}

fn panel_json() -> Value {
    json!({"box": {"x": 0, "y": 0, "width": 512, "height": 512}, "keyword": "Gunshot", "emoji": "😟"})
}

async fn call(router: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn turn_atomicity() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let assets = Assets::builtin();
    let backend = Arc::new(Switchable {
        inner: MockBackend::new(&assets.styles),
        down: AtomicBool::new(false),
    });
    let engine = Arc::new(Engine::new(assets, dir.path(), backend.clone()).map_err(|e| e.to_string())?);
    let router = api::router(engine.clone());
    let (status, created) = call(&router, Method::POST, "/sessions", Some(json!({"anchor": "hero"}))).await;
    if status != StatusCode::CREATED {
        return Err(format!("create returned {status}"));
    }
    let id = created["session_id"].as_str().unwrap().to_string();
    let panels = format!("/sessions/{id}/panels");
    for _ in 0..2 {
        call(&router, Method::POST, &panels, Some(panel_json())).await;
    }
    let log = engine
        .store()
        .session_dir(id.parse().unwrap())
        .join("events.jsonl");
    let log_before = std::fs::read(&log).map_err(|e| e.to_string())?;
    let (_, state_before) = call(&router, Method::GET, &format!("/sessions/{id}/state"), None).await;

    backend.down.store(true, Ordering::SeqCst);
    for _ in 0..3 {
        let (status, _) = call(&router, Method::POST, &panels, Some(panel_json())).await;
        if status != StatusCode::BAD_GATEWAY {
            return Err(format!("failing backend gave {status}, expected 502"));
        }
    }
    let (_, state_after) = call(&router, Method::GET, &format!("/sessions/{id}/state"), None).await;
    if state_after != state_before {
        return Err("state changed after backend failure".into());
    }
    if std::fs::read(&log).map_err(|e| e.to_string())? != log_before {
        return Err("log changed after backend failure".into());
    }
    // a restart sees the same state
    let reopened = Engine::new(Assets::builtin(), dir.path(), backend.clone()).map_err(|e| e.to_string())?;
    if reopened.view(id.parse().unwrap()).map_err(|e| e.to_string())?.turn_index != 2 {
        return Err("restart sees a different turn index".into());
    }

    backend.down.store(false, Ordering::SeqCst);
    let (status, next) = call(&router, Method::POST, &panels, Some(panel_json())).await;
    if status != StatusCode::OK || next["turn_index"] != 3 {
        return Err(format!("recovery turn: {status} {next}"));
    }
    Ok("3x 502, turn_index 2 and log bytes unchanged, next turn is 3".into())
}

fn read_dir_names(dir: &Path) -> Result<Vec<String>, String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    Ok(names)
}

async fn export_determinism(cli: &CliRun) -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let assets = Assets::builtin();
    let backend = Arc::new(MockBackend::new(&assets.styles));
    let engine = Engine::new(assets, &dir.path().join("data"), backend).map_err(|e| e.to_string())?;
    let view = engine
        .create_session(SessionSettings {
            anchor: "a lighthouse keeper".into(),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
    let id = view.session_id;
    for (i, (kw, em)) in [("Street", "🥀"), ("Kiss", "😍"), ("Gunshot", "😟"), ("Funeral", "😢"), ("Rain", "🥀"), ("Street", "😐")]
        .into_iter()
        .enumerate()
    {
        let input = PanelInput {
            panel_box: PanelBox::new(0, 0, 400 + 100 * i as u32, 400),
            strokes: SketchStrokes::default(),
            keyword: kw.into(),
            emoji: em.into(),
        };
        engine.submit_panel(id, input).await.map_err(|e| e.to_string())?;
    }
    engine.regenerate(id, 3).await.map_err(|e| e.to_string())?;

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let manifest = engine.export_to(id, &a).map_err(|e| e.to_string())?;
    engine.export_to(id, &b).map_err(|e| e.to_string())?;
    let expected: Vec<String> = (1..=6)
        .map(|t| format!("panel_{t:02}.png"))
        .chain(["manifest.json".to_string()])
        .collect();
    let mut expected_sorted = expected.clone();
    expected_sorted.sort();
    for out in [&a, &b, &cli.comic()] {
        if read_dir_names(out)? != expected_sorted {
            return Err(format!("{} holds {:?}", out.display(), read_dir_names(out)?));
        }
    }
    for name in &expected {
        if std::fs::read(a.join(name)).map_err(|e| e.to_string())? != std::fs::read(b.join(name)).map_err(|e| e.to_string())? {
            return Err(format!("{name} differs between exports"));
        }
    }
    if manifest.panels.len() != 6 || manifest.panels[2].regeneration_counter != 1 {
        return Err("manifest does not reflect the latest regeneration".into());
    }
    let zip_a = engine.export_archive(id).map_err(|e| e.to_string())?;
    let zip_b = engine.export_archive(id).map_err(|e| e.to_string())?;
    if zip_a != zip_b {
        return Err("zip archives differ".into());
    }
    Ok("two exports byte-identical (manifest, PNGs, zip); panel_01..06.png".into())
}

// ---------------------------------------------------------------------------

fn report(name: &str, outcome: Outcome, failures: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(detail) => {
            *failures += 1;
            println!("FAIL  {name}: {detail}");
        }
    }
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let mut failures = 0;

    let first = run_cli(TRAGEDY_SCRIPT);
    let second = run_cli(TRAGEDY_SCRIPT);
    let (cli_a, cli_b) = match (first, second) {
        (Ok(a), Ok(b)) => (Some(a), Some(b)),
        (Err(e), _) | (_, Err(e)) => {
            println!("cli run failed: {e}");
            (None, None)
        }
    };
    let cli_outcome = |f: &dyn Fn(&CliRun, &CliRun) -> Outcome| match (&cli_a, &cli_b) {
        (Some(a), Some(b)) => f(a, b),
        _ => Err("CLI session did not run".into()),
    };

    report("flux by fourth panel", cli_outcome(&|a, _| flux_by_fourth_panel(a)), &mut failures);
    report("replay-oracle equivalence", replay_equivalence(), &mut failures);
    report("decay convergence", decay_convergence(), &mut failures);
    report("boundedness", boundedness(), &mut failures);
    report("argmax invariance", argmax_invariance(), &mut failures);
    report("rarity multiplier range", beta_range(), &mut failures);
    report("prompt contracts", prompt_contracts(), &mut failures);
    report("mock visual genre shift", cli_outcome(&mock_genre_shift), &mut failures);
    report("turn atomicity", rt.block_on(turn_atomicity()), &mut failures);
    let export = match &cli_a {
        Some(a) => rt.block_on(export_determinism(a)),
        None => Err("CLI session did not run".into()),
    };
    report("export determinism", export, &mut failures);
    report("spatial contracts", spatial_contracts(), &mut failures);

    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
