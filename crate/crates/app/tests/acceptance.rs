//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;
use synergy_core::empirical::{
    counter_matrix, ingest_match_log, joint_win_rate, pair_synergy_matrix, solo_win_rate, MatchLog, WinRateEstimate,
    DEFAULT_Z,
};
use synergy_core::empirical::synth::{planted_log, PlantedConfig};
use synergy_core::search::{count_sets, enumerate_sets, top_k_synergy, CandidateSpace, SearchStrategy, SpaceIndex};
use synergy_core::synergy::AdditiveValueFunction;
use synergy_core::tcg::{
    evaluate_combo, load_cards, rebalance_iterate, scan_new_set, BoardState, Card, CardEdit, CardPool, ScanArgs,
};
use synergy_core::{compute_synergy, BaselineKind, ElementId, SynergySet, Value};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, limit: Duration) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn expected(name: &str) -> Json {
    serde_json::from_reader(File::open(fixture(name)).unwrap()).unwrap()
}

fn eid(i: usize) -> ElementId {
    ElementId::new(format!("e{i:02}")).unwrap()
}

fn multiset(idx: &[usize]) -> SynergySet {
    SynergySet::from_elements(idx.iter().map(|&i| eid(i))).unwrap()
}

/// All multisets over `0..n` with sizes in `min..=max` and at most `cap` copies.
fn brute_force_sets(n: usize, min: usize, max: usize, cap: usize) -> Vec<Vec<usize>> {
    fn go(j: usize, n: usize, max: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=cap.min(max - cur.len()) {
            cur.extend(std::iter::repeat(j).take(c));
            go(j + 1, n, max, cap, cur, out);
            cur.truncate(cur.len() - c);
        }
    }
    let mut out = Vec::new();
    go(0, n, max, cap, &mut Vec::new(), &mut out);
    out.retain(|s| s.len() >= min);
    out
}

fn additive_identity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xadd);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.gen_range(1..=10);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
        let vf = AdditiveValueFunction::new(weights.iter().enumerate().map(|(i, w)| (eid(i), *w)));
        let size = rng.gen_range(2..=5);
        let idx: Vec<usize> = (0..size).map(|_| rng.gen_range(0..n)).collect();
        let s = compute_synergy(&multiset(&idx), &vf, BaselineKind::Sum).map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max(s.synergy.abs());
        ensure(s.synergy.abs() <= 1e-9, || format!("case {case}: synergy {} for {idx:?}", s.synergy))?;
    }
    let took = within(started, Duration::from_secs(5))?;
    Ok(format!("1000 functions, max |synergy| {worst:.1e}, {took:.2?}"))
}

fn top_k_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x70b);
    for case in 0..50 {
        let n = rng.gen_range(2..=12);
        let max = rng.gen_range(2..=3);
        let cap = rng.gen_range(1..=3);
        let sets = brute_force_sets(n, 2, max, cap);
        let mut vf = AdditiveValueFunction::new((0..n).map(|i| (eid(i), rng.gen_range(-10.0..10.0))));
        for s in &sets {
            vf = vf.with_bonus(multiset(s), rng.gen_range(-5.0..5.0));
        }
        let k = if case % 5 == 0 { sets.len() } else { rng.gen_range(1..=sets.len().min(25)) };

        let mut oracle = sets
            .iter()
            .map(|s| compute_synergy(&multiset(s), &vf, BaselineKind::Sum))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        oracle.sort_by(|a, b| b.synergy.total_cmp(&a.synergy).then_with(|| a.set.cmp(&b.set)));
        oracle.truncate(k);

        let space = CandidateSpace::new((0..n).map(eid), 2, max as u32, cap as u32).map_err(|e| e.to_string())?;
        let got = top_k_synergy(&space, &vf, BaselineKind::Sum, k, SearchStrategy::Exhaustive).map_err(|e| e.to_string())?;
        ensure(got.entries.len() == oracle.len(), || format!("case {case}: {} vs {} entries", got.entries.len(), oracle.len()))?;
        for (rank, (g, o)) in got.entries.iter().zip(&oracle).enumerate() {
            ensure(g.set == o.set && g.synergy.to_bits() == o.synergy.to_bits(), || {
                format!(
                    "case {case} rank {rank}: got {} {} want {} {}",
                    g.set.label(),
                    g.synergy,
                    o.set.label(),
                    o.synergy
                )
            })?;
        }
    }
    let took = within(started, Duration::from_secs(10))?;
    Ok(format!("50 functions, {took:.2?}"))
}

fn counting_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0);
    let limit = BigUint::from(1_000_000u32);
    let (mut spaces, mut streamed, mut round_trips) = (0, 0u64, 0u64);
    for n in [1usize, 2, 3, 5, 8, 12, 20] {
        for min in [2u32, 3] {
            for max in [min, min + 1, min + 3] {
                for cap in [1u32, 2, 4] {
                    let space = CandidateSpace::new((0..n).map(eid), min, max, cap).map_err(|e| e.to_string())?;
                    let count = count_sets(&space);
                    if count > limit {
                        continue;
                    }
                    let label = format!("n={n} sizes {min}..={max} cap {cap}");
                    let mut len = 0u64;
                    let mut prev: Option<SynergySet> = None;
                    for s in enumerate_sets(&space) {
                        ensure(prev.as_ref().is_none_or(|p| *p < s), || format!("{label}: stream not strictly increasing"))?;
                        prev = Some(s);
                        len += 1;
                    }
                    ensure(BigUint::from(len) == count, || format!("{label}: streamed {len}, counted {count}"))?;
                    streamed += len;
                    spaces += 1;
                    if len == 0 {
                        continue;
                    }
                    let index = SpaceIndex::new(&space);
                    for _ in 0..10_000 {
                        let i = BigUint::from(rng.gen_range(0..len));
                        let s = index.unrank(&i).map_err(|e| format!("{label}: unrank {i}: {e}"))?;
                        ensure(space.contains(&s), || format!("{label}: unrank {i} left the space"))?;
                        let back = index.rank(&s).map_err(|e| format!("{label}: rank: {e}"))?;
                        ensure(back == i, || format!("{label}: rank(unrank({i})) = {back}"))?;
                    }
                    round_trips += 10_000;
                }
            }
        }
    }
    Ok(format!("{spaces} spaces, {streamed} sets streamed, {round_trips} round-trips"))
}

fn wilson_closed_form(wins: u64, games: u64, z: f64) -> (f64, f64) {
    let n = games as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let denom = 1.0 + z2 / n;
    ((centre - half) / denom, (centre + half) / denom)
}

fn check_estimate(what: &str, est: &WinRateEstimate, want: &Json) -> Result<(), String> {
    let (wins, games) = (want["wins"].as_u64().unwrap(), want["games"].as_u64().unwrap());
    ensure(est.wins == wins && est.games == games, || {
        format!("{what}: {}/{} want {wins}/{games}", est.wins, est.games)
    })?;
    ensure(est.rate == want["rate"].as_f64().unwrap(), || format!("{what}: rate {}", est.rate))?;
    let (lo, hi) = wilson_closed_form(wins, games, DEFAULT_Z);
    ensure((est.ci_low - lo).abs() <= 1e-9 && (est.ci_high - hi).abs() <= 1e-9, || {
        format!("{what}: interval [{}, {}] closed form [{lo}, {hi}]", est.ci_low, est.ci_high)
    })?;
    ensure(
        (est.ci_low - want["ci_low"].as_f64().unwrap()).abs() <= 1e-9
            && (est.ci_high - want["ci_high"].as_f64().unwrap()).abs() <= 1e-9,
        || format!("{what}: interval differs from table"),
    )
}

fn load_log(name: &str) -> MatchLog {
    let ingested = ingest_match_log(BufReader::new(File::open(fixture(name)).unwrap())).unwrap();
    assert!(ingested.rejects.is_empty());
    ingested.log
}

fn hand_count() -> Outcome {
    let log = load_log("synthetic-A.jsonl");
    let want = expected("synthetic-A.expected.json");
    ensure(log.len() == 200, || format!("{} records", log.len()))?;
    let min_games = want["min_games"].as_u64().unwrap();
    let mut checked = 0;
    for (e, w) in want["solo"].as_object().unwrap() {
        let est = solo_win_rate(&log, &ElementId::new(e.as_str()).unwrap()).map_err(|e| e.to_string())?;
        check_estimate(&format!("solo {e}"), &est, w)?;
        checked += 1;
    }
    for w in want["joint"].as_array().unwrap() {
        let set = SynergySet::of(&[w["a"].as_str().unwrap(), w["b"].as_str().unwrap()]).unwrap();
        let est = joint_win_rate(&log, &set).map_err(|e| e.to_string())?;
        check_estimate(&format!("joint {}", set.label()), &est, w)?;
        checked += 1;
    }
    for (baseline, key) in [(BaselineKind::Mean, "matrix_mean"), (BaselineKind::Sum, "matrix_sum")] {
        let m = pair_synergy_matrix(&log, baseline, min_games).map_err(|e| e.to_string())?;
        let rows = want[key].as_array().unwrap();
        ensure(m.len() == rows.len(), || format!("{key}: {} entries want {}", m.len(), rows.len()))?;
        for (entry, w) in m.entries.iter().zip(rows) {
            let what = format!("{key} {},{}", entry.a, entry.b);
            ensure(
                entry.a.as_str() == w["a"].as_str().unwrap() && entry.b.as_str() == w["b"].as_str().unwrap(),
                || format!("{what}: wrong pair order"),
            )?;
            ensure(entry.joint.games == w["games"].as_u64().unwrap(), || format!("{what}: games"))?;
            ensure(entry.sufficient == w["sufficient"].as_bool().unwrap(), || format!("{what}: sufficiency"))?;
            for (got, field) in [
                (entry.score.set_value.as_real(), "set_value"),
                (entry.score.baseline_value.as_real(), "baseline_value"),
                (entry.score.synergy, "synergy"),
            ] {
                ensure(got == w[field].as_f64().unwrap(), || format!("{what}: {field} {got} want {}", w[field]))?;
            }
            checked += 1;
        }
    }
    let c = counter_matrix(&log, min_games).map_err(|e| e.to_string())?;
    let rows = want["counters"].as_array().unwrap();
    ensure(c.len() == rows.len(), || format!("counters: {} entries want {}", c.len(), rows.len()))?;
    for (entry, w) in c.entries.iter().zip(rows) {
        let what = format!("counter {} vs {}", entry.a, entry.b);
        ensure(
            entry.a.as_str() == w["a"].as_str().unwrap() && entry.b.as_str() == w["b"].as_str().unwrap(),
            || format!("{what}: wrong pair order"),
        )?;
        check_estimate(&what, &entry.vs, &w["vs"])?;
        ensure(entry.overall.rate == w["overall_rate"].as_f64().unwrap(), || format!("{what}: overall rate"))?;
        ensure(entry.score == w["score"].as_f64().unwrap(), || format!("{what}: score {}", entry.score))?;
        ensure(entry.sufficient == w["sufficient"].as_bool().unwrap(), || format!("{what}: sufficiency"))?;
        checked += 1;
    }
    Ok(format!("{checked} table rows match"))
}

fn planted_recovery() -> Outcome {
    let started = Instant::now();
    let pair = SynergySet::of(&["a", "b"]).unwrap();
    let mut hits = Vec::new();
    for seed in 1..=20u64 {
        let log = planted_log(&PlantedConfig {
            seed,
            ..PlantedConfig::default()
        });
        ensure(log.len() == 5000, || format!("seed {seed}: {} matches", log.len()))?;
        let m = pair_synergy_matrix(&log, BaselineKind::Mean, 30).map_err(|e| e.to_string())?;
        let top = m.argmax().ok_or("empty matrix")?;
        if top.score.set == pair {
            hits.push(seed);
        }
    }
    let took = within(started, Duration::from_secs(30))?;
    ensure(hits.len() >= 19, || format!("argmax was {{a,b}} in {} of 20 seeds", hits.len()))?;
    Ok(format!("{} of 20 seeds, {took:.2?}", hits.len()))
}

fn card_files() -> (Vec<Card>, Vec<Card>) {
    (
        load_cards(File::open(fixture("cards.json")).unwrap()).unwrap(),
        load_cards(File::open(fixture("newset.json")).unwrap()).unwrap(),
    )
}

fn tcg_scan() -> Outcome {
    let (existing, new) = card_files();
    let pool = CardPool::new(existing.clone(), new.clone()).map_err(|e| e.to_string())?;
    let rows = expected("tcg-dpm.expected.json");
    let rows = rows.as_array().unwrap();
    let space = CandidateSpace::new(pool.ids().cloned(), 2, 3, 4).map_err(|e| e.to_string())?;
    let combos = count_sets(&space) + pool.len();
    ensure(BigUint::from(rows.len()) == combos, || format!("table has {} rows, pool has {combos} combos", rows.len()))?;
    for w in rows {
        let ids: Vec<&str> = w["cards"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        let e = evaluate_combo(&pool, &SynergySet::of(&ids).unwrap(), &BoardState::default()).map_err(|e| e.to_string())?;
        let want = Value::ratio(w["dpm_num"].as_f64().unwrap(), w["dpm_den"].as_f64().unwrap());
        ensure(
            e.total_damage == w["damage"].as_u64().unwrap() && e.total_mana == w["mana"].as_u64().unwrap() && e.dpm == want,
            || format!("{ids:?}: damage {} mana {} dpm {:?}", e.total_damage, e.total_mana, e.dpm),
        )?;
    }

    let args = ScanArgs::default();
    let report = scan_new_set(&pool, &args).map_err(|e| e.to_string())?;
    let top = report.outliers.flagged.first().ok_or("nothing flagged")?;
    let want_top = SynergySet::of(&["lord", "scout", "seas"]).unwrap();
    ensure(top.score.set == want_top, || format!("top outlier {}", top.score.set.label()))?;
    let baseline = serde_json::to_string(&report).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca);
    for trial in 0..5 {
        let (mut ex, mut nw) = (existing.clone(), new.clone());
        if trial == 0 {
            ex.reverse();
            nw.reverse();
        } else {
            ex.shuffle(&mut rng);
            nw.shuffle(&mut rng);
        }
        let shuffled = CardPool::new(ex, nw).map_err(|e| e.to_string())?;
        let again = scan_new_set(&shuffled, &args).map_err(|e| e.to_string())?;
        ensure(serde_json::to_string(&again).unwrap() == baseline, || format!("card order {trial} changed the report"))?;
    }
    Ok(format!(
        "{} dpm rows exact, {} combos scanned, top {} at {:+}, 5 orderings identical",
        rows.len(),
        report.sets_examined,
        top.score.set.label(),
        top.score.synergy
    ))
}

fn rebalance() -> Outcome {
    let (existing, new) = card_files();
    let pool = CardPool::new(existing, new).map_err(|e| e.to_string())?;
    let args = ScanArgs::default();
    let before = scan_new_set(&pool, &args).map_err(|e| e.to_string())?;
    let pair = SynergySet::of(&["lord", "scout"]).unwrap();
    ensure(before.outliers.flagged.iter().any(|f| f.score.set == pair), || {
        "{lord,scout} not flagged before the nerf".into()
    })?;

    let (_, unchanged) = rebalance_iterate(&pool, &[], &args).map_err(|e| e.to_string())?;
    let a = serde_json::to_vec_pretty(&before).unwrap();
    let b = serde_json::to_vec_pretty(&unchanged).unwrap();
    ensure(a == b, || "empty edit list changed the report".into())?;

    let edit = CardEdit::new("lord", "effects.0.amount", 0);
    let (_, after) = rebalance_iterate(&pool, &[edit], &args).map_err(|e| e.to_string())?;
    ensure(after.outliers.flagged.iter().all(|f| f.score.set != pair), || {
        "{lord,scout} still flagged after the nerf".into()
    })?;
    Ok(format!(
        "flagged {} -> {}, empty edits byte-identical ({} bytes)",
        before.outliers.flagged.len(),
        after.outliers.flagged.len(),
        a.len()
    ))
}

fn synergy_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_synergy"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("SYNERGY_PORT")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let read = |path: &str| std::fs::read(path).map_err(|e| format!("{path}: {e}"));
    let log = fixture("synthetic-A.jsonl").to_str().unwrap().to_owned();
    let chess = fixture("chess-50.jsonl").to_str().unwrap().to_owned();
    let cards = fixture("cards.json").to_str().unwrap().to_owned();
    let newset = fixture("newset.json").to_str().unwrap().to_owned();
    let edits = p("edits.json");
    std::fs::write(&edits, r#"[{"card":"lord","field":"effects.0.amount","value":0}]"#).map_err(|e| e.to_string())?;

    synergy_bin(&["ingest", "--log", &log, "--out", &p("snap-1.bin")])?;
    synergy_bin(&["ingest", "--log", &log, "--out", &p("snap-2.bin")])?;
    ensure(read(&p("snap-1.bin"))? == read(&p("snap-2.bin"))?, || "ingest snapshots differ".into())?;
    let snap = p("snap-1.bin");

    let commands: Vec<(&str, Vec<&str>, bool)> = vec![
        ("matrix", vec!["matrix", "--snap", &snap, "--csv"], false),
        ("counters", vec!["counters", "--snap", &snap, "--csv"], false),
        ("topk", vec!["topk", "--snap", &snap, "--k", "8", "--max-size", "4", "--strategy", "exhaustive"], true),
        ("topk-sample", vec!["topk", "--snap", &snap, "--k", "5", "--strategy", "sample:40", "--seed", "3"], true),
        ("recommend", vec!["recommend", "--snap", &snap, "--allies", "a", "--enemies", "c", "--k", "4"], false),
        ("whatif", vec!["whatif", "--snap", &snap, "--allies", "a", "--candidate", "b"], false),
        ("tcg-scan", vec!["tcg-scan", "--pool", &cards, "--new", &newset], true),
        (
            "tcg-scan-sample",
            vec!["tcg-scan", "--pool", &cards, "--new", &newset, "--strategy", "sample:60", "--seed", "5"],
            true,
        ),
        ("tcg-rebalance", vec!["tcg-rebalance", "--pool", &cards, "--new", &newset, "--edits", &edits], true),
        ("chess-seq", vec!["chess-seq", "--log", &chess, "--skip-first", "2"], true),
    ];
    let mut files = 0;
    for (name, args, parallel) in &commands {
        let runs: &[(&str, Option<&str>)] = if *parallel {
            &[("a", None), ("b", None), ("w4", Some("4")), ("w1", Some("1"))]
        } else {
            &[("a", None), ("b", None)]
        };
        let mut outputs = Vec::new();
        for (tag, workers) in runs {
            let out = p(&format!("{name}-{tag}.json"));
            let csv = p(&format!("{name}-{tag}.csv"));
            let mut argv: Vec<&str> = args.clone();
            if argv.last() == Some(&"--csv") {
                argv.push(&csv);
            }
            argv.extend(["--out", out.as_str()]);
            if let Some(w) = workers {
                argv.extend(["--workers", w]);
            }
            synergy_bin(&argv)?;
            let mut bytes = read(&out)?;
            if args.last() == Some(&"--csv") {
                bytes.extend(read(&csv)?);
            }
            outputs.push((tag, bytes));
        }
        for (tag, bytes) in &outputs[1..] {
            ensure(*bytes == outputs[0].1, || format!("{name}: run {tag} differs from the first run"))?;
        }
        files += outputs.len();
    }
    let a = synergy_bin(&["count", "--pool-size", "300", "--min-size", "2", "--max-size", "60", "--copy-cap", "4"])?;
    let b = synergy_bin(&["count", "--pool-size", "300", "--min-size", "2", "--max-size", "60", "--copy-cap", "4"])?;
    ensure(a == b, || "count output differs".into())?;
    Ok(format!("{} commands, {files} report files compared, parallel W=4 equals serial", commands.len() + 2))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("additive identity", additive_identity),
        ("top-k oracle equivalence", top_k_oracle),
        ("counting/enumeration agreement", counting_agreement),
        ("empirical hand-count equivalence", hand_count),
        ("planted-synergy recovery", planted_recovery),
        ("tcg exhaustive scan", tcg_scan),
        ("rebalance loop", rebalance),
        ("determinism", determinism),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match &outcome {
            Ok(detail) => {
                passed += 1;
                println!("PASS  {name}: {detail}");
            }
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
