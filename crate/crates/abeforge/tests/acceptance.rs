//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p abeforge --test acceptance` (add `--release` for
//! representative timings).

use std::process::Command;
use std::time::{Duration, Instant};

use abeforge::perturb::{mutations, Harness, MutationKind};
use abeforge_core::corpus::{load_corpus, ABE, IMPLICATIVE_ABE};
use abeforge_core::enumerate::{brute_force_models, enumerate_models, NodeBudget, Status};
use serde_json::Value;

const MUTATION_SEED: u64 = 0x00ab_e5ee_d000_0001;
const MUTATION_COUNT: usize = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn abeforge(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_abeforge")).args(args).env_remove("ABEFORGE_THREADS").output().unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_replay() -> Outcome {
    let corpus = load_corpus();
    let start = Instant::now();
    let (report, _) = corpus.verify().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if let Some(e) = report.first_failure() {
        return Err(e.to_string());
    }
    ensure(report.entries.len() == 13, || format!("expected 13 scripts, found {}", report.entries.len()))?;
    ensure(report.all_verified(), || "not all scripts verified".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    let (code, out, _) = abeforge(&["replay"]);
    ensure(code == 0 && out.ends_with("13/13 verified\n"), || format!("cli replay exit {code}"))?;
    Ok(format!("13/13 verified in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn perturbations() -> Outcome {
    let corpus = load_corpus();
    let harness = Harness::new(&corpus).map_err(|e| e.to_string())?;
    let ms = mutations(&corpus, MUTATION_SEED, MUTATION_COUNT);
    let mut per_kind = std::collections::BTreeMap::<MutationKind, usize>::new();
    for m in &ms {
        *per_kind.entry(m.kind).or_default() += 1;
        match harness.replay(&m.script).ok_or("mutated script has no original")? {
            Ok(_) => return Err(format!("accepted: script {} with {}", m.script.id, m.description)),
            Err(e) if e.at.top_step().is_none() => return Err(format!("diagnostic without a step: {e}")),
            Err(_) => {}
        }
    }
    ensure(ms.len() >= 100, || format!("only {} mutations", ms.len()))?;
    let kinds: Vec<String> = per_kind.iter().map(|(k, n)| format!("{k} {n}")).collect();
    Ok(format!("{} of {} mutations rejected with step diagnostics ({})", ms.len(), ms.len(), kinds.join(", ")))
}

fn theorem_at_desk_scale() -> Outcome {
    let start = Instant::now();
    let args = ["search", "--axioms", "implicative-aBE", "--violates", "trans", "--max-size", "6", "--threads", "1"];
    let (code, out, err) = abeforge(&args);
    ensure(code == 0, || format!("exit {code}: {err}"))?;
    ensure(out.ends_with("none up to 6\n"), || format!("unexpected output:\n{out}"))?;
    let mut json_args = args.to_vec();
    json_args.extend(["--emit", "json"]);
    let (_, json, _) = abeforge(&json_args);
    let v: Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let sizes = v["sizes"].as_array().ok_or("no sizes")?;
    ensure(sizes.len() == 6 && sizes.iter().all(|s| s["status"] == "complete"), || "incomplete sizes".into())?;
    let nodes: Vec<String> = sizes.iter().map(|s| s["nodes"].to_string()).collect();
    Ok(format!("none up to 6 in {:.2} s, nodes per size [{}]", start.elapsed().as_secs_f64(), nodes.join(", ")))
}

fn soundness_bridge() -> Outcome {
    let corpus = load_corpus();
    let (report, env) = corpus.verify().map_err(|e| e.to_string())?;
    ensure(report.all_verified(), || "corpus does not verify".into())?;
    // Axioms plus every statement proved by a script.
    let verified: Vec<_> = env.verified_in_order().into_iter().map(|v| v.statement().clone()).collect();
    ensure(verified.len() == 19, || format!("expected 19 verified statements, found {}", verified.len()))?;
    let axioms = corpus.axioms(IMPLICATIVE_ABE).ok_or("no axiom system")?;
    let mut models = 0;
    let mut checks = 0;
    for n in 1..=5 {
        let r = enumerate_models(&axioms, n, &mut NodeBudget::new(None));
        ensure(r.status == Status::Complete, || format!("size {n} incomplete"))?;
        for m in &r.models {
            models += 1;
            for st in &verified {
                checks += 1;
                if let Err(w) = m.check(st) {
                    return Err(format!("{} fails in a model of size {n}, witness {}", st.id, w.describe(m)));
                }
            }
        }
    }
    Ok(format!("{checks} checks over {models} models up to size 5, zero violations"))
}

fn oracle_equivalence() -> Outcome {
    let corpus = load_corpus();
    let mut cells = Vec::new();
    for name in [ABE, IMPLICATIVE_ABE] {
        let axioms = corpus.axioms(name).ok_or("no axiom system")?;
        for n in 1..=3 {
            let oracle = brute_force_models(&axioms, n).map_err(|e| e.to_string())?;
            let found = enumerate_models(&axioms, n, &mut NodeBudget::new(None)).models.len() as u64;
            ensure(found == oracle.classes, || format!("{name} n={n}: enumerator {found}, oracle {}", oracle.classes))?;
            cells.push(format!("{name} n={n}: {found}"));
        }
    }
    Ok(cells.join(", "))
}

fn corollary() -> Outcome {
    let args = ["search", "--axioms", "implicative-aBE", "--violates", "commutativity", "--max-size", "5"];
    let (code, out, err) = abeforge(&args);
    ensure(code == 0, || format!("exit {code}: {err}"))?;
    ensure(out.ends_with("none up to 5\n"), || format!("unexpected output:\n{out}"))?;
    Ok("commutativity holds in every implicative-aBE model up to size 5".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"size": 4, "unit": 3, "table": [[3, 0, 3, 3], [3, 3, 2, 3], [0, 1, 3, 3], [0, 1, 2, 3]]}"#)
        .map_err(|e| e.to_string())?;
    let model = model.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["replay"],
        vec!["replay", "--show", "thm"],
        vec!["enumerate", "--axioms", "implicative-aBE", "--max-size", "6"],
        vec!["enumerate", "--axioms", "aBE", "--max-size", "5"],
        vec!["search", "--axioms", "implicative-aBE", "--violates", "trans", "--max-size", "6"],
        vec!["search", "--axioms", "aBE", "--violates", "trans", "--max-size", "5"],
        vec!["search", "--axioms", "implicative-aBE", "--violates", "commutativity", "--max-size", "5"],
        vec!["enumerate", "--axioms", "aBE", "--max-size", "5", "--budget-nodes", "2000"],
        vec!["oracle", "--axioms", "aBE", "--size", "3"],
        vec!["check", "--model", model, "--axioms", "aBE", "--property", "trans"],
        vec!["corpus", "export"],
    ];
    let mut runs = 0;
    for cmd in &commands {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "4", "4"] {
            let mut args = cmd.clone();
            args.extend(["--emit", "json", "--threads", threads]);
            let (code, out, err) = abeforge(&args);
            ensure(code != 3, || format!("{args:?}: {err}"))?;
            serde_json::from_str::<Value>(&out).map_err(|e| format!("{args:?}: not JSON: {e}"))?;
            outputs.push(out);
            runs += 1;
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{cmd:?}: outputs differ"))?;
    }
    Ok(format!("{} commands, {runs} runs with 1 and 4 threads, byte-identical JSON", commands.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("corpus replay", corpus_replay),
        ("perturbation suite", perturbations),
        ("theorem at desk scale", theorem_at_desk_scale),
        ("kernel-soundness bridge", soundness_bridge),
        ("oracle equivalence", oracle_equivalence),
        ("corollary check", corollary),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
