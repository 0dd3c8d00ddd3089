//! End-to-end acceptance run. Prints one `[PASS]`/`[FAIL]` line per
//! criterion. Failures are reported but only turn into a non-zero exit
//! status when `ACCEPTANCE_STRICT=1`, so the workspace test run stays
//! usable on machines without the downloaded collection matrices.
//!
//! `ACCEPTANCE_ONLY=2,5` restricts the run to the listed criteria.

use std::time::{Duration, Instant};

use ipgd::experiment::{
    compare_prepared, data_dir, noise_prepared, prepare, resolve_dataset, run_checks, CheckOptions,
    ExperimentConfig, Prepared, ResultTable, Settings,
};
use ipgd::solvers::SolverKind;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn fail(detail: impl Into<String>) -> Self {
        Outcome {
            pass: false,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }
}

fn config(
    dataset: &str,
    solvers: &str,
    max_iters: usize,
    params: &str,
    out: &std::path::Path,
) -> ipgd::error::Result<ExperimentConfig> {
    ExperimentConfig::from_settings(Settings {
        dataset: Some(dataset.into()),
        solvers: Some(solvers.into()),
        max_iters: Some(max_iters),
        params: Some(params.into()),
        out: Some(out.to_path_buf()),
        ..Default::default()
    })
}

fn iters(t: &ResultTable, k: SolverKind) -> Option<usize> {
    t.row(k).and_then(|r| r.iterations_to_tol)
}

fn show(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

/// Measured iteration count against `target` with an absolute slack.
fn within_abs(got: Option<usize>, target: usize, slack: usize) -> bool {
    got.is_some_and(|g| g.abs_diff(target) <= slack)
}

/// Measured iteration count against `target` with a relative slack.
fn within_rel(got: Option<usize>, target: usize, frac: f64) -> bool {
    got.is_some_and(|g| (g as f64 - target as f64).abs() <= frac * target as f64)
}

fn ash608_available() -> Option<ipgd::experiment::DatasetSource> {
    resolve_dataset("ash608", &data_dir()).ok()
}

fn criterion_1(tmp: &std::path::Path) -> Outcome {
    if ash608_available().is_none() {
        return Outcome::fail(format!(
            "ash608 not found under {} (run `ipgd fetch ash608`)",
            data_dir().display()
        ));
    }
    let start = Instant::now();
    let cfg = match config("ash608", "all", 100_000, "table", tmp) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(e.to_string()),
    };
    let prep = match prepare(&cfg) {
        Ok(p) => p,
        Err(e) => return Outcome::fail(e.to_string()),
    };
    let t = compare_prepared(&prep, &cfg);
    let elapsed = start.elapsed();
    let targets = [
        (SolverKind::Ipg, 9, 2),
        (SolverKind::Gd, 37, 2),
        (SolverKind::Nag, 23, 2),
        (SolverKind::Hbm, 21, 2),
        (SolverKind::Apc, 15, 2),
        (SolverKind::Bfgs, 15, 5),
    ];
    let mut pass = elapsed < Duration::from_secs(30);
    let mut parts = Vec::new();
    for (k, target, slack) in targets {
        let got = iters(&t, k);
        let ok = within_abs(got, target, slack);
        pass &= ok;
        parts.push(format!(
            "{k} {}/{target}{}",
            show(got),
            if ok { "" } else { "!" }
        ));
    }
    Outcome {
        pass,
        detail: format!("{} in {:.1}s", parts.join(", "), elapsed.as_secs_f64()),
        notes: Vec::new(),
    }
}

fn gr_prepared(tmp: &std::path::Path) -> Result<(Prepared, ExperimentConfig), String> {
    let cfg = config("gr_30_30", "all", 100_000, "tuned", tmp).map_err(|e| e.to_string())?;
    let prep = prepare(&cfg).map_err(|e| e.to_string())?;
    Ok((prep, cfg))
}

fn criterion_2(tmp: &std::path::Path) -> Outcome {
    let start = Instant::now();
    let (prep, cfg) = match gr_prepared(tmp) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(e),
    };
    let t = compare_prepared(&prep, &cfg);
    let elapsed = start.elapsed();
    let targets = [
        (SolverKind::Ipg, 742, 0.05),
        (SolverKind::Nag, 1940, 0.10),
        (SolverKind::Hbm, 1130, 0.10),
        (SolverKind::Apc, 1110, 0.10),
        (SolverKind::Bfgs, 85, 0.25),
    ];
    let mut pass = elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for (k, target, frac) in targets {
        let got = iters(&t, k);
        let ok = within_rel(got, target, frac);
        pass &= ok;
        parts.push(format!(
            "{k} {}/{target}{}",
            show(got),
            if ok { "" } else { "!" }
        ));
    }
    let gd = iters(&t, SolverKind::Gd);
    let gd_ok = gd.is_none();
    pass &= gd_ok;
    parts.push(format!(
        "GD {}{}",
        gd.map(|g| g.to_string()).unwrap_or_else(|| ">1e5".into()),
        if gd_ok { "" } else { "!" }
    ));

    // Line-search sensitivity: the same BFGS run with an exact step length.
    let mut notes = Vec::new();
    if let Ok(exact) = ExperimentConfig::from_settings(Settings {
        dataset: Some("gr_30_30".into()),
        solvers: Some("bfgs".into()),
        out: Some(tmp.to_path_buf()),
        ..Settings::from_toml("[bfgs]\nline_search = \"exact\"\n").unwrap()
    }) {
        let e = compare_prepared(&prep, &exact);
        notes.push(format!(
            "BFGS with exact line search: {} iterations",
            show(iters(&e, SolverKind::Bfgs))
        ));
    }
    Outcome {
        pass,
        detail: format!("{} in {:.1}s", parts.join(", "), elapsed.as_secs_f64()),
        notes,
    }
}

fn criterion_3(tmp: &std::path::Path) -> Outcome {
    let start = Instant::now();
    let (prep, base) = match gr_prepared(tmp) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(e),
    };
    // First-order methods run until their error stalls or 2e4 rounds;
    // BFGS pays an O(d³) factorization per round and is capped lower.
    let first = ExperimentConfig {
        solvers: vec![
            SolverKind::Ipg,
            SolverKind::Gd,
            SolverKind::Nag,
            SolverKind::Hbm,
            SolverKind::Apc,
        ],
        max_iters: 20_000,
        ..base.clone()
    };
    let mut t = noise_prepared(&prep, &first);
    let bfgs = ExperimentConfig {
        solvers: vec![SolverKind::Bfgs],
        max_iters: 1_500,
        ..base
    };
    t.rows.extend(noise_prepared(&prep, &bfgs).rows);
    let elapsed = start.elapsed();

    let asym = |k| t.row(k).and_then(|r| r.asymptotic).map(|a| a.abs);
    let targets = [
        (SolverKind::Gd, 7.68),
        (SolverKind::Nag, 1.86),
        (SolverKind::Hbm, 8.5e-3),
        (SolverKind::Apc, 0.45),
        (SolverKind::Bfgs, 1.49e-2),
    ];
    let mut pass = elapsed < Duration::from_secs(600);
    let mut parts = Vec::new();
    for (k, target) in targets {
        let got = asym(k);
        let ok = got.is_some_and(|g| g <= 3.0 * target && g >= target / 3.0);
        pass &= ok;
        parts.push(format!(
            "{k} {}/{target:e}{}",
            got.map(|g| format!("{g:.3e}"))
                .unwrap_or_else(|| "none".into()),
            if ok { "" } else { "!" }
        ));
    }
    let ipg = asym(SolverKind::Ipg);
    let others_min = targets
        .iter()
        .filter_map(|(k, _)| asym(*k))
        .fold(f64::INFINITY, f64::min);
    let ipg_ok = ipg.is_some_and(|v| v <= 1e-6 && v < others_min);
    pass &= ipg_ok;
    parts.push(format!(
        "IPG {}{}",
        ipg.map(|g| format!("{g:.3e}"))
            .unwrap_or_else(|| "none".into()),
        if ipg_ok { "" } else { "!" }
    ));

    let growth = match ash608_available() {
        None => {
            pass = false;
            "ash608 BFGS growth: dataset not available!".to_string()
        }
        Some(_) => match config("ash608", "bfgs", 2_000, "table", tmp)
            .and_then(|c| prepare(&c).map(|p| (p, c)))
        {
            Ok((p, c)) => {
                let flagged = noise_prepared(&p, &c)
                    .row(SolverKind::Bfgs)
                    .is_some_and(|r| r.unbounded_growth);
                pass &= flagged;
                format!(
                    "ash608 BFGS growth flag {}{}",
                    flagged,
                    if flagged { "" } else { "!" }
                )
            }
            Err(e) => {
                pass = false;
                format!("ash608: {e}!")
            }
        },
    };
    parts.push(growth);
    Outcome {
        pass,
        detail: format!("{} in {:.1}s", parts.join(", "), elapsed.as_secs_f64()),
        notes: Vec::new(),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let results = run_checks(&CheckOptions::default());
    let elapsed = start.elapsed();
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.id.to_string())
        .collect();
    let pass = failed.is_empty() && results.len() == 10 && elapsed < Duration::from_secs(60);
    let notes = results.iter().map(|r| r.to_string()).collect();
    let detail = if failed.is_empty() {
        format!(
            "{} suites passed in {:.2}s",
            results.len(),
            elapsed.as_secs_f64()
        )
    } else {
        format!(
            "failed suites {} in {:.2}s",
            failed.join(","),
            elapsed.as_secs_f64()
        )
    };
    Outcome {
        pass,
        detail,
        notes,
    }
}

fn read_dir_sorted(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_5(tmp: &std::path::Path) -> Outcome {
    let runs = [
        (
            "synthetic 60,8,50,8,7 / all solvers",
            Settings {
                synthetic: Some("60,8,50,8,7".into()),
                ..Default::default()
            },
        ),
        (
            "synthetic 40,10,1e3,10,2 / uniform noise",
            Settings {
                synthetic: Some("40,10,1e3,10,2".into()),
                agents: Some(4),
                noise: Some("uniform:-1e-5,1e-5".into()),
                seed: Some(11),
                max_iters: Some(3_000),
                ..Default::default()
            },
        ),
        (
            "gr_30_30 / ipg,nag",
            Settings {
                dataset: Some("gr_30_30".into()),
                solvers: Some("ipg,nag".into()),
                ..Default::default()
            },
        ),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (label, settings)) in runs.into_iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.join(format!("det{i}_{rep}"));
            let s = Settings {
                out: Some(dir.clone()),
                ..settings.clone()
            };
            let result =
                ExperimentConfig::from_settings(s).and_then(|c| ipgd::experiment::cmd_compare(&c));
            if let Err(e) = result {
                return Outcome::fail(format!("{label}: {e}"));
            }
            outputs.push(read_dir_sorted(&dir));
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        pass &= same;
        parts.push(format!(
            "{label}: {} files {}",
            outputs[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
        notes: Vec::new(),
    }
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let tmp = tempfile::tempdir().expect("temporary directory");
    let criteria: [(u32, &str, &dyn Fn() -> Outcome); 5] = [
        (1, "ash608 iteration counts", &|| criterion_1(tmp.path())),
        (2, "gr_30_30 iteration counts", &|| criterion_2(tmp.path())),
        (3, "gr_30_30 noise study", &|| criterion_3(tmp.path())),
        (4, "property suites", &criterion_4),
        (5, "byte-identical repeated runs", &|| {
            criterion_5(tmp.path())
        }),
    ];
    let mut failures = 0;
    println!();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let o = run();
        println!(
            "[{}] {id}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        for n in &o.notes {
            println!("      {n}");
        }
        if !o.pass {
            failures += 1;
        }
    }
    println!("acceptance: {failures} criteria failed");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
