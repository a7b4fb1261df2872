//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use catkit::catability::{cat_operator, gaussian_pure_state, xi, GaussianParams, OptConfig};
use catkit::decoherence::{apply_channel, fidelity, loss_channel};
use catkit::fock::{cat_state, coherent_state, Branch, FockSpace, Ket, C64};
use catkit::greens::{verify_projection, LesserGF, RingLattice};
use catkit::su11::{adjoint_action_deviation, build_su11, closure_residuals};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const CLOSURE_TOL: f64 = 1e-12;
const CASIMIR_STATED: f64 = 1.0 / 16.0;
const CASIMIR_TOL: f64 = 1e-12;
const AUTOMORPHISM_TOL: f64 = 1e-12;
const IDEAL_CAT_TOL: f64 = 1e-6;
const GROUND_FIDELITY_TOL: f64 = 1e-8;
const GAUSSIAN_FLOOR_TOL: f64 = 1e-3;
const GAUSSIAN_SAMPLES: usize = 20;
const FIXTURE_REL_TOL: f64 = 2e-3;
const TRACE_TOL: f64 = 1e-12;
const CHANNEL_FIDELITY_TOL: f64 = 1e-9;
const COMPOSITION_TOL: f64 = 1e-9;
const CLAIM_ABS_TOL: f64 = 1e-8;
const GREENS_TOL: f64 = 1e-10;
const CUTOFF_DRIFT_TOL: f64 = 2e-3;
const XI_FIXTURE: &str = include_str!("../fixtures/xi_fock1_odd.json");

type Verdict = Result<(bool, String), String>;

fn catkit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_catkit")).args(args).output().expect("catkit binary runs")
}

fn space(dim: usize) -> FockSpace {
    FockSpace::with_dim(dim).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn algebra_closure() -> Verdict {
    let mut worst = 0.0f64;
    for dim in [16, 64, 128] {
        let r = closure_residuals(&build_su11(&space(dim)).map_err(|e| e.to_string())?, 4).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_residual());
    }
    Ok((worst <= CLOSURE_TOL, format!("max residual {worst:.3e} at dim 16/64/128, guard 4 (tol {CLOSURE_TOL:e})")))
}

fn casimir() -> Verdict {
    let mut worst = 0.0f64;
    let mut seen = 0.0;
    for dim in [64, 128] {
        let set = build_su11(&space(dim)).map_err(|e| e.to_string())?;
        for n in 0..dim - 4 {
            let v = set.casimir.entry(n, n);
            let dev = (v - c(CASIMIR_STATED)).norm();
            if dev >= worst {
                worst = dev;
                seen = v.re;
            }
        }
    }
    Ok((
        worst <= CASIMIR_TOL,
        format!("diagonal value {seen} vs stated {CASIMIR_STATED}, max dev {worst:.3e} (tol {CASIMIR_TOL:e})"),
    ))
}

fn automorphism() -> Verdict {
    let mut worst = 0.0f64;
    for dim in [64, 128] {
        let set = build_su11(&space(dim)).map_err(|e| e.to_string())?;
        for phi in [0.1, 1.0, 2.5] {
            worst = worst.max(adjoint_action_deviation(&set.k_plus, phi, 2).map_err(|e| e.to_string())?);
            worst = worst.max(adjoint_action_deviation(&set.k_minus, phi, -2).map_err(|e| e.to_string())?);
        }
    }
    Ok((worst <= AUTOMORPHISM_TOL, format!("max deviation {worst:.3e} (tol {AUTOMORPHISM_TOL:e})")))
}

struct XiTables {
    cats64: Vec<f64>,
    cats128: Vec<f64>,
    gauss64: Vec<f64>,
    gauss128: Vec<f64>,
}

const CAT_ALPHAS: [f64; 3] = [0.8, 1.2, 1.8];
const WITNESS_ALPHA: f64 = 1.2;

fn gaussian_inputs() -> Vec<(GaussianParams, Branch)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    (0..GAUSSIAN_SAMPLES)
        .map(|i| {
            let rho = 1.5 * rng.gen::<f64>().sqrt();
            let beta = C64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU));
            let g = GaussianParams::from_polar(beta, rng.gen_range(0.0..=0.8), rng.gen_range(0.0..std::f64::consts::TAU));
            (g, if i % 2 == 0 { Branch::Even } else { Branch::Odd })
        })
        .collect()
}

fn xi_tables() -> Result<XiTables, String> {
    let cfg = OptConfig::default();
    let cats = |dim: usize| -> Result<Vec<f64>, String> {
        let s = space(dim);
        CAT_ALPHAS
            .iter()
            .map(|&a| {
                let k = cat_state(&s, c(a), Branch::Even).map_err(|e| e.to_string())?;
                xi(&s, &k, c(a), Branch::Even, &cfg).map(|r| r.xi).map_err(|e| e.to_string())
            })
            .collect()
    };
    let inputs = gaussian_inputs();
    let gauss = |dim: usize| -> Result<Vec<f64>, String> {
        let s = space(dim);
        inputs
            .iter()
            .map(|(g, branch)| {
                let k: Ket = gaussian_pure_state(&s, g).map_err(|e| e.to_string())?;
                xi(&s, &k, c(WITNESS_ALPHA), *branch, &cfg).map(|r| r.xi).map_err(|e| e.to_string())
            })
            .collect()
    };
    Ok(XiTables { cats64: cats(64)?, cats128: cats(128)?, gauss64: gauss(64)?, gauss128: gauss(128)? })
}

fn ideal_cat(t: &XiTables) -> Verdict {
    let s = space(64);
    let worst_xi = t.cats64.iter().copied().fold(0.0, f64::max);
    let mut worst_def = 0.0f64;
    for &a in &CAT_ALPHAS {
        let cat = cat_state(&s, c(a), Branch::Even).map_err(|e| e.to_string())?;
        for gamma in [0.1, 1.0, 10.0] {
            let (_, ground) = cat_operator(&s, c(a), gamma, Branch::Even).map_err(|e| e.to_string())?.ground_state();
            worst_def = worst_def.max(1.0 - ground.fidelity(&cat).map_err(|e| e.to_string())?);
        }
    }
    Ok((
        worst_xi <= IDEAL_CAT_TOL && worst_def <= GROUND_FIDELITY_TOL,
        format!(
            "max xi {worst_xi:.3e} (tol {IDEAL_CAT_TOL:e}); max ground-state fidelity deficit {worst_def:.3e} (tol {GROUND_FIDELITY_TOL:e})"
        ),
    ))
}

fn gaussian_floor(t: &XiTables) -> Verdict {
    let min = t.gauss64.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        min >= 1.0 - GAUSSIAN_FLOOR_TOL,
        format!("min xi over {GAUSSIAN_SAMPLES} seeded Gaussian inputs {min:.6} (floor {})", 1.0 - GAUSSIAN_FLOOR_TOL),
    ))
}

fn fixture_equivalence(dir: &Path) -> Verdict {
    let fixture: Value = serde_json::from_str(XI_FIXTURE).map_err(|e| e.to_string())?;
    let expected = fixture["result"]["xi"].as_f64().ok_or("fixture lacks result.xi")?;
    let csv = dir.join("xi.csv");
    let out = catkit(&[
        "xi",
        "--state",
        "fock:1",
        "--alpha",
        "0.8",
        "--branch",
        "odd",
        "--out",
        csv.to_str().unwrap(),
        "--json",
        dir.join("xi.json").to_str().unwrap(),
    ]);
    if !out.status.success() {
        return Err(format!("catkit xi failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let row = text.lines().nth(1).ok_or("missing CSV row")?;
    let got: f64 = row.split(',').nth(5).ok_or("missing xi column")?.parse().map_err(|_| "bad xi")?;
    let rel = (got - expected).abs() / expected;
    Ok((rel <= FIXTURE_REL_TOL, format!("optimizer {got:.9e} vs grid fixture {expected:.9e}, rel {rel:.2e} (tol {FIXTURE_REL_TOL:e})")))
}

fn channel() -> Verdict {
    let s = space(64);
    let mut trace_dev = 0.0f64;
    for tau in [0.0, 0.25, 0.5, 0.9, 1.0] {
        let ch = loss_channel(&s, tau).map_err(|e| e.to_string())?;
        trace_dev = trace_dev.max(ch.completeness_deviation(8));
        let rho = cat_state(&s, c(1.2), Branch::Even).map_err(|e| e.to_string())?.to_density();
        let out = apply_channel(&rho, &ch).map_err(|e| e.to_string())?;
        trace_dev = trace_dev.max((out.trace() - c(1.0)).norm());
    }
    let mut coherent_def = 0.0f64;
    let mut composition = 0.0f64;
    for alpha in [C64::new(1.0, 0.0), C64::new(-0.7, 1.1), C64::new(1.5, 0.5)] {
        let rho = coherent_state(&s, alpha).map_err(|e| e.to_string())?.to_density();
        let out = apply_channel(&rho, &loss_channel(&s, 0.7).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let target = coherent_state(&s, alpha * 0.7f64.sqrt()).map_err(|e| e.to_string())?;
        coherent_def = coherent_def.max(1.0 - fidelity(&out, &target).map_err(|e| e.to_string())?);
        let (t1, t2) = (0.9, 0.6);
        let step = |r: &catkit::DensityOp, t: f64| apply_channel(r, &loss_channel(&s, t).unwrap()).unwrap();
        let two = step(&step(&rho, t1), t2);
        let one = step(&rho, t1 * t2);
        composition = composition.max((two.matrix() - one.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok((
        trace_dev <= TRACE_TOL && coherent_def <= CHANNEL_FIDELITY_TOL && composition <= COMPOSITION_TOL,
        format!(
            "trace {trace_dev:.2e} (tol {TRACE_TOL:e}); coherent fidelity deficit {coherent_def:.2e} (tol {CHANNEL_FIDELITY_TOL:e}); composition {composition:.2e} (tol {COMPOSITION_TOL:e})"
        ),
    ))
}

fn claims(dir: &Path) -> Verdict {
    let run = |name: &str| -> Result<(Vec<u8>, i32), String> {
        let path = dir.join(name);
        let out = catkit(&["claims", "--dim", "128", "--json", path.to_str().unwrap()]);
        let code = out.status.code().ok_or("claims killed by signal")?;
        if code == 1 {
            return Err(format!("catkit claims errored: {}", String::from_utf8_lossy(&out.stderr)));
        }
        Ok((std::fs::read(&path).map_err(|e| e.to_string())?, code))
    };
    let (first, code) = run("claims_a.json")?;
    let (second, _) = run("claims_b.json")?;
    let identical = first == second;
    let report: Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
    let claims = report["claims"].as_array().ok_or("no claims array")?;
    let find = |id: &str| claims.iter().find(|c| c["id"] == id);
    let mut failed = Vec::new();
    for id in ["C1", "C9", "C10", "C2-phase_weighted"] {
        let c = find(id).ok_or(format!("{id} missing"))?;
        let dev = c["max_abs_dev"].as_f64().unwrap_or(f64::INFINITY);
        if c["verdict"] != "consistent" || dev > CLAIM_ABS_TOL {
            failed.push(format!("{id} {} (max_abs_dev {dev:.3e})", c["verdict"].as_str().unwrap_or("?")));
        }
    }
    for id in ["C3", "C4", "C5", "C6", "C7", "C8", "C11"] {
        let c = find(id).ok_or(format!("{id} missing"))?;
        if c["skipped"] != false || !c["max_abs_dev"].is_f64() || !c["max_rel_dev"].is_f64() {
            failed.push(format!("{id} not quantified"));
        }
    }
    if !identical {
        failed.push("consecutive runs differ".into());
    }
    let detail = if failed.is_empty() {
        format!("must-hold claims consistent, C3-C8/C11 quantified, runs byte-identical (exit {code})")
    } else {
        format!("{}; runs byte-identical: {identical}; exit {code}", failed.join("; "))
    };
    Ok((failed.is_empty(), detail))
}

fn greens() -> Verdict {
    let s = space(64);
    let lattice = RingLattice::new(16).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for occ in [vec![(1i64, 1.0)], vec![(1i64, 0.5)], vec![(2i64, 1.0), (-3, 0.5)]] {
        let g = LesserGF::from_modes(&lattice, &occ).map_err(|e| e.to_string())?;
        let r = verify_projection(&s, &g, &lattice.mode(occ[0].0)).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_dev);
    }
    let single = catkit(&["greens-demo", "--sites", "16", "--occupation", "single:1"]);
    let thermal = catkit(&["greens-demo", "--sites", "16", "--occupation", "thermal:0.5"]);
    let cli_ok = single.status.success() && thermal.status.success();
    Ok((worst <= GREENS_TOL && cli_ok, format!("max projection dev {worst:.2e} (tol {GREENS_TOL:e}); greens-demo exits 0: {cli_ok}")))
}

fn cutoff_stability(t: &XiTables) -> Verdict {
    let drift = t
        .cats64
        .iter()
        .zip(&t.cats128)
        .chain(t.gauss64.iter().zip(&t.gauss128))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((drift <= CUTOFF_DRIFT_TOL, format!("max |xi(128) - xi(64)| {drift:.2e} over criteria 4 and 5 inputs (tol {CUTOFF_DRIFT_TOL:e})")))
}

fn robustness() -> Verdict {
    let out = catkit(&["sweep-loss", "--alpha", "1.2", "--taus", "1,0.95,0.9,0.8"]);
    if !out.status.success() {
        return Err(format!("sweep-loss failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    let claim = text.lines().find(|l| l.starts_with("# CHECKED-CLAIM"));
    let crossover = text.lines().find(|l| l.starts_with("# CROSSOVER"));
    let verdict = claim.and_then(|l| l.rsplit(' ').next()).filter(|v| *v == "true" || *v == "false");
    Ok((
        rows == 5 && verdict.is_some() && crossover.is_some(),
        format!(
            "report emitted; odd_more_robust = {}; {}",
            verdict.unwrap_or("missing"),
            crossover.map(|l| l.trim_start_matches("# ")).unwrap_or("crossover line missing")
        ),
    ))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let started = Instant::now();
    let tables = xi_tables();
    let with_tables = |f: fn(&XiTables) -> Verdict| -> Verdict {
        match &tables {
            Ok(t) => f(t),
            Err(e) => Err(e.clone()),
        }
    };
    let results: Vec<(u32, &str, Verdict)> = vec![
        (1, "algebra closure", algebra_closure()),
        (2, "Casimir value 1/16", casimir()),
        (3, "phase automorphism", automorphism()),
        (4, "ideal-cat certificate", with_tables(ideal_cat)),
        (5, "Gaussian floor", with_tables(gaussian_floor)),
        (6, "xi oracle fixture", fixture_equivalence(dir.path())),
        (7, "loss channel", channel()),
        (8, "claim adjudication", claims(dir.path())),
        (9, "Green-function projection", greens()),
        (10, "truncation stability", with_tables(cutoff_stability)),
        (11, "robustness report", robustness()),
    ];
    let mut failed = Vec::new();
    for (n, name, verdict) in &results {
        let (status, detail) = match verdict {
            Ok((true, d)) => ("PASS", d.clone()),
            Ok((false, d)) => ("FAIL", d.clone()),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed.push(format!("#{n}"));
        }
        println!("acceptance #{n:<2} {name:<26} {status}  {detail}");
    }
    println!(
        "acceptance: {} passed, {} failed{} ({:.1}s)",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) },
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
