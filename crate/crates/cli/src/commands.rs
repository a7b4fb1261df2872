use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use catkit::catability::{witness_parts, xi, xi_phi, CatParams, GaussianParams, ParityVariant, XiResult};
use catkit::claimcheck::{builtin_claims, check_fixtures, forced_fixtures, run_claims, ClaimReport, FixtureFile};
use catkit::decoherence::{loss_channel, odd_more_robust, robustness_csv, robustness_sweep, wigner_crossover};
use catkit::fock::{coherent_state, expectation, fock_state, ladder_ops, parity_op, Branch, C64};
use catkit::format::g12;
use catkit::greens::{verify_projection, LesserGF, RingLattice};
use catkit::oracle::{xi_double_grid, GaussianGrid, GridXi};
use catkit::su11::{adjoint_action_deviation, build_su11, closure_residuals, flux_to_phase, parity_projectors};
use catkit::CatError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::state::StateSpec;

pub const EMBEDDED_CLAIM_FIXTURES: &str = include_str!("../fixtures/claim_oracles.json");
pub const XI_HEADER: &str = "state,alpha_re,alpha_im,branch,phi,xi,gamma_star,beta_re,beta_im,r,theta";
pub const PHASE_HEADER: &str = "phi,flux_over_flux0,xi_phi,re_parity_term,quadratic_term";
pub const GREENS_TOL: f64 = 1e-10;
/// Slack on the monotone-in-loss check for the even witness.
pub const MONOTONE_TOL: f64 = 2e-3;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerificationFailed,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing to stdout")?;
            out.flush().context("writing to stdout")
        }
    }
}

struct Check {
    name: String,
    value: f64,
    tol: f64,
    skipped: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, skipped: None }
    }

    fn pass(&self) -> bool {
        self.skipped.is_some() || self.value <= self.tol
    }
}

pub fn cmd_verify(cfg: &RunConfig, guard: usize) -> Result<Outcome> {
    let space = cfg.space()?;
    let dim = space.dim();
    let set = build_su11(&space)?;
    let report = closure_residuals(&set, guard)?;
    let l = ladder_ops(&space);
    let mut checks = vec![
        Check::new("k_minus_is_adjoint", set.k_minus.max_abs_diff(&set.k_plus.dagger())?, 0.0),
        Check::new("closure [K0,K+] = K+", report.res_k0_kp, 1e-12),
        Check::new("closure [K0,K-] = -K-", report.res_k0_km, 1e-12),
        Check::new("closure [K-,K+] = 2K0", report.res_km_kp, 1e-12),
        Check::new("casimir = -3/16", report.casimir_dev, 1e-12),
    ];
    for phi in [0.1, 1.0, 2.5] {
        checks.push(Check::new(format!("automorphism K+ phi={phi}"), adjoint_action_deviation(&set.k_plus, phi, 2)?, 1e-12));
        checks.push(Check::new(
            format!("automorphism K- phi={phi}"),
            adjoint_action_deviation(&set.k_minus, phi, -2)?,
            1e-12,
        ));
    }
    let lowest = [0, 1]
        .iter()
        .map(|&n| fock_state(&space, n).and_then(|k| set.k_minus.apply(&k)).map(|v| v.norm()))
        .collect::<Result<Vec<_>, _>>()?;
    checks.push(Check::new("lowest weight K-|0>, K-|1>", lowest.iter().copied().fold(0.0, f64::max), 0.0));
    let kpkm = &set.k_plus * &set.k_minus;
    let kpkm_dev = (0..dim - guard)
        .map(|n| (kpkm.entry(n, n) - C64::new((n * n.saturating_sub(1)) as f64 / 4.0, 0.0)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::new("K+K- diagonal = n(n-1)/4", kpkm_dev, 1e-12));
    let ccr = l.a.commutator(&l.adag)?.max_abs_diff_guarded(&space.identity(), 1);
    checks.push(Check::new("[a, a+] = I below cutoff", ccr, 1e-12));
    let p = parity_op(&space);
    checks.push(Check::new("parity involution", (&p * &p).max_abs_diff(&space.identity())?, 0.0));
    checks.push(Check::new("[parity, n] = 0", p.commutator(&l.n)?.max_abs(), 0.0));
    let (pe, po) = parity_projectors(&space);
    checks.push(Check::new("P_even + P_odd = I", (&pe + &po).max_abs_diff(&space.identity())?, 0.0));
    checks.push(Check::new("[K+, P_even] = 0", set.k_plus.commutator(&pe)?.max_abs(), 0.0));
    checks.push(Check::new("loss completeness tau=0.5", loss_channel(&space, 0.5)?.completeness_deviation(0), 1e-12));
    let mut coherent = Check::new("coherent alpha=1 <n> = 1", 0.0, 1e-10);
    match coherent_state(&space, C64::new(1.0, 0.0)) {
        Ok(k) => coherent.value = (expectation(&l.n, &k)?.re - 1.0).abs(),
        Err(CatError::TruncationInadequate { min_dim, .. }) => {
            coherent.skipped = Some(format!("needs dim >= {min_dim}"))
        }
        Err(e) => return Err(e.into()),
    }
    checks.push(coherent);

    let mut table = format!("# verify dim={dim} guard={guard}\n");
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        let status = match (&c.skipped, c.pass()) {
            (Some(why), _) => format!("SKIP ({why})"),
            (None, true) => "PASS".into(),
            (None, false) => "FAIL".into(),
        };
        let _ = writeln!(table, "{:<width$}  {:>12}  tol {:<8}  {status}", c.name, g12(c.value), g12(c.tol));
    }
    let failed = checks.iter().filter(|c| !c.pass()).count();
    let _ = writeln!(table, "# {} checks, {failed} failed", checks.len());
    emit(cfg.out.as_deref(), &table)?;
    if let Some(path) = &cfg.json {
        emit(Some(path), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::VerificationFailed })
}

pub struct XiArgs {
    pub state: StateSpec,
    pub alpha: Option<C64>,
    pub branch: Option<Branch>,
    pub phi: Option<f64>,
    pub variant: ParityVariant,
    pub oracle: bool,
}

/// Committed output of `--oracle xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiFixture {
    pub state: String,
    pub alpha: C64,
    pub branch: Branch,
    pub gammas: Vec<f64>,
    pub grid: GaussianGrid,
    pub numerator_q: f64,
    pub numerator_p: f64,
    pub result: GridXi,
}

fn xi_row(state: &StateSpec, alpha: C64, branch: Branch, phi: f64, xi: f64, gamma: f64, g: &GaussianParams) -> String {
    let (beta, zeta) = (g.beta, g.zeta);
    let fields = [
        g12(alpha.re),
        g12(alpha.im),
        branch.to_string(),
        g12(phi),
        g12(xi),
        g12(gamma),
        g12(beta.re),
        g12(beta.im),
        g12(zeta.norm()),
        g12(if zeta.norm() > 0.0 { zeta.arg().rem_euclid(TAU) } else { 0.0 }),
    ];
    format!("{XI_HEADER}\n{state},{}\n", fields.join(","))
}

pub fn cmd_xi(cfg: &RunConfig, args: &XiArgs) -> Result<Outcome> {
    let space = cfg.space()?;
    let alpha = match (args.alpha, &args.state) {
        (Some(a), _) => a,
        (None, StateSpec::Cat { alpha, .. } | StateSpec::LossyCat { alpha, .. } | StateSpec::Coherent { alpha }) => {
            *alpha
        }
        (None, _) => bail!("--alpha is required for state `{}`", args.state),
    };
    let branch = args.branch.or(args.state.branch()).unwrap_or(Branch::Even);
    let rho = args.state.build(&space)?;

    if args.oracle {
        if args.phi.is_some_and(|p| p != 0.0) {
            bail!("--oracle evaluates the fixed-phase witness only; drop --phi");
        }
        let (q, p) = witness_parts(&space, &CatParams::new(alpha, branch).with_variant(ParityVariant::Conjugated))?;
        let (nq, np) = (expectation(&q, &rho)?.re, expectation(&p, &rho)?.re);
        let gammas = cfg.opt.gamma_grid();
        let grid = GaussianGrid::coarse();
        let result = xi_double_grid(nq, np, alpha, branch, &gammas, &grid)
            .ok_or(CatError::DegenerateWitness { threshold: catkit::catability::DENOMINATOR_FLOOR })?;
        let csv = xi_row(&args.state, alpha, branch, 0.0, result.xi, result.gamma, &result.gaussian);
        let fixture = XiFixture {
            state: args.state.to_string(),
            alpha,
            branch,
            gammas,
            grid,
            numerator_q: nq,
            numerator_p: np,
            result,
        };
        return write_xi(cfg, &csv, &serde_json::to_string_pretty(&fixture)?);
    }

    let res: XiResult = match args.phi {
        Some(phi) => {
            let params = CatParams::new(alpha, branch).with_phi(phi).with_variant(args.variant);
            xi_phi(&space, &rho, &params, &cfg.opt)?
        }
        None => xi(&space, &rho, alpha, branch, &cfg.opt)?,
    };
    let g = res.gaussian_star;
    let csv = xi_row(&args.state, alpha, branch, args.phi.unwrap_or(0.0), res.xi, res.gamma_star, &g);
    write_xi(cfg, &csv, &serde_json::to_string_pretty(&res)?)
}

/// CSV to `out` (or stdout); JSON to `json`, or after a blank line on stdout.
fn write_xi(cfg: &RunConfig, csv: &str, json: &str) -> Result<Outcome> {
    match (&cfg.out, &cfg.json) {
        (None, None) => emit(None, &format!("{csv}\n{json}\n"))?,
        (out, json_path) => {
            emit(out.as_deref(), csv)?;
            match json_path {
                Some(p) => emit(Some(p), &format!("{json}\n"))?,
                None => emit(None, &format!("\n{json}\n"))?,
            }
        }
    }
    Ok(Outcome::Ok)
}

pub enum PhasePoints {
    Uniform(usize),
    Flux(Vec<f64>),
}

pub fn cmd_sweep_phase(
    cfg: &RunConfig,
    alpha: C64,
    branch: Branch,
    variant: ParityVariant,
    state: Option<&StateSpec>,
    points: &PhasePoints,
) -> Result<Outcome> {
    let space = cfg.space()?;
    let phis: Vec<f64> = match points {
        PhasePoints::Uniform(n) => {
            if *n < 2 {
                bail!("--points must be at least 2, got {n}");
            }
            (0..*n).map(|k| TAU * k as f64 / *n as f64).collect()
        }
        PhasePoints::Flux(list) => {
            list.iter().map(|&f| flux_to_phase(f, 1.0)).collect::<Result<_, _>>().map_err(|e| anyhow!("{e}"))?
        }
    };
    let rho = match state {
        Some(s) => s.build(&space)?,
        None => StateSpec::Cat { alpha, branch }.build(&space)?,
    };
    let rows: Vec<String> = phis
        .par_iter()
        .map(|&phi| -> Result<String> {
            let params = CatParams::new(alpha, branch).with_phi(phi).with_variant(variant);
            let (q, p) = witness_parts(&space, &params)?;
            let quad = expectation(&q, &rho)?.re;
            let parity = expectation(&p, &rho)?.re;
            let value = match xi_phi(&space, &rho, &params, &cfg.opt) {
                Ok(r) => r.xi,
                Err(CatError::DegenerateWitness { .. }) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            Ok([g12(phi), g12(phi / TAU), g12(value), g12(parity), g12(quad)].join(","))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from(PHASE_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    emit(cfg.out.as_deref(), &csv)?;
    Ok(Outcome::Ok)
}

pub fn cmd_sweep_loss(cfg: &RunConfig, alpha: C64, taus: &[f64]) -> Result<Outcome> {
    let space = cfg.space()?;
    if taus.is_empty() {
        bail!("--taus needs at least one transmissivity");
    }
    let rows = robustness_sweep(&space, alpha, taus, &cfg.opt, &cfg.wigner)?;
    let mut text = robustness_csv(&rows);
    let _ = writeln!(
        text,
        "# CHECKED-CLAIM odd_more_robust (xi_odd <= xi_even at every tau): {}",
        odd_more_robust(&rows)
    );
    let monotone = rows.windows(2).all(|w| w[1].xi_even >= w[0].xi_even - MONOTONE_TOL);
    let _ = writeln!(text, "# MONITORED xi_even non-decreasing with loss (tol {}): {monotone}", g12(MONOTONE_TOL));
    match wigner_crossover(&rows) {
        Some(r) => {
            let _ = writeln!(
                text,
                "# CROSSOVER tau={} xi_even={} wigner_min={} (Wigner positive on grid while xi_even < 1)",
                g12(r.tau),
                g12(r.xi_even),
                g12(r.wigner_min)
            );
        }
        None => {
            let _ = writeln!(text, "# CROSSOVER none (no tau with Wigner positive on grid and xi_even < 1)");
        }
    }
    emit(cfg.out.as_deref(), &text)?;
    Ok(Outcome::Ok)
}

pub fn cmd_claims(cfg: &RunConfig, fixtures: Option<&PathBuf>, oracle: bool) -> Result<Outcome> {
    let space = cfg.space()?;
    if oracle {
        let file = forced_fixtures();
        let checks = check_fixtures(&space, &file)?;
        if let Some(bad) = checks.iter().find(|c| !c.ok) {
            bail!("forced oracle value for {} does not hold: expected {}, got {}", bad.claim, bad.expected, bad.got);
        }
        emit(cfg.json.as_deref(), &format!("{}\n", file.to_json()))?;
        return Ok(Outcome::Ok);
    }

    let text = match fixtures {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading fixtures {}", p.display()))?,
        None => EMBEDDED_CLAIM_FIXTURES.to_string(),
    };
    let file = FixtureFile::parse(&text)?;
    let checks = check_fixtures(&space, &file)?;
    let broken: Vec<_> = checks.iter().filter(|c| !c.ok).collect();
    for c in &broken {
        eprintln!("oracle fixture for {} failed: expected {}, oracle gave {} (dev {:e})", c.claim, c.expected, c.got, c.dev);
    }
    if !broken.is_empty() {
        return Ok(Outcome::VerificationFailed);
    }

    let report = ClaimReport::new(space.dim(), run_claims(&space, &builtin_claims())?);
    emit(cfg.json.as_deref(), &format!("{}\n", report.to_json()))?;
    let mut summary = String::new();
    for c in &report.claims {
        let dev = |x: Option<f64>| x.map(g12).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            summary,
            "{:<18} {:<10} max_abs_dev {:<14} max_rel_dev {}",
            c.id,
            serde_json::to_value(c.verdict)?.as_str().unwrap_or("?"),
            dev(c.max_abs_dev),
            dev(c.max_rel_dev)
        );
    }
    let failures = report.must_hold_failures();
    if failures.is_empty() {
        let _ = writeln!(summary, "# must-hold claims consistent");
    } else {
        let _ = writeln!(summary, "# must-hold claims not consistent: {}", failures.join(", "));
    }
    match &cfg.out {
        Some(p) => emit(Some(p), &summary)?,
        None => eprint!("{summary}"),
    }
    Ok(if failures.is_empty() { Outcome::Ok } else { Outcome::VerificationFailed })
}

/// `single:M`, `thermal:NU`, or `modes:M=NU,M=NU,…`.
pub fn parse_occupation(spec: &str, mode: i64) -> Result<Vec<(i64, f64)>> {
    const GRAMMAR: &str = "expected single:M, thermal:NU or modes:M=NU,M=NU,...";
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("cannot parse `{s}`; {GRAMMAR}"));
    match spec.split_once(':') {
        Some(("single", m)) => Ok(vec![(m.trim().parse().map_err(|_| anyhow!("bad mode `{m}`; {GRAMMAR}"))?, 1.0)]),
        Some(("thermal", nu)) => Ok(vec![(mode, num(nu)?)]),
        Some(("modes", list)) => list
            .split(',')
            .map(|pair| {
                let (m, nu) = pair.split_once('=').ok_or_else(|| anyhow!("bad entry `{pair}`; {GRAMMAR}"))?;
                Ok((m.trim().parse().map_err(|_| anyhow!("bad mode `{m}`; {GRAMMAR}"))?, num(nu)?))
            })
            .collect(),
        _ => bail!("unrecognized occupation `{spec}`; {GRAMMAR}"),
    }
}

pub fn cmd_greens_demo(cfg: &RunConfig, sites: usize, occupation: &str, mode: Option<i64>) -> Result<Outcome> {
    let space = cfg.space()?;
    let lattice = RingLattice::new(sites)?;
    let default_mode = mode.unwrap_or(1);
    let occupied = parse_occupation(occupation, default_mode)?;
    let probe = mode.unwrap_or(occupied[0].0);
    let g = LesserGF::from_modes(&lattice, &occupied)?;
    let report = verify_projection(&space, &g, &lattice.mode(probe))?;
    let mut text = format!("# greens-demo sites={sites} occupation={occupation} mode={probe}\n");
    let rows = [
        ("occupation (greens)", report.nu),
        ("occupation_dev", report.occupation_dev),
        ("pair <c+^2 c^2> (greens, Wick)", report.pair_greens),
        ("pair <c+^2 c^2> (fock, Gaussian reference)", report.pair_fock),
        ("pair_dev", report.pair_dev),
        ("j0_dev", report.j0_dev),
        ("max_dev", report.max_dev),
    ];
    for (k, v) in rows {
        let _ = writeln!(text, "{k}: {}", g12(v));
    }
    if let Some(d) = report.number_state_pair_dev {
        let _ = writeln!(text, "number-state pair deviation (Wick vs n(n-1), informational): {}", g12(d));
    }
    let pass = report.max_dev <= GREENS_TOL;
    let _ = writeln!(text, "# {} (tol {})", if pass { "PASS" } else { "FAIL" }, g12(GREENS_TOL));
    emit(cfg.out.as_deref(), &text)?;
    if let Some(p) = &cfg.json {
        emit(Some(p), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if pass { Outcome::Ok } else { Outcome::VerificationFailed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_grammar() {
        assert_eq!(parse_occupation("single:3", 1).unwrap(), vec![(3, 1.0)]);
        assert_eq!(parse_occupation("thermal:0.5", 2).unwrap(), vec![(2, 0.5)]);
        assert_eq!(parse_occupation("modes:1=0.3,2=0.7", 1).unwrap(), vec![(1, 0.3), (2, 0.7)]);
        assert!(parse_occupation("full", 1).is_err());
        assert!(parse_occupation("modes:1", 1).is_err());
    }

    #[test]
    fn embedded_fixtures_match_forced_values() {
        assert_eq!(FixtureFile::parse(EMBEDDED_CLAIM_FIXTURES).unwrap(), forced_fixtures());
    }

    #[test]
    fn xi_row_layout() {
        let row = xi_row(
            &"fock:1".parse().unwrap(),
            C64::new(0.8, 0.0),
            Branch::Odd,
            0.0,
            0.5,
            1000.0,
            &GaussianParams { beta: C64::new(0.1, -0.2), zeta: C64::new(0.0, 0.3) },
        );
        assert_eq!(row, format!("{XI_HEADER}\nfock:1,0.8,0,odd,0,0.5,1000,0.1,-0.2,0.3,1.57079632679\n"));
    }
}
