//! Closed-form claims about single-mode moments, each paired with an oracle
//! that evaluates the same quantity by a different route (dense matrix
//! expectation in the truncated space, or direct series summation).
//!
//! A claim is consistent when its largest absolute deviation is at most 1e-8
//! or its largest relative deviation at most 1e-6. Discrepancies are reported,
//! not raised.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catability::{phase_cat_operator, CatParams, ParityVariant};
use crate::error::{CatError, Result};
use crate::fock::{
    coherent_amplitudes, coherent_state, expectation, fock_state, ladder_ops, parity_op, Branch, FockSpace, Ket,
    OpMatrix, C64,
};
use crate::su11::{build_su11, phase_rotation, Su11Set};

pub const SCHEMA: &str = "claimcheck/1";
pub const FIXTURE_SCHEMA: &str = "claimcheck-fixtures/1";
pub const ABS_TOL: f64 = 1e-8;
pub const REL_TOL: f64 = 1e-6;
pub const FIXTURE_TOL: f64 = 1e-12;
/// Claims whose failure makes the whole run a verification failure.
pub const MUST_HOLD: [&str; 4] = ["C1", "C2-phase_weighted", "C9", "C10"];

pub type Point = BTreeMap<String, f64>;

fn point(pairs: &[(&str, f64)]) -> Point {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn get(p: &Point, key: &str) -> f64 {
    *p.get(key).unwrap_or_else(|| panic!("claim point is missing '{key}'"))
}

/// Matrices shared by the oracles of one run.
pub struct OracleCtx {
    space: FockSpace,
    adag2_a2: OpMatrix,
    parity: OpMatrix,
    su11: Option<Su11Set>,
}

impl OracleCtx {
    pub fn new(space: &FockSpace) -> Self {
        let l = ladder_ops(space);
        let a2 = &l.a * &l.a;
        let adag2_a2 = &(&l.adag * &l.adag) * &a2;
        Self { space: *space, adag2_a2, parity: parity_op(space), su11: build_su11(space).ok() }
    }

    fn su11(&self) -> Result<&Su11Set> {
        self.su11.as_ref().ok_or(CatError::InvalidDimension { dim: self.space.dim(), min: crate::su11::MIN_SU11_DIM })
    }

    fn coherent(&self, p: &Point) -> Result<Ket> {
        coherent_state(&self.space, C64::new(get(p, "alpha"), 0.0))
    }
}

type Analytic = fn(&Point) -> C64;
type Oracle = fn(&OracleCtx, &Point) -> Result<C64>;

pub struct Claim {
    pub id: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    /// Smallest cutoff at which the claim is evaluated.
    pub min_dim: usize,
    domain: fn(usize) -> Vec<Point>,
    analytic: Analytic,
    oracle: Oracle,
}

impl Claim {
    pub fn domain(&self, dim: usize) -> Vec<Point> {
        (self.domain)(dim)
    }

    pub fn analytic(&self, p: &Point) -> C64 {
        (self.analytic)(p)
    }

    pub fn oracle(&self, ctx: &OracleCtx, p: &Point) -> Result<C64> {
        (self.oracle)(ctx, p)
    }
}

impl std::fmt::Debug for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Claim").field("id", &self.id).field("min_dim", &self.min_dim).finish()
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn phis() -> Vec<f64> {
    (0..8).map(|k| k as f64 * PI / 4.0).collect()
}

fn alphas_phis() -> Vec<Point> {
    let mut out = Vec::new();
    for a in [0.5, 1.0, 1.5] {
        for phi in phis() {
            out.push(point(&[("alpha", a), ("phi", phi)]));
        }
    }
    out
}

fn alphas4(_: usize) -> Vec<Point> {
    [0.5, 1.0, 1.5, 2.0].iter().map(|&a| point(&[("alpha", a)])).collect()
}

/// Σ Pₙ(−1)ⁿe^{iφn} with Poisson weights, summed until the terms vanish.
fn rotated_parity_series(alpha: f64, phi: f64) -> C64 {
    let x = alpha * alpha;
    let terms = (x + 20.0 * x.sqrt() + 60.0).ceil() as usize;
    let mut p = (-x).exp();
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..terms {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc += C64::from_polar(sign * p, phi * n as f64);
        p *= x / (n + 1) as f64;
    }
    acc
}

fn phase_weighted_matrix(space: &FockSpace, phi: f64) -> OpMatrix {
    space.diagonal_op(|n| C64::from_polar(if n % 2 == 0 { 1.0 } else { -1.0 }, phi * n as f64), false)
}

fn even_phase_operator(ctx: &OracleCtx, p: &Point) -> Result<C64> {
    let params = CatParams::new(re(get(p, "alpha")), Branch::Even)
        .with_phi(get(p, "phi"))
        .with_variant(ParityVariant::PhaseWeighted);
    let op = phase_cat_operator(&ctx.space, &params, get(p, "gamma"))?;
    expectation(&op, &ctx.coherent(p)?)
}

pub fn builtin_claims() -> Vec<Claim> {
    vec![
        Claim {
            id: "C1",
            description: "number state pair correlation <a+^2 a^2> = n(n-1)",
            anchor: "pair-correlation moment of a number state",
            min_dim: 0,
            domain: |_| (0..=10).map(|n| point(&[("n", n as f64)])).collect(),
            analytic: |p| {
                let n = get(p, "n");
                re(n * (n - 1.0))
            },
            oracle: |ctx, p| expectation(&ctx.adag2_a2, &fock_state(&ctx.space, get(p, "n") as usize)?),
        },
        Claim {
            id: "C2-phase_weighted",
            description: "rotated parity series sum_n P_n (-1)^n e^{i phi n} vs the phase-weighted operator (-1)^n e^{i phi n}",
            anchor: "rotated-parity expectation as a series over occupation probabilities",
            min_dim: 0,
            domain: |_| alphas_phis(),
            analytic: |p| rotated_parity_series(get(p, "alpha"), get(p, "phi")),
            oracle: |ctx, p| expectation(&phase_weighted_matrix(&ctx.space, get(p, "phi")), &ctx.coherent(p)?),
        },
        Claim {
            id: "C2-conjugated",
            description: "rotated parity series vs the conjugated operator e^{i phi n}(-1)^n e^{-i phi n}",
            anchor: "rotated-parity operator defined by phase conjugation",
            min_dim: 0,
            domain: |_| alphas_phis(),
            analytic: |p| rotated_parity_series(get(p, "alpha"), get(p, "phi")),
            oracle: |ctx, p| {
                let u = phase_rotation(&ctx.space, get(p, "phi"));
                let op = u.compose(&ctx.parity)?.compose(&u.dagger())?;
                expectation(&op, &ctx.coherent(p)?)
            },
        },
        Claim {
            id: "C3",
            description: "coherent rotated parity = exp(-2|a|^2 sin^2(phi/2)) exp(i|a|^2 sin phi)",
            anchor: "closed form of the coherent-state rotated parity",
            min_dim: 0,
            domain: |_| alphas_phis(),
            analytic: |p| {
                let (x, phi) = (get(p, "alpha").powi(2), get(p, "phi"));
                C64::from_polar((-2.0 * x * (phi / 2.0).sin().powi(2)).exp(), x * phi.sin())
            },
            oracle: |_, p| {
                let phi = get(p, "phi");
                Ok(coherent_amplitudes(re(get(p, "alpha")), 64)
                    .iter()
                    .enumerate()
                    .map(|(n, c)| C64::from_polar(c.norm_sqr() * if n % 2 == 0 { 1.0 } else { -1.0 }, phi * n as f64))
                    .sum())
            },
        },
        Claim {
            id: "C4",
            description: "coherent <a+^2 a^2> = 2|a|^4",
            anchor: "coherent-state factorization of the pair correlator",
            min_dim: 0,
            domain: alphas4,
            analytic: |p| re(2.0 * get(p, "alpha").powi(4)),
            oracle: |ctx, p| expectation(&ctx.adag2_a2, &ctx.coherent(p)?),
        },
        Claim {
            id: "C5",
            description: "coherent <K-> = a^2 with K- = a^2/2",
            anchor: "coherent-state lowering-generator expectation",
            min_dim: 0,
            domain: alphas4,
            analytic: |p| re(get(p, "alpha").powi(2)),
            oracle: |ctx, p| expectation(&ctx.su11()?.k_minus, &ctx.coherent(p)?),
        },
        Claim {
            id: "C6",
            description: "coherent <K0> = |a|^2 + 1/4",
            anchor: "coherent-state weight-generator expectation",
            min_dim: 0,
            domain: alphas4,
            analytic: |p| re(get(p, "alpha").powi(2) + 0.25),
            oracle: |ctx, p| expectation(&ctx.su11()?.k_zero, &ctx.coherent(p)?),
        },
        Claim {
            id: "C7",
            description: "coherent <K0^2 - K0> = |a|^4 - |a|^2/4 - 3/16",
            anchor: "normal-ordered quadratic weight-generator moment",
            min_dim: 0,
            domain: alphas4,
            analytic: |p| {
                let x = get(p, "alpha").powi(2);
                re(x * x - 0.25 * x - 3.0 / 16.0)
            },
            oracle: |ctx, p| {
                let k0 = &ctx.su11()?.k_zero;
                expectation(&(&(k0 * k0) - k0), &ctx.coherent(p)?)
            },
        },
        Claim {
            id: "C8",
            description: "coherent <O_phi> = 8|a|^4 (1 - cos 2phi) + g[1 - exp(-2|a|^2 sin^2(phi/2)) cos(|a|^2 sin phi)]",
            anchor: "phase-modulated witness expectation with parity suppression",
            min_dim: 0,
            domain: |_| {
                let mut out = Vec::new();
                for a in [1.0, 1.5] {
                    for phi in phis() {
                        for g in [0.5, 2.0] {
                            out.push(point(&[("alpha", a), ("phi", phi), ("gamma", g)]));
                        }
                    }
                }
                out
            },
            analytic: |p| {
                let (x, phi, g) = (get(p, "alpha").powi(2), get(p, "phi"), get(p, "gamma"));
                let suppression = (-2.0 * x * (phi / 2.0).sin().powi(2)).exp() * (x * phi.sin()).cos();
                re(8.0 * x * x * (1.0 - (2.0 * phi).cos()) + g * (1.0 - suppression))
            },
            oracle: even_phase_operator,
        },
        Claim {
            id: "C9",
            description: "Casimir K0^2 - K0 - K+K- equals 1/16 on every number state",
            anchor: "representation-fixed Casimir value",
            min_dim: 0,
            domain: |dim| (0..dim.saturating_sub(4)).map(|n| point(&[("n", n as f64)])).collect(),
            analytic: |_| re(1.0 / 16.0),
            oracle: |ctx, p| {
                let n = get(p, "n") as usize;
                Ok(ctx.su11()?.casimir.entry(n, n))
            },
        },
        Claim {
            id: "C10",
            description: "coherent parity <(-1)^n> = exp(-2|a|^2)",
            anchor: "coherent-state parity expectation",
            min_dim: 0,
            domain: alphas4,
            analytic: |p| re((-2.0 * get(p, "alpha").powi(2)).exp()),
            oracle: |ctx, p| expectation(&ctx.parity, &ctx.coherent(p)?),
        },
        Claim {
            id: "C11",
            description: "large-amplitude <O_phi> ~ 8|a|^4 (1 - cos 2phi) at |a| = 2.5, g = 1",
            anchor: "semiclassical limit of the phase-modulated witness",
            min_dim: 128,
            domain: |_| phis().into_iter().map(|phi| point(&[("alpha", 2.5), ("phi", phi), ("gamma", 1.0)])).collect(),
            analytic: |p| {
                let (x, phi) = (get(p, "alpha").powi(2), get(p, "phi"));
                re(8.0 * x * x * (1.0 - (2.0 * phi).cos()))
            },
            oracle: even_phase_operator,
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Discrepant,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub id: String,
    pub description: String,
    /// Where the statement comes from, as a short descriptive locator.
    #[serde(rename = "paper_ref")]
    pub anchor: String,
    pub max_abs_dev: Option<f64>,
    pub max_rel_dev: Option<f64>,
    pub verdict: Verdict,
    pub worst_point: Option<Point>,
    pub skipped: bool,
}

impl ClaimVerdict {
    fn skipped(claim: &Claim) -> Self {
        Self {
            id: claim.id.into(),
            description: claim.description.into(),
            anchor: claim.anchor.into(),
            max_abs_dev: None,
            max_rel_dev: None,
            verdict: Verdict::Skipped,
            worst_point: None,
            skipped: true,
        }
    }
}

pub fn evaluate_claim(ctx: &OracleCtx, claim: &Claim) -> Result<ClaimVerdict> {
    let dim = ctx.space.dim();
    if dim < claim.min_dim {
        return Ok(ClaimVerdict::skipped(claim));
    }
    let mut max_abs = 0.0_f64;
    let mut max_rel = 0.0_f64;
    let mut worst: Option<Point> = None;
    for p in claim.domain(dim) {
        let oracle = match claim.oracle(ctx, &p) {
            Ok(v) => v,
            Err(CatError::TruncationInadequate { .. }) => return Ok(ClaimVerdict::skipped(claim)),
            Err(e) => return Err(e),
        };
        let analytic = claim.analytic(&p);
        let abs = (analytic - oracle).norm();
        let rel = abs / oracle.norm().max(1e-300);
        if worst.is_none() || abs > max_abs {
            worst = Some(p.clone());
        }
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
    }
    let consistent = max_abs <= ABS_TOL || max_rel <= REL_TOL;
    Ok(ClaimVerdict {
        id: claim.id.into(),
        description: claim.description.into(),
        anchor: claim.anchor.into(),
        max_abs_dev: Some(max_abs),
        max_rel_dev: Some(max_rel),
        verdict: if consistent { Verdict::Consistent } else { Verdict::Discrepant },
        worst_point: worst,
        skipped: false,
    })
}

/// Verdicts in the order the claims were given.
pub fn run_claims(space: &FockSpace, claims: &[Claim]) -> Result<Vec<ClaimVerdict>> {
    let ctx = OracleCtx::new(space);
    claims.par_iter().map(|c| evaluate_claim(&ctx, c)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub schema: String,
    pub dim: usize,
    pub claims: Vec<ClaimVerdict>,
}

impl ClaimReport {
    pub fn new(dim: usize, claims: Vec<ClaimVerdict>) -> Self {
        Self { schema: SCHEMA.into(), dim, claims }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// Must-hold claims that came out discrepant or could not be evaluated.
    pub fn must_hold_failures(&self) -> Vec<&str> {
        self.claims
            .iter()
            .filter(|c| MUST_HOLD.contains(&c.id.as_str()) && c.verdict != Verdict::Consistent)
            .map(|c| c.id.as_str())
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&ClaimVerdict> {
        self.claims.iter().find(|c| c.id == id)
    }
}

/// Oracle value forced by a trivial input (vacuum, lowest number states).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub claim: String,
    pub point: Point,
    pub expected_re: f64,
    pub expected_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema: String,
    pub fixtures: Vec<OracleFixture>,
}

impl FixtureFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| CatError::InvalidArgument(format!("fixture file: {e}")))?;
        if file.schema != FIXTURE_SCHEMA {
            return Err(CatError::InvalidArgument(format!(
                "fixture schema '{}' (expected '{FIXTURE_SCHEMA}')",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixtures are plain data")
    }
}

pub fn forced_fixtures() -> FixtureFile {
    let fx = |claim: &str, pairs: &[(&str, f64)], expected: f64| OracleFixture {
        claim: claim.into(),
        point: point(pairs),
        expected_re: expected,
        expected_im: 0.0,
    };
    // K0² − K0 on the vacuum: 1/16 − 1/4
    let vacuum_k0_quad = -3.0 / 16.0;
    let fixtures = vec![
        fx("C1", &[("n", 0.0)], 0.0),
        fx("C1", &[("n", 2.0)], 2.0),
        fx("C2-phase_weighted", &[("alpha", 0.0), ("phi", 1.0)], 1.0),
        fx("C2-conjugated", &[("alpha", 0.0), ("phi", 1.0)], 1.0),
        fx("C3", &[("alpha", 0.0), ("phi", 1.0)], 1.0),
        fx("C4", &[("alpha", 0.0)], 0.0),
        fx("C5", &[("alpha", 0.0)], 0.0),
        fx("C6", &[("alpha", 0.0)], 0.25),
        fx("C7", &[("alpha", 0.0)], vacuum_k0_quad),
        fx("C8", &[("alpha", 0.0), ("phi", 0.0), ("gamma", 1.0)], 0.0),
        fx("C9", &[("n", 0.0)], vacuum_k0_quad),
        fx("C10", &[("alpha", 0.0)], 1.0),
        fx("C11", &[("alpha", 0.0), ("phi", 0.0), ("gamma", 1.0)], 0.0),
    ];
    FixtureFile { schema: FIXTURE_SCHEMA.into(), fixtures }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureCheck {
    pub claim: String,
    pub expected: C64,
    pub got: C64,
    pub dev: f64,
    pub ok: bool,
}

/// Evaluates every fixture's oracle; unknown claim ids are errors.
pub fn check_fixtures(space: &FockSpace, file: &FixtureFile) -> Result<Vec<FixtureCheck>> {
    let claims = builtin_claims();
    let ctx = OracleCtx::new(space);
    file.fixtures
        .iter()
        .map(|f| {
            let claim = claims
                .iter()
                .find(|c| c.id == f.claim)
                .ok_or_else(|| CatError::InvalidArgument(format!("fixture names unknown claim '{}'", f.claim)))?;
            let got = claim.oracle(&ctx, &f.point)?;
            let expected = C64::new(f.expected_re, f.expected_im);
            let dev = (got - expected).norm();
            Ok(FixtureCheck { claim: f.claim.clone(), expected, got, dev, ok: dev <= FIXTURE_TOL })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(dim: usize) -> ClaimReport {
        let s = FockSpace::with_dim(dim).unwrap();
        ClaimReport::new(dim, run_claims(&s, &builtin_claims()).unwrap())
    }

    #[test]
    fn ids_in_order() {
        let ids: Vec<_> = builtin_claims().iter().map(|c| c.id).collect();
        assert_eq!(
            ids,
            ["C1", "C2-phase_weighted", "C2-conjugated", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11"]
        );
    }

    #[test]
    fn c1_at_four() {
        let claims = builtin_claims();
        let c1 = &claims[0];
        let ctx = OracleCtx::new(&FockSpace::default());
        let p = point(&[("n", 4.0)]);
        assert_eq!(c1.analytic(&p), re(12.0));
        assert!((c1.oracle(&ctx, &p).unwrap() - re(12.0)).norm() < 1e-12);
    }

    #[test]
    fn c3_at_origin() {
        let claims = builtin_claims();
        let c3 = claims.iter().find(|c| c.id == "C3").unwrap();
        let ctx = OracleCtx::new(&FockSpace::default());
        let p = point(&[("alpha", 1.0), ("phi", 0.0)]);
        assert!((c3.analytic(&p) - re(1.0)).norm() < 1e-15);
        assert!((c3.oracle(&ctx, &p).unwrap() - re((-2.0f64).exp())).norm() < 1e-14);
    }

    #[test]
    fn verdicts_at_64() {
        let r = report(64);
        for id in ["C1", "C2-phase_weighted", "C10"] {
            assert_eq!(r.get(id).unwrap().verdict, Verdict::Consistent, "{id}");
        }
        for id in ["C2-conjugated", "C3", "C4", "C5", "C6", "C7", "C8"] {
            assert_eq!(r.get(id).unwrap().verdict, Verdict::Discrepant, "{id}");
        }
        let c4 = r.get("C4").unwrap();
        // deviation is |α|⁴, largest at α = 2
        assert!((c4.max_abs_dev.unwrap() - 16.0).abs() < 1e-8);
        let c9 = r.get("C9").unwrap();
        assert!((c9.max_abs_dev.unwrap() - 0.25).abs() < 1e-12);
        let c11 = r.get("C11").unwrap();
        assert!(c11.skipped && c11.verdict == Verdict::Skipped);
    }

    #[test]
    fn small_dim_records_skip() {
        let r = report(32);
        assert_eq!(r.claims.len(), 12);
        assert!(r.get("C11").unwrap().skipped);
    }

    #[test]
    fn fixtures_hold_and_tampering_is_caught() {
        let s = FockSpace::default();
        let mut file = forced_fixtures();
        assert!(check_fixtures(&s, &file).unwrap().iter().all(|c| c.ok));
        let round = FixtureFile::parse(&file.to_json()).unwrap();
        assert_eq!(round, file);
        file.fixtures[0].expected_re = 0.5;
        assert!(!check_fixtures(&s, &file).unwrap()[0].ok);
    }
}
