//! Catability witness operators and the normalized witness ξ.
//!
//! The witness operator is `Q + γP` with the pair-displacement term
//! `Q = (a†² − α*²)(a² − α²)` and the parity penalty `P = 1 ∓ Π`. Its value on
//! a state is compared to the smallest value any pure Gaussian state reaches,
//! and the ratio is minimized over γ.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::fock::{
    displaced_squeezed_amplitudes, gaussian_state, ladder_ops, parity_op, Branch, FockSpace, Ket, OpMatrix,
    QuantumState, C64,
};
use crate::optim::{golden_section, NelderMead};

/// Denominators below this are treated as a degenerate normalization.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Ratios closer than this count as tied; the smaller γ wins.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityVariant {
    /// e^{iφn̂}(−1)^{n̂}e^{−iφn̂}, which is plain parity.
    Conjugated,
    /// (−1)^{n̂}e^{iφn̂}, Hermitian-symmetrized with the rest of the operator.
    PhaseWeighted,
}

impl ParityVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ParityVariant::Conjugated => "conjugated",
            ParityVariant::PhaseWeighted => "phase_weighted",
        }
    }
}

impl std::str::FromStr for ParityVariant {
    type Err = CatError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjugated" => Ok(Self::Conjugated),
            "phase_weighted" => Ok(Self::PhaseWeighted),
            other => Err(CatError::InvalidArgument(format!(
                "unknown parity variant '{other}' (expected conjugated or phase_weighted)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    pub alpha: C64,
    pub branch: Branch,
    pub phi: f64,
    pub parity_variant: ParityVariant,
}

impl CatParams {
    pub fn new(alpha: C64, branch: Branch) -> Self {
        Self { alpha, branch, phi: 0.0, parity_variant: ParityVariant::PhaseWeighted }
    }

    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    pub fn with_variant(self, parity_variant: ParityVariant) -> Self {
        Self { parity_variant, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(CatError::InvalidArgument(format!("alpha {} is not finite", self.alpha)));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return Err(CatError::InvalidArgument(format!("phi {} outside [0, 2π)", self.phi)));
        }
        Ok(())
    }
}

/// Pure Gaussian state D(β)S(ζ)|0⟩ with ζ = r e^{iθ}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub beta: C64,
    pub zeta: C64,
}

impl GaussianParams {
    pub fn vacuum() -> Self {
        Self { beta: C64::new(0.0, 0.0), zeta: C64::new(0.0, 0.0) }
    }

    pub fn from_polar(beta: C64, r: f64, theta: f64) -> Self {
        Self { beta, zeta: C64::from_polar(r, theta) }
    }

    pub fn r(&self) -> f64 {
        self.zeta.norm()
    }

    /// Squeezing angle in [0, 2π); zero when unsqueezed.
    pub fn theta(&self) -> f64 {
        if self.zeta.norm() == 0.0 {
            0.0
        } else {
            self.zeta.arg().rem_euclid(TAU)
        }
    }

    fn to_point(self) -> [f64; 4] {
        [self.beta.re, self.beta.im, self.r(), self.theta()]
    }

    fn from_point(x: &[f64]) -> Self {
        Self::from_polar(C64::new(x[0], x[1]), x[2].abs(), x[3].rem_euclid(TAU))
    }
}

/// Optimizer settings for ξ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    /// Golden-section stopping width, relative in γ.
    pub gs_tol: f64,
    pub starts: usize,
    pub r_max: f64,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            gamma_min: 1e-3,
            gamma_max: 1e3,
            gamma_points: 25,
            gs_tol: 1e-4,
            starts: 8,
            r_max: 2.0,
            seed: 42,
            max_iters: 2000,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(CatError::InvalidArgument(what));
        if !(self.gamma_min > 0.0) || !self.gamma_min.is_finite() {
            return bad(format!("gamma_min {} must be positive", self.gamma_min));
        }
        if !(self.gamma_max > self.gamma_min) || !self.gamma_max.is_finite() {
            return bad(format!("gamma_max {} must exceed gamma_min", self.gamma_max));
        }
        if self.gamma_points < 2 {
            return bad(format!("gamma_points {} must be at least 2", self.gamma_points));
        }
        if !(self.gs_tol > 0.0) {
            return bad(format!("gs_tol {} must be positive", self.gs_tol));
        }
        if self.starts == 0 {
            return bad("starts must be at least 1".into());
        }
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return bad(format!("r_max {} must be positive", self.r_max));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }

    /// Logarithmic γ grid from `gamma_min` to `gamma_max` inclusive.
    pub fn gamma_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.gamma_min.ln(), self.gamma_max.ln());
        let m = self.gamma_points - 1;
        (0..=m)
            .map(|i| {
                if i == m {
                    self.gamma_max
                } else {
                    (lo + (hi - lo) * i as f64 / m as f64).exp()
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiResult {
    pub xi: f64,
    pub gamma_star: f64,
    pub gaussian_star: GaussianParams,
    pub numerator: f64,
    pub denominator: f64,
    /// Every (γ, ratio) evaluated, grid first, then refinement.
    pub optimizer_trace: Vec<(f64, f64)>,
    /// γ values dropped because the Gaussian minimum fell below the floor.
    pub excluded_gammas: Vec<f64>,
    pub converged: bool,
    /// ⟨Ô⟩/|α|⁴ at γ*, recorded by [`xi_phi`] when α ≠ 0.
    pub light_normalized: Option<f64>,
}

/// Ô^(±) = (a†² − α*²)(a² − α²) + γ(1 ∓ Π).
pub fn cat_operator(space: &FockSpace, alpha: C64, gamma: f64, branch: Branch) -> Result<OpMatrix> {
    check_gamma(gamma)?;
    let (q, p) = witness_parts(space, &CatParams::new(alpha, branch))?;
    combine(&q, &p, gamma)
}

/// Phase-dependent witness: quadratic term with α²e^{2iφ} and the parity
/// term of the chosen variant.
pub fn phase_cat_operator(space: &FockSpace, params: &CatParams, gamma: f64) -> Result<OpMatrix> {
    check_gamma(gamma)?;
    params.validate()?;
    let (q, p) = witness_parts(space, params)?;
    combine(&q, &p, gamma)
}

/// The γ-independent pieces (Q, P) of the witness, both Hermitian.
pub fn witness_parts(space: &FockSpace, params: &CatParams) -> Result<(OpMatrix, OpMatrix)> {
    let target = params.alpha * params.alpha * C64::from_polar(1.0, 2.0 * params.phi);
    let l = ladder_ops(space);
    let a2 = &l.a * &l.a;
    let shifted = &a2 - &space.identity().scaled(target);
    let q = OpMatrix::new(*space, shifted.dagger().compose(&shifted)?.into_matrix(), true)?;

    let sign = params.branch.sign();
    let parity = match params.parity_variant {
        ParityVariant::Conjugated => parity_op(space),
        ParityVariant::PhaseWeighted => {
            let phi = params.phi;
            let sgn = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            space.diagonal_op(|n| C64::from_polar(sgn(n), phi * n as f64), false).symmetrized()
        }
    };
    let p = &space.identity() - &parity.scaled(C64::new(sign, 0.0));
    let p = OpMatrix::new(*space, p.into_matrix(), true)?;
    Ok((q, p))
}

fn combine(q: &OpMatrix, p: &OpMatrix, gamma: f64) -> Result<OpMatrix> {
    let sum = q + &p.scaled(C64::new(gamma, 0.0));
    OpMatrix::new(*q.space(), sum.into_matrix(), true)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(CatError::InvalidArgument(format!("gamma {gamma} must be finite and >= 0")));
    }
    Ok(())
}

/// D(β)S(ζ)|0⟩, normalized.
pub fn gaussian_pure_state(space: &FockSpace, g: &GaussianParams) -> Result<Ket> {
    gaussian_state(space, g.beta, g.zeta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMinimum {
    pub value: f64,
    pub params: GaussianParams,
    pub converged: bool,
}

/// Nonzero entries of an operator, for cheap quadratic forms.
#[derive(Clone, Debug)]
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn of(op: &OpMatrix) -> Self {
        let m = op.matrix();
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    fn quad(&self, psi: &[C64]) -> f64 {
        self.entries.iter().map(|&(i, j, v)| (psi[i].conj() * v * psi[j]).re).sum()
    }
}

/// Objective ⟨ψ_G|Q + γP|ψ_G⟩ over (Re β, Im β, r, θ). Points beyond `r_max`
/// or whose truncation tail exceeds `tail_tol` are infeasible (+∞).
struct GaussianObjective<'a> {
    q: &'a Sparse,
    p: Option<&'a Sparse>,
    dim: usize,
    tail_tol: f64,
    r_max: f64,
}

impl GaussianObjective<'_> {
    fn parts(&self, x: &[f64]) -> Option<(f64, f64)> {
        let r = x[2].abs();
        if r > self.r_max || !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let g = GaussianParams::from_point(x);
        let mut psi = displaced_squeezed_amplitudes(g.beta, g.zeta, self.dim);
        let head: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(1.0 - head <= self.tail_tol) {
            return None;
        }
        let scale = 1.0 / head.sqrt();
        psi.iter_mut().for_each(|z| *z *= scale);
        let q = self.q.quad(&psi);
        let p = self.p.map_or(0.0, |p| p.quad(&psi));
        Some((q, p))
    }

    fn value(&self, x: &[f64], gamma: f64) -> f64 {
        match self.parts(x) {
            Some((q, p)) => q + gamma * p,
            None => f64::INFINITY,
        }
    }
}

const SIMPLEX_STEPS: [f64; 4] = [0.3, 0.3, 0.2, 0.5];

fn random_starts(cfg: &OptConfig, count: usize) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r_hi = cfg.r_max.min(1.0);
    (0..count)
        .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..r_hi), rng.gen_range(0.0..TAU)])
        .collect()
}

/// Fixed starts first, random draws fill up to `cfg.starts`.
fn start_points(cfg: &OptConfig, fixed: &[[f64; 4]]) -> Vec<[f64; 4]> {
    let mut out: Vec<[f64; 4]> = fixed.iter().copied().take(cfg.starts).collect();
    let missing = cfg.starts - out.len();
    out.extend(random_starts(cfg, missing));
    out
}

fn minimize_objective(obj: &GaussianObjective, gamma: f64, starts: &[[f64; 4]], cfg: &OptConfig) -> GaussianMinimum {
    let nm = NelderMead { max_iters: cfg.max_iters, ..Default::default() };
    let runs: Vec<_> =
        starts.par_iter().map(|x0| nm.minimize(|x| obj.value(x, gamma), x0, &SIMPLEX_STEPS)).collect();
    let (_, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    GaussianMinimum { value: best.f, params: GaussianParams::from_point(&best.x), converged: best.converged }
}

/// Minimum of ⟨ψ_G|O|ψ_G⟩ over pure Gaussian states.
///
/// Mixed Gaussian states are mixtures of pure ones and the objective is linear
/// in the state, so the pure family attains the same infimum.
pub fn min_over_gaussians(space: &FockSpace, op: &OpMatrix, cfg: &OptConfig) -> Result<GaussianMinimum> {
    cfg.validate()?;
    space.ensure_same(op.space())?;
    let dev = op.hermitian_deviation();
    if dev > space.herm_tol() {
        return Err(CatError::NotHermitian { dev });
    }
    let sparse = Sparse::of(op);
    let obj = GaussianObjective { q: &sparse, p: None, dim: space.dim(), tail_tol: space.tail_tol(), r_max: cfg.r_max };
    let starts = start_points(cfg, &[[0.0; 4]]);
    let best = minimize_objective(&obj, 0.0, &starts, cfg);
    if !best.value.is_finite() {
        return Err(CatError::InvalidArgument("no feasible Gaussian start within the truncation".into()));
    }
    Ok(best)
}

/// ξ = min_γ Tr(Ôρ) / min_G Tr(Ôρ_G) for the fixed-phase witness.
pub fn xi<S: QuantumState + ?Sized>(
    space: &FockSpace,
    state: &S,
    alpha: C64,
    branch: Branch,
    cfg: &OptConfig,
) -> Result<XiResult> {
    let params = CatParams::new(alpha, branch).with_variant(ParityVariant::Conjugated);
    witness(space, state, &params, cfg)
}

/// ξ for the phase-dependent witness, with the ⟨Ô⟩/|α|⁴ normalization as an
/// auxiliary output.
pub fn xi_phi<S: QuantumState + ?Sized>(
    space: &FockSpace,
    state: &S,
    params: &CatParams,
    cfg: &OptConfig,
) -> Result<XiResult> {
    params.validate()?;
    let mut out = witness(space, state, params, cfg)?;
    let a4 = params.alpha.norm_sqr().powi(2);
    if a4 > 0.0 {
        out.light_normalized = Some(out.numerator / a4);
    }
    Ok(out)
}

fn witness<S: QuantumState + ?Sized>(
    space: &FockSpace,
    state: &S,
    params: &CatParams,
    cfg: &OptConfig,
) -> Result<XiResult> {
    cfg.validate()?;
    space.ensure_same(state.space())?;
    let (q, p) = witness_parts(space, params)?;
    let num_q = state.expect_matrix(q.matrix()).re;
    let num_p = state.expect_matrix(p.matrix()).re;
    // both parts are PSD; negative values are rounding
    let numerator_at = |gamma: f64| (num_q + gamma * num_p).max(0.0);

    let (sq, sp) = (Sparse::of(&q), Sparse::of(&p));
    let obj =
        GaussianObjective { q: &sq, p: Some(&sp), dim: space.dim(), tail_tol: space.tail_tol(), r_max: cfg.r_max };
    let a = params.alpha * C64::from_polar(1.0, params.phi);
    let fixed = [[0.0; 4], [a.re, a.im, 0.0, 0.0], [-a.re, -a.im, 0.0, 0.0]];

    let mut search = GammaSearch { obj: &obj, cfg, fixed: &fixed, warm: None, evals: Vec::new() };
    for gamma in cfg.gamma_grid() {
        search.eval(gamma, &numerator_at);
    }
    let grid_len = search.evals.len();
    let best_grid = best_eval(&search.evals).ok_or(CatError::DegenerateWitness { threshold: DENOMINATOR_FLOOR })?;

    // refine in ln γ inside the neighbouring grid cells
    let lo = search.evals[best_grid.saturating_sub(1)].gamma.ln();
    let hi = search.evals[(best_grid + 1).min(grid_len - 1)].gamma.ln();
    if hi > lo {
        let tol = cfg.gs_tol.ln_1p();
        golden_section(
            |lg| {
                let e = search.eval(lg.exp(), &numerator_at);
                e.ratio.unwrap_or(f64::INFINITY)
            },
            lo,
            hi,
            tol,
        );
    }
    let best = &search.evals[best_eval(&search.evals).expect("grid had a valid point")];
    let ratio = best.ratio.expect("best point is valid");
    Ok(XiResult {
        xi: ratio,
        gamma_star: best.gamma,
        gaussian_star: best.min.params,
        numerator: best.numerator,
        denominator: best.min.value,
        optimizer_trace: search.evals.iter().map(|e| (e.gamma, e.ratio.unwrap_or(f64::NAN))).collect(),
        excluded_gammas: search.evals.iter().filter(|e| e.ratio.is_none()).map(|e| e.gamma).collect(),
        converged: best.min.converged,
        light_normalized: None,
    })
}

struct GammaEval {
    gamma: f64,
    numerator: f64,
    min: GaussianMinimum,
    ratio: Option<f64>,
}

struct GammaSearch<'a> {
    obj: &'a GaussianObjective<'a>,
    cfg: &'a OptConfig,
    fixed: &'a [[f64; 4]],
    warm: Option<[f64; 4]>,
    evals: Vec<GammaEval>,
}

impl GammaSearch<'_> {
    fn eval(&mut self, gamma: f64, numerator_at: &dyn Fn(f64) -> f64) -> &GammaEval {
        let mut fixed = self.fixed.to_vec();
        if let Some(w) = self.warm {
            fixed.insert(1, w);
        }
        let starts = start_points(self.cfg, &fixed);
        let min = minimize_objective(self.obj, gamma, &starts, self.cfg);
        if min.value.is_finite() {
            self.warm = Some(min.params.to_point());
        }
        let numerator = numerator_at(gamma);
        let ratio = (min.value >= DENOMINATOR_FLOOR).then(|| numerator / min.value);
        self.evals.push(GammaEval { gamma, numerator, min, ratio });
        self.evals.last().expect("just pushed")
    }
}

/// Index of the smallest ratio; near-ties go to the smaller γ.
fn best_eval(evals: &[GammaEval]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in evals.iter().enumerate() {
        let Some(r) = e.ratio else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let rb = evals[b].ratio.expect("only valid indices kept");
                let tied = (r - rb).abs() <= TIE_TOL * rb.abs().max(1.0);
                if (tied && e.gamma < evals[b].gamma) || (!tied && r < rb) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}
