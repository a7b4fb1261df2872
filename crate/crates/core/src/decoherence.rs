//! Pure-loss channel, pure-target fidelity and Wigner diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catability::{xi, OptConfig};
use crate::error::{CatError, Result};
use crate::fock::{
    cat_state, displacement_elements, ln_factorials, poisson_extent, poisson_probs, Branch, CMatrix, DensityOp,
    FockSpace, Ket, OpMatrix, QuantumState, C64,
};
use crate::format::g12;

/// Kraus family of a transmissivity-τ loss channel.
///
/// `K_k = Σ_n √C(n,k) τ^{(n−k)/2} (1−τ)^{k/2} |n−k⟩⟨n|` for k = 0…dim−1. Each
/// K_k only lowers by k, so the family is trace preserving on the whole
/// truncated space.
#[derive(Clone, Debug)]
pub struct LossChannel {
    tau: f64,
    /// `coeff[k][n]` is the amplitude for losing k photons from |n⟩.
    coeff: Vec<Vec<f64>>,
    space: FockSpace,
}

impl LossChannel {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn kraus_count(&self) -> usize {
        self.coeff.len()
    }

    pub fn kraus(&self) -> Vec<OpMatrix> {
        (0..self.coeff.len()).map(|k| self.kraus_op(k)).collect()
    }

    pub fn kraus_op(&self, k: usize) -> OpMatrix {
        let d = self.space.dim();
        let mut m = CMatrix::zeros(d, d);
        for n in k..d {
            m[(n - k, n)] = C64::new(self.coeff[k][n], 0.0);
        }
        OpMatrix::new(self.space, m, false).expect("square matrix of the channel's dimension")
    }

    /// max |Σ K†K − I| over the block n < dim − guard.
    pub fn completeness_deviation(&self, guard: usize) -> f64 {
        let d = self.space.dim();
        let mut sum = CMatrix::zeros(d, d);
        for k in 0..self.coeff.len() {
            let op = self.kraus_op(k);
            sum += op.matrix().adjoint() * op.matrix();
        }
        let id = self.space.identity();
        OpMatrix::new(self.space, sum, false).expect("square").max_abs_diff_guarded(&id, guard)
    }
}

pub fn loss_channel(space: &FockSpace, tau: f64) -> Result<LossChannel> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(CatError::InvalidArgument(format!("transmissivity {tau} outside [0, 1]")));
    }
    let d = space.dim();
    let lf = ln_factorials(d);
    // x^p with 0^0 = 1
    let pow = |x: f64, p: f64| if p == 0.0 { 1.0 } else { x.powf(p) };
    let coeff = (0..d)
        .map(|k| {
            (0..d)
                .map(|n| {
                    if n < k {
                        return 0.0;
                    }
                    let binom = (lf[n] - lf[k] - lf[n - k]).exp();
                    binom.sqrt() * pow(tau, 0.5 * (n - k) as f64) * pow(1.0 - tau, 0.5 * k as f64)
                })
                .collect()
        })
        .collect();
    Ok(LossChannel { tau, coeff, space: *space })
}

/// ρ′ = Σ_k K_k ρ K_k†.
pub fn apply_channel(rho: &DensityOp, ch: &LossChannel) -> Result<DensityOp> {
    ch.space.ensure_same(rho.space())?;
    let d = rho.dim();
    let src = rho.matrix();
    let mut out = CMatrix::zeros(d, d);
    for (k, c) in ch.coeff.iter().enumerate() {
        for i in 0..d - k {
            let ci = c[i + k];
            if ci == 0.0 {
                continue;
            }
            for j in 0..d - k {
                out[(i, j)] += src[(i + k, j + k)] * (ci * c[j + k]);
            }
        }
    }
    DensityOp::new(rho.space(), out)
}

/// ⟨ψ|ρ|ψ⟩ for a pure target.
pub fn fidelity(rho: &DensityOp, target: &Ket) -> Result<f64> {
    rho.space().ensure_same(target.space())?;
    let psi = target.amplitudes();
    Ok(psi.dotc(&(rho.matrix() * psi)).re)
}

/// W(β) = (2/π) Tr[ρ D(β) Π D(β)†] = (2/π) Σ ρ_nm (−1)ⁿ ⟨m|D(2β)|n⟩.
pub fn wigner_point<S: QuantumState + ?Sized>(state: &S, beta: C64) -> f64 {
    let d = state.space().dim();
    let mut m = displacement_elements(beta * 2.0, d);
    for n in (1..d).step_by(2) {
        m.column_mut(n).neg_mut();
    }
    // Tr[ρ D Π] with D Π stored in `m`
    2.0 / std::f64::consts::PI * state.expect_matrix(&m).re
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub beta_max: f64,
    pub h: f64,
}

impl Default for WignerGrid {
    fn default() -> Self {
        Self { beta_max: 4.0, h: 0.1 }
    }
}

impl WignerGrid {
    /// Coordinates along one axis, −β_max…β_max.
    pub fn axis(&self) -> Vec<f64> {
        let steps = (2.0 * self.beta_max / self.h).round() as usize;
        (0..=steps).map(|i| -self.beta_max + i as f64 * self.h).collect()
    }

    fn validate(&self, space: &FockSpace) -> Result<()> {
        if !(self.beta_max > 0.0) || !(self.h > 0.0) || !self.beta_max.is_finite() {
            return Err(CatError::InvalidArgument(format!(
                "Wigner grid needs beta_max > 0 and h > 0, got {} and {}",
                self.beta_max, self.h
            )));
        }
        // a coherent displacement of the grid radius must fit in the space
        let x = self.beta_max * self.beta_max;
        let probs = poisson_probs(x, poisson_extent(x, space.dim()));
        let tail: f64 = probs[space.dim()..].iter().sum();
        if tail > space.tail_tol() {
            let min_dim = crate::fock::min_adequate_dim(&probs, 1.0, space.tail_tol());
            return Err(CatError::TruncationInadequate { tail, tol: space.tail_tol(), min_dim });
        }
        Ok(())
    }
}

/// W on the grid, rows indexed by Im β and columns by Re β.
pub fn wigner_grid<S: QuantumState + Sync + ?Sized>(state: &S, grid: &WignerGrid) -> Result<Vec<Vec<f64>>> {
    grid.validate(state.space())?;
    let axis = grid.axis();
    Ok(axis.par_iter().map(|&y| axis.iter().map(|&x| wigner_point(state, C64::new(x, y))).collect()).collect())
}

pub fn wigner_min<S: QuantumState + Sync + ?Sized>(state: &S, grid: &WignerGrid) -> Result<f64> {
    Ok(wigner_grid(state, grid)?.iter().flatten().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub tau: f64,
    pub xi_even: f64,
    pub xi_odd: f64,
    pub infidelity: f64,
    pub wigner_min: f64,
}

pub const ROBUSTNESS_HEADER: &str = "tau,xi_even,xi_odd,infidelity,wigner_min";

impl RobustnessRow {
    pub fn csv_line(&self) -> String {
        [self.tau, self.xi_even, self.xi_odd, self.infidelity, self.wigner_min].map(g12).join(",")
    }
}

pub fn robustness_csv(rows: &[RobustnessRow]) -> String {
    let mut out = String::from(ROBUSTNESS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Even and odd cats sent through loss at each τ. Infidelity and the Wigner
/// minimum refer to the even cat. Rows come out in descending τ.
pub fn robustness_sweep(
    space: &FockSpace,
    alpha: C64,
    taus: &[f64],
    cfg: &OptConfig,
    grid: &WignerGrid,
) -> Result<Vec<RobustnessRow>> {
    let mut taus = taus.to_vec();
    if let Some(bad) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CatError::InvalidArgument(format!("transmissivity {bad} outside [0, 1]")));
    }
    taus.sort_by(|a, b| b.total_cmp(a));
    let even = cat_state(space, alpha, Branch::Even)?;
    let odd = cat_state(space, alpha, Branch::Odd)?;
    let (rho_even, rho_odd) = (even.to_density(), odd.to_density());
    let mut rows = Vec::with_capacity(taus.len());
    for tau in taus {
        let ch = loss_channel(space, tau)?;
        let lossy_even = apply_channel(&rho_even, &ch)?;
        let lossy_odd = apply_channel(&rho_odd, &ch)?;
        let xi_even = xi(space, &lossy_even, alpha, Branch::Even, cfg)?.xi;
        let xi_odd = xi(space, &lossy_odd, alpha, Branch::Odd, cfg)?.xi;
        let infidelity = (1.0 - fidelity(&lossy_even, &even)?).clamp(0.0, 1.0);
        let wigner_min = wigner_min(&lossy_even, grid)?;
        rows.push(RobustnessRow { tau, xi_even, xi_odd, infidelity, wigner_min });
    }
    Ok(rows)
}

/// Whether the odd cat kept a witness value no larger than the even one at
/// every τ.
pub fn odd_more_robust(rows: &[RobustnessRow]) -> bool {
    rows.iter().all(|r| r.xi_odd <= r.xi_even)
}

/// Most negative Wigner value still counted as positive.
pub const WIGNER_POSITIVE_TOL: f64 = 1e-3;

/// First row (in descending τ) where the Wigner function is positive on the
/// grid while the witness is still below one.
pub fn wigner_crossover(rows: &[RobustnessRow]) -> Option<&RobustnessRow> {
    rows.iter().find(|r| r.wigner_min >= -WIGNER_POSITIVE_TOL && r.xi_even < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state};
    use std::f64::consts::PI;

    fn space() -> FockSpace {
        FockSpace::default()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kraus_count_and_completeness() {
        let s = space();
        for tau in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let ch = loss_channel(&s, tau).unwrap();
            assert_eq!(ch.kraus_count(), 64);
            assert!(ch.completeness_deviation(8) <= 1e-12, "tau {tau}");
        }
        assert!(loss_channel(&s, 1.1).is_err());
        assert!(loss_channel(&s, -0.1).is_err());
    }

    #[test]
    fn endpoints() {
        let s = space();
        let three = fock_state(&s, 3).unwrap().to_density();
        let out = apply_channel(&three, &loss_channel(&s, 1.0).unwrap()).unwrap();
        assert!((out.matrix() - three.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-13);
        let coh = coherent_state(&s, c(1.5)).unwrap().to_density();
        let out = apply_channel(&coh, &loss_channel(&s, 0.0).unwrap()).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() <= 1e-12);
        assert!((out.trace().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn coherent_amplitude_shrinks() {
        let s = space();
        let coh = coherent_state(&s, C64::new(1.1, -0.4)).unwrap().to_density();
        let out = apply_channel(&coh, &loss_channel(&s, 0.7).unwrap()).unwrap();
        let expect = coherent_state(&s, C64::new(1.1, -0.4) * 0.7f64.sqrt()).unwrap();
        assert!(fidelity(&out, &expect).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn coherence_decays() {
        let s = space();
        let cat = cat_state(&s, c(1.2), Branch::Even).unwrap().to_density();
        let out = apply_channel(&cat, &loss_channel(&s, 0.9).unwrap()).unwrap();
        assert!((out.trace().re - 1.0).abs() <= 1e-12);
        assert!(out.coherence_norm() < cat.coherence_norm());
    }

    #[test]
    fn fidelity_cases() {
        let s = space();
        let one = fock_state(&s, 1).unwrap();
        assert!((fidelity(&one.to_density(), &one).unwrap() - 1.0).abs() < 1e-15);
        let vac = fock_state(&s, 0).unwrap().to_density();
        assert_eq!(fidelity(&vac, &one).unwrap(), 0.0);
    }

    #[test]
    fn wigner_at_origin() {
        let s = FockSpace::with_dim(32).unwrap();
        let vac = fock_state(&s, 0).unwrap();
        assert!((wigner_point(&vac, c(0.0)) - 2.0 / PI).abs() < 1e-15);
        let one = fock_state(&s, 1).unwrap();
        assert!((wigner_point(&one, c(0.0)) + 2.0 / PI).abs() < 1e-15);
        // vacuum is a Gaussian of width 1/2 in each quadrature
        let b = C64::new(0.3, -0.5);
        assert!((wigner_point(&vac, b) - 2.0 / PI * (-2.0 * b.norm_sqr()).exp()).abs() < 1e-14);
    }

    #[test]
    fn wigner_normalization_on_grid() {
        let s = space();
        let vac = fock_state(&s, 0).unwrap();
        let grid = WignerGrid::default();
        let w = wigner_grid(&vac, &grid).unwrap();
        let total: f64 = w.iter().flatten().sum::<f64>() * grid.h * grid.h;
        assert!((total - 1.0).abs() < 1e-2, "{total}");
    }

    #[test]
    fn cat_wigner_negative() {
        let s = space();
        let cat = cat_state(&s, c(1.5), Branch::Even).unwrap();
        let grid = WignerGrid { beta_max: 2.0, h: 0.1 };
        assert!(wigner_min(&cat, &grid).unwrap() < 0.0);
    }

    #[test]
    fn csv_header_and_format() {
        let row = RobustnessRow { tau: 0.95, xi_even: 0.1, xi_odd: 0.05, infidelity: 1e-7, wigner_min: -0.25 };
        let csv = robustness_csv(&[row]);
        assert_eq!(csv, "tau,xi_even,xi_odd,infidelity,wigner_min\n0.95,0.1,0.05,1e-07,-0.25\n");
    }
}
