//! Quadratic su(1,1) generators of a single bosonic mode.
//!
//! K₊ = ½a†², K₋ = ½a², K₀ = ½(n̂ + ½) satisfy [K₀, K±] = ±K± and
//! [K₋, K₊] = 2K₀ in the untruncated space. The Casimir
//! C = K₀² − K₀ − K₊K₋ is constant on the whole Fock space: with
//! K₀² − K₀ = ¼n̂(n̂ − 1) − 3/16 and K₊K₋ = ¼n̂(n̂ − 1) it equals
//! k(k − 1) = −3/16 for the Bargmann index k = 1/4 (and equally for k = 3/4
//! on the odd sector).
//!
//! In a truncated basis the anti-normally ordered product K₋K₊ is wrong on the
//! top two rows, so closure is checked on the block `n < dim − guard`.

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::fock::{ladder_ops, CMatrix, FockSpace, OpMatrix, C64};

/// Value of K₀² − K₀ − K₊K₋ on every Fock state.
pub const CASIMIR_VALUE: f64 = -3.0 / 16.0;
/// Bargmann index of the even-sector lowest-weight representation.
pub const BARGMANN_INDEX: f64 = 0.25;
pub const MIN_SU11_DIM: usize = 8;

#[derive(Clone, Debug)]
pub struct Su11Set {
    pub k_plus: OpMatrix,
    pub k_minus: OpMatrix,
    pub k_zero: OpMatrix,
    pub casimir: OpMatrix,
    space: FockSpace,
}

impl Su11Set {
    pub fn space(&self) -> &FockSpace {
        &self.space
    }
}

pub fn build_su11(space: &FockSpace) -> Result<Su11Set> {
    if space.dim() < MIN_SU11_DIM {
        return Err(CatError::InvalidDimension { dim: space.dim(), min: MIN_SU11_DIM });
    }
    let l = ladder_ops(space);
    let half = C64::new(0.5, 0.0);
    // one rounded square root per entry: ½√(n(n−1)) on |n−2⟩ → |n⟩
    let mut kp = CMatrix::zeros(space.dim(), space.dim());
    for n in 2..space.dim() {
        kp[(n, n - 2)] = C64::new(0.5 * ((n * (n - 1)) as f64).sqrt(), 0.0);
    }
    let k_plus = OpMatrix::new(*space, kp, false)?;
    let k_minus = k_plus.dagger();
    let k_zero = (&l.n + &space.identity().scaled(half)).scaled(half);
    // built from the generator matrices, not from the closed-form diagonal
    let k0_sq = &k_zero * &k_zero;
    let kp_km = &k_plus * &k_minus;
    let casimir = OpMatrix::new(*space, (&(&k0_sq - &k_zero) - &kp_km).into_matrix(), true)?;
    Ok(Su11Set { k_plus, k_minus, k_zero, casimir, space: *space })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub guard: usize,
    pub res_k0_kp: f64,
    pub res_k0_km: f64,
    pub res_km_kp: f64,
    pub casimir_dev: f64,
}

impl ClosureReport {
    pub fn max_residual(&self) -> f64 {
        self.res_k0_kp.max(self.res_k0_km).max(self.res_km_kp)
    }
}

/// Residuals of the three commutation relations and the Casimir deviation on
/// the block `n < dim − guard`.
///
/// Any guard is accepted as long as at least four basis states survive; small
/// guards simply report the boundary artifact.
pub fn closure_residuals(set: &Su11Set, guard: usize) -> Result<ClosureReport> {
    let dim = set.space.dim();
    if guard > dim || dim - guard < 4 {
        return Err(CatError::InvalidArgument(format!(
            "guard {guard} leaves fewer than 4 basis states at dim {dim}"
        )));
    }
    let two = C64::new(2.0, 0.0);
    let r1 = set.k_zero.commutator(&set.k_plus)?;
    let r2 = set.k_zero.commutator(&set.k_minus)?;
    let r3 = set.k_minus.commutator(&set.k_plus)?;
    let res_k0_kp = r1.max_abs_diff_guarded(&set.k_plus, guard);
    let res_k0_km = r1_neg(&r2).max_abs_diff_guarded(&set.k_minus, guard);
    let res_km_kp = r3.max_abs_diff_guarded(&set.k_zero.scaled(two), guard);
    let casimir_dev = (0..dim - guard)
        .map(|n| (set.casimir.entry(n, n) - C64::new(CASIMIR_VALUE, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(ClosureReport { guard, res_k0_kp, res_k0_km, res_km_kp, casimir_dev })
}

fn r1_neg(op: &OpMatrix) -> OpMatrix {
    op.scaled(C64::new(-1.0, 0.0))
}

/// U(φ) = e^{iφn̂}
pub fn phase_rotation(space: &FockSpace, phi: f64) -> OpMatrix {
    // powers by squaring stay accurate where sin/cos of a large angle does not
    let step = C64::from_polar(1.0, phi);
    space.diagonal_op(|n| step.powu(n as u32), false)
}

/// U(φ) X U(φ)†. U is diagonal, so entry (m, n) picks up the single phase
/// e^{iφ(m−n)}; forming U·X·U† densely instead compounds the rounding of
/// e^{iφm} and e^{−iφn}, which reaches 1e-12 on the large entries at dim 128.
pub fn phase_conjugate(op: &OpMatrix, phi: f64) -> Result<OpMatrix> {
    let mat = CMatrix::from_fn(op.dim(), op.dim(), |m, n| {
        op.entry(m, n) * C64::from_polar(1.0, phi * (m as f64 - n as f64))
    });
    OpMatrix::new(*op.space(), mat, false)
}

/// max |U(φ) X U(φ)† − e^{i·charge·φ} X| for a generator of definite charge
/// (K₊: +2, K₋: −2, K₀: 0).
pub fn adjoint_action_deviation(op: &OpMatrix, phi: f64, charge: i32) -> Result<f64> {
    phase_conjugate(op, phi)?.max_abs_diff(&op.scaled(C64::from_polar(1.0, charge as f64 * phi)))
}

/// Projectors onto the even and odd photon-number sectors.
pub fn parity_projectors(space: &FockSpace) -> (OpMatrix, OpMatrix) {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let even = space.diagonal_op(|n| if n % 2 == 0 { one } else { zero }, true);
    let odd = space.diagonal_op(|n| if n % 2 == 1 { one } else { zero }, true);
    (even, odd)
}

/// φ = 2πΦ/Φ₀ reduced to [0, 2π).
pub fn flux_to_phase(flux: f64, flux_quantum: f64) -> Result<f64> {
    if !(flux_quantum > 0.0) || !flux_quantum.is_finite() {
        return Err(CatError::InvalidArgument(format!("flux quantum {flux_quantum} must be positive")));
    }
    if !flux.is_finite() {
        return Err(CatError::InvalidArgument(format!("flux {flux} must be finite")));
    }
    let tau = std::f64::consts::TAU;
    let phi = (tau * flux / flux_quantum).rem_euclid(tau);
    // rem_euclid can round up to exactly 2π
    Ok(if phi >= tau { 0.0 } else { phi })
}
