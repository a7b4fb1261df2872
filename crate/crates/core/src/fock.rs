//! Truncated single-mode Fock space.
//!
//! A [`FockSpace`] fixes the cutoff (basis `|0⟩ … |dim−1⟩`) and the numeric
//! tolerances. Operators ([`OpMatrix`]), pure states ([`Ket`]) and mixed
//! states ([`DensityOp`]) carry a copy of the space they were built in so that
//! mismatched dimensions are caught instead of silently broadcast.
//!
//! State constructors refuse to truncate silently: if the untruncated state
//! puts more than `tail_tol` of its norm beyond the cutoff the constructor
//! fails with [`CatError::TruncationInadequate`], naming the smallest cutoff
//! that would have worked. Accepted states are renormalized after truncation.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_HERM_TOL: f64 = 1e-10;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const MIN_DIM: usize = 4;

/// Allowed deviation of a "normalized" ket's norm from one.
pub const NORM_TOL: f64 = 1e-10;
/// Allowed deviation of a density operator's trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density operator.
pub const PSD_TOL: f64 = 1e-9;

/// Hard cap on how far tail searches extend the basis when looking for the
/// minimal adequate cutoff.
const TAIL_SEARCH_CAP: usize = 1 << 15;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockSpace {
    dim: usize,
    herm_tol: f64,
    tail_tol: f64,
}

impl FockSpace {
    pub fn new(dim: usize, herm_tol: f64, tail_tol: f64) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(CatError::InvalidDimension { dim, min: MIN_DIM });
        }
        check_tol("herm_tol", herm_tol)?;
        check_tol("tail_tol", tail_tol)?;
        Ok(Self { dim, herm_tol, tail_tol })
    }

    /// Space of the given cutoff with default tolerances.
    pub fn with_dim(dim: usize) -> Result<Self> {
        Self::new(dim, DEFAULT_HERM_TOL, DEFAULT_TAIL_TOL)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn herm_tol(&self) -> f64 {
        self.herm_tol
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Same tolerances, different cutoff.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        Self::new(dim, self.herm_tol, self.tail_tol)
    }

    pub(crate) fn ensure_same(&self, other: &FockSpace) -> Result<()> {
        if self.dim != other.dim {
            return Err(CatError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    pub fn identity(&self) -> OpMatrix {
        OpMatrix::raw(*self, CMatrix::identity(self.dim, self.dim), true)
    }

    pub fn zero_op(&self) -> OpMatrix {
        OpMatrix::raw(*self, CMatrix::zeros(self.dim, self.dim), true)
    }

    /// Diagonal operator with the given (complex) diagonal as a function of n.
    pub fn diagonal_op(&self, f: impl Fn(usize) -> C64, hermitian_hint: bool) -> OpMatrix {
        let diag = CVector::from_iterator(self.dim, (0..self.dim).map(f));
        OpMatrix::raw(*self, CMatrix::from_diagonal(&diag), hermitian_hint)
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM, herm_tol: DEFAULT_HERM_TOL, tail_tol: DEFAULT_TAIL_TOL }
    }
}

fn check_tol(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CatError::InvalidTolerance { name, value })
    }
}

pub fn make_space(dim: usize, herm_tol: f64, tail_tol: f64) -> Result<FockSpace> {
    FockSpace::new(dim, herm_tol, tail_tol)
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OpMatrix {
    mat: CMatrix,
    hermitian_hint: bool,
    space: FockSpace,
}

impl OpMatrix {
    /// Wraps a matrix. With `hermitian_hint` set the matrix must be Hermitian
    /// within the space's `herm_tol`.
    pub fn new(space: FockSpace, mat: CMatrix, hermitian_hint: bool) -> Result<Self> {
        if mat.nrows() != space.dim || mat.ncols() != space.dim {
            return Err(CatError::DimensionMismatch {
                left: space.dim,
                right: mat.nrows().max(mat.ncols()),
            });
        }
        let op = Self::raw(space, mat, hermitian_hint);
        if hermitian_hint {
            let dev = op.hermitian_deviation();
            if dev > space.herm_tol {
                return Err(CatError::NotHermitian { dev });
            }
        }
        Ok(op)
    }

    pub(crate) fn raw(space: FockSpace, mat: CMatrix, hermitian_hint: bool) -> Self {
        debug_assert_eq!(mat.nrows(), space.dim);
        Self { mat, hermitian_hint, space }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn is_hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn dagger(&self) -> OpMatrix {
        Self::raw(self.space, self.mat.adjoint(), self.hermitian_hint)
    }

    /// max |O − O†| entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (O + O†)/2, flagged Hermitian.
    pub fn symmetrized(&self) -> OpMatrix {
        let m = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        Self::raw(self.space, m, true)
    }

    pub fn scaled(&self, s: C64) -> OpMatrix {
        let keeps = self.hermitian_hint && s.im == 0.0;
        Self::raw(self.space, &self.mat * s, keeps)
    }

    pub fn compose(&self, rhs: &OpMatrix) -> Result<OpMatrix> {
        self.space.ensure_same(&rhs.space)?;
        Ok(Self::raw(self.space, &self.mat * &rhs.mat, false))
    }

    /// [self, rhs]
    pub fn commutator(&self, rhs: &OpMatrix) -> Result<OpMatrix> {
        self.space.ensure_same(&rhs.space)?;
        Ok(Self::raw(self.space, &self.mat * &rhs.mat - &rhs.mat * &self.mat, false))
    }

    pub fn apply(&self, ket: &Ket) -> Result<CVector> {
        self.space.ensure_same(&ket.space)?;
        Ok(&self.mat * &ket.amps)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &OpMatrix) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.max_abs_diff_guarded(other, 0))
    }

    /// Max entrywise deviation restricted to rows and columns with
    /// `n < dim − guard`. Truncation pollutes identities only near the cutoff.
    pub fn max_abs_diff_guarded(&self, other: &OpMatrix, guard: usize) -> f64 {
        let keep = self.dim().saturating_sub(guard).min(other.dim());
        let mut dev = 0.0_f64;
        for i in 0..keep {
            for j in 0..keep {
                dev = dev.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        dev
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    /// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
    /// Columns of the returned matrix are the matching eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    /// Smallest eigenvalue and its eigenvector as a normalized ket.
    pub fn ground_state(&self) -> (f64, Ket) {
        let (values, vectors) = self.eigh();
        let v = vectors.column(0).into_owned();
        (values[0], Ket { amps: v, space: self.space })
    }
}

impl Add for &OpMatrix {
    type Output = OpMatrix;

    /// Panics on mismatched spaces.
    fn add(self, rhs: &OpMatrix) -> OpMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OpMatrix::raw(self.space, &self.mat + &rhs.mat, self.hermitian_hint && rhs.hermitian_hint)
    }
}

impl Sub for &OpMatrix {
    type Output = OpMatrix;

    fn sub(self, rhs: &OpMatrix) -> OpMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OpMatrix::raw(self.space, &self.mat - &rhs.mat, self.hermitian_hint && rhs.hermitian_hint)
    }
}

impl Mul for &OpMatrix {
    type Output = OpMatrix;

    fn mul(self, rhs: &OpMatrix) -> OpMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OpMatrix::raw(self.space, &self.mat * &rhs.mat, false)
    }
}

/// Annihilation, creation and number operators of one space.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: OpMatrix,
    pub adag: OpMatrix,
    pub n: OpMatrix,
}

pub fn ladder_ops(space: &FockSpace) -> Ladder {
    let d = space.dim;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let num = CMatrix::from_diagonal(&CVector::from_iterator(d, (0..d).map(|n| C64::new(n as f64, 0.0))));
    Ladder {
        a: OpMatrix::raw(*space, a, false),
        adag: OpMatrix::raw(*space, adag, false),
        n: OpMatrix::raw(*space, num, true),
    }
}

/// (−1)^n̂
pub fn parity_op(space: &FockSpace) -> OpMatrix {
    space.diagonal_op(|n| if n % 2 == 0 { ONE } else { -ONE }, true)
}

/// Unitary D(β) = exp(β a† − β* a), exponentiated on the truncated matrix.
///
/// Only the block `n < dim − unitarity_guard(|β|, 0)` reproduces the
/// untruncated operator to working precision.
pub fn displacement_op(space: &FockSpace, beta: C64) -> Result<OpMatrix> {
    let probs = poisson_probs(beta.norm_sqr(), poisson_extent(beta.norm_sqr(), space.dim));
    check_tail(space, &probs, 1.0)?;
    let l = ladder_ops(space);
    let generator = l.adag.matrix() * beta - l.a.matrix() * beta.conj();
    Ok(OpMatrix::raw(*space, generator.exp(), false))
}

/// Unitary S(ζ) = exp(½(ζ* a² − ζ a†²)), exponentiated on the truncated matrix.
pub fn squeeze_op(space: &FockSpace, zeta: C64) -> Result<OpMatrix> {
    check_gaussian_tail(space, ZERO, zeta)?;
    Ok(OpMatrix::raw(*space, squeeze_generator(space.dim, zeta).exp(), false))
}

fn squeeze_generator(dim: usize, zeta: C64) -> CMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for n in 2..dim {
        let c = ((n * (n - 1)) as f64).sqrt() * 0.5;
        // ½ζ* a²: |n⟩ → |n−2⟩
        g[(n - 2, n)] += zeta.conj() * c;
        // −½ζ a†²: |n−2⟩ → |n⟩
        g[(n, n - 2)] -= zeta * c;
    }
    g
}

/// Guard band below the cutoff outside of which D(β) and S(ζ) are unitary to
/// working precision: `ceil(4|β|² + 4 sinh² r + 8)`.
pub fn unitarity_guard(beta_abs: f64, r: f64) -> usize {
    (4.0 * beta_abs * beta_abs + 4.0 * r.sinh().powi(2) + 8.0).ceil() as usize
}

/// Matrix elements ⟨m|D(z)|n⟩ of the untruncated displacement operator for
/// `m, n < dim`.
///
/// Uses the associated-Laguerre form, with the recurrence run on
/// `sqrt(n!/(n+k)!) |z|^k e^{−|z|²/2} L_n^{(k)}(|z|²)` so nothing overflows.
pub fn displacement_elements(z: C64, dim: usize) -> CMatrix {
    let x = z.norm_sqr();
    let rho = z.norm();
    let phase = if rho > 0.0 { z / rho } else { ONE };
    let lnfact = ln_factorials(dim);
    let mut out = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        // h_0 = |z|^k e^{-x/2} / sqrt(k!)
        let h0 = if k == 0 {
            (-0.5 * x).exp()
        } else if rho == 0.0 {
            0.0
        } else {
            (k as f64 * rho.ln() - 0.5 * x - 0.5 * lnfact[k]).exp()
        };
        let kf = k as f64;
        let mut prev = 0.0;
        let mut cur = h0;
        let ph_lower = phase.powu(k as u32);
        let ph_upper = (-phase.conj()).powu(k as u32);
        for n in 0..dim - k {
            // cur = h_n^{(k)}; element (n + k, n) and (n, n + k)
            out[(n + k, n)] = ph_lower * cur;
            if k > 0 {
                out[(n, n + k)] = ph_upper * cur;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            prev = cur;
            cur = next;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Parity branch of a cat state: even (|α⟩ + |−α⟩) or odd (|α⟩ − |−α⟩).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Even,
    Odd,
}

impl Branch {
    /// +1 for even, −1 for odd.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Even => 1.0,
            Branch::Odd => -1.0,
        }
    }

    pub fn matches(self, n: usize) -> bool {
        match self {
            Branch::Even => n.is_multiple_of(2),
            Branch::Odd => n % 2 == 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Even => "even",
            Branch::Odd => "odd",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = CatError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" | "+" | "plus" => Ok(Branch::Even),
            "odd" | "-" | "minus" => Ok(Branch::Odd),
            other => Err(CatError::InvalidArgument(format!("unknown branch `{other}` (expected even|odd)"))),
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Ket {
    amps: CVector,
    space: FockSpace,
}

impl Ket {
    pub fn from_amplitudes(space: &FockSpace, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.dim {
            return Err(CatError::DimensionMismatch { left: space.dim, right: amps.len() });
        }
        Ok(Self { amps: CVector::from_vec(amps), space: *space })
    }

    pub(crate) fn from_vector(space: &FockSpace, amps: CVector) -> Self {
        debug_assert_eq!(amps.len(), space.dim);
        Self { amps, space: *space }
    }

    /// Rescales to unit norm; a zero vector is a degenerate state.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CatError::DegenerateState("zero or non-finite norm".into()));
        }
        self.amps.unscale_mut(norm);
        Ok(self)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amp(&self, n: usize) -> C64 {
        self.amps[n]
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn with_global_phase(&self, phase: f64) -> Ket {
        Ket { amps: &self.amps * C64::from_polar(1.0, phase), space: self.space }
    }

    pub fn to_density(&self) -> DensityOp {
        DensityOp { mat: &self.amps * self.amps.adjoint(), space: self.space }
    }

    /// Σ|amps|² over the top `k` basis indices.
    pub fn tail_mass(&self, k: usize) -> Result<f64> {
        if k == 0 || k >= self.dim() {
            return Err(CatError::InvalidArgument(format!(
                "tail width {k} must satisfy 1 <= k < dim = {}",
                self.dim()
            )));
        }
        Ok(self.amps.iter().skip(self.dim() - k).map(|z| z.norm_sqr()).sum())
    }
}

pub fn tail_mass(state: &Ket, k: usize) -> Result<f64> {
    state.tail_mass(k)
}

pub fn fock_state(space: &FockSpace, n: usize) -> Result<Ket> {
    if n >= space.dim {
        return Err(CatError::OutOfRange { n, dim: space.dim });
    }
    let mut amps = CVector::zeros(space.dim);
    amps[n] = ONE;
    Ok(Ket::from_vector(space, amps))
}

/// Coherent-state amplitudes e^{−|α|²/2} αⁿ/√n! for n < len, untruncated
/// values (not renormalized).
pub fn coherent_amplitudes(alpha: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..len {
        out.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

pub fn coherent_state(space: &FockSpace, alpha: C64) -> Result<Ket> {
    let x = alpha.norm_sqr();
    let probs = poisson_probs(x, poisson_extent(x, space.dim));
    check_tail(space, &probs, 1.0)?;
    let amps = coherent_amplitudes(alpha, space.dim);
    Ket::from_amplitudes(space, amps)?.normalized()
}

/// Normalized |α⟩ ± |−α⟩. Amplitudes of the opposite parity are exactly zero.
pub fn cat_state(space: &FockSpace, alpha: C64, branch: Branch) -> Result<Ket> {
    if branch == Branch::Odd && alpha.norm() == 0.0 {
        return Err(CatError::DegenerateState("odd cat state vanishes at alpha = 0".into()));
    }
    let x = alpha.norm_sqr();
    let probs: Vec<f64> = poisson_probs(x, poisson_extent(x, space.dim))
        .into_iter()
        .enumerate()
        .map(|(n, p)| if branch.matches(n) { p } else { 0.0 })
        .collect();
    let total: f64 = probs.iter().sum();
    check_tail(space, &probs, total)?;
    let amps = coherent_amplitudes(alpha, space.dim)
        .into_iter()
        .enumerate()
        .map(|(n, c)| if branch.matches(n) { c * 2.0 } else { ZERO })
        .collect();
    Ket::from_amplitudes(space, amps)?.normalized()
}

/// 1/√(2(1 ± e^{−2|α|²})), the normalization of |α⟩ ± |−α⟩.
pub fn cat_normalization(alpha: C64, branch: Branch) -> f64 {
    let e = (-2.0 * alpha.norm_sqr()).exp();
    1.0 / (2.0 * (1.0 + branch.sign() * e)).sqrt()
}

/// Fock amplitudes of D(β)S(ζ)|0⟩ for n < len, untruncated values.
///
/// The state is annihilated by `a cosh r + a† e^{iθ} sinh r − c` with
/// `c = β cosh r + β* e^{iθ} sinh r`, which gives a three-term recurrence
/// started from the exact vacuum overlap.
pub fn displaced_squeezed_amplitudes(beta: C64, zeta: C64, len: usize) -> Vec<C64> {
    let r = zeta.norm();
    let e = if r > 0.0 { zeta / r } else { ONE };
    let (ch, sh, th) = (r.cosh(), r.sinh(), r.tanh());
    let psi0 = (-0.5 * beta.norm_sqr() - 0.5 * beta.conj() * beta.conj() * e * th).exp() / ch.sqrt();
    let c = beta * ch + beta.conj() * e * sh;
    let es = e * sh;
    let mut out = Vec::with_capacity(len);
    let (mut prev, mut cur) = (ZERO, psi0);
    for n in 0..len {
        out.push(cur);
        let next = (c * cur - es * (n as f64).sqrt() * prev) / (ch * ((n + 1) as f64).sqrt());
        prev = cur;
        cur = next;
    }
    out
}

/// Norm of D(β)S(ζ)|0⟩ lying at or beyond `dim`.
pub fn gaussian_tail(beta: C64, zeta: C64, dim: usize) -> f64 {
    let head: f64 = displaced_squeezed_amplitudes(beta, zeta, dim).iter().map(|z| z.norm_sqr()).sum();
    (1.0 - head).max(0.0)
}

pub(crate) fn check_gaussian_tail(space: &FockSpace, beta: C64, zeta: C64) -> Result<()> {
    let tail = gaussian_tail(beta, zeta, space.dim);
    if tail <= space.tail_tol {
        return Ok(());
    }
    // Extend the recurrence to locate the smallest adequate cutoff.
    let mut len = (2 * space.dim).max(64);
    loop {
        let amps = displaced_squeezed_amplitudes(beta, zeta, len);
        let head: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if 1.0 - head <= space.tail_tol * 1e-3 || len >= TAIL_SEARCH_CAP {
            let probs: Vec<f64> = amps.iter().map(|z| z.norm_sqr()).collect();
            let min_dim = min_adequate_dim(&probs, 1.0, space.tail_tol);
            return Err(CatError::TruncationInadequate { tail, tol: space.tail_tol, min_dim });
        }
        len *= 2;
    }
}

/// Normalized D(β)S(ζ)|0⟩.
pub fn gaussian_state(space: &FockSpace, beta: C64, zeta: C64) -> Result<Ket> {
    check_gaussian_tail(space, beta, zeta)?;
    Ket::from_amplitudes(space, displaced_squeezed_amplitudes(beta, zeta, space.dim))?.normalized()
}

/// S(ζ)|n⟩, normalized after truncation.
///
/// The squeeze is exponentiated in a padded basis so the weight pushed past
/// the cutoff can be measured rather than folded back by the truncated
/// generator.
pub fn squeezed_fock(space: &FockSpace, n: usize, zeta: C64) -> Result<Ket> {
    if 4 * n >= space.dim {
        return Err(CatError::InvalidArgument(format!(
            "squeezed Fock index {n} must be below dim/4 = {}",
            space.dim / 4
        )));
    }
    check_gaussian_tail(space, ZERO, zeta)?;
    let r = zeta.norm();
    let pad = space.dim + 32 + 2 * n + (8.0 * r.sinh().powi(2)).ceil() as usize;
    let s = squeeze_generator(pad, zeta).exp();
    let column = s.column(n);
    let probs: Vec<f64> = column.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    check_tail(space, &probs, total)?;
    let amps = column.rows(0, space.dim).into_owned();
    Ket::from_vector(space, amps).normalized()
}

// ---------------------------------------------------------------------------
// Mixed states
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DensityOp {
    mat: CMatrix,
    space: FockSpace,
}

impl DensityOp {
    /// Validates Hermiticity (`herm_tol`), unit trace and positivity.
    pub fn new(space: &FockSpace, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != space.dim || mat.ncols() != space.dim {
            return Err(CatError::DimensionMismatch { left: space.dim, right: mat.nrows() });
        }
        let rho = Self { mat, space: *space };
        let herm = OpMatrix::raw(*space, rho.mat.clone(), false).hermitian_deviation();
        if herm > space.herm_tol {
            return Err(CatError::InvalidDensity(format!("not Hermitian: deviation {herm:.3e}")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(CatError::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(CatError::InvalidDensity(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(rho)
    }

    /// Diagonal state with the given populations (must sum to one).
    pub fn from_populations(space: &FockSpace, pops: &[f64]) -> Result<Self> {
        if pops.len() != space.dim {
            return Err(CatError::DimensionMismatch { left: space.dim, right: pops.len() });
        }
        let diag = CVector::from_iterator(space.dim, pops.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(space, CMatrix::from_diagonal(&diag))
    }

    /// Geometric (thermal) photon-number distribution with mean `nu`,
    /// renormalized after truncation.
    pub fn thermal(space: &FockSpace, nu: f64) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(CatError::InvalidArgument(format!("thermal occupation {nu} must be >= 0")));
        }
        let q = nu / (1.0 + nu);
        let tail = q.powi(space.dim as i32);
        if tail > space.tail_tol {
            let min_dim = ((space.tail_tol.ln() / q.ln()).ceil() as usize).max(MIN_DIM);
            return Err(CatError::TruncationInadequate { tail, tol: space.tail_tol, min_dim });
        }
        let mut pops: Vec<f64> = (0..space.dim).map(|n| q.powi(n as i32) / (1.0 + nu)).collect();
        let total: f64 = pops.iter().sum();
        pops.iter_mut().for_each(|p| *p /= total);
        Self::from_populations(space, &pops)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mut herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        // strongly graded entries stall the QR sweep; anything this far below
        // the PSD tolerance cannot move an eigenvalue by a visible amount
        let floor = 1e-20 * herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        herm.iter_mut().filter(|z| z.norm() < floor).for_each(|z| *z = ZERO);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Frobenius norm of the off-diagonal part in the Fock basis.
    pub fn coherence_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if i != j {
                    s += self.mat[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl From<&Ket> for DensityOp {
    fn from(k: &Ket) -> Self {
        k.to_density()
    }
}

/// Anything an operator expectation can be taken in.
pub trait QuantumState {
    fn space(&self) -> &FockSpace;

    /// ⟨ψ|M|ψ⟩ or Tr(Mρ) for a raw matrix of matching size.
    fn expect_matrix(&self, m: &CMatrix) -> C64;
}

impl QuantumState for Ket {
    fn space(&self) -> &FockSpace {
        &self.space
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        self.amps.dotc(&(m * &self.amps))
    }
}

impl QuantumState for DensityOp {
    fn space(&self) -> &FockSpace {
        &self.space
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        // Tr[Mρ] = Σ_ij M_ij ρ_ji
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += m[(i, j)] * self.mat[(j, i)];
            }
        }
        acc
    }
}

/// ⟨ψ|O|ψ⟩ or Tr(Oρ). The imaginary part is returned as computed.
pub fn expectation<S: QuantumState + ?Sized>(op: &OpMatrix, state: &S) -> Result<C64> {
    op.space().ensure_same(state.space())?;
    Ok(state.expect_matrix(op.matrix()))
}

// ---------------------------------------------------------------------------
// Truncation bookkeeping
// ---------------------------------------------------------------------------

pub(crate) fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Length of Poisson series needed to see essentially all of the mass for
/// mean `x`, and at least `dim + 1`.
pub(crate) fn poisson_extent(x: f64, dim: usize) -> usize {
    let spread = x + 20.0 * x.sqrt() + 60.0;
    (spread.ceil() as usize).max(dim + 1).min(TAIL_SEARCH_CAP)
}

/// Poisson probabilities e^{−x} xⁿ/n! for n < len, evaluated in log space.
pub(crate) fn poisson_probs(x: f64, len: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut p = vec![0.0; len];
        if len > 0 {
            p[0] = 1.0;
        }
        return p;
    }
    let lnx = x.ln();
    let lnfact = ln_factorials(len);
    (0..len).map(|n| (n as f64 * lnx - x - lnfact[n]).exp()).collect()
}

/// Smallest cutoff N ≥ MIN_DIM whose tail Σ_{n≥N} probs[n] / total is within `tol`.
pub(crate) fn min_adequate_dim(probs: &[f64], total: f64, tol: f64) -> usize {
    let mut suffix = 0.0;
    let mut best = probs.len();
    for n in (0..probs.len()).rev() {
        suffix += probs[n];
        if suffix / total <= tol {
            best = n;
        } else {
            break;
        }
    }
    best.max(MIN_DIM)
}

fn check_tail(space: &FockSpace, probs: &[f64], total: f64) -> Result<()> {
    let tail: f64 = probs.iter().skip(space.dim).sum::<f64>() / total;
    if tail > space.tail_tol {
        return Err(CatError::TruncationInadequate {
            tail,
            tol: space.tail_tol,
            min_dim: min_adequate_dim(probs, total, space.tail_tol),
        });
    }
    Ok(())
}
