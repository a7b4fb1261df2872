//! Equal-time correlation functions on a discretized ring.
//!
//! Storage convention: `g[j,k] = ⟨Ψ†_k Ψ_j⟩` with no factor of i. Ring modes
//! are plane waves `ψ_m(θ_j) = e^{imθ_j}/√M`, and mode expectations follow
//! from quadratic forms in g. Four-point functions are built by bosonic Wick
//! factorization, which is exact for zero-displacement Gaussian states only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::fock::{CMatrix, CVector, DensityOp, FockSpace, C64};

pub const MIN_SITES: usize = 8;
/// Largest ring for which the dense four-index tensor is built.
pub const MAX_WICK_SITES: usize = 32;
pub const GF_HERM_TOL: f64 = 1e-12;
pub const GF_PSD_TOL: f64 = 1e-10;
/// Residual above which ψ_m is not an eigenvector of g.
pub const MARGINAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingLattice {
    sites: usize,
    thetas: Vec<f64>,
}

impl RingLattice {
    pub fn new(sites: usize) -> Result<Self> {
        if sites < MIN_SITES || !sites.is_multiple_of(2) {
            return Err(CatError::InvalidArgument(format!(
                "ring needs an even number of sites >= {MIN_SITES}, got {sites}"
            )));
        }
        let thetas = (0..sites).map(|j| std::f64::consts::TAU * j as f64 / sites as f64).collect();
        Ok(Self { sites, thetas })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn mode(&self, m: i64) -> ModeFunction {
        let norm = 1.0 / (self.sites as f64).sqrt();
        let values = CVector::from_iterator(
            self.sites,
            // reduce m·j mod M first so the angle stays small
            (0..self.sites).map(|j| {
                let k = (m * j as i64).rem_euclid(self.sites as i64) as f64;
                C64::from_polar(norm, std::f64::consts::TAU * k / self.sites as f64)
            }),
        );
        ModeFunction { m, values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeFunction {
    pub m: i64,
    pub values: CVector,
}

impl ModeFunction {
    pub fn overlap(&self, other: &ModeFunction) -> C64 {
        self.values.dotc(&other.values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LesserGF {
    g: CMatrix,
}

impl LesserGF {
    /// Validates Hermiticity and positivity.
    pub fn new(g: CMatrix) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(CatError::DimensionMismatch { left: g.nrows(), right: g.ncols() });
        }
        let dev = (&g - g.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > GF_HERM_TOL {
            return Err(CatError::NotHermitian { dev });
        }
        let herm = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -GF_PSD_TOL {
            return Err(CatError::InvalidDensity(format!("correlation matrix has eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { g })
    }

    pub fn empty(lattice: &RingLattice) -> Self {
        Self { g: CMatrix::zeros(lattice.sites, lattice.sites) }
    }

    /// Σ ν_m ψ_m ψ_m† for the given (mode, occupation) pairs.
    pub fn from_modes(lattice: &RingLattice, occupied: &[(i64, f64)]) -> Result<Self> {
        let mut g = CMatrix::zeros(lattice.sites, lattice.sites);
        for &(m, nu) in occupied {
            if !(nu >= 0.0) || !nu.is_finite() {
                return Err(CatError::InvalidArgument(format!("occupation {nu} of mode {m} must be >= 0")));
            }
            let psi = lattice.mode(m).values;
            g += &psi * psi.adjoint() * C64::new(nu, 0.0);
        }
        Self::new(g)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn sites(&self) -> usize {
        self.g.nrows()
    }
}

fn check_sites(g: &LesserGF, psi: &ModeFunction) -> Result<()> {
    if g.sites() != psi.values.len() {
        return Err(CatError::DimensionMismatch { left: g.sites(), right: psi.values.len() });
    }
    Ok(())
}

/// ⟨c†_m c_m⟩ = ψ† g ψ.
pub fn mode_occupation(g: &LesserGF, psi: &ModeFunction) -> Result<f64> {
    check_sites(g, psi)?;
    Ok(psi.values.dotc(&(&g.g * &psi.values)).re)
}

/// ⟨J₀⟩ = ½⟨n⟩ + ¼.
pub fn j0_from_green(g: &LesserGF, psi: &ModeFunction) -> Result<f64> {
    Ok(0.5 * mode_occupation(g, psi)? + 0.25)
}

/// Dense `G2[j,k,l,p] = g[j,l]g[k,p] + g[j,p]g[k,l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WickTensor {
    m: usize,
    data: Vec<C64>,
}

impl WickTensor {
    pub fn sites(&self) -> usize {
        self.m
    }

    pub fn get(&self, j: usize, k: usize, l: usize, p: usize) -> C64 {
        let m = self.m;
        self.data[((j * m + k) * m + l) * m + p]
    }

    /// ⟨c†²c²⟩ = Σ ψ*_j ψ*_k `G2[j,k,l,p]` ψ_l ψ_p.
    pub fn contract(&self, psi: &ModeFunction) -> Result<C64> {
        let m = self.m;
        if psi.values.len() != m {
            return Err(CatError::DimensionMismatch { left: m, right: psi.values.len() });
        }
        let v = &psi.values;
        let total = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..m {
                    let left = v[j].conj() * v[k].conj();
                    for l in 0..m {
                        let row = ((j * m + k) * m + l) * m;
                        let inner: C64 = (0..m).map(|p| self.data[row + p] * v[p]).sum();
                        acc += left * v[l] * inner;
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total)
    }
}

pub fn wick_two_particle(g: &LesserGF) -> Result<WickTensor> {
    let m = g.sites();
    if m > MAX_WICK_SITES {
        return Err(CatError::InvalidArgument(format!(
            "dense Wick tensor limited to {MAX_WICK_SITES} sites, got {m}"
        )));
    }
    let gm = &g.g;
    let blocks: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut block = Vec::with_capacity(m * m * m);
            for k in 0..m {
                for l in 0..m {
                    for p in 0..m {
                        block.push(gm[(j, l)] * gm[(k, p)] + gm[(j, p)] * gm[(k, l)]);
                    }
                }
            }
            block
        })
        .collect();
    Ok(WickTensor { m, data: blocks.concat() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// Mode occupation from the correlation matrix.
    pub nu: f64,
    pub occupation_dev: f64,
    pub pair_greens: f64,
    pub pair_fock: f64,
    pub pair_dev: f64,
    pub j0_dev: f64,
    pub max_dev: f64,
    /// For integer ν: |Wick pair value − n(n−1)| against the number state
    /// |ν⟩. Nonzero values show where Wick factorization does not apply.
    pub number_state_pair_dev: Option<f64>,
}

/// Compares the correlation-function route with Fock-space expectations in the
/// single-mode state the marginal describes. A Wick-factorized g carries
/// Gaussian statistics, so the reference state is the thermal state with the
/// same occupation.
pub fn verify_projection(space: &FockSpace, g: &LesserGF, psi: &ModeFunction) -> Result<ProjectionReport> {
    check_sites(g, psi)?;
    let nu = mode_occupation(g, psi)?;
    let residual = (&g.g * &psi.values - &psi.values * C64::new(nu, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > MARGINAL_TOL {
        return Err(CatError::UnsupportedState(format!(
            "mode {} is coupled to other modes (residual {residual:.3e}); marginal is not diagonal",
            psi.m
        )));
    }
    let rho = DensityOp::thermal(space, nu)?;
    let pops = rho.populations();
    let n_fock: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let pair_fock: f64 = pops.iter().enumerate().map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p).sum();
    let j0_fock = 0.5 * n_fock + 0.25;

    let pair_greens = wick_two_particle(g)?.contract(psi)?.re;
    let occupation_dev = (nu - n_fock).abs();
    let pair_dev = (pair_greens - pair_fock).abs();
    let j0_dev = (j0_from_green(g, psi)? - j0_fock).abs();
    let rounded = nu.round();
    let number_state_pair_dev = ((nu - rounded).abs() <= 1e-12)
        .then(|| (pair_greens - rounded * (rounded - 1.0).max(0.0)).abs());
    Ok(ProjectionReport {
        nu,
        occupation_dev,
        pair_greens,
        pair_fock,
        pair_dev,
        j0_dev,
        max_dev: occupation_dev.max(pair_dev).max(j0_dev),
        number_state_pair_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> RingLattice {
        RingLattice::new(16).unwrap()
    }

    #[test]
    fn lattice_validation() {
        assert!(RingLattice::new(15).is_err());
        assert!(RingLattice::new(6).is_err());
        let r = ring();
        assert_eq!(r.thetas().len(), 16);
        assert!((r.thetas()[4] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_modes() {
        let r = ring();
        for m in -4..=4 {
            for mp in -4..=4 {
                let o = r.mode(m).overlap(&r.mode(mp));
                let expect = if m == mp { 1.0 } else { 0.0 };
                assert!((o - C64::new(expect, 0.0)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn occupations() {
        let r = ring();
        let empty = LesserGF::empty(&r);
        assert_eq!(mode_occupation(&empty, &r.mode(1)).unwrap(), 0.0);
        assert_eq!(j0_from_green(&empty, &r.mode(1)).unwrap(), 0.25);
        let single = LesserGF::from_modes(&r, &[(3, 1.0)]).unwrap();
        assert!((mode_occupation(&single, &r.mode(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!(mode_occupation(&single, &r.mode(2)).unwrap().abs() < 1e-12);
        assert!((j0_from_green(&single, &r.mode(3)).unwrap() - 0.75).abs() < 1e-12);
        let mix = LesserGF::from_modes(&r, &[(1, 0.3), (2, 0.7)]).unwrap();
        assert!((mode_occupation(&mix, &r.mode(1)).unwrap() - 0.3).abs() < 1e-12);
        assert!((j0_from_green(&mix, &r.mode(1)).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn invalid_green_rejected() {
        let mut g = CMatrix::zeros(8, 8);
        g[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(LesserGF::new(g).is_err());
        let mut g = CMatrix::zeros(8, 8);
        g[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(LesserGF::new(g), Err(CatError::NotHermitian { .. })));
    }

    #[test]
    fn wick_values_and_symmetry() {
        let r = ring();
        let zero = wick_two_particle(&LesserGF::empty(&r)).unwrap();
        assert!(zero.data.iter().all(|z| z.norm() == 0.0));
        let g = LesserGF::from_modes(&r, &[(2, 0.5), (-1, 0.2)]).unwrap();
        let t = wick_two_particle(&g).unwrap();
        for (j, k, l, p) in [(0, 1, 2, 3), (5, 2, 7, 1), (3, 3, 0, 9)] {
            assert_eq!(t.get(j, k, l, p), t.get(k, j, l, p));
            assert_eq!(t.get(j, k, l, p), t.get(j, k, p, l));
        }
        // 2ν² for the occupied mode
        let pair = t.contract(&r.mode(2)).unwrap();
        assert!((pair.re - 0.5).abs() < 1e-12 && pair.im.abs() < 1e-12);
        let too_big = LesserGF::empty(&RingLattice::new(34).unwrap());
        assert!(wick_two_particle(&too_big).is_err());
    }

    #[test]
    fn projection_reports() {
        let s = FockSpace::default();
        let r = ring();
        let empty = verify_projection(&s, &LesserGF::empty(&r), &r.mode(0)).unwrap();
        assert_eq!(empty.max_dev, 0.0);
        let single = verify_projection(&s, &LesserGF::from_modes(&r, &[(0, 1.0)]).unwrap(), &r.mode(0)).unwrap();
        assert!(single.occupation_dev <= 1e-12);
        assert!(single.max_dev <= 1e-10, "{single:?}");
        assert!((single.number_state_pair_dev.unwrap() - 2.0).abs() < 1e-12);
        let thermal = verify_projection(&s, &LesserGF::from_modes(&r, &[(0, 0.5)]).unwrap(), &r.mode(0)).unwrap();
        assert!(thermal.pair_dev <= 1e-10, "{thermal:?}");
        assert!(thermal.number_state_pair_dev.is_none());
    }

    #[test]
    fn coupled_marginal_unsupported() {
        let s = FockSpace::default();
        let r = ring();
        let a = r.mode(1).values;
        let b = r.mode(2).values;
        let v = (&a + &b) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let g = LesserGF::new(&v * v.adjoint()).unwrap();
        assert!(matches!(verify_projection(&s, &g, &r.mode(1)), Err(CatError::UnsupportedState(_))));
    }
}
