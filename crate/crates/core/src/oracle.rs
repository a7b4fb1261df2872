//! Brute-force reference computations that share no code path with the
//! optimizer: closed-form Gaussian moments and exhaustive grid searches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catability::GaussianParams;
use crate::fock::{Branch, C64};

/// Untruncated moments of D(β)S(ζ)|0⟩, ζ = r e^{iθ}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianMoments {
    pub n: f64,
    pub a2: C64,
    pub adag2_a2: f64,
    pub parity: f64,
}

/// With b = a − β: ⟨b²⟩ = −e^{iθ} sinh r cosh r, ⟨b†b⟩ = sinh² r, and the
/// fourth moment follows from Isserlis' theorem for the centred state.
pub fn gaussian_moments(g: &GaussianParams) -> GaussianMoments {
    let r = g.r();
    let e = C64::from_polar(1.0, g.theta());
    let (s, c) = (r.sinh(), r.cosh());
    let beta = g.beta;
    let b2 = -e * s * c;
    let nb = s * s;
    let b4 = 2.0 * nb * nb + b2.norm_sqr();
    let bb = beta.norm_sqr();
    let adag2_a2 = bb * bb + 2.0 * (beta.conj() * beta.conj() * b2).re + 4.0 * bb * nb + b4;
    let shifted = beta * c + beta.conj() * e * s;
    GaussianMoments { n: bb + nb, a2: beta * beta + b2, adag2_a2, parity: (-2.0 * shifted.norm_sqr()).exp() }
}

/// (⟨Q⟩, ⟨P⟩) of the fixed-phase witness in a Gaussian state.
pub fn witness_moments(alpha: C64, branch: Branch, g: &GaussianParams) -> (f64, f64) {
    let m = gaussian_moments(g);
    let a2 = alpha * alpha;
    let q = m.adag2_a2 - 2.0 * (a2.conj() * m.a2).re + a2.norm_sqr();
    let p = 1.0 - branch.sign() * m.parity;
    (q, p)
}

/// Box in (Re β, Im β, Re ζ, Im ζ) sampled on a regular lattice. Cartesian
/// squeezing coordinates keep the lattice regular near ζ = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianGrid {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub points: [usize; 4],
}

impl GaussianGrid {
    /// |Re β|, |Im β| ≤ beta_max and |Re ζ|, |Im ζ| ≤ zeta_max.
    pub fn new(beta_max: f64, beta_points: usize, zeta_max: f64, zeta_points: usize) -> Self {
        Self {
            lo: [-beta_max, -beta_max, -zeta_max, -zeta_max],
            hi: [beta_max, beta_max, zeta_max, zeta_max],
            points: [beta_points, beta_points, zeta_points, zeta_points],
        }
    }

    /// Grid used for the committed ξ fixtures.
    pub fn coarse() -> Self {
        Self::new(3.0, 61, 1.5, 31)
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.points[axis];
        if n <= 1 {
            return 0.5 * (self.lo[axis] + self.hi[axis]);
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (n - 1) as f64
    }

    fn point(&self, flat: usize) -> [f64; 4] {
        let mut rest = flat;
        let mut out = [0.0; 4];
        for axis in (0..4).rev() {
            let n = self.points[axis];
            out[axis] = self.coord(axis, rest % n);
            rest /= n;
        }
        out
    }

    fn spacing(&self, axis: usize) -> f64 {
        let n = self.points[axis];
        if n <= 1 {
            0.0
        } else {
            (self.hi[axis] - self.lo[axis]) / (n - 1) as f64
        }
    }

    /// Smaller box of the same shape centred on `x`, spanning `cells` grid
    /// spacings either side.
    pub fn zoom(&self, x: &[f64; 4], cells: f64) -> Self {
        let mut lo = [0.0; 4];
        let mut hi = [0.0; 4];
        for axis in 0..4 {
            let half = cells * self.spacing(axis);
            lo[axis] = x[axis] - half;
            hi[axis] = x[axis] + half;
        }
        Self { lo, hi, points: self.points }
    }
}

fn to_params(x: &[f64; 4]) -> GaussianParams {
    GaussianParams { beta: C64::new(x[0], x[1]), zeta: C64::new(x[2], x[3]) }
}

/// Exhaustive minimum of `f` over the grid; ties go to the lowest flat index.
pub fn grid_min<F: Fn(&GaussianParams) -> f64 + Sync>(grid: &GaussianGrid, f: F) -> (f64, [f64; 4]) {
    let best = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            (f(&to_params(&x)), i)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    (best.0, grid.point(best.1))
}

/// Grid search followed by `levels` zooms around the incumbent.
pub fn grid_min_refined<F: Fn(&GaussianParams) -> f64 + Sync>(
    grid: &GaussianGrid,
    levels: usize,
    f: F,
) -> (f64, GaussianParams) {
    let (mut best, mut x) = grid_min(grid, &f);
    let mut current = grid.clone();
    for _ in 0..levels {
        current = current.zoom(&x, 2.0);
        let (v, y) = grid_min(&current, &f);
        if v < best {
            best = v;
            x = y;
        }
    }
    (best, to_params(&x))
}

/// Result of the double grid: γ from a list, Gaussian from a lattice, no
/// refinement of either.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridXi {
    pub xi: f64,
    pub gamma: f64,
    pub denominator: f64,
    pub gaussian: GaussianParams,
}

/// ξ from a γ list and a Gaussian lattice. `num_q`, `num_p` are the test
/// state's expectations of the two witness parts.
pub fn xi_double_grid(
    num_q: f64,
    num_p: f64,
    alpha: C64,
    branch: Branch,
    gammas: &[f64],
    grid: &GaussianGrid,
) -> Option<GridXi> {
    let k = gammas.len();
    let init = || (vec![f64::INFINITY; k], vec![usize::MAX; k]);
    let (mins, args) = (0..grid.len())
        .into_par_iter()
        .fold(init, |(mut mins, mut args), i| {
            let (q, p) = witness_moments(alpha, branch, &to_params(&grid.point(i)));
            for (j, &g) in gammas.iter().enumerate() {
                let v = q + g * p;
                if v < mins[j] || (v == mins[j] && i < args[j]) {
                    mins[j] = v;
                    args[j] = i;
                }
            }
            (mins, args)
        })
        .reduce(init, |(mut ma, mut aa), (mb, ab)| {
            for j in 0..k {
                if mb[j] < ma[j] || (mb[j] == ma[j] && ab[j] < aa[j]) {
                    ma[j] = mb[j];
                    aa[j] = ab[j];
                }
            }
            (ma, aa)
        });
    let mut best: Option<GridXi> = None;
    for j in 0..k {
        if !(mins[j] >= crate::catability::DENOMINATOR_FLOOR) {
            continue;
        }
        let ratio = (num_q + gammas[j] * num_p).max(0.0) / mins[j];
        if best.as_ref().is_none_or(|b| ratio < b.xi) {
            best = Some(GridXi {
                xi: ratio,
                gamma: gammas[j],
                denominator: mins[j],
                gaussian: to_params(&grid.point(args[j])),
            });
        }
    }
    best
}
