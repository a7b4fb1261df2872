//! Derivative-free minimizers: Nelder–Mead simplex descent and golden-section
//! line search.

/// Result of a simplex run.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Stop when the spread of simplex values falls below
    /// `ftol * |f_best| + fabs`.
    pub ftol: f64,
    pub fabs: f64,
    /// ... and the simplex diameter (max-norm) is below `xtol`.
    pub xtol: f64,
    /// Restarts from the best vertex with a fresh simplex.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iters: 2000, ftol: 1e-12, fabs: 1e-15, xtol: 1e-8, restarts: 2 }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    /// Minimizes `f` from `x0` with initial simplex offsets `steps`.
    /// Non-finite objective values are treated as +∞ (infeasible).
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], steps: &[f64]) -> Minimum {
        assert_eq!(x0.len(), steps.len());
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut best = self.run(&mut eval, x0, steps);
        for _ in 0..self.restarts {
            let again = self.run(&mut eval, &best.x, steps);
            let improved = again.f < best.f - (self.ftol * best.f.abs() + self.fabs);
            let (iters, evals) = (best.iters + again.iters, best.evals + again.evals);
            if again.f <= best.f {
                best = Minimum { iters, evals, ..again };
            } else {
                best.iters = iters;
                best.evals = evals;
            }
            if !improved {
                break;
            }
        }
        best
    }

    fn run<F: FnMut(&[f64]) -> f64>(&self, eval: &mut F, x0: &[f64], steps: &[f64]) -> Minimum {
        let n = x0.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += steps[i];
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
        let mut evals = n + 1;
        let mut iters = 0;
        let mut converged = false;

        while iters < self.max_iters {
            // order ascending; stable sort keeps ties deterministic
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            values = idx.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread <= self.ftol * values[0].abs() + self.fabs && diameter <= self.xtol {
                converged = true;
                break;
            }
            iters += 1;

            let centroid: Vec<f64> =
                (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(REFLECT);
            let fr = eval(&xr);
            evals += 1;
            if fr < values[0] {
                let xe = along(EXPAND);
                let fe = eval(&xe);
                evals += 1;
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            // contraction: outside if the reflection beat the worst vertex
            let (xc, fc) = if fr < values[n] {
                let xc = along(CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            let x_best = simplex[0].clone();
            for i in 1..=n {
                let v: Vec<f64> = x_best.iter().zip(&simplex[i]).map(|(b, x)| b + SHRINK * (x - b)).collect();
                values[i] = eval(&v);
                simplex[i] = v;
            }
            evals += n;
        }

        let (bi, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty simplex");
        Minimum { x: simplex[bi].clone(), f: values[bi], iters, evals, converged }
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping when the
/// bracket is narrower than `tol`. Returns the best point seen and every
/// evaluation in order.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, Vec<(f64, f64)>) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut trace = Vec::new();
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    trace.push((c, fc));
    trace.push((d, fd));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            trace.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            trace.push((d, fd));
        }
    }
    let (x, fx) = trace
        .iter()
        .copied()
        .min_by(|p, q| p.1.total_cmp(&q.1).then(p.0.total_cmp(&q.0)))
        .expect("at least two evaluations");
    (x, fx, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead { max_iters: 20_000, ..Default::default() };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| if x[0] < 0.5 { f64::NAN } else { (x[0] - 2.0).powi(2) + x[1] * x[1] },
            &[1.0, 1.0],
            &[0.3, 0.3],
        );
        assert!((m.x[0] - 2.0).abs() < 1e-6);
        assert!(m.f < 1e-12);
    }

    #[test]
    fn golden_quadratic() {
        let (x, fx, trace) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
        assert!(trace.len() > 10);
    }
}
