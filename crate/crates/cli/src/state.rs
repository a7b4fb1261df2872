//! Test-state grammar for `catkit xi`.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use catkit::decoherence::{apply_channel, loss_channel};
use catkit::fock::{cat_state, coherent_state, fock_state, squeezed_fock, Branch, DensityOp, FockSpace, C64};

pub const GRAMMAR: &str =
    "expected one of cat:ALPHA:even|odd, coherent:ALPHA, fock:N, squeezed_fock:N:R:THETA, lossy_cat:ALPHA:even|odd:TAU";

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Cat { alpha: C64, branch: Branch },
    Coherent { alpha: C64 },
    Fock { n: usize },
    SqueezedFock { n: usize, r: f64, theta: f64 },
    LossyCat { alpha: C64, branch: Branch, tau: f64 },
}

fn field<T: FromStr>(raw: &str, what: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| anyhow!("cannot parse {what} `{raw}`; {GRAMMAR}"))
}

fn branch(raw: &str) -> Result<Branch> {
    raw.parse().map_err(|_| anyhow!("unknown branch `{raw}`; {GRAMMAR}"))
}

impl FromStr for StateSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["cat", a, b] => StateSpec::Cat { alpha: field(a, "amplitude")?, branch: branch(b)? },
            ["coherent", a] => StateSpec::Coherent { alpha: field(a, "amplitude")? },
            ["fock", n] => StateSpec::Fock { n: field(n, "photon number")? },
            ["squeezed_fock", n, r, th] => StateSpec::SqueezedFock {
                n: field(n, "photon number")?,
                r: field(r, "squeezing")?,
                theta: field(th, "squeezing angle")?,
            },
            ["lossy_cat", a, b, t] => {
                let tau: f64 = field(t, "transmissivity")?;
                if !(0.0..=1.0).contains(&tau) {
                    bail!("transmissivity {tau} outside [0, 1]; {GRAMMAR}");
                }
                StateSpec::LossyCat { alpha: field(a, "amplitude")?, branch: branch(b)?, tau }
            }
            _ => bail!("unrecognized state `{s}`; {GRAMMAR}"),
        };
        if let StateSpec::SqueezedFock { r, .. } = spec {
            if r.is_nan() || r < 0.0 {
                bail!("squeezing {r} must be non-negative; {GRAMMAR}");
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |z: &C64| if z.im == 0.0 { format!("{}", z.re) } else { format!("{z}") };
        match self {
            StateSpec::Cat { alpha, branch } => write!(f, "cat:{}:{branch}", c(alpha)),
            StateSpec::Coherent { alpha } => write!(f, "coherent:{}", c(alpha)),
            StateSpec::Fock { n } => write!(f, "fock:{n}"),
            StateSpec::SqueezedFock { n, r, theta } => write!(f, "squeezed_fock:{n}:{r}:{theta}"),
            StateSpec::LossyCat { alpha, branch, tau } => write!(f, "lossy_cat:{}:{branch}:{tau}", c(alpha)),
        }
    }
}

impl StateSpec {
    pub fn build(&self, space: &FockSpace) -> Result<DensityOp> {
        Ok(match *self {
            StateSpec::Cat { alpha, branch } => cat_state(space, alpha, branch)?.to_density(),
            StateSpec::Coherent { alpha } => coherent_state(space, alpha)?.to_density(),
            StateSpec::Fock { n } => fock_state(space, n)?.to_density(),
            StateSpec::SqueezedFock { n, r, theta } => {
                squeezed_fock(space, n, C64::from_polar(r, theta))?.to_density()
            }
            StateSpec::LossyCat { alpha, branch, tau } => {
                apply_channel(&cat_state(space, alpha, branch)?.to_density(), &loss_channel(space, tau)?)?
            }
        })
    }

    /// Branch implied by the state itself, if any.
    pub fn branch(&self) -> Option<Branch> {
        match *self {
            StateSpec::Cat { branch, .. } | StateSpec::LossyCat { branch, .. } => Some(branch),
            _ => None,
        }
    }
}
