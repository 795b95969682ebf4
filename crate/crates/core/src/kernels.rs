//! Radial kernels supported on the unit ball, normalized so that the
//! per-coordinate second moment over the unit ball equals one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk15, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `gamma(t) = c` on `[0, 1)`.
    Constant,
    /// `gamma(t) = c (1 - t)`.
    Linear,
    /// `gamma(t) = c exp(-t^2)`.
    #[serde(alias = "gaussian")]
    GaussianLike,
    /// `gamma(t) = c t^{-s}`.
    Singular,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            KernelFamily::Constant => "constant",
            KernelFamily::Linear => "linear",
            KernelFamily::GaussianLike => "gaussian",
            KernelFamily::Singular => "singular",
        };
        f.write_str(name)
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(KernelFamily::Constant),
            "linear" => Ok(KernelFamily::Linear),
            "gaussian" | "gaussian_like" | "gaussianlike" => Ok(KernelFamily::GaussianLike),
            "singular" | "peridynamic" => Ok(KernelFamily::Singular),
            other => Err(Error::invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: u32) -> f64 {
    assert!(d >= 1);
    // Gamma(d/2) by the recurrence from Gamma(1) or Gamma(1/2).
    let (mut gamma, mut x) = if d % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = d as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    d: u32,
    s: f64,
    norm_const: f64,
    w_d: f64,
}

/// Radial quadrature order for smooth kernel moments.
const RADIAL_ORDER: usize = 24;

impl Kernel {
    /// Builds a catalogue kernel in dimension `d`. `s` is required for
    /// [`KernelFamily::Singular`] and ignored otherwise.
    pub fn new(family: KernelFamily, d: u32, s: Option<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let w_d = unit_sphere_area(d);
        let df = d as f64;
        let (s, norm_const) = match family {
            KernelFamily::Constant => (0.0, df * (df + 2.0) / w_d),
            KernelFamily::Linear => (0.0, df * (df + 2.0) * (df + 3.0) / w_d),
            KernelFamily::GaussianLike => {
                let c_e = adaptive_gk15(|t| t.powi(d as i32 + 1) * (-t * t).exp(), 0.0, 1.0, 1e-14);
                (0.0, df / (c_e * w_d))
            }
            KernelFamily::Singular => {
                let s = s.ok_or_else(|| Error::invalid("singular kernel needs an exponent s"))?;
                if !s.is_finite() || s >= df + 2.0 {
                    return Err(Error::invalid(format!(
                        "singular kernel needs s < d + 2 = {} (finite second moment), got {s}",
                        df + 2.0
                    )));
                }
                (s, df * (df + 2.0 - s) / w_d)
            }
        };
        Ok(Self {
            family,
            d,
            s,
            norm_const,
            w_d,
        })
    }

    pub fn constant_2d() -> Self {
        Self::new(KernelFamily::Constant, 2, None).expect("valid kernel")
    }

    /// The `s = 1` peridynamic kernel in 2D.
    pub fn peridynamic_2d() -> Self {
        Self::new(KernelFamily::Singular, 2, Some(1.0)).expect("valid kernel")
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    /// Singularity exponent; zero for the non-singular families.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn w_d(&self) -> f64 {
        self.w_d
    }

    pub fn is_singular(&self) -> bool {
        self.family == KernelFamily::Singular
    }

    /// Kernel value without domain checks; `inf` at `t = 0` for singular kernels with `s > 0`.
    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Constant => self.norm_const,
            KernelFamily::Linear => self.norm_const * (1.0 - t),
            KernelFamily::GaussianLike => self.norm_const * (-t * t).exp(),
            KernelFamily::Singular => self.norm_const * t.powf(-self.s),
        }
    }

    /// `gamma(t) * t^s`, smooth on `[0, 1)`.
    #[inline]
    pub(crate) fn regular_part(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Singular => {
                if t >= 1.0 {
                    0.0
                } else {
                    self.norm_const
                }
            }
            _ => self.eval(t),
        }
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("kernel argument must be >= 0, got {t}")));
        }
        if t == 0.0 && self.is_singular() {
            return Err(Error::Domain("singular kernel evaluated at t = 0".into()));
        }
        Ok(self.eval(t))
    }

    /// `delta^{-(d+2)}`.
    #[inline]
    pub fn rescale_factor(&self, delta: f64) -> f64 {
        delta.powi(-(self.d as i32 + 2))
    }

    /// `delta^{-(d+2)} gamma(r / delta)`.
    pub fn gamma_rescaled(&self, delta: f64, r: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        Ok(self.gamma(r / delta)? * self.rescale_factor(delta))
    }

    /// `int_0^cut r^p gamma(r) dr`; requires `p - s > -1`.
    pub(crate) fn radial_moment(&self, p: f64, cut: f64) -> f64 {
        if cut <= 0.0 {
            return 0.0;
        }
        if self.is_singular() {
            // r = cut * tau^{1/a} turns r^{p-s} dr into (cut^a / a) dtau.
            let a = p - self.s + 1.0;
            debug_assert!(a > 0.0, "radial moment diverges");
            let rule = GaussLegendre::new(RADIAL_ORDER);
            let scale = cut.powf(a) / a;
            scale * rule.integrate(0.0, 1.0, |tau| self.regular_part(cut * tau.powf(1.0 / a)))
        } else {
            let rule = GaussLegendre::new(RADIAL_ORDER);
            let upper = cut.min(1.0);
            rule.integrate(0.0, upper, |r| r.powf(p) * self.eval(r))
        }
    }

    /// `int_{|xi| < cut} xi_i^2 gamma(|xi|) dxi = (w_d / d) int_0^cut r^{d+1} gamma(r) dr`.
    pub fn second_moment(&self, radius_cut: f64) -> Result<f64> {
        if !(radius_cut > 0.0 && radius_cut <= 1.0) {
            return Err(Error::invalid(format!(
                "cut radius must lie in (0, 1], got {radius_cut}"
            )));
        }
        Ok(self.w_d / self.d as f64 * self.radial_moment(self.d as f64 + 1.0, radius_cut))
    }
}

/// Free-function form of [`Kernel::new`].
pub fn make_kernel(family: KernelFamily, d: u32, s: Option<f64>) -> Result<Kernel> {
    Kernel::new(family, d, s)
}
