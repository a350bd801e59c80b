//! Self-gravity interaction kernels.
//!
//! `I(d) = ∫d³u d³v ρ(u) ρ(v − d) / |u − v|` is the mutual Newtonian energy
//! integral (divided by −G) of a mass density with a copy of itself displaced
//! by `d`. Every variant here is spherically symmetric, so `I` depends only on
//! `|d|`. Values are in kg² m⁻¹.

mod numeric;

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{MaterialRecord, G};

pub use numeric::{radial_table_mass, NumericKernel};

/// Below this fraction of σ the crystalline kernel uses its analytic d → 0 limit.
const CRYSTAL_SMALL_D: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereKernelParams {
    pub mass: f64,
    pub radius: f64,
}

impl SphereKernelParams {
    pub fn new(mass: f64, radius: f64) -> Result<Self> {
        positive("mass", mass)?;
        positive("radius", radius)?;
        Ok(Self { mass, radius })
    }
}

/// A spherical particle of radius `radius` built from atoms of mass `m_atom`,
/// each localised with a Gaussian of width `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrystalKernelParams {
    pub mass: f64,
    pub radius: f64,
    pub m_atom: f64,
    pub sigma: f64,
}

impl CrystalKernelParams {
    pub fn new(mass: f64, radius: f64, m_atom: f64, sigma: f64) -> Result<Self> {
        positive("mass", mass)?;
        positive("radius", radius)?;
        positive("atomic mass", m_atom)?;
        positive("sigma", sigma)?;
        if mass < m_atom {
            return Err(Error::invalid(format!(
                "total mass {mass:e} kg is below the atomic mass {m_atom:e} kg"
            )));
        }
        let p = Self {
            mass,
            radius,
            m_atom,
            sigma,
        };
        if let Some(w) = p.parameter_warning() {
            log::warn!("{w}");
        }
        Ok(p)
    }

    /// Particle of total mass `mass` made of `material`, radius from the bulk density.
    pub fn from_material(mass: f64, material: &MaterialRecord) -> Result<Self> {
        Self::new(
            mass,
            material.sphere_radius(mass),
            material.m_atom_kg(),
            material.sigma_m(),
        )
    }

    pub fn parameter_warning(&self) -> Option<String> {
        (self.sigma >= self.radius).then(|| {
            format!(
                "localisation width σ = {:e} m is not small against the particle radius {:e} m",
                self.sigma, self.radius
            )
        })
    }

    /// Warning for evaluating the crystalline form at a separation beyond the
    /// particle radius, where it no longer describes the mutual attraction.
    pub fn validity_warning(&self, d: f64) -> Option<String> {
        (d.abs() > self.radius).then(|| {
            format!(
                "separation {:e} m exceeds the particle radius {:e} m; the crystalline kernel requires a wave-function extent small compared to R",
                d.abs(),
                self.radius
            )
        })
    }

    fn lattice_term(&self) -> f64 {
        6.0 * self.mass * self.mass / (5.0 * self.radius)
    }

    /// 2 M m_atom / (√(2π) σ): the atomic self-term at d = 0.
    fn atomic_term_at_zero(&self) -> f64 {
        2.0 * self.mass * self.m_atom / ((2.0 * PI).sqrt() * self.sigma)
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive, got {v}")))
    }
}

/// Homogeneous sphere: polynomial overlap inside d ≤ 2R, point-mass tail beyond.
pub fn i_sphere(d: f64, p: &SphereKernelParams) -> f64 {
    let d = d.abs();
    let scale = p.mass * p.mass / p.radius;
    if d >= 2.0 * p.radius {
        return p.mass * p.mass / d;
    }
    let s = d / (2.0 * p.radius);
    let s2 = s * s;
    let s3 = s2 * s;
    scale * (6.0 / 5.0 - 2.0 * s2 + 1.5 * s3 - 0.2 * s3 * s2)
}

/// Crystalline sphere: lattice term plus the accumulated atomic self-terms.
pub fn i_crystal(d: f64, p: &CrystalKernelParams) -> f64 {
    let d = d.abs();
    if d < CRYSTAL_SMALL_D * p.sigma {
        return p.lattice_term() + p.atomic_term_at_zero();
    }
    p.lattice_term() + p.mass * p.m_atom / d * libm::erf(d / (SQRT_2 * p.sigma))
}

/// Quadratic expansion of [`i_crystal`] around d = 0.
pub fn i_narrow(d: f64, p: &CrystalKernelParams) -> f64 {
    let x = d / p.sigma;
    p.lattice_term() + p.atomic_term_at_zero() * (1.0 - x * x / 6.0)
}

/// ω_SN = √(√(2/π) G m_atom / (3σ³)), the narrow-regime self-gravity frequency.
pub fn omega_sn(m_atom: f64, sigma: f64) -> f64 {
    ((2.0 / PI).sqrt() * G * m_atom / (3.0 * sigma.powi(3))).sqrt()
}

/// 2/√π − erf(x)/x without cancellation near x = 0.
pub(crate) fn erf_over_x_deficit(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.5 {
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            term *= -x2 / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        -FRAC_2_SQRT_PI * sum
    } else {
        FRAC_2_SQRT_PI - libm::erf(x) / x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Delta,
    Sphere,
    Crystal,
    Narrow,
    Numeric,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Delta => "delta",
            KernelKind::Sphere => "sphere",
            KernelKind::Crystal => "crystal",
            KernelKind::Narrow => "narrow",
            KernelKind::Numeric => "numeric",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "delta" => KernelKind::Delta,
            "sphere" => KernelKind::Sphere,
            "crystal" => KernelKind::Crystal,
            "narrow" => KernelKind::Narrow,
            "numeric" => KernelKind::Numeric,
            other => {
                return Err(Error::invalid(format!(
                    "unknown kernel `{other}` (expected delta, sphere, crystal, narrow or numeric)"
                )))
            }
        })
    }
}

/// An evaluable kernel together with the parameters of its regime.
#[derive(Clone, Debug)]
pub enum SelfGravityKernel {
    /// Point particle, `M²/d`. Singular at d = 0.
    Delta { mass: f64 },
    Sphere(SphereKernelParams),
    Crystal(CrystalKernelParams),
    Narrow(CrystalKernelParams),
    Numeric(NumericKernel),
}

impl SelfGravityKernel {
    pub fn delta(mass: f64) -> Result<Self> {
        positive("mass", mass)?;
        Ok(Self::Delta { mass })
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Self::Delta { .. } => KernelKind::Delta,
            Self::Sphere(_) => KernelKind::Sphere,
            Self::Crystal(_) => KernelKind::Crystal,
            Self::Narrow(_) => KernelKind::Narrow,
            Self::Numeric(_) => KernelKind::Numeric,
        }
    }

    pub fn eval(&self, d: f64) -> f64 {
        let d = d.abs();
        match self {
            Self::Delta { mass } => mass * mass / d,
            Self::Sphere(p) => i_sphere(d, p),
            Self::Crystal(p) => i_crystal(d, p),
            Self::Narrow(p) => i_narrow(d, p),
            Self::Numeric(k) => k.eval(d),
        }
    }

    /// I(d) − I(0), evaluated without cancelling the (often dominant)
    /// constant part. For the singular point kernel this is I(d) itself.
    pub fn eval_relative(&self, d: f64) -> f64 {
        let d = d.abs();
        match self {
            Self::Delta { mass } => mass * mass / d,
            Self::Sphere(p) => {
                let scale = p.mass * p.mass / p.radius;
                if d >= 2.0 * p.radius {
                    p.mass * p.mass / d - 1.2 * scale
                } else {
                    let s = d / (2.0 * p.radius);
                    let s2 = s * s;
                    scale * s2 * (-2.0 + 1.5 * s - 0.2 * s2 * s)
                }
            }
            Self::Crystal(p) => {
                let x = d / (SQRT_2 * p.sigma);
                -p.mass * p.m_atom / (SQRT_2 * p.sigma) * erf_over_x_deficit(x)
            }
            Self::Narrow(p) => {
                let x = d / p.sigma;
                -p.atomic_term_at_zero() * x * x / 6.0
            }
            Self::Numeric(k) => k.eval(d) - k.eval(0.0),
        }
    }

    pub fn eval_vec(&self, d: [f64; 3]) -> f64 {
        self.eval((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::Delta { mass } => *mass,
            Self::Sphere(p) => p.mass,
            Self::Crystal(p) | Self::Narrow(p) => p.mass,
            Self::Numeric(k) => k.total_mass(),
        }
    }

    /// Length on which the kernel departs from its Newtonian tail.
    pub fn structure_scale(&self) -> f64 {
        match self {
            Self::Delta { .. } => 0.0,
            Self::Sphere(p) => p.radius,
            Self::Crystal(p) | Self::Narrow(p) => p.sigma,
            Self::Numeric(k) => k.outer_radius(),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Self::Delta { .. })
    }

    /// Applicability warning for a wave-function of spatial extent `extent` (m).
    pub fn extent_warning(&self, extent: f64) -> Option<String> {
        match self {
            Self::Crystal(p) => p.validity_warning(extent),
            Self::Narrow(p) => p.validity_warning(extent).or_else(|| {
                (extent > p.sigma).then(|| {
                    format!(
                        "wave-function extent {extent:e} m is not small against σ = {:e} m; the quadratic kernel is outside its regime",
                        p.sigma
                    )
                })
            }),
            _ => None,
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        match self {
            Self::Delta { mass } => serde_json::json!({ "kind": "delta", "mass_kg": mass }),
            Self::Sphere(p) => serde_json::json!({ "kind": "sphere", "mass_kg": p.mass, "radius_m": p.radius }),
            Self::Crystal(p) | Self::Narrow(p) => serde_json::json!({
                "kind": self.kind().as_str(),
                "mass_kg": p.mass,
                "radius_m": p.radius,
                "m_atom_kg": p.m_atom,
                "sigma_m": p.sigma,
            }),
            Self::Numeric(k) => serde_json::json!({
                "kind": "numeric",
                "mass_kg": k.total_mass(),
                "outer_radius_m": k.outer_radius(),
                "knots": k.knot_count(),
            }),
        }
    }
}
