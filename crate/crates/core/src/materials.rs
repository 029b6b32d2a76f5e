//! Surface materials, smooth/rough reflection and the theoretical scattering
//! coefficient.
//!
//! A rough surface reflects `Γ_rough = R·Γ` where `Γ` is the smooth Fresnel
//! coefficient and `R = e^{-g} I₀(g)`, `g = 8 (π h_rms cos θ_i / λ)²`, is the
//! roughness loss factor. The power removed from the specular component is
//! assigned to diffuse scattering, `S = sqrt((1 - R²) Γ²)`, so that
//! `Γ_rough² + S² = Γ²`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::bessel_i0_scaled;
use crate::units::{PI, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence. For a vertical
    /// wall and horizontal incidence plane this is a vertically polarized
    /// antenna.
    #[default]
    Te,
    Tm,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::Te => "TE",
            Polarization::Tm => "TM",
        }
    }
}

impl core::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TE" | "te" => Ok(Polarization::Te),
            "TM" | "tm" => Ok(Polarization::Tm),
            _ => Err(Error::InvalidParams("polarization must be TE or TM")),
        }
    }
}

/// Electromagnetic and roughness description of one surface. Lengths in
/// meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub eps_r: f64,
    pub h_rms: f64,
    pub thickness: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, eps_r: f64, h_rms: f64, thickness: f64) -> Result<Self> {
        let name = name.into();
        let bad = |reason| Err(Error::InvalidMaterial { name: name.clone(), reason });
        if name.is_empty() {
            return bad("empty name");
        }
        if !(eps_r >= 1.0 && eps_r.is_finite()) {
            return bad("eps_r must be a finite value >= 1");
        }
        if !(h_rms >= 0.0 && h_rms.is_finite()) {
            return bad("h_rms must be a finite value >= 0");
        }
        if !(thickness > 0.0 && thickness.is_finite()) {
            return bad("thickness must be > 0");
        }
        Ok(Material { name, eps_r, h_rms, thickness })
    }

    /// Build from the units used in the material table: roughness in mm,
    /// thickness in cm.
    pub fn from_table_units(name: impl Into<String>, eps_r: f64, h_rms_mm: f64, thickness_cm: f64) -> Result<Self> {
        Material::new(name, eps_r, h_rms_mm / 1000.0, thickness_cm / 100.0)
    }

    pub fn h_rms_mm(&self) -> f64 {
        self.h_rms * 1000.0
    }

    pub fn thickness_cm(&self) -> f64 {
        self.thickness * 100.0
    }
}

/// The four measured building surfaces: name, ε_r, h_rms (mm), thickness (cm).
pub const BUILDING_SURFACES: [(&str, f64, f64, f64); 4] = [
    ("metal_sheet", 6.0, 0.170, 0.3),
    ("marble_wall", 6.2, 0.216, 15.0),
    ("smooth_wall", 5.8, 0.445, 25.0),
    ("rough_wall", 10.5, 0.715, 32.0),
];

/// Material collection with unique names, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialDb {
    materials: Vec<Material>,
}

impl MaterialDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four measured building surfaces.
    pub fn building_surfaces() -> Self {
        let mut db = MaterialDb::new();
        for (name, eps, h, t) in BUILDING_SURFACES {
            db.insert(Material::from_table_units(name, eps, h, t).expect("valid table row"))
                .expect("unique table names");
        }
        db
    }

    pub fn insert(&mut self, m: Material) -> Result<()> {
        if self.get(&m.name).is_some() {
            return Err(Error::DuplicateMaterial(m.name));
        }
        self.materials.push(m);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Material> {
        self.get(name).ok_or_else(|| Error::UnknownMaterial(name.into()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceContext {
    /// Angle from the surface normal, radians in `[0, π/2)`.
    pub theta_i: f64,
    pub wavelength: f64,
    pub polarization: Polarization,
}

impl IncidenceContext {
    pub fn new(theta_i: f64, wavelength: f64, polarization: Polarization) -> Result<Self> {
        check_incidence(theta_i)?;
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::Domain { what: "wavelength", value: wavelength });
        }
        Ok(IncidenceContext { theta_i, wavelength, polarization })
    }

    pub fn at_frequency(theta_i: f64, frequency_hz: f64, pol: Polarization) -> Result<Self> {
        IncidenceContext::new(theta_i, SPEED_OF_LIGHT / frequency_hz, pol)
    }
}

fn check_incidence(theta_i: f64) -> Result<()> {
    // Grazing incidence is excluded: the roughness factor is not meaningful there.
    if !(0.0..PI / 2.0).contains(&theta_i) {
        return Err(Error::Domain { what: "incidence angle", value: theta_i });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionBundle {
    /// Smooth-surface amplitude reflection coefficient Γ.
    pub gamma: f64,
    /// Roughness loss factor R.
    pub rayleigh_r: f64,
    /// `R·Γ`.
    pub gamma_rough: f64,
    /// Theoretical scattering coefficient S.
    pub s_coeff: f64,
    /// Amplitude transmission coefficient `sqrt(1 - Γ²)`. Only used to
    /// complete the energy balance.
    pub transmission_t: f64,
}

/// Fresnel amplitude reflection coefficient of a lossless dielectric
/// half-space seen from free space.
///
/// TE is `(cos θ - √(ε - sin²θ)) / (cos θ + √(ε - sin²θ))`, TM is
/// `(ε cos θ - √(ε - sin²θ)) / (ε cos θ + √(ε - sin²θ))`. The TM coefficient
/// vanishes at the Brewster angle `atan √ε`.
pub fn fresnel_gamma(eps_r: f64, theta_i: f64, pol: Polarization) -> Result<f64> {
    if !(eps_r >= 1.0 && eps_r.is_finite()) {
        return Err(Error::Domain { what: "relative permittivity", value: eps_r });
    }
    check_incidence(theta_i)?;
    let c = libm::cos(theta_i);
    let s = libm::sin(theta_i);
    let root = libm::sqrt(eps_r - s * s);
    // Numerators rationalized with c² + s² = 1 so that ε = 1 gives exactly 0.
    let g = match pol {
        Polarization::Te => {
            let d = c + root;
            (1.0 - eps_r) / (d * d)
        }
        Polarization::Tm => {
            let d = eps_r * c + root;
            (eps_r - 1.0) * ((eps_r + 1.0) * c * c - 1.0) / (d * d)
        }
    };
    Ok(g)
}

/// Roughness exponent `g = 8 (π h_rms cos θ_i / λ)²`.
pub fn roughness_exponent(h_rms: f64, theta_i: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::Domain { what: "wavelength", value: wavelength });
    }
    if !(h_rms >= 0.0 && h_rms.is_finite()) {
        return Err(Error::Domain { what: "h_rms", value: h_rms });
    }
    if !theta_i.is_finite() {
        return Err(Error::Domain { what: "incidence angle", value: theta_i });
    }
    let a = PI * h_rms * libm::cos(theta_i) / wavelength;
    Ok(8.0 * a * a)
}

/// Rayleigh roughness loss factor `R = e^{-g} I₀(g)` in `(0, 1]`.
pub fn rayleigh_factor(h_rms: f64, theta_i: f64, wavelength: f64) -> Result<f64> {
    bessel_i0_scaled(roughness_exponent(h_rms, theta_i, wavelength)?)
}

/// Rough-surface reflection coefficient `R·Γ`.
pub fn rough_reflection(gamma: f64, rayleigh_r: f64) -> f64 {
    debug_assert!(rayleigh_r > 0.0 && rayleigh_r <= 1.0);
    rayleigh_r * gamma
}

/// `S = sqrt((1 - R²) Γ²)`.
pub fn scattering_coefficient(gamma: f64, rayleigh_r: f64) -> f64 {
    libm::sqrt((1.0 - rayleigh_r * rayleigh_r) * (gamma * gamma))
}

/// Largest possible S for a roughness factor, reached when `|Γ| = 1`.
pub fn scattering_bound(rayleigh_r: f64) -> f64 {
    libm::sqrt(1.0 - rayleigh_r * rayleigh_r)
}

/// Theoretical scattering coefficient of a material, with every intermediate
/// coefficient.
pub fn initial_scattering_coefficient(material: &Material, ctx: &IncidenceContext) -> Result<ReflectionBundle> {
    let gamma = fresnel_gamma(material.eps_r, ctx.theta_i, ctx.polarization)?;
    let r = rayleigh_factor(material.h_rms, ctx.theta_i, ctx.wavelength)?;
    Ok(ReflectionBundle {
        gamma,
        rayleigh_r: r,
        gamma_rough: rough_reflection(gamma, r),
        s_coeff: scattering_coefficient(gamma, r),
        transmission_t: libm::sqrt((1.0 - gamma * gamma).max(0.0)),
    })
}
