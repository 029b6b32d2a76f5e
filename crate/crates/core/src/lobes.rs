//! Effective-roughness diffuse scattering lobes.
//!
//! The single-lobe (directive) model concentrates scattered power around the
//! specular direction:
//!
//! ```text
//! |E_s|² = (S K / (r_i r_s))² · l cos θ_i / F · ((1 + cos ψ_R) / 2)^α_R
//! ```
//!
//! The dual-lobe (backscattering) model adds a second lobe around the
//! direction back toward the source, mixed by Λ:
//!
//! ```text
//! |E_s|² = (S K / (r_i r_s))² · l cos θ_i / F · [Λ g(ψ_R)^α_R + (1 - Λ) g(ψ_i)^α_i]
//! F      = Λ F(α_R) + (1 - Λ) F(α_i)
//! ```
//!
//! `K = sqrt(60 P_t G_t)` and the received power is
//! `P_r = G_r λ² / (480 π²) · |E_s|²`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::materials::{self, IncidenceContext, Material, Polarization};
use crate::quadrature::{adaptive_simpson, Tolerance};
use crate::units::{self, PI};

/// Integer lobe width exponent in `1..=10`. Larger is narrower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WidthFactor(u8);

impl WidthFactor {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 10;
    pub const COUNT: usize = 10;

    pub fn new(value: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&value) {
            Ok(WidthFactor(value))
        } else {
            Err(Error::InvalidParams("width factor must be in 1..=10"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based slot, for per-width lookup tables.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn all() -> impl Iterator<Item = WidthFactor> {
        (Self::MIN..=Self::MAX).map(WidthFactor)
    }
}

impl fmt::Display for WidthFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SingleLobe,
    DualLobe,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SingleLobe => "single",
            ModelKind::DualLobe => "dual",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single-lobe" => Ok(ModelKind::SingleLobe),
            "dual" | "dual-lobe" => Ok(ModelKind::DualLobe),
            _ => Err(Error::InvalidParams("model must be `single` or `dual`")),
        }
    }
}

/// Diffuse-scattering model and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LobeParams {
    SingleLobe { s_coeff: f64, alpha_r: WidthFactor },
    DualLobe { s_coeff: f64, alpha_r: WidthFactor, alpha_i: WidthFactor, lambda_mix: f64 },
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidParams("scattering coefficient must be in [0, 1)"))
    }
}

impl LobeParams {
    pub fn single(s_coeff: f64, alpha_r: u8) -> Result<Self> {
        check_s(s_coeff)?;
        Ok(LobeParams::SingleLobe { s_coeff, alpha_r: WidthFactor::new(alpha_r)? })
    }

    pub fn dual(s_coeff: f64, alpha_r: u8, alpha_i: u8, lambda_mix: f64) -> Result<Self> {
        check_s(s_coeff)?;
        if !(0.0..=1.0).contains(&lambda_mix) {
            return Err(Error::InvalidParams("mix factor must be in [0, 1]"));
        }
        Ok(LobeParams::DualLobe {
            s_coeff,
            alpha_r: WidthFactor::new(alpha_r)?,
            alpha_i: WidthFactor::new(alpha_i)?,
            lambda_mix,
        })
    }

    pub fn model(&self) -> ModelKind {
        match self {
            LobeParams::SingleLobe { .. } => ModelKind::SingleLobe,
            LobeParams::DualLobe { .. } => ModelKind::DualLobe,
        }
    }

    pub fn s_coeff(&self) -> f64 {
        match *self {
            LobeParams::SingleLobe { s_coeff, .. } | LobeParams::DualLobe { s_coeff, .. } => s_coeff,
        }
    }

    pub fn alpha_r(&self) -> WidthFactor {
        match *self {
            LobeParams::SingleLobe { alpha_r, .. } | LobeParams::DualLobe { alpha_r, .. } => alpha_r,
        }
    }

    pub fn alpha_i(&self) -> Option<WidthFactor> {
        match *self {
            LobeParams::SingleLobe { .. } => None,
            LobeParams::DualLobe { alpha_i, .. } => Some(alpha_i),
        }
    }

    pub fn lambda_mix(&self) -> Option<f64> {
        match *self {
            LobeParams::SingleLobe { .. } => None,
            LobeParams::DualLobe { lambda_mix, .. } => Some(lambda_mix),
        }
    }

    /// Same shape with a different scattering coefficient.
    pub fn with_s(self, s: f64) -> Result<Self> {
        check_s(s)?;
        Ok(match self {
            LobeParams::SingleLobe { alpha_r, .. } => LobeParams::SingleLobe { s_coeff: s, alpha_r },
            LobeParams::DualLobe { alpha_r, alpha_i, lambda_mix, .. } => {
                LobeParams::DualLobe { s_coeff: s, alpha_r, alpha_i, lambda_mix }
            }
        })
    }

    /// `(forward weight, forward width, backscatter weight, backscatter width)`.
    /// The single-lobe model is the dual-lobe model at Λ = 1.
    pub(crate) fn mix(&self) -> (f64, WidthFactor, f64, WidthFactor) {
        match *self {
            LobeParams::SingleLobe { alpha_r, .. } => (1.0, alpha_r, 0.0, alpha_r),
            LobeParams::DualLobe { alpha_r, alpha_i, lambda_mix, .. } => {
                (lambda_mix, alpha_r, 1.0 - lambda_mix, alpha_i)
            }
        }
    }
}

/// How the lobe normalization integral F is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormalizationMode {
    /// `∫_{-π/2}^{π/2} g(ψ(θ_s)) |sin θ_s| dθ_s` in the plane of incidence.
    PaperLine,
    /// Solid-angle integral of the lobe over the upper hemisphere.
    #[default]
    Hemisphere,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::PaperLine => "paper-line",
            NormalizationMode::Hemisphere => "hemisphere",
        }
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-line" | "paperline" | "line" => Ok(NormalizationMode::PaperLine),
            "hemisphere" => Ok(NormalizationMode::Hemisphere),
            _ => Err(Error::InvalidParams("mode must be `hemisphere` or `paper-line`")),
        }
    }
}

/// Per-path angular and distance context of one scattering patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterGeometry {
    pub r_i: f64,
    pub r_s: f64,
    pub theta_i: f64,
    pub theta_s: f64,
    /// Angle between the scattering and specular directions.
    pub psi_r: f64,
    /// Angle between the scattering direction and the direction back toward
    /// the source.
    pub psi_i: f64,
    /// Illuminated extent `l`: a length for in-plane use, a patch area when
    /// the wall is tiled.
    pub surface_extent: f64,
}

impl ScatterGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_i > 0.0 && self.r_s > 0.0) {
            return Err(Error::DegenerateGeometry("patch distance must be positive"));
        }
        let in_range = |a: f64, hi: f64| (0.0..=hi).contains(&a);
        if !(in_range(self.theta_i, PI / 2.0)
            && in_range(self.theta_s, PI / 2.0)
            && in_range(self.psi_r, PI)
            && in_range(self.psi_i, PI))
        {
            return Err(Error::DegenerateGeometry("scattering angle out of range"));
        }
        if !(self.surface_extent >= 0.0) {
            return Err(Error::DegenerateGeometry("negative surface extent"));
        }
        Ok(())
    }

    pub fn with_surface_extent(mut self, extent: f64) -> Self {
        self.surface_extent = extent;
        self
    }
}

/// Transmit/receive link constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioLink {
    p_t: f64,
    g_t: f64,
    g_r: f64,
    wavelength: f64,
    k_const: f64,
}

impl RadioLink {
    /// Transmit power in W, linear gains, wavelength in m.
    pub fn new(p_t: f64, g_t: f64, g_r: f64, wavelength: f64) -> Result<Self> {
        if !(p_t >= 0.0 && g_t > 0.0 && g_r > 0.0 && wavelength > 0.0) {
            return Err(Error::InvalidParams("link powers, gains and wavelength must be positive"));
        }
        Ok(RadioLink { p_t, g_t, g_r, wavelength, k_const: libm::sqrt(60.0 * p_t * g_t) })
    }

    pub fn from_dbm(p_t_dbm: f64, g_t_dbi: f64, g_r_dbi: f64, frequency_hz: f64) -> Result<Self> {
        RadioLink::new(
            units::dbm_to_watts(p_t_dbm),
            units::db_to_linear(g_t_dbi),
            units::db_to_linear(g_r_dbi),
            units::wavelength(frequency_hz),
        )
    }

    /// 10 dBm into 15 dBi horns at both ends, 28 GHz.
    pub fn measurement_default() -> Self {
        RadioLink::from_dbm(10.0, 15.0, 15.0, 28e9).expect("valid constants")
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }
    pub fn g_t(&self) -> f64 {
        self.g_t
    }
    pub fn g_r(&self) -> f64 {
        self.g_r
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    /// `K = sqrt(60 P_t G_t)`.
    pub fn k_const(&self) -> f64 {
        self.k_const
    }
}

/// `((1 + cos ψ) / 2)^α`.
pub fn lobe_gain(psi: f64, alpha: WidthFactor) -> f64 {
    ipow(0.5 * (1.0 + libm::cos(psi)), alpha.get())
}

pub(crate) fn ipow(base: f64, n: u8) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= base;
    }
    acc
}

/// Quadrature settings used for every normalization integral.
pub const NORMALIZATION_TOLERANCE: Tolerance = Tolerance { abs: 1e-8, max_evals: 2_000_000, max_depth: 48 };

/// Normalization integral of one lobe of width `alpha` whose axis leaves the
/// surface at `theta_i` from the normal.
///
/// The forward lobe (axis on the specular side) and the backscatter lobe
/// (axis on the source side) have the same polar angle, and both integrals
/// are symmetric under mirroring, so one value serves both.
pub fn lobe_normalization(alpha: WidthFactor, theta_i: f64, mode: NormalizationMode) -> Result<f64> {
    if !(0.0..=PI / 2.0).contains(&theta_i) {
        return Err(Error::Domain { what: "incidence angle", value: theta_i });
    }
    let n = alpha.get();
    match mode {
        NormalizationMode::PaperLine => {
            let f = |ts: f64| ipow(0.5 * (1.0 + libm::cos(ts - theta_i)), n) * libm::sin(ts).abs();
            // |sin| has a kink at 0; integrate each side separately.
            let left = adaptive_simpson(f, -PI / 2.0, 0.0, half(NORMALIZATION_TOLERANCE))?;
            let right = adaptive_simpson(f, 0.0, PI / 2.0, half(NORMALIZATION_TOLERANCE))?;
            Ok(left + right)
        }
        NormalizationMode::Hemisphere => {
            let (ci, si) = (libm::cos(theta_i), libm::sin(theta_i));
            let f = |t: f64| {
                let (ct, st) = (libm::cos(t), libm::sin(t));
                st * azimuthal_lobe_integral(0.5 * (1.0 + ct * ci), 0.5 * st * si, n)
            };
            adaptive_simpson(f, 0.0, PI / 2.0, NORMALIZATION_TOLERANCE)
        }
    }
}

fn half(t: Tolerance) -> Tolerance {
    Tolerance { abs: 0.5 * t.abs, max_evals: t.max_evals / 2, ..t }
}

/// `∫_0^{2π} (c + d cos φ)^n dφ` by binomial expansion; odd powers of `cos φ`
/// integrate to zero and `∫ cos^k φ dφ = 2π (k-1)!!/k!!` for even `k`.
fn azimuthal_lobe_integral(c: f64, d: f64, n: u8) -> f64 {
    let n = usize::from(n);
    let mut sum = 0.0;
    let mut binom = 1.0; // C(n, k)
    let mut moment = 1.0; // (k-1)!!/k!!
    for k in 0..=n {
        if k > 0 {
            binom *= (n - k + 1) as f64 / k as f64;
        }
        if k % 2 == 0 {
            if k > 0 {
                moment *= (k - 1) as f64 / k as f64;
            }
            sum += binom * ipow(c, (n - k) as u8) * ipow(d, k as u8) * moment;
        }
    }
    2.0 * PI * sum
}

/// Normalization `F` of a model: `Λ F(α_R) + (1 - Λ) F(α_i)`, or `F(α_R)` for
/// the single lobe.
pub fn normalization_f(params: &LobeParams, theta_i: f64, mode: NormalizationMode) -> Result<f64> {
    let (wf, af, wb, ab) = params.mix();
    let mut f = 0.0;
    if wf > 0.0 {
        f += wf * lobe_normalization(af, theta_i, mode)?;
    }
    if wb > 0.0 {
        f += wb * lobe_normalization(ab, theta_i, mode)?;
    }
    Ok(f)
}

/// Lobe pattern `Λ g(ψ_R)^α_R + (1 - Λ) g(ψ_i)^α_i`.
pub fn lobe_pattern(params: &LobeParams, psi_r: f64, psi_i: f64) -> f64 {
    let (wf, af, wb, ab) = params.mix();
    let mut g = wf * lobe_gain(psi_r, af);
    if wb > 0.0 {
        g += wb * lobe_gain(psi_i, ab);
    }
    g
}

/// `|E_s|²` with a precomputed normalization `norm`.
pub fn scattered_field_sq_with_norm(
    params: &LobeParams,
    geom: &ScatterGeometry,
    k_const: f64,
    norm: f64,
) -> Result<f64> {
    geom.validate()?;
    if !(norm > 0.0) {
        return Err(Error::InvalidParams("normalization must be positive"));
    }
    let amp = params.s_coeff() * k_const / (geom.r_i * geom.r_s);
    Ok(amp * amp * geom.surface_extent * libm::cos(geom.theta_i) / norm * lobe_pattern(params, geom.psi_r, geom.psi_i))
}

/// Scattered field magnitude squared `|E_s|²` of one patch.
pub fn scattered_field_sq(
    params: &LobeParams,
    geom: &ScatterGeometry,
    link: &RadioLink,
    mode: NormalizationMode,
) -> Result<f64> {
    geom.validate()?;
    let norm = normalization_f(params, geom.theta_i, mode)?;
    scattered_field_sq_with_norm(params, geom, link.k_const(), norm)
}

/// `P_r = G_r λ² / (480 π²) · |E_s|²` in watts.
pub fn received_scatter_power(e_s_sq: f64, g_r: f64, wavelength: f64) -> f64 {
    g_r * wavelength * wavelength / (480.0 * PI * PI) * e_s_sq
}

/// Observation direction for pattern sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Back toward the source.
    Incident,
    /// Mirror direction.
    Specular,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Incident => "incident",
            Direction::Specular => "specular",
        }
    }
}

/// Where the sweep takes its scattering coefficient from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepS {
    /// Theoretical S of the material at each incidence angle.
    #[default]
    Material,
    /// The S stored in the parameters, at every angle.
    Params,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternConfig {
    pub r_i: f64,
    pub r_s: f64,
    /// Patch extent `l`; a unit patch by default.
    pub surface_extent: f64,
    pub mode: NormalizationMode,
    pub polarization: Polarization,
    pub s_source: SweepS,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            r_i: 1.5,
            r_s: 1.5,
            surface_extent: 1.0,
            mode: NormalizationMode::default(),
            polarization: Polarization::Te,
            s_source: SweepS::Material,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternRow {
    pub theta_i_deg: f64,
    pub direction: Direction,
    pub s_coeff: f64,
    pub p_r_w: f64,
}

/// Scattered power of a single patch toward the incident and/or specular
/// direction as the incidence angle is swept.
pub fn pattern_sweep(
    material: &Material,
    params: &LobeParams,
    link: &RadioLink,
    directions: &[Direction],
    theta_grid_deg: &[f64],
    cfg: &PatternConfig,
) -> Result<Vec<PatternRow>> {
    let mut rows = Vec::with_capacity(theta_grid_deg.len() * directions.len());
    for &deg in theta_grid_deg {
        if !(deg > 0.0 && deg < 90.0) {
            return Err(Error::Domain { what: "sweep incidence angle (deg)", value: deg });
        }
        let theta = units::deg_to_rad(deg);
        let p = match cfg.s_source {
            SweepS::Params => *params,
            SweepS::Material => {
                let ctx = IncidenceContext::new(theta, link.wavelength(), cfg.polarization)?;
                let s = materials::initial_scattering_coefficient(material, &ctx)?.s_coeff;
                params.with_s(s)?
            }
        };
        let norm = normalization_f(&p, theta, cfg.mode)?;
        for &dir in directions {
            let (psi_r, psi_i) = match dir {
                Direction::Specular => (0.0, 2.0 * theta),
                Direction::Incident => (2.0 * theta, 0.0),
            };
            let geom = ScatterGeometry {
                r_i: cfg.r_i,
                r_s: cfg.r_s,
                theta_i: theta,
                theta_s: theta,
                psi_r,
                psi_i,
                surface_extent: cfg.surface_extent,
            };
            let e_sq = scattered_field_sq_with_norm(&p, &geom, link.k_const(), norm)?;
            rows.push(PatternRow {
                theta_i_deg: deg,
                direction: dir,
                s_coeff: p.s_coeff(),
                p_r_w: received_scatter_power(e_sq, link.g_r(), link.wavelength()),
            });
        }
    }
    Ok(rows)
}
