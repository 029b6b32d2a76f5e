//! Single-bounce wall simulator.
//!
//! Each receiver sees at most one specular path (image method, Friis over the
//! unfolded length, `|Γ_rough|²` loss) plus one diffuse path per wall tile.
//! Powers add incoherently. Contributions whose length differs from the
//! strongest path by more than the path gate are dropped, and so is a path
//! (specular, or all tiles together) weaker than the other by more than the
//! power gate.
//!
//! The expensive, parameter-independent part of every path (geometry, antenna
//! masks, lobe gains for every width factor, normalization integrals) is
//! computed once in a [`ScanModel`]. Evaluating a parameter set is then a
//! cheap pass over the tiles, which is what makes the grid search affordable.
//! Single-point and scan simulation use the same evaluation so their numbers
//! agree bit for bit with what the fitter sees.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fitting::{Scan, ScanPoint};
use crate::geometry::{image_path, patch_angles, scan_positions, BeamMask, RxPosition, ScanSpec, Scene, Tile, Tiling};
use crate::lobes::{ipow, lobe_normalization, LobeParams, NormalizationMode, RadioLink, WidthFactor};
use crate::materials::{fresnel_gamma, rayleigh_factor, Material, MaterialDb, Polarization};
use crate::units::{self, PI, SPEED_OF_LIGHT};
use crate::vector::Vec3;

const WIDTHS: usize = WidthFactor::COUNT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub tiling: Tiling,
    pub mode: NormalizationMode,
    pub beam: BeamMask,
    pub polarization: Polarization,
    /// Drop paths more than this many dB below the strongest.
    pub power_gate_db: f64,
    /// Drop paths whose length differs from the strongest by more than this.
    pub path_gate_m: f64,
    /// Excess-delay gate; the stricter of this and `path_gate_m` applies.
    pub delay_gate_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tiling: Tiling::default(),
            mode: NormalizationMode::default(),
            beam: BeamMask::default(),
            polarization: Polarization::Te,
            power_gate_db: 35.0,
            path_gate_m: 1.5,
            delay_gate_s: 5e-9,
        }
    }
}

impl SimConfig {
    pub fn path_excess_limit(&self) -> f64 {
        self.path_gate_m.min(self.delay_gate_s * SPEED_OF_LIGHT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Specular,
    Diffuse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathContribution {
    pub kind: PathKind,
    pub patch_id: Option<usize>,
    /// Watts.
    pub power: f64,
    /// `r_i + r_s` of this path.
    pub path_length: f64,
    /// Seconds relative to the strongest path; negative when shorter.
    pub excess_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GatingReport {
    pub below_power_gate: usize,
    pub beyond_path_gate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub total_power_dbm: f64,
    pub specular_power_dbm: f64,
    pub diffuse_power_dbm: f64,
    /// Retained contributions, specular first then tiles in index order.
    pub contributions: Vec<PathContribution>,
    pub gating_report: GatingReport,
}

impl SimResult {
    pub fn specular_power_w(&self) -> f64 {
        self.sum(PathKind::Specular)
    }

    pub fn diffuse_power_w(&self) -> f64 {
        self.sum(PathKind::Diffuse)
    }

    fn sum(&self, kind: PathKind) -> f64 {
        self.contributions.iter().filter(|c| c.kind == kind).map(|c| c.power).sum()
    }
}

/// One simulated scan position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub azimuth_deg: f64,
    pub delta_h: f64,
    pub total_dbm: f64,
    pub specular_dbm: f64,
    pub diffuse_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedScan {
    pub records: Vec<SimRecord>,
}

impl SimulatedScan {
    pub fn to_scan(&self) -> Result<Scan> {
        Scan::new(
            self.records
                .iter()
                .map(|r| ScanPoint { azimuth_deg: r.azimuth_deg, delta_h: r.delta_h, power_dbm: r.total_dbm })
                .collect(),
        )
    }
}

/// Set of width factors whose normalization integrals are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthSet(u16);

impl WidthSet {
    pub fn all() -> Self {
        WidthSet((1 << WIDTHS) - 1)
    }

    pub fn of(params: &LobeParams) -> Self {
        let mut bits = 1 << params.alpha_r().index();
        if let Some(a) = params.alpha_i() {
            bits |= 1 << a.index();
        }
        WidthSet(bits)
    }

    fn contains(self, w: WidthFactor) -> bool {
        self.0 & (1 << w.index()) != 0
    }
}

#[derive(Debug, Clone, Copy)]
struct SpecularTerm {
    power: f64,
    length: f64,
}

#[derive(Debug, Clone)]
struct TileTerm {
    index: usize,
    /// Everything in the tile power except `S²`, the lobe and `1/F`.
    pref: f64,
    area: f64,
    fwd: [f64; WIDTHS],
    back: [f64; WIDTHS],
    length: f64,
}

#[derive(Debug, Clone)]
struct PositionTerms {
    rx: RxPosition,
    specular: Option<SpecularTerm>,
    tiles: Vec<TileTerm>,
}

/// Resolved scene plus link and simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub scene: Scene,
    pub material: Material,
    pub link: RadioLink,
    pub config: SimConfig,
}

impl Simulator {
    pub fn new(scene: Scene, materials: &MaterialDb, link: RadioLink, config: SimConfig) -> Result<Self> {
        let material = materials.require(&scene.wall.material)?.clone();
        if (link.wavelength() - scene.wavelength()).abs() > 1e-12 * scene.wavelength() {
            return Err(Error::InvalidScene("link wavelength does not match the carrier frequency"));
        }
        Ok(Simulator { scene, material, link, config })
    }

    pub fn simulate_point(&self, rx: Vec3, params: &LobeParams) -> Result<SimResult> {
        let pos = RxPosition { azimuth_deg: f64::NAN, delta_h: f64::NAN, position: rx };
        let model = ScanModel::new(self, &[pos], WidthSet::of(params))?;
        model.simulate_point(0, params)
    }

    pub fn simulate_scan(&self, spec: &ScanSpec, params: &LobeParams) -> Result<SimulatedScan> {
        let positions = scan_positions(&self.scene, spec)?;
        ScanModel::new(self, &positions, WidthSet::of(params))?.simulate(params)
    }

    /// Total power at `rx` as the tile edge is halved from 0.4 m to 0.025 m.
    pub fn convergence_probe(&self, rx: Vec3, params: &LobeParams) -> Result<ConvergenceReport> {
        let mut rows = Vec::new();
        let mut edge = 0.4;
        while edge >= 0.025 - 1e-12 {
            let sim = Simulator { config: SimConfig { tiling: Tiling { edge }, ..self.config }, ..self.clone() };
            let r = sim.simulate_point(rx, params)?;
            rows.push(ConvergenceRow {
                tile_edge: edge,
                total_power_dbm: r.total_power_dbm,
                specular_power_dbm: r.specular_power_dbm,
            });
            edge *= 0.5;
        }
        let n = rows.len();
        let last = (rows[n - 1].total_power_dbm - rows[n - 2].total_power_dbm).abs();
        let same = rows[n - 1].total_power_dbm == rows[n - 2].total_power_dbm;
        Ok(ConvergenceReport { converged: same || last < 0.1, rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub tile_edge: f64,
    pub total_power_dbm: f64,
    pub specular_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// The two finest tilings agree within 0.1 dB.
    pub converged: bool,
}

/// Precomputed paths for a fixed set of receiver positions.
#[derive(Debug, Clone)]
pub struct ScanModel {
    config: SimConfig,
    widths: WidthSet,
    /// Per tile, `F(α)` at the tile's incidence angle.
    norms: Vec<[f64; WIDTHS]>,
    positions: Vec<PositionTerms>,
}

impl ScanModel {
    pub fn new(sim: &Simulator, positions: &[RxPosition], widths: WidthSet) -> Result<Self> {
        let scene = &sim.scene;
        let tiles = sim.config.tiling.tiles(&scene.wall)?;
        let n = scene.wall.normal;
        let tx_bore = (scene.wall.center - scene.tx)
            .normalized()
            .ok_or(Error::DegenerateGeometry("transmitter at the wall center"))?;

        let mut norms = Vec::with_capacity(tiles.len());
        for tile in &tiles {
            let theta_i = (scene.tx - tile.center).angle_to(n);
            let mut row = [f64::NAN; WIDTHS];
            for w in WidthFactor::all().filter(|w| widths.contains(*w)) {
                row[w.index()] = lobe_normalization(w, theta_i, sim.config.mode)?;
            }
            norms.push(row);
        }

        let positions =
            positions.iter().map(|rx| position_terms(sim, &tiles, tx_bore, *rx)).collect::<Result<Vec<_>>>()?;
        Ok(ScanModel { config: sim.config, widths, norms, positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn check(&self, params: &LobeParams) -> Result<()> {
        let ok = self.widths.contains(params.alpha_r()) && params.alpha_i().is_none_or(|a| self.widths.contains(a));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("width factor not tabulated in this scan model"))
        }
    }

    /// Total received power (dBm) at every position, written to `out`.
    pub fn evaluate_dbm(&self, params: &LobeParams, out: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        self.check(params)?;
        assert_eq!(out.len(), self.positions.len());
        for (slot, pos) in out.iter_mut().zip(&self.positions) {
            let (spec, diff) = evaluate(pos, &self.norms, params, &self.config, scratch, None);
            *slot = units::watts_to_dbm(spec + diff);
        }
        Ok(())
    }

    pub fn simulate(&self, params: &LobeParams) -> Result<SimulatedScan> {
        self.check(params)?;
        let mut scratch = Vec::new();
        let records = self
            .positions
            .iter()
            .map(|pos| {
                let (spec, diff) = evaluate(pos, &self.norms, params, &self.config, &mut scratch, None);
                SimRecord {
                    azimuth_deg: pos.rx.azimuth_deg,
                    delta_h: pos.rx.delta_h,
                    total_dbm: units::watts_to_dbm(spec + diff),
                    specular_dbm: units::watts_to_dbm(spec),
                    diffuse_dbm: units::watts_to_dbm(diff),
                }
            })
            .collect();
        Ok(SimulatedScan { records })
    }

    pub fn simulate_point(&self, index: usize, params: &LobeParams) -> Result<SimResult> {
        self.check(params)?;
        let pos = &self.positions[index];
        let mut scratch = Vec::new();
        let mut detail = Detail::default();
        let (spec, diff) = evaluate(pos, &self.norms, params, &self.config, &mut scratch, Some(&mut detail));
        Ok(SimResult {
            total_power_dbm: units::watts_to_dbm(spec + diff),
            specular_power_dbm: units::watts_to_dbm(spec),
            diffuse_power_dbm: units::watts_to_dbm(diff),
            contributions: detail.contributions,
            gating_report: detail.gating,
        })
    }
}

fn position_terms(sim: &Simulator, tiles: &[Tile], tx_bore: Vec3, rx: RxPosition) -> Result<PositionTerms> {
    let scene = &sim.scene;
    let wall = &scene.wall;
    let link = &sim.link;
    let beam = &sim.config.beam;
    let lambda = link.wavelength();
    let (tx, rxp) = (scene.tx, rx.position);
    let rx_bore = (wall.center - rxp).normalized().ok_or(Error::DegenerateGeometry("receiver at the wall center"))?;

    let specular = match image_path(tx, rxp, wall) {
        Some(path) => {
            let gamma = fresnel_gamma(sim.material.eps_r, path.theta_i, sim.config.polarization)?;
            let r = rayleigh_factor(sim.material.h_rms, path.theta_i, lambda)?;
            let gamma_rough = r * gamma;
            let len = path.length();
            let gains = link.g_t()
                * beam.factor(tx_bore.angle_to(path.departure))
                * link.g_r()
                * beam.factor(rx_bore.angle_to(-path.arrival));
            let fspl = lambda / (4.0 * PI * len);
            Some(SpecularTerm { power: link.p_t() * gains * fspl * fspl * gamma_rough * gamma_rough, length: len })
        }
        None => None,
    };

    let rx_scale = lambda * lambda / (480.0 * PI * PI);
    let mut terms = Vec::with_capacity(tiles.len());
    for tile in tiles {
        let geom = patch_angles(tx, rxp, tile.center, wall.normal)?;
        if geom.theta_s > PI / 2.0 {
            continue;
        }
        let g_t = link.g_t() * beam.factor(tx_bore.angle_to(tile.center - tx));
        let g_r = link.g_r() * beam.factor(rx_bore.angle_to(tile.center - rxp));
        let spread = geom.r_i * geom.r_s;
        let pref = 60.0 * link.p_t() * g_t / (spread * spread) * tile.area * libm::cos(geom.theta_i) * g_r * rx_scale;
        let (cr, ci) = (0.5 * (1.0 + libm::cos(geom.psi_r)), 0.5 * (1.0 + libm::cos(geom.psi_i)));
        let mut fwd = [0.0; WIDTHS];
        let mut back = [0.0; WIDTHS];
        for w in WidthFactor::all() {
            fwd[w.index()] = ipow(cr, w.get());
            back[w.index()] = ipow(ci, w.get());
        }
        terms.push(TileTerm { index: tile.index, pref, area: tile.area, fwd, back, length: geom.r_i + geom.r_s });
    }
    Ok(PositionTerms { rx, specular, tiles: terms })
}

#[derive(Default)]
struct Detail {
    contributions: Vec<PathContribution>,
    gating: GatingReport,
}

/// Gated specular and diffuse power (W) at one position.
///
/// The tiles together form the one diffuse path. Its delay origin is the
/// stronger of the two paths (for the diffuse path, its densest tile), the
/// path-length gate is applied per contribution, and the power gate compares
/// the specular and the summed diffuse path. Both rules are independent of
/// how finely the wall is tiled.
fn evaluate(
    pos: &PositionTerms,
    norms: &[[f64; WIDTHS]],
    params: &LobeParams,
    cfg: &SimConfig,
    scratch: &mut Vec<f64>,
    detail: Option<&mut Detail>,
) -> (f64, f64) {
    let s = params.s_coeff();
    let s2 = s * s;
    let (wf, af, wb, ab) = params.mix();
    let (af, ab) = (af.index(), ab.index());

    scratch.clear();
    let mut raw_diff = 0.0;
    let mut densest: Option<(f64, f64)> = None;
    for t in &pos.tiles {
        let norm = wf * norms[t.index][af] + wb * norms[t.index][ab];
        let lobe = wf * t.fwd[af] + wb * t.back[ab];
        let p = s2 * t.pref * lobe / norm;
        raw_diff += p;
        let density = p / t.area;
        if p > 0.0 && densest.is_none_or(|(d, _)| density > d) {
            densest = Some((density, t.length));
        }
        scratch.push(p);
    }
    let p_spec = pos.specular.map_or(0.0, |sp| sp.power);
    let origin = match (pos.specular, densest) {
        (Some(sp), _) if sp.power > 0.0 && sp.power >= raw_diff => sp.length,
        (_, Some((_, len))) => len,
        _ => return (0.0, 0.0),
    };

    let limit = cfg.path_excess_limit();
    let mut gating = GatingReport::default();
    let mut spec = 0.0;
    if let Some(sp) = pos.specular {
        if p_spec > 0.0 {
            if (sp.length - origin).abs() <= limit {
                spec = p_spec;
            } else {
                gating.beyond_path_gate += 1;
            }
        }
    }
    let mut diff = 0.0;
    let mut n_diff = 0;
    for (t, &p) in pos.tiles.iter().zip(scratch.iter()) {
        if p > 0.0 {
            if (t.length - origin).abs() <= limit {
                diff += p;
                n_diff += 1;
            } else {
                gating.beyond_path_gate += 1;
            }
        }
    }

    let floor = spec.max(diff) * units::db_to_linear(-cfg.power_gate_db);
    if spec > 0.0 && spec < floor {
        spec = 0.0;
        gating.below_power_gate += 1;
    }
    let keep_diffuse = !(diff > 0.0 && diff < floor);
    if !keep_diffuse {
        diff = 0.0;
        gating.below_power_gate += n_diff;
    }

    if let Some(d) = detail {
        if spec > 0.0 {
            let sp = pos.specular.expect("specular power implies a specular path");
            d.contributions.push(PathContribution {
                kind: PathKind::Specular,
                patch_id: None,
                power: spec,
                path_length: sp.length,
                excess_delay: (sp.length - origin) / SPEED_OF_LIGHT,
            });
        }
        if keep_diffuse {
            for (t, &p) in pos.tiles.iter().zip(scratch.iter()) {
                if p > 0.0 && (t.length - origin).abs() <= limit {
                    d.contributions.push(PathContribution {
                        kind: PathKind::Diffuse,
                        patch_id: Some(t.index),
                        power: p,
                        path_length: t.length,
                        excess_delay: (t.length - origin) / SPEED_OF_LIGHT,
                    });
                }
            }
        }
        d.gating = gating;
    }
    (spec, diff)
}
