//! Goodness of fit and the staged grid search over lobe parameters.
//!
//! The search alternates two stages. Stage A holds `S` fixed and tries every
//! lobe shape on the grid; stage B holds the best shape fixed and sweeps `S`
//! around the theoretical starting value. Rounds repeat until the FVU stops
//! improving. Each distinct parameter set is simulated once and kept in the
//! trace.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::RxPosition;
pub use crate::lobes::ModelKind;
use crate::lobes::{LobeParams, WidthFactor};
use crate::raytrace::{ScanModel, Simulator, WidthSet};

/// One measured (or simulated) reception.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub azimuth_deg: f64,
    /// Height offset in meters.
    pub delta_h: f64,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    points: Vec<ScanPoint>,
}

impl Scan {
    pub fn new(points: Vec<ScanPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidScan("a scan needs at least two positions".to_string()));
        }
        let mut keys = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if !p.azimuth_deg.is_finite() || !p.delta_h.is_finite() || !p.power_dbm.is_finite() {
                return Err(Error::InvalidScan(alloc::format!("non-finite value in record {}", i + 1)));
            }
            let key = (p.azimuth_deg.to_bits(), (p.delta_h + 0.0).to_bits());
            if let Some(prev) = keys.insert(key, i) {
                return Err(Error::InvalidScan(alloc::format!(
                    "records {} and {} share azimuth {} and height offset {}",
                    prev + 1,
                    i + 1,
                    p.azimuth_deg,
                    p.delta_h
                )));
            }
        }
        Ok(Scan { points })
    }

    pub fn points(&self) -> &[ScanPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.power_dbm).collect()
    }

    /// The records taken in the incident plane (`Δh = 0`).
    pub fn plane_only(&self) -> Result<Scan> {
        let points: Vec<_> = self.points.iter().copied().filter(|p| p.delta_h == 0.0).collect();
        if points.is_empty() {
            return Err(Error::EmptyScan);
        }
        Scan::new(points)
    }
}

/// Fraction of variance unexplained, in the dB domain.
///
/// `sqrt(Σ(m - s)² / Σ(m - mean(m))²)`
pub fn fvu(measured: &[f64], simulated: &[f64]) -> Result<f64> {
    if measured.len() != simulated.len() {
        return Err(Error::LengthMismatch { measured: measured.len(), simulated: simulated.len() });
    }
    if measured.len() < 2 {
        return Err(Error::InvalidScan("FVU needs at least two values".to_string()));
    }
    let mean = measured.iter().sum::<f64>() / measured.len() as f64;
    let den: f64 = measured.iter().map(|m| (m - mean) * (m - mean)).sum();
    if !(den > 0.0) {
        return Err(Error::ConstantMeasurement);
    }
    let num: f64 = measured.iter().zip(simulated).map(|(m, s)| (m - s) * (m - s)).sum();
    Ok(libm::sqrt(num / den))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub s_half_width: f64,
    pub s_step: f64,
    pub lambda_step: f64,
    pub max_rounds: u32,
    /// Stop once a round improves the FVU by less than this.
    pub min_improvement: f64,
    /// FVUs closer than this are ties.
    pub tie_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            s_half_width: 0.15,
            s_step: 0.05,
            lambda_step: 0.1,
            max_rounds: 10,
            min_improvement: 1e-4,
            tie_tolerance: 1e-12,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.s_step > 0.0
            && self.s_half_width >= 0.0
            && self.lambda_step > 0.0
            && self.lambda_step <= 1.0
            && self.max_rounds >= 1
            && self.min_improvement >= 0.0
            && self.tie_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("search configuration out of range"))
        }
    }

    /// `S` values swept around `center`, restricted to (0, 1).
    pub fn s_grid(&self, center: f64) -> Vec<f64> {
        let n = libm::round(self.s_half_width / self.s_step) as i64;
        (-n..=n).map(|k| snap(center + k as f64 * self.s_step)).filter(|s| *s > 0.0 && *s < 1.0).collect()
    }

    /// `Λ` values from 0 to 1 inclusive.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let n = libm::round(1.0 / self.lambda_step).max(1.0) as u32;
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    /// Lobe shapes at a given `S`, in search order.
    pub fn shapes(&self, model: ModelKind, s: f64) -> Result<Vec<LobeParams>> {
        let mut out = Vec::new();
        for ar in WidthFactor::all() {
            match model {
                ModelKind::SingleLobe => out.push(LobeParams::single(s, ar.get())?),
                ModelKind::DualLobe => {
                    for ai in WidthFactor::all() {
                        for l in self.lambda_grid() {
                            out.push(LobeParams::dual(s, ar.get(), ai.get(), l)?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

// Grid arithmetic drifts in the last bit (0.3 + 0.05 != 0.35); snap to 1e-12.
fn snap(x: f64) -> f64 {
    libm::round(x * 1e12) / 1e12
}

/// Tie-break prior on `Λ`: mostly specular lobe near grazing, mostly
/// backscatter near normal incidence.
pub fn lambda_prior(theta_i: f64) -> f64 {
    (1.0 - theta_i / (core::f64::consts::PI / 2.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Shape,
    Scattering,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Shape => "shape",
            Stage::Scattering => "scattering",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub round: u32,
    pub stage: Stage,
    pub params: LobeParams,
    pub fvu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: ModelKind,
    pub best: LobeParams,
    pub fvu: f64,
    pub s_initial: f64,
    pub plane_only: bool,
    /// Best FVU after each round.
    pub round_fvu: Vec<f64>,
    pub converged: bool,
    /// Every distinct parameter set evaluated, in evaluation order.
    pub trace: Vec<TraceEntry>,
}

impl FitReport {
    pub fn rounds(&self) -> usize {
        self.round_fvu.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub model: ModelKind,
    pub s_initial: f64,
    pub search: SearchConfig,
    pub plane_only: bool,
    /// Receiver distance from the wall center used to place scan records.
    pub radius: f64,
}

impl FitOptions {
    pub fn new(model: ModelKind, s_initial: f64) -> Self {
        FitOptions { model, s_initial, search: SearchConfig::default(), plane_only: false, radius: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub single: FitReport,
    pub dual: FitReport,
    pub winner: ModelKind,
}

/// Scan and scene resolved into precomputed paths, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct FitProblem {
    scan: Scan,
    measured: Vec<f64>,
    model: ScanModel,
    prior: f64,
    plane_only: bool,
}

impl FitProblem {
    pub fn new(scan: &Scan, sim: &Simulator, radius: f64, plane_only: bool) -> Result<Self> {
        let scan = if plane_only { scan.plane_only()? } else { scan.clone() };
        let measured = scan.powers();
        let mean = measured.iter().sum::<f64>() / measured.len() as f64;
        if measured.iter().all(|m| *m == mean) {
            return Err(Error::ConstantMeasurement);
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidScanSpec("radius must be positive"));
        }
        let positions: Vec<RxPosition> = scan
            .points()
            .iter()
            .map(|p| RxPosition {
                azimuth_deg: p.azimuth_deg,
                delta_h: p.delta_h,
                position: sim.scene.rx_position(radius, p.azimuth_deg, p.delta_h),
            })
            .collect();
        for p in &positions {
            if sim.scene.wall.distance_in_front(p.position) < 0.0 {
                return Err(Error::InvalidScan(alloc::format!(
                    "position at azimuth {} lies behind the wall",
                    p.azimuth_deg
                )));
            }
        }
        let model = ScanModel::new(sim, &positions, WidthSet::all())?;
        Ok(FitProblem { scan, measured, model, prior: lambda_prior(sim.scene.incidence_angle()), plane_only })
    }

    pub fn scan(&self) -> &Scan {
        &self.scan
    }

    pub fn evaluate(&self, params: &LobeParams) -> Result<f64> {
        let mut sim = alloc::vec![0.0; self.measured.len()];
        let mut scratch = Vec::new();
        self.evaluate_with(params, &mut sim, &mut scratch)
    }

    fn evaluate_with(&self, params: &LobeParams, sim: &mut [f64], scratch: &mut Vec<f64>) -> Result<f64> {
        self.model.evaluate_dbm(params, sim, scratch)?;
        let v = fvu(&self.measured, sim)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }

    pub fn fit(&self, model: ModelKind, s_initial: f64, search: &SearchConfig) -> Result<FitReport> {
        self.fit_from(model, s_initial, search, None)
    }

    /// Like [`fit`](Self::fit) but stage A of the first round runs at the
    /// `S` of `start`, and `start` itself is evaluated first.
    pub fn fit_from(
        &self,
        model: ModelKind,
        s_initial: f64,
        search: &SearchConfig,
        start: Option<LobeParams>,
    ) -> Result<FitReport> {
        search.validate()?;
        if !(s_initial > 0.0 && s_initial < 1.0) {
            return Err(Error::Domain { what: "initial scattering coefficient", value: s_initial });
        }
        let mut search_state = Search {
            problem: self,
            memo: BTreeMap::new(),
            trace: Vec::new(),
            sim: alloc::vec![0.0; self.measured.len()],
            scratch: Vec::new(),
            s_initial,
            tol: search.tie_tolerance,
        };

        let mut s_cur = start.map_or(snap(s_initial), |p| p.s_coeff());
        let mut best: Option<(LobeParams, f64)> = None;
        if let Some(p) = start {
            let v = search_state.eval(p, 0, Stage::Shape)?;
            best = Some((p, v));
        }
        let mut round_fvu = Vec::new();
        let mut converged = false;
        let mut prev = f64::INFINITY;
        for round in 1..=search.max_rounds {
            let mut stage = best;
            for p in search.shapes(model, s_cur)? {
                let v = search_state.eval(p, round, Stage::Shape)?;
                stage = search_state.pick(stage, (p, v));
            }
            let shape = stage.expect("shape grid is never empty").0;
            for s in search.s_grid(s_initial) {
                let p = shape.with_s(s)?;
                let v = search_state.eval(p, round, Stage::Scattering)?;
                stage = search_state.pick(stage, (p, v));
            }
            let (p, v) = stage.expect("stage produced a candidate");
            best = Some((p, v));
            s_cur = p.s_coeff();
            round_fvu.push(v);
            let gain = prev - v;
            prev = v;
            if gain < search.min_improvement || v == 0.0 {
                converged = true;
                break;
            }
        }

        let (best, fvu) = best.expect("at least one round ran");
        Ok(FitReport {
            model,
            best,
            fvu,
            s_initial,
            plane_only: self.plane_only,
            round_fvu,
            converged,
            trace: search_state.trace,
        })
    }

    pub fn compare(&self, s_initial: f64, search: &SearchConfig) -> Result<ModelComparison> {
        let single = self.fit(ModelKind::SingleLobe, s_initial, search)?;
        // The dual model contains the single one at Λ = 1; start there.
        let b = single.best;
        let embedded = LobeParams::dual(b.s_coeff(), b.alpha_r().get(), 1, 1.0)?;
        let dual = self.fit_from(ModelKind::DualLobe, s_initial, search, Some(embedded))?;
        let winner =
            if dual.fvu < single.fvu - search.tie_tolerance { ModelKind::DualLobe } else { ModelKind::SingleLobe };
        Ok(ModelComparison { single, dual, winner })
    }
}

struct Search<'a> {
    problem: &'a FitProblem,
    memo: BTreeMap<[u64; 4], f64>,
    trace: Vec<TraceEntry>,
    sim: Vec<f64>,
    scratch: Vec<f64>,
    s_initial: f64,
    tol: f64,
}

impl Search<'_> {
    fn eval(&mut self, p: LobeParams, round: u32, stage: Stage) -> Result<f64> {
        let key = [
            p.s_coeff().to_bits(),
            p.alpha_r().get() as u64,
            p.alpha_i().map_or(0, |a| a.get() as u64),
            p.lambda_mix().map_or(u64::MAX, f64::to_bits),
        ];
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let v = self.problem.evaluate_with(&p, &mut self.sim, &mut self.scratch)?;
        self.memo.insert(key, v);
        self.trace.push(TraceEntry { round, stage, params: p, fvu: v });
        Ok(v)
    }

    fn pick(&self, cur: Option<(LobeParams, f64)>, cand: (LobeParams, f64)) -> Option<(LobeParams, f64)> {
        let Some(cur) = cur else { return Some(cand) };
        let better = if cand.1 < cur.1 - self.tol {
            true
        } else if cand.1 <= cur.1 + self.tol || cand.1 == cur.1 {
            self.tie_key(&cand.0) < self.tie_key(&cur.0)
        } else {
            false
        };
        Some(if better { cand } else { cur })
    }

    fn tie_key(&self, p: &LobeParams) -> TieKey {
        TieKey([
            p.alpha_r().get() as f64,
            p.alpha_i().map_or(0.0, |a| a.get() as f64),
            p.lambda_mix().map_or(0.0, |l| (l - self.problem.prior).abs()),
            (p.s_coeff() - self.s_initial).abs(),
            p.s_coeff(),
            p.lambda_mix().unwrap_or(0.0),
        ])
    }
}

#[derive(PartialEq)]
struct TieKey([f64; 6]);

impl PartialOrd for TieKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal),
        )
    }
}

/// Fits `scan` with the given options.
pub fn grid_fit(scan: &Scan, sim: &Simulator, opts: &FitOptions) -> Result<FitReport> {
    FitProblem::new(scan, sim, opts.radius, opts.plane_only)?.fit(opts.model, opts.s_initial, &opts.search)
}

/// Fits both lobe models to `scan` and names the better one.
pub fn compare_models(scan: &Scan, sim: &Simulator, opts: &FitOptions) -> Result<ModelComparison> {
    FitProblem::new(scan, sim, opts.radius, opts.plane_only)?.compare(opts.s_initial, &opts.search)
}
