//! `wallscatter` command line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use wallscatter_core::fitting::{compare_models, grid_fit, FitOptions, SearchConfig};
use wallscatter_core::geometry::{image_path, patch_angles, scan_positions, BeamMask, MaskShape, Tiling};
use wallscatter_core::lobes::{pattern_sweep, Direction, PatternConfig, SweepS};
use wallscatter_core::materials::{initial_scattering_coefficient, scattering_bound};
use wallscatter_core::raytrace::Simulator;
use wallscatter_core::units::{deg_to_rad, rad_to_deg, watts_to_dbm};
use wallscatter_core::{
    IncidenceContext, LobeParams, MaterialDb, ModelKind, NormalizationMode, Polarization, RadioLink, ScanSpec, Scene,
    SimConfig,
};

use crate::error::{AppError, Result};
use crate::io::{self, ReportFile};

#[derive(Debug, Parser)]
#[command(name = "wallscatter", version, about = "Diffuse scattering from building surfaces at mmWave")]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Material name from the materials database.
    #[arg(long, global = true)]
    pub material: Option<String>,
    /// Materials file (`name=...; eps_r=...; h_rms_mm=...; thickness_cm=...` per line).
    #[arg(long, global = true)]
    pub materials_file: Option<PathBuf>,
    /// Scene file (TOML).
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Carrier frequency in GHz [default: 28, or the scene file's].
    #[arg(long, global = true)]
    pub freq_ghz: Option<f64>,
    /// Polarization used for the Fresnel coefficient.
    #[arg(long, global = true, value_enum, ignore_case = true, default_value = "TE")]
    pub pol: PolArg,
    /// Output path; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Lobe normalization.
    #[arg(long, global = true, value_enum, default_value = "hemisphere")]
    pub mode: ModeArg,
    /// Fit only the receptions at the transmitter height.
    #[arg(long, global = true)]
    pub plane_only: bool,
    /// Scattering model (`both` compares the two when fitting).
    #[arg(long, global = true, value_enum, default_value = "single")]
    pub model: ModelArg,
    /// Requested wall tile edge in meters.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub tiles_m: f64,
    /// Antenna gain mask.
    #[arg(long, global = true, value_enum, default_value = "flat")]
    pub mask: MaskArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolArg {
    #[value(name = "TE")]
    Te,
    #[value(name = "TM")]
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hemisphere,
    PaperLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Single,
    Dual,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskArg {
    Flat,
    Parabolic,
}

#[derive(Debug, Args)]
pub struct ThetaGrid {
    /// First incidence angle of the sweep (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub theta_start: f64,
    /// Last incidence angle of the sweep (degrees).
    #[arg(long, default_value_t = 89.0)]
    pub theta_end: f64,
    /// Sweep step (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub theta_step: f64,
}

#[derive(Debug, Args)]
pub struct LobeArgs {
    /// Scattering coefficient [default: theoretical value of the material].
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub alpha_r: u8,
    /// Backscatter lobe width (dual model).
    #[arg(long, default_value_t = 10)]
    pub alpha_i: u8,
    /// Forward/backscatter mix Λ (dual model).
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    /// Incidence angle at the wall center when no scene file is given [default: 30].
    #[arg(long)]
    pub theta_i: Option<f64>,
    /// Receiver circle radius in meters [default: 1.5, or the scene file's].
    #[arg(long)]
    pub radius: Option<f64>,
    /// Azimuth step in degrees [default: 10, or the scene file's].
    #[arg(long)]
    pub step: Option<f64>,
    /// Receiver height offsets in cm, comma separated [default: 0, or the scene file's].
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection and scattering coefficients versus incidence angle.
    Theory {
        #[command(flatten)]
        grid: ThetaGrid,
    },
    /// Scattered power of a unit patch toward the incident and specular directions.
    Pattern {
        #[command(flatten)]
        grid: ThetaGrid,
        #[command(flatten)]
        lobe: LobeArgs,
    },
    /// Simulated received power over an arc or semicylinder scan.
    Simulate {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        lobe: LobeArgs,
    },
    /// Fit lobe parameters to a measured scan.
    Fit {
        /// Scan file (`angle_deg,delta_h_cm,power_dbm`).
        #[arg(long)]
        scan: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Starting scattering coefficient [default: theoretical value].
        #[arg(long)]
        s_initial: Option<f64>,
        /// Search rounds before giving up (exit 3).
        #[arg(long, default_value_t = 10)]
        max_rounds: u32,
    },
    /// Scattering geometry at the wall center for every scan position.
    Angles {
        #[command(flatten)]
        layout: LayoutArgs,
    },
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Inputs whose digests go into the output header.
#[derive(Default)]
struct Inputs(Vec<(String, String)>);

impl Inputs {
    fn add(&mut self, path: &Path, bytes: &[u8]) {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let hex: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.0.push((name, format!("sha256:{hex}")));
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let text = io::read_text(path)?;
        self.add(path, text.as_bytes());
        Ok(text)
    }

    fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

/// `# wallscatter <version> config=<json> inputs=<json>`
fn header(config: &Value, inputs: &Inputs) -> String {
    format!("# wallscatter {} config={} inputs={}\n", env!("CARGO_PKG_VERSION"), config, inputs.to_json())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| AppError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

struct Context {
    db: MaterialDb,
    inputs: Inputs,
    pol: Polarization,
    mode: NormalizationMode,
}

fn polarization(p: PolArg) -> Polarization {
    match p {
        PolArg::Te => Polarization::Te,
        PolArg::Tm => Polarization::Tm,
    }
}

fn normalization(m: ModeArg) -> NormalizationMode {
    match m {
        ModeArg::Hemisphere => NormalizationMode::Hemisphere,
        ModeArg::PaperLine => NormalizationMode::PaperLine,
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

pub fn run(cli: &Cli) -> Result<()> {
    let sh = &cli.shared;
    let mut inputs = Inputs::default();
    let db = match &sh.materials_file {
        Some(path) => {
            let text = inputs.read(path)?;
            io::parse_materials(&text, &path.display().to_string())?
        }
        None => io::parse_materials(io::SHIPPED_MATERIALS, "builtin materials")?,
    };
    if let Some(name) = &sh.material {
        db.require(name)?;
    }
    if !(sh.tiles_m > 0.0 && sh.tiles_m.is_finite()) {
        return Err(usage("--tiles-m must be positive"));
    }
    let mut ctx = Context { db, inputs, pol: polarization(sh.pol), mode: normalization(sh.mode) };
    match &cli.command {
        Command::Theory { grid } => theory(sh, &mut ctx, grid),
        Command::Pattern { grid, lobe } => pattern(sh, &mut ctx, grid, lobe),
        Command::Simulate { layout, lobe } => simulate(sh, &mut ctx, layout, lobe),
        Command::Fit { scan, layout, s_initial, max_rounds } => {
            fit(sh, &mut ctx, scan, layout, *s_initial, *max_rounds)
        }
        Command::Angles { layout } => angles(sh, &mut ctx, layout),
    }
}

fn theta_grid(g: &ThetaGrid) -> Result<Vec<f64>> {
    if !(g.theta_step > 0.0 && g.theta_start <= g.theta_end) {
        return Err(usage("theta grid needs a positive step and start <= end"));
    }
    let n = ((g.theta_end - g.theta_start) / g.theta_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| g.theta_start + k as f64 * g.theta_step).collect())
}

fn grid_json(g: &ThetaGrid) -> Value {
    json!({"theta_start": g.theta_start, "theta_end": g.theta_end, "theta_step": g.theta_step})
}

fn frequency_hz(sh: &Shared) -> f64 {
    sh.freq_ghz.unwrap_or(28.0) * 1e9
}

fn selected_materials<'a>(sh: &Shared, db: &'a MaterialDb) -> Vec<&'a wallscatter_core::Material> {
    match &sh.material {
        Some(name) => db.get(name).into_iter().collect(),
        None => db.iter().collect(),
    }
}

fn theory(sh: &Shared, ctx: &mut Context, grid: &ThetaGrid) -> Result<()> {
    let thetas = theta_grid(grid)?;
    let freq = frequency_hz(sh);
    let mut rows = Vec::new();
    for m in selected_materials(sh, &ctx.db) {
        for &deg in &thetas {
            let c = IncidenceContext::at_frequency(deg_to_rad(deg), freq, ctx.pol)?;
            let b = initial_scattering_coefficient(m, &c)?;
            rows.push(vec![
                m.name.clone(),
                io::fmt_f64(deg),
                io::fmt_f64(b.gamma),
                io::fmt_f64(b.rayleigh_r),
                io::fmt_f64(b.gamma_rough),
                io::fmt_f64(b.s_coeff),
                io::fmt_f64(scattering_bound(b.rayleigh_r)),
                io::fmt_f64(b.transmission_t),
            ]);
        }
    }
    let config = json!({
        "command": "theory",
        "material": sh.material,
        "freq_ghz": freq / 1e9,
        "pol": ctx.pol.as_str(),
        "grid": grid_json(grid),
    });
    let table = io::format_table(
        &["material", "theta_i_deg", "gamma", "rayleigh_r", "gamma_rough", "s_coeff", "s_bound", "transmission_t"],
        rows,
    );
    emit(sh.out.as_deref(), &(header(&config, &ctx.inputs) + &table))
}

fn model_kind(sh: &Shared) -> Result<ModelKind> {
    match sh.model {
        ModelArg::Single => Ok(ModelKind::SingleLobe),
        ModelArg::Dual => Ok(ModelKind::DualLobe),
        ModelArg::Both => Err(usage("--model both only applies to `fit`")),
    }
}

fn lobe_params(kind: ModelKind, s: f64, lobe: &LobeArgs) -> Result<LobeParams> {
    let p = match kind {
        ModelKind::SingleLobe => LobeParams::single(s, lobe.alpha_r),
        ModelKind::DualLobe => LobeParams::dual(s, lobe.alpha_r, lobe.alpha_i, lobe.lambda),
    };
    p.map_err(|e| usage(e.to_string()))
}

fn params_json(p: &LobeParams) -> Value {
    json!({
        "model": p.model().as_str(),
        "s": p.s_coeff(),
        "alpha_r": p.alpha_r().get(),
        "alpha_i": p.alpha_i().map(|a| a.get()),
        "lambda": p.lambda_mix(),
    })
}

fn pattern(sh: &Shared, ctx: &mut Context, grid: &ThetaGrid, lobe: &LobeArgs) -> Result<()> {
    let kind = model_kind(sh)?;
    let thetas = theta_grid(grid)?;
    let link = RadioLink::from_dbm(10.0, 15.0, 15.0, frequency_hz(sh))?;
    let params = lobe_params(kind, lobe.s.unwrap_or(0.0), lobe)?;
    let cfg = PatternConfig {
        mode: ctx.mode,
        polarization: ctx.pol,
        s_source: if lobe.s.is_some() { SweepS::Params } else { SweepS::Material },
        ..PatternConfig::default()
    };
    let mut pattern_params = params_json(&params);
    if lobe.s.is_none() {
        pattern_params["s"] = Value::Null;
    }
    let mut rows = Vec::new();
    for m in selected_materials(sh, &ctx.db) {
        let sweep = pattern_sweep(m, &params, &link, &[Direction::Incident, Direction::Specular], &thetas, &cfg)?;
        for r in sweep {
            rows.push(vec![
                io::fmt_f64(r.theta_i_deg),
                r.direction.as_str().to_string(),
                io::fmt_f64(watts_to_dbm(r.p_r_w)),
                kind.as_str().to_string(),
                m.name.clone(),
                io::fmt_f64(r.s_coeff),
            ]);
        }
    }
    let config = json!({
        "command": "pattern",
        "material": sh.material,
        "freq_ghz": frequency_hz(sh) / 1e9,
        "pol": ctx.pol.as_str(),
        "mode": ctx.mode.as_str(),
        "params": pattern_params,
        "s_source": if lobe.s.is_some() { "fixed" } else { "material" },
        "r_i_m": cfg.r_i,
        "r_s_m": cfg.r_s,
        "surface_extent": "unit patch",
        "grid": grid_json(grid),
    });
    let table = io::format_table(&["theta_i_deg", "direction", "p_r_dbm", "model", "material", "s_coeff"], rows);
    emit(sh.out.as_deref(), &(header(&config, &ctx.inputs) + &table))
}

/// Scene, link and scan layout from either a scene file or the flags.
struct Layout {
    scene: Scene,
    link: RadioLink,
    spec: ScanSpec,
}

fn layout(sh: &Shared, ctx: &mut Context, args: &LayoutArgs) -> Result<Layout> {
    let (mut scene, link, file_spec) = match &sh.scene {
        Some(path) => {
            if args.theta_i.is_some() {
                return Err(usage("--theta-i conflicts with --scene; set theta_i_deg in the scene file"));
            }
            if sh.freq_ghz.is_some() {
                return Err(usage("--freq-ghz conflicts with --scene; set frequency_ghz in the scene file"));
            }
            let text = ctx.inputs.read(path)?;
            let setup = io::parse_scene(&text, &path.display().to_string())?;
            (setup.scene, setup.link, setup.scan)
        }
        None => {
            let material = sh.material.clone().ok_or_else(|| usage("--material or --scene is required"))?;
            let scene = Scene::with_layout(material, args.theta_i.unwrap_or(30.0), 1.5, 3.0, 3.0, frequency_hz(sh))
                .map_err(|e| usage(e.to_string()))?;
            let link = RadioLink::from_dbm(10.0, 15.0, 15.0, frequency_hz(sh))?;
            (scene, link, None)
        }
    };
    if let Some(name) = &sh.material {
        scene.wall.material = name.clone();
    }
    ctx.db.require(&scene.wall.material)?;
    let mut spec = file_spec.unwrap_or_else(ScanSpec::arc);
    if let Some(r) = args.radius {
        spec.radius = r;
    }
    if let Some(step) = args.step {
        spec.azimuth_step_deg = step;
    }
    if let Some(h) = &args.heights {
        spec.height_offsets = h.iter().map(|cm| cm / 100.0).collect();
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(Layout { scene, link, spec })
}

fn layout_json(l: &Layout) -> Value {
    let v = |p: wallscatter_core::Vec3| json!([p.x, p.y, p.z]);
    json!({
        "frequency_ghz": l.scene.carrier_frequency / 1e9,
        "tx": v(l.scene.tx),
        "wall": {
            "center": v(l.scene.wall.center),
            "normal": v(l.scene.wall.normal),
            "width_m": l.scene.wall.width,
            "height_m": l.scene.wall.height,
            "material": l.scene.wall.material,
        },
        "theta_i_deg": rad_to_deg(l.scene.incidence_angle()),
        "scan": {
            "radius_m": l.spec.radius,
            "step_deg": l.spec.azimuth_step_deg,
            "start_deg": l.spec.azimuth_start_deg,
            "end_deg": l.spec.azimuth_end_deg,
            "heights_cm": l.spec.height_offsets.iter().map(|h| h * 100.0).collect::<Vec<_>>(),
        },
        "link": {
            "p_t_w": l.link.p_t(),
            "g_t": l.link.g_t(),
            "g_r": l.link.g_r(),
        },
    })
}

fn sim_config(sh: &Shared, ctx: &Context) -> SimConfig {
    let beam = match sh.mask {
        MaskArg::Flat => BeamMask::default(),
        MaskArg::Parabolic => BeamMask::parabolic(),
    };
    SimConfig {
        tiling: Tiling { edge: sh.tiles_m },
        mode: ctx.mode,
        beam,
        polarization: ctx.pol,
        ..SimConfig::default()
    }
}

fn sim_json(c: &SimConfig) -> Value {
    json!({
        "tile_edge_m": c.tiling.edge,
        "mode": c.mode.as_str(),
        "pol": c.polarization.as_str(),
        "mask": {
            "shape": match c.beam.shape { MaskShape::Flat => "flat", MaskShape::Parabolic => "parabolic" },
            "hpbw_deg": c.beam.hpbw_deg,
            "outside_db": c.beam.outside_db,
        },
        "power_gate_db": c.power_gate_db,
        "path_gate_m": c.path_gate_m,
        "delay_gate_s": c.delay_gate_s,
        "surface_extent": "tile area",
    })
}

/// Theoretical S of the wall material at the scene's incidence angle.
fn theoretical_s(ctx: &Context, scene: &Scene) -> Result<f64> {
    let m = ctx.db.require(&scene.wall.material)?;
    let c = IncidenceContext::new(scene.incidence_angle(), scene.wavelength(), ctx.pol)?;
    Ok(initial_scattering_coefficient(m, &c)?.s_coeff)
}

fn simulate(sh: &Shared, ctx: &mut Context, args: &LayoutArgs, lobe: &LobeArgs) -> Result<()> {
    let kind = model_kind(sh)?;
    let l = layout(sh, ctx, args)?;
    let s = match lobe.s {
        Some(s) => s,
        None => theoretical_s(ctx, &l.scene)?,
    };
    let params = lobe_params(kind, s, lobe)?;
    let cfg = sim_config(sh, ctx);
    let sim = Simulator::new(l.scene.clone(), &ctx.db, l.link, cfg)?;
    let result = sim.simulate_scan(&l.spec, &params)?;
    let config = json!({
        "command": "simulate",
        "layout": layout_json(&l),
        "sim": sim_json(&cfg),
        "params": params_json(&params),
        "s_source": if lobe.s.is_some() { "fixed" } else { "material" },
    });
    emit(sh.out.as_deref(), &(header(&config, &ctx.inputs) + &io::format_simulated_scan(&result)))
}

fn fit(
    sh: &Shared,
    ctx: &mut Context,
    scan_path: &Path,
    args: &LayoutArgs,
    s_initial: Option<f64>,
    max_rounds: u32,
) -> Result<()> {
    let text = ctx.inputs.read(scan_path)?;
    let scan = io::parse_scan(&text, &scan_path.display().to_string())?;
    let l = layout(sh, ctx, args)?;
    let s0 = match s_initial {
        Some(s) => s,
        None => theoretical_s(ctx, &l.scene)?,
    };
    if !(s0 > 0.0 && s0 < 1.0) {
        return Err(AppError::input("s_initial", format!("{s0} is outside (0, 1)")));
    }
    let cfg = sim_config(sh, ctx);
    let sim = Simulator::new(l.scene.clone(), &ctx.db, l.link, cfg)?;
    let search = SearchConfig { max_rounds, ..SearchConfig::default() };
    search.validate().map_err(|e| usage(e.to_string()))?;
    let mut opts = FitOptions::new(ModelKind::SingleLobe, s0);
    opts.plane_only = sh.plane_only;
    opts.radius = l.spec.radius;
    opts.search = search;
    let file: ReportFile = match sh.model {
        ModelArg::Both => compare_models(&scan, &sim, &opts)?.into(),
        ModelArg::Single => grid_fit(&scan, &sim, &opts)?.into(),
        ModelArg::Dual => grid_fit(&scan, &sim, &FitOptions { model: ModelKind::DualLobe, ..opts })?.into(),
    };
    let config = json!({
        "command": "fit",
        "layout": layout_json(&l),
        "sim": sim_json(&cfg),
        "model": match sh.model { ModelArg::Single => "single", ModelArg::Dual => "dual", ModelArg::Both => "both" },
        "plane_only": sh.plane_only,
        "s_initial": s0,
        "s_initial_source": if s_initial.is_some() { "fixed" } else { "material" },
        "search": {
            "s_half_width": search.s_half_width,
            "s_step": search.s_step,
            "lambda_step": search.lambda_step,
            "max_rounds": search.max_rounds,
            "min_improvement": search.min_improvement,
            "tie_tolerance": search.tie_tolerance,
        },
    });
    emit(sh.out.as_deref(), &(header(&config, &ctx.inputs) + &io::format_report(&file)))?;
    match file.reports.iter().find(|r| !r.converged) {
        Some(r) => Err(AppError::FitNonConvergence { rounds: r.rounds() }),
        None => Ok(()),
    }
}

fn angles(sh: &Shared, ctx: &mut Context, args: &LayoutArgs) -> Result<()> {
    let l = layout(sh, ctx, args)?;
    let wall = &l.scene.wall;
    let mut rows = Vec::new();
    for p in scan_positions(&l.scene, &l.spec)? {
        let g = patch_angles(l.scene.tx, p.position, wall.center, wall.normal)?;
        let spec = image_path(l.scene.tx, p.position, wall);
        rows.push(vec![
            io::fmt_f64(p.azimuth_deg),
            io::fmt_cm(p.delta_h),
            io::fmt_f64(g.r_i),
            io::fmt_f64(g.r_s),
            io::fmt_f64(rad_to_deg(g.theta_i)),
            io::fmt_f64(rad_to_deg(g.theta_s)),
            io::fmt_f64(rad_to_deg(g.psi_r)),
            io::fmt_f64(rad_to_deg(g.psi_i)),
            spec.map_or(String::new(), |s| io::fmt_f64(s.length())),
        ]);
    }
    let config = json!({"command": "angles", "layout": layout_json(&l)});
    let table = io::format_table(
        &[
            "angle_deg",
            "delta_h_cm",
            "r_i",
            "r_s",
            "theta_i_deg",
            "theta_s_deg",
            "psi_r_deg",
            "psi_i_deg",
            "specular_length_m",
        ],
        rows,
    );
    emit(sh.out.as_deref(), &(header(&config, &ctx.inputs) + &table))
}
