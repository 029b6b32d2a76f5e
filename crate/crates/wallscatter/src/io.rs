//! Text formats: scans (CSV), materials (one `key=value; ...` record per
//! line), scenes (TOML) and fit reports (key-value blocks with a CSV trace).
//!
//! Every reader skips lines starting with `#`, so output headers written by
//! the tool never need stripping. Errors carry 1-based line numbers.
//! Floats are written in the shortest form that parses back to the same
//! value, which keeps `read(write(x)) == x` exact.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use wallscatter_core::fitting::{FitReport, ModelComparison, Stage, TraceEntry};
use wallscatter_core::geometry::Wall;
use wallscatter_core::raytrace::SimulatedScan;
use wallscatter_core::{
    LobeParams, Material, MaterialDb, ModelKind, RadioLink, Scan, ScanPoint, ScanSpec, Scene, Vec3,
};

use crate::error::{AppError, Result};

pub const SCAN_COLUMNS: [&str; 3] = ["angle_deg", "delta_h_cm", "power_dbm"];
pub const SIMULATED_COLUMNS: [&str; 2] = ["specular_dbm", "diffuse_dbm"];

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

/// Shortest decimal that parses back to `x`; `inf`, `-inf` and `NaN` as Rust
/// prints them.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// `meters` as centimeters, chosen so that reading it back (cm / 100)
/// returns exactly `meters`. A few doubles have no such preimage; those get
/// the nearest one.
pub fn fmt_cm(meters: f64) -> String {
    let first = meters * 100.0;
    let mut candidates = vec![first];
    let (mut up, mut down) = (first, first);
    for _ in 0..4 {
        up = up.next_up();
        down = down.next_down();
        candidates.extend([up, down]);
    }
    for c in candidates {
        let s = fmt_f64(c);
        if s.parse::<f64>().map(|v| v / 100.0) == Ok(meters) {
            return s;
        }
    }
    fmt_f64(first)
}

fn parse_f64(origin: &str, line: u64, field: &str, text: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| AppError::parse(origin, line, format!("{field}: `{text}` is not a number")))
}

fn csv_error(origin: &str, e: csv::Error) -> AppError {
    let line = e.position().map_or(0, |p| p.line());
    AppError::parse(origin, line, e.to_string())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

/// Parses a measured or simulated scan table.
pub fn parse_scan(text: &str, origin: &str) -> Result<Scan> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    if header.is_empty() {
        return Err(AppError::input(origin, "empty file"));
    }
    let cols: Vec<&str> = header.iter().collect();
    let simulated: Vec<&str> = SCAN_COLUMNS.iter().chain(&SIMULATED_COLUMNS).copied().collect();
    if cols != SCAN_COLUMNS && cols != simulated {
        let line = header.position().map_or(1, |p| p.line());
        return Err(AppError::parse(
            origin,
            line,
            format!("expected header `{}`, found `{}`", SCAN_COLUMNS.join(","), cols.join(",")),
        ));
    }

    let mut points = Vec::new();
    let mut seen: HashMap<(u64, u64), u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let azimuth_deg = parse_f64(origin, line, "angle_deg", &rec[0])?;
        let delta_h = parse_f64(origin, line, "delta_h_cm", &rec[1])? / 100.0;
        let power_dbm = parse_f64(origin, line, "power_dbm", &rec[2])?;
        if !(-90.0..=90.0).contains(&azimuth_deg) {
            return Err(AppError::parse(origin, line, format!("angle {azimuth_deg} outside [-90, 90]")));
        }
        if !delta_h.is_finite() || !power_dbm.is_finite() {
            return Err(AppError::parse(origin, line, "height and power must be finite"));
        }
        let key = (azimuth_deg.to_bits(), (delta_h + 0.0).to_bits());
        if let Some(first) = seen.insert(key, line) {
            return Err(AppError::parse(
                origin,
                line,
                format!("duplicate position ({azimuth_deg}, {} cm), first given on line {first}", &rec[1]),
            ));
        }
        points.push(ScanPoint { azimuth_deg, delta_h, power_dbm });
    }
    if points.is_empty() {
        return Err(AppError::input(origin, "no scan records"));
    }
    Scan::new(points).map_err(|e| AppError::input(origin, e.to_string()))
}

pub fn read_scan(path: &Path) -> Result<Scan> {
    parse_scan(&read_text(path)?, &path.display().to_string())
}

pub fn format_scan(scan: &Scan) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(SCAN_COLUMNS).expect("in-memory write");
        for p in scan.points() {
            w.write_record([fmt_f64(p.azimuth_deg), fmt_cm(p.delta_h), fmt_f64(p.power_dbm)]).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(buf).expect("ascii output")
}

pub fn format_simulated_scan(sim: &SimulatedScan) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(SCAN_COLUMNS.iter().chain(&SIMULATED_COLUMNS)).expect("in-memory write");
        for r in &sim.records {
            w.write_record([
                fmt_f64(r.azimuth_deg),
                fmt_cm(r.delta_h),
                fmt_f64(r.total_dbm),
                fmt_f64(r.specular_dbm),
                fmt_f64(r.diffuse_dbm),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(buf).expect("ascii output")
}

/// Generic CSV table writer for sweeps and debug dumps.
pub fn format_table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(row).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(buf).expect("utf-8 output")
}

// Materials

/// Length with an optional `m`, `cm` or `mm` suffix; bare numbers are in
/// `default_unit`.
fn parse_length(origin: &str, line: u64, key: &str, value: &str, default_unit: &str) -> Result<f64> {
    let v = value.trim();
    let split = v.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(v.len());
    // A bare `e` could belong to an exponent; units never start with it.
    let (num, unit) = v.split_at(split);
    let unit = match unit.trim() {
        "" => default_unit,
        u => u,
    };
    let x = parse_f64(origin, line, key, num)?;
    match unit {
        "m" => Ok(x),
        "cm" => Ok(x / 100.0),
        "mm" => Ok(x / 1000.0),
        other => Err(AppError::parse(origin, line, format!("{key}: unknown unit `{other}`"))),
    }
}

pub fn parse_materials(text: &str, origin: &str) -> Result<MaterialDb> {
    let mut db = MaterialDb::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut name = None;
        let mut eps = None;
        let mut h = None;
        let mut t = None;
        for field in body.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| AppError::parse(origin, line, format!("expected key=value, found `{field}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let slot_taken = match key {
                "name" => name.replace(value.to_string()).is_some(),
                "eps_r" => eps.replace(parse_f64(origin, line, key, value)?).is_some(),
                "h_rms_mm" => h.replace(parse_length(origin, line, key, value, "mm")?).is_some(),
                "h_rms" => h.replace(parse_length(origin, line, key, value, "m")?).is_some(),
                "thickness_cm" => t.replace(parse_length(origin, line, key, value, "cm")?).is_some(),
                "thickness" => t.replace(parse_length(origin, line, key, value, "m")?).is_some(),
                other => return Err(AppError::parse(origin, line, format!("unknown key `{other}`"))),
            };
            if slot_taken {
                return Err(AppError::parse(origin, line, format!("`{key}` given twice")));
            }
        }
        let missing = |k: &str| AppError::parse(origin, line, format!("missing field `{k}`"));
        let m = Material::new(
            name.ok_or_else(|| missing("name"))?,
            eps.ok_or_else(|| missing("eps_r"))?,
            h.ok_or_else(|| missing("h_rms_mm"))?,
            t.ok_or_else(|| missing("thickness_cm"))?,
        )
        .map_err(|e| AppError::parse(origin, line, e.to_string()))?;
        db.insert(m).map_err(|e| AppError::parse(origin, line, e.to_string()))?;
    }
    if db.is_empty() {
        return Err(AppError::input(origin, "no materials defined"));
    }
    Ok(db)
}

pub fn read_materials(path: &Path) -> Result<MaterialDb> {
    parse_materials(&read_text(path)?, &path.display().to_string())
}

pub fn format_materials(db: &MaterialDb) -> String {
    db.iter()
        .map(|m| {
            format!(
                "name={}; eps_r={}; h_rms_mm={}; thickness_cm={}\n",
                m.name,
                fmt_f64(m.eps_r),
                fmt_f64(m.h_rms_mm()),
                fmt_f64(m.thickness_cm())
            )
        })
        .collect()
}

/// The four building surfaces as shipped in `data/materials.txt`.
pub const SHIPPED_MATERIALS: &str = include_str!("../data/materials.txt");

// Scenes

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    frequency_ghz: Option<f64>,
    theta_i_deg: Option<f64>,
    tx_distance_m: Option<f64>,
    tx: Option<[f64; 3]>,
    wall: WallSection,
    scan: Option<ScanSection>,
    link: Option<LinkSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallSection {
    material: String,
    center: Option<[f64; 3]>,
    normal: Option<[f64; 3]>,
    width_m: Option<f64>,
    height_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    radius_m: Option<f64>,
    step_deg: Option<f64>,
    start_deg: Option<f64>,
    end_deg: Option<f64>,
    heights_cm: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSection {
    p_t_dbm: Option<f64>,
    g_t_dbi: Option<f64>,
    g_r_dbi: Option<f64>,
}

/// Scene with its optional scan and link settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSetup {
    pub scene: Scene,
    pub scan: Option<ScanSpec>,
    pub link: RadioLink,
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

/// Parses a TOML scene. Give either `tx` or `theta_i_deg` (with optional
/// `tx_distance_m`, default 1.5); the latter places the transmitter in the
/// horizontal plane through the wall center.
pub fn parse_scene(text: &str, origin: &str) -> Result<SceneSetup> {
    let file: SceneFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
        AppError::parse(origin, line, e.message().to_string())
    })?;
    let frequency = file.frequency_ghz.unwrap_or(28.0) * 1e9;
    let w = &file.wall;
    let wall = Wall {
        center: vec3(w.center.unwrap_or([0.0, 0.0, 1.7])),
        normal: vec3(w.normal.unwrap_or([0.0, 1.0, 0.0])),
        width: w.width_m.unwrap_or(3.0),
        height: w.height_m.unwrap_or(3.0),
        material: w.material.clone(),
    };
    let tx = match (file.tx, file.theta_i_deg) {
        (Some(tx), None) => {
            if file.tx_distance_m.is_some() {
                return Err(AppError::input(origin, "tx_distance_m only applies with theta_i_deg"));
            }
            vec3(tx)
        }
        (None, Some(deg)) => {
            if !(0.0..90.0).contains(&deg) {
                return Err(AppError::input(origin, format!("theta_i_deg {deg} outside [0, 90)")));
            }
            let d = file.tx_distance_m.unwrap_or(1.5);
            let (u, _) = wall.axes();
            let th = deg.to_radians();
            wall.center + wall.normal * (d * th.cos()) + u * (d * th.sin())
        }
        _ => return Err(AppError::input(origin, "give exactly one of `tx` and `theta_i_deg`")),
    };
    let scene = Scene::new(wall, tx, frequency).map_err(|e| AppError::input(origin, e.to_string()))?;

    let scan = file.scan.map(|s| {
        let arc = ScanSpec::arc();
        ScanSpec {
            radius: s.radius_m.unwrap_or(arc.radius),
            azimuth_step_deg: s.step_deg.unwrap_or(arc.azimuth_step_deg),
            azimuth_start_deg: s.start_deg.unwrap_or(arc.azimuth_start_deg),
            azimuth_end_deg: s.end_deg.unwrap_or(arc.azimuth_end_deg),
            height_offsets: s.heights_cm.unwrap_or_else(|| vec![0.0]).iter().map(|h| h / 100.0).collect(),
        }
    });
    if let Some(spec) = &scan {
        spec.validate().map_err(|e| AppError::input(origin, e.to_string()))?;
    }
    let l = file.link.unwrap_or(LinkSection { p_t_dbm: None, g_t_dbi: None, g_r_dbi: None });
    let link =
        RadioLink::from_dbm(l.p_t_dbm.unwrap_or(10.0), l.g_t_dbi.unwrap_or(15.0), l.g_r_dbi.unwrap_or(15.0), frequency)
            .map_err(|e| AppError::input(origin, e.to_string()))?;
    Ok(SceneSetup { scene, scan, link })
}

pub fn read_scene(path: &Path) -> Result<SceneSetup> {
    parse_scene(&read_text(path)?, &path.display().to_string())
}

// Fit reports

/// One or more fit reports, plus the winner when two models were compared.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    pub reports: Vec<FitReport>,
    pub winner: Option<ModelKind>,
}

impl From<FitReport> for ReportFile {
    fn from(r: FitReport) -> Self {
        ReportFile { reports: vec![r], winner: None }
    }
}

impl From<ModelComparison> for ReportFile {
    fn from(c: ModelComparison) -> Self {
        ReportFile { reports: vec![c.single, c.dual], winner: Some(c.winner) }
    }
}

const TRACE_COLUMNS: [&str; 7] = ["round", "stage", "s", "alpha_r", "alpha_i", "lambda", "fvu"];

pub fn format_report(file: &ReportFile) -> String {
    let mut out = String::new();
    for r in &file.reports {
        let b = &r.best;
        out.push_str("[report]\n");
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("model", r.model.as_str().to_string());
        kv("plane_only", r.plane_only.to_string());
        kv("s_initial", fmt_f64(r.s_initial));
        kv("s", fmt_f64(b.s_coeff()));
        kv("alpha_r", b.alpha_r().get().to_string());
        if let (Some(ai), Some(l)) = (b.alpha_i(), b.lambda_mix()) {
            kv("alpha_i", ai.get().to_string());
            kv("lambda", fmt_f64(l));
        }
        kv("fvu", fmt_f64(r.fvu));
        kv("rounds", r.rounds().to_string());
        kv("converged", r.converged.to_string());
        kv("round_fvu", r.round_fvu.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "));
        kv("trace_rows", r.trace.len().to_string());
        out.push_str("\n[trace]\n");
        out.push_str(&format_table(
            &TRACE_COLUMNS,
            r.trace.iter().map(|e| {
                let p = &e.params;
                vec![
                    e.round.to_string(),
                    e.stage.as_str().to_string(),
                    fmt_f64(p.s_coeff()),
                    p.alpha_r().get().to_string(),
                    p.alpha_i().map_or(String::new(), |a| a.get().to_string()),
                    p.lambda_mix().map_or(String::new(), fmt_f64),
                    fmt_f64(e.fvu),
                ]
            }),
        ));
        out.push('\n');
    }
    if let Some(w) = file.winner {
        out.push_str(&format!("[comparison]\nwinner = {}\n", w.as_str()));
    }
    out
}

pub fn write_report(file: &ReportFile, path: &Path, header: &str) -> Result<()> {
    write_text(path, &format!("{header}{}", format_report(file)))
}

enum Section {
    None,
    Report,
    Trace,
    Comparison,
}

#[derive(Default)]
struct ReportDraft {
    keys: HashMap<String, (u64, String)>,
    trace: Vec<TraceEntry>,
    trace_header: bool,
    start: u64,
}

pub fn parse_report(text: &str, origin: &str) -> Result<ReportFile> {
    let mut drafts: Vec<ReportDraft> = Vec::new();
    let mut winner = None;
    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        match body {
            "[report]" => {
                drafts.push(ReportDraft { start: line, ..Default::default() });
                section = Section::Report;
                continue;
            }
            "[trace]" => {
                if !matches!(section, Section::Report) {
                    return Err(AppError::parse(origin, line, "[trace] must follow a [report] block"));
                }
                section = Section::Trace;
                continue;
            }
            "[comparison]" => {
                section = Section::Comparison;
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => return Err(AppError::parse(origin, line, "content outside any section")),
            Section::Report => {
                let (k, v) = body
                    .split_once('=')
                    .ok_or_else(|| AppError::parse(origin, line, format!("expected key = value, found `{body}`")))?;
                let d = drafts.last_mut().expect("inside a report");
                if d.keys.insert(k.trim().to_string(), (line, v.trim().to_string())).is_some() {
                    return Err(AppError::parse(origin, line, format!("`{}` given twice", k.trim())));
                }
            }
            Section::Trace => {
                let d = drafts.last_mut().expect("inside a report");
                let cells: Vec<&str> = body.split(',').map(str::trim).collect();
                if !d.trace_header {
                    if cells != TRACE_COLUMNS {
                        return Err(AppError::parse(origin, line, "unexpected trace header"));
                    }
                    d.trace_header = true;
                    continue;
                }
                d.trace.push(parse_trace_row(origin, line, &cells)?);
            }
            Section::Comparison => {
                let v = body
                    .strip_prefix("winner")
                    .and_then(|r| r.trim_start().strip_prefix('='))
                    .ok_or_else(|| AppError::parse(origin, line, "expected `winner = ...`"))?;
                winner = Some(parse_model(origin, line, v.trim())?);
            }
        }
    }
    if drafts.is_empty() {
        return Err(AppError::input(origin, "no [report] block"));
    }
    let reports = drafts.into_iter().map(|d| finish_report(origin, d)).collect::<Result<Vec<_>>>()?;
    Ok(ReportFile { reports, winner })
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    parse_report(&read_text(path)?, &path.display().to_string())
}

fn parse_model(origin: &str, line: u64, v: &str) -> Result<ModelKind> {
    v.parse::<ModelKind>().map_err(|e| AppError::parse(origin, line, e.to_string()))
}

fn parse_u8(origin: &str, line: u64, field: &str, v: &str) -> Result<u8> {
    v.parse::<u8>().map_err(|_| AppError::parse(origin, line, format!("{field}: `{v}` is not an integer")))
}

fn params(origin: &str, line: u64, s: f64, ar: u8, dual: Option<(u8, f64)>) -> Result<LobeParams> {
    let p = match dual {
        None => LobeParams::single(s, ar),
        Some((ai, l)) => LobeParams::dual(s, ar, ai, l),
    };
    p.map_err(|e| AppError::parse(origin, line, e.to_string()))
}

fn parse_trace_row(origin: &str, line: u64, cells: &[&str]) -> Result<TraceEntry> {
    if cells.len() != TRACE_COLUMNS.len() {
        return Err(AppError::parse(origin, line, format!("expected {} trace columns", TRACE_COLUMNS.len())));
    }
    let round = cells[0]
        .parse::<u32>()
        .map_err(|_| AppError::parse(origin, line, format!("round: `{}` is not an integer", cells[0])))?;
    let stage = match cells[1] {
        "shape" => Stage::Shape,
        "scattering" => Stage::Scattering,
        other => return Err(AppError::parse(origin, line, format!("unknown stage `{other}`"))),
    };
    let s = parse_f64(origin, line, "s", cells[2])?;
    let ar = parse_u8(origin, line, "alpha_r", cells[3])?;
    let dual = match (cells[4], cells[5]) {
        ("", "") => None,
        (ai, l) => Some((parse_u8(origin, line, "alpha_i", ai)?, parse_f64(origin, line, "lambda", l)?)),
    };
    Ok(TraceEntry {
        round,
        stage,
        params: params(origin, line, s, ar, dual)?,
        fvu: parse_f64(origin, line, "fvu", cells[6])?,
    })
}

fn finish_report(origin: &str, mut d: ReportDraft) -> Result<FitReport> {
    let start = d.start;
    let mut take =
        |k: &str| d.keys.remove(k).ok_or_else(|| AppError::parse(origin, start, format!("report is missing `{k}`")));
    let (l, model) = take("model")?;
    let model = parse_model(origin, l, &model)?;
    let bool_of = |(l, v): (u64, String)| match v.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(AppError::parse(origin, l, format!("`{v}` is not a boolean"))),
    };
    let plane_only = bool_of(take("plane_only")?)?;
    let converged = bool_of(take("converged")?)?;
    let num = |(l, v): (u64, String), k: &str| parse_f64(origin, l, k, &v);
    let s_initial = num(take("s_initial")?, "s_initial")?;
    let s = num(take("s")?, "s")?;
    let fvu = num(take("fvu")?, "fvu")?;
    let (l_ar, ar) = take("alpha_r")?;
    let ar = parse_u8(origin, l_ar, "alpha_r", &ar)?;
    let dual = match model {
        ModelKind::SingleLobe => None,
        ModelKind::DualLobe => {
            let (l, ai) = take("alpha_i")?;
            Some((parse_u8(origin, l, "alpha_i", &ai)?, num(take("lambda")?, "lambda")?))
        }
    };
    let best = params(origin, l_ar, s, ar, dual)?;
    let (l_rf, rf) = take("round_fvu")?;
    let round_fvu =
        rf.split_whitespace().map(|v| parse_f64(origin, l_rf, "round_fvu", v)).collect::<Result<Vec<_>>>()?;
    let (l_r, rounds) = take("rounds")?;
    if rounds.parse::<usize>().ok() != Some(round_fvu.len()) {
        return Err(AppError::parse(origin, l_r, "rounds does not match round_fvu"));
    }
    let (l_t, rows) = take("trace_rows")?;
    if rows.parse::<usize>().ok() != Some(d.trace.len()) {
        return Err(AppError::parse(origin, l_t, format!("trace_rows = {rows} but {} rows follow", d.trace.len())));
    }
    if let Some((k, (l, _))) = d.keys.iter().min_by_key(|(_, (l, _))| *l) {
        return Err(AppError::parse(origin, *l, format!("unknown key `{k}`")));
    }
    Ok(FitReport { model, best, fvu, s_initial, plane_only, round_fvu, converged, trace: d.trace })
}
