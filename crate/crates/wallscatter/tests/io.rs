use wallscatter::io::{
    fmt_cm, format_materials, format_report, format_scan, parse_materials, parse_report, parse_scan, parse_scene,
    read_report, read_scan, write_report, write_text, ReportFile, SHIPPED_MATERIALS,
};
use wallscatter::AppError;
use wallscatter_core::fitting::{compare_models, grid_fit, FitOptions};
use wallscatter_core::geometry::{scan_positions, Tiling};
use wallscatter_core::raytrace::Simulator;
use wallscatter_core::{
    LobeParams, MaterialDb, ModelKind, RadioLink, Scan, ScanPoint, ScanSpec, Scene, SearchConfig, SimConfig,
};

fn line_of(err: AppError) -> u64 {
    match err {
        AppError::Parse { line, .. } => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

fn arc_text(heights_cm: &[f64]) -> String {
    let mut s = String::from("angle_deg,delta_h_cm,power_dbm\n");
    for h in heights_cm {
        for k in 0..19 {
            let a = -90 + 10 * k;
            s.push_str(&format!("{a},{h},{}\n", -60.0 - 0.1 * k as f64 - h));
        }
    }
    s
}

#[test]
fn arc_and_semicylinder_counts() {
    assert_eq!(parse_scan(&arc_text(&[0.0]), "arc").unwrap().len(), 19);
    assert_eq!(parse_scan(&arc_text(&[0.0, 5.0, 10.0, 15.0]), "cyl").unwrap().len(), 76);
}

#[test]
fn duplicate_row_names_its_line() {
    let mut text = arc_text(&[0.0]);
    text.push_str("30,0,-42\n");
    let err = parse_scan(&text, "dup").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("duplicate"), "{msg}");
    assert!(msg.contains("first given on line 14"), "{msg}");
    assert_eq!(line_of(err), 21);
}

#[test]
fn scan_reader_errors() {
    assert!(matches!(parse_scan("", "e").unwrap_err(), AppError::Input { .. }));
    assert!(matches!(parse_scan("angle_deg,delta_h_cm,power_dbm\n", "e").unwrap_err(), AppError::Input { .. }));
    assert_eq!(line_of(parse_scan("angle,dh,p\n0,0,1\n", "e").unwrap_err()), 1);
    let garbage = "angle_deg,delta_h_cm,power_dbm\n0,0,-50\n10,0,-51,extra\n";
    assert_eq!(line_of(parse_scan(garbage, "e").unwrap_err()), 3);
    let junk = "angle_deg,delta_h_cm,power_dbm\n0,0,-50\n10,0,-51dB\n";
    assert_eq!(line_of(parse_scan(junk, "e").unwrap_err()), 3);
    let wide = "angle_deg,delta_h_cm,power_dbm\n0,0,-50\n95,0,-51\n";
    assert_eq!(line_of(parse_scan(wide, "e").unwrap_err()), 3);
    let nan = "angle_deg,delta_h_cm,power_dbm\n0,0,NaN\n10,0,-51\n";
    assert_eq!(line_of(parse_scan(nan, "e").unwrap_err()), 2);
}

#[test]
fn comments_are_skipped() {
    let text = "# produced elsewhere\nangle_deg,delta_h_cm,power_dbm\n# mid\n0,0,-50\n10,0,-51\n";
    assert_eq!(parse_scan(text, "c").unwrap().len(), 2);
}

#[test]
fn scan_round_trip_is_exact() {
    let points = [
        (-90.0, 0.0, -61.234_567_890_123_45),
        (-10.0, 0.05, -1e-7),
        (0.0, 0.1, 0.1 + 0.2),
        (10.0, 0.15, -53.0),
        (33.3, -0.07, -1.0 / 3.0),
    ];
    let scan = Scan::new(
        points.iter().map(|&(azimuth_deg, delta_h, power_dbm)| ScanPoint { azimuth_deg, delta_h, power_dbm }).collect(),
    )
    .unwrap();
    let text = format_scan(&scan);
    assert!(text.starts_with("angle_deg,delta_h_cm,power_dbm\n"));
    assert!(!text.contains('\r'));
    assert_eq!(parse_scan(&text, "rt").unwrap(), scan);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    write_text(&path, &text).unwrap();
    assert_eq!(read_scan(&path).unwrap(), scan);
}

#[test]
fn centimeter_formatting_inverts_exactly() {
    // Any height that was itself read from centimeters.
    for k in -400..400 {
        let m = (k as f64 * 0.25) / 100.0;
        let cm: f64 = fmt_cm(m).parse().unwrap();
        assert_eq!(cm / 100.0, m);
    }
    for m in [0.05, 0.1, 0.15, 0.07, 1e-3, 0.333] {
        assert_eq!(fmt_cm(m).parse::<f64>().unwrap() / 100.0, m);
    }
}

#[test]
fn shipped_materials_hold_table_values() {
    let db = parse_materials(SHIPPED_MATERIALS, "shipped").unwrap();
    assert_eq!(db.len(), 4);
    let h: Vec<f64> = db.iter().map(|m| m.h_rms_mm()).collect();
    assert_eq!(h, [0.170, 0.216, 0.445, 0.715]);
    assert_eq!(parse_materials(&format_materials(&db), "rt").unwrap(), db);
}

#[test]
fn material_units() {
    let db = parse_materials("name=w; eps_r=5; h_rms=0.3 mm; thickness=32 cm\n", "u").unwrap();
    let m = db.get("w").unwrap();
    assert_eq!(m.thickness, 0.32);
    assert_eq!(m.h_rms, 0.0003);
    let db = parse_materials("name=w; eps_r=5; h_rms_mm=2; thickness_cm=0.5 m\n", "u").unwrap();
    assert_eq!(db.get("w").unwrap().thickness, 0.5);
}

#[test]
fn material_errors() {
    let bad = |t: &str| line_of(parse_materials(t, "bad").unwrap_err());
    assert_eq!(bad("# c\nname=w; eps_r=0.5; h_rms_mm=1; thickness_cm=1\n"), 2);
    assert_eq!(bad("name=w; eps_r=5; h_rms_mm=1; thickness_cm=1; colour=red\n"), 1);
    assert_eq!(bad("name=w; eps_r=5; h_rms_mm=1\n"), 1);
    assert_eq!(bad("name=w; eps_r=five; h_rms_mm=1; thickness_cm=1\n"), 1);
    assert_eq!(bad("name=w; eps_r=5; eps_r=6; h_rms_mm=1; thickness_cm=1\n"), 1);
    assert_eq!(bad("name=w; eps_r=5; h_rms_mm=1; thickness_cm=1 furlong\n"), 1);
    assert_eq!(bad("name=w; eps_r=5; h_rms_mm=1; thickness_cm=1 trailing\n"), 1);
    assert_eq!(bad("name=w; eps_r=5; h_rms_mm=1; thickness_cm=1\nname=w; eps_r=5; h_rms_mm=1; thickness_cm=1\n"), 2);
}

#[test]
fn scene_from_angle_matches_measurement_layout() {
    let setup = parse_scene("theta_i_deg = 30\n[wall]\nmaterial = \"rough_wall\"\n", "s").unwrap();
    let reference = Scene::measurement("rough_wall", 30.0).unwrap();
    assert!((setup.scene.tx - reference.tx).norm() < 1e-12);
    assert_eq!(setup.scan, None);
    assert_eq!(setup.link, RadioLink::measurement_default());
}

#[test]
fn scene_with_scan_and_link() {
    let text = r#"
frequency_ghz = 28
tx = [-0.75, 1.299038105676658, 1.7]

[wall]
material = "marble_wall"
width_m = 4

[scan]
heights_cm = [0, 5, 10, 15]

[link]
p_t_dbm = 0
"#;
    let setup = parse_scene(text, "s").unwrap();
    assert_eq!(setup.scene.wall.width, 4.0);
    let spec = setup.scan.unwrap();
    assert_eq!(spec.height_offsets, [0.0, 0.05, 0.1, 0.15]);
    assert_eq!(scan_positions(&setup.scene, &spec).unwrap().len(), 76);
    assert_eq!(setup.link.p_t(), 1e-3);
}

#[test]
fn scene_errors() {
    let err = parse_scene("theta_i_deg = 30\nbogus = 1\n[wall]\nmaterial = \"x\"\n", "s").unwrap_err();
    assert_eq!(line_of(err), 2);
    assert!(matches!(parse_scene("[wall]\nmaterial = \"x\"\n", "s").unwrap_err(), AppError::Input { .. }));
    let both = "theta_i_deg = 30\ntx = [0, 1, 1.7]\n[wall]\nmaterial = \"x\"\n";
    assert!(matches!(parse_scene(both, "s").unwrap_err(), AppError::Input { .. }));
}

fn small_sim() -> (Simulator, Scan) {
    let scene = Scene::measurement("rough_wall", 30.0).unwrap();
    let config = SimConfig { tiling: Tiling { edge: 0.3 }, ..SimConfig::default() };
    let sim =
        Simulator::new(scene, &MaterialDb::building_surfaces(), RadioLink::measurement_default(), config).unwrap();
    let truth = LobeParams::dual(0.45, 3, 8, 0.4).unwrap();
    let scan = sim.simulate_scan(&ScanSpec::arc(), &truth).unwrap().to_scan().unwrap();
    (sim, scan)
}

#[test]
fn report_round_trip_is_exact() {
    let (sim, scan) = small_sim();
    let single = grid_fit(&scan, &sim, &FitOptions::new(ModelKind::SingleLobe, 0.5)).unwrap();
    let file = ReportFile::from(single.clone());
    let text = format_report(&file);
    let back = parse_report(&text, "r").unwrap();
    assert_eq!(back, file);
    assert_eq!(back.reports[0].trace.len(), single.trace.len());

    let both = ReportFile::from(compare_models(&scan, &sim, &FitOptions::new(ModelKind::SingleLobe, 0.5)).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    write_report(&both, &path, "# header\n").unwrap();
    assert_eq!(read_report(&path).unwrap(), both);
}

#[test]
fn report_keeps_initial_and_best_s_apart() {
    let (sim, scan) = small_sim();
    let mut opts = FitOptions::new(ModelKind::DualLobe, 0.6);
    opts.search = SearchConfig { max_rounds: 3, ..SearchConfig::default() };
    let text = format_report(&grid_fit(&scan, &sim, &opts).unwrap().into());
    assert!(text.contains("\ns_initial = 0.6\n"), "{text}");
    assert!(text.contains("\ns = "), "{text}");
}

#[test]
fn report_rejects_tampering() {
    let (sim, scan) = small_sim();
    let text = format_report(&grid_fit(&scan, &sim, &FitOptions::new(ModelKind::SingleLobe, 0.5)).unwrap().into());

    let extra = text.replacen("fvu = ", "colour = red\nfvu = ", 1);
    assert!(matches!(parse_report(&extra, "r").unwrap_err(), AppError::Parse { .. }));

    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    lines.pop();
    let short = lines.join("\n");
    assert!(parse_report(&short, "r").is_err());
}
