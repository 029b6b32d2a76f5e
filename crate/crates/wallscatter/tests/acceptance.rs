//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when the set of failing criteria differs from `EXPECTED_FAIL`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use wallscatter::io::{parse_materials, SHIPPED_MATERIALS};
use wallscatter_core::fitting::{fvu, FitProblem};
use wallscatter_core::lobes::{pattern_sweep, Direction, PatternConfig};
use wallscatter_core::materials::{initial_scattering_coefficient, rayleigh_factor, scattering_bound};
use wallscatter_core::raytrace::Simulator;
use wallscatter_core::special::bessel_i0;
use wallscatter_core::{
    IncidenceContext, LobeParams, Material, MaterialDb, ModelKind, Polarization, RadioLink, Scan, ScanPoint, ScanSpec,
    Scene, SearchConfig, SimConfig,
};

/// Criteria that fail as implemented; the README has the analysis.
const EXPECTED_FAIL: &[u32] = &[8, 9];

const C: f64 = 3.0e8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn i0_series30(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

/// e^{-g} I0(g), each series term formed in log space so the scaling never
/// overflows.
fn scaled_i0_oracle(g: f64) -> f64 {
    if g == 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 0..2000u32 {
        let t = (2.0 * k as f64 * (g / 2.0).ln() - 2.0 * ln_factorial(k) - g).exp();
        sum += t;
        if k as f64 > g && t < sum * 1e-20 {
            break;
        }
    }
    sum
}

fn c1(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst_i0: f64 = 0.0;
    for k in 0..=2000 {
        let x = k as f64 * 0.01;
        worst_i0 = worst_i0.max(rel(bessel_i0(x).unwrap(), i0_series30(x)));
    }
    let mut worst_r: f64 = 0.0;
    for _ in 0..100 {
        let h = rng.random_range(0.0..3e-3);
        let theta = rng.random_range(0.0..89.0f64).to_radians();
        let lambda = C / rng.random_range(1e9..100e9);
        let g = 8.0 * (std::f64::consts::PI * h * theta.cos() / lambda).powi(2);
        worst_r = worst_r.max(rel(rayleigh_factor(h, theta, lambda).unwrap(), scaled_i0_oracle(g)));
    }
    // Frozen high-precision anchor: rough wall, 30°, 28 GHz.
    let r30 = rayleigh_factor(0.715e-3, 30f64.to_radians(), C / 28e9).unwrap();
    let anchor = rel(r30, 0.781_605_968_068_486_1);
    outcome(
        worst_i0 <= 1e-10 && worst_r <= 1e-9 && anchor <= 1e-9,
        format!("I0 max rel {worst_i0:.1e}, R max rel {worst_r:.1e} over 100 draws, R(30°) rel {anchor:.1e}"),
    )
}

fn c2(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = Material::new("m", rng.random_range(1.0..40.0), rng.random_range(0.0..3e-3), 0.1).unwrap();
        let pol = if rng.random_range(0..2) == 0 { Polarization::Te } else { Polarization::Tm };
        let theta = rng.random_range(0.0..89.9f64).to_radians();
        let ctx = IncidenceContext::at_frequency(theta, rng.random_range(1e9..300e9), pol).unwrap();
        let b = initial_scattering_coefficient(&m, &ctx).unwrap();
        worst = worst.max((b.s_coeff.powi(2) + b.gamma_rough.powi(2) - b.gamma.powi(2)).abs());
    }
    outcome(worst <= 1e-12, format!("max |S² + Γ_rough² − Γ²| = {worst:.1e} over 1000 draws"))
}

fn c3() -> Outcome {
    let table = [
        ("metal_sheet", 6.0, 0.170, 0.3),
        ("marble_wall", 6.2, 0.216, 15.0),
        ("smooth_wall", 5.8, 0.445, 25.0),
        ("rough_wall", 10.5, 0.715, 32.0),
    ];
    let db = parse_materials(SHIPPED_MATERIALS, "shipped").unwrap();
    let mut exact = 0;
    for (name, eps, h_mm, t_cm) in table {
        if let Some(m) = db.get(name) {
            exact += 1;
            exact += (m.eps_r == eps) as u32;
            exact += (m.h_rms_mm() == h_mm) as u32;
            exact += (m.thickness_cm() == t_cm) as u32;
        }
    }
    outcome(exact == 16 && db.len() == 4, format!("{exact}/16 cells exact, {} rows", db.len()))
}

fn c4() -> Outcome {
    let oracle = [(20.0, 0.660_458_184_121_212_1), (30.0, 0.623_772_483_105_598_9), (40.0, 0.569_142_262_273_865)];
    let rough = MaterialDb::building_surfaces().require("rough_wall").unwrap().clone();
    let mut worst: f64 = 0.0;
    let mut bound20 = 0.0;
    for (deg, want) in oracle {
        let r = rayleigh_factor(rough.h_rms, f64::to_radians(deg), C / 28e9).unwrap();
        let b = scattering_bound(r);
        if deg == 20.0 {
            bound20 = b;
        }
        worst = worst.max((b - want).abs());
    }
    let exceeds = 0.7462 > bound20;
    let readme =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap_or_default();
    let noted = readme.contains("0.7462");
    outcome(
        worst <= 1e-4 && exceeds && noted,
        format!(
            "max |bound − oracle| = {worst:.1e}; tabulated 0.7462 exceeds bound {bound20:.6} at 20°: {exceeds}; \
             README notes it: {noted}"
        ),
    )
}

fn scene_sim(material: &str, theta_deg: f64) -> Simulator {
    Simulator::new(
        Scene::measurement(material, theta_deg).unwrap(),
        &MaterialDb::building_surfaces(),
        RadioLink::measurement_default(),
        SimConfig::default(),
    )
    .unwrap()
}

fn tie_key(p: &LobeParams, prior: f64, s_initial: f64) -> [f64; 6] {
    [
        p.alpha_r().get() as f64,
        p.alpha_i().map_or(0.0, |a| a.get() as f64),
        p.lambda_mix().map_or(0.0, |l| (l - prior).abs()),
        (p.s_coeff() - s_initial).abs(),
        p.s_coeff(),
        p.lambda_mix().unwrap_or(0.0),
    ]
}

fn random_truth(rng: &mut ChaCha8Rng, model: ModelKind) -> LobeParams {
    let s = rng.random_range(1..=19) as f64 * 0.05;
    let s = (s * 1e12).round() / 1e12;
    let ar = rng.random_range(1..=10);
    match model {
        ModelKind::SingleLobe => LobeParams::single(s, ar).unwrap(),
        ModelKind::DualLobe => {
            LobeParams::dual(s, ar, rng.random_range(1..=10), rng.random_range(0..=10) as f64 / 10.0).unwrap()
        }
    }
}

fn c5(rng: &mut ChaCha8Rng) -> Outcome {
    let theta_deg = 30.0;
    let sim = scene_sim("rough_wall", theta_deg);
    let prior = (1.0 - theta_deg / 90.0f64).clamp(0.0, 1.0);
    let search = SearchConfig::default();
    let mut recovered = 0;
    let mut truth_in_zero_set = 0;
    let mut unique = 0;
    let mut offset_hits = 0;
    let mut failures = Vec::new();
    for i in 0..20 {
        let model = if i < 10 { ModelKind::SingleLobe } else { ModelKind::DualLobe };
        let truth = random_truth(rng, model);
        let scan = sim.simulate_scan(&ScanSpec::arc(), &truth).unwrap().to_scan().unwrap();
        let problem = FitProblem::new(&scan, &sim, 1.5, false).unwrap();
        let s0 = truth.s_coeff();

        // Exhaustive grid over everything the search may visit.
        let mut all = Vec::new();
        for s in search.s_grid(s0) {
            for p in search.shapes(model, s).unwrap() {
                all.push((p, problem.evaluate(&p).unwrap()));
            }
        }
        let min = all.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let ties: Vec<&(LobeParams, f64)> = all.iter().filter(|e| e.1 <= min + search.tie_tolerance).collect();
        let canonical = ties
            .iter()
            .min_by(|a, b| tie_key(&a.0, prior, s0).partial_cmp(&tie_key(&b.0, prior, s0)).unwrap())
            .unwrap()
            .0;
        unique += (ties.len() == 1) as u32;
        truth_in_zero_set += ties.iter().any(|e| e.0 == truth && e.1 == 0.0) as u32;

        let report = problem.fit(model, s0, &search).unwrap();
        if min == 0.0 && report.fvu == 0.0 && report.best == canonical {
            recovered += 1;
        } else {
            failures.push(format!("{truth:?} -> {:?} fvu {}", report.best, report.fvu));
        }

        // Informational: start the search off the true S.
        let offset = [-0.15, -0.1, 0.1, 0.15][i % 4];
        let start = ((s0 + offset).clamp(0.05, 0.95) * 1e12).round() / 1e12;
        let off = problem.fit(model, start, &search).unwrap();
        offset_hits += (off.fvu == 0.0) as u32;
    }
    for f in &failures {
        println!("    not recovered: {f}");
    }
    outcome(
        recovered == 20 && truth_in_zero_set == 20,
        format!(
            "{recovered}/20 recovered with FVU = 0 matching the grid oracle; truth in zero set {truth_in_zero_set}/20; \
             unique minimum {unique}/20, others tie-broken; offset-start recovery {offset_hits}/20 (info)"
        ),
    )
}

fn c6(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for _ in 0..200 {
        let n = rng.random_range(2..60);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(-90.0..-30.0)).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-90.0..-30.0)).collect();
        let mean = m.iter().sum::<f64>() / n as f64;
        let base = fvu(&m, &s).unwrap();
        exact &= fvu(&m, &m).unwrap() == 0.0;
        worst = worst.max((fvu(&m, &vec![mean; n]).unwrap() - 1.0).abs());
        let c = rng.random_range(-50.0..50.0);
        let k = rng.random_range(0.1..10.0);
        let shifted = fvu(&m.iter().map(|x| x + c).collect::<Vec<_>>(), &s.iter().map(|x| x + c).collect::<Vec<_>>());
        let scaled = fvu(&m.iter().map(|x| x * k).collect::<Vec<_>>(), &s.iter().map(|x| x * k).collect::<Vec<_>>());
        worst = worst.max((shifted.unwrap() - base).abs()).max((scaled.unwrap() - base).abs());
    }
    outcome(exact && worst <= 1e-12, format!("FVU(x, x) = 0: {exact}; max deviation {worst:.1e} over 200 vectors"))
}

fn c7() -> Outcome {
    let db = MaterialDb::building_surfaces();
    let link = RadioLink::measurement_default();
    let cfg = PatternConfig::default();
    let single = LobeParams::single(0.5, 4).unwrap();
    let dual = LobeParams::dual(0.5, 1, 10, 0.2).unwrap();
    let grid: Vec<f64> = (0..=50).map(|k| 60.0 + 0.5 * k as f64).collect();

    let mut decreasing = true;
    for m in db.iter() {
        for p in [&single, &dual] {
            let rows = pattern_sweep(m, p, &link, &[Direction::Specular], &grid, &cfg).unwrap();
            decreasing &= rows.windows(2).all(|w| w[1].p_r_w < w[0].p_r_w);
        }
    }

    let at30 = |name: &str| {
        let rows = pattern_sweep(db.get(name).unwrap(), &single, &link, &[Direction::Specular], &[30.0], &cfg);
        rows.unwrap()[0].p_r_w
    };
    let (rough, smooth, marble, metal) =
        (at30("rough_wall"), at30("smooth_wall"), at30("marble_wall"), at30("metal_sheet"));
    let ordered = rough > smooth && smooth >= marble && marble > metal;

    let mut gaps_ok = true;
    for m in db.iter() {
        let gap = |deg: f64| {
            let rows =
                pattern_sweep(m, &single, &link, &[Direction::Incident, Direction::Specular], &[deg], &cfg).unwrap();
            (10.0 * (rows[1].p_r_w / rows[0].p_r_w).log10()).abs()
        };
        gaps_ok &= gap(10.0) < gap(40.0);
    }
    outcome(
        decreasing && ordered && gaps_ok,
        format!(
            "specular power strictly decreasing on 60°–85°: {decreasing}; rough > smooth ≥ marble > metal at 30°: \
             {ordered}; single-lobe gap 10° < 40°: {gaps_ok}"
        ),
    )
}

fn c8() -> Outcome {
    let sim = scene_sim("metal_sheet", 30.0);
    let metal = MaterialDb::building_surfaces().require("metal_sheet").unwrap().clone();
    let ctx = IncidenceContext::at_frequency(30f64.to_radians(), 28e9, Polarization::Te).unwrap();
    let s = initial_scattering_coefficient(&metal, &ctx).unwrap().s_coeff;
    let result = sim.simulate_scan(&ScanSpec::arc(), &LobeParams::single(s, 4).unwrap()).unwrap();
    let dominant: Vec<f64> =
        result.records.iter().filter(|r| r.specular_dbm > r.diffuse_dbm).map(|r| r.azimuth_deg).collect();
    outcome(
        dominant.len() == result.records.len(),
        format!(
            "specular > diffuse at {}/{} arc positions (S = {s:.4}, α_R = 4): {dominant:?}",
            dominant.len(),
            result.records.len()
        ),
    )
}

struct PlaneVs3d {
    plane: LobeParams,
    plane_fvu: f64,
    full: LobeParams,
    full_fvu: f64,
    full_in_plane: f64,
}

impl PlaneVs3d {
    fn differ(&self) -> bool {
        self.plane != self.full
    }

    fn gap(&self) -> f64 {
        (self.full_in_plane - self.plane_fvu).abs()
    }
}

fn plane_vs_3d(sim: &Simulator, clean: &Scan, seed: u64) -> PlaneVs3d {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let noisy = Scan::new(
        clean.points().iter().map(|p| ScanPoint { power_dbm: p.power_dbm + rng.sample(noise), ..*p }).collect(),
    )
    .unwrap();
    let search = SearchConfig::default();
    // Tabulated theoretical S for the rough wall at 30°.
    let s0 = 0.6174;
    let plane = FitProblem::new(&noisy, sim, 1.5, true).unwrap();
    let full = FitProblem::new(&noisy, sim, 1.5, false).unwrap();
    let p = plane.fit(ModelKind::DualLobe, s0, &search).unwrap();
    let f = full.fit(ModelKind::DualLobe, s0, &search).unwrap();
    PlaneVs3d {
        full_in_plane: plane.evaluate(&f.best).unwrap(),
        plane: p.best,
        plane_fvu: p.fvu,
        full: f.best,
        full_fvu: f.fvu,
    }
}

fn short(p: &LobeParams) -> String {
    format!(
        "(S {}, α_R {}, α_i {}, Λ {})",
        p.s_coeff(),
        p.alpha_r().get(),
        p.alpha_i().map_or(0, |a| a.get()),
        p.lambda_mix().unwrap_or(1.0)
    )
}

/// Verdict on the noise realization fixed in advance (seed 1); seeds 1..=10
/// are surveyed for information.
fn c9() -> Outcome {
    let sim = scene_sim("rough_wall", 30.0);
    let truth = LobeParams::dual(0.6, 1, 10, 0.2).unwrap();
    let clean = sim.simulate_scan(&ScanSpec::semicylinder(), &truth).unwrap().to_scan().unwrap();
    let runs: Vec<PlaneVs3d> = (1..=10).map(|seed| plane_vs_3d(&sim, &clean, seed)).collect();
    let r = &runs[0];
    let differing = runs.iter().filter(|r| r.differ()).count();
    let max_gap = runs.iter().map(PlaneVs3d::gap).fold(0.0, f64::max);
    outcome(
        r.differ() && r.gap() <= 0.1,
        format!(
            "seed 1: plane-only {} FVU {:.4}; 3D {} FVU {:.4}, in-plane {:.4}, gap {:.4}; \
             seeds 1-10 (info): {differing}/10 differ, max gap {max_gap:.4}",
            short(&r.plane),
            r.plane_fvu,
            short(&r.full),
            r.full_fvu,
            r.full_in_plane,
            r.gap()
        ),
    )
}

fn c10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let status = Command::new(env!("CARGO_BIN_EXE_wallscatter")).current_dir(d).args(args).status().unwrap();
        status.code()
    };
    let sim = |out: &str| {
        run(&["simulate", "--material", "rough_wall", "--model", "dual", "--heights", "0,10,20,30", "--out", out])
    };
    let fit =
        |out: &str| run(&["fit", "--model", "both", "--material", "rough_wall", "--scan", "sim_a.csv", "--out", out]);
    let codes = [sim("sim_a.csv"), sim("sim_b.csv"), fit("fit_a.txt"), fit("fit_b.txt")];
    let read = |name: &str| std::fs::read(d.join(name)).unwrap_or_default();
    let sim_same = !read("sim_a.csv").is_empty() && read("sim_a.csv") == read("sim_b.csv");
    let fit_same = !read("fit_a.txt").is_empty() && read("fit_a.txt") == read("fit_b.txt");
    outcome(
        sim_same && fit_same && codes.iter().all(|c| *c == Some(0)),
        format!("exit codes {codes:?}; simulate identical: {sim_same}; fit identical: {fit_same}"),
    )
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;
    let mut r1 = rng.clone();
    let mut r2 = ChaCha8Rng::seed_from_u64(rng.random());
    let mut r5 = ChaCha8Rng::seed_from_u64(rng.random());
    let mut r6 = ChaCha8Rng::seed_from_u64(rng.random());
    let checks: Vec<(u32, &str, Option<u64>, Check)> = vec![
        (1, "special functions", Some(1), Box::new(|| c1(&mut r1))),
        (2, "scattering identity", Some(1), Box::new(|| c2(&mut r2))),
        (3, "material table", None, Box::new(c3)),
        (4, "scattering bound", None, Box::new(c4)),
        (5, "fit recovery", Some(60), Box::new(|| c5(&mut r5))),
        (6, "FVU identities", None, Box::new(|| c6(&mut r6))),
        (7, "pattern trends", Some(5), Box::new(c7)),
        (8, "metal specular dominance", Some(5), Box::new(c8)),
        (9, "plane-only vs 3D fit", Some(120), Box::new(c9)),
        (10, "determinism", None, Box::new(c10)),
    ];

    let mut failed = Vec::new();
    for (n, name, budget_s, check) in checks {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_budget = budget_s.is_none_or(|b| elapsed <= Duration::from_secs(b));
        let pass = o.pass && in_budget;
        let budget = budget_s.map_or(String::new(), |b| format!(" / {b} s"));
        let note = if !pass && EXPECTED_FAIL.contains(&n) { " (expected, see README)" } else { "" };
        println!(
            "criterion {n:>2} {}{note}: {name}: {} [{:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(n);
        }
    }
    if failed != EXPECTED_FAIL {
        println!("acceptance: failing set {failed:?} differs from the expected {EXPECTED_FAIL:?}");
        std::process::exit(1);
    }
    println!("acceptance: failing set matches the expected {EXPECTED_FAIL:?}");
}
