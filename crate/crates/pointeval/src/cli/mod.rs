//! Batch front end: mode dispatch, report files, and the capacity cache.
//!
//! A run is deterministic given its configuration and cache state: reports
//! embed no clocks or machine identity, every f64 serializes in shortest
//! round-trip form, and a warm-cache rerun rewrites byte-identical files.

mod config;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cache::{CapacityCache, SOLVER_VERSION};
use crate::capacity::{estimate_capacity, CapacityEstimate, SolverParams};
use crate::criterion::{evaluate_criterion, evaluation_norm_probe, CriterionReport};
use crate::cutoff::{gns_ratio, product_energy_split, psi_gradient_energy, RadialBump};
use crate::error::{Error, Result};
use crate::geometry::PointCd;
use crate::grid::{Grid, ScalarField};
use crate::martinelli::{
    calibrate_orientation, cuboid_surface, divergence_residual, integrate_bm, sphere_surface,
    SurfacePatch, TestFunction,
};

pub use config::{
    CutoffSpec, DomainSpec, FamilySpec, MartinelliSpec, Mode, MonomialSpec, PresetSpec,
    ProbeSpec, RunConfig, ShapeSpec,
};
// the cache API is part of this front end's surface
pub use crate::cache::{CacheKey, CachedLevel};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub cache: Option<CapacityCache>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CapacityReport {
    schema: String,
    d: usize,
    q: f64,
    support_radius: f64,
    ladder: Vec<f64>,
    set_hash: String,
    estimate: CapacityEstimate,
    solver: SolverParams,
    solver_version: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct MartinelliReport {
    schema: String,
    d: usize,
    order: usize,
    orientation_sign: f64,
    kernel_integral_raw: f64,
    inside_point: Vec<f64>,
    inside_expected: [f64; 2],
    inside_integral: [f64; 2],
    inside_error: f64,
    outside_point: Vec<f64>,
    outside_magnitude: f64,
    divergence_step: f64,
    divergence_samples: usize,
    divergence_max_residual: f64,
    divergence_order_ratio_range: [f64; 2],
    near_singular: bool,
    solver_version: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct CutoffShellReport {
    n: u32,
    slope_bound: f64,
    max_slope_seen: f64,
    plateau_exact: bool,
    support_exact: bool,
    product_lhs: f64,
    product_rhs: f64,
    gradient_energy_2d: f64,
}

#[derive(Serialize, Deserialize)]
struct CutoffReport {
    schema: String,
    d: usize,
    q: f64,
    shells: Vec<CutoffShellReport>,
    gns_ratio_hat: f64,
    solver_version: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ProbeReport {
    schema: String,
    d: usize,
    p: f64,
    family_size: usize,
    grid_h: f64,
    nodes_in_domain: usize,
    value: f64,
    best_index: usize,
    member_ratios: Vec<f64>,
    solver_version: String,
    seed: u64,
}

/// Execute one mode and write its report files under `opts.out_dir`.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut outcome = RunOutcome { files: Vec::new(), warnings: Vec::new() };
    let seed = cfg.seed.unwrap_or(0);
    match cfg.mode {
        Mode::Criterion => {
            let crit = cfg.criterion_config()?;
            let domain = cfg.domain_set()?;
            let report = evaluate_criterion(&domain, &crit, opts.cache.as_ref())?;
            outcome.warnings.extend(report.notes.iter().cloned());
            let json_path = opts.out_dir.join("criterion.json");
            write_json(&json_path, &report)?;
            outcome.files.push(json_path);
            let csv_path = opts.out_dir.join("partial_sums.csv");
            emit_partial_sums(&report, &csv_path)?;
            outcome.files.push(csv_path);
        }
        Mode::Capacity => {
            let q = cfg.q.ok_or_else(|| Error::Config("capacity mode requires q".into()))?;
            let support = cfg
                .support_radius
                .ok_or_else(|| Error::Config("capacity mode requires support_radius".into()))?;
            let set = cfg.domain_set()?;
            let ladder = cfg.ladder.clone().unwrap_or_else(|| vec![cfg.h0.unwrap_or(0.125)]);
            let solver = cfg.solver.clone().unwrap_or_default();
            let estimate =
                estimate_capacity(&set, q, &ladder, support, &solver, opts.cache.as_ref())?;
            outcome.warnings.extend(estimate.warnings.iter().cloned());
            let report = CapacityReport {
        schema: crate::criterion::REPORT_SCHEMA.into(),
                d: cfg.d,
                q,
                support_radius: support,
                ladder,
                set_hash: set.canonical_hash(),
                estimate,
                solver,
                solver_version: SOLVER_VERSION.into(),
                seed,
            };
            let path = opts.out_dir.join("capacity.json");
            write_json(&path, &report)?;
            outcome.files.push(path);
        }
        Mode::MartinelliCheck => {
            let report = run_martinelli(cfg, seed)?;
            if report.near_singular {
                outcome.warnings.push("a probe point sits near the quadrature surface".into());
            }
            let path = opts.out_dir.join("martinelli.json");
            write_json(&path, &report)?;
            outcome.files.push(path);
        }
        Mode::CutoffCheck => {
            let report = run_cutoff(cfg, seed)?;
            let path = opts.out_dir.join("cutoff.json");
            write_json(&path, &report)?;
            outcome.files.push(path);
        }
        Mode::Probe => {
            let p = cfg.p.ok_or_else(|| Error::Config("probe mode requires p".into()))?;
            let spec = cfg
                .probe
                .as_ref()
                .ok_or_else(|| Error::Config("probe mode requires a probe section".into()))?;
            let domain = cfg.domain_set()?;
            let x = cfg.evaluation_point()?;
            let family = cfg.probe_family()?;
            let radius = spec.grid_radius.unwrap_or_else(|| {
                let (lo, hi) = domain.bbox();
                lo.iter()
                    .zip(hi)
                    .zip(x.coords())
                    .map(|((l, u), c)| (u - c).max(c - l).abs())
                    .fold(0.0f64, f64::max)
            });
            let grid =
                std::sync::Arc::new(Grid::cube(x.coords(), radius + spec.grid_h, spec.grid_h)?);
            let result = evaluation_norm_probe(&domain, &x, p, &family, &grid)?;
            let report = ProbeReport {
        schema: crate::criterion::REPORT_SCHEMA.into(),
                d: cfg.d,
                p,
                family_size: family.len(),
                grid_h: spec.grid_h,
                nodes_in_domain: result.nodes_in_domain,
                value: result.value,
                best_index: result.best_index,
                member_ratios: result.member_ratios,
                solver_version: SOLVER_VERSION.into(),
                seed,
            };
            let path = opts.out_dir.join("probe.json");
            write_json(&path, &report)?;
            outcome.files.push(path);
        }
    }
    Ok(outcome)
}

fn run_martinelli(cfg: &RunConfig, seed: u64) -> Result<MartinelliReport> {
    let spec = cfg
        .martinelli
        .as_ref()
        .ok_or_else(|| Error::Config("martinelli-check requires a martinelli section".into()))?;
    let d = cfg.d;
    let (mut surface, interior): (Vec<SurfacePatch>, PointCd) = match &spec.shape {
        ShapeSpec::Sphere { center, radius } => {
            let c = PointCd::new(center.clone())?;
            (sphere_surface(&c, *radius, spec.order)?, c)
        }
        ShapeSpec::Cuboid { lo, hi } => {
            let center: Vec<f64> = lo.iter().zip(hi).map(|(l, u)| 0.5 * (l + u)).collect();
            (cuboid_surface(lo, hi, spec.order)?, PointCd::new(center)?)
        }
    };
    let calibration = calibrate_orientation(&mut surface, &interior)?;

    let monomials = spec.polynomial.clone();
    let f = TestFunction::new("polynomial", move |p: &PointCd| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in &monomials {
            let mut v = Complex64::new(m.re, m.im);
            for (j, &k) in m.powers.iter().enumerate() {
                v *= p.complex(j).powu(k);
            }
            acc += v;
        }
        acc
    });

    let z_in = PointCd::new(spec.z_inside.clone())?;
    let z_out = PointCd::new(spec.z_outside.clone())?;
    let expected = f.eval(&z_in);
    let inside = integrate_bm(&f, &surface, &z_in)?;
    let outside = integrate_bm(&f, &surface, &z_out)?;

    // divergence battery on deterministic quasi-random directions
    let mut max_res: f64 = 0.0;
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = f64::NEG_INFINITY;
    for k in 0..spec.divergence_samples {
        let zeta = low_discrepancy_point(d, k, seed);
        let r1 = divergence_residual(&zeta, spec.divergence_step)?;
        let r2 = divergence_residual(&zeta, spec.divergence_step / 2.0)?;
        max_res = max_res.max(r1);
        if r2 > 1e-14 {
            let ratio = r1 / r2;
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }
    }

    Ok(MartinelliReport {
        schema: crate::criterion::REPORT_SCHEMA.into(),
        d,
        order: spec.order,
        orientation_sign: calibration.sign,
        kernel_integral_raw: calibration.kernel_integral,
        inside_point: spec.z_inside.clone(),
        inside_expected: [expected.re, expected.im],
        inside_integral: [inside.value.re, inside.value.im],
        inside_error: (inside.value - expected).norm(),
        outside_point: spec.z_outside.clone(),
        outside_magnitude: outside.value.norm(),
        divergence_step: spec.divergence_step,
        divergence_samples: spec.divergence_samples,
        divergence_max_residual: max_res,
        divergence_order_ratio_range: [ratio_lo, ratio_hi],
        near_singular: inside.near_singular || outside.near_singular,
        solver_version: SOLVER_VERSION.into(),
        seed,
    })
}

/// Deterministic direction sequence on radii in [0.5, 2]: a Weyl lattice
/// seeded additively, good enough to spread the divergence samples.
fn low_discrepancy_point(d: usize, k: usize, seed: u64) -> PointCd {
    let mut coords = vec![0.0; 2 * d];
    let golden = 0.618_033_988_749_894_9_f64;
    let base = (seed as f64 * golden).fract();
    let mut norm2 = 0.0;
    for (a, c) in coords.iter_mut().enumerate() {
        let t = ((k as f64 + 1.0) * golden * (a as f64 + 1.37) + base).fract();
        *c = 2.0 * t - 1.0;
        norm2 += *c * *c;
    }
    let radius = 0.5 + 1.5 * (((k as f64 + 0.5) * golden + base).fract());
    let scale = radius / norm2.sqrt();
    for c in coords.iter_mut() {
        *c *= scale;
    }
    PointCd::new(coords).expect("finite coordinates")
}

fn run_cutoff(cfg: &RunConfig, seed: u64) -> Result<CutoffReport> {
    let spec = cfg
        .cutoff
        .as_ref()
        .ok_or_else(|| Error::Config("cutoff-check requires a cutoff section".into()))?;
    let d = cfg.d;
    let x = cfg.evaluation_point()?;
    let two_d = (2 * d) as f64;
    let mut shells = Vec::new();
    for n in spec.n_min..=spec.n_max {
        let bump = RadialBump::new(x.clone(), n)?;
        let outer = bump.radii()[3];
        let h = 2.0 * outer / (spec.nodes_per_axis - 1) as f64;
        let grid = std::sync::Arc::new(Grid::cube(x.coords(), outer, h)?);
        // scan the profile for the slope bound and exact plateau/support
        let mut max_slope = 0.0f64;
        let mut plateau_exact = true;
        let mut support_exact = true;
        let [r0, r1, r2, r3] = bump.radii();
        for k in 0..=4096 {
            let rho = r3 * 1.25 * k as f64 / 4096.0;
            let (v, s) = bump.profile(rho);
            max_slope = max_slope.max(s.abs());
            if rho >= r1 && rho <= r2 && v != 1.0 {
                plateau_exact = false;
            }
            if (rho < r0 || rho > r3) && v != 0.0 {
                support_exact = false;
            }
        }
        // product split against the shell's capacity minimizer stand-in:
        // a smooth radial profile peaking on the middle shell
        let g = ScalarField::sample(grid.clone(), |c| {
            let rho: f64 =
                c.iter().zip(x.coords()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (1.0 - (rho / outer).powi(2)).max(0.0)
        });
        let (lhs, rhs) = product_energy_split(&g, n, &x, spec.q)?;
        let e2d = psi_gradient_energy(n, &x, grid, two_d)?;
        shells.push(CutoffShellReport {
            n,
            slope_bound: bump.max_slope(),
            max_slope_seen: max_slope,
            plateau_exact,
            support_exact,
            product_lhs: lhs,
            product_rhs: rhs,
            gradient_energy_2d: e2d,
        });
    }
    let hat_grid = std::sync::Arc::new(Grid::cube(x.coords(), 2.0, 1.0 / 32.0)?);
    let hat = ScalarField::sample(hat_grid, |c| {
        c.iter()
            .zip(x.coords())
            .map(|(a, b)| (1.0 - (a - b).abs()).max(0.0))
            .product()
    });
    let gns = gns_ratio(&hat, spec.q)?;
    Ok(CutoffReport {
        schema: crate::criterion::REPORT_SCHEMA.into(),
        d,
        q: spec.q,
        shells,
        gns_ratio_hat: gns,
        solver_version: SOLVER_VERSION.into(),
        seed,
    })
}

/// CSV table of the criterion series, full-precision decimals.
pub fn emit_partial_sums(report: &CriterionReport, path: &Path) -> Result<()> {
    let mut out = String::from("n,capacity,weight_log2,term,partial_sum,resolved\n");
    for s in &report.shells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.n, s.capacity, s.weight_log2, s.term, s.partial_sum, s.resolved
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// Serialize as pretty JSON with a trailing newline, atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl Error {
    /// Process exit status: 2 for configuration problems, 1 for numerical or
    /// environmental failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Serde(_) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_criterion_config() -> RunConfig {
        serde_json::from_str(
            r#"{
                "mode": "criterion",
                "d": 1,
                "p": 3.0,
                "n_max": 3,
                "h0": 0.125,
                "domain": { "preset": { "name": "unit-ball" } }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn criterion_run_writes_report_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_criterion_config();
        let opts = RunOptions { out_dir: dir.path().to_path_buf(), cache: None };
        let outcome = run(&cfg, &opts).unwrap();
        assert_eq!(outcome.files.len(), 2);
        let report: CriterionReport = serde_json::from_slice(
            &std::fs::read(dir.path().join("criterion.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report.shells.len(), 3);
        let csv = std::fs::read_to_string(dir.path().join("partial_sums.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,capacity,weight_log2,term,partial_sum,resolved");
        assert_eq!(csv.lines().count(), 4, "header plus one row per shell");
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = tiny_criterion_config();
        for dir in [&dir_a, &dir_b] {
            let opts = RunOptions { out_dir: dir.path().to_path_buf(), cache: None };
            run(&cfg, &opts).unwrap();
        }
        for name in ["criterion.json", "partial_sums.csv"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn malformed_config_maps_to_exit_2() {
        let err: Error = serde_json::from_str::<RunConfig>("{ nope").unwrap_err().into();
        assert_eq!(err.exit_code(), 2);
    }
}
