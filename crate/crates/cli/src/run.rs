//! The `run` subcommand: executes the tasks of a config in order and writes
//! one artifact per task plus `summary.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rectif::coefficients::{alpha_number_with, beta_number, write_sweep_csv, AlphaOptions, CKind, CoefficientSample};
use rectif::cubes::{build_christ_cubes, build_christ_cubes_with_unit, Cube, CubeTree};
use rectif::czdecomp::{cz_decompose, lambda_threshold, verify_cz};
use rectif::energies::{alpha_energy_with, beta_energy, carleson_energy, dini_profile, weak11_check, EnergyReport, PlaneSource, ScaleGrid, BOUNDED_SLOPE};
use rectif::wavelets::{build_basis, coefficients_of_g, loglog_slope, Placement};
use rectif::{build_measure, Ball, DiscreteMeasure};

use crate::config::{CoefSpec, ExperimentConfig, NuSpec, PlaneChoice, SweepKind, Task, TreeSpec};
use crate::summary::{Series, Status, Summary, TaskSummary, SCHEMA};
use crate::CliError;

/// `|a_I|` bound for cubes away from the sphere.

pub struct RunOutcome {
    pub summary: Summary,
    pub path: PathBuf,
}

pub fn run(config_path: &Path, out: Option<&Path>) -> Result<RunOutcome, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let out_dir = match (out, &cfg.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => base.join("out"),
    };
    std::fs::create_dir_all(&out_dir)?;
    let (generator, mu) = cfg.input.load(base)?;

    let mut tasks = Vec::with_capacity(cfg.tasks.len());
    for (i, task) in cfg.tasks.iter().enumerate() {
        let stem = format!("{:02}_{}", i + 1, task.name());
        let ts = match run_task(task, &mu, base, &out_dir, &stem) {
            Ok(ts) => ts,
            Err(e) => TaskSummary::failed(task.name(), e.to_string()),
        };
        tasks.push(ts);
    }
    let summary = Summary {
        schema: SCHEMA,
        generator,
        points: mu.len(),
        tasks,
    };
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(RunOutcome { summary, path })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `k` indices at the midpoints of `k` equal blocks of `0..len`.
fn sample_points(len: usize, k: usize) -> Vec<usize> {
    let k = k.min(len);
    (0..k).map(|j| ((2 * j + 1) * len) / (2 * k)).collect()
}

fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![hi];
    }
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

fn run_task(task: &Task, mu: &DiscreteMeasure, base: &Path, dir: &Path, stem: &str) -> Result<TaskSummary, CliError> {
    match task {
        Task::CoeffsSweep { kind, coef, points, t_min, t_max, scales, j_max, min_points, alpha } => {
            let samples = sweep(mu, *kind, coef, *points, *t_min, *t_max, *scales, (*j_max, *min_points, alpha))?;
            let file = format!("{stem}.csv");
            write_sweep_csv(create(dir, &file)?, mu.dim_ambient(), &samples)?;
            let mut ts = TaskSummary::new(task.name(), kind_name(*kind));
            let vals: Vec<f64> = samples.iter().map(|s| s.value).collect();
            ts.ratio("samples", samples.len() as f64);
            if !vals.is_empty() {
                ts.ratio("max_value", vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                ts.ratio("mean_value", vals.iter().sum::<f64>() / vals.len() as f64);
            }
            // largest value per scale
            let mut by_t: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
            for s in &samples {
                let e = by_t.entry(s.t.to_bits()).or_insert((s.t, f64::NEG_INFINITY));
                e.1 = e.1.max(s.value);
            }
            let (x, y) = by_t.into_values().unzip();
            ts.series.push(Series::new("max_over_points", x, y));
            ts.files.push(file);
            Ok(ts)
        }
        Task::Dini { coef, points, t_max, octaves, samples_per_octave } => {
            let kind = coef.to_kind()?;
            let idx = sample_points(mu.len(), *points);
            let file = format!("{stem}.csv");
            let mut wr = csv::Writer::from_writer(create(dir, &file)?);
            let d = mu.dim_ambient();
            let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
            header.extend(["slope", "energy", "bounded"].map(String::from));
            wr.write_record(&header)?;
            let mut slopes = Vec::new();
            for &i in &idx {
                let p = dini_profile(mu, mu.point(i), *t_max, *octaves, *samples_per_octave, &kind)?;
                let slope = p.slope();
                let mut row: Vec<String> = mu.point(i).iter().map(|v| v.to_string()).collect();
                row.push(slope.to_string());
                row.push(p.energy.last().copied().unwrap_or(0.0).to_string());
                row.push(u8::from(p.is_bounded()).to_string());
                wr.write_record(&row)?;
                slopes.push(slope);
            }
            wr.flush()?;
            let mut ts = TaskSummary::new(task.name(), kind.kind().as_str());
            let n = slopes.len().max(1) as f64;
            ts.ratio("points", slopes.len() as f64);
            ts.ratio("fraction_bounded", slopes.iter().filter(|&&s| s <= BOUNDED_SLOPE).count() as f64 / n);
            if !slopes.is_empty() {
                ts.ratio("max_slope", slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
            ts.series.push(Series::new("slope", (0..slopes.len()).map(|k| k as f64).collect(), slopes));
            ts.files.push(file);
            Ok(ts)
        }
        Task::Carleson { coef, tree, m } => {
            let kind = coef.to_kind()?;
            let t = build_tree(mu, tree)?;
            let r = root(&t, tree);
            let rep = carleson_energy(mu, &t, r, &kind, *m as usize)?;
            energy_summary(task.name(), kind.kind().as_str(), &rep, dir, stem)
        }
        Task::AlphaEnergy { tree, alpha } => {
            let t = build_tree(mu, tree)?;
            let rep = alpha_energy_with(mu, &t, root(&t, tree), alpha)?;
            energy_summary(task.name(), "alpha", &rep, dir, stem)
        }
        Task::BetaEnergy { tree, plane, alpha } => {
            let t = build_tree(mu, tree)?;
            let source = match plane {
                PlaneChoice::Beta2 => PlaneSource::Beta2,
                PlaneChoice::Alpha => PlaneSource::Alpha(alpha.clone()),
            };
            let rep = beta_energy(mu, &t, root(&t, tree), &source)?;
            let kind = match plane {
                PlaneChoice::Beta2 => "beta2",
                PlaneChoice::Alpha => "beta2_alpha_plane",
            };
            energy_summary(task.name(), kind, &rep, dir, stem)
        }
        Task::Cz { nu, lambda_factor } => {
            let nu = build_nu(nu, mu, base)?;
            let lambda = lambda_factor * lambda_threshold(&nu, mu);
            let res = cz_decompose(&nu, mu, lambda)?;
            let checks = verify_cz(&res, &nu, mu);
            let json_file = format!("{stem}.json");
            let mut text = serde_json::to_string_pretty(&res.to_json())?;
            text.push('\n');
            std::fs::write(dir.join(&json_file), text)?;
            let csv_file = format!("{stem}_checks.csv");
            let mut wr = csv::Writer::from_writer(create(dir, &csv_file)?);
            wr.write_record(["id", "name", "pass", "constant", "witness"])?;
            for c in &checks {
                wr.write_record([
                    c.id.to_string(),
                    c.name.clone(),
                    c.pass.to_string(),
                    c.constant.map(|v| v.to_string()).unwrap_or_default(),
                    c.witness.clone().unwrap_or_default(),
                ])?;
            }
            wr.flush()?;
            let mut ts = TaskSummary::new(task.name(), "cz");
            ts.ratio("lambda", lambda);
            ts.ratio("cubes", res.cubes.len() as f64);
            ts.ratio("checks_passed", checks.iter().filter(|c| c.pass).count() as f64);
            for c in &checks {
                if let Some(v) = c.constant {
                    ts.ratio(&format!("constant_{}", c.id), v);
                }
            }
            if let Some(bad) = checks.iter().find(|c| !c.pass) {
                ts.status = Status::VerificationFailed;
                ts.message = Some(format!("property {} ({}) failed", bad.id, bad.name));
            }
            ts.files.extend([json_file, csv_file]);
            Ok(ts)
        }
        Task::WaveletLemma { level_min, level_max, depth, n, coordinate, tol } => {
            let basis = build_basis(3, *depth, *n)?;
            let table = coefficients_of_g(&basis, *coordinate, *level_min..=*level_max)?;
            let file = format!("{stem}.csv");
            table.write_csv(create(dir, &file)?)?;
            let max_of = |p| table.level_maxima(p).values().copied().fold(0.0, f64::max);
            let (interior, exterior) = (max_of(Placement::Interior), max_of(Placement::Exterior));
            let boundary = table.level_maxima(Placement::Boundary);
            let mut ts = TaskSummary::new(task.name(), &format!("n{n}_i{coordinate}"));
            ts.ratio("interior_max", interior);
            ts.ratio("exterior_max", exterior);
            let fit = |pairs: Vec<(f64, f64)>| if pairs.len() >= 2 { Some(loglog_slope(&pairs)) } else { None };
            if let Some(s) = fit(boundary.range(3..).map(|(j, a)| (2f64.powi(-j), *a)).collect()) {
                ts.ratio("small_cube_exponent", s);
            }
            if let Some(s) = fit(boundary.range(..=-1).map(|(j, a)| (2f64.powi(-j), *a)).collect()) {
                ts.ratio("large_cube_exponent", s);
            }
            if interior > *tol || exterior > *tol {
                ts.status = Status::VerificationFailed;
                ts.message = Some(format!("coefficients away from the sphere reach {:.3e}", interior.max(exterior)));
            }
            let (x, y) = boundary.iter().map(|(j, a)| (*j as f64, *a)).unzip();
            ts.series.push(Series::new("boundary_max", x, y));
            ts.files.push(file);
            Ok(ts)
        }
        Task::Weak11 { nu, lambdas, t_max, octaves, samples_per_octave } => {
            let nu = build_nu(nu, mu, base)?;
            let grid = ScaleGrid::octaves(*t_max, *octaves, *samples_per_octave)?;
            let rep = weak11_check(mu, &nu, lambdas, &grid)?;
            let file = format!("{stem}.csv");
            let mut wr = csv::Writer::from_writer(create(dir, &file)?);
            wr.write_record(["lambda", "level_set", "bound"])?;
            for r in &rep.rows {
                wr.write_record([r.lambda.to_string(), r.level_set.to_string(), r.bound.to_string()])?;
            }
            wr.flush()?;
            let mut ts = TaskSummary::new(task.name(), "c");
            ts.ratio("k_emp", rep.k_emp);
            let (x, y) = rep.rows.iter().map(|r| (r.lambda, r.level_set)).unzip();
            ts.series.push(Series::new("level_set", x, y));
            ts.files.push(file);
            Ok(ts)
        }
    }
}

fn kind_name(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::C => "c",
        SweepKind::CSmooth => "csmooth",
        SweepKind::COmega => "comega",
        SweepKind::Beta1 => "beta1",
        SweepKind::Beta2 => "beta2",
        SweepKind::Alpha => "alpha",
    }
}

/// `alpha_cubes` is `(j_max, min_points, options)` for the α sweep.
fn sweep(
    mu: &DiscreteMeasure,
    kind: SweepKind,
    coef: &CoefSpec,
    points: usize,
    t_min: Option<f64>,
    t_max: Option<f64>,
    scales: usize,
    alpha_cubes: (i32, usize, &AlphaOptions),
) -> Result<Vec<CoefficientSample>, CliError> {
    if kind == SweepKind::Alpha {
        let (j_max, min_points, opts) = alpha_cubes;
        let tree = build_christ_cubes(mu, 0, j_max)?;
        let cubes: Vec<&Cube> = tree.cubes().filter(|q| q.members.len() >= min_points).collect();
        return cubes.iter().map(|q| alpha_number_with(mu, q, opts).map_err(CliError::from)).collect();
    }
    let lo = t_min.unwrap_or(4.0 * mu.resolution());
    let hi = t_max.unwrap_or(0.5 * mu.diameter());
    if !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Config(format!("scale range [{lo}, {hi}] is empty")));
    }
    let ts = log_spaced(lo, hi, scales);
    let ckind = match (kind, coef) {
        (SweepKind::C, _) => Some(CKind::C),
        (SweepKind::CSmooth, CoefSpec::CSmooth { n }) => Some(CKind::CSmooth(*n)),
        (SweepKind::CSmooth, _) => Some(CKind::CSmooth(1)),
        (SweepKind::COmega, c @ CoefSpec::COmega { .. }) => Some(c.to_kind()?),
        (SweepKind::COmega, _) => return Err(CliError::Config("comega sweep needs coef.kind = comega".into())),
        _ => None,
    };
    let mut out = Vec::with_capacity(points * ts.len());
    for i in sample_points(mu.len(), points) {
        let x = mu.point(i);
        for &t in &ts {
            let s = match (&ckind, kind) {
                (Some(k), _) => k.sample(mu, x, t)?,
                (None, SweepKind::Beta1) => beta_number(mu, &Ball::new(x.to_vec(), t)?, 1)?,
                (None, _) => beta_number(mu, &Ball::new(x.to_vec(), t)?, 2)?,
            };
            out.push(s);
        }
    }
    Ok(out)
}

fn build_tree(mu: &DiscreteMeasure, spec: &TreeSpec) -> Result<CubeTree, CliError> {
    Ok(match spec.unit {
        Some(u) => build_christ_cubes_with_unit(mu, spec.j_min, spec.j_max, u)?,
        None => build_christ_cubes(mu, spec.j_min, spec.j_max)?,
    })
}

fn root<'a>(tree: &'a CubeTree, spec: &TreeSpec) -> &'a Cube {
    match (spec.root_level, spec.root_point) {
        (None, None) => tree.root(),
        (level, point) => tree.cube_of(point.unwrap_or(0), level.unwrap_or(spec.j_min)),
    }
}

fn energy_summary(task: &str, kind: &str, rep: &EnergyReport, dir: &Path, stem: &str) -> Result<TaskSummary, CliError> {
    let file = format!("{stem}.csv");
    rep.write_csv(create(dir, &file)?)?;
    let mut ts = TaskSummary::new(task, kind);
    ts.ratio("ratio", rep.ratio());
    ts.ratio("total", rep.total);
    ts.ratio("normalization", rep.normalization);
    ts.ratio("degenerate_cubes", rep.degenerate as f64);
    let mut by_level: BTreeMap<i32, f64> = BTreeMap::new();
    for c in &rep.per_cube {
        *by_level.entry(c.id.level).or_default() += c.energy;
    }
    let (x, y) = by_level.into_iter().map(|(j, e)| (j as f64, e)).unzip();
    ts.series.push(Series::new("energy_by_level", x, y));
    ts.files.push(file);
    Ok(ts)
}

fn build_nu(spec: &NuSpec, mu: &DiscreteMeasure, base: &Path) -> Result<DiscreteMeasure, CliError> {
    match spec {
        NuSpec::Atoms(atoms) => {
            if let Some(&(i, _)) = atoms.iter().find(|a| a.0 >= mu.len()) {
                return Err(CliError::Config(format!("atom index {i} out of range (measure has {} points)", mu.len())));
            }
            let pts: Vec<Vec<f64>> = atoms.iter().map(|&(i, _)| mu.point(i).to_vec()).collect();
            let w: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            Ok(build_measure(&pts, &w, mu.dim_intrinsic())?)
        }
        NuSpec::Bump { from, to, factor } => {
            let f: Vec<f64> = (0..mu.len()).map(|i| if (*from..*to).contains(&i) { *factor } else { 1.0 }).collect();
            Ok(mu.multiply_density(&f)?)
        }
        NuSpec::Input(input) => Ok(input.load(base)?.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_points_are_block_midpoints() {
        assert_eq!(sample_points(10, 5), vec![1, 3, 5, 7, 9]);
        assert_eq!(sample_points(3, 10), vec![0, 1, 2]);
    }

    #[test]
    fn log_spaced_endpoints() {
        let v = log_spaced(0.1, 10.0, 3);
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert_eq!(log_spaced(0.1, 10.0, 1), vec![10.0]);
    }
}
