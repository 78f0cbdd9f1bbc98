//! Subcommand implementations. Each one reads every knob it needs up front,
//! rejects unused keys, runs, then writes its artifacts. The returned string
//! goes to stdout.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use repgap_core::diffusion::{endpoint_orbit_distances, max_angular_gap};
use repgap_core::groups::OrbitVolume;
use repgap_core::io::{format_f64, read_cloud, write_cloud};
use repgap_core::quantize::optimal_gap;
use repgap_core::repgap::{
    gap_on_points, gap_with_metric, optimal_gap_curve, prediction_space, random_gap_curve,
    CurvePoint,
};
use repgap_core::rng::{seeded, stream};
use repgap_core::scaling::{effective_sample_size, fit_loglog_dropping};
use repgap_core::{
    GapEstimate, GapMode, GroupKind, GroupSpec, ManifoldSpec, NnIndex, PointCloud, ScalingFit,
    Schedule, ScoreField, ZadorConstants,
};
use serde_json::{json, Value};

use crate::args::Command;
use crate::build;
use crate::config::{Config, SeedList};
use crate::error::{file_error, CliError, Context, Result};
use crate::output::{cell, ensure_dir, metadata, write_config, write_json, Table};

pub fn run(command: &Command) -> Result<String> {
    let cfg = command.knobs().to_config()?;
    match command {
        Command::Sample(_) => sample(&cfg),
        Command::Quantize(_) => quantize(&cfg),
        Command::Gap(_) => gap(&cfg),
        Command::Scaling(_) => scaling(&cfg),
        Command::Dimfit(_) => dimfit(&cfg),
        Command::Diffuse(_) => diffuse(&cfg),
        Command::Constants(_) => constants(&cfg),
    }
}

fn positive(cfg: &Config, key: &str, default: Option<usize>) -> Result<usize> {
    let v: usize = match default {
        Some(d) => cfg.get(key, d)?,
        None => cfg.require(key)?,
    };
    if v == 0 {
        return Err(CliError::config(format!("{key} must be at least 1")));
    }
    Ok(v)
}

fn load_cloud(path: &Path) -> Result<PointCloud> {
    read_cloud(path).map_err(file_error(path))
}

fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_cloud(path, cloud).map_err(file_error(path))
}

fn hypotheses(spec: Option<&ManifoldSpec>, group: &GroupSpec) -> Value {
    let mut notes = Vec::new();
    if group.orbit_volume() == OrbitVolume::Varying {
        notes.push(
            "orbit lengths vary over the manifold: scaling constants that assume a common orbit volume do not apply",
        );
    }
    let quotient_dim = spec.map(|s| {
        s.intrinsic_dim()
            .saturating_sub(group.quotient_dim_reduction())
    });
    json!({
        "manifold": spec.map(|s| s.kind().name()),
        "group": group.name(),
        "intrinsic_dim": spec.map(|s| s.intrinsic_dim()),
        "quotient_dim": quotient_dim,
        "predicted_slope": quotient_dim.filter(|&d| d > 0).map(|d| -2.0 / d as f64),
        "orbit_volume": build::orbit_volume_label(group),
        "notes": notes,
    })
}

/// Adds `fields` to a metadata object.
fn document(mut meta: Value, fields: Value) -> Value {
    if let (Value::Object(m), Value::Object(f)) = (&mut meta, fields) {
        m.extend(f);
    }
    meta
}

fn estimate_json(e: &GapEstimate) -> Value {
    json!({
        "value": e.value,
        "std_error": e.std_error,
        "n_dataset": e.n_dataset,
        "n_eval": e.n_eval,
        "seed": e.seed,
        "mode": e.mode.as_str(),
        "metric": e.metric.as_str(),
    })
}

fn fit_json(f: &ScalingFit) -> Value {
    json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "estimated_dim": f.estimated_dim,
        "points_used": f.points_used,
    })
}

fn sample(cfg: &Config) -> Result<String> {
    let spec = build::manifold(cfg)?;
    let n = positive(cfg, "n", None)?;
    let seed: u64 = cfg.get("seed", 0)?;
    let out = cfg.require_location("out")?;
    cfg.check_all_used()?;
    let cloud = spec
        .sample_uniform(n, seed)
        .context(|| format!("sampling {n} points"))?;
    save_cloud(&out, &cloud)?;
    Ok(format!("wrote {n} points to {}\n", out.display()))
}

fn quantize(cfg: &Config) -> Result<String> {
    let spec = build::manifold(cfg)?;
    let group = build::group(cfg, spec.ambient_dim(), Some(&spec))?;
    let n = positive(cfg, "n", None)?;
    let seed: u64 = cfg.get("seed", 0)?;
    let opts = build::optimal_options(cfg)?;
    let out = cfg.require_location("out")?;
    cfg.check_all_used()?;

    let (est, q) =
        optimal_gap(&spec, &group, n, seed, opts).context(|| format!("quantizing with n = {n}"))?;
    ensure_dir(&out)?;
    save_cloud(&out.join("centroids.csv"), &q.centroids)?;
    let doc = document(
        metadata("quantize", cfg, hypotheses(Some(&spec), &group)),
        json!({
            "estimate": estimate_json(&est),
            "iterations": q.iterations,
            "converged": q.converged,
            "error_history": q.error_history,
        }),
    );
    write_json(&out.join("quantize.json"), &doc)?;
    write_config(&out, cfg)?;
    Ok(format!("quantization error {}\n", format_f64(est.value)))
}

fn gap(cfg: &Config) -> Result<String> {
    let spec = build::manifold(cfg)?;
    let group = build::group(cfg, spec.ambient_dim(), Some(&spec))?;
    let seed: u64 = cfg.get("seed", 0)?;
    let mode = build::mode(cfg)?;
    let (est, out) = match mode {
        GapMode::Iid => {
            let data: Option<String> = cfg.optional("data.path")?;
            let n = if data.is_none() {
                Some(positive(cfg, "n", None)?)
            } else {
                None
            };
            let n_eval = positive(cfg, "n_eval", Some(1000))?;
            let metric = build::metric(cfg, &group)?;
            let out = cfg.location("out");
            cfg.check_all_used()?;
            let dataset = match (&data, n) {
                (Some(path), _) => load_cloud(Path::new(path))?,
                (None, Some(n)) => spec
                    .sample_uniform(n, seed)
                    .context(|| format!("sampling {n} points"))?,
                (None, None) => unreachable!(),
            };
            let pred = prediction_space(dataset, &group)
                .context(|| "building the prediction space".into())?;
            let est = gap_with_metric(&spec, &pred, n_eval, seed, metric)
                .context(|| "estimating the gap".into())?;
            (est, out)
        }
        GapMode::Optimal => {
            let n = positive(cfg, "n", None)?;
            let opts = build::optimal_options(cfg)?;
            let out = cfg.location("out");
            cfg.check_all_used()?;
            let (est, _) = optimal_gap(&spec, &group, n, seed, opts)
                .context(|| format!("quantizing with n = {n}"))?;
            (est, out)
        }
    };
    let doc = document(
        metadata("gap", cfg, hypotheses(Some(&spec), &group)),
        json!({ "estimate": estimate_json(&est) }),
    );
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        write_json(&dir.join("gap.json"), &doc)?;
        write_config(&dir, cfg)?;
    }
    Ok(crate::output::json_text(&doc))
}

/// Gap-curve rows, the fit on the seed-averaged curve and per-seed fits.
struct CurveReport {
    table: Table,
    fit: ScalingFit,
    per_seed: Vec<(u64, ScalingFit)>,
}

fn fit_curve(
    curve: &[CurvePoint],
    grid: &[usize],
    seeds: &[u64],
    group: &GroupSpec,
    drop: usize,
) -> Result<CurveReport> {
    let mut table = Table::new(&[
        "n",
        "seed",
        "mode",
        "group",
        "value",
        "std_error",
        "n_eval",
        "metric",
    ]);
    for p in curve {
        let e = &p.estimate;
        table.row([
            p.n.to_string(),
            p.seed.to_string(),
            e.mode.as_str().to_string(),
            group.name().to_string(),
            format_f64(e.value),
            format_f64(e.std_error),
            e.n_eval.to_string(),
            e.metric.as_str().to_string(),
        ]);
    }
    let value = |n: usize, seed: u64| {
        curve
            .iter()
            .find(|p| p.n == n && p.seed == seed)
            .map(|p| p.estimate.value)
            .expect("grid cell present")
    };
    let fit_points = |pts: Vec<(f64, f64)>, what: String| {
        fit_loglog_dropping(&pts, drop)
            .map_err(|e| CliError::Numerical(format!("log-log fit of {what}: {e}")))
    };
    let mean: Vec<(f64, f64)> = grid
        .iter()
        .map(|&n| {
            (
                n as f64,
                seeds.iter().map(|&s| value(n, s)).sum::<f64>() / seeds.len() as f64,
            )
        })
        .collect();
    let fit = fit_points(mean, "the seed-averaged curve".into())?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let pts = grid.iter().map(|&n| (n as f64, value(n, s))).collect();
        per_seed.push((s, fit_points(pts, format!("seed {s}"))?));
    }
    Ok(CurveReport {
        table,
        fit,
        per_seed,
    })
}

/// Mean and sample standard deviation of the per-seed dimension estimates
/// (the headline estimate fits the seed-averaged curve instead);
/// `None` when any seed has a non-negative slope.
fn dim_summary(per_seed: &[(u64, ScalingFit)]) -> (Option<f64>, Option<f64>) {
    let dims: Option<Vec<f64>> = per_seed.iter().map(|(_, f)| f.estimated_dim).collect();
    let Some(dims) = dims else {
        return (None, None);
    };
    let m = dims.len() as f64;
    let mean = dims.iter().sum::<f64>() / m;
    let std = if dims.len() > 1 {
        Some((dims.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt())
    } else {
        None
    };
    (Some(mean), std)
}

fn check_fit_size(grid: &[usize], drop: usize) -> Result<()> {
    if grid.len() < drop + 3 {
        return Err(CliError::config(format!(
            "n_grid has {} sizes; a fit dropping {drop} needs at least {}",
            grid.len(),
            drop + 3
        )));
    }
    Ok(())
}

fn write_curve_outputs(
    out: &Path,
    command: &str,
    cfg: &Config,
    hyp: Value,
    report: &CurveReport,
    seeds: &[u64],
    seconds: f64,
) -> Result<Value> {
    ensure_dir(out)?;
    report.table.write(&out.join("gap_curve.csv"))?;
    let f = &report.fit;
    let mut fit_csv = Table::new(&[
        "slope",
        "intercept",
        "r_squared",
        "estimated_dim",
        "points_used",
    ]);
    fit_csv.row([
        format_f64(f.slope),
        format_f64(f.intercept),
        format_f64(f.r_squared),
        cell(f.estimated_dim),
        f.points_used.to_string(),
    ]);
    fit_csv.write(&out.join("fit.csv"))?;
    let (mean, std) = dim_summary(&report.per_seed);
    let per_seed: Vec<Value> = report
        .per_seed
        .iter()
        .map(|(s, f)| json!({ "seed": s, "fit": fit_json(f) }))
        .collect();
    let doc = document(
        metadata(command, cfg, hyp),
        json!({
            "seeds": seeds,
            "fit": fit_json(f),
            "per_seed": per_seed,
            "estimated_dim": f.estimated_dim,
            "per_seed_dim_mean": mean,
            "per_seed_dim_std": std,
            "wall_clock_seconds": seconds,
        }),
    );
    write_json(&out.join("fit.json"), &doc)?;
    write_config(out, cfg)?;
    Ok(doc)
}

fn dim_line(doc: &Value) -> String {
    match doc["estimated_dim"].as_f64() {
        Some(d) => format!("estimated_dim {}\n", format_f64(d)),
        None => "estimated_dim undefined (non-negative slope)\n".into(),
    }
}

fn scaling(cfg: &Config) -> Result<String> {
    let spec = build::manifold(cfg)?;
    let group = build::group(cfg, spec.ambient_dim(), Some(&spec))?;
    let grid = build::n_grid(cfg)?;
    let seeds = cfg.get("seeds", SeedList((0..5).collect()))?.0;
    let mode = build::mode(cfg)?;
    let drop: usize = cfg.get("fit.drop_smallest", 0)?;
    check_fit_size(&grid, drop)?;
    let n_eval = if mode == GapMode::Iid {
        Some(positive(cfg, "n_eval", Some(1000))?)
    } else {
        None
    };
    let opts = if mode == GapMode::Optimal {
        Some(build::optimal_options(cfg)?)
    } else {
        None
    };
    let out = cfg.require_location("out")?;
    cfg.check_all_used()?;

    let start = Instant::now();
    let curve = match (n_eval, opts) {
        (Some(n_eval), _) => random_gap_curve(&spec, &group, &grid, &seeds, n_eval),
        (None, Some(opts)) => optimal_gap_curve(&spec, &group, &grid, &seeds, opts),
        (None, None) => unreachable!(),
    }
    .context(|| format!("{} gap curve on {}", mode.as_str(), spec.kind().name()))?;
    let report = fit_curve(&curve, &grid, &seeds, &group, drop)?;
    let seconds = start.elapsed().as_secs_f64();
    let doc = write_curve_outputs(
        &out,
        "scaling",
        cfg,
        hypotheses(Some(&spec), &group),
        &report,
        &seeds,
        seconds,
    )?;
    Ok(dim_line(&doc))
}

fn dimfit(cfg: &Config) -> Result<String> {
    let input: String = cfg.require("input")?;
    let grid = build::n_grid(cfg)?;
    let seeds = cfg.get("seeds", SeedList((0..5).collect()))?.0;
    let drop: usize = cfg.get("fit.drop_smallest", 0)?;
    check_fit_size(&grid, drop)?;
    let cloud = load_cloud(Path::new(&input))?;
    let group = build::group(cfg, cloud.dim(), None)?;
    let out = cfg.require_location("out")?;
    cfg.check_all_used()?;

    let start = Instant::now();
    let unique = cloud.dedup_exact();
    let n_max = *grid.last().unwrap();
    if unique.len() < 2 * n_max {
        return Err(CliError::config(format!(
            "{input} has {} distinct points; n_grid up to {n_max} needs at least {}",
            unique.len(),
            2 * n_max
        )));
    }
    let half = unique.len() / 2;
    let mut curve = Vec::with_capacity(grid.len() * seeds.len());
    let mut splits = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let mut idx: Vec<usize> = (0..unique.len()).collect();
        idx.shuffle(&mut seeded(seed, stream::SPLIT));
        splits.push((unique.select(&idx[..half]), unique.select(&idx[half..])));
    }
    for &n in &grid {
        for (&seed, (train, held)) in seeds.iter().zip(&splits) {
            let pred = prediction_space(train.prefix(n), &group)
                .context(|| "building the prediction space".into())?;
            let estimate = gap_on_points(&pred, held, seed)
                .context(|| format!("held-out gap, n = {n}, seed {seed}"))?;
            curve.push(CurvePoint { n, seed, estimate });
        }
    }
    let report = fit_curve(&curve, &grid, &seeds, &group, drop)?;
    let seconds = start.elapsed().as_secs_f64();
    let hyp = json!({
        "group": group.name(),
        "ambient_dim": cloud.dim(),
        "points": cloud.len(),
        "distinct_points": unique.len(),
        "orbit_volume": build::orbit_volume_label(&group),
        "notes": ["exact duplicates are removed before the 50/50 split; no rescaling is applied"],
    });
    let doc = write_curve_outputs(&out, "dimfit", cfg, hyp, &report, &seeds, seconds)?;
    Ok(dim_line(&doc))
}

/// Per-orbit angular coverage: endpoints are assigned to their closest
/// dataset orbit and the largest angular gap on each orbit is compared with
/// three times the expected maximal spacing `2 pi ln c / c` of `c` uniform
/// angles.
fn angular_coverage(
    endpoints: &PointCloud,
    dataset: &PointCloud,
    group: &GroupSpec,
) -> Result<Value> {
    let GroupKind::AxisRotation { axis } = group.kind() else {
        return Ok(Value::Null);
    };
    let ctx = || "angular coverage".to_string();
    let index = NnIndex::build(&group.canonicalize_cloud(dataset).context(ctx)?).context(ctx)?;
    let canon = group.canonicalize_cloud(endpoints).context(ctx)?;
    let mut members = vec![Vec::new(); dataset.len()];
    for (i, y) in canon.iter().enumerate() {
        members[index.nearest_unchecked(y).0].push(i);
    }
    let mut rows = Vec::new();
    let mut ok = true;
    for (j, m) in members.iter().enumerate() {
        let z = dataset.point(j);
        let radius = z
            .iter()
            .enumerate()
            .filter(|(k, _)| k != axis)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt();
        if m.len() < 2 || radius < 1e-9 {
            continue;
        }
        let c = m.len() as f64;
        let gap = max_angular_gap(&endpoints.select(m), group).context(ctx)?;
        let bound = 3.0 * 2.0 * PI * c.ln() / c;
        ok &= gap < bound;
        rows.push(json!({ "orbit": j, "endpoints": m.len(), "max_gap": gap, "bound": bound }));
    }
    Ok(json!({ "passed": ok, "orbits": rows }))
}

fn diffuse(cfg: &Config) -> Result<String> {
    let data: Option<String> = cfg.optional("data.path")?;
    let seed: u64 = cfg.get("seed", 0)?;
    let (spec, dataset) = match &data {
        Some(path) => (None, load_cloud(Path::new(path))?),
        None => {
            let spec = build::manifold(cfg)?;
            let n = positive(cfg, "n", Some(12))?;
            let cloud = spec
                .sample_uniform(n, seed)
                .context(|| format!("sampling {n} dataset points"))?;
            (Some(spec), cloud)
        }
    };
    let group = build::group(cfg, dataset.dim(), spec.as_ref())?;
    let steps = positive(cfg, "diffusion.T", Some(1000))?;
    let n_samples = positive(cfg, "diffusion.n_samples", Some(1000))?;
    let k_raw: String = cfg.get("diffusion.K", "auto".to_string())?;
    let k = match k_raw.as_str() {
        "auto" => None,
        raw => Some(
            raw.parse::<usize>()
                .map_err(|e| CliError::config(format!("diffusion.K = {raw:?}: {e}")))?,
        ),
    };
    let sample_seed: u64 = cfg.get("diffusion.seed", seed)?;
    let trace: bool = cfg.get("diffusion.trace", false)?;
    let out: PathBuf = cfg.require_location("out")?;
    cfg.check_all_used()?;

    let start = Instant::now();
    let schedule = Schedule::linear(steps).context(|| "building the noise schedule".into())?;
    let field = ScoreField::new(dataset.clone(), group.clone(), schedule, k)
        .context(|| "building the score field".into())?;
    let result = field
        .reverse_sample_traced(n_samples, sample_seed, trace)
        .context(|| format!("reverse sampling {n_samples} trajectories"))?;
    let sq = endpoint_orbit_distances(&result.endpoints, &dataset, &group)
        .context(|| "orbit error".into())?;
    let plain = endpoint_orbit_distances(
        &result.endpoints,
        &dataset,
        &GroupSpec::identity(dataset.dim()),
    )
    .context(|| "distance to the dataset".into())?;
    let max_sq = sq.iter().copied().fold(0.0, f64::max);
    let mean_sq = sq.iter().sum::<f64>() / sq.len() as f64;
    let max_plain = plain.iter().copied().fold(0.0, f64::max).sqrt();
    let coverage = angular_coverage(&result.endpoints, &dataset, &group)?;
    let seconds = start.elapsed().as_secs_f64();

    ensure_dir(&out)?;
    save_cloud(&out.join("endpoints.csv"), &result.endpoints)?;
    save_cloud(&out.join("dataset.csv"), &dataset)?;
    if trace {
        let mut header = vec!["sample_id".to_string(), "t".to_string()];
        header.extend((0..dataset.dim()).map(|k| format!("coord{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::new(&header);
        for row in &result.trace {
            let mut cells = vec![row.sample.to_string(), row.t.to_string()];
            cells.extend(row.point.iter().map(|v| format_f64(*v)));
            t.row(cells);
        }
        t.write(&out.join("trace.csv"))?;
    }
    let doc = document(
        metadata("diffuse", cfg, hypotheses(spec.as_ref(), &group)),
        json!({
            "dataset_size": dataset.len(),
            "n_samples": n_samples,
            "steps": steps,
            "quadrature_k": field.quadrature_k(),
            "quadrature_refinements": field.refinements(),
            "diverged": result.diverged.len(),
            "max_sq_orbit_distance": max_sq,
            "mean_sq_orbit_distance": mean_sq,
            "max_orbit_distance": max_sq.sqrt(),
            "max_distance_to_dataset": max_plain,
            "angular_coverage": coverage,
            "wall_clock_seconds": seconds,
        }),
    );
    write_json(&out.join("diffuse.json"), &doc)?;
    write_config(&out, cfg)?;
    Ok(format!(
        "max orbit distance {}\n",
        format_f64(max_sq.sqrt())
    ))
}

fn constants(cfg: &Config) -> Result<String> {
    let d_max = positive(cfg, "constants.d_max", Some(10))?;
    let n = positive(cfg, "n", Some(1000))?;
    cfg.check_all_used()?;
    let mut t = Table::new(&["d", "j_random", "j_optimal", "j_optimal_kind", "n_eff"]);
    for d in 1..=d_max {
        let z = ZadorConstants::new(d).context(|| format!("constants for d = {d}"))?;
        let n_eff = effective_sample_size(d, n).context(|| format!("n_eff for d = {d}"))?;
        t.row([
            d.to_string(),
            format_f64(z.j_random),
            format_f64(z.j_optimal),
            z.j_optimal_kind.as_str().to_string(),
            format_f64(n_eff),
        ]);
    }
    Ok(t.text().to_string())
}
