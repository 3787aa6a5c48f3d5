use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use probclust_core::data::{
    generate_mixture, read_csv, read_model, write_csv, write_model, MixtureComponent, MixtureSpec,
};
use probclust_core::eval::{dimension_sweep, write_sweep_csv, SweepTemplate};
use probclust_core::{
    assign as assign_one, check_metric_axioms, check_triangle_vertices, cluster as run_cluster,
    random_spaces, ClusterModel, MergeEvent, ProbSpace,
};
use serde::{Deserialize, Serialize};

use crate::plot::render_projection;
use crate::{AssignArgs, CheckMetricArgs, ClusterArgs, Failure, GenArgs, ReportArgs, SweepArgs};

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct RegionSummary<'a> {
    id: usize,
    size: usize,
    center: &'a [f64],
    scale: &'a [f64],
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    input: String,
    points: usize,
    dim: usize,
    cluster_count: usize,
    sizes: Vec<usize>,
    regions: Vec<RegionSummary<'a>>,
    merge_log: &'a [MergeEvent],
    dataset_fingerprint: &'a str,
    wall_time_secs: f64,
}

fn cluster_report(model: &ClusterModel, input: &Path, secs: f64) -> anyhow::Result<String> {
    let regions = model
        .regions
        .iter()
        .map(|r| {
            let s: &ProbSpace = r.fitted()?;
            Ok(RegionSummary {
                id: r.id,
                size: r.len(),
                center: s.center(),
                scale: s.scale(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = ClusterReport {
        input: input.display().to_string(),
        points: model.regions.iter().map(|r| r.len()).sum(),
        dim: model.dim,
        cluster_count: model.cluster_count(),
        sizes: model.regions.iter().map(|r| r.len()).collect(),
        regions,
        merge_log: &model.merge_log,
        dataset_fingerprint: &model.dataset_fingerprint,
        wall_time_secs: secs,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

pub fn cluster(args: ClusterArgs) -> Result<ExitCode, Failure> {
    let cfg = args.engine.config()?;
    let data = read_csv(&args.input, args.labels.csv_options())?;
    let start = Instant::now();
    let model = run_cluster(&data.vectors, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    write_model(&model, &args.out)?;
    if let Some(path) = &args.report {
        let mut w = create(path)?;
        writeln!(w, "{}", cluster_report(&model, &args.input, secs)?)?;
        w.flush()?;
    }
    let sizes: Vec<String> = model.regions.iter().map(|r| r.len().to_string()).collect();
    println!(
        "{} points, dim {} -> {} clusters (sizes {}) in {:.3}s; model written to {}",
        data.len(),
        data.dim(),
        model.cluster_count(),
        sizes.join("/"),
        secs,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn assign(args: AssignArgs) -> Result<ExitCode, Failure> {
    let model = read_model(&args.model)?;
    let data = read_csv(&args.input, args.labels.csv_options())?;
    let mut out = output(args.out.as_deref())?;
    for v in &data.vectors {
        let a = assign_one(v, &model)?;
        writeln!(out, "{},{},{}", a.region_id, a.distance, a.inside)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn check_metric(args: CheckMetricArgs) -> Result<ExitCode, Failure> {
    let (spaces, what) = match (&args.model, args.random, args.dim) {
        (Some(path), _, _) => {
            let model = read_model(path)?;
            let spaces = model
                .regions
                .iter()
                .map(|r| r.fitted().cloned())
                .collect::<Result<Vec<_>, _>>()?;
            (spaces, format!("{} (dim {})", path.display(), model.dim))
        }
        (None, Some(n), Some(dim)) => (
            random_spaces(n as usize, dim as usize, args.seed)?,
            format!("{n} random spaces (dim {dim})"),
        ),
        _ => return Err(Failure::Usage("give --model or --random with --dim".into())),
    };
    let trials = args.trials as usize;
    let axioms = check_metric_axioms(&spaces, trials, args.seed)?;
    let tri = check_triangle_vertices(trials, args.seed)?;

    println!("spaces: {what}; trials: {trials}; seed: {}", args.seed);
    println!("nonnegativity violations: {}", axioms.nonnegativity);
    println!("symmetry violations: {}", axioms.symmetry);
    println!("self-distance violations: {}", axioms.self_distance);
    print!("triangle violations: {}", axioms.triangle);
    if let Some((a, b, c)) = axioms.worst_triple {
        print!(
            " (max excess {:.6} at {a},{b},{c})",
            axioms.max_triangle_excess
        );
    }
    println!();
    println!(
        "triangle-vertex violations: {} (vertex {}, folded edges {}, non-finite {}; cases full {}, one-edge-zero {}, single-side {})",
        tri.total_violations(),
        tri.vertex_violations,
        tri.edge_violations,
        tri.non_finite,
        tri.full,
        tri.one_edge_zero,
        tri.single_side
    );
    println!(
        "full triangles with raw clamped edge excess: {}",
        tri.full_edge_excess
    );
    println!("max distance: {}", axioms.max_distance);

    let total = axioms.total_violations() + tri.total_violations();
    println!("total violations: {total}");
    Ok(if total == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    components: Vec<MixtureComponent>,
}

pub fn gen(args: GenArgs) -> Result<ExitCode, Failure> {
    let components = match (args.components, &args.spec) {
        (Some(list), _) => list.0,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let file: SpecFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            file.components
        }
        (None, None) => return Err(Failure::Usage("give --components or --spec".into())),
    };
    let spec = MixtureSpec {
        components,
        n: args.n as usize,
        seed: args.seed,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let data = generate_mixture(&spec)?;
    write_csv(&data, &args.out)?;
    println!(
        "{} rows, dim {}, {} components -> {}",
        data.len(),
        data.dim(),
        spec.components.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn report(args: ReportArgs) -> Result<ExitCode, Failure> {
    let model = read_model(&args.model)?;
    let (jx, jy) = args.proj;
    if let Some(bad) = [jx, jy].into_iter().find(|&j| j >= model.dim) {
        return Err(anyhow::anyhow!(
            "projection index {bad} out of range for dimension {}",
            model.dim
        )
        .into());
    }
    let data = read_csv(&args.input, args.labels.csv_options())?;
    let owners = data
        .vectors
        .iter()
        .map(|v| assign_one(v, &model).map(|a| a.region_id))
        .collect::<Result<Vec<_>, _>>()?;
    let svg = render_projection(&model, &data.vectors, &owners, (jx, jy))?;
    let mut w = create(&args.out)?;
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    println!(
        "{} points, {} regions, dims {jx},{jy} -> {}",
        data.len(),
        model.cluster_count(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: SweepArgs) -> Result<ExitCode, Failure> {
    let cfg = args.engine.config()?;
    if args.dims.contains(&0) {
        return Err(Failure::Usage("dimensions must be at least 1".into()));
    }
    if !(args.sigma > 0.0 && args.sigma.is_finite() && args.separation.is_finite()) {
        return Err(Failure::Usage(
            "sigma must be positive and separation finite".into(),
        ));
    }
    let template = SweepTemplate {
        points_per_component: args.points_per_component as usize,
        sigma: args.sigma,
        separation: args.separation,
        seed: args.engine.seed,
    };
    let rows = dimension_sweep(&args.dims, &template, &cfg)?;
    let mut out = output(args.out.as_deref())?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    drop(out);
    for r in &rows {
        let between = r
            .min_between_distance
            .map_or("n/a (one cluster)".to_string(), |d| format!("{d:.4}"));
        eprintln!(
            "dim {:>3}: {} clusters, {:.1}% of points inside their space, min between-cluster distance {between}, ARI {:.3}",
            r.dim,
            r.cluster_count,
            100.0 * r.zero_fraction,
            r.ari
        );
    }
    Ok(ExitCode::SUCCESS)
}
