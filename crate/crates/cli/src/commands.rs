use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use netsnr::covariates::{summarize as summarize_table, CovariateTable};
use netsnr::geograph::{
    betweenness, communities, communities_by_modularity, connected_components, diameter, modularity,
    CommunityTarget, DegreeMode, GeoGraph, LengthMode, Partition,
};
use netsnr::intensity::{intensity_table, IntensityMode, IntensityTable};
use netsnr::io::{self, IntensityExpr};
use netsnr::mmfit::{coefficient_table, FitControl};
use netsnr::pointpattern::{assign_events, default_tolerance, AssignMode};
use netsnr::simulate::{simulate_replicate, EdgeAggregation, EdgeIntensitySpec, SimSpec};
use netsnr::smooth::LatticeAdjacency;
use netsnr::snr::{
    build_design, compare_models, evaluate_smooth, fit_snr, lattice_effects, parse_model_config, ComparisonTable,
    LatticeTerm, SnrFit, SnrSpec, DEFAULT_LEVELS,
};
use rayon::prelude::*;

use crate::{
    AggregationArg, AssignArg, CompareArgs, DataArgs, FitArgs, GraphArgs, IntensityArgs, LengthArg, PatternArgs,
    SimulateArgs, StatsArgs, SummarizeArgs,
};

/// Points per emitted smooth curve.
const CURVE_POINTS: usize = 101;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn with_file<T, E: std::fmt::Display>(path: &Path, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_graph(args: &GraphArgs) -> Result<GeoGraph> {
    let mode = match args.length {
        LengthArg::Euclidean => LengthMode::Euclidean,
        LengthArg::Squared => LengthMode::Squared,
    };
    let (nodes, edges) = match (&args.nodes, &args.edges, &args.geojson) {
        (Some(n), Some(e), None) => {
            (with_file(n, io::parse_nodes_csv(&read(n)?))?, with_file(e, io::parse_edges_csv(&read(e)?))?)
        }
        (None, None, Some(g)) => with_file(g, io::parse_geojson(&read(g)?))?,
        _ => bail!("give either --nodes and --edges, or --geojson"),
    };
    GeoGraph::build(nodes, edges, mode).context("invalid graph")
}

fn load_intensities(graph: &GeoGraph, args: &PatternArgs) -> Result<(IntensityTable, usize)> {
    let pattern = with_file(&args.events, io::parse_events_csv(&read(&args.events)?))?;
    let tolerance = args.tolerance.unwrap_or_else(|| default_tolerance(graph));
    let mode = match args.assign {
        AssignArg::Snap => AssignMode::Snap,
        AssignArg::PaperBox => AssignMode::PaperBox,
    };
    let assignment = assign_events(graph, &pattern, tolerance, mode)?;
    Ok((intensity_table(&assignment, graph)?, assignment.unassigned()))
}

fn load_covariates(path: &Path) -> Result<CovariateTable> {
    with_file(path, io::parse_covariates_csv(&read(path)?))
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let partition: Partition = match args.communities.as_str() {
        "auto" => communities_by_modularity(&g).0,
        k => {
            let k: usize = k.parse().map_err(|_| anyhow!("--communities must be a count or 'auto', found '{k}'"))?;
            communities(&g, CommunityTarget::Groups(k))?
        }
    };
    let components = connected_components(&g);
    let bc = betweenness(&g);
    let n = g.node_count();

    let modes = [DegreeMode::Undirected, DegreeMode::In, DegreeMode::Out, DegreeMode::Cg];
    let rows = g.nodes().iter().enumerate().map(|(i, node)| {
        let mut r = vec![node.id.to_string()];
        r.extend(modes.iter().map(|&m| g.degree_at(i, m).to_string()));
        r.push(bc[&node.id].to_string());
        r.push(components.label_of(node.id).expect("every node has a component").to_string());
        r.push(partition.label_of(node.id).expect("every node has a community").to_string());
        r
    });
    let header = ["node_id", "degree_undirected", "degree_in", "degree_out", "degree_cg", "betweenness", "component", "community"];
    let node_stats = io::write_csv(&header, rows);

    let mut distribution: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        *distribution.entry(g.degree_at(i, DegreeMode::Cg)).or_default() += 1;
    }
    let degree_csv = io::write_csv(&["degree", "count"], distribution.iter().map(|(d, c)| vec![d.to_string(), c.to_string()]));

    let values: Vec<f64> = bc.values().copied().collect();
    let (bmin, bmax) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let bmean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
    let mean_degree = if n == 0 { f64::NAN } else { 2.0 * g.edge_count() as f64 / n as f64 };
    let summary: Vec<(&str, String)> = vec![
        ("nodes", n.to_string()),
        ("edges", g.edge_count().to_string()),
        ("mean_degree", mean_degree.to_string()),
        ("components", components.len().to_string()),
        ("diameter", diameter(&g).to_string()),
        ("betweenness_min", bmin.to_string()),
        ("betweenness_mean", bmean.to_string()),
        ("betweenness_max", bmax.to_string()),
        ("communities", partition.len().to_string()),
        ("modularity", modularity(&g, &partition).to_string()),
    ];
    let summary_csv = io::write_csv(&["statistic", "value"], summary.iter().map(|(k, v)| vec![k.to_string(), v.clone()]));

    out_dir(&args.out)?;
    write(&args.out, "node_stats.csv", &node_stats)?;
    write(&args.out, "degree_distribution.csv", &degree_csv)?;
    write(&args.out, "stats_summary.csv", &summary_csv)?;
    for (k, v) in &summary {
        println!("{k}: {v}");
    }
    Ok(())
}

pub fn intensity(args: &IntensityArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let (table, unassigned) = load_intensities(&g, &args.pattern)?;
    out_dir(&args.out)?;
    write(&args.out, "edge_intensity.csv", &io::edge_intensity_csv(&table))?;
    write(&args.out, "node_intensity.csv", &io::node_intensity_csv(&table, &IntensityMode::ALL))?;
    let assigned: usize = table.edges.iter().map(|e| e.count).sum();
    println!("edges: {}", table.edges.len());
    println!("assigned events: {assigned}");
    println!("unassigned events: {unassigned}");
    Ok(())
}

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let table = load_covariates(&args.covariates)?;
    let text = io::summary_csv(&summarize_table(&table));
    out_dir(&args.out)?;
    write(&args.out, "summary.csv", &text)?;
    print!("{text}");
    Ok(())
}

struct Data {
    graph: GeoGraph,
    table: IntensityTable,
    covariates: CovariateTable,
}

fn load_data(args: &DataArgs) -> Result<Data> {
    let graph = load_graph(&args.graph)?;
    let (table, _) = load_intensities(&graph, &args.pattern)?;
    let covariates = load_covariates(&args.covariates)?;
    Ok(Data { graph, table, covariates })
}

/// Model spec with its lattice term resolved. `mrf` paths are relative to
/// the config file; without `map=` the covariate column `region` is used.
fn load_spec(path: &Path, lattice: Option<&PathBuf>, covariates: &CovariateTable) -> Result<SnrSpec> {
    let config = parse_model_config(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let mut spec = config.spec;
    if spec.name.is_empty() {
        spec.name = path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let adjacency_path = match (lattice, &config.mrf) {
        (Some(p), Some(_)) => Some(p.clone()),
        (None, Some(m)) => Some(base.join(&m.adjacency)),
        (_, None) => None,
    };
    if let Some(adj_path) = adjacency_path {
        let adjacency: LatticeAdjacency = with_file(&adj_path, io::parse_adjacency_csv(&read(&adj_path)?))?;
        let regions = match config.mrf.as_ref().and_then(|m| m.map.as_ref()) {
            Some(map) => {
                let p = base.join(map);
                with_file(&p, io::parse_node_regions_csv(&read(&p)?))?
            }
            None => {
                anyhow::ensure!(
                    covariates.column_index("region").is_some(),
                    "{}: mrf without map= needs a 'region' covariate column",
                    path.display()
                );
                covariates.rows().filter_map(|(id, _)| covariates.get(id, "region").map(|r| (id, r.to_string()))).collect()
            }
        };
        spec.lattice = Some(LatticeTerm { adjacency, regions });
    }
    Ok(spec)
}

fn fit_one(data: &Data, spec: &SnrSpec) -> Result<SnrFit> {
    let design = build_design(&data.graph, &data.table, &data.covariates, spec)
        .with_context(|| format!("model '{}'", spec.name))?;
    let fit = fit_snr(&design, &FitControl::default()).with_context(|| format!("model '{}'", spec.name))?;
    Ok(fit)
}

fn fit_log(fit: &SnrFit, excluded: (usize, usize)) -> String {
    let s = &fit.spec;
    let c = &fit.result.convergence;
    let mut log = String::new();
    let _ = writeln!(log, "model={}", s.name);
    let _ = writeln!(log, "response={} family={} mode={}", s.response.as_str(), s.family.name(), s.mode);
    let _ = writeln!(log, "rows={} excluded_undefined={} excluded_zero={}", fit.result.n, excluded.0, excluded.1);
    let _ = writeln!(log, "converged={} outer_iterations={} inner_iterations={}", c.converged, c.outer_iterations, c.inner_iterations);
    let _ = writeln!(log, "final_change={:e} ridge_jitter={}", c.final_change, c.ridge_jitter);
    let _ = writeln!(log, "deviance={} scale={} edf={}", fit.result.deviance, fit.result.scale, fit.result.edf);
    for b in &fit.result.blocks {
        let _ = writeln!(log, "block={} variance={} edf={}", b.name, b.variance, b.edf);
    }
    for line in &c.log {
        let _ = writeln!(log, "{line}");
    }
    log
}

fn fitted_csv(fit: &SnrFit) -> String {
    let r = &fit.result;
    io::write_csv(
        &["node_id", "observed", "offset", "fitted_mean", "fitted_intensity"],
        (0..r.n).map(|i| {
            vec![
                fit.node_ids[i].to_string(),
                r.response[i].to_string(),
                fit.offsets[i].to_string(),
                r.fitted[i].to_string(),
                fit.fitted_intensity[i].to_string(),
            ]
        }),
    )
}

fn lattice_csv(fit: &SnrFit) -> Result<String> {
    let effects = lattice_effects(fit, &DEFAULT_LEVELS)?;
    Ok(io::write_csv(
        &["region", "estimate", "std_error", "lower80", "upper80", "lower95", "upper95"],
        effects.iter().map(|e| {
            let mut r = vec![e.region.clone(), e.estimate.to_string(), e.std_error.to_string()];
            for (_, lo, hi) in &e.bands {
                r.push(lo.to_string());
                r.push(hi.to_string());
            }
            r
        }),
    ))
}

fn print_comparison(table: &ComparisonTable) {
    println!("{:<16} {:>14} {:>14} {:>14} {:>10}", "model", "aic", "bic", "gcv", "edf");
    for (i, r) in table.rows.iter().enumerate() {
        let mark = |best: usize| if best == i { "*" } else { " " };
        let c = &r.criteria;
        println!(
            "{:<16} {:>13.4}{} {:>13.4}{} {:>13.6}{} {:>10.3}",
            r.model,
            c.aic,
            mark(table.best_aic),
            c.bic,
            mark(table.best_bic),
            c.gcv,
            mark(table.best_gcv),
            c.edf
        );
    }
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let spec = load_spec(&args.model, args.data.lattice.as_ref(), &data.covariates)?;
    let design = build_design(&data.graph, &data.table, &data.covariates, &spec)?;
    let fit = fit_snr(&design, &FitControl::default())?;
    let comparison = compare_models(&[&fit])?;

    out_dir(&args.out)?;
    write(&args.out, "coefficients.csv", &io::coefficients_csv(&coefficient_table(&fit.result)))?;
    write(&args.out, "criteria.csv", &io::criteria_csv(&comparison))?;
    write(&args.out, "fitted.csv", &fitted_csv(&fit))?;
    write(&args.out, "fit.log", &fit_log(&fit, (design.excluded_undefined, design.excluded_zero)))?;
    for term in &fit.spec.smooths {
        let (cfg, _) = fit.encoder.smooth(&term.covariate).expect("smooth terms are encoded");
        let grid: Vec<f64> = (0..CURVE_POINTS)
            .map(|k| if k + 1 == CURVE_POINTS { cfg.hi } else { cfg.lo + (cfg.hi - cfg.lo) * k as f64 / (CURVE_POINTS - 1) as f64 })
            .collect();
        let curve = evaluate_smooth(&fit, &term.covariate, &grid, &DEFAULT_LEVELS)?;
        write(&args.out, &format!("smooth_{}.csv", term.covariate), &io::smooth_csv(&curve))?;
    }
    if fit.spec.lattice.is_some() {
        write(&args.out, "mrf_effects.csv", &lattice_csv(&fit)?)?;
    }
    if !fit.result.convergence.converged {
        eprintln!("warning: model '{}' did not converge; see fit.log", fit.spec.name);
    }
    print_comparison(&comparison);
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let specs: Vec<SnrSpec> =
        args.model.iter().map(|p| load_spec(p, args.data.lattice.as_ref(), &data.covariates)).collect::<Result<_>>()?;
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.name == s.name) {
            bail!("two models are named '{}'", s.name);
        }
    }
    let fits: Vec<SnrFit> = specs.par_iter().map(|s| fit_one(&data, s)).collect::<Result<_>>()?;
    let refs: Vec<&SnrFit> = fits.iter().collect();
    let table = compare_models(&refs)?;
    out_dir(&args.out)?;
    write(&args.out, "criteria.csv", &io::criteria_csv(&table))?;
    print_comparison(&table);
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let expr = io::parse_intensity_expr(&args.intensity)?;
    let intensity = match expr {
        IntensityExpr::Constant(c) => EdgeIntensitySpec::Constant(c),
        IntensityExpr::LogLinear(lp) => {
            let needs = lp.covariates().next().is_some();
            let table = match &args.covariates {
                Some(p) => Some(load_covariates(p)?),
                None if needs => bail!("the intensity expression uses covariates; pass --covariates"),
                None => None,
            };
            let eta = g
                .nodes()
                .iter()
                .map(|n| {
                    lp.evaluate(|name| table.as_ref().and_then(|t| t.numeric(n.id, name)))
                        .ok_or_else(|| anyhow!("node {} lacks a numeric value for a covariate in the expression", n.id))
                })
                .collect::<Result<Vec<f64>>>()?;
            let aggregation = match args.aggregation {
                AggregationArg::Mean => EdgeAggregation::Mean,
                AggregationArg::Tail => EdgeAggregation::Tail,
                AggregationArg::Head => EdgeAggregation::Head,
            };
            EdgeIntensitySpec::LogLinear { eta, aggregation }
        }
    };
    let spec = SimSpec { intensity, seed: args.seed };
    let pattern = simulate_replicate(&g, &spec, args.replicate)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    fs::write(&args.out, io::events_csv(&pattern)).with_context(|| format!("cannot write {}", args.out.display()))?;
    println!("events: {}", pattern.len());
    Ok(())
}
