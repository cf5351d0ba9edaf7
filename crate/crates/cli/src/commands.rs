use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use coexbal::assembly::{assemble_packs, assemble_reference, build_packs, scatter_global, sweep_pack_size, sweep_to_csv};
use coexbal::balance::{
    run_balancing_loop, BalanceOptions, BalanceReport, Phase, RegressionMode, TimingSample,
};
use coexbal::coexec::{simulate_solver_times, CoresPerGpu, EfficiencyParams, ExecutionPlan, PlanConfig};
use coexbal::mesh::{
    generate_full_mesh, generate_synthetic_mesh, parse_mesh, write_mesh, FullMesh, GridMeshOptions, KindMix, Mesh,
    SpatialProfile,
};
use coexbal::sfc::{partition_chunked, write_partition, write_partition_sidecar, Partition, SfcConfig};

use crate::error::{with_path, CliError, CliResult, Kind};
use crate::output::{file_name, sibling, write_json, write_manifest, write_text, Manifest};
use crate::{BalanceArgs, BenchArgs, EfficiencyArgs, GenMeshArgs, PartitionArgs, Profile, Regression, Timer};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Loads either mesh format; JSON documents are node/connectivity meshes.
fn load_mesh(path: &Path) -> CliResult<(Mesh, Option<FullMesh>)> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        let full = with_path(path, FullMesh::from_json(&text).map_err(Into::into))?;
        let mesh = with_path(path, full.to_partition_mesh())?;
        Ok((mesh, Some(full)))
    } else {
        Ok((with_path(path, parse_mesh(&text).map_err(Into::into))?, None))
    }
}

fn load_plan(path: &Path) -> CliResult<ExecutionPlan> {
    let cfg = with_path(path, PlanConfig::from_json(&read(path)?).map_err(Into::into))?;
    with_path(path, ExecutionPlan::from_config(&cfg))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffsFile {
    lambda: Vec<f64>,
}

fn load_coeffs(path: &Path) -> CliResult<Vec<f64>> {
    let text = read(path)?;
    serde_json::from_str::<CoeffsFile>(&text)
        .map(|c| c.lambda)
        .map_err(|e| CliError::new(Kind::Parse, format!("{}: line {}: {e}", path.display(), e.line())))
}

pub fn gen_mesh(a: &GenMeshArgs, seed: u64) -> CliResult<()> {
    if a.mix.len() != 4 {
        return Err(CliError::usage("--mix takes four proportions: tet,pyr,pri,hex"));
    }
    if a.dims.len() != 3 {
        return Err(CliError::usage("--dims takes three cell counts: nx,ny,nz"));
    }
    if a.full {
        let opts = GridMeshOptions {
            dims: [a.dims[0], a.dims[1], a.dims[2]],
            tet_fraction: a.tet_fraction,
            jitter: a.jitter,
            tet_rule: a.tet_rule,
            seed,
        };
        let full = generate_full_mesh(&opts)?;
        write_text(&a.out, &full.to_json())?;
        println!("nodes={} elements={}", full.nodes.len(), full.elements.len());
    } else {
        let mix = KindMix::new(a.mix[0], a.mix[1], a.mix[2], a.mix[3])?;
        let profile = match a.profile {
            Profile::Uniform => SpatialProfile::Uniform,
            Profile::Clustered => SpatialProfile::Clustered,
        };
        let mesh = generate_synthetic_mesh(a.elements, mix, seed, profile)?;
        write_text(&a.out, &write_mesh(&mesh))?;
        println!("elements={} weight={}", mesh.len(), mesh.total_weight());
    }
    write_manifest(&a.out, &Manifest::new("gen-mesh", seed, a))
}

pub fn partition(a: &PartitionArgs, seed: u64) -> CliResult<()> {
    let (mesh, _) = load_mesh(&a.mesh)?;
    let cfg = SfcConfig::new(a.level)?;
    let coeffs = match &a.coeffs {
        Some(path) => load_coeffs(path)?,
        None => vec![1.0; a.parts],
    };
    let p = partition_chunked(&mesh, &cfg, a.parts, &coeffs, a.chunks)?;
    write_text(&a.out, &write_partition(&p))?;
    write_text(&sibling(&a.out, ".cuts.json"), &write_partition_sidecar(&p))?;
    write_manifest(&a.out, &Manifest::new("partition", seed, a))?;
    let max = p.subdomain_weights.iter().copied().fold(0.0, f64::max);
    println!(
        "parts={} elements={} max_over_mean_weight={}",
        p.n_parts,
        p.n_elements(),
        max * p.n_parts as f64 / p.total_weight()
    );
    Ok(())
}

/// Measured element-assembly time of each subdomain divided by the
/// throughput of the rank's device, so the plan's heterogeneity is kept.
fn bench_timer<'a>(
    full: &'a FullMesh,
    plan: &'a ExecutionPlan,
    pack_size: usize,
) -> impl FnMut(&Partition, usize) -> coexbal::Result<TimingSample> + 'a {
    move |p, k| {
        let mut groups = vec![Vec::new(); p.n_parts];
        for &(id, sub) in &p.assignment {
            groups[sub].push(full.elements[id as usize].clone());
        }
        let mut times = Vec::with_capacity(p.n_parts);
        for (rank, elements) in groups.into_iter().enumerate() {
            let sub = FullMesh {
                nodes: full.nodes.clone(),
                elements,
            };
            let set = build_packs(&sub, pack_size)?;
            let mut runs: Vec<f64> = (0..3)
                .map(|_| {
                    let start = Instant::now();
                    black_box(assemble_packs(black_box(&set)));
                    start.elapsed().as_secs_f64()
                })
                .collect();
            runs.sort_by(f64::total_cmp);
            times.push(runs[1].max(1e-9) / plan.device(rank).throughput);
        }
        TimingSample::new(k, times, Phase::ElementAssembly)
    }
}

#[derive(Serialize)]
struct BalanceDoc<'a> {
    manifest: Manifest,
    #[serde(flatten)]
    report: &'a BalanceReport,
    /// Solver-phase times of the final partition.
    solver_times: Vec<f64>,
}

pub fn balance(a: &BalanceArgs, seed: u64) -> CliResult<()> {
    let plan = load_plan(&a.plan)?;
    let (mesh, full) = load_mesh(&a.mesh)?;
    let cfg = SfcConfig::new(a.level)?;
    let opts = BalanceOptions {
        mode: match a.regression {
            Regression::Slr => RegressionMode::Slr,
            Regression::Wlr => RegressionMode::Wlr,
        },
        tol: a.tol,
        max_iters: a.max_iters,
        wlr_growth: a.wlr_growth,
    };
    let n_parts = plan.n_ranks();
    let mut report = match a.timer {
        Timer::Sim => run_balancing_loop(&mesh, &cfg, n_parts, plan.timer(seed), &opts)?,
        Timer::Bench => {
            let full = full.as_ref().ok_or_else(|| {
                CliError::new(Kind::Precondition, "--timer bench needs a node/connectivity (JSON) mesh")
            })?;
            run_balancing_loop(&mesh, &cfg, n_parts, bench_timer(full, &plan, a.pack_size), &opts)?
        }
    };

    let part_path = sibling(&a.out, ".part");
    let last = report.final_partition.take().expect("the loop runs at least once");
    write_text(&part_path, &write_partition(&last))?;
    report.final_partition_ref = Some(file_name(&part_path));
    let solver_times = simulate_solver_times(&last, &plan, report.n_iterations())?.times;

    for it in &report.iterations {
        log::info!("k={} imbalance={} max_dev={}", it.k, it.imbalance, it.max_dev);
    }
    let doc = BalanceDoc {
        manifest: Manifest::new("balance", seed, a),
        report: &report,
        solver_times,
    };
    write_json(&a.out, &doc)?;
    write_text(&sibling(&a.out, ".csv"), &report.to_csv())?;
    write_manifest(&a.out, &doc.manifest)?;
    println!(
        "converged={} iterations={} imbalance={}",
        report.converged,
        report.n_iterations(),
        report.last().imbalance
    );
    Ok(())
}

fn parse_sweep(spec: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::usage(format!("--sweep expects LO..HI, got {spec:?}"));
    let spec = spec.strip_prefix("s=").unwrap_or(spec);
    let (lo, hi) = spec.split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct EfficiencyDoc {
    manifest: Manifest,
    speedup: f64,
    ratio: f64,
    eff_core: f64,
    eff_gpu: f64,
    eff_coex1: f64,
    eff_coex2: f64,
    coex2_in_range: bool,
    cores_per_gpu: u32,
    predicted_time_reduction: f64,
}

pub fn efficiency(a: &EfficiencyArgs, seed: u64) -> CliResult<()> {
    let ratios: Vec<f64> = match (a.cores, a.gpus) {
        (Some(c), Some(g)) => vec![EfficiencyParams::from_counts(c, g, 1.0)?.ratio],
        _ if a.ratio.is_empty() => return Err(CliError::usage("give --ratio or --cores with --gpus")),
        _ => a.ratio.clone(),
    };
    let cpg = CoresPerGpu::try_from(a.cores_per_gpu)?;

    if let Some(spec) = &a.sweep {
        let (lo, hi) = parse_sweep(spec)?;
        let mut csv = String::from("s,r,eff_core,eff_gpu,eff_coex1,eff_coex2\n");
        for &r in &ratios {
            let mut s = lo;
            while s <= hi + 1e-9 {
                let e = EfficiencyParams::new(s, r)?;
                let _ = writeln!(
                    csv,
                    "{s},{r},{},{},{},{}",
                    e.eff_core(),
                    e.eff_gpu(),
                    e.eff_coex1(),
                    e.eff_coex2()
                );
                s += 1.0;
            }
        }
        print!("{csv}");
        if let Some(out) = &a.out {
            write_text(out, &csv)?;
            write_manifest(out, &Manifest::new("efficiency", seed, a))?;
        }
        return Ok(());
    }

    let speedup = a
        .speedup
        .ok_or_else(|| CliError::usage("--speedup is required without --sweep"))?;
    let [ratio] = ratios[..] else {
        return Err(CliError::usage("several ratios are only allowed with --sweep"));
    };
    let e = EfficiencyParams::new(speedup, ratio)?;
    let reduction = e.predicted_time_reduction(cpg)?;
    println!("s = {speedup}");
    println!("r = {ratio}");
    println!("eff_core = {}", e.eff_core());
    println!("eff_gpu = {}", e.eff_gpu());
    println!("eff_coex1 = {}", e.eff_coex1());
    println!("eff_coex2 = {}", e.eff_coex2());
    if !e.coex2_in_range() {
        println!("coex2_in_range = false");
        log::warn!("eff_coex2 is only meaningful for s >= 2");
    }
    println!("reduction = {reduction}");
    if let Some(out) = &a.out {
        let doc = EfficiencyDoc {
            manifest: Manifest::new("efficiency", seed, a),
            speedup,
            ratio,
            eff_core: e.eff_core(),
            eff_gpu: e.eff_gpu(),
            eff_coex1: e.eff_coex1(),
            eff_coex2: e.eff_coex2(),
            coex2_in_range: e.coex2_in_range(),
            cores_per_gpu: cpg.count(),
            predicted_time_reduction: reduction,
        };
        write_json(out, &doc)?;
        write_manifest(out, &doc.manifest)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchDoc {
    manifest: Manifest,
    n_elements: usize,
    /// FNV-1a over the element-matrix bit patterns.
    checksum: String,
    matches_reference: bool,
    global_total: f64,
}

pub fn bench_assembly(a: &BenchArgs, seed: u64) -> CliResult<()> {
    let mesh = with_path(&a.mesh, FullMesh::from_json(&read(&a.mesh)?).map_err(Into::into))?;
    if a.sizes.is_empty() {
        return Err(CliError::usage("--sizes needs at least one pack size"));
    }
    let reference = assemble_reference(&mesh)?;
    let mut matches = true;
    for &size in &a.sizes {
        matches &= assemble_packs(&build_packs(&mesh, size)?) == reference;
    }
    let rows = sweep_pack_size(&mesh, &a.sizes, a.reps)?;
    let csv = sweep_to_csv(&rows);
    write_text(&a.out, &csv)?;
    print!("{csv}");

    let doc = BenchDoc {
        manifest: Manifest::new("bench-assembly", seed, a),
        n_elements: mesh.elements.len(),
        checksum: format!("{:016x}", reference.checksum()),
        matches_reference: matches,
        global_total: scatter_global(&reference, &mesh)?.total(),
    };
    write_json(&sibling(&a.out, ".json"), &doc)?;
    write_manifest(&a.out, &doc.manifest)?;
    if !matches {
        return Err(CliError::new(Kind::Other, "packed assembly differs from the reference"));
    }
    Ok(())
}
