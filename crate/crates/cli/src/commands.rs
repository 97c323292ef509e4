use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, IsTerminal, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde_json::json;
use splitpack::bench::{bench_stats, RandomBoxSpec};
use splitpack::packer::{init_container, pack as pack_parts, PackError, PackPart};
use splitpack::pipeline::{
    history_jsonl, split_and_pack_with, PipelineError, SplitPackConfig, SplitPackOutcome,
    SplitPackState,
};
use splitpack::report::{sha256_hex, RunReport, Timings};
use splitpack::segmentation::{build_hierarchy, SegmentationConfig};
use splitpack::tetmesh::{load_tetmesh, write_obj, ObjObject, TetMesh};

use crate::output::{create_dir, write_arrangement, write_file, PartSource, PlacementsFile};
use crate::{BenchArgs, ExportArgs, PackArgs, SegmentArgs, SplitpackArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or unreadable input.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    TargetUnreachable(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::TargetUnreachable(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<PackError> for CliError {
    fn from(e: PackError) -> Self {
        match e {
            PackError::InvalidConfig(_) => CliError::Input(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

/// `.node` and `.ele` paths for `name.node`, `name.ele` or the stem `name`.
fn mesh_paths(path: &Path) -> (PathBuf, PathBuf) {
    match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") => (path.with_extension("node"), path.with_extension("ele")),
        _ => {
            let s = path.as_os_str().to_owned();
            let with = |ext: &str| {
                let mut p = s.clone();
                p.push(ext);
                PathBuf::from(p)
            };
            (with(".node"), with(".ele"))
        }
    }
}

/// Loads a mesh and returns it with the raw bytes of its two files.
pub fn load_mesh(path: &Path) -> Result<(TetMesh, Vec<Vec<u8>>), CliError> {
    let (node, ele) = mesh_paths(path);
    let mesh = load_tetmesh(&node, &ele).map_err(|e| CliError::Input(e.to_string()))?;
    let bytes = [&node, &ele]
        .iter()
        .map(|p| fs::read(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((mesh, bytes))
}

fn digest(files: &[Vec<u8>]) -> String {
    sha256_hex(files.iter().map(|b| b.as_slice()))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configs serialize")
}

pub fn segment(args: &SegmentArgs) -> Result<(), CliError> {
    let (mesh, _) = load_mesh(&args.mesh)?;
    create_dir(&args.out.out_dir)?;
    let t = Instant::now();
    let tree = build_hierarchy(&mesh, &SegmentationConfig::default());
    let elapsed = ms(t);
    let path = args.out.out_dir.join("tree.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&tree.to_json()).expect("trees serialize"),
    )?;
    println!(
        "{} tets, {} nodes, depth {}, hierarchy {elapsed:.0} ms -> {}",
        mesh.num_tets(),
        tree.nodes().len(),
        tree.depth(),
        path.display()
    );
    if let Some(k) = args.dump_level {
        if k == 0 {
            return Err(CliError::Input("--dump-level must be at least 1".into()));
        }
        let dir = args.out.out_dir.join("parts");
        create_dir(&dir)?;
        let cut = tree.cut_with_parts(k);
        for &node in &cut {
            let surface = mesh.submesh(&tree.tets_of(node)).boundary_surface();
            let name = format!("node_{node}");
            write_file(
                &dir.join(format!("{name}.obj")),
                write_obj(&[ObjObject::from_triangles(name, surface)]),
            )?;
        }
        println!("{} parts -> {}", cut.len(), dir.display());
    }
    Ok(())
}

/// Asks on the terminal for a larger part budget.
fn prompt_budget(state: &SplitPackState) -> Option<usize> {
    let best = state.best.as_ref().map_or(0.0, |b| b.efficiency);
    eprint!(
        "part budget of {} reached at efficiency {best:.4}; new budget (empty to stop): ",
        state.n_max
    );
    std::io::stderr().flush().ok();
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line).ok()?;
    line.trim().parse().ok()
}

pub fn splitpack(args: &SplitpackArgs) -> Result<(), CliError> {
    let total = Instant::now();
    let (mesh, files) = load_mesh(&args.mesh)?;
    let config = SplitPackConfig {
        n_max: args.nmax,
        e_target: args.target,
        packer: args.packer.config(),
        interactive: !args.non_interactive && std::io::stdin().is_terminal(),
    };
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    create_dir(&args.out.out_dir)?;
    let t = Instant::now();
    let tree = build_hierarchy(&mesh, &SegmentationConfig::default());
    let hierarchy_ms = ms(t);
    info!(
        "hierarchy of {} tets in {hierarchy_ms:.0} ms",
        mesh.num_tets()
    );
    let t = Instant::now();
    let (outcome, unreachable) = match split_and_pack_with(
        &mesh,
        &tree,
        &config,
        &mut prompt_budget,
    ) {
        Ok(o) => (o, None),
        Err(PipelineError::TargetUnreachable { outcome, target }) => {
            let msg = format!(
                "target efficiency {target} not reached with at most {} parts; best {:.4} with {} parts written",
                config.n_max,
                outcome.result.efficiency,
                outcome.parts.len()
            );
            (*outcome, Some(msg))
        }
        Err(PipelineError::InvalidConfig(m)) => return Err(CliError::Input(m.into())),
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };
    let packing_ms = ms(t);
    let SplitPackOutcome {
        result,
        parts,
        history,
        target_reached,
        initial_efficiency,
        assembly,
        warnings,
        ..
    } = outcome;
    for w in &warnings {
        log::warn!("{w}");
    }
    let mesh_name = args.mesh.display().to_string();
    let sources: Vec<PartSource> = parts
        .iter()
        .map(|p| PartSource {
            mesh: mesh_name.clone(),
            tets: Some(p.tets.clone()),
        })
        .collect();
    let placements = PlacementsFile::new(&result, &sources);
    let mut cache = HashMap::from([(mesh_name, mesh)]);
    write_arrangement(&args.out.out_dir, &placements, &mut cache)?;
    write_file(
        &args.out.out_dir.join("history.jsonl"),
        history_jsonl(&history),
    )?;
    println!(
        "{} parts, efficiency {:.4} (unsplit {initial_efficiency:.4}), box {:.4} x {:.4} x {:.4}",
        parts.len(),
        result.efficiency,
        result.box_extents[0],
        result.box_extents[1],
        result.box_extents[2]
    );
    let report = RunReport {
        command: "splitpack".into(),
        input_digest: digest(&files),
        config: to_value(&config),
        n_parts: parts.len(),
        result,
        history,
        initial_efficiency: Some(initial_efficiency),
        target_reached: Some(target_reached),
        assembly: Some(assembly),
        warnings,
        timings: Timings {
            hierarchy_ms,
            packing_ms,
            total_ms: ms(total),
        },
    };
    write_file(&args.out.out_dir.join("report.json"), report.to_json())?;
    match unreachable {
        Some(msg) => Err(CliError::TargetUnreachable(msg)),
        None => Ok(()),
    }
}

pub fn pack(args: &PackArgs) -> Result<(), CliError> {
    let total = Instant::now();
    let mut files = Vec::new();
    let mut cache = HashMap::new();
    let mut parts = Vec::with_capacity(args.parts.len());
    let mut sources = Vec::with_capacity(args.parts.len());
    for (i, path) in args.parts.iter().enumerate() {
        let (mesh, bytes) = load_mesh(path)?;
        files.extend(bytes);
        parts.push(PackPart::from_mesh(i, &mesh));
        let name = path.display().to_string();
        sources.push(PartSource {
            mesh: name.clone(),
            tets: None,
        });
        cache.insert(name, mesh);
    }
    let config = args.packer.config();
    create_dir(&args.out.out_dir)?;
    let t = Instant::now();
    let result = pack_parts(&parts, &init_container(&parts), &config)?;
    let packing_ms = ms(t);
    write_arrangement(
        &args.out.out_dir,
        &PlacementsFile::new(&result, &sources),
        &mut cache,
    )?;
    println!(
        "{} parts, efficiency {:.4}, box {:.4} x {:.4} x {:.4}",
        parts.len(),
        result.efficiency,
        result.box_extents[0],
        result.box_extents[1],
        result.box_extents[2]
    );
    let report = RunReport {
        command: "pack".into(),
        input_digest: digest(&files),
        config: to_value(&config),
        n_parts: parts.len(),
        result,
        history: Vec::new(),
        initial_efficiency: None,
        target_reached: None,
        assembly: None,
        warnings: Vec::new(),
        timings: Timings {
            hierarchy_ms: 0.0,
            packing_ms,
            total_ms: ms(total),
        },
    };
    write_file(&args.out.out_dir.join("report.json"), report.to_json())
}

/// Mean efficiency the random-box experiment is compared against.
const REFERENCE_EFFICIENCY: f64 = 0.88;

pub fn bench_boxes(args: &BenchArgs) -> Result<(), CliError> {
    let spec = RandomBoxSpec {
        count: args.count,
        min_edge: args.min_edge,
        max_edge: args.max_edge,
        seed: args.packer.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    if args.seeds == 0 {
        return Err(CliError::Input("--seeds must be at least 1".into()));
    }
    create_dir(&args.out.out_dir)?;
    let stats = bench_stats(&spec, &args.packer.config(), args.seeds).map_err(|e| match e {
        splitpack::bench::BenchError::InvalidSpec(m) => CliError::Input(m.into()),
        splitpack::bench::BenchError::Pack(p) => p.into(),
    })?;
    for r in &stats.runs {
        println!(
            "seed {}: efficiency {:.4} in {:.0} ms",
            r.seed, r.efficiency, r.elapsed_ms
        );
    }
    println!(
        "mean {:.4} (min {:.4}, max {:.4}) over {} seeds; reference {REFERENCE_EFFICIENCY}",
        stats.mean_efficiency,
        stats.min_efficiency,
        stats.max_efficiency,
        stats.runs.len()
    );
    let out = json!({ "command": "bench-boxes", "reference_efficiency": REFERENCE_EFFICIENCY, "stats": stats });
    write_file(
        &args.out.out_dir.join("bench.json"),
        serde_json::to_string_pretty(&out).expect("stats serialize"),
    )
}

pub fn export(args: &ExportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.placements)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.placements.display())))?;
    let file: PlacementsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.placements.display())))?;
    create_dir(&args.out.out_dir)?;
    write_arrangement(&args.out.out_dir, &file, &mut HashMap::new())?;
    println!(
        "{} parts -> {}",
        file.parts.len(),
        args.out.out_dir.join("packed.obj").display()
    );
    Ok(())
}
