use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use affrecon::core::affordance::{extract_regions, fuse_affordance, softmax_mask, Affordance, ContinuityPolicy};
use affrecon::core::proposals::{pick_proposal, pour_proposal, stack_proposal, ProposalConfig, StackRole};
use affrecon::core::recon::{crop_instance, reconstruct_scene, ReconConfig, DEFAULT_PAD};
use affrecon::core::Connectivity;
use affrecon::report::{self, PoseRecord};
use affrecon::synth::{default_intrinsics, gen_synthetic, SynthCupSpec};
use affrecon::{formats, load_scene, save_scene, scene, Scene};
use clap::{Args, Parser, Subcommand, ValueEnum};

type CliResult<T = ()> = Result<T, Box<dyn Error>>;

/// Affordance-guided depth reconstruction of transparent objects.
#[derive(Parser)]
#[command(name = "affrecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic cup scene.
    GenSynth {
        /// Output directory; the manifest is written as `scene.toml` inside it.
        #[arg(long, default_value = "synth")]
        out: PathBuf,
        /// Corruption seed (and shape seed with --vary).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cup specification (TOML); built-in defaults otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Override the fraction of object depth pixels dropped.
        #[arg(long)]
        drop: Option<f64>,
        /// Perturb cup shape and viewpoint from the seed.
        #[arg(long)]
        vary: bool,
    },
    /// Reconstruct object depth, multi-step by default.
    Reconstruct {
        #[arg(long)]
        scene: PathBuf,
        /// Output depth PNG; defaults to `depth_pred.png` next to the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Single global optimisation over every object pixel.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        recon: ReconArgs,
    },
    /// Depth metrics of a prediction per affordance region.
    Evaluate {
        #[arg(long)]
        scene: PathBuf,
        /// Predicted depth PNG; defaults to `depth_pred.png` next to the manifest.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Also write the metrics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuse instance classification scores into the affordance volume.
    Fuse {
        #[arg(long)]
        scene: PathBuf,
        /// Output directory for `fused_volume.png` and `fused_mask.png`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Manipulation pose proposals from reconstructed depth.
    Propose {
        #[arg(value_enum)]
        task: Task,
        #[arg(long)]
        scene: PathBuf,
        /// Depth PNG; defaults to `depth_pred.png` next to the manifest.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Write the poses as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stacking: which affordance of the object is used.
        #[arg(long, value_enum, default_value_t = Role::Contain)]
        role: Role,
        /// Pouring: shift along the tool y axis, meters.
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
    },
    /// Run multi-step and single-step reconstruction and compare them.
    CompareBaseline {
        #[arg(long)]
        scene: PathBuf,
        /// Also write both metric sets as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        recon: ReconArgs,
    },
}

#[derive(Args)]
struct ReconArgs {
    #[arg(long, default_value_t = 1000.0)]
    lambda_d: f64,
    #[arg(long, default_value_t = 0.001)]
    lambda_s: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_n: f64,
    #[arg(long, default_value_t = 500)]
    ransac_iters: usize,
    /// RANSAC inlier threshold, millimeters.
    #[arg(long, default_value_t = 5.0)]
    inlier_mm: f64,
    /// RANSAC seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ContinuityArg::Lookup)]
    continuity: ContinuityArg,
    #[arg(long, default_value = "4", value_parser = ["4", "8"])]
    connectivity: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuityArg {
    Lookup,
    Boundary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Pick,
    Pour,
    Stack,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Role {
    Contain,
    Support,
}

impl ReconArgs {
    fn config(&self) -> CliResult<ReconConfig> {
        let mut cfg = ReconConfig::default();
        cfg.weights.lambda_d = self.lambda_d;
        cfg.weights.lambda_s = self.lambda_s;
        cfg.weights.lambda_n = self.lambda_n;
        cfg.weights.validate()?;
        if self.ransac_iters == 0 {
            return Err("--ransac-iters must be at least 1".into());
        }
        if !(self.inlier_mm > 0.0) {
            return Err("--inlier-mm must be positive".into());
        }
        cfg.ransac_iterations = self.ransac_iters;
        cfg.inlier_threshold = self.inlier_mm / 1000.0;
        cfg.seed = self.seed;
        cfg.graph.continuity = match self.continuity {
            ContinuityArg::Lookup => ContinuityPolicy::Lookup,
            ContinuityArg::Boundary => ContinuityPolicy::DEFAULT_BOUNDARY,
        };
        cfg.connectivity = if self.connectivity == "8" {
            Connectivity::Eight
        } else {
            Connectivity::Four
        };
        Ok(cfg)
    }
}

/// A directory stands for the `scene.toml` inside it.
fn manifest_path(scene: &Path) -> PathBuf {
    if scene.is_dir() {
        scene.join("scene.toml")
    } else {
        scene.to_path_buf()
    }
}

fn scene_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    scene::write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))?;
    Ok(())
}

fn gen_synth(out: &Path, seed: u64, spec: Option<&Path>, drop: Option<f64>, vary: bool) -> CliResult {
    let mut s: SynthCupSpec = match spec {
        Some(p) => scene::read_toml(p)?,
        None => SynthCupSpec::default(),
    };
    if vary {
        s = s.varied(seed);
    }
    if let Some(d) = drop {
        s.corruption.drop_fraction = d;
    }
    let scene = gen_synthetic(&s, &default_intrinsics(), seed)?;
    let manifest = out.join("scene.toml");
    save_scene(&scene, &manifest)?;
    scene::write_text(&out.join("cup.toml"), &toml::to_string(&s)?)?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn run_reconstruction(scene: &Scene, cfg: &ReconConfig, baseline: bool) -> CliResult<(affrecon::core::depth::DepthImage, serde_json::Value)> {
    let (depth, results) = reconstruct_scene(&scene.layers, &scene.bboxes(), DEFAULT_PAD, cfg, baseline)?;
    Ok((depth, report::diagnostics_json(&results)))
}

fn reconstruct(scene_arg: &Path, out: Option<&Path>, baseline: bool, recon: &ReconArgs) -> CliResult {
    let cfg = recon.config()?;
    let manifest = manifest_path(scene_arg);
    let scene = load_scene(&manifest)?;
    let t = Instant::now();
    let (depth, diag) = run_reconstruction(&scene, &cfg, baseline)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| scene_dir(&manifest).join("depth_pred.png"));
    formats::save_depth(&out, &depth)?;
    let diag_path = out.with_extension("json");
    write_json(&diag_path, &diag)?;
    println!(
        "{} reconstruction of {} instance(s) in {:.2} s: {} (diagnostics {})",
        if baseline { "single-step" } else { "multi-step" },
        scene.instances.len(),
        t.elapsed().as_secs_f64(),
        out.display(),
        diag_path.display()
    );
    Ok(())
}

fn ground_truth(scene: &Scene, manifest: &Path) -> CliResult<affrecon::core::depth::DepthImage> {
    scene
        .depth_gt
        .clone()
        .ok_or_else(|| format!("{}: manifest has no depth_gt", manifest.display()).into())
}

fn evaluate(scene_arg: &Path, pred: Option<&Path>, out: Option<&Path>) -> CliResult {
    let manifest = manifest_path(scene_arg);
    let scene = load_scene(&manifest)?;
    let gt = ground_truth(&scene, &manifest)?;
    let pred_path = pred.map(Path::to_path_buf).unwrap_or_else(|| scene_dir(&manifest).join("depth_pred.png"));
    let pred = formats::load_depth(&pred_path)?;
    if !pred.values().same_size(gt.values()) {
        return Err(format!("{}: size differs from the ground truth", pred_path.display()).into());
    }
    let rows = report::evaluate_regions(&pred, &gt, &scene.layers.mask);
    print!("{}", report::metrics_table(&rows));
    if let Some(out) = out {
        write_json(out, &rows)?;
    }
    Ok(())
}

fn fuse(scene_arg: &Path, out: &Path) -> CliResult {
    let manifest = manifest_path(scene_arg);
    let scene = load_scene(&manifest)?;
    let volume = scene
        .layers
        .volume
        .as_ref()
        .ok_or_else(|| format!("{}: manifest has no affordance_volume", manifest.display()))?;
    // Each instance's scores apply inside its box; later instances win where boxes overlap.
    let mut channels: Vec<_> = volume.channels().to_vec();
    for inst in &scene.instances {
        let fused = fuse_affordance(volume, &inst.scores)?;
        let b = inst.bbox;
        for (c, grid) in channels.iter_mut().enumerate() {
            for v in b.v0..b.v1 {
                for u in b.u0..b.u1 {
                    let p = affrecon::core::Pixel::new(u, v);
                    grid.set(p, *fused.channel(c).get(p));
                }
            }
        }
    }
    let fused = affrecon::core::affordance::AffordanceVolume::new(channels)?;
    let (_, mask) = softmax_mask(&fused);
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    formats::save_volume(&out.join("fused_volume.png"), &fused)?;
    formats::save_mask(&out.join("fused_mask.png"), &mask)?;
    println!("wrote {} and {}", out.join("fused_volume.png").display(), out.join("fused_mask.png").display());
    Ok(())
}

fn propose(task: Task, scene_arg: &Path, pred: Option<&Path>, out: Option<&Path>, role: Role, offset: f64) -> CliResult {
    let manifest = manifest_path(scene_arg);
    let mut scene = load_scene(&manifest)?;
    let pred_path = pred.map(Path::to_path_buf).unwrap_or_else(|| scene_dir(&manifest).join("depth_pred.png"));
    let depth = formats::load_depth(&pred_path)?;
    if !depth.values().same_size(scene.layers.depth_raw.values()) {
        return Err(format!("{}: size differs from the scene", pred_path.display()).into());
    }
    scene.layers.depth_raw = depth;
    let cfg = ProposalConfig {
        container_length_offset: offset,
        ..ProposalConfig::default()
    };
    let rcfg = ReconConfig::default();
    let mut records = Vec::new();
    for (i, inst) in scene.instances.iter().enumerate() {
        let crop = crop_instance(&scene.layers, inst.bbox, DEFAULT_PAD)?;
        let regions = extract_regions(&crop.mask, rcfg.min_area, rcfg.connectivity);
        let largest = |a: Affordance| {
            regions
                .iter()
                .filter(|r| r.class == a.label())
                .max_by_key(|r| r.area())
                .ok_or_else(|| format!("instance {i}: no {} region", a.name()))
        };
        let d = &crop.depth_raw;
        let k = &crop.intrinsics;
        let (kind, pose) = match task {
            Task::Pick => ("pick", pick_proposal(largest(Affordance::WrapGrasp)?, d, &crop.normals, k, &cfg)),
            Task::Pour => ("pour", pour_proposal(largest(Affordance::Contain)?, d, k, &cfg)),
            Task::Stack => {
                let r = if role == Role::Contain {
                    StackRole::HasContain
                } else {
                    StackRole::HasSupport
                };
                ("stack", stack_proposal(r, &regions, d, &crop.normals, k, &cfg))
            }
        };
        let pose = pose.map_err(|e| format!("instance {i}: {e}"))?;
        let rec = PoseRecord::new(kind, &pose);
        println!("{}", report::pose_line(&rec));
        records.push(rec);
    }
    if let Some(out) = out {
        write_json(out, &records)?;
    }
    Ok(())
}

fn compare_baseline(scene_arg: &Path, out: Option<&Path>, recon: &ReconArgs) -> CliResult {
    let cfg = recon.config()?;
    let manifest = manifest_path(scene_arg);
    let scene = load_scene(&manifest)?;
    let gt = ground_truth(&scene, &manifest)?;
    let (multi, _) = run_reconstruction(&scene, &cfg, false)?;
    let (single, _) = run_reconstruction(&scene, &cfg, true)?;
    let m = report::evaluate_regions(&multi, &gt, &scene.layers.mask);
    let s = report::evaluate_regions(&single, &gt, &scene.layers.mask);
    print!("{}", report::comparison_table(("multi-step", &m), ("baseline", &s)));
    if let Some(out) = out {
        write_json(out, &serde_json::json!({ "multi_step": m, "baseline": s }))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenSynth {
            out,
            seed,
            spec,
            drop,
            vary,
        } => gen_synth(&out, seed, spec.as_deref(), drop, vary),
        Command::Reconstruct {
            scene,
            out,
            baseline,
            recon,
        } => reconstruct(&scene, out.as_deref(), baseline, &recon),
        Command::Evaluate { scene, pred, out } => evaluate(&scene, pred.as_deref(), out.as_deref()),
        Command::Fuse { scene, out } => fuse(&scene, &out),
        Command::Propose {
            task,
            scene,
            pred,
            out,
            role,
            offset,
        } => propose(task, &scene, pred.as_deref(), out.as_deref(), role, offset),
        Command::CompareBaseline { scene, out, recon } => compare_baseline(&scene, out.as_deref(), &recon),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 inside `parse`.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
