use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qrpca::bench::{run_bench, write_csv, BenchSpec};
use qrpca::metrics::{background_report, detection_report, MetricsReport, DEFAULT_TAU};
use qrpca::solver::{binarize_foreground, crib, Admm};
use qrpca::video::{self, ComponentVideos};
use serde_json::{json, Map, Value};

use crate::config::{self, ConfigLayer};
use crate::{
    BenchArgs, DecomposeArgs, EvaluateArgs, SolverFlags, SynthesizeArgs, Task, UsageError,
};

fn load_layer(path: Option<&Path>) -> Result<ConfigLayer> {
    Ok(match path {
        Some(p) => config::load(p)?,
        None => ConfigLayer::default(),
    })
}

fn required(flag: Option<&PathBuf>, layer: &ConfigLayer, key: &str) -> Result<PathBuf> {
    flag.cloned()
        .or_else(|| layer.str(key).map(PathBuf::from))
        .ok_or_else(|| UsageError(format!("--{key} is required")).into())
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if !path.exists() {
        return Err(UsageError(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(path)
}

fn flag_map(f: &SolverFlags) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("rank", f.rank.map(Value::from));
    put("iters", f.iters.map(Value::from));
    put("mu0", f.mu0.map(Value::from));
    put("rho", f.rho.map(Value::from));
    put("rho1", f.rho1.map(Value::from));
    put("rho2", f.rho2.map(Value::from));
    put("c1", f.c1.map(Value::from));
    put("c2", f.c2.map(Value::from));
    put("eps", f.eps.map(Value::from));
    put("block_h", f.block_h.map(Value::from));
    put("block_w", f.block_w.map(Value::from));
    put("fg_threshold", f.fg_threshold.map(Value::from));
    put("tv_iters", f.tv_iters.map(Value::from));
    put("tv_tol", f.tv_tol.map(Value::from));
    put("warm_start", f.no_warm_start.then_some(Value::Bool(false)));
    m
}

pub fn decompose(args: &DecomposeArgs) -> Result<()> {
    let layer = load_layer(args.config.as_deref())?;
    let frames = existing(
        required(args.frames.as_ref(), &layer, "frames")?,
        "frame directory",
    )?;
    let out = required(args.out.as_ref(), &layer, "out")?;
    let resize = match args.resize.clone().or_else(|| layer.str("resize")) {
        Some(s) => Some(config::parse_resize(&s)?),
        None => None,
    };
    let crib_bg = !args.no_crib && layer.bool("crib")?.unwrap_or(true);
    let cfg = config::merge_solver(&layer.solver, &flag_map(&args.solver))?;

    let v = video::load_frames(&frames, resize)
        .with_context(|| format!("loading {}", frames.display()))?;
    let (m, n, t) = (v.m(), v.n(), v.t());
    eprintln!("decomposing {t} frames of {n}x{m}");
    let d = video::to_quaternion(&v);
    let mut admm = Admm::new(&d, m, n, cfg.clone())?;
    for k in 0..cfg.iters {
        let mu = admm.mu();
        admm.step()?;
        let r = admm.residuals()[k];
        eprintln!(
            "iter {:>3}  mu {mu:.4e}  primal {:.3e}  split {:.3e}",
            k + 1,
            r.primal,
            r.split
        );
    }
    let dec = admm.finish();

    let background = if crib_bg { crib(&dec.l) } else { dec.l.clone() };
    let mask = binarize_foreground(&dec.f, cfg.fg_threshold, m, n)?;
    let outputs = ComponentVideos {
        background: video::from_quaternion(&background, m, n)?,
        sparse: video::from_quaternion(&dec.s, m, n)?,
        noise: video::from_quaternion(&dec.e, m, n)?,
        target: video::from_quaternion(&dec.f, m, n)?,
        mask,
    };
    let extra = json!({
        "config": cfg,
        "input": frames.display().to_string(),
        "resize": resize.map(|(w, h)| format!("{w}x{h}")),
        "crib": crib_bg,
        "iters": cfg.iters,
        "rho1": cfg.rho1_for(m, n),
        "rho2": cfg.rho2_for(m, n),
        "residuals": dec.residuals,
    });
    video::save_outputs(&outputs, &out, &extra)
        .with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn load_images(path: &Path) -> Result<Vec<ndarray::Array3<f64>>> {
    Ok(if path.is_dir() {
        video::load_frames(path, None)?.frames().to_vec()
    } else {
        vec![video::load_image(path)?]
    })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let layer = load_layer(args.config.as_deref())?;
    let task = match (args.task, layer.str("task").as_deref()) {
        (Some(t), _) => t,
        (None, None | Some("background")) => Task::Background,
        (None, Some("detection")) => Task::Detection,
        (None, Some(other)) => return Err(UsageError(format!("unknown task '{other}'")).into()),
    };
    let pred = existing(
        required(args.pred.as_ref(), &layer, "pred")?,
        "prediction path",
    )?;
    let gt = existing(
        required(args.gt.as_ref(), &layer, "gt")?,
        "ground-truth path",
    )?;
    let report_path = args
        .report
        .clone()
        .or_else(|| layer.str("report").map(PathBuf::from));
    let frame_mean = args.frame_mean || layer.bool("frame_mean")?.unwrap_or(false);

    let report = match task {
        Task::Background => {
            let tau = match args.tau {
                Some(v) => v,
                None => layer.f64("tau")?.unwrap_or(DEFAULT_TAU),
            };
            let p = load_images(&pred)?;
            let g = load_images(&gt)?;
            let r = background_report(&p, &g, tau)?;
            let s = r.mean;
            println!(
                "AGE {:.4}  pEPs {:.4}  pCEPs {:.4}  PSNR {:.4}  MS-SSIM {:.4}  CQM {:.4}",
                s.age, s.peps, s.pceps, s.psnr, s.ms_ssim, s.cqm
            );
            MetricsReport::Background(r)
        }
        Task::Detection => {
            let p = video::load_masks(&pred)?;
            let g = video::load_gray_frames(&gt)?;
            let r = detection_report(&p, &g)?;
            let s = if frame_mean { r.frame_mean } else { r.total };
            println!(
                "R {:.4}  P {:.4}  F {:.4}",
                s.recall, s.precision, s.f_measure
            );
            MetricsReport::Detection(r)
        }
    };
    if let Some(path) = report_path {
        report.save(&path)?;
    }
    Ok(())
}

pub fn synthesize(args: &SynthesizeArgs) -> Result<()> {
    let manifest: Option<Value> = match &args.from {
        Some(dir) => {
            let path = existing(dir.join("manifest.json"), "manifest")?;
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None => None,
    };
    let frames = args
        .frames
        .clone()
        .or_else(|| manifest.as_ref()?.get("input")?.as_str().map(PathBuf::from))
        .ok_or_else(|| UsageError("--frames or --from is required".into()))?;
    let masks = args
        .masks
        .clone()
        .or_else(|| args.from.as_ref().map(|d| d.join("mask")))
        .ok_or_else(|| UsageError("--masks or --from is required".into()))?;
    let frames = existing(frames, "frame directory")?;
    let masks = existing(masks, "mask directory")?;
    let background = existing(args.background.clone(), "background image")?;

    let resize = match manifest
        .as_ref()
        .and_then(|m| m.get("resize")?.as_str().map(str::to_string))
    {
        Some(s) if args.frames.is_none() => Some(config::parse_resize(&s)?),
        _ => None,
    };
    let fg = video::load_frames(&frames, resize)?;
    let mask = video::load_masks(&masks)?;
    let bg = video::load_image(&background)?;
    let out = video::composite(&mask, &fg, &bg)?;
    video::save_video(&out, &args.out, |v| v)?;
    eprintln!("wrote {} frames to {}", out.t(), args.out.display());
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let spec = BenchSpec {
        rows: args.rows,
        cols_list: args.cols.clone(),
        iters: args.iters,
        seed: args.seed,
        ..BenchSpec::default()
    };
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    let rows = if args.parallel {
        run_bench(&spec)?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .context("building the benchmark thread")?
            .install(|| run_bench(&spec))?
    };
    for r in &rows {
        eprintln!(
            "cols {:>4}  qsvd {:.4e} s  fwr1 {:.4e} s  max diff {:.1e}",
            r.cols, r.qsvd_s, r.fwr1_s, r.max_rel_diff
        );
    }
    match &args.csv {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, file)?;
        }
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}
