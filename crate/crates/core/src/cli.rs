//! `segeval` command line. Exit codes: 0 success, 1 data or validation
//! failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::augmentation::{augment, AugmentConfig, RasterImage, Sample};
use crate::dataset::{
    class_histogram, parse_detections, parse_manifest, parse_via, split, to_via, validate, validate_with_manifest, ClassRegistry,
    DatasetBundle, Detection, Severity, SplitSizes, DEFAULT_ATTRIBUTE_KEY,
};
use crate::evaluation::{evaluate_with_curves, threshold_sweep, IouKind, KindSelection, MatchConfig};
use crate::report::{emit_curves, format_report, sweep_csv};
use crate::rng::RngState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping evaluation workers.
pub const THREADS_ENV: &str = "SEGEVAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "segeval", version, about = "Evaluation and dataset tools for polygon instance segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GtArgs {
    /// Sidecar `file_name,width,height` list for frame sizes.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Region attribute holding the class name.
    #[arg(long, default_value = DEFAULT_ATTRIBUTE_KEY)]
    attribute_key: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an annotation file; exits 1 when any error is found. With a
    /// manifest, annotated images it does not list are dangling.
    Validate {
        via: PathBuf,
        #[command(flatten)]
        gt: GtArgs,
    },
    /// Annotation counts per class.
    Stats {
        via: PathBuf,
        #[command(flatten)]
        gt: GtArgs,
    },
    /// Seeded train/val/test split by image.
    Split {
        via: PathBuf,
        /// Image counts, e.g. 1315,331,157.
        #[arg(long, value_parser = parse_sizes)]
        sizes: SplitSizes,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        gt: GtArgs,
    },
    /// AP report for predictions against ground truth.
    Eval(EvalArgs),
    /// FP/FN/TP across score thresholds.
    Sweep {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// `start:step:stop` (inclusive) or a comma list, ascending.
        #[arg(long, value_parser = parse_grid, default_value = "0:0.05:1")]
        grid: FloatList,
        #[arg(long, default_value_t = 0.5)]
        iou_thr: f64,
        #[arg(long, value_enum, default_value_t = SweepKind::Box)]
        kind: SweepKind,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        gt_args: GtArgs,
    },
    /// Seeded augmentation of every annotated image.
    Augment {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 800)]
        resize: u32,
        #[arg(long, default_value_t = 0.0)]
        hflip_p: f64,
        #[arg(long, default_value_t = 0.5)]
        vflip_p: f64,
        #[arg(long, default_value_t = 15.0)]
        rotation_limit: f64,
        #[arg(long, default_value_t = 0.5)]
        photometric_p: f64,
        #[arg(long, default_value_t = 0.2)]
        photometric_limit: f64,
        #[command(flatten)]
        gt_args: GtArgs,
    },
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalKind::Both)]
    kind: EvalKind,
    #[arg(long, default_value_t = 0.70)]
    score_thr: f64,
    /// Per-threshold AP columns.
    #[arg(long, value_parser = parse_list, default_value = "0.50,0.75")]
    iou_thrs: FloatList,
    /// JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV destination; stdout when given without a path.
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    csv: Option<PathBuf>,
    /// Print the table (the default when no other output is chosen).
    #[arg(long)]
    table: bool,
    /// Model name for the table's first column.
    #[arg(long)]
    model: Option<String>,
    /// Count non-defect classes in the mean rows.
    #[arg(long)]
    include_non_defect_classes: bool,
    /// Directory for PR-curve CSVs (and charts with --svg).
    #[arg(long)]
    curves_dir: Option<PathBuf>,
    #[arg(long, requires = "curves_dir")]
    svg: bool,
    #[command(flatten)]
    gt_args: GtArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalKind {
    Box,
    Mask,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    Box,
    Mask,
}

fn parse_sizes(s: &str) -> Result<SplitSizes, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok(SplitSizes::new(a, b, c)),
        _ => Err(format!("expected three counts, got {}", v.len())),
    }
}

/// A comma list or grid given as one flag value.
#[derive(Debug, Clone, PartialEq)]
struct FloatList(Vec<f64>);

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

fn parse_list(s: &str) -> Result<FloatList, String> {
    floats(s).map(FloatList)
}

/// Rounds away the drift of `start + k * step`.
fn tidy(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

fn parse_grid(s: &str) -> Result<FloatList, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let v = match parts[..] {
        [_] => floats(s)?,
        [a, step, b] => {
            let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0) || !(b >= a) {
                return Err("need start <= stop and a positive step".into());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| tidy(a + k as f64 * step)).collect()
        }
        _ => return Err("expected start:step:stop or a comma list".into()),
    };
    if v.windows(2).any(|w| w[0] > w[1]) {
        return Err("grid must be ascending".into());
    }
    Ok(FloatList(v))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, body: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn load_gt(path: &Path, args: &GtArgs) -> anyhow::Result<DatasetBundle> {
    let manifest = match &args.manifest {
        Some(m) => Some(parse_manifest(&read(m)?).with_context(|| format!("in {}", m.display()))?),
        None => None,
    };
    parse_via(&read(path)?, &ClassRegistry::rope_defects(), &args.attribute_key, manifest.as_ref())
        .with_context(|| format!("in {}", path.display()))
}

fn load_pred(path: &Path, bundle: &DatasetBundle) -> anyhow::Result<Vec<Detection>> {
    parse_detections(&read(path)?, &bundle.registry).with_context(|| format!("in {}", path.display()))
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}

/// Runs with the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with explicit output streams; `argv[0]` is the program name.
pub fn run_with_io<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(m) => {
            let _ = writeln!(err, "error: {m}");
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command, threads, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

fn dispatch(cmd: Command, threads: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Validate { via, gt } => {
            let b = load_gt(&via, &gt)?;
            let issues = match &gt.manifest {
                Some(m) => validate_with_manifest(&b, &parse_manifest(&read(m)?)?),
                None => validate(&b),
            };
            for i in &issues {
                writeln!(out, "{i}")?;
            }
            let errors = issues.iter().filter(|i| i.severity == Severity::Error).count();
            writeln!(
                err,
                "{} images, {} annotations: {errors} errors, {} warnings",
                b.images.len(),
                b.annotations.len(),
                issues.len() - errors
            )?;
            Ok(if errors > 0 { EXIT_DATA } else { EXIT_OK })
        }
        Command::Stats { via, gt } => {
            let b = load_gt(&via, &gt)?;
            let h = class_histogram(&b);
            let width = h.counts.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("images".len());
            for (name, n) in &h.counts {
                writeln!(out, "{name:<width$}  {n}")?;
            }
            writeln!(out, "{:<width$}  {}", "total", h.total)?;
            writeln!(out, "{:<width$}  {}", "images", b.images.len())?;
            Ok(EXIT_OK)
        }
        Command::Split {
            via,
            sizes,
            seed,
            out_dir,
            gt,
        } => {
            let b = load_gt(&via, &gt)?;
            let parts = split(&b, sizes, seed)?;
            for (name, part) in ["train", "val", "test"].iter().zip(&parts) {
                let path = out_dir.join(format!("{name}.json"));
                let mut body = serde_json::to_string_pretty(&to_via(part, &gt.attribute_key))?;
                body.push('\n');
                write(&path, body.as_bytes())?;
                writeln!(
                    out,
                    "{name}: {} images, {} annotations -> {}",
                    part.images.len(),
                    part.annotations.len(),
                    path.display()
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Eval(a) => {
            let b = load_gt(&a.gt, &a.gt_args)?;
            let dets = load_pred(&a.pred, &b)?;
            let cfg = MatchConfig {
                iou_thresholds: a.iou_thrs.0.clone(),
                iou_kind: match a.kind {
                    EvalKind::Box => KindSelection::Box,
                    EvalKind::Mask => KindSelection::Mask,
                    EvalKind::Both => KindSelection::Both,
                },
                score_threshold: a.score_thr,
                include_non_defect: a.include_non_defect_classes,
                threads,
                ..MatchConfig::default()
            };
            let (report, curves) = evaluate_with_curves(&b, &dets, &cfg)?;
            for s in &report.metadata.skipped_kinds {
                writeln!(err, "note: skipped {s}")?;
            }
            let rendered = format_report(&report, a.model.as_deref())?;
            if let Some(p) = &a.out {
                write(p, rendered.json.as_bytes())?;
            }
            match &a.csv {
                Some(p) if p.as_os_str() == "-" => out.write_all(rendered.csv.as_bytes())?,
                Some(p) => write(p, rendered.csv.as_bytes())?,
                None => {}
            }
            if let Some(dir) = &a.curves_dir {
                emit_curves(dir, &curves, None, a.svg)?;
            }
            let csv_to_stdout = a.csv.as_ref().is_some_and(|p| p.as_os_str() == "-");
            if a.table || (a.out.is_none() && a.csv.is_none()) {
                if csv_to_stdout {
                    writeln!(out)?;
                }
                out.write_all(rendered.table.as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            gt,
            pred,
            grid,
            iou_thr,
            kind,
            out: dest,
            gt_args,
        } => {
            if !(iou_thr > 0.0 && iou_thr <= 1.0) {
                bail!("IoU threshold {iou_thr} outside (0, 1]");
            }
            let b = load_gt(&gt, &gt_args)?;
            let dets = load_pred(&pred, &b)?;
            let kind = match kind {
                SweepKind::Box => IouKind::Box,
                SweepKind::Mask => IouKind::Mask,
            };
            let series = crate::evaluation::with_workers(threads, || threshold_sweep(&b, &dets, iou_thr, kind, &grid.0))??;
            let body = sweep_csv(&series);
            match dest {
                Some(p) => write(&p, body.as_bytes())?,
                None => out.write_all(body.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Augment {
            gt,
            images,
            seed,
            out_dir,
            resize,
            hflip_p,
            vflip_p,
            rotation_limit,
            photometric_p,
            photometric_limit,
            gt_args,
        } => {
            let cfg = AugmentConfig {
                resize_target: resize,
                hflip_p,
                vflip_p,
                rotation_limit,
                photometric_p,
                photometric_limit,
            };
            cfg.validate()?;
            let b = load_gt(&gt, &gt_args)?;
            let by_image = b.annotations_by_image();
            let mut out_bundle = DatasetBundle::new(b.registry.clone());
            let mut log = Vec::new();
            for (index, (img, truths)) in b.images.iter().zip(&by_image).enumerate() {
                let src = images.join(&img.file_name);
                let raster = RasterImage::read(&src)?;
                let sample = Sample::new(raster, truths.iter().map(|t| (*t).clone()).collect())?;
                let mut rng = RngState::for_stream(seed, index as u64);
                let (aug, trace) = augment(&sample, &cfg, &mut rng)?;
                let dest = out_dir.join(&img.file_name);
                if let Some(dir) = dest.parent() {
                    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                }
                aug.image().write(&dest)?;
                let size = fs::metadata(&dest).map(|m| m.len() as i64).unwrap_or(-1);
                let (raster, kept) = aug.into_parts();
                out_bundle.images.push(crate::dataset::ImageRecord {
                    file_name: img.file_name.clone(),
                    width: raster.width(),
                    height: raster.height(),
                    file_size: size,
                });
                out_bundle.annotations.extend(kept);
                log.push(serde_json::json!({ "image": img.file_name, "stream": index, "trace": trace }));
            }
            let mut via = serde_json::to_string_pretty(&to_via(&out_bundle, &gt_args.attribute_key))?;
            via.push('\n');
            write(&out_dir.join("annotations.json"), via.as_bytes())?;
            let mut log_text = serde_json::to_string_pretty(&serde_json::json!({
                "seed": seed,
                "config": cfg,
                "samples": log,
            }))?;
            log_text.push('\n');
            write(&out_dir.join("augment_log.json"), log_text.as_bytes())?;
            writeln!(out, "augmented {} images -> {}", b.images.len(), out_dir.display())?;
            Ok(EXIT_OK)
        }
    }
}
