use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use lesionstat::bbts::Polarity;
use lesionstat::config::RunConfig;
use lesionstat::labeling::Connectivity;
use lesionstat::metrics::Aggregation;
use lesionstat::pipeline::{self, json_string, ExamPaths};
use lesionstat::{Error, Result};

#[derive(Parser)]
#[command(name = "lesionstat", version, about = "Lesion statistics for longitudinal MRI segmentations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; explicit flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also print the main JSON result on stdout
    #[arg(long, global = true)]
    stdout: bool,
    /// Voxel neighbourhood for labeling: 6, 18 or 26
    #[arg(long, global = true, value_parser = parse_connectivity)]
    connectivity: Option<Connectivity>,
    /// Drop lesions smaller than this many voxels
    #[arg(long, global = true)]
    min_voxels: Option<u64>,
    /// Binarization threshold for mask inputs (foreground is strictly above)
    #[arg(long, global = true)]
    mask_threshold: Option<f64>,
    /// Volume-bin thresholds in voxels, e.g. 200,3500
    #[arg(long, global = true, value_delimiter = ',')]
    bins: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Label the lesions of one mask
    Label {
        /// NIfTI mask or directory of slice masks
        mask: PathBuf,
    },
    /// Compare a follow-up examination with a baseline
    Compare {
        prev_image: PathBuf,
        prev_mask: PathBuf,
        follow_image: PathBuf,
        follow_mask: PathBuf,
        /// Reuse a saved transform instead of registering
        #[arg(long)]
        transform: Option<PathBuf>,
        /// Relative volume change still counted as stable
        #[arg(long)]
        stability_tolerance: Option<f64>,
        /// Minimum bounding-cube overlap for a match
        #[arg(long)]
        min_ioc: Option<f64>,
    },
    /// Render collages, chart and tables of a comparison
    Report {
        comparison: PathBuf,
        follow_image: PathBuf,
        follow_mask: PathBuf,
        /// Collage tiles per row
        #[arg(long)]
        columns: Option<usize>,
        /// Chart only lesions whose follow-up volume exceeds this many voxels
        #[arg(long)]
        chart_floor: Option<u64>,
        /// Axial slice range START:END (end exclusive)
        #[arg(long, value_parser = parse_range)]
        slices: Option<Range<usize>>,
        /// Prefix of the written file names
        #[arg(long, default_value = "report")]
        stem: String,
    },
    /// Score predicted masks against ground truth
    Eval {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        /// micro or macro aggregation
        #[arg(long, default_value = "micro")]
        mode: Aggregation,
    },
    /// Threshold a slice inside operator boxes
    Bbts {
        image: PathBuf,
        boxes: PathBuf,
        /// dark or bright foreground
        #[arg(long, default_value = "dark")]
        polarity: Polarity,
        /// Manual threshold for boxes without their own
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Rigidly register a moving image onto a fixed image
    Register { fixed: PathBuf, moving: PathBuf },
}

fn parse_connectivity(s: &str) -> std::result::Result<Connectivity, String> {
    let n: u8 = s.parse().map_err(|_| format!("expected 6, 18 or 26, got {s:?}"))?;
    Connectivity::try_from(n).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected START:END, got {s:?}"))?;
    let a = a.parse().map_err(|_| format!("bad start {a:?}"))?;
    let b = b.parse().map_err(|_| format!("bad end {b:?}"))?;
    Ok(a..b)
}

fn base_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.connectivity {
        cfg.connectivity = v;
    }
    if let Some(v) = c.min_voxels {
        cfg.min_voxels = v;
    }
    if let Some(v) = c.mask_threshold {
        cfg.mask_threshold = v;
    }
    if let Some(v) = &c.bins {
        cfg.bins = v.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(&cli.common)?;
    let printed = match cli.command {
        Command::Label { mask } => json_string(&pipeline::cmd_label(&mask, &cfg)?.lesions),
        Command::Compare {
            prev_image,
            prev_mask,
            follow_image,
            follow_mask,
            transform,
            stability_tolerance,
            min_ioc,
        } => {
            if let Some(v) = stability_tolerance {
                cfg.stability_tolerance = v;
            }
            if let Some(v) = min_ioc {
                cfg.min_ioc = v;
            }
            let prev = ExamPaths {
                image: &prev_image,
                mask: &prev_mask,
            };
            let follow = ExamPaths {
                image: &follow_image,
                mask: &follow_mask,
            };
            json_string(&pipeline::cmd_compare(prev, follow, transform.as_deref(), &cfg)?.comparison)
        }
        Command::Report {
            comparison,
            follow_image,
            follow_mask,
            columns,
            chart_floor,
            slices,
            stem,
        } => {
            if let Some(v) = columns {
                cfg.columns = v;
            }
            if let Some(v) = chart_floor {
                cfg.chart_floor = v;
            }
            let follow = ExamPaths {
                image: &follow_image,
                mask: &follow_mask,
            };
            let out = pipeline::cmd_report(&comparison, follow, slices, &stem, &cfg)?;
            let names: Vec<String> = out.written.iter().map(|p| p.display().to_string()).collect();
            json_string(&names)
        }
        Command::Eval { pred_dir, gt_dir, mode } => {
            json_string(&pipeline::cmd_eval(&pred_dir, &gt_dir, mode, &cfg)?.scores)
        }
        Command::Bbts {
            image,
            boxes,
            polarity,
            threshold,
        } => json_string(&pipeline::cmd_bbts(&image, &boxes, polarity, threshold, &cfg)?.summary),
        Command::Register { fixed, moving } => {
            json_string(&pipeline::cmd_register(&fixed, &moving, &cfg)?.transform)
        }
    };
    if cli.common.stdout {
        print!("{printed}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                error!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
