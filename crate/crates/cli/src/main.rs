//! `lbdface` command-line front end.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lbdface::classifier::{self, ClassifierParams, DEFAULT_PERTURBATION_RADIUS, DEFAULT_THETA};
use lbdface::eval::{self, ExperimentConfig, SampleSelection};
use lbdface::features::{FeatureExtractor, FeatureParams, FilterBank, Window};
use lbdface::gallery::{self, CacheFile, GalleryModel, Role};
use lbdface::imgproc::{self, EyeCoordinates, Point};

#[derive(Debug, Parser)]
#[command(
    name = "lbdface",
    version,
    about = "Face identification by local binary decisions on similarity"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a gallery from the manifest's gallery rows and write a feature cache.
    Enroll(EnrollArgs),
    /// Rank a probe image against a feature cache.
    Identify(IdentifyArgs),
    /// Rank-1 identification accuracy over the manifest's test rows.
    Evaluate(EvaluateArgs),
    /// Accuracy for both gallery models across feature dimensions.
    Sweep(SweepArgs),
    /// Accuracy as the number of gallery samples per subject grows.
    Curve(CurveArgs),
    /// Classification timing for both gallery models.
    Bench(BenchArgs),
    /// Cumulative rank accuracy of condition tagging.
    Tag(TagArgs),
    /// Write the prepared image and its feature channels as graymaps.
    Extract(ExtractArgs),
}

#[derive(Debug, Args)]
struct FeatureOpts {
    /// Filter bank file (defaults to the built-in six-kernel bank).
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Standard-deviation window, e.g. 3 or 3x3.
    #[arg(long, default_value = "3", value_parser = parse_window)]
    stddev_window: Window,
    /// Local-mean normalization window.
    #[arg(long, default_value = "30", value_parser = parse_window)]
    norm_window: Window,
}

impl FeatureOpts {
    fn extractor(&self, dims: Window) -> Result<FeatureExtractor> {
        let params = FeatureParams {
            stddev_window: self.stddev_window,
            norm_window: self.norm_window,
            feature_dims: dims,
            ..FeatureParams::default()
        };
        Ok(FeatureExtractor::new(self.bank()?, params)?)
    }

    fn bank(&self) -> Result<FilterBank> {
        match &self.bank {
            Some(p) => {
                FilterBank::load(p).with_context(|| format!("loading filter bank {}", p.display()))
            }
            None => Ok(FilterBank::default_bank()),
        }
    }
}

#[derive(Debug, Args)]
struct EnrollArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "exemplar")]
    model: GalleryModel,
    /// Feature dimensions, e.g. 60 or 60x60.
    #[arg(long, default_value = "60", value_parser = parse_window)]
    dims: Window,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureOpts,
}

#[derive(Debug, Args)]
struct IdentifyArgs {
    #[arg(long)]
    cache: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Eye centres as `lx,ly,rx,ry`.
    #[arg(long, value_parser = parse_eyes)]
    eyes: Option<EyeCoordinates>,
    /// Perturbation radius in pixels; 0 disables the shift search.
    #[arg(long, default_value_t = DEFAULT_PERTURBATION_RADIUS)]
    perturb: u32,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[command(flatten)]
    features: FeatureOpts,
}

#[derive(Debug, Args)]
struct ExperimentOpts {
    #[arg(long)]
    manifest: PathBuf,
    /// Perturbation radius; perturbation is off unless given.
    #[arg(long)]
    perturb: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// CSV report path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureOpts,
}

impl ExperimentOpts {
    fn config(&self, dims: Vec<Window>) -> Result<ExperimentConfig> {
        let classifier = ClassifierParams {
            theta: self.theta,
            perturbation_radius: self.perturb.unwrap_or(0),
            ..ClassifierParams::default()
        };
        let features = FeatureParams {
            stddev_window: self.features.stddev_window,
            norm_window: self.features.norm_window,
            ..FeatureParams::default()
        };
        Ok(ExperimentConfig {
            model: GalleryModel::Exemplar,
            feature_dims: dims,
            perturbation: self.perturb.is_some_and(|r| r > 0),
            classifier,
            bank: self.features.bank()?,
            features,
            ..ExperimentConfig::new(&self.manifest)
        })
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    exp: ExperimentOpts,
    #[arg(long, default_value = "exemplar")]
    model: GalleryModel,
    #[arg(long, default_value = "60", value_parser = parse_window)]
    dims: Window,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentOpts,
    /// Comma-separated feature dimensions, e.g. 20,40,60 or 40x40,60x60.
    #[arg(long, value_delimiter = ',', value_parser = parse_window, default_value = "10,20,30,40,50,60,70,80,90")]
    dims: Vec<Window>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    exp: ExperimentOpts,
    #[arg(long, default_value = "60", value_parser = parse_window)]
    dims: Window,
    /// Largest number of gallery samples per subject.
    #[arg(long)]
    max_k: usize,
    /// Pick each subject's samples in a seeded random order instead of by id.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    exp: ExperimentOpts,
    #[arg(long, value_delimiter = ',', value_parser = parse_window, default_value = "40,60,80")]
    dims: Vec<Window>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
}

#[derive(Debug, Args)]
struct TagArgs {
    #[command(flatten)]
    exp: ExperimentOpts,
    #[arg(long, default_value = "60", value_parser = parse_window)]
    dims: Window,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_parser = parse_eyes)]
    eyes: Option<EyeCoordinates>,
    #[arg(long, default_value = "60", value_parser = parse_window)]
    dims: Window,
    /// Directory for `prepared.pgm` and `channel_<p>.pgm`.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    features: FeatureOpts,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let side = |t: &str| {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("`{t}` is not a positive integer"))
    };
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok(Window::new(side(w)?, side(h)?)),
        None => side(s).map(Window::square),
    }
}

fn parse_eyes(s: &str) -> Result<EyeCoordinates, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let [lx, ly, rx, ry] = v[..] else {
        return Err("expected four values lx,ly,rx,ry".into());
    };
    Ok(EyeCoordinates::new(Point::new(lx, ly), Point::new(rx, ry)))
}

fn enroll(args: &EnrollArgs) -> Result<()> {
    let extractor = args.features.extractor(args.dims)?;
    let rows: Vec<_> = gallery::parse_manifest(&args.manifest)?
        .into_iter()
        .filter(|e| e.role == Role::Gallery)
        .collect();
    let built = gallery::build_gallery(&rows, args.model, &extractor)?;
    gallery::save_feature_cache(&built, &extractor, &args.out)?;
    println!(
        "enrolled {} {} entries ({} subjects) at {} into {}",
        built.len(),
        args.model.as_str(),
        built.subjects().count(),
        args.dims,
        args.out.display()
    );
    Ok(())
}

fn identify(args: &IdentifyArgs) -> Result<()> {
    let cache = CacheFile::read(&args.cache)?;
    let Some((width, height)) = cache.dims() else {
        bail!("feature cache {} holds no entries", args.cache.display());
    };
    let extractor = args.features.extractor(Window::new(width, height))?;
    let gallery = cache.into_gallery(&extractor)?;
    let probe = imgproc::load_image(&args.image)?;
    let prepared = extractor.prepare(&probe, args.eyes.as_ref())?;
    let params = ClassifierParams {
        theta: args.theta,
        perturbation_radius: args.perturb,
        ..ClassifierParams::default()
    };
    let result = classifier::classify_with_perturbations(&prepared, &gallery, &extractor, &params)?;
    for (rank, m) in result.top(args.top).iter().enumerate() {
        println!(
            "{}\t{}\t{}\t{:.3}\t{},{}",
            rank + 1,
            m.subject,
            m.sample,
            m.score.normalized(),
            m.perturbation.dx,
            m.perturbation.dy
        );
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        model: args.model,
        ..args.exp.config(vec![args.dims])?
    };
    let report = eval::run_identification(&cfg)?;
    report.write_csv(&args.exp.out)?;
    let row = &report.rows[0];
    println!(
        "accuracy={:.1}% ({}/{} probes)",
        row.accuracy, row.correct, row.probes
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let report = eval::dimensionality_sweep(&args.exp.config(args.dims.clone())?)?;
    report.write_csv(&args.exp.out)?;
    println!(
        "wrote {} rows to {}",
        report.rows.len(),
        args.exp.out.display()
    );
    Ok(())
}

fn curve(args: &CurveArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        seed: args.seed,
        ..args.exp.config(vec![args.dims])?
    };
    let selection = if args.random {
        SampleSelection::Random
    } else {
        SampleSelection::First
    };
    let report = eval::training_curve(&cfg, args.max_k, selection)?;
    report.write_csv(&args.exp.out)?;
    let summary: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "k={}:{:.1}%",
                r.samples_per_subject.unwrap_or(0),
                r.accuracy
            )
        })
        .collect();
    println!("{}", summary.join(" "));
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        repetitions: args.repetitions,
        ..args.exp.config(args.dims.clone())?
    };
    let report = eval::timing_benchmark(&cfg)?;
    report.write_csv(&args.exp.out)?;
    println!(
        "wrote {} timing rows to {}",
        report.rows.len(),
        args.exp.out.display()
    );
    Ok(())
}

fn tag(args: &TagArgs) -> Result<()> {
    let report = eval::tag_variability(&args.exp.config(vec![args.dims])?)?;
    report.write_csv(&args.exp.out)?;
    let rank1: Vec<String> = report
        .conditions
        .iter()
        .zip(&report.accuracy[0])
        .map(|(c, a)| format!("{c}={a:.1}%"))
        .collect();
    println!("rank-1 {}", rank1.join(" "));
    Ok(())
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let extractor = args.features.extractor(args.dims)?;
    let img = imgproc::load_image(&args.image)?;
    let prepared = extractor.prepare(&img, args.eyes.as_ref())?;
    let features = extractor.extract(&prepared)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    prepared.save_pgm(args.out_dir.join("prepared.pgm"))?;
    for (p, channel) in features.channels().iter().enumerate() {
        // Scale each channel to its own maximum for viewing.
        let max = channel.values().iter().cloned().fold(0.0, f64::max);
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        let view = imgproc::Image::new(
            channel.width(),
            channel.height(),
            channel.values().iter().map(|v| v * scale).collect(),
        )?;
        view.save_pgm(args.out_dir.join(format!("channel_{}.pgm", p + 1)))?;
    }
    println!(
        "wrote prepared image and {} channels to {}",
        features.num_channels(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Enroll(a) => enroll(a),
        Command::Identify(a) => identify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Curve(a) => curve(a),
        Command::Bench(a) => bench(a),
        Command::Tag(a) => tag(a),
        Command::Extract(a) => extract(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage errors exit with 2, --help/--version with 0.
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_arguments() {
        assert_eq!(parse_window("40").unwrap(), Window::square(40));
        assert_eq!(parse_window("40x30").unwrap(), Window::new(40, 30));
        assert!(parse_window("0").is_err());
        assert!(parse_window("ax3").is_err());
    }

    #[test]
    fn eye_arguments() {
        let e = parse_eyes("10,20,30.5,21").unwrap();
        assert_eq!(e.right, Point::new(30.5, 21.0));
        assert!(parse_eyes("1,2,3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
