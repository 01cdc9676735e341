//! Experiment harness: rank-1 identification accuracy, dimensionality sweeps,
//! training-sample curves, classifier timing and condition tagging. Every
//! report renders to CSV with a fixed row order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{self, ClassifierParams, MatchResult};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureParams, FeatureVector, FilterBank, Window};
use crate::gallery::{parse_manifest, Gallery, GalleryEntry, GalleryModel, ManifestEntry, Role};
use crate::imgproc::{load_image, Image, Perturbation};

pub const MIN_FEATURE_SIDE: usize = 10;
pub const MAX_FEATURE_SIDE: usize = 200;
/// Ranks reported by the tagging harness.
pub const TAG_RANKS: usize = 4;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub model: GalleryModel,
    pub feature_dims: Vec<Window>,
    /// Compensate localization error by searching shifted probes.
    pub perturbation: bool,
    /// Threshold, epsilon and perturbation radius.
    pub classifier: ClassifierParams,
    pub bank: FilterBank,
    /// Windows and epsilon; `feature_dims` inside is overridden per run.
    pub features: FeatureParams,
    pub seed: u64,
    pub repetitions: usize,
}

impl ExperimentConfig {
    pub fn new(manifest: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            model: GalleryModel::Exemplar,
            feature_dims: vec![Window::square(60)],
            perturbation: false,
            classifier: ClassifierParams::default(),
            bank: FilterBank::default_bank(),
            features: FeatureParams::default(),
            seed: 0,
            repetitions: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dims.is_empty() {
            return Err(Error::invalid("at least one feature dimension is required"));
        }
        for d in &self.feature_dims {
            let ok = |s: usize| (MIN_FEATURE_SIDE..=MAX_FEATURE_SIDE).contains(&s);
            if !ok(d.width) || !ok(d.height) {
                return Err(Error::invalid(format!(
                    "feature dims {d} outside [{MIN_FEATURE_SIDE}, {MAX_FEATURE_SIDE}]"
                )));
            }
        }
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        self.classifier.validate()?;
        self.features.validate()
    }

    fn extractor(&self, dims: Window) -> Result<FeatureExtractor> {
        FeatureExtractor::new(
            self.bank.clone(),
            FeatureParams {
                feature_dims: dims,
                ..self.features.clone()
            },
        )
    }

    fn radius(&self) -> u32 {
        if self.perturbation {
            self.classifier.perturbation_radius
        } else {
            0
        }
    }
}

/// A manifest with every image decoded once, split by role.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub gallery: Vec<(ManifestEntry, Image)>,
    pub test: Vec<(ManifestEntry, Image)>,
}

impl Dataset {
    pub fn load(manifest: impl AsRef<Path>) -> Result<Self> {
        Self::from_entries(parse_manifest(manifest)?)
    }

    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let images = entries
            .par_iter()
            .map(|e| load_image(&e.path))
            .collect::<Result<Vec<_>>>()?;
        let (gallery, test) = entries
            .into_iter()
            .zip(images)
            .partition(|(e, _)| e.role == Role::Gallery);
        Ok(Self { gallery, test })
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.gallery.is_empty() {
            return Err(Error::validation(None, "manifest has no gallery rows"));
        }
        if self.test.is_empty() {
            return Err(Error::validation(None, "manifest has no test rows"));
        }
        Ok(())
    }

    /// Every test subject must be enrolled.
    fn require_coverage(&self) -> Result<()> {
        let enrolled: HashSet<&str> = self
            .gallery
            .iter()
            .map(|(e, _)| e.subject.as_str())
            .collect();
        if let Some((e, _)) = self
            .test
            .iter()
            .find(|(e, _)| !enrolled.contains(e.subject.as_str()))
        {
            return Err(Error::validation(
                Some(e.row),
                format!("test subject `{}` has no gallery rows", e.subject),
            ));
        }
        Ok(())
    }
}

fn extract_all(
    rows: &[(ManifestEntry, Image)],
    extractor: &FeatureExtractor,
) -> Result<Vec<FeatureVector>> {
    rows.par_iter()
        .map(|(e, img)| extractor.extract(&extractor.prepare(img, e.eyes.as_ref())?))
        .collect()
}

fn exemplar_entries(
    rows: &[(ManifestEntry, Image)],
    features: Vec<FeatureVector>,
) -> Vec<GalleryEntry> {
    rows.iter()
        .zip(features)
        .map(|((e, _), features)| GalleryEntry {
            subject: e.subject.clone(),
            sample: e.sample,
            condition: e.condition.clone(),
            features,
        })
        .collect()
}

type ProbeVariants = Vec<(Perturbation, FeatureVector)>;

fn probe_variants(
    rows: &[(ManifestEntry, Image)],
    extractor: &FeatureExtractor,
    radius: u32,
) -> Result<Vec<ProbeVariants>> {
    rows.par_iter()
        .map(|(e, img)| {
            let prepared = extractor.prepare(img, e.eyes.as_ref())?;
            classifier::perturbed_features(&prepared, extractor, radius)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub dims: Window,
    pub model: GalleryModel,
    pub perturbation: bool,
    /// Gallery samples per subject, for training-curve rows.
    pub samples_per_subject: Option<usize>,
    pub accuracy: f64,
    pub probes: usize,
    pub correct: usize,
    pub mean_compare_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "width,height,model,perturbation,k,accuracy,probes,correct,mean_compare_ms\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.1},{},{},{:.3}",
                r.dims.width,
                r.dims.height,
                r.model.as_str(),
                r.perturbation,
                r.samples_per_subject
                    .map(|k| k.to_string())
                    .unwrap_or_default(),
                r.accuracy,
                r.probes,
                r.correct,
                r.mean_compare_ms
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

/// Classifies every probe in parallel; returns the rankings and the mean
/// per-probe classification time in milliseconds.
fn classify_probes(
    probes: &[ProbeVariants],
    gallery: &Gallery,
    params: &ClassifierParams,
) -> Result<(Vec<MatchResult>, f64)> {
    let timed = probes
        .par_iter()
        .map(|variants| {
            let start = Instant::now();
            let result = classifier::classify_variants(variants, gallery, params)?;
            Ok((result, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_ms = timed.iter().map(|(_, t)| t).sum::<f64>() / timed.len().max(1) as f64;
    Ok((timed.into_iter().map(|(r, _)| r).collect(), mean_ms))
}

fn accuracy_row(
    dataset: &Dataset,
    gallery: &Gallery,
    probes: &[ProbeVariants],
    cfg: &ExperimentConfig,
    dims: Window,
    samples_per_subject: Option<usize>,
) -> Result<AccuracyRow> {
    let (results, mean_compare_ms) = classify_probes(probes, gallery, &cfg.classifier)?;
    let correct = results
        .iter()
        .zip(&dataset.test)
        .filter(|(r, (e, _))| r.best().subject == e.subject)
        .count();
    Ok(AccuracyRow {
        dims,
        model: gallery.model(),
        perturbation: cfg.perturbation,
        samples_per_subject,
        accuracy: percent(correct, probes.len()),
        probes: probes.len(),
        correct,
        mean_compare_ms,
    })
}

/// Rank-1 identification over the test rows for each configured dims, with
/// the configured gallery model.
pub fn run_identification(cfg: &ExperimentConfig) -> Result<AccuracyReport> {
    cfg.validate()?;
    let dataset = Dataset::load(&cfg.manifest)?;
    identification_on(&dataset, cfg, &[cfg.model])
}

/// Like [`run_identification`] for both gallery models at every dims; rows
/// are ordered by dims, then exemplar before average.
pub fn dimensionality_sweep(cfg: &ExperimentConfig) -> Result<AccuracyReport> {
    cfg.validate()?;
    let dataset = Dataset::load(&cfg.manifest)?;
    identification_on(
        &dataset,
        cfg,
        &[GalleryModel::Exemplar, GalleryModel::Average],
    )
}

pub fn identification_on(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    models: &[GalleryModel],
) -> Result<AccuracyReport> {
    cfg.validate()?;
    dataset.require_nonempty()?;
    dataset.require_coverage()?;
    let mut report = AccuracyReport::default();
    for &dims in &cfg.feature_dims {
        let extractor = cfg.extractor(dims)?;
        let gallery_features = extract_all(&dataset.gallery, &extractor)?;
        let probes = probe_variants(&dataset.test, &extractor, cfg.radius())?;
        for &model in models {
            let gallery = Gallery::assemble(
                exemplar_entries(&dataset.gallery, gallery_features.clone()),
                model,
            )?;
            report
                .rows
                .push(accuracy_row(dataset, &gallery, &probes, cfg, dims, None)?);
        }
    }
    Ok(report)
}

/// How the `K` gallery samples of each subject are picked for a training
/// curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleSelection {
    /// The `K` smallest sample ids.
    First,
    /// A per-subject random order drawn from the config seed; the `K`-sample
    /// set is a prefix of that order, so sets are nested across `K`.
    Random,
}

/// Accuracy with `K = 1..=max_k` exemplar gallery samples per subject at the
/// first configured dims, without perturbation.
pub fn training_curve(
    cfg: &ExperimentConfig,
    max_k: usize,
    selection: SampleSelection,
) -> Result<AccuracyReport> {
    cfg.validate()?;
    let dataset = Dataset::load(&cfg.manifest)?;
    training_curve_on(&dataset, cfg, max_k, selection)
}

pub fn training_curve_on(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    max_k: usize,
    selection: SampleSelection,
) -> Result<AccuracyReport> {
    cfg.validate()?;
    if max_k < 1 {
        return Err(Error::invalid("max_k must be at least 1"));
    }
    dataset.require_nonempty()?;
    dataset.require_coverage()?;

    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, (e, _)) in dataset.gallery.iter().enumerate() {
        by_subject.entry(e.subject.as_str()).or_default().push(idx);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (subject, rows) in by_subject.iter_mut() {
        if rows.len() < max_k {
            return Err(Error::validation(
                None,
                format!(
                    "subject `{subject}` has {} gallery samples, {max_k} required",
                    rows.len()
                ),
            ));
        }
        rows.sort_by_key(|&i| dataset.gallery[i].0.sample);
        if selection == SampleSelection::Random {
            rows.shuffle(&mut rng);
        }
    }

    let dims = cfg.feature_dims[0];
    let extractor = cfg.extractor(dims)?;
    let features = extract_all(&dataset.gallery, &extractor)?;
    let probes = probe_variants(&dataset.test, &extractor, 0)?;
    let curve_cfg = ExperimentConfig {
        perturbation: false,
        ..cfg.clone()
    };

    let mut report = AccuracyReport::default();
    for k in 1..=max_k {
        let entries = by_subject
            .values()
            .flat_map(|rows| rows[..k].iter())
            .map(|&i| {
                let e = &dataset.gallery[i].0;
                GalleryEntry {
                    subject: e.subject.clone(),
                    sample: e.sample,
                    condition: e.condition.clone(),
                    features: features[i].clone(),
                }
            })
            .collect();
        let gallery = Gallery::assemble(entries, GalleryModel::Exemplar)?;
        report.rows.push(accuracy_row(
            dataset,
            &gallery,
            &probes,
            &curve_cfg,
            dims,
            Some(k),
        )?);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub dims: Window,
    pub model: GalleryModel,
    /// Median over repetitions of the mean per-probe classification time.
    pub median_compare_ms: f64,
    pub gallery_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("width,height,model,mean_compare_ms,gallery_size\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{}",
                r.dims.width,
                r.dims.height,
                r.model.as_str(),
                r.median_compare_ms,
                r.gallery_size
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }

    pub fn find(&self, dims: Window, model: GalleryModel) -> Option<&TimingRow> {
        self.rows
            .iter()
            .find(|r| r.dims == dims && r.model == model)
    }
}

/// Classification-only timing for both models at every dims. Probes run
/// serially on the calling thread.
pub fn timing_benchmark(cfg: &ExperimentConfig) -> Result<TimingReport> {
    cfg.validate()?;
    let dataset = Dataset::load(&cfg.manifest)?;
    timing_benchmark_on(&dataset, cfg)
}

pub fn timing_benchmark_on(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<TimingReport> {
    cfg.validate()?;
    dataset.require_nonempty()?;
    let mut report = TimingReport::default();
    for &dims in &cfg.feature_dims {
        let extractor = cfg.extractor(dims)?;
        let gallery_features = extract_all(&dataset.gallery, &extractor)?;
        let probes = probe_variants(&dataset.test, &extractor, cfg.radius())?;
        for model in [GalleryModel::Exemplar, GalleryModel::Average] {
            let gallery = Gallery::assemble(
                exemplar_entries(&dataset.gallery, gallery_features.clone()),
                model,
            )?;
            let mut samples = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                let start = Instant::now();
                for variants in &probes {
                    let result =
                        classifier::classify_variants(variants, &gallery, &cfg.classifier)?;
                    std::hint::black_box(result);
                }
                samples.push(start.elapsed().as_secs_f64() * 1e3 / probes.len() as f64);
            }
            report.rows.push(TimingRow {
                dims,
                model,
                median_compare_ms: median(&mut samples),
                gallery_size: gallery.len(),
            });
        }
    }
    Ok(report)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Cumulative per-condition tagging accuracy at ranks `1..=TAG_RANKS`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TagReport {
    /// Condition names in lexicographic order.
    pub conditions: Vec<String>,
    /// `accuracy[r - 1][c]` is the percentage of probes of condition `c`
    /// whose own condition appears among the top `r` gallery entries.
    pub accuracy: Vec<Vec<f64>>,
    pub probes_per_condition: Vec<usize>,
}

impl TagReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank");
        for c in &self.conditions {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, row) in self.accuracy.iter().enumerate() {
            let _ = write!(out, "{}", r + 1);
            for v in row {
                let _ = write!(out, ",{v:.1}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }

    pub fn at(&self, rank: usize, condition: &str) -> Option<f64> {
        let c = self.conditions.iter().position(|x| x == condition)?;
        self.accuracy.get(rank.checked_sub(1)?).map(|row| row[c])
    }
}

/// Tags each probe with the conditions of its best-ranked gallery entries and
/// scores the tags against the probe's true condition.
pub fn tag_variability(cfg: &ExperimentConfig) -> Result<TagReport> {
    cfg.validate()?;
    let entries = parse_manifest(&cfg.manifest)?;
    check_tagged(&entries)?;
    let dataset = Dataset::from_entries(entries)?;
    tag_variability_on(&dataset, cfg)
}

fn check_tagged(entries: &[ManifestEntry]) -> Result<()> {
    if let Some(e) = entries.iter().find(|e| e.condition.is_none()) {
        return Err(Error::validation(
            Some(e.row),
            format!(
                "{} row for subject `{}` has no condition tag",
                e.role.as_str(),
                e.subject
            ),
        ));
    }
    Ok(())
}

pub fn tag_variability_on(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<TagReport> {
    cfg.validate()?;
    dataset.require_nonempty()?;
    for rows in [&dataset.gallery, &dataset.test] {
        check_tagged(&rows.iter().map(|(e, _)| e.clone()).collect::<Vec<_>>())?;
    }
    let extractor = cfg.extractor(cfg.feature_dims[0])?;
    let features = extract_all(&dataset.gallery, &extractor)?;
    let gallery = Gallery::assemble(
        exemplar_entries(&dataset.gallery, features),
        GalleryModel::Exemplar,
    )?;
    let probes = probe_variants(&dataset.test, &extractor, cfg.radius())?;
    let (results, _) = classify_probes(&probes, &gallery, &cfg.classifier)?;

    // MatchEntry carries (subject, sample); recover the gallery condition.
    let condition_of: BTreeMap<(&str, u32), &str> = gallery
        .entries()
        .iter()
        .map(|e| {
            (
                (e.subject.as_str(), e.sample),
                e.condition.as_deref().unwrap_or(""),
            )
        })
        .collect();
    let conditions: Vec<String> = dataset
        .test
        .iter()
        .filter_map(|(e, _)| e.condition.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut hits = vec![vec![0usize; conditions.len()]; TAG_RANKS];
    let mut totals = vec![0usize; conditions.len()];
    for (result, (probe, _)) in results.iter().zip(&dataset.test) {
        let truth = probe.condition.as_deref().unwrap_or("");
        let c = conditions
            .iter()
            .position(|x| x == truth)
            .expect("collected above");
        totals[c] += 1;
        let first_hit = result
            .ranked()
            .iter()
            .position(|m| condition_of.get(&(m.subject.as_str(), m.sample)) == Some(&truth));
        for (r, row) in hits.iter_mut().enumerate() {
            if first_hit.is_some_and(|pos| pos <= r) {
                row[c] += 1;
            }
        }
    }
    let accuracy = hits
        .iter()
        .map(|row| {
            row.iter()
                .zip(&totals)
                .map(|(&h, &t)| percent(h, t))
                .collect()
        })
        .collect();
    Ok(TagReport {
        conditions,
        accuracy,
        probes_per_condition: totals,
    })
}
