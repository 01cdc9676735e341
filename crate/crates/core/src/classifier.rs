//! Local binary decisions on similarity.
//!
//! A probe is compared with a gallery entry channel by channel using the
//! relative difference `|g - t| / min(g, t)`. The per-channel maps are
//! averaged, each pixel is declared similar when the average falls strictly
//! below the threshold, and the number of similar pixels is the score. The
//! best-scoring gallery entry identifies the probe.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureVector, Plane, DEFAULT_EPSILON};
use crate::gallery::Gallery;
use crate::imgproc::{self, enumerate_perturbations, Image, Perturbation};

pub const DEFAULT_THETA: f64 = 0.25;
pub const DEFAULT_PERTURBATION_RADIUS: u32 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub theta: f64,
    pub epsilon: f64,
    pub perturbation_radius: u32,
    /// Report scores as the fraction of similar pixels instead of a count.
    pub normalize_scores: bool,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            epsilon: DEFAULT_EPSILON,
            perturbation_radius: DEFAULT_PERTURBATION_RADIUS,
            normalize_scores: true,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::invalid(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMap(Plane);

impl SimilarityMap {
    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

/// Per-pixel similar (`true`) / dissimilar (`false`) decisions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryDecisionPlane {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryDecisionPlane {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid("decision plane size mismatch"));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Number of similar pixels out of the pixels compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Score {
    pub matched: usize,
    pub total: usize,
}

impl Score {
    pub fn raw(&self) -> usize {
        self.matched
    }

    pub fn normalized(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    pub fn value(&self, normalize: bool) -> f64 {
        if normalize {
            self.normalized()
        } else {
            self.matched as f64
        }
    }

    pub fn is_full(&self) -> bool {
        self.matched == self.total
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    /// Scores over different pixel counts are ordered by fraction, then count.
    fn cmp(&self, other: &Self) -> Ordering {
        if self.total == other.total {
            return self.matched.cmp(&other.matched);
        }
        let lhs = self.matched as u128 * other.total as u128;
        let rhs = other.matched as u128 * self.total as u128;
        lhs.cmp(&rhs).then(self.matched.cmp(&other.matched))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchEntry {
    pub subject: String,
    pub sample: u32,
    pub score: Score,
    /// The probe shift that produced `score`.
    pub perturbation: Perturbation,
}

/// Every gallery entry ranked by descending score; ties go to the smaller
/// `(subject, sample)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    ranked: Vec<MatchEntry>,
}

impl MatchResult {
    fn from_unsorted(mut ranked: Vec<MatchEntry>) -> Self {
        ranked.sort_by(|a, b| {
            b.score
                .cmp(&a.score)
                .then_with(|| a.subject.cmp(&b.subject))
                .then_with(|| a.sample.cmp(&b.sample))
        });
        Self { ranked }
    }

    pub fn ranked(&self) -> &[MatchEntry] {
        &self.ranked
    }

    pub fn best(&self) -> &MatchEntry {
        &self.ranked[0]
    }

    pub fn top(&self, n: usize) -> &[MatchEntry] {
        &self.ranked[..n.min(self.ranked.len())]
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

#[inline]
fn relative_difference(g: f64, t: f64, epsilon: f64) -> f64 {
    if g == t {
        0.0
    } else {
        (g - t).abs() / g.min(t).max(epsilon)
    }
}

fn check_same_dims(a: &Plane, b: &Plane) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::invalid(format!(
            "plane dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Relative difference map between a gallery channel and a probe channel.
/// Equal values (including two zeros) give zero.
pub fn similarity_map(gallery: &Plane, test: &Plane, epsilon: f64) -> Result<SimilarityMap> {
    check_same_dims(gallery, test)?;
    let values = gallery
        .values()
        .iter()
        .zip(test.values())
        .map(|(&g, &t)| relative_difference(g, t, epsilon))
        .collect();
    Plane::new(gallery.width(), gallery.height(), values).map(SimilarityMap)
}

pub fn average_similarity(maps: &[SimilarityMap]) -> Result<SimilarityMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("cannot average zero similarity maps"))?;
    let mut sums = vec![0.0; first.values().len()];
    for m in maps {
        check_same_dims(first.plane(), m.plane())?;
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    let n = maps.len() as f64;
    sums.iter_mut().for_each(|s| *s /= n);
    Plane::new(first.plane().width(), first.plane().height(), sums).map(SimilarityMap)
}

/// Marks pixels whose averaged difference is strictly below `theta`.
pub fn binarize(map: &SimilarityMap, theta: f64) -> BinaryDecisionPlane {
    let plane = map.plane();
    BinaryDecisionPlane {
        width: plane.width(),
        height: plane.height(),
        bits: map.values().iter().map(|&d| d < theta).collect(),
    }
}

pub fn score(bits: &BinaryDecisionPlane) -> Score {
    Score {
        matched: bits.bits.iter().filter(|&&b| b).count(),
        total: bits.bits.len(),
    }
}

/// Scores one gallery feature vector against a probe feature vector.
///
/// Fuses similarity, averaging, thresholding and counting into one pass; the
/// arithmetic matches the step-by-step functions exactly.
pub fn compare(
    gallery: &FeatureVector,
    test: &FeatureVector,
    params: &ClassifierParams,
) -> Result<Score> {
    if gallery.num_channels() != test.num_channels() {
        return Err(Error::invalid(format!(
            "channel count mismatch: gallery {} vs probe {}",
            gallery.num_channels(),
            test.num_channels()
        )));
    }
    if gallery.dims() != test.dims() {
        return Err(Error::invalid(format!(
            "feature dimensions differ: gallery {} vs probe {}",
            gallery.dims(),
            test.dims()
        )));
    }
    let n = gallery.pixel_count();
    let mut sums = vec![0.0; n];
    for (g, t) in gallery.channels().iter().zip(test.channels()) {
        for ((s, &gv), &tv) in sums.iter_mut().zip(g.values()).zip(t.values()) {
            *s += relative_difference(gv, tv, params.epsilon);
        }
    }
    let p = gallery.num_channels() as f64;
    let matched = sums.iter().filter(|&&s| s / p < params.theta).count();
    Ok(Score { matched, total: n })
}

/// Ranks every gallery entry against one probe feature vector.
pub fn classify(
    test: &FeatureVector,
    gallery: &Gallery,
    params: &ClassifierParams,
) -> Result<MatchResult> {
    classify_variants(&[(Perturbation::NONE, test.clone())], gallery, params)
}

/// Ranks every gallery entry by its best score over several probe variants.
/// Ties between variants keep the earlier one.
pub fn classify_variants(
    variants: &[(Perturbation, FeatureVector)],
    gallery: &Gallery,
    params: &ClassifierParams,
) -> Result<MatchResult> {
    params.validate()?;
    if gallery.is_empty() {
        return Err(Error::State("gallery is empty".into()));
    }
    if variants.is_empty() {
        return Err(Error::invalid("no probe variants to compare"));
    }
    let mut ranked = Vec::with_capacity(gallery.len());
    for entry in gallery.entries() {
        let mut best: Option<(Score, Perturbation)> = None;
        for (p, fv) in variants {
            let s = compare(&entry.features, fv, params)?;
            if best.map_or(true, |(b, _)| s > b) {
                best = Some((s, *p));
            }
        }
        let (score, perturbation) = best.expect("at least one variant");
        ranked.push(MatchEntry {
            subject: entry.subject.clone(),
            sample: entry.sample,
            score,
            perturbation,
        });
    }
    Ok(MatchResult::from_unsorted(ranked))
}

/// Feature vectors of the probe under every shift within the configured
/// perturbation radius, null shift first.
pub fn perturbed_features(
    test_img: &Image,
    extractor: &FeatureExtractor,
    radius: u32,
) -> Result<Vec<(Perturbation, FeatureVector)>> {
    enumerate_perturbations(radius)
        .into_iter()
        .map(|p| Ok((p, extractor.extract(&imgproc::translate(test_img, p))?)))
        .collect()
}

/// Classifies a probe image, keeping for each gallery entry the best score
/// over all shifted copies of the probe.
pub fn classify_with_perturbations(
    test_img: &Image,
    gallery: &Gallery,
    extractor: &FeatureExtractor,
    params: &ClassifierParams,
) -> Result<MatchResult> {
    let variants = perturbed_features(test_img, extractor, params.perturbation_radius)?;
    classify_variants(&variants, gallery, params)
}
