//! Dataset manifests, gallery construction and the binary feature cache.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureVector, Plane};
use crate::imgproc::{load_image, EyeCoordinates, Point};

pub const MANIFEST_HEADER: [&str; 9] = [
    "path",
    "subject",
    "sample",
    "role",
    "condition",
    "eye_lx",
    "eye_ly",
    "eye_rx",
    "eye_ry",
];

const CACHE_MAGIC: &[u8; 4] = b"EXFV";
const CACHE_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Gallery,
    Test,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Gallery => "gallery",
            Role::Test => "test",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gallery" => Ok(Role::Gallery),
            "test" => Ok(Role::Test),
            other => Err(format!("unknown role `{other}` (expected gallery or test)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// Image path, resolved against the manifest's directory.
    pub path: PathBuf,
    pub subject: String,
    pub sample: u32,
    pub role: Role,
    pub condition: Option<String>,
    pub eyes: Option<EyeCoordinates>,
    /// Line number in the manifest file (the header is line 1).
    pub row: usize,
}

/// Reads a manifest CSV. Relative image paths are resolved against the
/// directory holding the manifest.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest_bytes(&text, base)
}

pub fn parse_manifest_bytes(bytes: &[u8], base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(Error::Parse {
            row: 1,
            message: format!("header must be `{}`", MANIFEST_HEADER.join(",")),
        });
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = idx + 2;
        let bad = |message: String| Error::Parse { row, message };

        let raw_path = &record[0];
        if raw_path.is_empty() {
            return Err(bad("empty image path".into()));
        }
        let subject = record[1].to_string();
        if subject.is_empty() {
            return Err(bad("empty subject id".into()));
        }
        let sample: u32 = record[2].parse().map_err(|_| {
            bad(format!(
                "sample `{}` is not a nonnegative integer",
                &record[2]
            ))
        })?;
        let role: Role = record[3].parse().map_err(bad)?;
        let condition = Some(record[4].to_string()).filter(|c| !c.is_empty());

        let coords: Vec<&str> = (5..9).map(|i| &record[i]).collect();
        let eyes = if coords.iter().all(|c| c.is_empty()) {
            None
        } else {
            let v = coords
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| bad(format!("eye coordinate `{c}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(EyeCoordinates::new(
                Point::new(v[0], v[1]),
                Point::new(v[2], v[3]),
            ))
        };

        if !seen.insert((subject.clone(), sample, role)) {
            return Err(Error::validation(
                Some(row),
                format!(
                    "duplicate entry for subject `{subject}`, sample {sample}, role {}",
                    role.as_str()
                ),
            ));
        }
        let path = Path::new(raw_path);
        let path = if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        };
        entries.push(ManifestEntry {
            path,
            subject,
            sample,
            role,
            condition,
            eyes,
            row,
        });
    }
    Ok(entries)
}

/// Writes entries in the manifest CSV format.
pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(MANIFEST_HEADER).map_err(csv_err)?;
    for e in entries {
        let eyes: [String; 4] = match e.eyes {
            Some(eyes) => {
                [eyes.left.x, eyes.left.y, eyes.right.x, eyes.right.y].map(|v| v.to_string())
            }
            None => Default::default(),
        };
        let sample = e.sample.to_string();
        let mut fields = vec![
            e.path
                .to_str()
                .ok_or_else(|| Error::invalid(format!("non UTF-8 path {}", e.path.display())))?,
            e.subject.as_str(),
            sample.as_str(),
            e.role.as_str(),
            e.condition.as_deref().unwrap_or(""),
        ];
        fields.extend(eyes.iter().map(String::as_str));
        w.write_record(&fields).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Manifest entries for an AT&T/ORL-style directory tree (`s1/1.pgm` ...
/// `s40/10.pgm`). The first `gallery_per_subject` samples of each subject are
/// gallery rows, the rest test rows.
pub fn orl_manifest(
    root: impl AsRef<Path>,
    gallery_per_subject: u32,
) -> Result<Vec<ManifestEntry>> {
    let root = root.as_ref();
    let root = &fs::canonicalize(root).map_err(|e| Error::io(root, e))?;
    let mut subjects: Vec<(u32, PathBuf)> = Vec::new();
    for dir in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let dir = dir.map_err(|e| Error::io(root, e))?.path();
        let Some(name) = dir.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(n) = name.strip_prefix('s').and_then(|n| n.parse::<u32>().ok()) {
            if dir.is_dir() {
                subjects.push((n, dir));
            }
        }
    }
    subjects.sort();
    let mut entries = Vec::new();
    for (n, dir) in subjects {
        let mut samples: Vec<(u32, PathBuf)> = Vec::new();
        for file in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let file = file.map_err(|e| Error::io(&dir, e))?.path();
            if file.extension().and_then(|e| e.to_str()) != Some("pgm") {
                continue;
            }
            if let Some(k) = file
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<u32>().ok())
            {
                samples.push((k, file));
            }
        }
        samples.sort();
        for (k, file) in samples {
            entries.push(ManifestEntry {
                path: file,
                subject: format!("s{n}"),
                sample: k,
                role: if k <= gallery_per_subject {
                    Role::Gallery
                } else {
                    Role::Test
                },
                condition: None,
                eyes: None,
                row: entries.len() + 2,
            });
        }
    }
    Ok(entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GalleryModel {
    /// Every enrolled image kept as its own entry.
    Exemplar,
    /// One mean feature vector per subject.
    Average,
}

impl GalleryModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            GalleryModel::Exemplar => "exemplar",
            GalleryModel::Average => "average",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            GalleryModel::Exemplar => 0,
            GalleryModel::Average => 1,
        }
    }
}

impl std::str::FromStr for GalleryModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exemplar" => Ok(GalleryModel::Exemplar),
            "average" => Ok(GalleryModel::Average),
            other => Err(format!(
                "unknown gallery model `{other}` (expected exemplar or average)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalleryEntry {
    pub subject: String,
    pub sample: u32,
    pub condition: Option<String>,
    pub features: FeatureVector,
}

/// An immutable set of enrolled feature vectors, sorted by
/// `(subject, sample)`.
///
/// Feature values are stored at binary32 precision so that a gallery read back
/// from the cache is identical to the one that was written.
#[derive(Clone, Debug, PartialEq)]
pub struct Gallery {
    entries: Vec<GalleryEntry>,
    model: GalleryModel,
}

fn quantize(fv: &FeatureVector) -> Result<FeatureVector> {
    let channels = fv
        .channels()
        .iter()
        .map(|c| c.map(|v| v as f32 as f64))
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(channels)
}

impl Gallery {
    pub fn new(mut entries: Vec<GalleryEntry>, model: GalleryModel) -> Result<Self> {
        if let Some(first) = entries.first() {
            let (dims, p) = (first.features.dims(), first.features.num_channels());
            if entries
                .iter()
                .any(|e| e.features.dims() != dims || e.features.num_channels() != p)
            {
                return Err(Error::Internal(
                    "gallery entries differ in feature shape".into(),
                ));
            }
        }
        entries.sort_by(|a, b| a.subject.cmp(&b.subject).then(a.sample.cmp(&b.sample)));
        if model == GalleryModel::Average {
            for pair in entries.windows(2) {
                if pair[0].subject == pair[1].subject {
                    return Err(Error::invalid(format!(
                        "average gallery has more than one entry for subject `{}`",
                        pair[0].subject
                    )));
                }
            }
            if entries
                .iter()
                .any(|e| e.sample != 0 || e.condition.is_some())
            {
                return Err(Error::invalid(
                    "average gallery entries must have sample 0 and no condition",
                ));
            }
        }
        for e in &mut entries {
            e.features = quantize(&e.features)?;
        }
        Ok(Self { entries, model })
    }

    /// Builds a gallery of the given model from per-image feature vectors.
    /// For the average model each subject's vectors are averaged channelwise.
    pub fn assemble(exemplars: Vec<GalleryEntry>, model: GalleryModel) -> Result<Self> {
        match model {
            GalleryModel::Exemplar => Self::new(exemplars, model),
            GalleryModel::Average => {
                let mut by_subject: BTreeMap<String, Vec<GalleryEntry>> = BTreeMap::new();
                for e in exemplars {
                    by_subject.entry(e.subject.clone()).or_default().push(e);
                }
                let mut averaged = Vec::with_capacity(by_subject.len());
                for (subject, mut group) in by_subject {
                    group.sort_by_key(|e| e.sample);
                    let features = FeatureVector::mean(group.iter().map(|e| &e.features))?;
                    averaged.push(GalleryEntry {
                        subject,
                        sample: 0,
                        condition: None,
                        features,
                    });
                }
                Self::new(averaged, model)
            }
        }
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn model(&self) -> GalleryModel {
        self.model
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subjects(&self) -> impl Iterator<Item = &str> {
        let mut last: Option<&str> = None;
        self.entries.iter().filter_map(move |e| {
            if last == Some(e.subject.as_str()) {
                None
            } else {
                last = Some(e.subject.as_str());
                last
            }
        })
    }
}

/// Loads, prepares and extracts features for every row, in parallel. Output
/// order follows the input order.
pub fn extract_entries(
    entries: &[ManifestEntry],
    extractor: &FeatureExtractor,
) -> Result<Vec<FeatureVector>> {
    entries
        .par_iter()
        .map(|e| {
            let img = load_image(&e.path)?;
            let prepared = extractor.prepare(&img, e.eyes.as_ref())?;
            extractor.extract(&prepared)
        })
        .collect()
}

pub fn build_gallery(
    entries: &[ManifestEntry],
    model: GalleryModel,
    extractor: &FeatureExtractor,
) -> Result<Gallery> {
    if let Some(e) = entries.iter().find(|e| e.role != Role::Gallery) {
        return Err(Error::validation(
            Some(e.row),
            format!("{} is not a gallery row", e.path.display()),
        ));
    }
    let features = extract_entries(entries, extractor)?;
    let exemplars = entries
        .iter()
        .zip(features)
        .map(|(e, features)| GalleryEntry {
            subject: e.subject.clone(),
            sample: e.sample,
            condition: e.condition.clone(),
            features,
        })
        .collect();
    Gallery::assemble(exemplars, model)
}

/// SHA-256 over the extractor configuration and the gallery model.
pub type Fingerprint = [u8; 32];

pub fn fingerprint(extractor: &FeatureExtractor, model: GalleryModel) -> Fingerprint {
    let mut h = Sha256::new();
    h.update(b"lbdface-features\0");
    h.update(extractor.config_bytes());
    h.update([model.tag()]);
    h.finalize().into()
}

fn push_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u16::try_from(s.len())
        .map_err(|_| Error::invalid(format!("string too long for cache: {s:.40}...")))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

/// Serializes a gallery into the cache layout.
pub fn encode_cache(gallery: &Gallery, fingerprint: &Fingerprint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(fingerprint);
    let count =
        u32::try_from(gallery.len()).map_err(|_| Error::invalid("too many gallery entries"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for e in gallery.entries() {
        push_str(&mut out, &e.subject)?;
        out.extend_from_slice(&e.sample.to_le_bytes());
        push_str(&mut out, e.condition.as_deref().unwrap_or(""))?;
        let fv = &e.features;
        let p =
            u16::try_from(fv.num_channels()).map_err(|_| Error::invalid("too many channels"))?;
        out.extend_from_slice(&p.to_le_bytes());
        out.extend_from_slice(&(fv.height() as u32).to_le_bytes());
        out.extend_from_slice(&(fv.width() as u32).to_le_bytes());
        for c in fv.channels() {
            for &v in c.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Writes the gallery cache atomically (temporary file, then rename).
pub fn save_feature_cache(
    gallery: &Gallery,
    extractor: &FeatureExtractor,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_cache(gallery, &fingerprint(extractor, gallery.model()))?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(path, std::io::Error::from(e.kind())))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, std::io::Error::from(e.error.kind())))?;
    Ok(())
}

/// A decoded cache file whose fingerprint has not been checked yet.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheFile {
    pub fingerprint: Fingerprint,
    pub entries: Vec<GalleryEntry>,
}

impl CacheFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != CACHE_MAGIC {
            return Err(Error::Format("not a feature cache (bad magic)".into()));
        }
        let version = r.u16()?;
        if version > CACHE_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: CACHE_VERSION,
            });
        }
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("invalid cache version {version}")));
        }
        let fingerprint: Fingerprint = r.take(32)?.try_into().expect("32 bytes");
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let subject = r.string()?;
            let sample = r.u32()?;
            let condition = Some(r.string()?).filter(|c| !c.is_empty());
            let p = r.u16()? as usize;
            let height = r.u32()? as usize;
            let width = r.u32()? as usize;
            let n = width
                .checked_mul(height)
                .filter(|n| n.checked_mul(p * 4).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::Format("truncated feature cache".into()))?;
            let mut channels = Vec::with_capacity(p);
            for _ in 0..p {
                let values = r
                    .take(n * 4)?
                    .chunks_exact(4)
                    .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                    .collect();
                channels.push(
                    Plane::new(width, height, values).map_err(|e| Error::Format(e.to_string()))?,
                );
            }
            let features =
                FeatureVector::new(channels).map_err(|e| Error::Format(e.to_string()))?;
            entries.push(GalleryEntry {
                subject,
                sample,
                condition,
                features,
            });
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!(
                "{} trailing bytes after last entry",
                r.remaining()
            )));
        }
        Ok(Self {
            fingerprint,
            entries,
        })
    }

    /// Feature dimensions `(width, height)` of the stored entries, if any.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.entries
            .first()
            .map(|e| (e.features.width(), e.features.height()))
    }

    /// Validates the fingerprint against `extractor` and recovers the model.
    pub fn into_gallery(self, extractor: &FeatureExtractor) -> Result<Gallery> {
        let model = [GalleryModel::Exemplar, GalleryModel::Average]
            .into_iter()
            .find(|&m| fingerprint(extractor, m) == self.fingerprint)
            .ok_or(Error::StaleCache)?;
        Gallery::new(self.entries, model).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn load_feature_cache(path: impl AsRef<Path>, extractor: &FeatureExtractor) -> Result<Gallery> {
    CacheFile::read(path)?.into_gallery(extractor)
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format("truncated feature cache".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Format("invalid UTF-8 in cache string".into()))
    }
}
