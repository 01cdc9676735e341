//! Feature extraction: texture filter bank, local standard deviation and
//! local-mean normalization.
//!
//! For every kernel in the bank the image is filtered, the local standard
//! deviation of the response is taken over a small window, and the result is
//! divided by its own local mean over a larger window. The normalized planes
//! are the feature channels compared by the classifier.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgproc::{self, EyeCoordinates, Image};

/// Default denominator floor for the local-mean normalization.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// A rectangular window, `width` columns by `height` rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub const fn square(size: usize) -> Self {
        Self {
            width: size,
            height: size,
        }
    }

    fn is_odd(&self) -> bool {
        self.width % 2 == 1 && self.height % 2 == 1
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Offsets covered by a window of `size` cells; even sizes put the extra cell
/// on the increasing-index side.
#[inline]
fn window_offsets(size: usize) -> (isize, isize) {
    let lo = -(((size - 1) / 2) as isize);
    let hi = (size / 2) as isize;
    (lo, hi)
}

/// A real-valued 2-D grid with the same layout as [`Image`].
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} values for {width}x{height} plane, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("plane values must be finite"));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.values[r * self.width + c]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn same_dims(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

impl From<&Image> for Plane {
    fn from(img: &Image) -> Self {
        Plane {
            width: img.width(),
            height: img.height(),
            values: img.pixels().to_vec(),
        }
    }
}

/// A filter window with odd dimensions. Weight `(s, t)` multiplies the pixel
/// `s` rows and `t` columns away from the output position.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd, got {rows}x{cols}"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::invalid(format!(
                "kernel {rows}x{cols} needs {} weights, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    pub fn from_rows<const R: usize, const C: usize>(rows: [[f64; C]; R]) -> Result<Self> {
        Self::new(R, C, rows.iter().flatten().copied().collect())
    }

    pub fn identity() -> Self {
        Self {
            rows: 1,
            cols: 1,
            weights: vec![1.0],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    kernels: Vec<Kernel>,
}

impl FilterBank {
    pub fn new(kernels: Vec<Kernel>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::invalid("filter bank needs at least one kernel"));
        }
        Ok(Self { kernels })
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Six 3x3 texture kernels: box average, horizontal, vertical and both
    /// diagonal differences, and a Laplacian.
    pub fn default_bank() -> Self {
        let ninth = 1.0 / 9.0;
        let kernels = [
            [[ninth; 3]; 3],
            [[0.0, 0.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]],
            [[0.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            [[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]],
        ]
        .into_iter()
        .map(|k| Kernel::from_rows(k).expect("static kernel"))
        .collect();
        Self { kernels }
    }

    /// Parses the plain-text bank format: a header line `P ROWS COLS`, then
    /// `P` blocks of `ROWS` lines with `COLS` coefficients each, blocks
    /// separated by blank lines.
    pub fn parse(text: &str) -> Result<Self> {
        let fail =
            |line: usize, msg: String| Error::Format(format!("filter bank line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));

        let (header_line, header) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| Error::Format("filter bank is empty".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fail(header_line, format!("bad header: {e}")))?;
        let [count, rows, cols] = dims[..] else {
            return Err(fail(header_line, "header must be `P ROWS COLS`".into()));
        };
        if count == 0 {
            return Err(fail(header_line, "kernel count must be positive".into()));
        }

        let mut kernels = Vec::with_capacity(count);
        let mut current: Vec<f64> = Vec::with_capacity(rows * cols);
        let mut rows_read = 0;
        for (n, line) in lines {
            if line.is_empty() {
                if rows_read != 0 {
                    return Err(fail(
                        n,
                        format!(
                            "kernel {} has {rows_read} rows, expected {rows}",
                            kernels.len() + 1
                        ),
                    ));
                }
                continue;
            }
            if kernels.len() == count {
                return Err(fail(n, format!("more than the {count} declared kernels")));
            }
            let before = current.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| fail(n, format!("bad coefficient `{tok}`")))?;
                current.push(v);
            }
            if current.len() - before != cols {
                return Err(fail(
                    n,
                    format!(
                        "expected {cols} coefficients, got {}",
                        current.len() - before
                    ),
                ));
            }
            rows_read += 1;
            if rows_read == rows {
                let kernel = Kernel::new(rows, cols, std::mem::take(&mut current))
                    .map_err(|e| fail(n, e.to_string()))?;
                kernels.push(kernel);
                rows_read = 0;
            }
        }
        if rows_read != 0 || kernels.len() != count {
            return Err(Error::Format(format!(
                "filter bank declares {count} kernels but {} complete kernels were found",
                kernels.len()
            )));
        }
        Self::new(kernels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes into the text format read by [`FilterBank::parse`]. Only
    /// banks whose kernels share one shape can be written.
    pub fn to_text(&self) -> Result<String> {
        let (rows, cols) = (self.kernels[0].rows, self.kernels[0].cols);
        if self
            .kernels
            .iter()
            .any(|k| k.rows != rows || k.cols != cols)
        {
            return Err(Error::invalid(
                "text format requires all kernels to share dimensions",
            ));
        }
        let mut out = format!("{} {rows} {cols}\n", self.kernels.len());
        for k in &self.kernels {
            out.push('\n');
            for row in k.weights.chunks(cols) {
                let line: Vec<String> = row.iter().map(|w| w.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        Ok(out)
    }
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::default_bank()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureParams {
    pub stddev_window: Window,
    pub norm_window: Window,
    pub epsilon: f64,
    pub feature_dims: Window,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            stddev_window: Window::square(3),
            norm_window: Window::square(30),
            epsilon: DEFAULT_EPSILON,
            feature_dims: Window::square(60),
        }
    }
}

impl FeatureParams {
    pub fn with_dims(dims: Window) -> Self {
        Self {
            feature_dims: dims,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.stddev_window.is_odd() {
            return Err(Error::invalid(format!(
                "stddev window must be odd, got {}",
                self.stddev_window
            )));
        }
        if self.norm_window.width == 0 || self.norm_window.height == 0 {
            return Err(Error::invalid("normalization window must be nonempty"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.feature_dims.width == 0 || self.feature_dims.height == 0 {
            return Err(Error::invalid("feature dimensions must be positive"));
        }
        Ok(())
    }
}

/// The normalized spatial-change planes of one image, one per kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    channels: Vec<Plane>,
}

impl FeatureVector {
    pub fn new(channels: Vec<Plane>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("feature vector needs at least one channel"))?;
        if channels.iter().any(|c| !c.same_dims(first)) {
            return Err(Error::invalid("feature channels must share dimensions"));
        }
        if channels
            .iter()
            .flat_map(|c| c.values.iter())
            .any(|&v| v < 0.0)
        {
            return Err(Error::invalid("feature values must be nonnegative"));
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[Plane] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    pub fn dims(&self) -> Window {
        Window::new(self.width(), self.height())
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Multiplies every feature value by `factor` (must be positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| c.map(|v| v * factor))
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels)
    }

    /// Channelwise elementwise mean of several feature vectors.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let mut iter = vectors.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::invalid("cannot average zero feature vectors"))?;
        let mut sums: Vec<Vec<f64>> = first.channels.iter().map(|c| c.values.clone()).collect();
        let mut count = 1usize;
        for fv in iter {
            if fv.num_channels() != first.num_channels() || fv.dims() != first.dims() {
                return Err(Error::Internal(
                    "averaged feature vectors differ in shape".into(),
                ));
            }
            for (sum, c) in sums.iter_mut().zip(&fv.channels) {
                for (s, v) in sum.iter_mut().zip(&c.values) {
                    *s += v;
                }
            }
            count += 1;
        }
        let n = count as f64;
        let channels = sums
            .into_iter()
            .map(|mut values| {
                values.iter_mut().for_each(|v| *v /= n);
                Plane::new(first.width(), first.height(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels)
    }
}

/// Correlates `img` with `kern`: `out(i, j) = sum w(s, t) * I(i + s, j + t)`,
/// replicate padded, same size as the input.
pub fn convolve(img: &Image, kern: &Kernel) -> Result<Plane> {
    if kern.rows > img.height() || kern.cols > img.width() {
        return Err(Error::invalid(format!(
            "kernel {}x{} larger than image {}x{}",
            kern.rows,
            kern.cols,
            img.height(),
            img.width()
        )));
    }
    let a0 = (kern.rows / 2) as isize;
    let b0 = (kern.cols / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut values = Vec::with_capacity(w * h);
    for i in 0..h as isize {
        for j in 0..w as isize {
            let mut acc = 0.0;
            let mut idx = 0;
            for s in -a0..=a0 {
                for t in -b0..=b0 {
                    let wt = kern.weights[idx];
                    idx += 1;
                    if wt != 0.0 {
                        acc += wt * img.get_clamped(i + s, j + t);
                    }
                }
            }
            values.push(acc);
        }
    }
    Ok(Plane {
        width: w,
        height: h,
        values,
    })
}

/// Population standard deviation over an odd `window` centred on each pixel.
pub fn local_stddev(plane: &Plane, window: Window) -> Result<Plane> {
    if !window.is_odd() {
        return Err(Error::invalid(format!(
            "stddev window must have odd dimensions, got {window}"
        )));
    }
    let a = (window.height / 2) as isize;
    let b = (window.width / 2) as isize;
    let n = (window.width * window.height) as f64;
    let mut buf = Vec::with_capacity(window.width * window.height);
    let mut values = Vec::with_capacity(plane.values.len());
    for i in 0..plane.height as isize {
        for j in 0..plane.width as isize {
            buf.clear();
            for s in -a..=a {
                for t in -b..=b {
                    buf.push(plane.get_clamped(i + s, j + t));
                }
            }
            let (lo, hi) = buf
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if lo == hi {
                values.push(0.0);
                continue;
            }
            let mean = buf.iter().sum::<f64>() / n;
            let ss: f64 = buf.iter().map(|v| (v - mean) * (v - mean)).sum();
            values.push((ss / n).sqrt());
        }
    }
    Ok(Plane {
        width: plane.width,
        height: plane.height,
        values,
    })
}

/// Divides each value by the mean over a `window` around it, floored at
/// `epsilon`. Along an axis where the window is at least as long as the
/// plane, the mean covers the whole axis.
pub fn local_mean_normalize(plane: &Plane, window: Window, epsilon: f64) -> Result<Plane> {
    if window.width == 0 || window.height == 0 {
        return Err(Error::invalid("normalization window must be nonempty"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let (w, h) = (plane.width, plane.height);
    let kw = window.width.min(w);
    let kh = window.height.min(h);
    let (clo, chi) = window_offsets(kw);
    let (rlo, rhi) = window_offsets(kh);

    // Separable box sum: rows first, then columns. A window spanning a whole
    // axis sums that axis without padding.
    let mut row_sums = vec![0.0; w * h];
    for i in 0..h {
        let row = &plane.values[i * w..(i + 1) * w];
        if window.width >= w {
            let total: f64 = row.iter().sum();
            row_sums[i * w..(i + 1) * w].fill(total);
            continue;
        }
        for j in 0..w as isize {
            let mut acc = 0.0;
            for t in clo..=chi {
                acc += row[(j + t).clamp(0, w as isize - 1) as usize];
            }
            row_sums[i * w + j as usize] = acc;
        }
    }
    let area = (kw * kh) as f64;
    let mut values = Vec::with_capacity(w * h);
    let column_totals: Option<Vec<f64>> = (window.height >= h).then(|| {
        (0..w)
            .map(|j| (0..h).map(|i| row_sums[i * w + j]).sum())
            .collect()
    });
    for i in 0..h as isize {
        for j in 0..w {
            let acc = match &column_totals {
                Some(totals) => totals[j],
                None => (rlo..=rhi)
                    .map(|s| row_sums[(i + s).clamp(0, h as isize - 1) as usize * w + j])
                    .sum(),
            };
            let mean = acc / area;
            values.push(plane.values[i as usize * w + j] / mean.max(epsilon));
        }
    }
    Ok(Plane {
        width: w,
        height: h,
        values,
    })
}

/// Bundles a filter bank with its feature parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractor {
    bank: FilterBank,
    params: FeatureParams,
}

impl FeatureExtractor {
    pub fn new(bank: FilterBank, params: FeatureParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { bank, params })
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn params(&self) -> &FeatureParams {
        &self.params
    }

    /// Same bank and windows, different feature dimensions.
    pub fn with_dims(&self, dims: Window) -> Result<Self> {
        Self::new(
            self.bank.clone(),
            FeatureParams {
                feature_dims: dims,
                ..self.params.clone()
            },
        )
    }

    /// Brings a raw image to the feature dimensions: eye alignment when eye
    /// coordinates are known, a plain resize otherwise.
    pub fn prepare(&self, img: &Image, eyes: Option<&EyeCoordinates>) -> Result<Image> {
        let Window { width, height } = self.params.feature_dims;
        match eyes {
            Some(eyes) => imgproc::align_by_eyes(
                img,
                eyes,
                &EyeCoordinates::canonical(width, height),
                width,
                height,
            ),
            None => imgproc::resize(img, width, height),
        }
    }

    pub fn extract(&self, img: &Image) -> Result<FeatureVector> {
        extract_features(img, &self.bank, &self.params)
    }

    /// Stable byte encoding of the bank and parameters, used for cache
    /// fingerprints.
    pub fn config_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::new();
        for v in [
            p.feature_dims.width,
            p.feature_dims.height,
            p.stddev_window.width,
            p.stddev_window.height,
            p.norm_window.width,
            p.norm_window.height,
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&p.epsilon.to_bits().to_le_bytes());
        out.extend_from_slice(&(self.bank.len() as u64).to_le_bytes());
        for k in &self.bank.kernels {
            out.extend_from_slice(&(k.rows as u64).to_le_bytes());
            out.extend_from_slice(&(k.cols as u64).to_le_bytes());
            for w in &k.weights {
                out.extend_from_slice(&w.to_bits().to_le_bytes());
            }
        }
        out
    }
}

pub fn extract_features(
    img: &Image,
    bank: &FilterBank,
    params: &FeatureParams,
) -> Result<FeatureVector> {
    params.validate()?;
    if img.width() != params.feature_dims.width || img.height() != params.feature_dims.height {
        return Err(Error::invalid(format!(
            "image is {}x{} but features are configured for {}",
            img.width(),
            img.height(),
            params.feature_dims
        )));
    }
    let channels = bank
        .kernels
        .iter()
        .map(|k| {
            let response = convolve(img, k)?;
            let change = local_stddev(&response, params.stddev_window)?;
            local_mean_normalize(&change, params.norm_window, params.epsilon)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(channels)
}
