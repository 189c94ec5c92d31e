//! Pattern image cleanup and 28x28 feature extraction.
//!
//! The crop/scale/center chain follows the MNIST construction: the ink's
//! bounding box is scaled so its longest side is 20 pixels and centered in
//! a 28x28 canvas, then intensities are scaled into `[0, 1]`.

use crate::error::PreprocessError;
use crate::imaging::{BitMask, Frame};
use crate::scalar::Scalar;

pub const SIDE: usize = 28;
pub const FEATURE_DIM: usize = SIDE * SIDE;
/// Longest side of the scaled ink box inside the 28x28 canvas.
pub const INK_BOX: usize = 20;

/// Frame-sized grayscale gesture image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl PatternImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, PreprocessError> {
        if pixels.len() != width * height || width == 0 || height == 0 {
            return Err(PreprocessError::Dimension { expected: width * height, actual: pixels.len() });
        }
        Ok(PatternImage { width, height, pixels })
    }

    /// Set bits become 255, clear bits 0.
    pub fn from_mask(mask: &BitMask) -> Self {
        PatternImage {
            width: mask.width(),
            height: mask.height(),
            pixels: mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Number of nonzero pixels.
    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&v| v != 0).count()
    }

    pub fn to_frame(&self, index: u64) -> Frame {
        Frame::new(self.width, self.height, self.pixels.clone(), index).expect("pattern dimensions are valid")
    }
}

impl From<Frame> for PatternImage {
    fn from(frame: Frame) -> Self {
        let (width, height) = (frame.width(), frame.height());
        PatternImage { width, height, pixels: frame.into_pixels() }
    }
}

/// 784 values in `[0, 1]`, row-major 28x28.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, PreprocessError> {
        if values.len() != FEATURE_DIM {
            return Err(PreprocessError::Dimension { expected: FEATURE_DIM, actual: values.len() });
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= T::zero() && **v <= T::one())) {
            return Err(PreprocessError::OutOfRange { index, value: v.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(FeatureVector { values })
    }

    /// Scales raw 0-255 intensities into `[0, 1]`.
    pub fn from_intensities(pixels: &[u8]) -> Result<Self, PreprocessError> {
        let scale = T::lit(255.0);
        Self::new(pixels.iter().map(|&v| T::lit(v as f64) / scale).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Back to 0-255 intensities, rounding to nearest.
    pub fn to_intensities(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (v.to_f64().unwrap_or(0.0) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Inclusive rectangle of pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }
}

/// 3x3 median filter with edge replication.
pub fn denoise_median3(img: &PatternImage) -> PatternImage {
    let (w, h) = (img.width as isize, img.height as isize);
    let at = |x: isize, y: isize| img.pixels[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    let mut out = Vec::with_capacity(img.pixels.len());
    let mut window = [0u8; 9];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    window[k] = at(x + dx, y + dy);
                    k += 1;
                }
            }
            let (_, median, _) = window.select_nth_unstable(4);
            out.push(*median);
        }
    }
    PatternImage { width: img.width, height: img.height, pixels: out }
}

/// Tightest rectangle covering every nonzero pixel.
pub fn bounding_box(img: &PatternImage) -> Result<Rect, PreprocessError> {
    let mut rect: Option<Rect> = None;
    for (i, _) in img.pixels.iter().enumerate().filter(|(_, &v)| v != 0) {
        let (x, y) = (i % img.width, i / img.width);
        let r = rect.get_or_insert(Rect { x_min: x, y_min: y, x_max: x, y_max: y });
        r.x_min = r.x_min.min(x);
        r.x_max = r.x_max.max(x);
        r.y_max = y;
    }
    rect.ok_or(PreprocessError::EmptyPattern)
}

/// Fractional overlap of source pixel `[s, s + 1)` with `[lo, hi)`.
fn coverage<T: Scalar>(s: usize, lo: T, hi: T) -> T {
    let a = T::from_usize_lossy(s).max(lo);
    let b = T::from_usize_lossy(s + 1).min(hi);
    (b - a).max(T::zero())
}

fn scaled_side(side: usize, longest: usize) -> usize {
    ((side * INK_BOX + longest / 2) / longest).max(1)
}

/// Crops to the ink, scales the longest side to 20 and centers it in 28x28.
///
/// Shrinking averages source pixels weighted by fractional area coverage;
/// enlarging samples the nearest source pixel.
pub fn normalize_to_28<T: Scalar>(img: &PatternImage) -> Result<FeatureVector<T>, PreprocessError> {
    let rect = bounding_box(img)?;
    let (w, h) = (rect.width(), rect.height());
    let longest = w.max(h);
    let (out_w, out_h) = (scaled_side(w, longest), scaled_side(h, longest));
    let src = |x: usize, y: usize| img.pixels[(rect.y_min + y) * img.width + rect.x_min + x];

    let mut scaled = vec![T::zero(); out_w * out_h];
    let full = T::lit(255.0);
    if longest > INK_BOX {
        let rx = T::from_usize_lossy(w) / T::from_usize_lossy(out_w);
        let ry = T::from_usize_lossy(h) / T::from_usize_lossy(out_h);
        let area = rx * ry;
        for oy in 0..out_h {
            let (y_lo, y_hi) = (T::from_usize_lossy(oy) * ry, T::from_usize_lossy(oy + 1) * ry);
            let sy0 = y_lo.floor().to_usize().unwrap_or(0);
            let sy1 = y_hi.ceil().to_usize().unwrap_or(h).min(h);
            for ox in 0..out_w {
                let (x_lo, x_hi) = (T::from_usize_lossy(ox) * rx, T::from_usize_lossy(ox + 1) * rx);
                let sx0 = x_lo.floor().to_usize().unwrap_or(0);
                let sx1 = x_hi.ceil().to_usize().unwrap_or(w).min(w);
                let mut acc = T::zero();
                for sy in sy0..sy1 {
                    let cy = coverage(sy, y_lo, y_hi);
                    let mut row = T::zero();
                    for sx in sx0..sx1 {
                        row = row + coverage(sx, x_lo, x_hi) * T::lit(src(sx, sy) as f64);
                    }
                    acc = acc + cy * row;
                }
                scaled[oy * out_w + ox] = (acc / area / full).min(T::one());
            }
        }
    } else {
        for oy in 0..out_h {
            let sy = ((2 * oy + 1) * h / (2 * out_h)).min(h - 1);
            for ox in 0..out_w {
                let sx = ((2 * ox + 1) * w / (2 * out_w)).min(w - 1);
                scaled[oy * out_w + ox] = T::lit(src(sx, sy) as f64) / full;
            }
        }
    }

    let mut values = vec![T::zero(); FEATURE_DIM];
    let (left, top) = ((SIDE - out_w) / 2, (SIDE - out_h) / 2);
    for y in 0..out_h {
        let row = (top + y) * SIDE + left;
        values[row..row + out_w].copy_from_slice(&scaled[y * out_w..(y + 1) * out_w]);
    }
    FeatureVector::new(values)
}

/// Full live-pattern chain: median denoise, then crop/scale/center.
pub fn extract_features<T: Scalar>(img: &PatternImage) -> Result<FeatureVector<T>, PreprocessError> {
    normalize_to_28(&denoise_median3(img))
}
