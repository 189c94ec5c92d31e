//! Grayscale frames, intensity thresholding and connected-component blob
//! extraction.

use serde::{Deserialize, Serialize};

use crate::error::ImagingError;

/// Default intensity threshold separating the reflector from ambient light.
pub const DEFAULT_THRESHOLD: u8 = 200;
/// Default minimum blob area in pixels; smaller components are salt noise.
pub const DEFAULT_MIN_AREA: usize = 5;

/// A single grayscale frame of the camera stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    index: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, index: u64) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImagingError::LengthMismatch { expected: width * height, actual: pixels.len() });
        }
        Ok(Frame { width, height, pixels, index })
    }

    /// All-black frame.
    pub fn dark(width: usize, height: usize, index: u64) -> Result<Self, ImagingError> {
        Frame::new(width, height, vec![0; width * height], index)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }
}

/// Row-major boolean image with the dimensions of its source frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        BitMask { width, height, bits: vec![false; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        if bits.len() != width * height {
            return Err(ImagingError::LengthMismatch { expected: width * height, actual: bits.len() });
        }
        Ok(BitMask { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Like [`BitMask::set`] but silently ignores coordinates off the canvas.
    #[inline]
    pub fn set_checked(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.bits[y as usize * self.width + x as usize] = true;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|b| *b = false);
    }

    /// Sets every pixel of `blob`.
    pub fn or_blob(&mut self, blob: &Blob) {
        for p in &blob.pixels {
            self.set(p.x as usize, p.y as usize, true);
        }
    }
}

/// Neighborhood used when joining foreground pixels into components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = ImagingError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(ImagingError::Connectivity(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min as f64 && x <= self.x_max as f64 && y >= self.y_min as f64 && y <= self.y_max as f64
    }
}

/// One connected bright region.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub area: usize,
    /// Unweighted mean of the pixel coordinates, `(x, y)`.
    pub centroid: (f64, f64),
    pub bbox: BBox,
    /// Member pixels in raster order.
    pub pixels: Vec<Pixel>,
}

impl Blob {
    /// Builds a blob from its member pixels. `pixels` must be non-empty.
    pub fn from_pixels(mut pixels: Vec<Pixel>) -> Blob {
        assert!(!pixels.is_empty(), "blob needs at least one pixel");
        pixels.sort_unstable_by_key(|p| (p.y, p.x));
        let (mut sx, mut sy) = (0u64, 0u64);
        let mut bbox = BBox { x_min: u32::MAX, y_min: u32::MAX, x_max: 0, y_max: 0 };
        for p in &pixels {
            sx += p.x as u64;
            sy += p.y as u64;
            bbox.x_min = bbox.x_min.min(p.x);
            bbox.y_min = bbox.y_min.min(p.y);
            bbox.x_max = bbox.x_max.max(p.x);
            bbox.y_max = bbox.y_max.max(p.y);
        }
        let n = pixels.len() as f64;
        Blob { area: pixels.len(), centroid: (sx as f64 / n, sy as f64 / n), bbox, pixels }
    }

    /// Radius of a disc with the same area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area as f64 / std::f64::consts::PI).sqrt()
    }
}

/// Sets a bit for every pixel whose intensity is at least `t`.
pub fn threshold(frame: &Frame, t: u8) -> BitMask {
    BitMask {
        width: frame.width,
        height: frame.height,
        bits: frame.pixels.iter().map(|&v| v >= t).collect(),
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn with_capacity(n: usize) -> Self {
        DisjointSet { parent: Vec::with_capacity(n) }
    }

    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Smaller root wins so the representative is the earliest provisional label.
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }
}

const NONE: u32 = u32::MAX;

/// Labels connected foreground components with a two-pass union-find scan.
///
/// Components smaller than `min_area` are dropped. The result is sorted by
/// descending area, then by the `(y_min, x_min)` corner of the bounding box,
/// then by the raster position of the first member pixel.
pub fn find_blobs(mask: &BitMask, connectivity: Connectivity, min_area: usize) -> Vec<Blob> {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![NONE; w * h];
    let mut sets = DisjointSet::with_capacity(64);

    for y in 0..h {
        for x in 0..w {
            if !mask.bits[y * w + x] {
                continue;
            }
            let mut neighbours = [NONE; 4];
            let mut n = 0;
            let mut push = |label: u32| {
                if label != NONE {
                    neighbours[n] = label;
                    n += 1;
                }
            };
            if x > 0 {
                push(labels[y * w + x - 1]);
            }
            if y > 0 {
                push(labels[(y - 1) * w + x]);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        push(labels[(y - 1) * w + x - 1]);
                    }
                    if x + 1 < w {
                        push(labels[(y - 1) * w + x + 1]);
                    }
                }
            }
            let label = match neighbours[..n].iter().min() {
                None => sets.make_set(),
                Some(&first) => {
                    for &other in &neighbours[..n] {
                        sets.union(first, other);
                    }
                    first
                }
            };
            labels[y * w + x] = label;
        }
    }

    // Second pass: group pixels by root label. Roots are visited in raster
    // order of their first pixel, so the grouping is deterministic.
    let mut slot_of_root = vec![NONE; sets.parent.len()];
    let mut groups: Vec<Vec<Pixel>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let label = labels[y * w + x];
            if label == NONE {
                continue;
            }
            let root = sets.find(label) as usize;
            if slot_of_root[root] == NONE {
                slot_of_root[root] = groups.len() as u32;
                groups.push(Vec::new());
            }
            groups[slot_of_root[root] as usize].push(Pixel { x: x as u32, y: y as u32 });
        }
    }

    let mut blobs: Vec<Blob> = groups
        .into_iter()
        .filter(|g| g.len() >= min_area.max(1))
        .map(Blob::from_pixels)
        .collect();
    sort_blobs(&mut blobs);
    blobs
}

/// Canonical blob ordering used by [`find_blobs`].
pub fn sort_blobs(blobs: &mut [Blob]) {
    blobs.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then((a.bbox.y_min, a.bbox.x_min).cmp(&(b.bbox.y_min, b.bbox.x_min)))
            .then((a.pixels[0].y, a.pixels[0].x).cmp(&(b.pixels[0].y, b.pixels[0].x)))
    });
}

/// Largest blob; ties go to the smallest `(y_min, x_min)` bounding-box corner.
pub fn primary_blob(blobs: &[Blob]) -> Option<&Blob> {
    blobs.iter().min_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then((a.bbox.y_min, a.bbox.x_min).cmp(&(b.bbox.y_min, b.bbox.x_min)))
            .then((a.pixels[0].y, a.pixels[0].x).cmp(&(b.pixels[0].y, b.pixels[0].x)))
    })
}
