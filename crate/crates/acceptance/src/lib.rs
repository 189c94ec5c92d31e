//! Reference oracles for the acceptance suite.
//!
//! These are written independently of the production code paths and favor
//! obviousness over speed.

/// One 4- or 8-connected component as found by flood fill.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub area: usize,
    pub centroid: (f64, f64),
    /// `(x_min, y_min, x_max, y_max)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
}

struct Grid<'a> {
    bits: &'a [bool],
    w: usize,
    h: usize,
    eight: bool,
}

impl Grid<'_> {
    fn fill(&self, seen: &mut [bool], x: usize, y: usize, out: &mut Vec<(usize, usize)>) {
        let i = y * self.w + x;
        if !self.bits[i] || seen[i] {
            return;
        }
        seen[i] = true;
        out.push((x, y));
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx == 0 && dy == 0) || (!self.eight && dx != 0 && dy != 0) {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < self.w && (ny as usize) < self.h {
                    self.fill(seen, nx as usize, ny as usize, out);
                }
            }
        }
    }
}

/// All components of a row-major mask, in discovery (raster) order.
pub fn flood_fill_components(bits: &[bool], w: usize, h: usize, eight: bool) -> Vec<Component> {
    assert_eq!(bits.len(), w * h);
    let grid = Grid { bits, w, h, eight };
    let mut seen = vec![false; w * h];
    let mut comps = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !bits[y * w + x] || seen[y * w + x] {
                continue;
            }
            let mut pixels = Vec::new();
            grid.fill(&mut seen, x, y, &mut pixels);
            let area = pixels.len();
            let sx: u64 = pixels.iter().map(|p| p.0 as u64).sum();
            let sy: u64 = pixels.iter().map(|p| p.1 as u64).sum();
            let bbox = (
                pixels.iter().map(|p| p.0).min().unwrap(),
                pixels.iter().map(|p| p.1).min().unwrap(),
                pixels.iter().map(|p| p.0).max().unwrap(),
                pixels.iter().map(|p| p.1).max().unwrap(),
            );
            comps.push(Component { area, centroid: (sx as f64 / area as f64, sy as f64 / area as f64), bbox });
        }
    }
    comps
}

/// Mean of each `block x block` tile of a square image, scaled to [0, 1].
pub fn block_average(pixels: &[u8], side: usize, block: usize) -> Vec<f64> {
    assert_eq!(side % block, 0);
    let out = side / block;
    let mut values = Vec::with_capacity(out * out);
    for by in 0..out {
        for bx in 0..out {
            let mut sum = 0u64;
            for y in by * block..(by + 1) * block {
                for x in bx * block..(bx + 1) * block {
                    sum += pixels[y * side + x] as u64;
                }
            }
            values.push(sum as f64 / (block * block) as f64 / 255.0);
        }
    }
    values
}
