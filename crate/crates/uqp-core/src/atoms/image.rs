//! Synthetic fluorescence imaging and threshold detection.
//!
//! Stands in for the EMCCD camera: occupied sites render as Gaussian spots
//! confined to their cell, optionally with per-pixel Gaussian readout noise.
//! Detection integrates each cell and thresholds the sum, the desk-scale
//! counterpart of deconvolution-based detection on real imagery.

use crate::rng::{stream_key, CounterRng};

use super::{AtomError, AtomGrid};

/// Square cell size in pixels.
pub const CELL_PIXELS: usize = 8;

/// Standard deviation of the rendered spot, in pixels.
pub const SPOT_SIGMA: f64 = CELL_PIXELS as f64 / 5.0;

/// A 16-bit grayscale camera frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
}

impl AtomImage {
    pub fn pixel(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    /// Binary 16-bit PGM (P5), big-endian sample bytes per the Netpbm spec.
    pub fn to_pgm(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n65535\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len() * 2);
        out.extend_from_slice(header.as_bytes());
        for px in &self.pixels {
            out.extend_from_slice(&px.to_be_bytes());
        }
        out
    }
}

fn spot_kernel() -> [f64; CELL_PIXELS * CELL_PIXELS] {
    let mut kernel = [0.0; CELL_PIXELS * CELL_PIXELS];
    let center = (CELL_PIXELS as f64 - 1.0) / 2.0;
    for (i, k) in kernel.iter_mut().enumerate() {
        let dx = (i % CELL_PIXELS) as f64 - center;
        let dy = (i / CELL_PIXELS) as f64 - center;
        *k = (-(dx * dx + dy * dy) / (2.0 * SPOT_SIGMA * SPOT_SIGMA)).exp();
    }
    kernel
}

/// Integrated brightness a lone occupied cell contributes at a given peak
/// brightness.
pub fn spot_integral(brightness: f64) -> f64 {
    brightness * spot_kernel().iter().sum::<f64>()
}

/// Half of the nominal spot integral, the usual detection threshold.
pub fn half_signal_threshold(brightness: f64) -> f64 {
    spot_integral(brightness) / 2.0
}

/// Render a camera frame for the given occupancy.
///
/// Occupied cells get a Gaussian spot with peak `brightness`; every pixel
/// then receives Gaussian noise of standard deviation `noise_sd` (none when
/// zero). Deterministic in `seed`. Callers should keep
/// `brightness > 3 * noise_sd` for the spots to stay detectable.
pub fn synth_image(grid: &AtomGrid, brightness: f64, noise_sd: f64, seed: u64) -> AtomImage {
    debug_assert!(noise_sd >= 0.0);
    let width = grid.cols * CELL_PIXELS;
    let height = grid.rows * CELL_PIXELS;
    let kernel = spot_kernel();
    let mut values = vec![0.0f64; width * height];

    for row in 0..grid.rows {
        for col in 0..grid.cols {
            if !grid.is_occupied(row, col) {
                continue;
            }
            for ky in 0..CELL_PIXELS {
                let y = row * CELL_PIXELS + ky;
                for kx in 0..CELL_PIXELS {
                    let x = col * CELL_PIXELS + kx;
                    values[y * width + x] = brightness * kernel[ky * CELL_PIXELS + kx];
                }
            }
        }
    }

    if noise_sd > 0.0 {
        let mut rng = CounterRng::new(stream_key(seed, 0x4e4f_4953, 0));
        for value in &mut values {
            *value += noise_sd * rng.next_gaussian();
        }
    }

    AtomImage {
        width,
        height,
        pixels: values
            .into_iter()
            .map(|v| v.round().clamp(0.0, u16::MAX as f64) as u16)
            .collect(),
    }
}

/// Threshold detection: a site is occupied iff its integrated cell
/// brightness exceeds `threshold`.
pub fn detect(
    image: &AtomImage,
    rows: usize,
    cols: usize,
    threshold: f64,
) -> Result<AtomGrid, AtomError> {
    let cell_fits = rows > 0
        && cols > 0
        && image.width.is_multiple_of(cols)
        && image.height.is_multiple_of(rows)
        && image.width / cols == image.height / rows;
    if !cell_fits {
        return Err(AtomError::GeometryMismatch {
            width: image.width,
            height: image.height,
            rows,
            cols,
        });
    }
    let cell = image.width / cols;
    let mut grid = AtomGrid::new(rows, cols);
    for row in 0..rows {
        for col in 0..cols {
            let mut sum = 0.0f64;
            for ky in 0..cell {
                let y = row * cell + ky;
                for kx in 0..cell {
                    sum += image.pixel(col * cell + kx, y) as f64;
                }
            }
            if sum > threshold {
                grid.set(row, col, true);
            }
        }
    }
    Ok(grid)
}
