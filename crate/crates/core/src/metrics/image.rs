//! In-memory raster: H x W x 3, double precision, values in [0, 1].
//!
//! Storage is channel-planar (all of R, then G, then B, each row-major).
//! Metric results do not depend on the storage order; constructors from
//! interleaved buffers are provided for the loaders.

use super::MetricError;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    h: usize,
    w: usize,
    /// Planar RGB, length 3*h*w.
    data: Vec<f64>,
}

impl Image {
    /// From planar RGB data (R plane, G plane, B plane).
    pub fn from_planar(h: usize, w: usize, data: Vec<f64>) -> Result<Image, MetricError> {
        if h == 0 || w == 0 {
            return Err(MetricError::BadImage("zero-sized image".into()));
        }
        if data.len() != 3 * h * w {
            return Err(MetricError::BadImage(format!(
                "planar data length {} for {h}x{w}x3",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite() && (-1e-9..=1.0 + 1e-9).contains(v)) {
            return Err(MetricError::BadImage("values outside [0,1]".into()));
        }
        Ok(Image { h, w, data })
    }

    /// From interleaved RGB triples, row-major.
    pub fn from_interleaved(h: usize, w: usize, rgb: &[f64]) -> Result<Image, MetricError> {
        if rgb.len() != 3 * h * w {
            return Err(MetricError::BadImage(format!(
                "interleaved data length {} for {h}x{w}x3",
                rgb.len()
            )));
        }
        let n = h * w;
        let mut data = vec![0.0; 3 * n];
        for p in 0..n {
            for c in 0..3 {
                data[c * n + p] = rgb[3 * p + c];
            }
        }
        Image::from_planar(h, w, data)
    }

    /// Uniform color image.
    pub fn uniform(h: usize, w: usize, rgb: [f64; 3]) -> Image {
        let n = h * w;
        let mut data = Vec::with_capacity(3 * n);
        for c in rgb {
            data.extend(std::iter::repeat(c).take(n));
        }
        Image { h, w, data }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn planar(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[c * self.h * self.w + y * self.w + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[c * self.h * self.w + y * self.w + x] = v;
    }

    /// BT.601 luma.
    pub fn luminance(&self, y: usize, x: usize) -> f64 {
        0.299 * self.get(0, y, x) + 0.587 * self.get(1, y, x) + 0.114 * self.get(2, y, x)
    }

    /// Interleaved 8-bit RGB for writers (round half away from zero).
    pub fn to_rgb8(&self) -> Vec<u8> {
        let n = self.h * self.w;
        let mut out = Vec::with_capacity(3 * n);
        for p in 0..n {
            for c in 0..3 {
                out.push((self.data[c * n + p].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }

    pub fn flip_horizontal(&self) -> Image {
        let mut out = self.clone();
        for c in 0..3 {
            for y in 0..self.h {
                for x in 0..self.w {
                    out.set(c, y, x, self.get(c, y, self.w - 1 - x));
                }
            }
        }
        out
    }

    pub fn flip_vertical(&self) -> Image {
        let mut out = self.clone();
        for c in 0..3 {
            for y in 0..self.h {
                for x in 0..self.w {
                    out.set(c, y, x, self.get(c, self.h - 1 - y, x));
                }
            }
        }
        out
    }

    /// Nearest-neighbor resize (supported for manifest ingestion; metrics
    /// accept any size).
    pub fn resize_nearest(&self, h: usize, w: usize) -> Image {
        let mut out = Image::uniform(h, w, [0.0; 3]);
        for y in 0..h {
            let sy = (y * self.h) / h;
            for x in 0..w {
                let sx = (x * self.w) / w;
                for c in 0..3 {
                    out.set(c, y, x, self.get(c, sy, sx));
                }
            }
        }
        out
    }
}
