//! Binary masks, their moments, and the threshold segmenter.
//!
//! The segmenter substitutes for a learned instance-segmentation model:
//! luminance thresholding followed by 8-connected component labeling,
//! keeping the largest component. Externally produced masks can be loaded
//! instead (see `io`), which keeps the pipeline usable on real images.

use super::Image;

/// Binary H x W grid with cached area, centroid, and central second moments.
/// Moments are taken over pixel centers at integer coordinates.
#[derive(Clone, Debug)]
pub struct Mask {
    h: usize,
    w: usize,
    grid: Vec<bool>,
    area: usize,
    centroid: Option<(f64, f64)>, // (cx, cy)
    mu20: f64,
    mu02: f64,
    mu11: f64,
}

impl Mask {
    pub fn from_grid(h: usize, w: usize, grid: Vec<bool>) -> Mask {
        assert_eq!(grid.len(), h * w, "grid length");
        let area = grid.iter().filter(|&&b| b).count();
        if area == 0 {
            return Mask { h, w, grid, area, centroid: None, mu20: 0.0, mu02: 0.0, mu11: 0.0 };
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        for y in 0..h {
            for x in 0..w {
                if grid[y * w + x] {
                    sx += x as f64;
                    sy += y as f64;
                }
            }
        }
        let cx = sx / area as f64;
        let cy = sy / area as f64;
        let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                if grid[y * w + x] {
                    let dx = x as f64 - cx;
                    let dy = y as f64 - cy;
                    mu20 += dx * dx;
                    mu02 += dy * dy;
                    mu11 += dx * dy;
                }
            }
        }
        Mask { h, w, grid, area, centroid: Some((cx, cy)), mu20, mu02, mu11 }
    }

    pub fn empty(h: usize, w: usize) -> Mask {
        Mask::from_grid(h, w, vec![false; h * w])
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.grid[y * self.w + x]
    }

    pub fn grid(&self) -> &[bool] {
        &self.grid
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn is_empty(&self) -> bool {
        self.area == 0
    }

    /// (cx, cy) over pixel centers; `None` for an empty mask.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        self.centroid
    }

    /// Central second moments (mu20, mu02, mu11) over pixel centers.
    pub fn moments(&self) -> (f64, f64, f64) {
        (self.mu20, self.mu02, self.mu11)
    }
}

/// Largest bright component of the image: luminance > threshold, 8-connected.
/// Ties on area break to the component whose first pixel in row-major scan
/// order comes first (smallest top-left coordinate, lexicographic in (y, x)).
/// An empty mask is a valid result.
pub fn segment_largest(image: &Image, threshold: f64) -> Mask {
    let h = image.height();
    let w = image.width();
    let mut fg = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            fg[y * w + x] = image.luminance(y, x) > threshold;
        }
    }

    let mut label = vec![usize::MAX; h * w];
    let mut best: Option<(usize, usize, usize)> = None; // (area, first_pixel, id)
    let mut next_id = 0usize;
    let mut stack = Vec::new();
    for start in 0..h * w {
        if !fg[start] || label[start] != usize::MAX {
            continue;
        }
        let id = next_id;
        next_id += 1;
        let mut area = 0usize;
        stack.push(start);
        label[start] = id;
        while let Some(p) = stack.pop() {
            area += 1;
            let (py, px) = (p / w, p % w);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    let ny = py as i64 + dy;
                    let nx = px as i64 + dx;
                    if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if fg[q] && label[q] == usize::MAX {
                        label[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        // Scan order guarantees `start` is this component's top-left pixel.
        let better = match best {
            None => true,
            Some((best_area, best_first, _)) => {
                area > best_area || (area == best_area && start < best_first)
            }
        };
        if better {
            best = Some((area, start, id));
        }
    }

    match best {
        None => Mask::empty(h, w),
        Some((_, _, keep)) => {
            let grid = label.iter().map(|&l| l == keep).collect();
            Mask::from_grid(h, w, grid)
        }
    }
}

/// Draws a filled disk image for tests and fixtures: white on black.
#[cfg(test)]
pub fn disk_image(h: usize, w: usize, cy: f64, cx: f64, r: f64) -> Image {
    let mut img = Image::uniform(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
            if d2 <= r * r {
                for c in 0..3 {
                    img.set(c, y, x, 1.0);
                }
            }
        }
    }
    img
}
