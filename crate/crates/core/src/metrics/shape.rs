//! Mask-derived metrics: object size, centeredness, squareness.

use super::Mask;

/// Mask area as a fraction of the frame. Zero for an empty mask (that is the
/// true area, not a fabricated value).
pub fn object_size(mask: &Mask) -> f64 {
    mask.area() as f64 / (mask.height() * mask.width()) as f64
}

/// Euclidean distance from the mask centroid to the frame center, normalized
/// by the half-diagonal: 0 = perfectly centered, 1 = corner pixel. `None` for
/// an empty mask (undefined, reported missing downstream).
pub fn centeredness(mask: &Mask) -> Option<f64> {
    let (cx, cy) = mask.centroid()?;
    let fx = (mask.width() as f64 - 1.0) / 2.0;
    let fy = (mask.height() as f64 - 1.0) / 2.0;
    let half_diag = (fx * fx + fy * fy).sqrt();
    if half_diag == 0.0 {
        // 1x1 frame: the centroid coincides with the center.
        return Some(0.0);
    }
    Some(((cx - fx).powi(2) + (cy - fy).powi(2)).sqrt() / half_diag)
}

/// Minor/major axis ratio of the moment-equivalent ellipse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Squareness {
    Value(f64),
    /// Collinear pixel centers; the ratio is reported as 0.
    Degenerate,
}

impl Squareness {
    pub fn value(self) -> f64 {
        match self {
            Squareness::Value(v) => v,
            Squareness::Degenerate => 0.0,
        }
    }
}

/// `sqrt(lambda_min / lambda_max)` of the normalized central second-moment
/// matrix. Pixels are treated as unit squares (a +1/12 extent correction per
/// axis), which makes a rasterized a x b rectangle come out exactly b/a.
/// `None` when the mask has fewer than 2 pixels; collinear masks report
/// [`Squareness::Degenerate`].
pub fn squareness(mask: &Mask) -> Option<Squareness> {
    if mask.area() < 2 {
        return None;
    }
    let area = mask.area() as f64;
    let (mu20, mu02, mu11) = mask.moments();

    // Degeneracy is judged on the raw point moments, before the pixel-extent
    // correction lifts the minor axis off zero.
    let (raw_lo, raw_hi) = eigenvalues(mu20 / area, mu02 / area, mu11 / area);
    if raw_lo <= 1e-12 * raw_hi.max(1e-300) {
        return Some(Squareness::Degenerate);
    }

    let a = (mu20 + area / 12.0) / area;
    let c = (mu02 + area / 12.0) / area;
    let b = mu11 / area;
    let (lo, hi) = eigenvalues(a, c, b);
    Some(Squareness::Value((lo / hi).sqrt()))
}

/// Eigenvalues of [[a, b], [b, c]], returned (min, max).
fn eigenvalues(a: f64, c: f64, b: f64) -> (f64, f64) {
    let half_trace = 0.5 * (a + c);
    let det_term = (0.25 * (a - c).powi(2) + b * b).sqrt();
    ((half_trace - det_term).max(0.0), half_trace + det_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mask::disk_image;
    use crate::metrics::segment_largest;
    use crate::metrics::Image;

    fn rect_mask(h: usize, w: usize, y0: usize, x0: usize, rh: usize, rw: usize) -> Mask {
        let mut grid = vec![false; h * w];
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                grid[y * w + x] = true;
            }
        }
        Mask::from_grid(h, w, grid)
    }

    #[test]
    fn object_size_anchors() {
        let full = Mask::from_grid(4, 4, vec![true; 16]);
        assert_eq!(object_size(&full), 1.0);
        assert_eq!(object_size(&Mask::empty(4, 4)), 0.0);
        let quarter = rect_mask(128, 128, 32, 32, 64, 64);
        assert_eq!(object_size(&quarter), 0.25);
    }

    #[test]
    fn centeredness_anchors() {
        // Centered square -> 0 by symmetry.
        let centered = rect_mask(64, 64, 24, 24, 16, 16);
        assert!(centeredness(&centered).unwrap().abs() < 1e-12);

        // Single pixel at a corner -> exactly 1 (normalization anchor).
        let mut grid = vec![false; 64 * 64];
        grid[0] = true;
        let corner = Mask::from_grid(64, 64, grid);
        assert!((centeredness(&corner).unwrap() - 1.0).abs() < 1e-12);

        assert_eq!(centeredness(&Mask::empty(8, 8)), None);
    }

    #[test]
    fn centeredness_off_center_matches_moment_oracle() {
        // Square centered at (3/4 W, 1/2 H): expected distance is computed
        // from the centroid by hand.
        let (h, w) = (64usize, 64usize);
        let m = rect_mask(h, w, 28, 44, 8, 8);
        let (cx, cy) = m.centroid().unwrap();
        assert!((cx - 47.5).abs() < 1e-12 && (cy - 31.5).abs() < 1e-12);
        let fx = (w as f64 - 1.0) / 2.0;
        let fy = (h as f64 - 1.0) / 2.0;
        let expected = ((cx - fx).powi(2) + (cy - fy).powi(2)).sqrt() / (fx * fx + fy * fy).sqrt();
        assert!((centeredness(&m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn disk_squareness_is_one() {
        let img = disk_image(128, 128, 64.0, 64.0, 50.0);
        let mask = segment_largest(&img, 0.5);
        let r = squareness(&mask).unwrap().value();
        assert!((r - 1.0).abs() < 1e-2, "ratio = {r}");
    }

    #[test]
    fn two_to_one_rectangle_is_half() {
        // Continuous moments of an a x b rectangle give ratio b/a; the pixel
        // extent correction makes the rasterized value exact.
        let mask = rect_mask(160, 160, 50, 20, 60, 120);
        let r = squareness(&mask).unwrap().value();
        assert!((r - 0.5).abs() < 1e-2, "ratio = {r}");
        assert!((r - 0.5).abs() < 1e-12, "with extent correction it is exact: {r}");
    }

    #[test]
    fn rotation_leaves_ratio_unchanged() {
        // 120 x 60 rectangle rotated by 30 degrees, rasterized by pixel-center
        // containment.
        let (h, w) = (200usize, 200usize);
        let (cy, cx) = (100.0, 100.0);
        let (ry, rx) = (30.0, 60.0);
        let th = 30f64.to_radians();
        let mut grid = vec![false; h * w];
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let u = dx * th.cos() + dy * th.sin();
                let v = -dx * th.sin() + dy * th.cos();
                if u.abs() <= rx && v.abs() <= ry {
                    grid[y * w + x] = true;
                }
            }
        }
        let rotated = Mask::from_grid(h, w, grid);
        let straight = rect_mask(200, 200, 70, 40, 60, 120);
        let r_rot = squareness(&rotated).unwrap().value();
        let r_str = squareness(&straight).unwrap().value();
        assert!((r_rot - r_str).abs() < 1e-2, "{r_rot} vs {r_str}");
    }

    #[test]
    fn degenerate_line_reports_zero_with_flag() {
        let mut grid = vec![false; 8 * 8];
        for x in 1..7 {
            grid[3 * 8 + x] = true;
        }
        let line = Mask::from_grid(8, 8, grid);
        assert_eq!(squareness(&line), Some(Squareness::Degenerate));
        assert_eq!(squareness(&line).unwrap().value(), 0.0);

        let mut single = vec![false; 4 * 4];
        single[5] = true;
        assert_eq!(squareness(&Mask::from_grid(4, 4, single)), None);
    }

    #[test]
    fn flip_invariance_for_symmetric_masks() {
        let img = disk_image(96, 96, 48.0, 48.0, 20.0);
        let mask = segment_largest(&img, 0.5);
        let flipped = segment_largest(&img.flip_horizontal(), 0.5);
        let a = squareness(&mask).unwrap().value();
        let b = squareness(&flipped).unwrap().value();
        assert!((a - b).abs() < 1e-12);
        assert!(
            (centeredness(&mask).unwrap() - centeredness(&flipped).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn storage_order_invariance() {
        // The same picture assembled via interleaved and planar constructors
        // yields identical metric values.
        let img = disk_image(32, 32, 16.0, 12.0, 7.0);
        let mut interleaved = Vec::new();
        for y in 0..32 {
            for x in 0..32 {
                for c in 0..3 {
                    interleaved.push(img.get(c, y, x));
                }
            }
        }
        let img2 = Image::from_interleaved(32, 32, &interleaved).unwrap();
        let m1 = crate::metrics::compute_all(&img, 0.5);
        let m2 = crate::metrics::compute_all(&img2, 0.5);
        for name in crate::metrics::METRIC_NAMES {
            assert_eq!(m1.get(name), m2.get(name), "{name}");
        }
    }
}
