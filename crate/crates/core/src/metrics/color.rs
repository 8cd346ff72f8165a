//! Raster-level metrics: redness, colorfulness, brightness, simplicity.

use super::Image;

/// Red-pixel classification window. The source property is only described as
/// a "normalized number of red pixels"; this pins it down as an HSV window,
/// which is the interpretable reading. All thresholds are configurable.
#[derive(Clone, Copy, Debug)]
pub struct RednessConfig {
    /// Pixels count as red when their hue is within this many degrees of 0.
    pub hue_window_deg: f64,
    pub min_saturation: f64,
    pub min_value: f64,
}

impl Default for RednessConfig {
    fn default() -> Self {
        RednessConfig { hue_window_deg: 20.0, min_saturation: 0.3, min_value: 0.2 }
    }
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, v)
}

/// Fraction of pixels classified red.
pub fn redness(image: &Image, config: &RednessConfig) -> f64 {
    let mut red = 0usize;
    let n = image.height() * image.width();
    for y in 0..image.height() {
        for x in 0..image.width() {
            let (h, s, v) = rgb_to_hsv(image.get(0, y, x), image.get(1, y, x), image.get(2, y, x));
            let hue_dist = h.min(360.0 - h);
            if hue_dist <= config.hue_window_deg && s > config.min_saturation && v > config.min_value
            {
                red += 1;
            }
        }
    }
    red as f64 / n as f64
}

/// Hasler & Suesstrunk colorfulness, computed on the 0-255 scale so magnitudes
/// line up with the metric's published constants:
/// `sqrt(var_rg + var_yb) + 0.3 * sqrt(mean_rg^2 + mean_yb^2)` with
/// `rg = R - G`, `yb = (R + G)/2 - B`. Variances are population variances.
pub fn colorfulness(image: &Image) -> f64 {
    let n = (image.height() * image.width()) as f64;
    let mut sum_rg = 0.0;
    let mut sum_rg2 = 0.0;
    let mut sum_yb = 0.0;
    let mut sum_yb2 = 0.0;
    for y in 0..image.height() {
        for x in 0..image.width() {
            let r = image.get(0, y, x) * 255.0;
            let g = image.get(1, y, x) * 255.0;
            let b = image.get(2, y, x) * 255.0;
            let rg = r - g;
            let yb = 0.5 * (r + g) - b;
            sum_rg += rg;
            sum_rg2 += rg * rg;
            sum_yb += yb;
            sum_yb2 += yb * yb;
        }
    }
    let mean_rg = sum_rg / n;
    let mean_yb = sum_yb / n;
    let var_rg = (sum_rg2 / n - mean_rg * mean_rg).max(0.0);
    let var_yb = (sum_yb2 / n - mean_yb * mean_yb).max(0.0);
    (var_rg + var_yb).sqrt() + 0.3 * (mean_rg * mean_rg + mean_yb * mean_yb).sqrt()
}

/// Mean BT.601 luma, in [0, 1].
pub fn brightness(image: &Image) -> f64 {
    let mut sum = 0.0;
    for y in 0..image.height() {
        for x in 0..image.width() {
            sum += image.luminance(y, x);
        }
    }
    sum / (image.height() * image.width()) as f64
}

/// Shannon entropy in bits of the 256-bin grayscale intensity histogram.
pub fn entropy_bits(image: &Image) -> f64 {
    let mut hist = [0u64; 256];
    for y in 0..image.height() {
        for x in 0..image.width() {
            let bin = (image.luminance(y, x).clamp(0.0, 1.0) * 255.0).round() as usize;
            hist[bin.min(255)] += 1;
        }
    }
    let n = (image.height() * image.width()) as f64;
    let mut h = 0.0;
    for count in hist {
        if count > 0 {
            let p = count as f64 / n;
            h -= p * p.log2();
        }
    }
    h
}

/// `1 - H/8`: larger means simpler, matching the property's name. The raw
/// entropy is emitted alongside because the source describes the property as
/// entropy itself.
pub fn simplicity(image: &Image) -> f64 {
    1.0 - entropy_bits(image) / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_red_is_all_red_and_pure_blue_is_none() {
        let red = Image::uniform(8, 8, [1.0, 0.0, 0.0]);
        let blue = Image::uniform(8, 8, [0.0, 0.0, 1.0]);
        let cfg = RednessConfig::default();
        assert_eq!(redness(&red, &cfg), 1.0);
        assert_eq!(redness(&blue, &cfg), 0.0);
    }

    #[test]
    fn half_red_half_white_is_half() {
        let mut img = Image::uniform(8, 8, [1.0, 1.0, 1.0]);
        for y in 0..8 {
            for x in 0..4 {
                img.set(1, y, x, 0.0);
                img.set(2, y, x, 0.0);
            }
        }
        // Count oracle on the constructed image: exactly the 4 left columns.
        assert_eq!(redness(&img, &RednessConfig::default()), 0.5);
    }

    #[test]
    fn uniform_gray_colorfulness_is_zero() {
        let img = Image::uniform(16, 16, [0.5, 0.5, 0.5]);
        assert_eq!(colorfulness(&img), 0.0);
    }

    #[test]
    fn uniform_nongray_keeps_only_the_mean_term() {
        let img = Image::uniform(4, 4, [1.0, 0.0, 0.0]);
        // var terms vanish; value = 0.3*sqrt(mean_rg^2 + mean_yb^2)
        let rg = 255.0;
        let yb = 127.5;
        let expected = 0.3 * (rg * rg + yb * yb as f64).sqrt();
        assert!((colorfulness(&img) - expected).abs() < 1e-12);
    }

    #[test]
    fn half_red_half_green_matches_pixel_oracle() {
        let mut img = Image::uniform(4, 8, [1.0, 0.0, 0.0]);
        for y in 0..4 {
            for x in 4..8 {
                img.set(0, y, x, 0.0);
                img.set(1, y, x, 1.0);
            }
        }
        // Brute-force oracle over the 32 pixels.
        let mut rgs = Vec::new();
        let mut ybs = Vec::new();
        for y in 0..4 {
            for x in 0..8 {
                let (r, g, b) = (
                    img.get(0, y, x) * 255.0,
                    img.get(1, y, x) * 255.0,
                    img.get(2, y, x) * 255.0,
                );
                rgs.push(r - g);
                ybs.push((r + g) / 2.0 - b);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
        };
        let expected = (var(&rgs) + var(&ybs)).sqrt()
            + 0.3 * (mean(&rgs).powi(2) + mean(&ybs).powi(2)).sqrt();
        assert!((colorfulness(&img) - expected).abs() < 1e-9);
        // sigma_rg = 255, mu_rg = 0, yb constant 127.5.
        assert!((expected - (255.0 + 0.3 * 127.5)).abs() < 1e-9);
    }

    #[test]
    fn brightness_anchors() {
        assert_eq!(brightness(&Image::uniform(4, 4, [0.0; 3])), 0.0);
        assert!((brightness(&Image::uniform(4, 4, [1.0; 3])) - 1.0).abs() < 1e-12);
        assert!((brightness(&Image::uniform(4, 4, [0.5; 3])) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simplicity_anchors() {
        // Single intensity: H = 0, simplicity 1.
        let flat = Image::uniform(16, 16, [0.25, 0.25, 0.25]);
        assert_eq!(entropy_bits(&flat), 0.0);
        assert_eq!(simplicity(&flat), 1.0);

        // All 256 intensities equally frequent: H = 8, simplicity 0.
        let mut img = Image::uniform(16, 16, [0.0; 3]);
        for y in 0..16 {
            for x in 0..16 {
                let v = (y * 16 + x) as f64 / 255.0;
                for c in 0..3 {
                    img.set(c, y, x, v);
                }
            }
        }
        assert!((entropy_bits(&img) - 8.0).abs() < 1e-12);
        assert!(simplicity(&img).abs() < 1e-12);

        // Two equal bins: H = 1, simplicity 0.875.
        let mut two = Image::uniform(2, 2, [0.0; 3]);
        for c in 0..3 {
            two.set(c, 0, 0, 1.0);
            two.set(c, 0, 1, 1.0);
        }
        assert!((entropy_bits(&two) - 1.0).abs() < 1e-12);
        assert!((simplicity(&two) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn flip_invariance() {
        let mut img = Image::uniform(6, 5, [0.2, 0.4, 0.8]);
        img.set(0, 1, 2, 0.9);
        img.set(1, 4, 0, 0.1);
        img.set(2, 3, 3, 0.7);
        let fh = img.flip_horizontal();
        let fv = img.flip_vertical();
        let cfg = RednessConfig::default();
        for other in [&fh, &fv] {
            assert_eq!(redness(&img, &cfg), redness(other, &cfg));
            assert!((colorfulness(&img) - colorfulness(other)).abs() < 1e-12);
            assert!((brightness(&img) - brightness(other)).abs() < 1e-12);
            assert_eq!(entropy_bits(&img), entropy_bits(other));
        }
    }
}
