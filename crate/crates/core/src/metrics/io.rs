//! Image and mask file IO: PNG (8-bit RGB), PPM (P6), PGM (P5) and
//! grayscale-PNG masks (nonzero = object).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Image, Mask, MetricError};

/// Loads an image by extension: `.png` or `.ppm`. 8-bit values rescale by /255.
pub fn load_image(path: &Path) -> Result<Image, MetricError> {
    match extension(path) {
        Some("png") => load_png(path),
        Some("ppm") => load_ppm(path),
        other => Err(MetricError::Format(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Loads a mask: 8-bit grayscale PNG or PGM (P5); nonzero = object.
pub fn load_mask(path: &Path) -> Result<Mask, MetricError> {
    match extension(path) {
        Some("png") => {
            let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
            let mut reader = decoder.read_info()?;
            let size = reader
        .output_buffer_size()
        .ok_or_else(|| MetricError::Format("png dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
            let info = reader.next_frame(&mut buf)?;
            if info.bit_depth != png::BitDepth::Eight {
                return Err(MetricError::Format("mask PNG must be 8-bit".into()));
            }
            let (h, w) = (info.height as usize, info.width as usize);
            let stride = match info.color_type {
                png::ColorType::Grayscale => 1,
                png::ColorType::GrayscaleAlpha => 2,
                other => {
                    return Err(MetricError::Format(format!(
                        "mask PNG must be grayscale, got {other:?}"
                    )))
                }
            };
            let grid = (0..h * w).map(|p| buf[p * stride] != 0).collect();
            Ok(Mask::from_grid(h, w, grid))
        }
        Some("pgm") => {
            let bytes = std::fs::read(path)?;
            let (w, h, data) = parse_netpbm(&bytes, b"P5", 1)?;
            let grid = data.iter().map(|&v| v != 0).collect();
            Ok(Mask::from_grid(h, w, grid))
        }
        other => Err(MetricError::Format(format!(
            "unsupported mask extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Writes 8-bit RGB PNG.
pub fn save_png(image: &Image, path: &Path) -> Result<(), MetricError> {
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, image.width() as u32, image.height() as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&image.to_rgb8())?;
    Ok(())
}

/// Writes binary PPM (P6, maxval 255).
pub fn save_ppm(image: &Image, path: &Path) -> Result<(), MetricError> {
    let mut file = BufWriter::new(File::create(path)?);
    write!(file, "P6\n{} {}\n255\n", image.width(), image.height())?;
    file.write_all(&image.to_rgb8())?;
    Ok(())
}

fn load_png(path: &Path) -> Result<Image, MetricError> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| MetricError::Format("png dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(MetricError::Format("image PNG must be 8-bit".into()));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    let n = h * w;
    let mut planar = vec![0.0; 3 * n];
    let fill = |planar: &mut [f64], p: usize, r: u8, g: u8, b: u8| {
        planar[p] = r as f64 / 255.0;
        planar[n + p] = g as f64 / 255.0;
        planar[2 * n + p] = b as f64 / 255.0;
    };
    match info.color_type {
        png::ColorType::Rgb => {
            for p in 0..n {
                fill(&mut planar, p, buf[3 * p], buf[3 * p + 1], buf[3 * p + 2]);
            }
        }
        png::ColorType::Rgba => {
            for p in 0..n {
                fill(&mut planar, p, buf[4 * p], buf[4 * p + 1], buf[4 * p + 2]);
            }
        }
        png::ColorType::Grayscale => {
            for p in 0..n {
                fill(&mut planar, p, buf[p], buf[p], buf[p]);
            }
        }
        png::ColorType::GrayscaleAlpha => {
            for p in 0..n {
                fill(&mut planar, p, buf[2 * p], buf[2 * p], buf[2 * p]);
            }
        }
        other => {
            return Err(MetricError::Format(format!("unsupported PNG color type {other:?}")))
        }
    }
    Image::from_planar(h, w, planar)
}

fn load_ppm(path: &Path) -> Result<Image, MetricError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let (w, h, data) = parse_netpbm(&bytes, b"P6", 3)?;
    let mut planar = vec![0.0; 3 * h * w];
    let n = h * w;
    for p in 0..n {
        for c in 0..3 {
            planar[c * n + p] = data[3 * p + c] as f64 / 255.0;
        }
    }
    Image::from_planar(h, w, planar)
}

/// Parses a binary netpbm header (`P5`/`P6`), handling `#` comments, and
/// returns (width, height, payload).
fn parse_netpbm(bytes: &[u8], magic: &[u8], channels: usize) -> Result<(usize, usize, Vec<u8>), MetricError> {
    if bytes.len() < 2 || &bytes[0..2] != magic {
        return Err(MetricError::Format(format!(
            "expected {} file",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(MetricError::Format("truncated netpbm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MetricError::Format("bad netpbm header field".into()))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(MetricError::Format(format!("netpbm maxval must be 255, got {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let need = w * h * channels;
    if bytes.len() < pos + need {
        return Err(MetricError::Format("truncated netpbm payload".into()));
    }
    Ok((w, h, bytes[pos..pos + need].to_vec()))
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        let mut img = Image::uniform(5, 7, [0.2, 0.4, 0.6]);
        img.set(0, 1, 2, 1.0);
        img.set(1, 4, 6, 0.0);
        img
    }

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = sample();
        save_png(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.height(), 5);
        assert_eq!(back.width(), 7);
        for c in 0..3 {
            for y in 0..5 {
                for x in 0..7 {
                    // 8-bit quantization tolerance.
                    assert!((back.get(c, y, x) - img.get(c, y, x)).abs() <= 0.5 / 255.0);
                }
            }
        }
    }

    #[test]
    fn ppm_roundtrip_and_comment_handling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        save_ppm(&sample(), &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!((back.height(), back.width()), (5, 7));

        // Header with a comment line.
        let mut bytes = b"P6\n# a comment\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 255, 0]);
        let commented = dir.path().join("c.ppm");
        std::fs::write(&commented, bytes).unwrap();
        let img = load_image(&commented).unwrap();
        assert_eq!(img.get(0, 0, 0), 1.0);
        assert_eq!(img.get(1, 0, 1), 1.0);
    }

    #[test]
    fn pgm_mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.pgm");
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 0, 128, 0, 0]);
        std::fs::write(&path, bytes).unwrap();
        let mask = load_mask(&path).unwrap();
        assert_eq!(mask.area(), 2);
        assert!(mask.get(0, 1));
        assert!(mask.get(1, 0));
    }

    #[test]
    fn grayscale_png_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let file = std::io::BufWriter::new(File::create(&path).unwrap());
        let mut enc = png::Encoder::new(file, 3, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(&[0, 1, 0, 0, 0, 200]).unwrap();
        drop(writer);
        let mask = load_mask(&path).unwrap();
        assert_eq!(mask.area(), 2);
        assert!(mask.get(0, 1));
        assert!(mask.get(1, 2));
    }
}
