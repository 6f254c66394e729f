//! Raster file I/O: PNG (8/16-bit), binary PPM/PGM and PFM.
//!
//! Integer samples are sRGB-encoded unless a PNG declares linear encoding
//! through a `gAMA` chunk of exactly 1.0 with no `sRGB` chunk; this crate
//! writes 16-bit PNGs that way so high-precision planes survive a round trip
//! without transfer-function requantization.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{linear_to_srgb, srgb_to_linear, ImageBuffer};

/// Sample depth for written PNGs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PngDepth {
    #[default]
    Eight,
    Sixteen,
}

/// Integer raster decoded from a file, samples normalized to `[0, 1]`,
/// interleaved, transfer function not yet removed.
#[derive(Debug)]
pub(crate) struct DecodedRaster {
    pub width: usize,
    pub height: usize,
    /// Interleaved channels per pixel (1 to 4).
    pub channels: usize,
    pub samples: Vec<f64>,
    /// Samples are linear light rather than sRGB-encoded.
    pub linear: bool,
    /// Maximum integer code of the source (255, 65535, or the PNM maxval).
    pub max_code: u32,
}

/// A decoded Portable Float Map. Rows are stored top to bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Interleaved samples, may contain non-finite values.
    pub data: Vec<f32>,
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "file is empty"),
        ));
    }
    Ok(bytes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Container {
    Png,
    Pnm,
    Pfm,
}

pub(crate) fn sniff(bytes: &[u8]) -> Result<Container> {
    const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
    if bytes.starts_with(PNG_MAGIC) {
        return Ok(Container::Png);
    }
    match bytes.get(..2) {
        Some(b"PF") | Some(b"Pf") => Ok(Container::Pfm),
        Some(b"P5") | Some(b"P6") | Some(b"P2") | Some(b"P3") => Ok(Container::Pnm),
        _ => {
            let head: String = bytes
                .iter()
                .take(4)
                .map(|&b| if b.is_ascii_graphic() { b as char } else { '.' })
                .collect();
            Err(Error::format("image", format!("unrecognized signature {head:?}")))
        }
    }
}

pub(crate) fn decode_png(bytes: &[u8]) -> Result<DecodedRaster> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::format("PNG", e))?;
    let linear = {
        let info = reader.info();
        info.srgb.is_none()
            && info
                .gama_chunk
                .is_some_and(|g| g.into_scaled() == png::ScaledFloat::SCALING as u32)
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("PNG", "image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format("PNG", e))?;
    buf.truncate(frame.buffer_size());

    let channels = match frame.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::format("PNG", "palette was not expanded"));
        }
    };
    let (samples, max_code) = match frame.bit_depth {
        png::BitDepth::Sixteen => (
            buf.chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
                .collect(),
            65535,
        ),
        png::BitDepth::Eight => (buf.iter().map(|&b| b as f64 / 255.0).collect(), 255),
        other => {
            return Err(Error::format("PNG", format!("unexpected bit depth {other:?}")));
        }
    };
    Ok(DecodedRaster {
        width: frame.width as usize,
        height: frame.height as usize,
        channels,
        samples,
        linear,
        max_code,
    })
}

fn decode_pnm(bytes: &[u8]) -> Result<DecodedRaster> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Pnm)
        .map_err(|e| Error::format("PNM", e))?;
    let max_code = match img.color().bytes_per_pixel() / img.color().channel_count() {
        1 => 255,
        _ => 65535,
    };
    let (width, height) = (img.width() as usize, img.height() as usize);
    let (channels, raw) = if img.color().has_color() {
        (3, img.into_rgb16().into_raw())
    } else {
        (1, img.into_luma16().into_raw())
    };
    Ok(DecodedRaster {
        width,
        height,
        channels,
        samples: raw.into_iter().map(|v| v as f64 / 65535.0).collect(),
        linear: false,
        max_code,
    })
}

/// Loads a PNG or binary PPM/PGM into linear light.
///
/// Alpha channels are dropped. Gray-with-alpha becomes one channel, RGBA
/// becomes three.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let raster = match sniff(&bytes)? {
        Container::Png => decode_png(&bytes)?,
        Container::Pnm => decode_pnm(&bytes)?,
        Container::Pfm => {
            return Err(Error::format(
                "PFM",
                "float maps carry depth or disparity, not display images",
            ))
        }
    };
    Ok(raster_to_buffer(&raster))
}

fn raster_to_buffer(raster: &DecodedRaster) -> ImageBuffer {
    let out_channels = if raster.channels >= 3 { 3 } else { 1 };
    let n = raster.width * raster.height;
    let mut data = vec![0.0; n * out_channels];
    for i in 0..n {
        for c in 0..out_channels {
            let v = raster.samples[i * raster.channels + c];
            data[c * n + i] = if raster.linear { v } else { srgb_to_linear(v) };
        }
    }
    ImageBuffer::from_parts(raster.width, raster.height, out_channels, data)
}

fn quantize(v: f64, depth: PngDepth, linear: bool) -> u16 {
    let v = v.clamp(0.0, 1.0);
    let v = if linear { v } else { linear_to_srgb(v) };
    match depth {
        PngDepth::Eight => (v * 255.0).round() as u16,
        PngDepth::Sixteen => (v * 65535.0).round() as u16,
    }
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: PngDepth,
    linear: bool,
    interleaved: &[u16],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        if linear {
            encoder.set_source_gamma(png::ScaledFloat::new(1.0));
        } else {
            encoder.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
        }
        let bytes: Vec<u8> = match depth {
            PngDepth::Eight => {
                encoder.set_depth(png::BitDepth::Eight);
                interleaved.iter().map(|&v| v as u8).collect()
            }
            PngDepth::Sixteen => {
                encoder.set_depth(png::BitDepth::Sixteen);
                interleaved.iter().flat_map(|v| v.to_be_bytes()).collect()
            }
        };
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::format("PNG", e))?;
        writer
            .write_image_data(&bytes)
            .map_err(|e| Error::format("PNG", e))?;
        writer.finish().map_err(|e| Error::format("PNG", e))?;
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Encodes a buffer as PNG bytes.
///
/// Samples are clamped to `[0, 1]`. 8-bit output is sRGB-encoded; 16-bit
/// output is stored linear and tagged with a unit `gAMA` chunk.
pub fn encode_image_png(img: &ImageBuffer, depth: PngDepth) -> Result<Vec<u8>> {
    let linear = depth == PngDepth::Sixteen;
    let n = img.pixel_count();
    let ch = img.channels();
    let mut interleaved = vec![0u16; n * ch];
    for c in 0..ch {
        for (i, &v) in img.plane(c).iter().enumerate() {
            interleaved[i * ch + c] = quantize(v, depth, linear);
        }
    }
    let color = if ch == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    };
    encode_png(img.width(), img.height(), color, depth, linear, &interleaved)
}

/// Writes a buffer as PNG. See [`encode_image_png`] for the encoding rules.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>, depth: PngDepth) -> Result<()> {
    write_file(path.as_ref(), &encode_image_png(img, depth)?)
}

/// Decodes PNG/PPM/PGM bytes into linear light, as [`load_image`] does for files.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let raster = match sniff(bytes)? {
        Container::Png => decode_png(bytes)?,
        Container::Pnm => decode_pnm(bytes)?,
        Container::Pfm => return Err(Error::format("PFM", "not a display image")),
    };
    Ok(raster_to_buffer(&raster))
}

/// Writes an 8-bit RGBA PNG with straight (non-premultiplied) alpha.
/// Color is sRGB-encoded; alpha is stored as-is.
pub fn save_rgba_png(color: &ImageBuffer, alpha: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    color.expect_channels(3)?;
    alpha.expect_channels(1)?;
    color.expect_same_size(alpha)?;
    let n = color.pixel_count();
    let mut interleaved = vec![0u16; n * 4];
    for i in 0..n {
        for c in 0..3 {
            interleaved[i * 4 + c] = quantize(color.plane(c)[i], PngDepth::Eight, false);
        }
        interleaved[i * 4 + 3] = quantize(alpha.data()[i], PngDepth::Eight, true);
    }
    let bytes = encode_png(
        color.width(),
        color.height(),
        png::ColorType::Rgba,
        PngDepth::Eight,
        false,
        &interleaved,
    )?;
    write_file(path.as_ref(), &bytes)
}

/// Reads an RGBA PNG into linear color and alpha planes. Inputs without
/// alpha get an opaque alpha plane.
pub fn load_rgba_png(path: impl AsRef<Path>) -> Result<(ImageBuffer, ImageBuffer)> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if sniff(&bytes)? != Container::Png {
        return Err(Error::format("PNG", "layer files must be PNG"));
    }
    let raster = decode_png(&bytes)?;
    let n = raster.width * raster.height;
    let ch = raster.channels;
    let mut color = vec![0.0; n * 3];
    let mut alpha = vec![1.0; n];
    for i in 0..n {
        let px = &raster.samples[i * ch..(i + 1) * ch];
        let rgb = if ch >= 3 {
            [px[0], px[1], px[2]]
        } else {
            [px[0]; 3]
        };
        for c in 0..3 {
            color[c * n + i] = if raster.linear {
                rgb[c]
            } else {
                srgb_to_linear(rgb[c])
            };
        }
        if ch == 2 || ch == 4 {
            alpha[i] = px[ch - 1];
        }
    }
    Ok((
        ImageBuffer::from_parts(raster.width, raster.height, 3, color),
        ImageBuffer::from_parts(raster.width, raster.height, 1, alpha),
    ))
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .filter(|s| !s.is_empty())
}

pub(crate) fn decode_pfm(bytes: &[u8]) -> Result<PfmImage> {
    let bad = |detail: &str| Error::format("PFM", detail);
    let mut pos = 0;
    let channels = match next_token(bytes, &mut pos) {
        Some("PF") => 3,
        Some("Pf") => 1,
        _ => return Err(bad("missing PF/Pf header")),
    };
    let mut number = |what: &str| -> Result<f64> {
        next_token(bytes, &mut pos)
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| bad(&format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let scale = number("scale")?;
    if width < 1.0 || height < 1.0 || width.fract() != 0.0 || height.fract() != 0.0 {
        return Err(bad("bad dimensions"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("bad scale"));
    }
    let (width, height) = (width as usize, height as usize);
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let count = width * height * channels;
    let body = bytes
        .get(pos..pos + count * 4)
        .ok_or_else(|| bad("truncated raster"))?;
    let little_endian = scale < 0.0;
    let mut data = vec![0f32; count];
    let row_len = width * channels;
    // Rows are stored bottom to top.
    for (row, chunk) in body.chunks_exact(row_len * 4).enumerate() {
        let dst_row = height - 1 - row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let raw = [b[0], b[1], b[2], b[3]];
            data[dst_row * row_len + i] = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

/// Reads a Portable Float Map of either endianness.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<PfmImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    decode_pfm(&bytes)
}

/// Writes a little-endian Portable Float Map.
pub fn write_pfm(pfm: &PfmImage, path: impl AsRef<Path>) -> Result<()> {
    if pfm.channels != 1 && pfm.channels != 3 {
        return Err(Error::Shape(format!("{} channels in PFM", pfm.channels)));
    }
    if pfm.data.len() != pfm.width * pfm.height * pfm.channels {
        return Err(Error::Shape("PFM sample count".into()));
    }
    let tag = if pfm.channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{} {}\n-1.0\n", pfm.width, pfm.height).into_bytes();
    let row_len = pfm.width * pfm.channels;
    for row in (0..pfm.height).rev() {
        for v in &pfm.data[row * row_len..(row + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_file(path.as_ref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ppm_endpoints_map_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 255, 255, 0, 0, 0]);
        fs::write(&path, bytes).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 1, 3));
        for c in 0..3 {
            assert_eq!(img.plane(c), &[1.0, 0.0]);
        }
    }

    #[test]
    fn pgm_sixteen_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&65535u16.to_be_bytes());
        fs::write(&path, bytes).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.data(), &[1.0]);
    }

    #[test]
    fn gray_png_is_linearized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        // A plain 8-bit PNG without color metadata.
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[128]).unwrap();
        }
        fs::write(&path, out).unwrap();
        let img = load_image(&path).unwrap();
        assert_abs_diff_eq!(img.data()[0], 0.2158, epsilon = 1e-3);
    }

    #[test]
    fn empty_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.png");
        fs::write(&path, b"").unwrap();
        assert!(matches!(load_image(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_image("/nonexistent/nothing.png"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn unknown_format_names_itself() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.gif");
        fs::write(&path, b"GIF89a....").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert!(err.to_string().contains("GIF8"));
    }

    #[test]
    fn save_clamps_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let img = ImageBuffer::new(2, 1, 1, vec![1.5, -0.2]).unwrap();
        save_image(&img, &path, PngDepth::Eight).unwrap();
        assert_eq!(load_image(&path).unwrap().data(), &[1.0, 0.0]);
    }

    #[test]
    fn sixteen_bit_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.png");
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for channels in [1, 3] {
            let data: Vec<f64> = (0..37 * 23 * channels).map(|_| rng.gen()).collect();
            let img = ImageBuffer::new(37, 23, channels, data).unwrap();
            save_image(&img, &path, PngDepth::Sixteen).unwrap();
            let back = load_image(&path).unwrap();
            let err = img
                .data()
                .iter()
                .zip(back.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1.0 / 65535.0 + 1e-6, "max error {err}");

            // A second round trip reproduces the first bit for bit.
            save_image(&back, &path, PngDepth::Sixteen).unwrap();
            assert_eq!(load_image(&path).unwrap(), back);
        }
    }

    #[test]
    fn eight_bit_round_trip_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r8.png");
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let data: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.gen()).collect();
        let img = ImageBuffer::new(16, 16, 3, data).unwrap();
        save_image(&img, &path, PngDepth::Eight).unwrap();
        let once = load_image(&path).unwrap();
        save_image(&once, &path, PngDepth::Eight).unwrap();
        assert_eq!(load_image(&path).unwrap(), once);
    }

    #[test]
    fn pfm_both_endiannesses() {
        let dir = tempfile::tempdir().unwrap();
        let le = dir.path().join("le.pfm");
        let pfm = PfmImage {
            width: 2,
            height: 2,
            channels: 1,
            data: vec![1.0, 2.0, 3.0, f32::INFINITY],
        };
        write_pfm(&pfm, &le).unwrap();
        assert_eq!(read_pfm(&le).unwrap(), pfm);

        // Big-endian: positive scale, bottom row first.
        let be = dir.path().join("be.pfm");
        let mut bytes = b"Pf\n2 2\n1.0\n".to_vec();
        for v in [3.0f32, 4.0, 1.0, 2.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        fs::write(&be, bytes).unwrap();
        assert_eq!(read_pfm(&be).unwrap().data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn pfm_truncated_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        fs::write(&path, b"Pf\n4 4\n-1.0\n\0\0\0\0").unwrap();
        assert!(matches!(read_pfm(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn rgba_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.png");
        let color = ImageBuffer::from_fn_rgb(3, 2, |x, y| [x as f64 / 2.0, y as f64, 0.25]);
        let alpha = ImageBuffer::from_fn(3, 2, |x, _| if x == 1 { 1.0 } else { 0.5 });
        save_rgba_png(&color, &alpha, &path).unwrap();
        let (c2, a2) = load_rgba_png(&path).unwrap();
        for (a, b) in color.data().iter().zip(c2.data()) {
            assert!((a - b).abs() <= 2.0 / 255.0);
        }
        for (a, b) in alpha.data().iter().zip(a2.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}
