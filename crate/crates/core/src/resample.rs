use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Source coordinate and interpolation weight for one output index,
/// pixel-center aligned and clamped to the source extent.
fn taps(dst_len: usize, src_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Resizes each plane with bilinear interpolation.
///
/// Interpolation is written as `a + t * (b - a)` so constant regions stay
/// exactly constant. Identical dimensions return a bit-identical copy.
pub fn resize_bilinear(img: &ImageBuffer, width: usize, height: usize) -> Result<ImageBuffer> {
    if width == 0 || height == 0 {
        return Err(Error::Param(format!("resize target {width}x{height}")));
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let xs = taps(width, img.width());
    let ys = taps(height, img.height());
    let src_w = img.width();
    let mut data = Vec::with_capacity(width * height * img.channels());
    for c in 0..img.channels() {
        let plane = img.plane(c);
        for &(y0, y1, ty) in &ys {
            let r0 = &plane[y0 * src_w..(y0 + 1) * src_w];
            let r1 = &plane[y1 * src_w..(y1 + 1) * src_w];
            for &(x0, x1, tx) in &xs {
                let top = r0[x0] + tx * (r0[x1] - r0[x0]);
                let bottom = r1[x0] + tx * (r1[x1] - r1[x0]);
                data.push(top + ty * (bottom - top));
            }
        }
    }
    Ok(ImageBuffer::from_parts(width, height, img.channels(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_upsample() {
        let img = ImageBuffer::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 3, 1).unwrap();
        assert_eq!(out.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constants_are_exact() {
        let img = ImageBuffer::filled(7, 5, 3, 0.1);
        let out = resize_bilinear(&img, 19, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn rejects_zero_target() {
        let img = ImageBuffer::filled(2, 2, 1, 0.0);
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }
}
