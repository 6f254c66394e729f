//! Deterministic synthetic scenes with known depth, for tests, benchmarks
//! and demos.

use crate::depth::DepthMap;
use crate::image::ImageBuffer;

/// A synthetic image with its ground-truth nearness.
#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub rgb: ImageBuffer,
    pub nearness: DepthMap,
}

fn hash(x: i64, y: i64, seed: u64) -> f64 {
    let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ seed.wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Smooth value noise in `[0, 1)` with lattice spacing `cell` pixels.
pub fn value_noise(x: f64, y: f64, cell: f64, seed: u64) -> f64 {
    let (u, v) = (x / cell, y / cell);
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let s = |t: f64| t * t * (3.0 - 2.0 * t);
    let (sx, sy) = (s(fx), s(fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let top = hash(ix, iy, seed) + sx * (hash(ix + 1, iy, seed) - hash(ix, iy, seed));
    let bottom = hash(ix, iy + 1, seed) + sx * (hash(ix + 1, iy + 1, seed) - hash(ix, iy + 1, seed));
    top + sy * (bottom - top)
}

/// Textured background plane with a shaded, textured sphere in front.
/// Nearness is 0.1 behind and 0.9 on the sphere.
pub fn bimodal_card(width: usize, height: usize, seed: u64) -> Scene {
    let (cx, cy) = (width as f64 * 0.5, height as f64 * 0.55);
    let radius = width.min(height) as f64 * 0.3;
    let inside = move |x: usize, y: usize| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        dx * dx + dy * dy < radius * radius
    };
    let rgb = ImageBuffer::from_fn_rgb(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if inside(x, y) {
            let (nx, ny) = ((xf + 0.5 - cx) / radius, (yf + 0.5 - cy) / radius);
            let nz = (1.0 - nx * nx - ny * ny).max(0.0).sqrt();
            let light = 0.35 + 0.65 * (-0.4 * nx - 0.5 * ny + 0.77 * nz).max(0.0);
            let tex = 0.8 + 0.2 * value_noise(xf, yf, 3.0, seed);
            let base = [0.75, 0.45, 0.3];
            base.map(|c| (c * light * tex).clamp(0.0, 1.0))
        } else {
            let light = 0.6 + 0.3 * (xf / width as f64);
            let tex = 0.75 + 0.25 * value_noise(xf, yf, 4.0, seed ^ 0xA5);
            let base = [0.35, 0.5, 0.6];
            base.map(|c| (c * light * tex).clamp(0.0, 1.0))
        }
    });
    let nearness = DepthMap::from_fn(width, height, |x, y| if inside(x, y) { 0.9 } else { 0.1 });
    Scene {
        name: format!("bimodal-{seed}"),
        rgb,
        nearness,
    }
}

/// Receding textured ground plane under a sky band; nearness grows toward
/// the bottom of the frame.
pub fn ground_plane(width: usize, height: usize, seed: u64) -> Scene {
    let horizon = height as f64 * 0.35;
    let rgb = ImageBuffer::from_fn_rgb(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if yf < horizon {
            let t = yf / horizon;
            [0.45 + 0.2 * t, 0.6 + 0.15 * t, 0.85]
        } else {
            let depth = (yf - horizon + 1.0) / (height as f64 - horizon);
            let scale = 1.0 + 10.0 * depth;
            let tex = value_noise(xf / scale * 4.0, yf, 2.0 + 4.0 * depth, seed);
            let shade = 0.5 + 0.4 * depth;
            [0.4, 0.55, 0.25].map(|c| (c * shade * (0.7 + 0.3 * tex)).clamp(0.0, 1.0))
        }
    });
    let nearness = DepthMap::from_fn(width, height, |_, y| {
        let yf = y as f64;
        if yf < horizon {
            0.0
        } else {
            ((yf - horizon) / (height as f64 - horizon)).clamp(0.0, 1.0)
        }
    });
    Scene {
        name: format!("ground-{seed}"),
        rgb,
        nearness,
    }
}

/// Fronto-parallel textured slabs at several depths, in the manner of a
/// stereo benchmark scene. Nearer slabs occlude farther ones.
pub fn stacked_planes(width: usize, height: usize, seed: u64) -> Scene {
    let (w, h) = (width as f64, height as f64);
    // (x0, y0, x1, y1) in relative units, nearness, base color.
    let slabs = [
        (0.0, 0.0, 1.0, 1.0, 0.05, [0.55, 0.5, 0.45]),
        (0.1, 0.15, 0.55, 0.7, 0.35, [0.3, 0.45, 0.65]),
        (0.45, 0.3, 0.9, 0.85, 0.6, [0.7, 0.6, 0.25]),
        (0.25, 0.55, 0.6, 0.95, 0.95, [0.6, 0.3, 0.35]),
    ];
    let top = move |x: usize, y: usize| {
        let (u, v) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
        slabs
            .iter()
            .enumerate()
            .rev()
            .find(|(_, s)| u >= s.0 && u < s.2 && v >= s.1 && v < s.3)
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let rgb = ImageBuffer::from_fn_rgb(width, height, |x, y| {
        let i = top(x, y);
        let s = &slabs[i];
        let (xf, yf) = (x as f64, y as f64);
        let tex = value_noise(xf, yf, 2.0 + i as f64, seed.wrapping_add(i as u64));
        let shade = 0.7 + 0.3 * ((xf / w - s.0) / (s.2 - s.0));
        s.5.map(|c| (c * shade * (0.75 + 0.25 * tex)).clamp(0.0, 1.0))
    });
    let nearness = DepthMap::from_fn(width, height, |x, y| slabs[top(x, y)].4);
    Scene {
        name: format!("planes-{seed}"),
        rgb,
        nearness,
    }
}

/// Saturated color patches with hard edges and a smooth depth ramp.
pub fn color_patches(width: usize, height: usize, seed: u64) -> Scene {
    let palette = [
        [0.8, 0.1, 0.1],
        [0.1, 0.7, 0.2],
        [0.1, 0.2, 0.8],
        [0.9, 0.8, 0.1],
        [0.6, 0.1, 0.7],
        [0.1, 0.7, 0.7],
        [0.9, 0.9, 0.9],
        [0.05, 0.05, 0.05],
    ];
    let cell = (width.min(height) / 6).max(2);
    let rgb = ImageBuffer::from_fn_rgb(width, height, |x, y| {
        let pick = hash((x / cell) as i64, (y / cell) as i64, seed);
        let base = palette[(pick * palette.len() as f64) as usize % palette.len()];
        let tex = 0.85 + 0.15 * value_noise(x as f64, y as f64, 2.5, seed ^ 7);
        base.map(|c| c * tex)
    });
    let nearness = DepthMap::from_fn(width, height, |x, _| x as f64 / (width.max(2) - 1) as f64);
    Scene {
        name: format!("patches-{seed}"),
        rgb,
        nearness,
    }
}

/// Several lit spheres on a dark backdrop; nearness follows sphere height.
pub fn spheres(width: usize, height: usize, seed: u64) -> Scene {
    let (w, h) = (width as f64, height as f64);
    let balls: Vec<(f64, f64, f64, [f64; 3])> = (0..5)
        .map(|i| {
            let r = 0.08 + 0.1 * hash(i, 1, seed);
            let x = 0.15 + 0.7 * hash(i, 2, seed);
            let y = 0.15 + 0.7 * hash(i, 3, seed);
            let col = [hash(i, 4, seed), hash(i, 5, seed), hash(i, 6, seed)].map(|c| 0.3 + 0.6 * c);
            (x, y, r, col)
        })
        .collect();
    let hit = |x: usize, y: usize| -> Option<(usize, f64, f64, f64)> {
        let m = w.min(h);
        let (px, py) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (i, &(bx, by, r, _)) in balls.iter().enumerate() {
            let nx = (px - bx) * w / (r * m);
            let ny = (py - by) * h / (r * m);
            let d2 = nx * nx + ny * ny;
            if d2 < 1.0 {
                let nz = (1.0 - d2).sqrt();
                let z = r * nz + r;
                if best.is_none_or(|b| z > b.3) {
                    best = Some((i, nx, ny, z));
                }
            }
        }
        best
    };
    let rgb = ImageBuffer::from_fn_rgb(width, height, |x, y| match hit(x, y) {
        Some((i, nx, ny, _)) => {
            let nz = (1.0 - nx * nx - ny * ny).max(0.0).sqrt();
            let light = 0.15 + 0.85 * (-0.5 * nx - 0.5 * ny + 0.707 * nz).max(0.0);
            balls[i].3.map(|c| (c * light).clamp(0.0, 1.0))
        }
        None => {
            let t = value_noise(x as f64, y as f64, 6.0, seed);
            [0.08 + 0.05 * t; 3]
        }
    });
    let zmax = balls.iter().map(|b| 2.0 * b.2).fold(0.0, f64::max);
    let nearness = DepthMap::from_fn(width, height, |x, y| match hit(x, y) {
        Some((_, _, _, z)) => 0.2 + 0.8 * (z / zmax).min(1.0),
        None => 0.0,
    });
    Scene {
        name: format!("spheres-{seed}"),
        rgb,
        nearness,
    }
}

/// Ten varied scenes at the requested size.
pub fn fixture_set(width: usize, height: usize) -> Vec<Scene> {
    vec![
        bimodal_card(width, height, 1),
        bimodal_card(width, height, 2),
        ground_plane(width, height, 3),
        ground_plane(width, height, 4),
        stacked_planes(width, height, 5),
        stacked_planes(width, height, 6),
        color_patches(width, height, 7),
        color_patches(width, height, 8),
        spheres(width, height, 9),
        spheres(width, height, 10),
    ]
}
