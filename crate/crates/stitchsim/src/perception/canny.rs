//! Edge extraction: Gaussian blur, Sobel gradients, non-maximum
//! suppression, and two-threshold hysteresis. Thresholds can be fixed or
//! derived from recent frame statistics via `dynamic_thresholds`.

use super::GrayImage;

/// Pick hysteresis thresholds from the pooled intensity median of a frame
/// window: low = 0.5 * median, high = 1.5 * median (clamped to 255).
///
/// The median of an even-sized pool is the midpoint of the two central
/// order statistics.
pub fn dynamic_thresholds(frames: &[GrayImage]) -> (f64, f64) {
    let mut hist = [0u64; 256];
    let mut total: u64 = 0;
    for f in frames {
        for &p in &f.pixels {
            hist[p as usize] += 1;
        }
        total += f.pixels.len() as u64;
    }
    if total == 0 {
        return (0.0, 0.0);
    }
    let nth = |k: u64| -> f64 {
        let mut seen = 0u64;
        for (v, &c) in hist.iter().enumerate() {
            seen += c;
            if seen > k {
                return v as f64;
            }
        }
        255.0
    };
    let median = if total % 2 == 1 {
        nth(total / 2)
    } else {
        0.5 * (nth(total / 2 - 1) + nth(total / 2))
    };
    (0.5 * median, (1.5 * median).min(255.0))
}

/// Canny edge detection. Returns edge pixel coordinates (x, y) sorted
/// row-major. Border pixels never become edges.
pub fn detect_edges(img: &GrayImage, low: f64, high: f64) -> Vec<(usize, usize)> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Vec::new();
    }

    let smooth = gaussian_blur(img);

    // Sobel gradients, valid in the 1-pixel-inset interior.
    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    let mut mag = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let s = |dx: i64, dy: i64| -> f64 {
                smooth[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize]
            };
            let dx = (s(1, -1) + 2.0 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2.0 * s(-1, 0) + s(-1, 1));
            let dy = (s(-1, 1) + 2.0 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2.0 * s(0, -1) + s(1, -1));
            let i = y * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = dx.hypot(dy);
        }
    }

    // Non-maximum suppression along the gradient direction, quantized to
    // 4 bins. Ties keep the pixel so plateau edges are not lost.
    let mut thin = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (da, db): ((i64, i64), (i64, i64)) = if !(22.5..157.5).contains(&angle) {
                ((1, 0), (-1, 0))
            } else if angle < 67.5 {
                ((1, 1), (-1, -1))
            } else if angle < 112.5 {
                ((0, 1), (0, -1))
            } else {
                ((-1, 1), (1, -1))
            };
            let at = |d: (i64, i64)| -> f64 {
                mag[(y as i64 + d.1) as usize * w + (x as i64 + d.0) as usize]
            };
            if m >= at(da) && m >= at(db) {
                thin[i] = m;
            }
        }
    }

    // Hysteresis: flood from strong pixels through weak ones, 8-connected.
    const WEAK: u8 = 1;
    const EDGE: u8 = 2;
    let mut state = vec![0u8; w * h];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            if thin[i] >= high {
                state[i] = EDGE;
                stack.push((x, y));
            } else if thin[i] >= low {
                state[i] = WEAK;
            }
        }
    }
    while let Some((x, y)) = stack.pop() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 1 || ny < 1 || nx >= w as i64 - 1 || ny >= h as i64 - 1 {
                    continue;
                }
                let ni = ny as usize * w + nx as usize;
                if state[ni] == WEAK {
                    state[ni] = EDGE;
                    stack.push((nx as usize, ny as usize));
                }
            }
        }
    }

    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if state[y * w + x] == EDGE {
                edges.push((x, y));
            }
        }
    }
    edges
}

/// 5x5 Gaussian with sigma 1.0, separable, replicate-padded borders.
fn gaussian_blur(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let mut kernel = [0.0f64; 5];
    let mut sum = 0.0;
    for (k, slot) in kernel.iter_mut().enumerate() {
        let d = k as f64 - 2.0;
        *slot = (-0.5 * d * d).exp();
        sum += *slot;
    }
    for slot in kernel.iter_mut() {
        *slot /= sum;
    }

    let clamp = |v: i64, max: usize| -> usize { v.clamp(0, max as i64 - 1) as usize };
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = clamp(x as i64 + k as i64 - 2, w);
                acc += kv * img.pixels[y * w + sx] as f64;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = clamp(y as i64 + k as i64 - 2, h);
                acc += kv * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}
