use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::imaging::{gaussian_smooth, GrayImage, Mask, RealRaster};

/// Binary edge map with the dimensions of its source image.
pub type EdgeMap = Mask;

/// Canny edge detector: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression over four direction sectors, then hysteresis linking of weak
/// edges (`>= low`) to strong ones (`>= high`) through 8-neighbourhoods.
///
/// `sigma <= 0` skips the smoothing step.
pub fn canny(img: &GrayImage, low: f64, high: f64, sigma: f64) -> Result<EdgeMap> {
    if !(low > 0.0 && low < high) {
        return Err(Error::config(format!(
            "canny thresholds must satisfy 0 < low < high, got low={low} high={high}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let raster = RealRaster::from_image(img);
    let smooth = if sigma > 0.0 {
        gaussian_smooth(&raster, sigma)
    } else {
        raster
    };

    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        smooth.get(x, y)
    };
    let mut mag = vec![0.0f64; w * h];
    let mut sector = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let mut deg = gy.atan2(gx).to_degrees();
            if deg < 0.0 {
                deg += 180.0;
            }
            sector[i] = if !(22.5..157.5).contains(&deg) {
                0
            } else if deg < 67.5 {
                1
            } else if deg < 112.5 {
                2
            } else {
                3
            };
        }
    }

    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    // Neighbour offsets along the gradient for each sector (y grows downward).
    const STEP: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];
    let mut strong = VecDeque::new();
    let mut kind = vec![0u8; w * h]; // 0 none, 1 weak, 2 strong
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v < low {
                continue;
            }
            let (dx, dy) = STEP[sector[i] as usize];
            // Strict on one side, non-strict on the other so flat ridges keep one pixel.
            if !(v > m(x - dx, y - dy) && v >= m(x + dx, y + dy)) {
                continue;
            }
            if v >= high {
                kind[i] = 2;
                strong.push_back(i);
            } else {
                kind[i] = 1;
            }
        }
    }

    let mut edges = Mask::empty(w, h);
    for &i in &strong {
        edges.set(i % w, i / w, true);
    }
    while let Some(i) = strong.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (ux, uy) = (nx as usize, ny as usize);
                if kind[uy * w + ux] == 1 && !edges.get(ux, uy) {
                    edges.set(ux, uy, true);
                    strong.push_back(uy * w + ux);
                }
            }
        }
    }
    Ok(edges)
}
