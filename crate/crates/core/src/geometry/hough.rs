use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::canny::EdgeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl LineSegment {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    /// Visual angle from horizontal in degrees, counterclockwise positive with
    /// y pointing down, folded into `(-90, 90]`.
    pub fn angle_deg(&self) -> f64 {
        let mut a = (-(self.y2 - self.y1)).atan2(self.x2 - self.x1).to_degrees();
        if a > 90.0 {
            a -= 180.0;
        } else if a <= -90.0 {
            a += 180.0;
        }
        a
    }

    pub fn mid_y(&self) -> f64 {
        0.5 * (self.y1 + self.y2)
    }

    /// Endpoints ordered so that `x1 <= x2`.
    pub fn left_to_right(&self) -> Self {
        if self.x1 <= self.x2 {
            *self
        } else {
            Self::new(self.x2, self.y2, self.x1, self.y1)
        }
    }

    /// y on the infinite line through the segment at abscissa `x`.
    pub fn y_at(&self, x: f64) -> f64 {
        let dx = self.x2 - self.x1;
        if dx.abs() < 1e-12 {
            return self.mid_y();
        }
        self.y1 + (x - self.x1) * (self.y2 - self.y1) / dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PphtParams {
    /// Distance resolution of the accumulator, pixels.
    pub rho_res: f64,
    /// Angle resolution of the accumulator, radians.
    pub theta_res: f64,
    pub vote_threshold: u32,
    pub min_line_len: f64,
    pub max_line_gap: usize,
    pub seed: u64,
}

/// Progressive probabilistic Hough transform.
///
/// Edge points are visited once each in a seeded random order. Each point
/// votes into the (rho, theta) accumulator; as soon as one of its bins reaches
/// `vote_threshold` the edge map is walked from that point in both directions
/// along the bin's line, tolerating up to `max_line_gap` missing pixels. The
/// walk follows the edge when it drifts by one pixel across the main axis.
/// Walked pixels leave the pool; if the segment is at least `min_line_len`
/// long it is emitted and the votes of its pixels are withdrawn.
pub fn ppht(edges: &EdgeMap, p: &PphtParams) -> Vec<LineSegment> {
    let (w, h) = (edges.width(), edges.height());
    if w == 0 || h == 0 || !(p.rho_res > 0.0 && p.theta_res > 0.0) {
        return Vec::new();
    }
    let num_angle = ((std::f64::consts::PI / p.theta_res).round() as usize).max(1);
    let num_rho = ((((w + h) * 2 + 1) as f64 / p.rho_res).round() as usize).max(1);
    let rho_offset = (num_rho - 1) / 2;
    let trig: Vec<(f64, f64)> = (0..num_angle)
        .map(|n| {
            let t = n as f64 * p.theta_res;
            (t.cos() / p.rho_res, t.sin() / p.rho_res)
        })
        .collect();

    let mut points: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) {
                points.push((x, y));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    points.shuffle(&mut rng);

    let mut available: Vec<bool> = edges.bits().to_vec();
    let mut voted = vec![false; w * h];
    let mut acc = vec![0i32; num_angle * num_rho];
    let bin = |n: usize, x: usize, y: usize| -> usize {
        let (c, s) = trig[n];
        let r = (x as f64 * c + y as f64 * s).round() as isize + rho_offset as isize;
        n * num_rho + r.clamp(0, num_rho as isize - 1) as usize
    };

    let mut lines: Vec<LineSegment> = Vec::new();
    for &(x, y) in &points {
        let idx = y * w + x;
        if !available[idx] {
            continue;
        }
        let mut best = (0i32, 0usize);
        for n in 0..num_angle {
            let b = bin(n, x, y);
            acc[b] += 1;
            if acc[b] > best.0 {
                best = (acc[b], n);
            }
        }
        voted[idx] = true;
        if best.0 < p.vote_threshold as i32 {
            continue;
        }

        let theta = best.1 as f64 * p.theta_res;
        let (dir_x, dir_y) = (-theta.sin(), theta.cos());
        let x_major = dir_x.abs() > dir_y.abs();
        let (sx, sy) = if x_major {
            (dir_x.signum(), dir_y / dir_x.abs())
        } else {
            (dir_x / dir_y.abs(), dir_y.signum())
        };

        let mut hits: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        let mut ends = [(x, y); 2];
        for (k, sign) in [1.0f64, -1.0].into_iter().enumerate() {
            let (dx, dy) = (sx * sign, sy * sign);
            let (mut fx, mut fy) = (x as f64, y as f64);
            let mut gap = 0usize;
            loop {
                fx += dx;
                fy += dy;
                let (ix, iy) = (fx.round(), fy.round());
                if ix < 0.0 || iy < 0.0 || ix >= w as f64 || iy >= h as f64 {
                    break;
                }
                let (ix, iy) = (ix as usize, iy as usize);
                let mut hit = available[iy * w + ix].then_some((ix, iy));
                if hit.is_none() {
                    // Look one pixel to either side across the main axis.
                    for off in [-1isize, 1] {
                        let (cx, cy) = if x_major {
                            (ix as isize, iy as isize + off)
                        } else {
                            (ix as isize + off, iy as isize)
                        };
                        if cx < 0 || cy < 0 || cx >= w as isize || cy >= h as isize {
                            continue;
                        }
                        let (cx, cy) = (cx as usize, cy as usize);
                        if available[cy * w + cx] {
                            hit = Some((cx, cy));
                            if x_major {
                                fy += off as f64;
                            } else {
                                fx += off as f64;
                            }
                            break;
                        }
                    }
                }
                match hit {
                    Some(pt) => {
                        gap = 0;
                        ends[k] = pt;
                        hits[k].push(pt);
                    }
                    None => {
                        gap += 1;
                        if gap > p.max_line_gap {
                            break;
                        }
                    }
                }
            }
        }

        let segment = LineSegment::new(
            ends[0].0 as f64,
            ends[0].1 as f64,
            ends[1].0 as f64,
            ends[1].1 as f64,
        );
        let good = segment.length() >= p.min_line_len;

        let mut release = |px: usize, py: usize, acc: &mut Vec<i32>| {
            let i = py * w + px;
            if !available[i] {
                return;
            }
            if good && voted[i] {
                for n in 0..num_angle {
                    acc[bin(n, px, py)] -= 1;
                }
                voted[i] = false;
            }
            available[i] = false;
        };
        release(x, y, &mut acc);
        for &(hx, hy) in hits.iter().flatten() {
            release(hx, hy, &mut acc);
            if good {
                // Thick edges: drop the pixels flanking the walked path too.
                for off in [-1isize, 1] {
                    let (cx, cy) = if x_major {
                        (hx as isize, hy as isize + off)
                    } else {
                        (hx as isize + off, hy as isize)
                    };
                    if cx >= 0 && cy >= 0 && cx < w as isize && cy < h as isize {
                        release(cx as usize, cy as usize, &mut acc);
                    }
                }
            }
        }
        if good {
            lines.push(segment);
        }
    }

    lines.sort_by(|a, b| b.length().total_cmp(&a.length()));
    lines
}
