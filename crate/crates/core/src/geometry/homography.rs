use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{round_to_u8, sample_bilinear, GrayImage};

const DET_EPS: f64 = 1e-12;

/// Projective 3x3 transform acting on column vectors `(x, y, 1)`,
/// normalized so that the bottom-right entry is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation by `angle_deg` about `(cx, cy)`; positive turns content
    /// counterclockwise as seen on screen (y pointing down).
    pub fn rotation_about(cx: f64, cy: f64, angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self {
            m: [
                [c, s, cx - c * cx - s * cy],
                [-s, c, cy + s * cx - c * cy],
                [0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let scale = m[2][2];
        if scale.abs() < DET_EPS || !scale.is_finite() {
            return Err(Error::Singular("homography has zero h[2][2]"));
        }
        let mut n = m;
        for row in &mut n {
            for v in row.iter_mut() {
                *v /= scale;
            }
        }
        let h = Self { m: n };
        if !(h.determinant().abs() > DET_EPS) {
            return Err(Error::Singular("homography is not invertible"));
        }
        Ok(h)
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        if !(det.abs() > DET_EPS) {
            return Err(Error::Singular("homography is not invertible"));
        }
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = adj[r][c] / det;
            }
        }
        Self::from_matrix(inv)
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Self> {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[r][k] * first.m[k][c]).sum();
            }
        }
        Self::from_matrix(out)
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w.abs() < 1e-15 {
            return None;
        }
        Some((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }
}

fn check_quad(q: &[(f64, f64); 4], which: &'static str) -> Result<()> {
    let extent = q
        .iter()
        .flat_map(|&(x, y)| [x.abs(), y.abs()])
        .fold(1.0f64, f64::max);
    if q.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Singular(which));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let (a, b, c) = (q[i], q[j], q[k]);
                let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                if cross.abs() <= 1e-10 * extent * extent {
                    return Err(Error::Singular(which));
                }
            }
        }
    }
    Ok(())
}

/// Solves for the homography taking each `src[i]` to `dst[i]` exactly.
pub fn estimate_homography(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Result<Homography> {
    check_quad(src, "source quad has three collinear points")?;
    check_quad(dst, "destination quad has three collinear points")?;

    // Unknowns h00 h01 h02 h10 h11 h12 h20 h21, with h22 = 1.
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = src[i];
        let (u, v) = dst[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v, v];
    }
    let h = solve_augmented(&mut a).ok_or(Error::Singular("point correspondences are degenerate"))?;
    Homography::from_matrix([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])
}

/// Gaussian elimination with partial pivoting on an 8x9 augmented matrix.
fn solve_augmented(a: &mut [[f64; 9]; 8]) -> Option<[f64; 8]> {
    const N: usize = 8;
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..=N {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut s = a[row][N];
        for k in row + 1..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverse-maps every output pixel through `h` and samples the source
/// bilinearly; samples falling outside the source are black.
pub fn warp_perspective(img: &GrayImage, h: &Homography, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::config("warp output must be at least 1x1"));
    }
    let inv = h.inverse()?;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    const EPS: f64 = 1e-9;
    Ok(GrayImage::from_fn(out_w, out_h, |x, y| {
        match inv.apply(x as f64, y as f64) {
            Some((sx, sy)) if sx >= -EPS && sy >= -EPS && sx <= max_x + EPS && sy <= max_y + EPS => {
                round_to_u8(sample_bilinear(img, sx.clamp(0.0, max_x), sy.clamp(0.0, max_y)))
            }
            _ => 0,
        }
    }))
}
