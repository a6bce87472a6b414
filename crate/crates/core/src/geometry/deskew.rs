use serde::{Deserialize, Serialize};

use super::canny::canny;
use super::homography::{estimate_homography, warp_perspective, Homography};
use super::hough::{ppht, LineSegment, PphtParams};
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 50.0,
            high: 150.0,
            sigma: 1.4,
        }
    }
}

/// Hough settings as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    pub rho: f64,
    pub theta_deg: f64,
    pub votes: u32,
    /// Minimum segment length as a fraction of image width.
    pub min_len_frac: f64,
    pub max_gap: usize,
    pub seed: u64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            theta_deg: 1.0,
            votes: 50,
            min_len_frac: 0.4,
            max_gap: 10,
            seed: 42,
        }
    }
}

impl HoughParams {
    pub fn for_width(&self, width: usize) -> PphtParams {
        PphtParams {
            rho_res: self.rho,
            theta_res: self.theta_deg.to_radians(),
            vote_threshold: self.votes,
            min_line_len: self.min_len_frac * width as f64,
            max_line_gap: self.max_gap,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeskewMode {
    /// Rotate the dominant near-horizontal line onto the horizontal.
    #[default]
    Rotation,
    /// Map the top and bottom near-horizontal lines onto parallel
    /// horizontals; falls back to `Rotation` with fewer than two lines.
    TwoLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeskewParams {
    pub canny: CannyParams,
    pub hough: HoughParams,
    pub max_skew_deg: f64,
    pub mode: DeskewMode,
}

impl Default for DeskewParams {
    fn default() -> Self {
        Self {
            canny: CannyParams::default(),
            hough: HoughParams::default(),
            max_skew_deg: 25.0,
            mode: DeskewMode::Rotation,
        }
    }
}

impl DeskewParams {
    pub fn validate(&self) -> Result<()> {
        let c = &self.canny;
        if !(c.low > 0.0 && c.low < c.high) || !(c.sigma >= 0.0) {
            return Err(Error::config(format!(
                "canny parameters need 0 < low < high and sigma >= 0, got {c:?}"
            )));
        }
        let h = &self.hough;
        if !(h.rho > 0.0 && h.theta_deg > 0.0 && h.theta_deg <= 180.0 && h.votes > 0) {
            return Err(Error::config(format!(
                "hough resolutions and vote threshold must be positive, got {h:?}"
            )));
        }
        if !(h.min_len_frac > 0.0 && h.min_len_frac <= 1.0) {
            return Err(Error::config(format!(
                "hough min_len_frac must lie in (0, 1], got {}",
                h.min_len_frac
            )));
        }
        if !(self.max_skew_deg >= 0.0 && self.max_skew_deg < 90.0) {
            return Err(Error::config(format!(
                "max_skew_deg must lie in [0, 90), got {}",
                self.max_skew_deg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DeskewOutcome {
    pub image: GrayImage,
    /// Rotation applied to the content, counterclockwise positive.
    pub angle_deg: f64,
    /// The line the correction was derived from, in input coordinates.
    pub line: Option<LineSegment>,
    pub mode_used: Option<DeskewMode>,
    pub segments_found: usize,
}

/// Levels the image using its strongest near-horizontal line.
///
/// Lines steeper than `max_skew_deg` are ignored. With no qualifying line the
/// input comes back untouched with angle 0.
pub fn deskew(img: &GrayImage, params: &DeskewParams) -> Result<DeskewOutcome> {
    params.validate()?;
    let edges = canny(img, params.canny.low, params.canny.high, params.canny.sigma)?;
    let segments = ppht(&edges, &params.hough.for_width(img.width()));
    let candidates: Vec<LineSegment> = segments
        .iter()
        .filter(|s| s.angle_deg().abs() <= params.max_skew_deg)
        .map(LineSegment::left_to_right)
        .collect();

    let untouched = || DeskewOutcome {
        image: img.clone(),
        angle_deg: 0.0,
        line: None,
        mode_used: None,
        segments_found: segments.len(),
    };
    let Some(&dominant) = candidates.first() else {
        return Ok(untouched());
    };

    if params.mode == DeskewMode::TwoLine {
        if let Some(out) = two_line(img, &candidates, segments.len())? {
            return Ok(out);
        }
    }

    let angle = -dominant.angle_deg();
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    let h = Homography::rotation_about(cx, cy, angle);
    Ok(DeskewOutcome {
        image: warp_perspective(img, &h, img.width(), img.height())?,
        angle_deg: angle,
        line: Some(dominant),
        mode_used: Some(DeskewMode::Rotation),
        segments_found: segments.len(),
    })
}

/// Rectifies the band between the top-most and bottom-most qualifying lines.
fn two_line(img: &GrayImage, candidates: &[LineSegment], found: usize) -> Result<Option<DeskewOutcome>> {
    let top = candidates
        .iter()
        .min_by(|a, b| a.mid_y().total_cmp(&b.mid_y()))
        .copied();
    let bottom = candidates
        .iter()
        .max_by(|a, b| a.mid_y().total_cmp(&b.mid_y()))
        .copied();
    let (Some(top), Some(bottom)) = (top, bottom) else {
        return Ok(None);
    };
    if bottom.mid_y() - top.mid_y() < 8.0 {
        return Ok(None);
    }
    let xl = top.x1.min(bottom.x1);
    let xr = top.x2.max(bottom.x2);
    if xr - xl < 8.0 {
        return Ok(None);
    }
    let src = [
        (xl, top.y_at(xl)),
        (xr, top.y_at(xr)),
        (xr, bottom.y_at(xr)),
        (xl, bottom.y_at(xl)),
    ];
    let (yt, yb) = (top.mid_y(), bottom.mid_y());
    let dst = [(xl, yt), (xr, yt), (xr, yb), (xl, yb)];
    let Ok(h) = estimate_homography(&src, &dst) else {
        return Ok(None);
    };
    Ok(Some(DeskewOutcome {
        image: warp_perspective(img, &h, img.width(), img.height())?,
        angle_deg: -top.angle_deg(),
        line: Some(top),
        mode_used: Some(DeskewMode::TwoLine),
        segments_found: found,
    }))
}
