use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{crop, resize_bilinear, GrayImage, Mask, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub bbox: Rect,
    pub area: usize,
    /// 1-based label in raster discovery order.
    pub label: u32,
}

/// 8-connected labelling of the set pixels, largest component first; equal
/// areas are ordered top-to-bottom, then left-to-right.
pub fn connected_components(mask: &Mask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || !mask.bits()[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && mask.bits()[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Component {
            bbox: Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
            area,
            label: out.len() as u32 + 1,
        });
    }
    out.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then(a.bbox.y.cmp(&b.bbox.y))
            .then(a.bbox.x.cmp(&b.bbox.x))
    });
    out
}

/// Acceptance window for a text-line bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiCriteria {
    /// Bounds on width / height.
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Minimum width as a fraction of the image width.
    pub min_width_frac: f64,
}

impl Default for RoiCriteria {
    fn default() -> Self {
        Self {
            aspect_min: 3.0,
            aspect_max: 12.0,
            min_width_frac: 0.25,
        }
    }
}

impl RoiCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.aspect_min > 0.0 && self.aspect_min < self.aspect_max) {
            return Err(Error::config(format!(
                "ROI aspect bounds need 0 < min < max, got {} .. {}",
                self.aspect_min, self.aspect_max
            )));
        }
        if !(self.min_width_frac > 0.0 && self.min_width_frac <= 1.0) {
            return Err(Error::config(format!(
                "ROI min_width_frac must lie in (0, 1], got {}",
                self.min_width_frac
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, bbox: &Rect, img_w: usize) -> bool {
        let aspect = bbox.w as f64 / bbox.h as f64;
        aspect >= self.aspect_min
            && aspect <= self.aspect_max
            && bbox.w as f64 >= self.min_width_frac * img_w as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSelection {
    /// Bounding box of the chosen component; satisfies the criteria.
    pub component: Rect,
    /// The same box grown by the margin and clipped to the image.
    pub bbox: Rect,
}

/// Picks the first (largest) component whose box passes `crit`.
pub fn select_text_roi(
    components: &[Component],
    img_w: usize,
    img_h: usize,
    crit: &RoiCriteria,
    margin: usize,
) -> Option<RoiSelection> {
    components
        .iter()
        .find(|c| crit.accepts(&c.bbox, img_w))
        .map(|c| RoiSelection {
            component: c.bbox,
            bbox: c.bbox.padded(margin, img_w, img_h),
        })
}

/// Grows `bbox` left and right while some pixel of the column, within the
/// box's rows, is at least `level`.
pub fn extend_along_rows(img: &GrayImage, bbox: Rect, level: u8) -> Rect {
    let rows = bbox.y..(bbox.y + bbox.h).min(img.height());
    let active = |x: usize| rows.clone().any(|y| img.get(x, y) >= level);
    let mut x0 = bbox.x;
    while x0 > 0 && active(x0 - 1) {
        x0 -= 1;
    }
    let mut x1 = bbox.x + bbox.w;
    while x1 < img.width() && active(x1) {
        x1 += 1;
    }
    Rect::new(x0, bbox.y, x1 - x0, bbox.h)
}

/// A located text line, scaled so its height is at least the OCR minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct TextRoi {
    pub bbox: Rect,
    pub image: GrayImage,
}

/// Crops `bbox` and upscales it uniformly when it is shorter than
/// `min_char_height`.
pub fn normalize_roi(img: &GrayImage, bbox: Rect, min_char_height: usize) -> Result<TextRoi> {
    let cropped = crop(img, bbox)?;
    if bbox.h >= min_char_height {
        return Ok(TextRoi {
            bbox,
            image: cropped,
        });
    }
    let scale = min_char_height as f64 / bbox.h as f64;
    let new_w = ((bbox.w as f64 * scale).round() as usize).max(1);
    Ok(TextRoi {
        bbox,
        image: resize_bilinear(&cropped, new_w, min_char_height)?,
    })
}
