//! Text-line localization: blur, blackhat, horizontal Scharr gradient,
//! closing, Otsu binarization, connected components, ROI selection and
//! height normalization.

mod components;
mod morphology;
mod threshold;

use serde::{Deserialize, Serialize};

pub use components::{
    connected_components, extend_along_rows, normalize_roi, select_text_roi, Component, RoiCriteria, RoiSelection, TextRoi,
};
pub use morphology::{blackhat, dilate, erode, morph_close, morph_open, scharr_magnitude, StructuringElement, SCHARR_X};
pub use threshold::otsu_threshold;

use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocateParams {
    pub blur_sigma: f64,
    pub blackhat_kernel: StructuringElement,
    pub close_kernel: StructuringElement,
    pub roi: RoiCriteria,
    /// Padding added around the selected component, pixels.
    pub margin: usize,
    pub min_char_height: usize,
    /// The chosen component is widened over adjacent columns whose closed
    /// response, within its rows, reaches this fraction of the Otsu level.
    /// Recovers characters washed out by local glare. 0 disables.
    pub extend_ratio: f64,
}

impl Default for LocateParams {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            blackhat_kernel: StructuringElement::new(13, 5).expect("odd"),
            close_kernel: StructuringElement::new(21, 5).expect("odd"),
            roi: RoiCriteria::default(),
            margin: 4,
            min_char_height: 32,
            extend_ratio: 0.5,
        }
    }
}

impl LocateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::config(format!("blur_sigma must be positive, got {}", self.blur_sigma)));
        }
        if self.min_char_height == 0 {
            return Err(Error::config("min_char_height must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.extend_ratio) {
            return Err(Error::config(format!("extend_ratio must lie in [0, 1], got {}", self.extend_ratio)));
        }
        self.roi.validate()
    }
}

/// Intermediate rasters of one localization run.
#[derive(Debug, Clone)]
pub struct LocateStages {
    pub blur: GrayImage,
    pub blackhat: GrayImage,
    pub grad: GrayImage,
    pub closed: GrayImage,
    pub binary: GrayImage,
}

impl LocateStages {
    /// `(suffix, raster)` pairs in pipeline order.
    pub fn named(&self) -> [(&'static str, &GrayImage); 5] {
        [
            ("blur", &self.blur),
            ("blackhat", &self.blackhat),
            ("grad", &self.grad),
            ("closed", &self.closed),
            ("binary", &self.binary),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Located {
    pub roi: Option<TextRoi>,
    pub selection: Option<RoiSelection>,
    pub otsu_level: u8,
    pub components: usize,
    pub stages: LocateStages,
}

pub fn locate_text(img: &GrayImage, params: &LocateParams) -> Result<Located> {
    params.validate()?;
    let blur = gaussian_blur(img, params.blur_sigma)?;
    let bh = blackhat(&blur, params.blackhat_kernel);
    let grad = scharr_magnitude(&bh);
    let closed = morph_close(&grad, params.close_kernel);
    let (otsu_level, mask) = otsu_threshold(&closed);
    let comps = connected_components(&mask);
    let selection = select_text_roi(&comps, img.width(), img.height(), &params.roi, params.margin).map(|s| {
        if params.extend_ratio <= 0.0 {
            return s;
        }
        let level = (params.extend_ratio * f64::from(otsu_level)).ceil().max(1.0) as u8;
        let component = extend_along_rows(&closed, s.component, level);
        RoiSelection {
            component,
            bbox: component.padded(params.margin, img.width(), img.height()),
        }
    });
    let roi = selection
        .map(|s| normalize_roi(img, s.bbox, params.min_char_height))
        .transpose()?;
    Ok(Located {
        roi,
        selection,
        otsu_level,
        components: comps.len(),
        stages: LocateStages {
            blur,
            blackhat: bh,
            grad,
            closed,
            binary: mask.to_image(),
        },
    })
}
