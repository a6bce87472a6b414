use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{convolve_3x3, GrayImage};

/// All-ones rectangular structuring element anchored at its centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct StructuringElement {
    width: usize,
    height: usize,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::config(format!(
                "structuring element must have odd, nonzero sides, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

impl TryFrom<[usize; 2]> for StructuringElement {
    type Error = Error;

    fn try_from([w, h]: [usize; 2]) -> Result<Self> {
        Self::new(w, h)
    }
}

impl From<StructuringElement> for [usize; 2] {
    fn from(se: StructuringElement) -> Self {
        [se.width, se.height]
    }
}

/// Running min or max over a window; windows are clipped at the borders,
/// which is the same as replicating edge pixels for these operators.
fn rank_filter(img: &GrayImage, se: StructuringElement, take_max: bool) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let (rx, ry) = (se.width / 2, se.height / 2);
    let pick = |a: u8, b: u8| if take_max { a.max(b) } else { a.min(b) };

    let mut horiz = vec![0u8; w * h];
    for (y, row) in img.rows().enumerate() {
        for x in 0..w {
            let lo = x.saturating_sub(rx);
            let hi = (x + rx).min(w - 1);
            horiz[y * w + x] = row[lo..=hi].iter().copied().reduce(pick).unwrap();
        }
    }
    GrayImage::from_fn(w, h, |x, y| {
        let lo = y.saturating_sub(ry);
        let hi = (y + ry).min(h - 1);
        (lo..=hi).map(|yy| horiz[yy * w + x]).reduce(pick).unwrap()
    })
}

pub fn erode(img: &GrayImage, se: StructuringElement) -> GrayImage {
    rank_filter(img, se, false)
}

pub fn dilate(img: &GrayImage, se: StructuringElement) -> GrayImage {
    rank_filter(img, se, true)
}

pub fn morph_close(img: &GrayImage, se: StructuringElement) -> GrayImage {
    erode(&dilate(img, se), se)
}

pub fn morph_open(img: &GrayImage, se: StructuringElement) -> GrayImage {
    dilate(&erode(img, se), se)
}

/// Closing minus the original: bright where the image has dark detail
/// smaller than the structuring element.
pub fn blackhat(img: &GrayImage, se: StructuringElement) -> GrayImage {
    let closed = morph_close(img, se);
    let px: Vec<u8> = closed
        .pixels()
        .iter()
        .zip(img.pixels())
        .map(|(&c, &o)| c.saturating_sub(o))
        .collect();
    GrayImage::new(img.width(), img.height(), px).expect("same dimensions")
}

pub const SCHARR_X: [[f64; 3]; 3] = [[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]];

/// Absolute horizontal Scharr response, min-max stretched to `0..=255`.
pub fn scharr_magnitude(img: &GrayImage) -> GrayImage {
    let mut r = convolve_3x3(img, &SCHARR_X);
    for v in &mut r.data {
        *v = v.abs();
    }
    let (lo, hi) = r
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 0.0 {
        return GrayImage::filled(img.width(), img.height(), 0);
    }
    let scale = 255.0 / (hi - lo);
    for v in &mut r.data {
        *v = (*v - lo) * scale;
    }
    r.to_image()
}
