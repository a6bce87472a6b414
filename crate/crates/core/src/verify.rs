//! Reading a located text line and checking it: the single-pass reading of
//! the whole line, and the split-pass reading that recognizes the prefix and
//! the check digit from separate crops.

use serde::{Deserialize, Serialize};

use crate::ilu::{cross_check, parse_ilu, verify_code_with, CheckPolicy, VerificationMethod, VerifiedReading};
use crate::imaging::{crop, GrayImage, Rect};
use crate::locate::TextRoi;
use crate::ocr::{recognize, CharsetFilter, OcrEngine, OcrError, OcrRequest, RoiPart, SegmentationMode};

/// Cut position for a line of the generator's layout: the middle of the gap
/// between the last registration digit and the opening bracket, measured on
/// a padded ROI.
pub const DEFAULT_SPLIT_FRAC: f64 = 0.76;

/// Splits `img` with a vertical cut at `round(frac * width)`, clamped so
/// both parts keep at least one column.
///
/// # Panics
///
/// If the image is narrower than 2 pixels.
pub fn split_roi(img: &GrayImage, frac: f64) -> (GrayImage, GrayImage) {
    let (w, h) = (img.width(), img.height());
    assert!(w >= 2, "cannot split an image {w} pixel wide");
    let cut = ((frac * w as f64).round() as usize).clamp(1, w - 1);
    let left = crop(img, Rect::new(0, 0, cut, h)).expect("cut inside image");
    let right = crop(img, Rect::new(cut, 0, w - cut, h)).expect("cut inside image");
    (left, right)
}

/// Texts produced by the recognition passes, after charset filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassTexts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub whole: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub split_frac: f64,
    pub policy: CheckPolicy,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            split_frac: DEFAULT_SPLIT_FRAC,
            policy: CheckPolicy::default(),
        }
    }
}

/// Reads the whole line once and checks the code against its own trailing
/// digit.
pub fn single_pass(
    roi: &TextRoi,
    engine: &dyn OcrEngine,
    policy: CheckPolicy,
    source: Option<&str>,
) -> Result<(VerifiedReading, PassTexts), OcrError> {
    let req = OcrRequest::new(&roi.image, SegmentationMode::SingleBlock10, CharsetFilter::Unrestricted)
        .part(RoiPart::Whole)
        .source(source);
    let text = recognize(engine, &req)?.text;
    let reading = match parse_ilu(&text) {
        Ok(code) => verify_code_with(&code, policy),
        Err(_) => VerifiedReading::parse_failure(VerificationMethod::SinglePass),
    };
    let texts = PassTexts {
        whole: Some(text),
        ..PassTexts::default()
    };
    Ok((reading, texts))
}

/// Splits the line, recognizes the prefix (single-block mode, upper-case
/// alphanumerics) and the check digit (automatic page mode, digits only)
/// independently, and accepts only when the digit computed from the prefix
/// equals the digit read from the right part.
pub fn cross_verify(
    roi: &TextRoi,
    engine: &dyn OcrEngine,
    opts: &VerifyOptions,
    source: Option<&str>,
) -> Result<(VerifiedReading, PassTexts), OcrError> {
    if roi.image.width() < 2 {
        return Ok((VerifiedReading::parse_failure(VerificationMethod::SplitPass), PassTexts::default()));
    }
    let (left_img, right_img) = split_roi(&roi.image, opts.split_frac);
    let left_req = OcrRequest::new(&left_img, SegmentationMode::SingleBlock10, CharsetFilter::AlphaNumericUpper)
        .part(RoiPart::Left)
        .source(source);
    let right_req = OcrRequest::new(&right_img, SegmentationMode::AutoPage3, CharsetFilter::DigitsOnly)
        .part(RoiPart::Right)
        .source(source);
    let left = recognize(engine, &left_req)?.text;
    let right = recognize(engine, &right_req)?.text;
    let reading = cross_check(&left, &right, opts.policy);
    let texts = PassTexts {
        whole: None,
        left: Some(left),
        right: Some(right),
    };
    Ok((reading, texts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilu::RejectionReason;
    use crate::ocr::{ReplayEngine, ReplayEntry, ReplayScript};

    fn roi_of(img: GrayImage) -> TextRoi {
        TextRoi {
            bbox: img.bounds(),
            image: img,
        }
    }

    fn replay(left: &str, right: &str, whole: &str) -> ReplayEngine {
        let mut s = ReplayScript::new();
        s.insert(
            "plate.pgm",
            ReplayEntry {
                whole_roi_text: whole.into(),
                left_text: left.into(),
                right_text: right.into(),
            },
        );
        ReplayEngine::new(s)
    }

    #[test]
    fn split_widths() {
        let img = GrayImage::filled(100, 7, 9);
        let (l, r) = split_roi(&img, 0.85);
        assert_eq!((l.width(), r.width()), (85, 15));
        assert_eq!((l.height(), r.height()), (7, 7));
        let (l, r) = split_roi(&GrayImage::filled(3, 1, 0), 0.5);
        assert_eq!((l.width(), r.width()), (2, 1));
        let (l, r) = split_roi(&GrayImage::filled(10, 1, 0), 0.999);
        assert_eq!((l.width(), r.width()), (9, 1));
        let (l, r) = split_roi(&GrayImage::filled(10, 1, 0), 0.0);
        assert_eq!((l.width(), r.width()), (1, 9));
    }

    #[test]
    fn split_keeps_every_column() {
        let img = GrayImage::from_fn(37, 3, |x, y| (x * 3 + y) as u8);
        let (l, r) = split_roi(&img, 0.76);
        for y in 0..3 {
            for x in 0..37 {
                let v = if x < l.width() { l.get(x, y) } else { r.get(x - l.width(), y) };
                assert_eq!(v, img.get(x, y));
            }
        }
    }

    #[test]
    fn scripted_wrong_prefix_is_rejected() {
        let roi = roi_of(GrayImage::filled(100, 30, 200));
        let engine = replay("ABCD123457", "0", "");
        let (r, texts) = cross_verify(&roi, &engine, &VerifyOptions::default(), Some("plate.pgm")).unwrap();
        assert!(!r.verified);
        assert_eq!(r.computed_check, Some(5));
        assert_eq!(r.rejection_reason, Some(RejectionReason::CrossCheckDisagreement));
        assert_eq!(texts.left.as_deref(), Some("ABCD123457"));
    }

    #[test]
    fn unparseable_left_text_is_a_parse_failure() {
        let roi = roi_of(GrayImage::filled(100, 30, 200));
        // The charset filter drops '?', leaving 9 characters.
        let engine = replay("AB?D123456", "0", "");
        let (r, _) = cross_verify(&roi, &engine, &VerifyOptions::default(), Some("plate.pgm")).unwrap();
        assert!(!r.verified);
        assert_eq!(r.rejection_reason, Some(RejectionReason::ParseFailure));
    }

    #[test]
    fn single_pass_trusts_its_own_digit() {
        let roi = roi_of(GrayImage::filled(100, 30, 200));
        let engine = replay("", "", "ABCD 123456 [0]");
        let (r, texts) = single_pass(&roi, &engine, CheckPolicy::default(), Some("plate.pgm")).unwrap();
        assert!(r.verified);
        assert_eq!(r.code.unwrap().canonical(), "ABCD1234560");
        assert_eq!(texts.whole.as_deref(), Some("ABCD 123456 [0]"));
    }
}
