//! Deterministic template-matching recognizer for the built-in font.
//!
//! The strip is binarized with Otsu's threshold (dark ink), rows that are
//! almost entirely ink (plate borders) are discarded, and the densest band
//! of rows is taken as the text line. Glyph cells are the runs of columns
//! between projection-profile valleys. Each cell is resampled onto the ink
//! columns of every candidate glyph and scored by Hamming distance, with a
//! penalty when the cell's width in font units disagrees with the glyph's.

use super::font::{glyphs, Glyph, ADVANCE, GLYPH_H, GLYPH_W};
use super::{CharsetFilter, OcrEngine, OcrError, OcrRequest, OcrResult, SegmentationMode};
use crate::imaging::{round_to_u8, GrayImage};
use crate::locate::{morph_close, otsu_threshold, StructuringElement};

/// Cells further than this from every glyph come back as `?`.
pub const DEFAULT_MAX_DISTANCE: u32 = 10;
/// Strips with a smaller intensity range are treated as blank.
const MIN_CONTRAST: u8 = 24;
const CELL_BITS: f64 = (GLYPH_W * GLYPH_H) as f64;

#[derive(Debug, Clone, Copy)]
pub struct StubEngine {
    pub max_distance: u32,
}

impl Default for StubEngine {
    fn default() -> Self {
        Self {
            max_distance: DEFAULT_MAX_DISTANCE,
        }
    }
}

impl OcrEngine for StubEngine {
    fn name(&self) -> &'static str {
        "stub"
    }

    fn run(&self, req: &OcrRequest<'_>) -> Result<OcrResult, OcrError> {
        Ok(stub_recognize_with(req.image, req.mode, req.filter, self.max_distance))
    }
}

pub fn stub_recognize(img: &GrayImage, mode: SegmentationMode, filter: CharsetFilter) -> OcrResult {
    stub_recognize_with(img, mode, filter, DEFAULT_MAX_DISTANCE)
}

/// Both segmentation modes are handled as a single text line.
pub fn stub_recognize_with(
    img: &GrayImage,
    _mode: SegmentationMode,
    filter: CharsetFilter,
    max_distance: u32,
) -> OcrResult {
    let cells = read_cells(img, max_distance);
    let raw: String = cells.iter().map(|c| c.0).collect();
    let kept: Vec<&(char, u32)> = cells.iter().filter(|(c, _)| filter.admits(*c)).collect();
    let confidence = (!kept.is_empty()).then(|| {
        let mean = kept.iter().map(|(_, d)| f64::from(*d)).sum::<f64>() / kept.len() as f64;
        (100.0 * (1.0 - mean / CELL_BITS)).clamp(0.0, 100.0)
    });
    OcrResult {
        text: filter.apply(&raw),
        confidence,
    }
}

struct InkMap {
    w: usize,
    h: usize,
    bits: Vec<bool>,
}

impl InkMap {
    #[inline]
    fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.w + x]
    }
}

/// `(character, distance)` per cell, left to right.
fn read_cells(img: &GrayImage, max_distance: u32) -> Vec<(char, u32)> {
    let (lo, hi) = img
        .pixels()
        .iter()
        .fold((255u8, 0u8), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if hi.saturating_sub(lo) < MIN_CONTRAST {
        return Vec::new();
    }
    let flat = flatten_background(img);
    let (t, _) = otsu_threshold(&flat);
    let (w, h) = (img.width(), img.height());
    let mut ink = InkMap {
        w,
        h,
        bits: flat.pixels().iter().map(|&p| p <= t).collect(),
    };

    // Drop near-solid rows (borders, band edges).
    for y in 0..h {
        let n = (0..w).filter(|&x| ink.get(x, y)).count();
        if n as f64 > 0.85 * w as f64 {
            ink.bits[y * w..(y + 1) * w].fill(false);
        }
    }

    let Some((top, bottom)) = text_rows(&ink) else {
        return Vec::new();
    };
    let line_h = bottom - top + 1;
    let floor = (line_h as f64 * 0.06).floor() as usize;
    let col_ink: Vec<usize> = (0..w)
        .map(|x| (top..=bottom).filter(|&y| ink.get(x, y)).count())
        .collect();

    let mut runs = Vec::new();
    let mut start = None;
    for x in 0..=w {
        let inked = x < w && col_ink[x] > floor;
        match (inked, start) {
            (true, None) => start = Some(x),
            (false, Some(s)) => {
                runs.push((s, x - 1));
                start = None;
            }
            _ => {}
        }
    }

    // Diagonal strokes touch only at pixel corners and can leave a valley
    // inside a glyph; rejoin runs split by less than half a font unit while
    // the union still fits one glyph.
    let unit = line_h as f64 / GLYPH_H as f64;
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for (a, b) in runs {
        match merged.last_mut() {
            Some(last)
                if ((a - last.1 - 1) as f64) < 0.5 * unit
                    && ((b - last.0 + 1) as f64) <= (GLYPH_W as f64 + 0.75) * unit =>
            {
                last.1 = b;
            }
            _ => merged.push((a, b)),
        }
    }

    let mut out = Vec::new();
    for (x0, x1) in merged {
        for (a, b) in split_wide(&col_ink, x0, x1, line_h) {
            if let Some(cell) = cell_box(&ink, a, b, top, bottom) {
                if cell.3 - cell.2 + 1 < line_h / 2 {
                    continue;
                }
                out.push(classify(&ink, cell, max_distance));
            }
        }
    }
    out
}

/// Divides out slowly varying illumination. The background is a grey
/// closing with a square wider than any stroke (about a quarter of the
/// strip height), so uneven lighting such as a flash spot maps to uniform
/// paper while ink keeps its contrast relative to its surroundings.
fn flatten_background(img: &GrayImage) -> GrayImage {
    let side = (img.height() / 4) | 1;
    let se = StructuringElement::new(side.max(5), side.max(5)).expect("odd side");
    let bg = morph_close(img, se);
    let px = img
        .pixels()
        .iter()
        .zip(bg.pixels())
        .map(|(&p, &b)| {
            if b == 0 {
                255
            } else {
                round_to_u8(255.0 * f64::from(p) / f64::from(b))
            }
        })
        .collect();
    GrayImage::new(img.width(), img.height(), px).expect("same size")
}

/// Row span of the text line: the run of inked rows holding the most ink.
fn text_rows(ink: &InkMap) -> Option<(usize, usize)> {
    let counts: Vec<usize> = (0..ink.h)
        .map(|y| (0..ink.w).filter(|&x| ink.get(x, y)).count())
        .collect();
    let mut best: Option<(usize, usize, usize)> = None;
    let mut y = 0;
    while y < ink.h {
        if counts[y] == 0 {
            y += 1;
            continue;
        }
        let s = y;
        let mut total = 0;
        while y < ink.h && counts[y] > 0 {
            total += counts[y];
            y += 1;
        }
        if best.is_none_or(|b| total > b.2) {
            best = Some((s, y - 1, total));
        }
    }
    best.map(|b| (b.0, b.1))
}

/// Splits a column run that is too wide for one glyph at its weakest columns.
fn split_wide(col_ink: &[usize], x0: usize, x1: usize, line_h: usize) -> Vec<(usize, usize)> {
    let unit = line_h as f64 / GLYPH_H as f64;
    let width = (x1 - x0 + 1) as f64;
    let n = ((width + unit) / (ADVANCE as f64 * unit)).round().max(1.0) as usize;
    if width <= (GLYPH_W as f64 + 1.5) * unit || n < 2 {
        return vec![(x0, x1)];
    }
    let pitch = (width + unit) / n as f64;
    let mut cuts = Vec::new();
    for i in 1..n {
        let centre = x0 as f64 + i as f64 * pitch - unit / 2.0;
        let lo = (centre - unit).max(x0 as f64 + 1.0) as usize;
        let hi = ((centre + unit) as usize).min(x1 - 1);
        let cut = (lo..=hi.max(lo)).min_by_key(|&x| col_ink[x]).unwrap_or(lo);
        cuts.push(cut);
    }
    let mut pieces = Vec::new();
    let mut s = x0;
    for c in cuts {
        if c > s {
            pieces.push((s, c - 1));
            s = c + 1;
        }
    }
    if s <= x1 {
        pieces.push((s, x1));
    }
    pieces
}

/// Tight ink box `(x0, x1, y0, y1)` of the columns `a..=b`.
fn cell_box(ink: &InkMap, a: usize, b: usize, top: usize, bottom: usize) -> Option<(usize, usize, usize, usize)> {
    let mut bx = (usize::MAX, 0, usize::MAX, 0);
    let mut n = 0;
    for y in top..=bottom {
        for x in a..=b {
            if ink.get(x, y) {
                n += 1;
                bx.0 = bx.0.min(x);
                bx.1 = bx.1.max(x);
                bx.2 = bx.2.min(y);
                bx.3 = bx.3.max(y);
            }
        }
    }
    (n >= 6).then_some(bx)
}

/// Fraction of inked pixels whose centres fall in the given real interval box.
fn ink_fraction(ink: &InkMap, fx0: f64, fx1: f64, fy0: f64, fy1: f64) -> f64 {
    let xs = ((fx0 - 0.5).ceil().max(0.0) as usize)..=((fx1 - 0.5).floor().max(0.0) as usize);
    let ys = ((fy0 - 0.5).ceil().max(0.0) as usize)..=((fy1 - 0.5).floor().max(0.0) as usize);
    let (mut hit, mut all) = (0usize, 0usize);
    for y in ys.clone() {
        for x in xs.clone() {
            if x < ink.w && y < ink.h && (x as f64 + 0.5) >= fx0 && (y as f64 + 0.5) >= fy0 {
                all += 1;
                hit += usize::from(ink.get(x, y));
            }
        }
    }
    if all == 0 {
        // Region narrower than a pixel: take the nearest one.
        let x = (((fx0 + fx1) / 2.0) as usize).min(ink.w - 1);
        let y = (((fy0 + fy1) / 2.0) as usize).min(ink.h - 1);
        return if ink.get(x, y) { 1.0 } else { 0.0 };
    }
    hit as f64 / all as f64
}

fn distance_to(ink: &InkMap, cell: (usize, usize, usize, usize), g: &Glyph, units: f64) -> u32 {
    let (c0, c1) = g.ink_columns();
    let k = c1 - c0 + 1;
    let (x0, x1, y0, y1) = cell;
    let (bw, bh) = ((x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64);
    let mut d = 0;
    for r in 0..GLYPH_H {
        let fy0 = y0 as f64 + r as f64 * bh / GLYPH_H as f64;
        let fy1 = y0 as f64 + (r + 1) as f64 * bh / GLYPH_H as f64;
        for c in 0..k {
            let fx0 = x0 as f64 + c as f64 * bw / k as f64;
            let fx1 = x0 as f64 + (c + 1) as f64 * bw / k as f64;
            let observed = ink_fraction(ink, fx0, fx1, fy0, fy1) >= 0.5;
            d += u32::from(observed != g.bit(c0 + c, r));
        }
    }
    let width_gap = (units.round().clamp(1.0, GLYPH_W as f64) as i64 - k as i64).unsigned_abs() as u32;
    d + GLYPH_H as u32 * width_gap
}

fn classify(ink: &InkMap, cell: (usize, usize, usize, usize), max_distance: u32) -> (char, u32) {
    let (x0, x1, y0, y1) = cell;
    let unit = (y1 - y0 + 1) as f64 / GLYPH_H as f64;
    let units = (x1 - x0 + 1) as f64 / unit;
    let mut best: Option<(char, u32)> = None;
    let mut tied = false;
    for g in glyphs() {
        let d = distance_to(ink, cell, g, units);
        match best {
            Some((_, bd)) if d > bd => {}
            Some((_, bd)) if d == bd => tied = true,
            _ => {
                best = Some((g.ch, d));
                tied = false;
            }
        }
    }
    match best {
        Some((c, d)) if !tied && d <= max_distance => (c, d),
        Some((_, d)) => ('?', d),
        None => ('?', CELL_BITS as u32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocr::font::render_strip;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn read(img: &GrayImage, filter: CharsetFilter) -> String {
        stub_recognize(img, SegmentationMode::SingleBlock10, filter).text
    }

    #[test]
    fn reads_rendered_strips() {
        let img = render_strip("ABCD123456", 4);
        let r = stub_recognize(&img, SegmentationMode::SingleBlock10, CharsetFilter::AlphaNumericUpper);
        assert_eq!(r.text, "ABCD123456");
        assert_eq!(r.confidence, Some(100.0));
        assert_eq!(read(&render_strip("KLMN987654", 4), CharsetFilter::Unrestricted), "KLMN987654");
        assert_eq!(read(&render_strip("[7]", 4), CharsetFilter::DigitsOnly), "7");
        assert_eq!(read(&render_strip("[7]", 4), CharsetFilter::Unrestricted), "[7]");
    }

    #[test]
    fn every_glyph_round_trips_at_several_scales() {
        let all: String = glyphs().iter().map(|g| g.ch).collect();
        for scale in [2, 3, 4, 6] {
            assert_eq!(read(&render_strip(&all, scale), CharsetFilter::Unrestricted), all, "scale {scale}");
        }
    }

    #[test]
    fn blank_strip_reads_empty() {
        let r = stub_recognize(&GrayImage::filled(120, 40, 255), SegmentationMode::AutoPage3, CharsetFilter::Unrestricted);
        assert_eq!(r.text, "");
        assert_eq!(r.confidence, None);
    }

    #[test]
    fn corrupted_glyph_only_affects_its_position() {
        let text = "ABCD123456";
        let img = render_strip(text, 4);
        let scale = 4;
        // Invert 60% of the pixels in the third glyph's 5x7 box.
        let x0 = (ADVANCE + 2 * ADVANCE) * scale;
        let y0 = ADVANCE * scale;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut px = img.pixels().to_vec();
        for y in y0..y0 + GLYPH_H * scale {
            for x in x0..x0 + GLYPH_W * scale {
                if rng.gen_bool(0.6) {
                    let p = &mut px[y * img.width() + x];
                    *p = 250 - *p;
                }
            }
        }
        let bad = GrayImage::new(img.width(), img.height(), px).unwrap();
        let out = read(&bad, CharsetFilter::Unrestricted);
        let chars: Vec<char> = out.chars().collect();
        assert!(out.starts_with("AB") && out.ends_with("D123456"), "{out}");
        match chars.len() {
            9 => {}
            10 => assert_ne!(chars[2], 'C', "{out}"),
            _ => panic!("unexpected reading {out}"),
        }
    }

    #[test]
    fn determinism() {
        let img = render_strip("ZX9 [3]", 3);
        let a = stub_recognize(&img, SegmentationMode::SingleBlock10, CharsetFilter::Unrestricted);
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let img = img.clone();
                std::thread::spawn(move || stub_recognize(&img, SegmentationMode::SingleBlock10, CharsetFilter::Unrestricted))
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), a);
        }
    }
}
