//! Synthetic plate scenes with known ground truth.
//!
//! A plate is a light band carrying a code in the built-in font, scaled ×4,
//! laid out as `KKKK DDDDDD [C]`. It sits in the lower-right part of an
//! 800×600 frame, inside the default crop window. Difficulty levels add
//! rotation, global brightness changes, Gaussian noise and a bright flash
//! over the check digit.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ilu::{IluCode, PREFIX_LEN};
use crate::imaging::{classify_brightness, crop, rms_brightness, round_to_u8, Brightness, BrightnessThresholds, GrayImage, Rect};
use crate::ocr::font::{glyph, Glyph, ADVANCE, GLYPH_H, GLYPH_W};
use crate::pnm::write_pgm;

pub const FRAME_W: usize = 800;
pub const FRAME_H: usize = 600;
/// Crop window the plates are placed in; also the pipeline's default crop.
pub const DEFAULT_CROP: Rect = Rect {
    x: 300,
    y: 250,
    w: 500,
    h: 350,
};
pub const GLYPH_SCALE: usize = 4;
pub const MAX_DIFFICULTY: u8 = 3;

const PAPER_LEVEL: f64 = 225.0;
const INK_LEVEL: f64 = 30.0;
const BACKGROUND_LEVEL: f64 = 55.0;
const RIB_LEVEL: f64 = 35.0;
/// Band padding around the text ink, pixels.
const BAND_PAD_X: f64 = 24.0;
const BAND_PAD_Y: f64 = 18.0;
/// Extra font units after the owner key and after the registration.
const OWNER_GAP_UNITS: usize = 2;
const CHECK_GAP_UNITS: usize = 3;

/// One glyph placed on the text line, in text coordinates (pixels, origin at
/// the top-left of the ink block).
#[derive(Debug, Clone, Copy)]
pub struct PlacedGlyph {
    pub glyph: &'static Glyph,
    pub x: usize,
}

impl PlacedGlyph {
    /// Horizontal extent of the inked columns, `[start, end)`.
    pub fn ink_span(&self) -> (usize, usize) {
        let (a, b) = self.glyph.ink_columns();
        (self.x + a * GLYPH_SCALE, self.x + (b + 1) * GLYPH_SCALE)
    }
}

#[derive(Debug, Clone)]
pub struct TextLayout {
    pub glyphs: Vec<PlacedGlyph>,
    /// Width and height of the ink block.
    pub width: usize,
    pub height: usize,
}

impl TextLayout {
    pub fn for_code(code: &IluCode) -> Self {
        let text = code.canonical();
        let mut glyphs = Vec::with_capacity(13);
        let mut unit = 0;
        let mut place = |c: char, unit: &mut usize| {
            glyphs.push(PlacedGlyph {
                glyph: glyph(c).expect("code characters are in the font"),
                x: *unit * GLYPH_SCALE,
            });
            *unit += ADVANCE;
        };
        for (i, c) in text.chars().enumerate() {
            match i {
                4 => unit += OWNER_GAP_UNITS,
                PREFIX_LEN => {
                    unit += CHECK_GAP_UNITS;
                    place('[', &mut unit);
                }
                _ => {}
            }
            place(c, &mut unit);
        }
        place(']', &mut unit);
        let width = glyphs.iter().map(|g| g.ink_span().1).max().unwrap_or(0);
        Self {
            glyphs,
            width,
            height: GLYPH_H * GLYPH_SCALE,
        }
    }

    /// Gap between the last registration digit and the opening bracket,
    /// `[start, end)` in text coordinates.
    pub fn check_gap(&self) -> (usize, usize) {
        (self.glyphs[PREFIX_LEN - 1].ink_span().1, self.glyphs[PREFIX_LEN].ink_span().0)
    }

    /// Centre of the check digit glyph.
    pub fn check_center(&self) -> (f64, f64) {
        let g = &self.glyphs[PREFIX_LEN + 1];
        (
            g.x as f64 + (GLYPH_W * GLYPH_SCALE) as f64 / 2.0,
            self.height as f64 / 2.0,
        )
    }

    fn ink_at(&self, tx: f64, ty: f64) -> bool {
        if tx < 0.0 || ty < 0.0 {
            return false;
        }
        let (x, y) = (tx as usize, ty as usize);
        if y >= self.height {
            return false;
        }
        let row = y / GLYPH_SCALE;
        self.glyphs.iter().any(|g| {
            x >= g.x && x < g.x + GLYPH_W * GLYPH_SCALE && g.glyph.bit((x - g.x) / GLYPH_SCALE, row)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flash {
    /// Multiplicative gain at the centre of the disc.
    pub gain: f64,
    pub radius: f64,
}

/// Everything needed to render one plate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateSpec {
    pub code: IluCode,
    /// Counterclockwise rotation of the plate on screen.
    pub angle_deg: f64,
    /// Centre of the band in frame coordinates.
    pub center: (f64, f64),
    /// RMS brightness the crop window is scaled to.
    pub target_rms: f64,
    pub noise_sigma: f64,
    pub flash: Option<Flash>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Profile {
    max_angle: f64,
    classes: &'static [Brightness],
    max_noise: f64,
    flash_prob: f64,
    flash_gain: (f64, f64),
}

fn profile(difficulty: u8) -> Profile {
    use Brightness::*;
    match difficulty {
        0 => Profile {
            max_angle: 0.0,
            classes: &[Normal],
            max_noise: 0.0,
            flash_prob: 0.0,
            flash_gain: (1.0, 1.0),
        },
        1 => Profile {
            max_angle: 5.0,
            classes: &[Dim, Normal, Bright],
            max_noise: 4.0,
            flash_prob: 0.0,
            flash_gain: (1.0, 1.0),
        },
        2 => Profile {
            max_angle: 10.0,
            classes: &Brightness::ALL,
            max_noise: 8.0,
            flash_prob: 0.3,
            flash_gain: (1.4, 2.2),
        },
        _ => Profile {
            max_angle: 15.0,
            classes: &Brightness::ALL,
            max_noise: 14.0,
            flash_prob: 0.5,
            flash_gain: (2.0, 4.0),
        },
    }
}

/// RMS range drawn from for each class, kept clear of the default class
/// boundaries so that noise cannot move a plate across them.
fn rms_range(class: Brightness) -> (f64, f64) {
    match class {
        Brightness::Dark => (40.0, 47.0),
        Brightness::Dim => (70.0, 100.0),
        Brightness::Normal => (120.0, 160.0),
        Brightness::Bright => (178.0, 192.0),
    }
}

fn random_code(rng: &mut impl Rng) -> IluCode {
    let mut prefix = String::with_capacity(PREFIX_LEN);
    for _ in 0..4 {
        prefix.push(rng.gen_range(b'A'..=b'Z') as char);
    }
    for _ in 0..6 {
        prefix.push(rng.gen_range(b'0'..=b'9') as char);
    }
    IluCode::with_computed_check(&prefix).expect("generated prefix is well-formed")
}

/// Band size for a layout, pixels.
fn band_size(layout: &TextLayout) -> (f64, f64) {
    (layout.width as f64 + 2.0 * BAND_PAD_X, layout.height as f64 + 2.0 * BAND_PAD_Y)
}

/// Draws a plate specification. The same `(seed, index)` always yields the
/// same plate, independent of how many plates are drawn.
pub fn random_spec(seed: u64, index: u64, difficulty: u8) -> PlateSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let p = profile(difficulty);
    let code = random_code(&mut rng);
    let angle_deg = if p.max_angle > 0.0 {
        rng.gen_range(-p.max_angle..=p.max_angle)
    } else {
        0.0
    };

    // Keep the rotated band inside the crop window with a small margin.
    let (bw, bh) = band_size(&TextLayout::for_code(&code));
    let (s, c) = angle_deg.to_radians().sin_cos();
    let half_w = (bw * c.abs() + bh * s.abs()) / 2.0 + 10.0;
    let half_h = (bw * s.abs() + bh * c.abs()) / 2.0 + 10.0;
    let r = DEFAULT_CROP;
    let cx = rng.gen_range(r.x as f64 + half_w..=(r.right() as f64 - half_w).max(r.x as f64 + half_w));
    let cy = rng.gen_range(r.y as f64 + half_h..=(r.bottom() as f64 - half_h).max(r.y as f64 + half_h));

    let class = p.classes[rng.gen_range(0..p.classes.len())];
    let target_rms = if difficulty == 0 {
        140.0
    } else {
        let (lo, hi) = rms_range(class);
        rng.gen_range(lo..=hi)
    };
    let noise_sigma = if p.max_noise > 0.0 {
        rng.gen_range(0.0..=p.max_noise)
    } else {
        0.0
    };
    let flash = (p.flash_prob > 0.0 && rng.gen_bool(p.flash_prob)).then(|| Flash {
        gain: rng.gen_range(p.flash_gain.0..=p.flash_gain.1),
        radius: rng.gen_range(22.0..=32.0),
    });
    PlateSpec {
        code,
        angle_deg,
        center: (cx, cy),
        target_rms,
        noise_sigma,
        flash,
    }
}

/// Noise-free scene intensities before the global brightness scale.
fn render_scene(spec: &PlateSpec, layout: &TextLayout) -> Vec<f64> {
    let (bw, bh) = band_size(layout);
    let (s, c) = spec.angle_deg.to_radians().sin_cos();
    let (cx, cy) = spec.center;
    // Text coordinates of the band centre.
    let (bcx, bcy) = (layout.width as f64 / 2.0, layout.height as f64 / 2.0);
    let to_text = |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        (bcx + c * dx - s * dy, bcy + s * dx + c * dy)
    };
    let in_band = |tx: f64, ty: f64| (tx - bcx).abs() <= bw / 2.0 && (ty - bcy).abs() <= bh / 2.0;
    let background = |x: f64, y: f64| {
        let inside_crop = x >= DEFAULT_CROP.x as f64 && y >= DEFAULT_CROP.y as f64;
        // Vertical ribs on the body outside the crop window.
        if !inside_crop && (x as usize % 80) < 6 {
            RIB_LEVEL
        } else {
            BACKGROUND_LEVEL + 10.0 * (y / FRAME_H as f64 - 0.5)
        }
    };
    let flash_gain = |tx: f64, ty: f64| match spec.flash {
        None => 1.0,
        Some(f) => {
            let (fx, fy) = layout.check_center();
            let d = (tx - fx).hypot(ty - fy);
            let t = ((d - f.radius) / (0.5 * f.radius)).clamp(0.0, 1.0);
            let fall = 1.0 - t * t * (3.0 - 2.0 * t);
            1.0 + (f.gain - 1.0) * fall
        }
    };
    let sample = |x: f64, y: f64| {
        let (tx, ty) = to_text(x, y);
        let v = if in_band(tx, ty) {
            if layout.ink_at(tx, ty) {
                INK_LEVEL
            } else {
                PAPER_LEVEL
            }
        } else {
            background(x, y)
        };
        v * flash_gain(tx, ty)
    };

    const SS: usize = 3;
    let reach = (bw.hypot(bh) / 2.0) + 2.0;
    let mut out = vec![0.0; FRAME_W * FRAME_H];
    for y in 0..FRAME_H {
        for x in 0..FRAME_W {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let near_band = (px - cx).abs() <= reach && (py - cy).abs() <= reach && {
                let (tx, ty) = to_text(px, py);
                (tx - bcx).abs() <= bw / 2.0 + 2.0 && (ty - bcy).abs() <= bh / 2.0 + 2.0
            };
            out[y * FRAME_W + x] = if near_band {
                let mut acc = 0.0;
                for sy in 0..SS {
                    for sx in 0..SS {
                        let ox = (sx as f64 + 0.5) / SS as f64;
                        let oy = (sy as f64 + 0.5) / SS as f64;
                        acc += sample(x as f64 + ox, y as f64 + oy);
                    }
                }
                acc / (SS * SS) as f64
            } else {
                sample(px, py)
            };
        }
    }
    out
}

fn crop_rms(scene: &[f64], k: f64) -> f64 {
    let r = DEFAULT_CROP;
    let mut sum = 0.0;
    for y in r.y..r.bottom() {
        for v in &scene[y * FRAME_W + r.x..y * FRAME_W + r.right()] {
            let p = (k * v).clamp(0.0, 255.0);
            sum += p * p;
        }
    }
    (sum / r.area() as f64).sqrt()
}

/// Gain that brings the clipped crop RMS to `target`; RMS is monotone in
/// the gain, so bisection suffices.
fn solve_gain(scene: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 16.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if crop_rms(scene, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A rendered plate with its ground truth.
#[derive(Debug, Clone)]
pub struct Plate {
    pub spec: PlateSpec,
    pub layout: TextLayout,
    pub image: GrayImage,
    /// Class of the rendered crop window under the default thresholds.
    pub brightness: Brightness,
}

pub fn render_plate(spec: &PlateSpec, noise_seed: u64) -> Plate {
    let layout = TextLayout::for_code(&spec.code);
    let scene = render_scene(spec, &layout);
    let k = solve_gain(&scene, spec.target_rms);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("finite sigma"));
    let px: Vec<u8> = scene
        .iter()
        .map(|&v| {
            let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            round_to_u8(k * v + n)
        })
        .collect();
    let image = GrayImage::new(FRAME_W, FRAME_H, px).expect("frame size");
    let rms = rms_brightness(&crop(&image, DEFAULT_CROP).expect("crop inside frame"));
    let brightness = classify_brightness(rms, BrightnessThresholds::default())
        .expect("default thresholds are ordered")
        .class;
    Plate {
        spec: spec.clone(),
        layout,
        image,
        brightness,
    }
}

/// Draws and renders plate `index` of the sequence for `seed`.
pub fn generate_plate(seed: u64, index: u64, difficulty: u8) -> Plate {
    let spec = random_spec(seed, index, difficulty);
    let noise_seed = seed.rotate_left(17) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    render_plate(&spec, noise_seed)
}

/// One line of the ground-truth manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub filename: String,
    pub code: IluCode,
    pub angle_deg: f64,
    pub brightness_class: Brightness,
}

pub const MANIFEST_NAME: &str = "manifest.csv";

pub fn plate_filename(index: usize, count: usize) -> String {
    let digits = count.saturating_sub(1).to_string().len().max(4);
    format!("plate_{index:0digits$}.pgm")
}

/// Renders `count` plates into `out_dir` as PGM files and writes
/// `manifest.csv` next to them. Returns the manifest rows.
pub fn synth_generate(count: usize, seed: u64, out_dir: &Path, difficulty: u8) -> Result<Vec<ManifestRow>> {
    if count == 0 {
        return Err(Error::config("synthetic plate count must be at least 1"));
    }
    if difficulty > MAX_DIFFICULTY {
        return Err(Error::config(format!(
            "difficulty must lie in 0..={MAX_DIFFICULTY}, got {difficulty}"
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let plate = generate_plate(seed, i as u64, difficulty);
            let filename = plate_filename(i, count);
            write_pgm(out_dir.join(&filename), &plate.image)?;
            Ok(ManifestRow {
                filename,
                code: plate.spec.code.clone(),
                angle_deg: (plate.spec.angle_deg * 1e4).round() / 1e4,
                brightness_class: plate.brightness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = out_dir.join(MANIFEST_NAME);
    write_manifest(&path, &rows)?;
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let io_err = |e: csv::Error| -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(path, e),
            other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
        }
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Path of the manifest inside a generated directory.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_NAME)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilu::verify_code;

    #[test]
    fn layout_geometry() {
        let code: IluCode = "ABCD1234560".parse().unwrap();
        let l = TextLayout::for_code(&code);
        assert_eq!(l.glyphs.len(), 13);
        assert_eq!(l.width, 328);
        assert_eq!(l.height, 28);
        assert_eq!(l.check_gap(), (244, 260));
        assert_eq!(l.glyphs[4].x, 104);
    }

    #[test]
    fn same_seed_same_pixels() {
        let a = generate_plate(9, 3, 2);
        let b = generate_plate(9, 3, 2);
        assert_eq!(a.image, b.image);
        assert_ne!(a.image, generate_plate(9, 4, 2).image);
    }

    #[test]
    fn difficulty_zero_is_clean() {
        for i in 0..4 {
            let p = generate_plate(1, i, 0);
            assert_eq!(p.spec.angle_deg, 0.0);
            assert_eq!(p.spec.noise_sigma, 0.0);
            assert!(p.spec.flash.is_none());
            assert_eq!(p.brightness, Brightness::Normal);
        }
    }

    #[test]
    fn generated_codes_verify() {
        for i in 0..100 {
            let spec = random_spec(5, i, 2);
            assert!(verify_code(&spec.code).verified, "{}", spec.code);
            assert!(spec.angle_deg.abs() <= 10.0);
            assert!(spec.noise_sigma <= 8.0);
        }
    }

    #[test]
    fn brightness_lands_in_the_drawn_class() {
        let p = profile(2);
        for i in 0..12 {
            let plate = generate_plate(77, i, 2);
            let expected = Brightness::ALL
                .into_iter()
                .find(|&c| {
                    let (lo, hi) = rms_range(c);
                    (lo..=hi).contains(&plate.spec.target_rms)
                })
                .unwrap();
            assert!(p.classes.contains(&expected));
            assert_eq!(plate.brightness, expected, "plate {i}");
        }
    }

    #[test]
    fn filenames_sort_in_index_order() {
        assert_eq!(plate_filename(7, 20), "plate_0007.pgm");
        assert_eq!(plate_filename(12345, 20000), "plate_12345.pgm");
        assert!(plate_filename(9, 100) < plate_filename(10, 100));
    }
}
