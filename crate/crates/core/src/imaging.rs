//! Grayscale rasters and pixel-level preprocessing.
//!
//! Every operation takes its input by reference and returns a new image.
//! Intensities that come out of real-valued arithmetic are rounded half away
//! from zero and clamped to `0..=255`. Convolutions replicate edge pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable 8-bit single-channel raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::config(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.pixels.chunks_exact(self.width)
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn is_constant(&self) -> bool {
        self.pixels.iter().all(|&p| p == self.pixels[0])
    }
}

/// Axis-aligned pixel rectangle; `x`,`y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    /// Grows the rectangle by `margin` on every side, clipped to `width`x`height`.
    pub fn padded(&self, margin: usize, width: usize, height: usize) -> Rect {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.right() + margin).min(width);
        let y1 = (self.bottom() + margin).min(height);
        Rect::new(x0, y0, x1.saturating_sub(x0).max(1), y1.saturating_sub(y0).max(1))
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Binary per-pixel mask (edge maps, thresholded images).
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("set", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels rendered as 255, unset as 0.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            if self.get(x, y) {
                255
            } else {
                0
            }
        })
    }
}

/// Real-valued raster, used for intermediate filter responses.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRaster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RealRaster {
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.pixels.iter().map(|&p| f64::from(p)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Rounds and clamps every value into an 8-bit image.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.data.iter().map(|&v| round_to_u8(v)).collect(),
        }
    }
}

/// Round half away from zero, then clamp into `0..=255`.
#[inline]
pub fn round_to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn crop(img: &GrayImage, r: Rect) -> Result<GrayImage> {
    if !r.fits_within(img.width, img.height) {
        return Err(Error::RectOutOfBounds {
            rect: r,
            width: img.width,
            height: img.height,
        });
    }
    let mut pixels = Vec::with_capacity(r.w * r.h);
    for row in img.rows().skip(r.y).take(r.h) {
        pixels.extend_from_slice(&row[r.x..r.x + r.w]);
    }
    Ok(GrayImage {
        width: r.w,
        height: r.h,
        pixels,
    })
}

/// Root-mean-square pixel intensity.
pub fn rms_brightness(img: &GrayImage) -> f64 {
    let sum_sq: u64 = img.pixels.iter().map(|&p| u64::from(p) * u64::from(p)).sum();
    (sum_sq as f64 / img.pixels.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Brightness {
    Dark,
    Dim,
    Normal,
    Bright,
}

impl Brightness {
    pub const ALL: [Brightness; 4] = [
        Brightness::Dark,
        Brightness::Dim,
        Brightness::Normal,
        Brightness::Bright,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Brightness::Dark => "dark",
            Brightness::Dim => "dim",
            Brightness::Normal => "normal",
            Brightness::Bright => "bright",
        }
    }
}

impl std::fmt::Display for Brightness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Brightness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Brightness::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown brightness class {s:?}")))
    }
}

/// Class boundaries `t1 < t2 < t3` on the RMS scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessThresholds(pub f64, pub f64, pub f64);

impl Default for BrightnessThresholds {
    fn default() -> Self {
        Self(50.0, 110.0, 170.0)
    }
}

impl BrightnessThresholds {
    pub fn validate(&self) -> Result<()> {
        let Self(t1, t2, t3) = *self;
        let in_range = |t: f64| t > 0.0 && t < 255.0;
        if !(in_range(t1) && in_range(t2) && in_range(t3) && t1 < t2 && t2 < t3) {
            return Err(Error::config(format!(
                "brightness thresholds must satisfy 0 < t1 < t2 < t3 < 255, got ({t1}, {t2}, {t3})"
            )));
        }
        Ok(())
    }
}

/// A brightness class together with the RMS value it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessClass {
    pub class: Brightness,
    pub rms: f64,
}

pub fn classify_brightness(rms: f64, thresholds: BrightnessThresholds) -> Result<BrightnessClass> {
    thresholds.validate()?;
    let BrightnessThresholds(t1, t2, t3) = thresholds;
    let class = if rms < t1 {
        Brightness::Dark
    } else if rms < t2 {
        Brightness::Dim
    } else if rms < t3 {
        Brightness::Normal
    } else {
        Brightness::Bright
    };
    Ok(BrightnessClass { class, rms })
}

/// 256-entry intensity lookup table.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Lut256(pub [u8; 256]);

impl std::fmt::Debug for Lut256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Lut256 {
    pub fn identity() -> Self {
        let mut t = [0u8; 256];
        for (i, e) in t.iter_mut().enumerate() {
            *e = i as u8;
        }
        Self(t)
    }

    #[inline]
    pub fn map(&self, p: u8) -> u8 {
        self.0[p as usize]
    }
}

/// Table for `out = 255 * (in / 255)^(1 / gamma)`; gamma above 1 brightens.
pub fn build_gamma_lut(gamma: f64) -> Result<Lut256> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    let inv = 1.0 / gamma;
    let mut t = [0u8; 256];
    for (i, e) in t.iter_mut().enumerate() {
        *e = round_to_u8(255.0 * (i as f64 / 255.0).powf(inv));
    }
    Ok(Lut256(t))
}

pub fn apply_lut(img: &GrayImage, lut: &Lut256) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| lut.map(p)).collect(),
    }
}

/// Gamma value per brightness class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaMap {
    pub dark: f64,
    pub dim: f64,
    pub normal: f64,
    pub bright: f64,
}

impl Default for GammaMap {
    fn default() -> Self {
        Self {
            dark: 2.2,
            dim: 1.6,
            normal: 1.0,
            bright: 0.8,
        }
    }
}

impl GammaMap {
    pub fn gamma_for(&self, class: Brightness) -> f64 {
        match class {
            Brightness::Dark => self.dark,
            Brightness::Dim => self.dim,
            Brightness::Normal => self.normal,
            Brightness::Bright => self.bright,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for class in Brightness::ALL {
            let g = self.gamma_for(class);
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config(format!("gamma for {class} must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian taps for radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian smoothing without intermediate rounding.
pub fn gaussian_smooth(src: &RealRaster, sigma: f64) -> RealRaster {
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    let (w, h) = (src.width, src.height);

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src.get_clamped(x as isize + k as isize - radius, y as isize);
            }
            horiz[y * w + x] = acc;
        }
    }
    let horiz = RealRaster {
        width: w,
        height: h,
        data: horiz,
    };

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * horiz.get_clamped(x as isize, y as isize + k as isize - radius);
            }
            out[y * w + x] = acc;
        }
    }
    RealRaster {
        width: w,
        height: h,
        data: out,
    }
}

pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("blur sigma must be positive, got {sigma}")));
    }
    Ok(gaussian_smooth(&RealRaster::from_image(img), sigma).to_image())
}

/// 3x3 correlation (not flipped) with edge clamping. Output is not clamped.
pub fn convolve_3x3(img: &GrayImage, kernel: &[[f64; 3]; 3]) -> RealRaster {
    let (w, h) = (img.width, img.height);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (ky, row) in kernel.iter().enumerate() {
                for (kx, k) in row.iter().enumerate() {
                    if *k != 0.0 {
                        let p = img.get_clamped(x + kx as isize - 1, y + ky as isize - 1);
                        acc += k * f64::from(p);
                    }
                }
            }
            data.push(acc);
        }
    }
    RealRaster {
        width: w,
        height: h,
        data,
    }
}

/// Bilinear resampling with pixel centres aligned between the two grids.
pub fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> Result<GrayImage> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::config(format!(
            "resize target must be at least 1x1, got {new_w}x{new_h}"
        )));
    }
    if new_w == img.width && new_h == img.height {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / new_w as f64;
    let sy = img.height as f64 / new_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let out = GrayImage::from_fn(new_w, new_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        round_to_u8(sample_bilinear(img, fx, fy))
    });
    Ok(out)
}

/// Bilinear sample at real coordinates already known to lie in the image.
#[inline]
pub(crate) fn sample_bilinear(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let ax = fx - x0 as f64;
    let ay = fy - y0 as f64;
    let p = |x, y| f64::from(img.get(x, y));
    let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
    let bottom = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
    top * (1.0 - ay) + bottom * ay
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![1, 2, 3]).is_err());
    }

    #[test]
    fn crop_cases() {
        let a = img(2, 2, &[10, 20, 30, 40]);
        assert_eq!(crop(&a, a.bounds()).unwrap(), a);
        assert_eq!(crop(&a, Rect::new(1, 1, 1, 1)).unwrap().pixels(), &[40]);

        let b = img(3, 3, &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        let c = crop(&b, Rect::new(1, 0, 2, 2)).unwrap();
        assert_eq!((c.width(), c.height()), (2, 2));
        assert_eq!(c.pixels(), &[1, 2, 4, 5]);

        assert!(matches!(
            crop(&b, Rect::new(2, 2, 2, 1)),
            Err(Error::RectOutOfBounds { .. })
        ));
        assert!(crop(&b, Rect::new(0, 0, 0, 1)).is_err());
    }

    #[test]
    fn rms_cases() {
        assert_eq!(rms_brightness(&GrayImage::filled(4, 3, 0)), 0.0);
        let r = rms_brightness(&img(2, 1, &[0, 255]));
        assert!((r - 180.3122).abs() < 1e-4, "{r}");
        for v in 0..=255u8 {
            assert_eq!(rms_brightness(&GrayImage::filled(5, 7, v)), f64::from(v));
        }
    }

    #[test]
    fn classify_boundaries() {
        let t = BrightnessThresholds::default();
        assert_eq!(classify_brightness(0.0, t).unwrap().class, Brightness::Dark);
        assert_eq!(classify_brightness(49.99, t).unwrap().class, Brightness::Dark);
        assert_eq!(classify_brightness(50.0, t).unwrap().class, Brightness::Dim);
        assert_eq!(classify_brightness(110.0, t).unwrap().class, Brightness::Normal);
        assert_eq!(classify_brightness(170.0, t).unwrap().class, Brightness::Bright);
        assert_eq!(classify_brightness(180.3122, t).unwrap().class, Brightness::Bright);
        assert!(classify_brightness(10.0, BrightnessThresholds(110.0, 50.0, 170.0)).is_err());
        assert!(classify_brightness(10.0, BrightnessThresholds(0.0, 50.0, 170.0)).is_err());
    }

    #[test]
    fn gamma_lut_values() {
        assert_eq!(build_gamma_lut(1.0).unwrap(), Lut256::identity());
        let lut = build_gamma_lut(2.0).unwrap();
        assert_eq!(lut.map(64), 128);
        assert_eq!(lut.map(200), 226);
        for g in [0.1, 0.8, 1.6, 2.2, 7.0] {
            let l = build_gamma_lut(g).unwrap();
            assert_eq!((l.map(0), l.map(255)), (0, 255));
        }
        assert!(build_gamma_lut(0.0).is_err());
        assert!(build_gamma_lut(-1.0).is_err());
        assert!(build_gamma_lut(f64::NAN).is_err());
    }

    #[test]
    fn apply_lut_cases() {
        let a = img(2, 1, &[64, 200]);
        assert_eq!(apply_lut(&a, &build_gamma_lut(2.0).unwrap()).pixels(), &[128, 226]);
        assert_eq!(apply_lut(&a, &Lut256([0; 256])).pixels(), &[0, 0]);
    }

    #[test]
    fn blur_impulse_matches_kernel_product() {
        let mut px = vec![0u8; 15 * 15];
        px[7 * 15 + 7] = 255;
        let a = img(15, 15, &px);
        let out = gaussian_blur(&a, 1.0).unwrap();

        // Independent tabulation of the 7-tap kernel.
        let raw: Vec<f64> = (-3i32..=3).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
        let norm: f64 = raw.iter().sum();
        let centre = raw[3] / norm;
        assert_eq!(out.get(7, 7), (255.0 * centre * centre).round() as u8);
        let mass: i64 = out.pixels().iter().map(|&p| i64::from(p)).sum();
        assert!((mass - 255).abs() <= 49, "mass {mass}");
        assert!(gaussian_blur(&a, 0.0).is_err());
    }

    #[test]
    fn convolve_cases() {
        let a = img(3, 2, &[1, 2, 3, 4, 5, 6]);
        let id = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(convolve_3x3(&a, &id), RealRaster::from_image(&a));
        assert!(convolve_3x3(&a, &[[0.0; 3]; 3]).data.iter().all(|&v| v == 0.0));

        let step = GrayImage::from_fn(8, 5, |x, _| if x < 4 { 10 } else { 60 });
        let scharr_x = [[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]];
        let r = convolve_3x3(&step, &scharr_x);
        assert_eq!(r.get(3, 2), 16.0 * 50.0);
        assert_eq!(r.get(4, 2), 16.0 * 50.0);
        assert_eq!(r.get(1, 2), 0.0);
        let flipped = GrayImage::from_fn(8, 5, |x, _| if x < 4 { 60 } else { 10 });
        assert_eq!(convolve_3x3(&flipped, &scharr_x).get(3, 2), -16.0 * 50.0);
    }

    #[test]
    fn resize_cases() {
        let a = img(2, 1, &[0, 255]);
        assert_eq!(resize_bilinear(&a, 3, 1).unwrap().pixels(), &[0, 128, 255]);
        assert_eq!(resize_bilinear(&a, 2, 1).unwrap(), a);
        let c = GrayImage::filled(5, 4, 77);
        assert_eq!(resize_bilinear(&c, 13, 2).unwrap(), GrayImage::filled(13, 2, 77));
    }

    #[test]
    fn rect_padding_and_iou() {
        let r = Rect::new(2, 3, 10, 4);
        assert_eq!(r.padded(4, 100, 100), Rect::new(0, 0, 16, 11));
        assert_eq!(r.padded(4, 14, 9), Rect::new(0, 0, 14, 9));
        assert_eq!(r.iou(&r), 1.0);
        assert_eq!(r.iou(&Rect::new(50, 50, 1, 1)), 0.0);
    }

    fn arb_image() -> impl Strategy<Value = GrayImage> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn identity_lut_is_noop(a in arb_image()) {
            prop_assert_eq!(apply_lut(&a, &Lut256::identity()), a);
        }

        #[test]
        fn gamma_lut_monotone(g in 0.05f64..10.0) {
            let l = build_gamma_lut(g).unwrap();
            prop_assert!(l.0.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!((l.0[0], l.0[255]), (0, 255));
        }

        #[test]
        fn nested_crop_composes(
            a in arb_image(),
            fx in 0.0f64..1.0, fy in 0.0f64..1.0, fw in 0.0f64..1.0, fh in 0.0f64..1.0,
            gx in 0.0f64..1.0, gy in 0.0f64..1.0, gw in 0.0f64..1.0, gh in 0.0f64..1.0,
        ) {
            let pick = |len: usize, f0: f64, f1: f64| {
                let start = ((len as f64) * f0) as usize % len;
                let ext = 1 + ((len - start - 1) as f64 * f1) as usize;
                (start, ext)
            };
            let (x, w) = pick(a.width(), fx, fw);
            let (y, h) = pick(a.height(), fy, fh);
            let outer = Rect::new(x, y, w, h);
            let (ix, iw) = pick(w, gx, gw);
            let (iy, ih) = pick(h, gy, gh);
            let inner = Rect::new(ix, iy, iw, ih);
            let nested = crop(&crop(&a, outer).unwrap(), inner).unwrap();
            let direct = crop(&a, Rect::new(x + ix, y + iy, iw, ih)).unwrap();
            prop_assert_eq!(nested, direct);
        }

        #[test]
        fn constants_survive_blur_and_resize(
            v in any::<u8>(), w in 1usize..16, h in 1usize..16,
            nw in 1usize..24, nh in 1usize..24, sigma in 0.3f64..3.0,
        ) {
            let c = GrayImage::filled(w, h, v);
            prop_assert_eq!(gaussian_blur(&c, sigma).unwrap(), c.clone());
            prop_assert_eq!(resize_bilinear(&c, nw, nh).unwrap(), GrayImage::filled(nw, nh, v));
        }
    }
}
