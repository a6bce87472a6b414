//! Built-in 5x7 bitmap font shared by the stub recognizer and the synthetic
//! plate renderer.

use crate::imaging::GrayImage;

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;
/// Horizontal advance of one glyph in font units (glyph plus one blank column).
pub const ADVANCE: usize = GLYPH_W + 1;

#[rustfmt::skip]
const FONT: &[(char, [&str; GLYPH_H])] = &[
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', ["###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."]),
    ('E', ["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', ["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"]),
    ('H', ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', [".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('J', ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', ["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', ["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"]),
    ('O', [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', [".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."]),
    ('X', ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('0', [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."]),
    ('4', ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."]),
    ('[', ["###..", "#....", "#....", "#....", "#....", "#....", "###.."]),
    (']', ["..###", "....#", "....#", "....#", "....#", "....#", "..###"]),
];

/// One glyph: 7 rows of 5 bits, bit 4 being the leftmost column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glyph {
    pub ch: char,
    pub rows: [u8; GLYPH_H],
}

impl Glyph {
    #[inline]
    pub fn bit(&self, col: usize, row: usize) -> bool {
        self.rows[row] >> (GLYPH_W - 1 - col) & 1 == 1
    }

    /// First and last columns containing ink.
    pub fn ink_columns(&self) -> (usize, usize) {
        let used = |c: usize| (0..GLYPH_H).any(|r| self.bit(c, r));
        let first = (0..GLYPH_W).find(|&c| used(c)).unwrap_or(0);
        let last = (0..GLYPH_W).rev().find(|&c| used(c)).unwrap_or(GLYPH_W - 1);
        (first, last)
    }
}

fn parse(ch: char, rows: &[&str; GLYPH_H]) -> Glyph {
    let mut out = [0u8; GLYPH_H];
    for (r, line) in rows.iter().enumerate() {
        for (c, b) in line.bytes().enumerate() {
            if b == b'#' {
                out[r] |= 1 << (GLYPH_W - 1 - c);
            }
        }
    }
    Glyph { ch, rows: out }
}

pub fn glyphs() -> &'static [Glyph] {
    static GLYPHS: std::sync::OnceLock<Vec<Glyph>> = std::sync::OnceLock::new();
    GLYPHS.get_or_init(|| FONT.iter().map(|(c, rows)| parse(*c, rows)).collect())
}

pub fn glyph(ch: char) -> Option<&'static Glyph> {
    glyphs().iter().find(|g| g.ch == ch)
}

pub const INK: u8 = 30;
pub const PAPER: u8 = 220;

/// Renders `text` at `scale` pixels per font unit with a margin of `ADVANCE`
/// units on every side. Spaces advance by two units; characters outside the
/// font advance like a glyph but draw nothing.
pub fn render_strip(text: &str, scale: usize) -> GrayImage {
    let scale = scale.max(1);
    let units: usize = text.chars().map(|c| if c == ' ' { 2 } else { ADVANCE }).sum();
    let margin = ADVANCE;
    let w = (units + 2 * margin) * scale;
    let h = (GLYPH_H + 2 * margin) * scale;
    let mut px = vec![PAPER; w * h];
    let mut x_unit = margin;
    for c in text.chars() {
        if c == ' ' {
            x_unit += 2;
            continue;
        }
        if let Some(g) = glyph(c) {
            for r in 0..GLYPH_H {
                for col in 0..GLYPH_W {
                    if !g.bit(col, r) {
                        continue;
                    }
                    for yy in 0..scale {
                        let y = (margin + r) * scale + yy;
                        let x0 = (x_unit + col) * scale;
                        px[y * w + x0..y * w + x0 + scale].fill(INK);
                    }
                }
            }
        }
        x_unit += ADVANCE;
    }
    GrayImage::new(w, h, px).expect("sized above")
}
