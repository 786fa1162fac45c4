//! Deterministic realization of game states as raster images (base,
//! checkerboard, glyph styles) and as ASCII text boards.
//!
//! Rendering is layered: cell backgrounds first, then board geometry (grid
//! strokes or the dot lattice), then player symbols. Each pixel carries a
//! layer tag so tests can check that Checkerboard touches only backgrounds
//! and Glyph touches only symbols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ForgeError, Result};
use crate::game::{Cell, Game, GameState, Player};

pub const DEFAULT_PX: u32 = 384;

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];
const SHADE: [u8; 3] = [0xDD, 0xDD, 0xDD];
const RED: [u8; 3] = [200, 40, 40];
const YELLOW: [u8; 3] = [235, 200, 40];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStyle {
    Base,
    Checkerboard,
    Glyph,
}

impl RenderStyle {
    pub const ALL: [RenderStyle; 3] =
        [RenderStyle::Base, RenderStyle::Checkerboard, RenderStyle::Glyph];

    pub fn slug(self) -> &'static str {
        match self {
            RenderStyle::Base => "base",
            RenderStyle::Checkerboard => "checkerboard",
            RenderStyle::Glyph => "glyph",
        }
    }

    pub fn from_slug(s: &str) -> Option<RenderStyle> {
        RenderStyle::ALL.iter().copied().find(|x| x.slug() == s)
    }
}

/// Two distinct uppercase letters standing in for the player symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphAssignment {
    pub g1: char,
    pub g2: char,
}

/// Letters eligible for glyph assignments: A..Z minus the canonical labels.
pub const ALLOWED_GLYPHS: &[char] = &[
    'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'U',
    'V', 'W', 'Y', 'Z',
];

/// Deterministic glyph pair for one (game, state) under a dataset seed.
pub fn glyphs_for(game: Game, state_id: &str, seed: u64) -> GlyphAssignment {
    let mut h = Sha256::new();
    h.update(game.slug().as_bytes());
    h.update(b"|");
    h.update(state_id.as_bytes());
    h.update(b"|");
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    let mut stream_seed = [0u8; 32];
    stream_seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(stream_seed);
    let i = rng.gen_range(0..ALLOWED_GLYPHS.len());
    let mut j = rng.gen_range(0..ALLOWED_GLYPHS.len() - 1);
    if j >= i {
        j += 1;
    }
    GlyphAssignment { g1: ALLOWED_GLYPHS[i], g2: ALLOWED_GLYPHS[j] }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedAsset {
    pub state_id: String,
    pub style: RenderStyle,
    pub px: u32,
    pub png: Vec<u8>,
    pub content_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelTag {
    Background,
    Grid,
    Symbol,
}

/// Raster canvas with per-pixel layer tags.
pub struct Canvas {
    pub px: u32,
    pub pixels: Vec<[u8; 3]>,
    pub tags: Vec<PixelTag>,
}

impl Canvas {
    pub fn new(px: u32) -> Canvas {
        let n = (px * px) as usize;
        Canvas {
            px,
            pixels: vec![WHITE; n],
            tags: vec![PixelTag::Background; n],
        }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3], tag: PixelTag) {
        if x < 0 || y < 0 || x >= self.px as i64 || y >= self.px as i64 {
            return;
        }
        let i = (y * self.px as i64 + x) as usize;
        self.pixels[i] = color;
        self.tags[i] = tag;
    }

    pub fn fill_rect(&mut self, x0: i64, y0: i64, w: i64, h: i64, color: [u8; 3], tag: PixelTag) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.put(x, y, color, tag);
            }
        }
    }

    /// Filled disc at integer center with radius `r`.
    pub fn fill_circle(&mut self, cx: i64, cy: i64, r: i64, color: [u8; 3], tag: PixelTag) {
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                let dx = x - cx;
                let dy = y - cy;
                if dx * dx + dy * dy <= r * r {
                    self.put(x, y, color, tag);
                }
            }
        }
    }

    pub fn ring(&mut self, cx: i64, cy: i64, r: i64, thickness: i64, color: [u8; 3], tag: PixelTag) {
        let inner = r - thickness;
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                let dx = x - cx;
                let dy = y - cy;
                let d2 = dx * dx + dy * dy;
                if d2 <= r * r && d2 >= inner * inner {
                    self.put(x, y, color, tag);
                }
            }
        }
    }

    /// Thick line segment drawn as a stamped disc along the segment.
    pub fn stroke(
        &mut self,
        x0: i64,
        y0: i64,
        x1: i64,
        y1: i64,
        half_width: i64,
        color: [u8; 3],
        tag: PixelTag,
    ) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for s in 0..=steps {
            let x = x0 + (x1 - x0) * s / steps;
            let y = y0 + (y1 - y0) * s / steps;
            self.fill_circle(x, y, half_width, color, tag);
        }
    }

    /// Draw a 5x7 bitmap letter scaled to `scale` pixels per font cell,
    /// centered at (cx, cy).
    pub fn letter(&mut self, ch: char, cx: i64, cy: i64, scale: i64, color: [u8; 3], tag: PixelTag) {
        let rows = font_rows(ch);
        let w = 5 * scale;
        let h = 7 * scale;
        let x0 = cx - w / 2;
        let y0 = cy - h / 2;
        for (ry, bits) in rows.iter().enumerate() {
            for rx in 0..5 {
                if bits & (1 << (4 - rx)) != 0 {
                    self.fill_rect(
                        x0 + rx as i64 * scale,
                        y0 + ry as i64 * scale,
                        scale,
                        scale,
                        color,
                        tag,
                    );
                }
            }
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut raw = Vec::with_capacity(self.pixels.len() * 3);
        for p in &self.pixels {
            raw.extend_from_slice(p);
        }
        let mut out = Vec::new();
        {
            use image::codecs::png::PngEncoder;
            use image::ImageEncoder;
            let enc = PngEncoder::new(&mut out);
            enc.write_image(&raw, self.px, self.px, image::ExtendedColorType::Rgb8)
                .map_err(|e| ForgeError::InvalidArgument(format!("png encode: {e}")))?;
        }
        Ok(out)
    }
}

/// 5x7 bitmap font, A..Z. One byte per row, low 5 bits used.
const FONT: [[u8; 7]; 26] = [
    [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11], // A
    [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E], // B
    [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E], // C
    [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C], // D
    [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F], // E
    [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10], // F
    [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F], // G
    [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11], // H
    [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E], // I
    [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C], // J
    [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11], // K
    [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F], // L
    [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11], // M
    [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11], // N
    [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E], // O
    [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10], // P
    [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D], // Q
    [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11], // R
    [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E], // S
    [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04], // T
    [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E], // U
    [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04], // V
    [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A], // W
    [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11], // X
    [0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04], // Y
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F], // Z
];

fn font_rows(ch: char) -> [u8; 7] {
    let i = (ch as u8).wrapping_sub(b'A') as usize;
    assert!(i < 26, "font covers A..Z only, got {ch:?}");
    FONT[i]
}

struct BoardGeometry {
    cols: usize,
    rows: usize,
    origin: i64,
    cell: i64,
}

impl BoardGeometry {
    fn new(game: Game, px: u32) -> BoardGeometry {
        let (rows, cols) = game.dims();
        let margin = px as i64 / 12;
        let cell = (px as i64 - 2 * margin) / cols as i64;
        let span = cell * cols as i64;
        let origin = (px as i64 - span) / 2;
        BoardGeometry { cols, rows, origin, cell }
    }

    fn cell_rect(&self, r: usize, c: usize) -> (i64, i64, i64, i64) {
        (
            self.origin + c as i64 * self.cell,
            self.origin + r as i64 * self.cell,
            self.cell,
            self.cell,
        )
    }

    fn cell_center(&self, r: usize, c: usize) -> (i64, i64) {
        let (x, y, w, h) = self.cell_rect(r, c);
        (x + w / 2, y + h / 2)
    }
}

/// Render a state into a tagged canvas. Exposed so tests can inspect layer
/// tags directly; `render` wraps this and encodes PNG bytes.
pub fn render_canvas(
    state: &GameState,
    style: RenderStyle,
    assignment: Option<GlyphAssignment>,
    px: u32,
) -> Result<Canvas> {
    match (style, assignment) {
        (RenderStyle::Glyph, None) => {
            return Err(ForgeError::InvalidArgument(
                "glyph style requires a glyph assignment".into(),
            ))
        }
        (RenderStyle::Glyph, Some(a)) if a.g1 == a.g2 => {
            return Err(ForgeError::InvalidArgument("glyph letters must differ".into()))
        }
        (RenderStyle::Base | RenderStyle::Checkerboard, Some(_)) => {
            return Err(ForgeError::InvalidArgument(format!(
                "{} style forbids a glyph assignment",
                style.slug()
            )))
        }
        _ => {}
    }

    let mut canvas = Canvas::new(px);
    let geo = BoardGeometry::new(state.game, px);

    // Layer 1: cell backgrounds.
    if style == RenderStyle::Checkerboard {
        for r in 0..geo.rows {
            for c in 0..geo.cols {
                if (r + c) % 2 == 0 {
                    let (x, y, w, h) = geo.cell_rect(r, c);
                    canvas.fill_rect(x, y, w, h, SHADE, PixelTag::Background);
                }
            }
        }
    }

    // Layer 2: board geometry, style-invariant.
    let stroke_w = 2i64;
    if state.game == Game::DotsAndBoxes {
        let dot_r = (geo.cell / 10).max(3);
        for r in 0..=geo.rows {
            for c in 0..=geo.cols {
                let x = geo.origin + c as i64 * geo.cell;
                let y = geo.origin + r as i64 * geo.cell;
                canvas.fill_circle(x, y, dot_r, BLACK, PixelTag::Grid);
            }
        }
    } else {
        let span = geo.cell * geo.cols as i64;
        for i in 0..=geo.cols {
            let x = geo.origin + i as i64 * geo.cell;
            canvas.fill_rect(x - stroke_w / 2, geo.origin, stroke_w, span, BLACK, PixelTag::Grid);
        }
        for i in 0..=geo.rows {
            let y = geo.origin + i as i64 * geo.cell;
            canvas.fill_rect(geo.origin, y - stroke_w / 2, span, stroke_w, BLACK, PixelTag::Grid);
        }
    }

    // Layer 3: player symbols.
    for r in 0..geo.rows {
        for c in 0..geo.cols {
            let Cell::Taken(player) = state.cell(r, c) else {
                continue;
            };
            let (cx, cy) = geo.cell_center(r, c);
            if style == RenderStyle::Glyph {
                let a = assignment.unwrap();
                let ch = match player {
                    Player::P1 => a.g1,
                    Player::P2 => a.g2,
                };
                let scale = (geo.cell / 10).max(2);
                canvas.letter(ch, cx, cy, scale, BLACK, PixelTag::Symbol);
                continue;
            }
            draw_canonical_symbol(&mut canvas, state.game, player, cx, cy, geo.cell);
        }
    }

    Ok(canvas)
}

fn draw_canonical_symbol(
    canvas: &mut Canvas,
    game: Game,
    player: Player,
    cx: i64,
    cy: i64,
    cell: i64,
) {
    let r = cell * 2 / 6;
    match game {
        Game::TicTacToe => match player {
            Player::P1 => {
                let w = (cell / 14).max(2);
                canvas.stroke(cx - r, cy - r, cx + r, cy + r, w, BLACK, PixelTag::Symbol);
                canvas.stroke(cx - r, cy + r, cx + r, cy - r, w, BLACK, PixelTag::Symbol);
            }
            Player::P2 => {
                canvas.ring(cx, cy, r, (cell / 12).max(3), BLACK, PixelTag::Symbol);
            }
        },
        Game::Reversi => {
            let fill = if player == Player::P1 { BLACK } else { WHITE };
            canvas.fill_circle(cx, cy, r, fill, PixelTag::Symbol);
            canvas.ring(cx, cy, r, 2, BLACK, PixelTag::Symbol);
        }
        Game::ConnectFour => {
            let fill = if player == Player::P1 { RED } else { YELLOW };
            canvas.fill_circle(cx, cy, r, fill, PixelTag::Symbol);
            canvas.ring(cx, cy, r, 2, BLACK, PixelTag::Symbol);
        }
        Game::DotsAndBoxes => {
            let label = game.label_for(player);
            let scale = (cell / 10).max(2);
            canvas.letter(label.short_char(), cx, cy, scale, BLACK, PixelTag::Symbol);
        }
    }
}

pub fn render(
    state: &GameState,
    style: RenderStyle,
    assignment: Option<GlyphAssignment>,
    px: u32,
) -> Result<RenderedAsset> {
    let canvas = render_canvas(state, style, assignment, px)?;
    let png = canvas.encode_png()?;
    let content_hash = hex_sha256(&png);
    Ok(RenderedAsset {
        state_id: state.state_id.clone(),
        style,
        px,
        png,
        content_hash,
    })
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Reverse pixel rows of a PNG asset. An involution on assets produced by
/// this module's encoder.
pub fn flip_vertical(asset: &RenderedAsset) -> Result<RenderedAsset> {
    let img = image::load_from_memory(&asset.png)
        .map_err(|e| ForgeError::InvalidArgument(format!("png decode: {e}")))?
        .to_rgb8();
    let (w, h) = (img.width(), img.height());
    let mut canvas = Canvas::new(w);
    // Width and height are equal for our square assets; general PNGs keep
    // their own dimensions through the raw re-encode below.
    let mut raw = vec![0u8; (w * h * 3) as usize];
    let src = img.as_raw();
    let row_bytes = (w * 3) as usize;
    for y in 0..h as usize {
        let src_off = (h as usize - 1 - y) * row_bytes;
        raw[y * row_bytes..(y + 1) * row_bytes]
            .copy_from_slice(&src[src_off..src_off + row_bytes]);
    }
    let mut out = Vec::new();
    {
        use image::codecs::png::PngEncoder;
        use image::ImageEncoder;
        let enc = PngEncoder::new(&mut out);
        enc.write_image(&raw, w, h, image::ExtendedColorType::Rgb8)
            .map_err(|e| ForgeError::InvalidArgument(format!("png encode: {e}")))?;
    }
    canvas.px = w;
    Ok(RenderedAsset {
        state_id: asset.state_id.clone(),
        style: asset.style,
        px: w,
        content_hash: hex_sha256(&out),
        png: out,
    })
}

// ---------------------------------------------------------------------------
// ASCII boards
// ---------------------------------------------------------------------------

/// Byte-exact ASCII realization of a state, one template per game.
pub fn ascii_board(state: &GameState) -> String {
    let (rows, cols) = state.game.dims();
    let cell_ch = |r: usize, c: usize| -> char {
        match state.cell(r, c) {
            Cell::Empty => ' ',
            taken => state.game.cell_char(taken),
        }
    };
    match state.game {
        Game::TicTacToe | Game::ConnectFour => {
            let sep = vec!["---"; cols].join("+");
            let mut lines = Vec::new();
            for r in 0..rows {
                let row: Vec<String> = (0..cols).map(|c| format!(" {} ", cell_ch(r, c))).collect();
                lines.push(row.join("|"));
                if r + 1 < rows {
                    lines.push(sep.clone());
                }
            }
            lines.join("\n")
        }
        Game::Reversi => {
            let border = format!("+{}+", vec!["---"; cols].join("+"));
            let mut lines = vec![border.clone()];
            for r in 0..rows {
                let row: Vec<String> = (0..cols).map(|c| format!(" {} ", cell_ch(r, c))).collect();
                lines.push(format!("|{}|", row.join("|")));
                lines.push(border.clone());
            }
            lines.join("\n")
        }
        Game::DotsAndBoxes => {
            let dot_row = format!("o{}o", vec!["---"; cols].join("o"));
            let mut lines = vec![dot_row.clone()];
            for r in 0..rows {
                let row: Vec<String> = (0..cols).map(|c| format!(" {} ", cell_ch(r, c))).collect();
                lines.push(format!("|{}|", row.join("|")));
                lines.push(dot_row.clone());
            }
            lines.join("\n")
        }
    }
}

/// Inverse of `ascii_board`: recover the cell grid from the template text.
pub fn parse_ascii_board(game: Game, text: &str) -> Result<Vec<Cell>> {
    let (rows, cols) = game.dims();
    let lines: Vec<&str> = text.lines().collect();
    let content_lines: Vec<&str> = match game {
        Game::TicTacToe | Game::ConnectFour => lines.iter().step_by(2).copied().collect(),
        Game::Reversi | Game::DotsAndBoxes => lines.iter().skip(1).step_by(2).copied().collect(),
    };
    if content_lines.len() != rows {
        return Err(ForgeError::InvalidState(format!(
            "expected {rows} content rows, found {}",
            content_lines.len()
        )));
    }
    let mut cells = Vec::with_capacity(rows * cols);
    for line in content_lines {
        let chars: Vec<char> = line.chars().collect();
        for c in 0..cols {
            // Cell payload sits at offset 1 within each 4-char " X |" group,
            // shifted by one for the boxed templates' leading '|'.
            let base = match game {
                Game::TicTacToe | Game::ConnectFour => c * 4 + 1,
                Game::Reversi | Game::DotsAndBoxes => c * 4 + 2,
            };
            let ch = *chars.get(base).ok_or_else(|| {
                ForgeError::InvalidState(format!("short row in ascii board: {line:?}"))
            })?;
            let cell = if ch == ' ' {
                Cell::Empty
            } else {
                game.cell_from_char(ch).ok_or_else(|| {
                    ForgeError::InvalidState(format!("bad symbol {ch:?} in ascii board"))
                })?
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}
