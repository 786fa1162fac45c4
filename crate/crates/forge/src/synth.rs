//! Procedural leg-counting glyph dataset: parametric bird and quadruped
//! figures with exact leg counts, plus the counterfactual transforms
//! (vertical flip, generic-ITEM counting prompt).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use crate::error::{ForgeError, Result};
use crate::render::{hex_sha256, Canvas, PixelTag, RenderStyle, RenderedAsset};

pub const SYNTH_PX: u32 = 256;
pub const DEFAULT_SYNTH_N: usize = 8192;

/// Fixed training instruction shared by every item.
pub const SYNTH_INSTRUCTION: &str = "Count the number of legs in this animal glyph image. Answer with only a number in curly brackets, e.g., {4}. Do not add any other text.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphFamily {
    Bird,
    Quadruped,
}

impl GlyphFamily {
    pub fn leg_set(self) -> [u8; 3] {
        match self {
            GlyphFamily::Bird => [1, 2, 3],
            GlyphFamily::Quadruped => [3, 4, 5],
        }
    }

    /// Typical anatomical count: the answer a prior-driven counter gives.
    pub fn prior_count(self) -> u8 {
        match self {
            GlyphFamily::Bird => 2,
            GlyphFamily::Quadruped => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphSubtype {
    Duck,
    Heron,
    Owl,
    Passerine,
    Boar,
    Canine,
    Deer,
    Feline,
}

impl GlyphSubtype {
    pub const BIRDS: [GlyphSubtype; 4] = [
        GlyphSubtype::Duck,
        GlyphSubtype::Heron,
        GlyphSubtype::Owl,
        GlyphSubtype::Passerine,
    ];
    pub const QUADRUPEDS: [GlyphSubtype; 4] = [
        GlyphSubtype::Boar,
        GlyphSubtype::Canine,
        GlyphSubtype::Deer,
        GlyphSubtype::Feline,
    ];

    pub fn family(self) -> GlyphFamily {
        if GlyphSubtype::BIRDS.contains(&self) { GlyphFamily::Bird } else { GlyphFamily::Quadruped }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphClass {
    pub family: GlyphFamily,
    pub subtype: GlyphSubtype,
    pub leg_count: u8,
    pub prior_count: u8,
}

/// One limb as drawn: an upper and (for quadrupeds) lower segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegStroke {
    pub segments: Vec<((i64, i64), (i64, i64))>,
}

fn empty_asset() -> RenderedAsset {
    RenderedAsset {
        state_id: String::new(),
        style: RenderStyle::Base,
        px: 0,
        png: Vec::new(),
        content_hash: String::new(),
    }
}

/// Drawing record kept alongside each image so leg counts can be re-derived
/// from geometry rather than trusted from labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphGeometry {
    pub body_center: (i64, i64),
    pub body_radius: i64,
    pub head_center: (i64, i64),
    pub head_radius: i64,
    pub legs: Vec<LegStroke>,
}

/// Independent checker: count distinct limb strokes in the geometry record.
pub fn count_legs_from_geometry(geom: &GlyphGeometry) -> usize {
    geom.legs.iter().filter(|l| !l.segments.is_empty()).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthItem {
    pub item_id: String,
    pub glyph: GlyphClass,
    #[serde(skip, default = "empty_asset")]
    pub image: RenderedAsset,
    pub content_hash: String,
    pub instruction: String,
    pub ground_truth: u8,
    pub geometry: GlyphGeometry,
}

fn pick_color(rng: &mut ChaCha8Rng, light: bool) -> [u8; 3] {
    if light {
        [
            rng.gen_range(190..=255),
            rng.gen_range(190..=255),
            rng.gen_range(190..=255),
        ]
    } else {
        [
            rng.gen_range(20..=150),
            rng.gen_range(20..=150),
            rng.gen_range(20..=150),
        ]
    }
}

/// Draw one glyph; all variation (pose, shape, colors, background) comes
/// from `rng`. Returns the image and the geometry record.
fn draw_glyph(
    subtype: GlyphSubtype,
    legs: u8,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u8>, GlyphGeometry)> {
    let px = SYNTH_PX as i64;
    let mut canvas = Canvas::new(SYNTH_PX);
    let background = pick_color(rng, true);
    canvas.fill_rect(0, 0, px, px, background, PixelTag::Background);
    let fill = pick_color(rng, false);

    let family = subtype.family();
    let cx = px / 2 + rng.gen_range(-12..=12);
    let cy = px / 2 + rng.gen_range(-8..=8);

    // Subtype-specific body proportions.
    let (body_r, head_r, neck_len): (i64, i64, i64) = match subtype {
        GlyphSubtype::Duck => (rng.gen_range(34..=42), rng.gen_range(13..=17), 18),
        GlyphSubtype::Heron => (rng.gen_range(26..=32), rng.gen_range(10..=13), 46),
        GlyphSubtype::Owl => (rng.gen_range(34..=42), rng.gen_range(20..=26), 6),
        GlyphSubtype::Passerine => (rng.gen_range(22..=28), rng.gen_range(11..=14), 14),
        GlyphSubtype::Boar => (rng.gen_range(40..=50), rng.gen_range(14..=18), 4),
        GlyphSubtype::Canine => (rng.gen_range(34..=42), rng.gen_range(13..=17), 14),
        GlyphSubtype::Deer => (rng.gen_range(30..=38), rng.gen_range(11..=14), 30),
        GlyphSubtype::Feline => (rng.gen_range(32..=40), rng.gen_range(12..=16), 12),
    };

    canvas.fill_circle(cx, cy, body_r, fill, PixelTag::Symbol);
    // Quadruped bodies are elongated: a second overlapping disc.
    if family == GlyphFamily::Quadruped {
        canvas.fill_circle(cx + body_r / 2, cy, body_r * 4 / 5, fill, PixelTag::Symbol);
    }

    let head_dx = match family {
        GlyphFamily::Bird => rng.gen_range(-6..=6),
        GlyphFamily::Quadruped => body_r + head_r / 2,
    };
    let head = (cx + head_dx, cy - body_r - neck_len.max(0) - head_r / 2);
    let head = if family == GlyphFamily::Quadruped {
        (cx + head_dx, cy - body_r / 2 - head_r)
    } else {
        head
    };
    canvas.stroke(cx, cy, head.0, head.1, 4, fill, PixelTag::Symbol);
    canvas.fill_circle(head.0, head.1, head_r, fill, PixelTag::Symbol);

    // Legs descend from the body underside at evenly spread, jittered
    // attachment points; quadruped legs get a knee joint.
    let ground = cy + body_r + rng.gen_range(36..=54);
    let spread = if family == GlyphFamily::Quadruped { body_r + body_r / 2 } else { body_r };
    let mut leg_strokes = Vec::new();
    for i in 0..legs {
        let frac = if legs == 1 { 0.5 } else { i as f64 / (legs - 1) as f64 };
        let ax = cx - spread / 2 + (spread as f64 * frac) as i64 + rng.gen_range(-3..=3);
        let ay = cy + body_r - 6;
        let half_w = rng.gen_range(2..=3);
        let mut segments = Vec::new();
        if family == GlyphFamily::Quadruped {
            let knee = (ax + rng.gen_range(-5..=5), (ay + ground) / 2);
            let foot = (knee.0 + rng.gen_range(-5..=5), ground);
            canvas.stroke(ax, ay, knee.0, knee.1, half_w, fill, PixelTag::Symbol);
            canvas.stroke(knee.0, knee.1, foot.0, foot.1, half_w, fill, PixelTag::Symbol);
            segments.push(((ax, ay), knee));
            segments.push((knee, foot));
        } else {
            let foot = (ax + rng.gen_range(-6..=6), ground);
            canvas.stroke(ax, ay, foot.0, foot.1, half_w, fill, PixelTag::Symbol);
            // Bird foot: short toe stroke.
            canvas.stroke(foot.0, foot.1, foot.0 + 8, foot.1, half_w, fill, PixelTag::Symbol);
            segments.push(((ax, ay), foot));
        }
        leg_strokes.push(LegStroke { segments });
    }

    let geometry = GlyphGeometry {
        body_center: (cx, cy),
        body_radius: body_r,
        head_center: head,
        head_radius: head_r,
        legs: leg_strokes,
    };
    Ok((canvas.encode_png()?, geometry))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Generate `n` items: n/2 birds and n/2 quadrupeds, leg counts spread
/// evenly over each family's set, subtypes cycled, order shuffled by seed.
pub fn gen_synth(seed: u64, n: usize) -> Result<Vec<SynthItem>> {
    if n % 2 != 0 {
        return Err(ForgeError::InvalidArgument("synth item count must be even".into()));
    }
    // Balanced assignment: (family, subtype, legs) cycled before shuffling,
    // so family balance is exact and per-family leg counts are near-uniform.
    let mut plan: Vec<(GlyphFamily, GlyphSubtype, u8)> = Vec::with_capacity(n);
    for family in [GlyphFamily::Bird, GlyphFamily::Quadruped] {
        let subtypes = match family {
            GlyphFamily::Bird => GlyphSubtype::BIRDS,
            GlyphFamily::Quadruped => GlyphSubtype::QUADRUPEDS,
        };
        let legs = family.leg_set();
        for i in 0..n / 2 {
            plan.push((family, subtypes[i % 4], legs[i % 3]));
        }
    }
    let mut order_rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    for i in (1..plan.len()).rev() {
        let j = order_rng.gen_range(0..=i);
        plan.swap(i, j);
    }

    let mut items = Vec::with_capacity(n);
    for (idx, (family, subtype, legs)) in plan.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ idx as u64));
        let (png, geometry) = draw_glyph(subtype, legs, &mut rng)?;
        let content_hash = hex_sha256(&png);
        let item_id = format!("synth-{idx:05}");
        items.push(SynthItem {
            item_id: item_id.clone(),
            glyph: GlyphClass {
                family,
                subtype,
                leg_count: legs,
                prior_count: family.prior_count(),
            },
            image: RenderedAsset {
                state_id: item_id,
                style: RenderStyle::Base,
                px: SYNTH_PX,
                png,
                content_hash: content_hash.clone(),
            },
            content_hash,
            instruction: SYNTH_INSTRUCTION.to_string(),
            ground_truth: legs,
            geometry,
        });
    }
    Ok(items)
}

/// Generic-ITEM counting prompt: defamiliarizes the object noun while
/// keeping the count semantics.
pub fn alias_counting_prompt(object_phrase: &str) -> Result<String> {
    let phrase = object_phrase.trim();
    if phrase.is_empty() {
        return Err(ForgeError::InvalidArgument("object phrase must be nonempty".into()));
    }
    let singular = phrase.strip_suffix('s').unwrap_or(phrase);
    Ok(format!(
        "Count the {phrase} in this image, but report them as ITEMs (one ITEM = one {singular}). How many ITEMs are there? Answer with a number in curly brackets, e.g., {{9}}."
    ))
}

/// Persist items as images plus one JSONL metadata line each.
pub fn write_synth(items: &[SynthItem], dir: &Path) -> Result<()> {
    use std::io::Write;
    let images = dir.join("images");
    std::fs::create_dir_all(&images)?;
    let tmp = dir.join("synth.jsonl.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        for item in items {
            std::fs::write(images.join(format!("{}.png", item.item_id)), &item.image.png)?;
            writeln!(f, "{}", serde_json::to_string(item)?)?;
        }
    }
    std::fs::rename(tmp, dir.join("synth.jsonl"))?;
    Ok(())
}

/// Chi-square p-value that observed bin counts are uniform, via the
/// regularized upper incomplete gamma function.
pub fn chi_square_uniform_p(counts: &[usize]) -> f64 {
    use statrs::function::gamma::gamma_ur;
    let k = counts.len();
    if k < 2 {
        return 1.0;
    }
    let n: usize = counts.iter().sum();
    let expected = n as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur((k - 1) as f64 / 2.0, stat / 2.0)
}
