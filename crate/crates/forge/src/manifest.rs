//! Expansion of state pools into evaluation manifests and their
//! line-delimited persistence.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ForgeError, Result};
use crate::game::{answer_for, outcome, Game, GameState, RuleCondition, Target};
use crate::prompt::{ExampleSpec, Ordering, PromptFamily, ResponseVariant};
use crate::render::RenderStyle;
use crate::sampler::StatePool;
use crate::{SCHEMA_VERSION, TOOL_VERSION};

/// An image–prompt configuration: which prompt family is used and how the
/// board is rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub family: PromptFamily,
    pub style: RenderStyle,
}

impl Config {
    /// The five main configurations: canonical prompt with each of the three
    /// render styles, plus the two alias prompts over the base style.
    pub const MAIN: [Config; 5] = [
        Config { family: PromptFamily::Base, style: RenderStyle::Base },
        Config { family: PromptFamily::Base, style: RenderStyle::Checkerboard },
        Config { family: PromptFamily::Base, style: RenderStyle::Glyph },
        Config { family: PromptFamily::Alias, style: RenderStyle::Base },
        Config { family: PromptFamily::SemAlias, style: RenderStyle::Base },
    ];

    /// Control configurations: descriptive questions and text-only boards.
    pub const CONTROLS: [Config; 2] = [
        Config { family: PromptFamily::Descriptive, style: RenderStyle::Base },
        Config { family: PromptFamily::TextOnly, style: RenderStyle::Base },
    ];

    pub fn is_canonical(self) -> bool {
        Config::MAIN.contains(&self) || Config::CONTROLS.contains(&self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub game: Game,
    pub family: PromptFamily,
    pub style: RenderStyle,
    pub variant: ResponseVariant,
    pub n_states: usize,
    pub config_digest: String,
}

impl ManifestHeader {
    pub fn digest_fields(
        seed: u64,
        game: Game,
        family: PromptFamily,
        style: RenderStyle,
        variant: ResponseVariant,
        n_states: usize,
    ) -> String {
        let canon = format!(
            "seed={seed};game={};family={};style={};variant={};n={n_states}",
            game.slug(),
            family.slug(),
            style.slug(),
            variant.slug()
        );
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex::encode_short(&h.finalize())
    }
}

mod hex {
    pub fn encode_short(bytes: &[u8]) -> String {
        bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One manifest row: the example spec plus the board cells and asset path
/// needed to build and send the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    #[serde(flatten)]
    pub spec: ExampleSpec,
    /// Row-major cell text, e.g. `XOX/OXO/X.O`.
    pub cells: String,
    /// Relative path to the rendered board, absent for text-only rows.
    pub asset_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn digest(&self) -> &str {
        &self.header.config_digest
    }
}

/// Relative asset path for one rendered state.
pub fn asset_rel_path(game: Game, state_id: &str, style: RenderStyle) -> String {
    format!("assets/{}/{}-{}.png", game.slug(), state_id, style.slug())
}

/// Conventional manifest filename for one (game, family, style, variant).
pub fn manifest_file_name(
    game: Game,
    family: PromptFamily,
    style: RenderStyle,
    variant: ResponseVariant,
) -> String {
    format!(
        "manifest-{}-{}-{}-{}.jsonl",
        game.slug(),
        family.slug(),
        style.slug(),
        variant.slug()
    )
}

/// Expand a state pool into the full row set for one configuration and
/// response variant: every state crossed with both rules, both question
/// targets, and both message orders, in lexicographic (state_id, rule,
/// target, order) order.
pub fn expand(
    pool: &StatePool,
    config: Config,
    variant: ResponseVariant,
) -> Result<Manifest> {
    if !config.is_canonical() {
        return Err(ForgeError::InvalidArgument(format!(
            "unsupported configuration: family {} with style {}",
            config.family.slug(),
            config.style.slug()
        )));
    }
    let game = pool.game;
    let mut entries: Vec<&crate::sampler::PoolEntry> = pool.states.iter().collect();
    entries.sort_by(|a, b| a.state.state_id.cmp(&b.state.state_id));

    let mut rows = Vec::with_capacity(entries.len() * 8);
    for entry in entries {
        let state: &GameState = &entry.state;
        for rule in RuleCondition::BOTH {
            let out = outcome(state, rule)?;
            for target in Target::BOTH {
                let truth = answer_for(&out, target);
                for order in Ordering::BOTH {
                    let example_id = ExampleSpec::derive_example_id(
                        game,
                        &state.state_id,
                        rule,
                        target,
                        order,
                        config.family,
                        config.style,
                        variant,
                    );
                    let asset_path = if config.family == PromptFamily::TextOnly {
                        None
                    } else {
                        Some(asset_rel_path(game, &state.state_id, config.style))
                    };
                    rows.push(ManifestRow {
                        spec: ExampleSpec {
                            example_id,
                            state_id: state.state_id.clone(),
                            game,
                            rule,
                            target,
                            family: config.family,
                            style: config.style,
                            order,
                            variant,
                            ground_truth: truth,
                            labels: game.labels(),
                        },
                        cells: state.cells_text(),
                        asset_path,
                    });
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        (&a.spec.state_id, a.spec.rule.slug(), a.spec.target.slug(), a.spec.order.slug()).cmp(&(
            &b.spec.state_id,
            b.spec.rule.slug(),
            b.spec.target.slug(),
            b.spec.order.slug(),
        ))
    });

    let header = ManifestHeader {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: pool.seed,
        game,
        family: config.family,
        style: config.style,
        variant,
        n_states: pool.states.len(),
        config_digest: ManifestHeader::digest_fields(
            pool.seed,
            game,
            config.family,
            config.style,
            variant,
            pool.states.len(),
        ),
    };
    Ok(Manifest { header, rows })
}

/// Deterministic reduced subset for rate-limited endpoints: keeps the
/// image-first order only, and optionally the winner target only. The rule
/// is a pure function of row coordinates, so the same (state, rule, target,
/// order) cells survive in every configuration and the reduction is
/// idempotent.
pub fn subsample_api(manifest: &Manifest, winner_only: bool) -> Manifest {
    let rows = manifest
        .rows
        .iter()
        .filter(|r| {
            r.spec.order == Ordering::ImageFirst
                && (!winner_only || r.spec.target == Target::Winner)
        })
        .cloned()
        .collect();
    Manifest { header: manifest.header.clone(), rows }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        let mut buf = serde_json::to_string(&manifest.header)?;
        buf.push('\n');
        for row in &manifest.rows {
            buf.push_str(&serde_json::to_string(row)?);
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let f = std::fs::File::open(path)?;
    let reader = BufReader::new(f);
    let mut header: Option<ManifestHeader> = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let h: ManifestHeader =
                serde_json::from_str(&line).map_err(|e| ForgeError::ManifestLine {
                    line: 1,
                    msg: format!("bad header: {e}"),
                })?;
            if h.schema_version != SCHEMA_VERSION {
                return Err(ForgeError::VersionMismatch {
                    found: h.schema_version,
                    expected: SCHEMA_VERSION,
                });
            }
            header = Some(h);
        } else {
            let row: ManifestRow =
                serde_json::from_str(&line).map_err(|e| ForgeError::ManifestLine {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            rows.push(row);
        }
    }
    let header = header.ok_or(ForgeError::ManifestLine {
        line: 1,
        msg: "empty manifest".into(),
    })?;
    Ok(Manifest { header, rows })
}

/// Check that every (state, family, style) block contains each of the 8
/// (rule, target, order) combinations exactly once.
pub fn check_pairing_completeness(manifest: &Manifest) -> Result<()> {
    let mut per_state: BTreeMap<&str, Vec<(RuleCondition, Target, Ordering)>> = BTreeMap::new();
    for row in &manifest.rows {
        per_state
            .entry(row.spec.state_id.as_str())
            .or_default()
            .push((row.spec.rule, row.spec.target, row.spec.order));
    }
    for (state_id, mut combos) in per_state {
        combos.sort_by_key(|(r, t, o)| (r.slug(), t.slug(), o.slug()));
        combos.dedup();
        if combos.len() != 8 {
            return Err(ForgeError::InvalidState(format!(
                "state {state_id} has {} distinct (rule,target,order) combos, want 8",
                combos.len()
            )));
        }
    }
    Ok(())
}
