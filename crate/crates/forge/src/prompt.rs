//! Construction of the five prompt families, target/ordering/format
//! variants, and per-game alias vocabularies.

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::game::{Game, PlayerLabel, RuleCondition, Target};
use crate::render::{RenderStyle, RenderedAsset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFamily {
    Base,
    Alias,
    SemAlias,
    Descriptive,
    TextOnly,
}

impl PromptFamily {
    /// The five main-experiment configurations pair prompt families with a
    /// rendering style; Descriptive and TextOnly are controls.
    pub const ALL: [PromptFamily; 5] = [
        PromptFamily::Base,
        PromptFamily::Alias,
        PromptFamily::SemAlias,
        PromptFamily::Descriptive,
        PromptFamily::TextOnly,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            PromptFamily::Base => "base",
            PromptFamily::Alias => "alias",
            PromptFamily::SemAlias => "semalias",
            PromptFamily::Descriptive => "descriptive",
            PromptFamily::TextOnly => "textonly",
        }
    }

    pub fn from_slug(s: &str) -> Option<PromptFamily> {
        PromptFamily::ALL.iter().copied().find(|f| f.slug() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    ImageFirst,
    TextFirst,
}

impl Ordering {
    pub const BOTH: [Ordering; 2] = [Ordering::ImageFirst, Ordering::TextFirst];

    pub fn slug(self) -> &'static str {
        match self {
            Ordering::ImageFirst => "if",
            Ordering::TextFirst => "tf",
        }
    }

    pub fn from_slug(s: &str) -> Option<Ordering> {
        match s {
            "if" => Some(Ordering::ImageFirst),
            "tf" => Some(Ordering::TextFirst),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseVariant {
    Direct,
    Cot,
}

impl ResponseVariant {
    pub const BOTH: [ResponseVariant; 2] = [ResponseVariant::Direct, ResponseVariant::Cot];

    pub fn slug(self) -> &'static str {
        match self {
            ResponseVariant::Direct => "direct",
            ResponseVariant::Cot => "cot",
        }
    }

    pub fn from_slug(s: &str) -> Option<ResponseVariant> {
        match s {
            "direct" => Some(ResponseVariant::Direct),
            "cot" => Some(ResponseVariant::Cot),
            _ => None,
        }
    }
}

/// Outcome-tag vocabulary for the alias prompt families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasSpec {
    pub game: Game,
    pub win_tag: String,
    pub lose_tag: String,
}

const FORBIDDEN_TAGS: &[&str] = &[
    "X", "O", "BLACK", "WHITE", "RED", "YELLOW", "A", "B", "WINNER", "LOSER", "WINS", "LOSES",
    "WIN", "LOSE",
];

impl AliasSpec {
    /// Default per-game tags: TicTacToe (POM, TOV); Reversi (KAP, POM);
    /// ConnectFour (TOV, POM); DotsAndBoxes (RIL, NEX).
    pub fn default_for(game: Game) -> AliasSpec {
        let (win, lose) = match game {
            Game::TicTacToe => ("POM", "TOV"),
            Game::Reversi => ("KAP", "POM"),
            Game::ConnectFour => ("TOV", "POM"),
            Game::DotsAndBoxes => ("RIL", "NEX"),
        };
        AliasSpec { game, win_tag: win.to_string(), lose_tag: lose.to_string() }
    }

    pub fn validate(&self) -> Result<()> {
        for tag in [&self.win_tag, &self.lose_tag] {
            if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_uppercase()) {
                return Err(ForgeError::InvalidArgument(format!(
                    "alias tag {tag:?} must be nonempty uppercase ASCII"
                )));
            }
            if FORBIDDEN_TAGS.contains(&tag.as_str()) {
                return Err(ForgeError::InvalidArgument(format!(
                    "alias tag {tag:?} collides with a canonical label or outcome word"
                )));
            }
        }
        if self.win_tag == self.lose_tag {
            return Err(ForgeError::InvalidArgument("alias tags must differ".into()));
        }
        Ok(())
    }

    pub fn tag_for(&self, target: Target) -> &str {
        match target {
            Target::Winner => &self.win_tag,
            Target::Loser => &self.lose_tag,
        }
    }
}

/// One evaluation item: every coordinate needed to build its prompt and
/// score its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub example_id: String,
    pub state_id: String,
    pub game: Game,
    pub rule: RuleCondition,
    pub target: Target,
    pub family: PromptFamily,
    pub style: RenderStyle,
    pub order: Ordering,
    pub variant: ResponseVariant,
    pub ground_truth: PlayerLabel,
    pub labels: (PlayerLabel, PlayerLabel),
}

impl ExampleSpec {
    /// `<game>-<state_id>-<rule>-<target>-<order>-<family>-<style>-<variant>`:
    /// a pure function of the coordinates, no counters.
    pub fn derive_example_id(
        game: Game,
        state_id: &str,
        rule: RuleCondition,
        target: Target,
        order: Ordering,
        family: PromptFamily,
        style: RenderStyle,
        variant: ResponseVariant,
    ) -> String {
        format!(
            "{}-{}-{}-{}-{}-{}-{}-{}",
            game.slug(),
            state_id,
            rule.slug(),
            target.slug(),
            order.slug(),
            family.slug(),
            style.slug(),
            variant.slug()
        )
    }
}

/// Game-framing sentence; the game is never named verbatim.
fn framing(game: Game) -> &'static str {
    match game {
        Game::TicTacToe => "You are given a 3x3 grid for a two-player game. Players are X and O.",
        Game::Reversi => {
            "You are given a 5x5 grid for a two-player game. Players are Black and White."
        }
        Game::ConnectFour => {
            "You are given a 4x4 vertical grid for a two-player game. Players are Red and Yellow."
        }
        Game::DotsAndBoxes => {
            "You are given a 6x6 dot grid for a two-player game. Players are A and B."
        }
    }
}

/// The rule clause condition, shared by canonical and alias phrasings. Line
/// games condition on owning a line; counting games condition on the
/// comparative, which flips with the rule.
fn rule_condition_clause(game: Game, rule: RuleCondition) -> String {
    match game {
        Game::TicTacToe => {
            "If a player has 3 in a row (horizontal, vertical, or diagonal)".to_string()
        }
        Game::ConnectFour => {
            "If a player has 4 in a row (horizontal, vertical, or diagonal)".to_string()
        }
        Game::Reversi => {
            let cmp = match rule {
                RuleCondition::Standard => "more",
                RuleCondition::Inverse => "fewer",
            };
            format!(
                "When the game ends, if a player has {cmp} pieces on the grid than the other player"
            )
        }
        Game::DotsAndBoxes => {
            let cmp = match rule {
                RuleCondition::Standard => "more",
                RuleCondition::Inverse => "fewer",
            };
            format!("When the game ends, if a player has claimed {cmp} boxes than the other player")
        }
    }
}

/// Whether the player named by the rule clause is the winner under `rule`.
/// Counting-game clauses already fold the rule into the comparative, so the
/// named player always wins there; line-game clauses name the line owner,
/// who loses under the inverse rule.
fn clause_subject_wins(game: Game, rule: RuleCondition) -> bool {
    if game.is_line_game() {
        rule == RuleCondition::Standard
    } else {
        true
    }
}

fn canonical_rule_sentence(game: Game, rule: RuleCondition) -> String {
    let clause = rule_condition_clause(game, rule);
    if clause_subject_wins(game, rule) {
        format!("{clause}, that player wins, and the other player loses.")
    } else {
        format!("{clause}, that player loses, and the other player wins.")
    }
}

fn alias_rule_sentence(game: Game, rule: RuleCondition, alias: &AliasSpec) -> String {
    let clause = rule_condition_clause(game, rule);
    let (subject, other) = if clause_subject_wins(game, rule) {
        (&alias.win_tag, &alias.lose_tag)
    } else {
        (&alias.lose_tag, &alias.win_tag)
    };
    format!("{clause}, that player is {subject}, and the other player is {other}.")
}

fn descriptive_question(game: Game, rule: RuleCondition, target: Target) -> String {
    // The asked-for property is the one the target player holds.
    let owner_side = (rule == RuleCondition::Standard) == (target == Target::Winner);
    match game {
        Game::TicTacToe | Game::ConnectFour => {
            let n = game.line_len().unwrap();
            if owner_side {
                format!("Which player has {n} in a row (horizontal, vertical, or diagonal)?")
            } else {
                format!("Which player does not have {n} in a row (horizontal, vertical, or diagonal)?")
            }
        }
        Game::Reversi => {
            let cmp = if owner_side { "more" } else { "fewer" };
            format!("Which player has {cmp} pieces?")
        }
        Game::DotsAndBoxes => {
            let cmp = if owner_side { "more" } else { "fewer" };
            format!("Which player has {cmp} claimed boxes?")
        }
    }
}

/// The family-specific prompt text (framing, rule sentence, question), before
/// the answer-format suffix.
pub fn build_prompt(spec: &ExampleSpec, alias: &AliasSpec) -> Result<String> {
    if alias.game != spec.game {
        return Err(ForgeError::InvalidArgument(format!(
            "alias vocabulary is for {:?}, spec is for {:?}",
            alias.game, spec.game
        )));
    }
    alias.validate()?;
    let framing = framing(spec.game);
    let prompt = match spec.family {
        PromptFamily::Base | PromptFamily::TextOnly => {
            let rule = canonical_rule_sentence(spec.game, spec.rule);
            format!(
                "{framing} {rule} The game has ended. Who is the {}?",
                spec.target.word()
            )
        }
        PromptFamily::Alias => {
            let rule = alias_rule_sentence(spec.game, spec.rule, alias);
            format!(
                "{framing} Outcome tags: {} and {}. {rule} The game has ended. Who is the {}?",
                alias.win_tag,
                alias.lose_tag,
                alias.tag_for(spec.target)
            )
        }
        PromptFamily::SemAlias => {
            let rule = alias_rule_sentence(spec.game, spec.rule, alias);
            format!(
                "{framing} Outcome tags: {} and {}. {} means favorable outcome; {} means unfavorable outcome. {rule} The game has ended. Who is the {}?",
                alias.win_tag,
                alias.lose_tag,
                alias.win_tag,
                alias.lose_tag,
                alias.tag_for(spec.target)
            )
        }
        PromptFamily::Descriptive => {
            let q = descriptive_question(spec.game, spec.rule, spec.target);
            format!("{framing} The game has ended. {q}")
        }
    };
    Ok(prompt)
}

/// Answer-format instruction appended to every prompt.
pub fn format_suffix(variant: ResponseVariant, labels: (PlayerLabel, PlayerLabel)) -> String {
    match variant {
        ResponseVariant::Direct => format!(
            "Answer with only {} or {}. Do not add any other text.",
            labels.0, labels.1
        ),
        ResponseVariant::Cot => {
            "Reason step by step. After that, give the answer inside \\boxed{ }.".to_string()
        }
    }
}

/// Prompt text plus the answer-format suffix; for TextOnly, the ASCII board
/// follows under a `Board:` header.
pub fn full_prompt_text(spec: &ExampleSpec, alias: &AliasSpec, ascii: Option<&str>) -> Result<String> {
    let prompt = build_prompt(spec, alias)?;
    let suffix = format_suffix(spec.variant, spec.labels);
    let mut text = format!("{prompt} {suffix}");
    if spec.family == PromptFamily::TextOnly {
        let board = ascii.ok_or_else(|| {
            ForgeError::InvalidArgument("text-only prompt needs an ascii board".into())
        })?;
        text.push_str("\n\nBoard:\n");
        text.push_str(board);
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessagePart {
    Text(String),
    /// PNG bytes of the rendered board.
    Image(Vec<u8>),
}

/// Ordered message parts for one example.
pub fn assemble_message(
    spec: &ExampleSpec,
    prompt: String,
    asset: Option<&RenderedAsset>,
) -> Result<Vec<MessagePart>> {
    if spec.family == PromptFamily::TextOnly {
        if asset.is_some() {
            return Err(ForgeError::InvalidArgument(
                "text-only examples do not take an image".into(),
            ));
        }
        return Ok(vec![MessagePart::Text(prompt)]);
    }
    let asset = asset.ok_or_else(|| {
        ForgeError::InvalidArgument("image examples need a rendered asset".into())
    })?;
    Ok(match spec.order {
        Ordering::ImageFirst => vec![
            MessagePart::Image(asset.png.clone()),
            MessagePart::Text(prompt),
        ],
        Ordering::TextFirst => vec![
            MessagePart::Text(prompt),
            MessagePart::Image(asset.png.clone()),
        ],
    })
}

/// Full prompt catalog: every (game, family, rule, target) prompt plus the
/// two answer-format suffixes, for manual audit.
pub fn catalog() -> String {
    let mut out = String::new();
    for game in Game::ALL {
        let alias = AliasSpec::default_for(game);
        for family in PromptFamily::ALL {
            for rule in RuleCondition::BOTH {
                for target in Target::BOTH {
                    let spec = ExampleSpec {
                        example_id: String::new(),
                        state_id: String::new(),
                        game,
                        rule,
                        target,
                        family,
                        style: RenderStyle::Base,
                        order: Ordering::ImageFirst,
                        variant: ResponseVariant::Direct,
                        ground_truth: game.labels().0,
                        labels: game.labels(),
                    };
                    let prompt = build_prompt(&spec, &alias).unwrap();
                    out.push_str(&format!(
                        "[{} {} {} {}]\n{}\n\n",
                        game.slug(),
                        family.slug(),
                        rule.slug(),
                        target.slug(),
                        prompt
                    ));
                }
            }
        }
        out.push_str(&format!(
            "[{} direct suffix]\n{}\n\n",
            game.slug(),
            format_suffix(ResponseVariant::Direct, game.labels())
        ));
    }
    out.push_str(&format!(
        "[cot suffix]\n{}\n\n",
        format_suffix(ResponseVariant::Cot, Game::TicTacToe.labels())
    ));
    out.push_str("[textonly header]\nBoard:\n");
    out
}
