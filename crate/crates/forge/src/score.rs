//! Parsing raw model text into labels or counts, and aggregating accuracy,
//! standard-minus-inverse gaps, and counting-bias rates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::client::EvalRecord;
use crate::error::{ForgeError, Result};
use crate::game::{Game, PlayerLabel, RuleCondition, Target};
use crate::manifest::Manifest;
use crate::prompt::{Ordering, PromptFamily, ResponseVariant};
use crate::render::RenderStyle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedAnswer {
    Label(PlayerLabel),
    Count(i64),
    Invalid(String),
}

fn whole_word_count(text: &str, word: &str) -> usize {
    let lower = text.to_lowercase();
    let word = word.to_lowercase();
    let bytes = lower.as_bytes();
    let mut count = 0;
    let mut from = 0;
    while let Some(pos) = lower[from..].find(&word) {
        let start = from + pos;
        let end = start + word.len();
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let after_ok = end == lower.len() || !bytes[end].is_ascii_alphanumeric();
        if before_ok && after_ok {
            count += 1;
        }
        from = end;
    }
    count
}

/// Case-insensitive whole-word match of exactly one of the two labels.
pub fn parse_direct(text: &str, labels: (PlayerLabel, PlayerLabel)) -> ParsedAnswer {
    let text = text.trim();
    let a = whole_word_count(text, labels.0.as_str());
    let b = whole_word_count(text, labels.1.as_str());
    match (a > 0, b > 0) {
        (true, false) => ParsedAnswer::Label(labels.0),
        (false, true) => ParsedAnswer::Label(labels.1),
        (true, true) => ParsedAnswer::Invalid("both labels present".to_string()),
        (false, false) => ParsedAnswer::Invalid("no label present".to_string()),
    }
}

/// Content of the last `\boxed{...}` occurrence, parsed as a direct answer;
/// with no box, falls back to the final nonempty line.
pub fn parse_boxed(text: &str, labels: (PlayerLabel, PlayerLabel)) -> ParsedAnswer {
    let mut last_box: Option<&str> = None;
    let mut from = 0;
    while let Some(pos) = text[from..].find("\\boxed{") {
        let start = from + pos + "\\boxed{".len();
        match text[start..].find('}') {
            Some(close) => {
                last_box = Some(&text[start..start + close]);
                from = start + close + 1;
            }
            None => break,
        }
    }
    match last_box {
        Some(content) => parse_direct(content, labels),
        None => {
            let last_line = text.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
            parse_direct(last_line, labels)
        }
    }
}

/// Last `{<integer>}` occurrence as a count.
pub fn parse_curly(text: &str) -> ParsedAnswer {
    let mut last: Option<i64> = None;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(close) = text[i + 1..].find('}') {
                let inner = text[i + 1..i + 1 + close].trim();
                if !inner.is_empty() {
                    if let Ok(n) = inner.parse::<i64>() {
                        last = Some(n);
                    }
                }
                i += close + 2;
                continue;
            }
        }
        i += 1;
    }
    match last {
        Some(n) => ParsedAnswer::Count(n),
        None => ParsedAnswer::Invalid("no bracketed number".to_string()),
    }
}

/// Parse one record according to its response variant.
pub fn parse_record(
    text: &str,
    variant: ResponseVariant,
    labels: (PlayerLabel, PlayerLabel),
) -> ParsedAnswer {
    match variant {
        ResponseVariant::Direct => parse_direct(text, labels),
        ResponseVariant::Cot => parse_boxed(text, labels),
    }
}

/// Full coordinate of one accuracy cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub game: Game,
    pub family: PromptFamily,
    pub style: RenderStyle,
    pub rule: RuleCondition,
    pub order: Ordering,
    pub target: Target,
    pub variant: ResponseVariant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n: usize,
    pub n_correct: usize,
    pub n_invalid: usize,
}

impl CellStats {
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 { 0.0 } else { 100.0 * self.n_correct as f64 / self.n as f64 }
    }

    fn merge(&mut self, other: &CellStats) {
        self.n += other.n;
        self.n_correct += other.n_correct;
        self.n_invalid += other.n_invalid;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub cells: BTreeMap<CellKey, CellStats>,
    /// Per-example correctness, keyed by example_id, for paired tests.
    pub correctness: BTreeMap<String, bool>,
}

impl ScoreTable {
    /// Aggregate over targets and orders for one (game, family, style,
    /// variant, rule), the shape the per-rule accuracy columns use.
    pub fn rule_aggregate(
        &self,
        game: Game,
        family: PromptFamily,
        style: RenderStyle,
        variant: ResponseVariant,
        rule: RuleCondition,
    ) -> CellStats {
        let mut agg = CellStats::default();
        for (k, v) in &self.cells {
            if k.game == game
                && k.family == family
                && k.style == style
                && k.variant == variant
                && k.rule == rule
            {
                agg.merge(v);
            }
        }
        agg
    }

    /// Standard accuracy minus inverse accuracy, in points.
    pub fn gap(
        &self,
        game: Game,
        family: PromptFamily,
        style: RenderStyle,
        variant: ResponseVariant,
    ) -> f64 {
        let s = self.rule_aggregate(game, family, style, variant, RuleCondition::Standard);
        let i = self.rule_aggregate(game, family, style, variant, RuleCondition::Inverse);
        s.accuracy() - i.accuracy()
    }

    pub fn total_n(&self) -> usize {
        self.cells.values().map(|c| c.n).sum()
    }

    pub fn merge(&mut self, other: &ScoreTable) {
        for (k, v) in &other.cells {
            self.cells.entry(*k).or_default().merge(v);
        }
        self.correctness
            .extend(other.correctness.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

/// Unweighted mean of per-game accuracies for one (family, style, variant,
/// rule); the cross-game average columns are macro-averages.
pub fn macro_average(
    table: &ScoreTable,
    games: &[Game],
    family: PromptFamily,
    style: RenderStyle,
    variant: ResponseVariant,
    rule: RuleCondition,
) -> f64 {
    let accs: Vec<f64> = games
        .iter()
        .map(|g| table.rule_aggregate(*g, family, style, variant, rule).accuracy())
        .collect();
    if accs.is_empty() { 0.0 } else { accs.iter().sum::<f64>() / accs.len() as f64 }
}

/// Score a completed run. Records must be total over the manifest; answers
/// that fail to parse (or errored requests) count as incorrect and are also
/// tallied in the invalid column.
pub fn score(records: &[EvalRecord], manifest: &Manifest) -> Result<ScoreTable> {
    let by_id: BTreeMap<&str, &EvalRecord> =
        records.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let missing: Vec<&str> = manifest
        .rows
        .iter()
        .filter(|row| !by_id.contains_key(row.spec.example_id.as_str()))
        .map(|row| row.spec.example_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(ForgeError::PartialRun {
            missing: missing.len(),
            first: missing[0].to_string(),
        });
    }

    let mut table = ScoreTable::default();
    for row in &manifest.rows {
        let rec = by_id[row.spec.example_id.as_str()];
        let parsed = if rec.error.is_some() {
            ParsedAnswer::Invalid("request failed".to_string())
        } else {
            parse_record(&rec.raw_text, row.spec.variant, row.spec.labels)
        };
        let (correct, invalid) = match parsed {
            ParsedAnswer::Label(l) => (l == row.spec.ground_truth, false),
            ParsedAnswer::Count(_) => (false, true),
            ParsedAnswer::Invalid(_) => (false, true),
        };
        let key = CellKey {
            game: row.spec.game,
            family: row.spec.family,
            style: row.spec.style,
            rule: row.spec.rule,
            order: row.spec.order,
            target: row.spec.target,
            variant: row.spec.variant,
        };
        let cell = table.cells.entry(key).or_default();
        cell.n += 1;
        if correct {
            cell.n_correct += 1;
        }
        if invalid {
            cell.n_invalid += 1;
        }
        table.correctness.insert(row.spec.example_id.clone(), correct);
    }
    Ok(table)
}

/// Counting-task bias: the fraction of parsed counts equal to the
/// per-example prior. Invalid answers leave the bias denominator but are
/// reported separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasStats {
    pub n: usize,
    pub n_parsed: usize,
    pub n_correct: usize,
    pub n_prior: usize,
    pub n_invalid: usize,
}

impl BiasStats {
    pub fn bias_rate(&self) -> f64 {
        if self.n_parsed == 0 { 0.0 } else { 100.0 * self.n_prior as f64 / self.n_parsed as f64 }
    }

    pub fn accuracy(&self) -> f64 {
        if self.n == 0 { 0.0 } else { 100.0 * self.n_correct as f64 / self.n as f64 }
    }
}

/// `answers` pairs each raw response with its (ground truth, prior count).
pub fn bias_rate(answers: &[(String, i64, Option<i64>)]) -> Result<BiasStats> {
    let mut stats = BiasStats::default();
    for (text, truth, prior) in answers {
        let prior = prior.ok_or_else(|| {
            ForgeError::Config("bias scoring needs a prior count per example".to_string())
        })?;
        stats.n += 1;
        match parse_curly(text) {
            ParsedAnswer::Count(n) => {
                stats.n_parsed += 1;
                if n == *truth {
                    stats.n_correct += 1;
                }
                if n == prior {
                    stats.n_prior += 1;
                }
            }
            _ => stats.n_invalid += 1,
        }
    }
    Ok(stats)
}

/// Long-format CSV: one line per cell.
pub fn table_csv(table: &ScoreTable) -> String {
    let mut out = String::from("game,family,style,variant,rule,order,target,n,n_correct,n_invalid,accuracy\n");
    for (k, v) in &table.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.4}\n",
            k.game.slug(),
            k.family.slug(),
            k.style.slug(),
            k.variant.slug(),
            k.rule.slug(),
            k.order.slug(),
            k.target.slug(),
            v.n,
            v.n_correct,
            v.n_invalid,
            v.accuracy()
        ));
    }
    out
}

/// Wide per-rule table with the standard-minus-inverse gap column.
pub fn table_markdown(table: &ScoreTable) -> String {
    let mut combos: Vec<(Game, PromptFamily, RenderStyle, ResponseVariant)> = table
        .cells
        .keys()
        .map(|k| (k.game, k.family, k.style, k.variant))
        .collect();
    combos.sort_by_key(|(g, f, s, v)| (g.slug(), f.slug(), s.slug(), v.slug()));
    combos.dedup();
    let mut out = String::from("| game | config | variant | standard | inverse | gap |\n|---|---|---|---|---|---|\n");
    for (game, family, style, variant) in combos {
        let s = table.rule_aggregate(game, family, style, variant, RuleCondition::Standard);
        let i = table.rule_aggregate(game, family, style, variant, RuleCondition::Inverse);
        out.push_str(&format!(
            "| {} | {}+{} | {} | {:.1} | {:.1} | {:.1} |\n",
            game.slug(),
            family.slug(),
            style.slug(),
            variant.slug(),
            s.accuracy(),
            i.accuracy(),
            s.accuracy() - i.accuracy()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{oracle_responder, run_manifest, OracleKind};
    use crate::manifest::{expand, Config};
    use crate::sampler::{sample_game, SamplerConfig};

    fn labels_ttt() -> (PlayerLabel, PlayerLabel) {
        Game::TicTacToe.labels()
    }

    fn labels_reversi() -> (PlayerLabel, PlayerLabel) {
        Game::Reversi.labels()
    }

    #[test]
    fn direct_parser_fixtures() {
        assert_eq!(parse_direct("X", labels_ttt()), ParsedAnswer::Label(PlayerLabel::X));
        assert_eq!(
            parse_direct("The winner is Black.", labels_reversi()),
            ParsedAnswer::Label(PlayerLabel::Black)
        );
        assert!(matches!(parse_direct("X or O", labels_ttt()), ParsedAnswer::Invalid(_)));
        assert!(matches!(parse_direct("no idea", labels_ttt()), ParsedAnswer::Invalid(_)));
        // Whole-word: "OX" contains neither label as a word.
        assert!(matches!(parse_direct("OX", labels_ttt()), ParsedAnswer::Invalid(_)));
        assert_eq!(parse_direct("  o  ", labels_ttt()), ParsedAnswer::Label(PlayerLabel::O));
        assert_eq!(
            parse_direct("black wins? no: BLACK", labels_reversi()),
            ParsedAnswer::Label(PlayerLabel::Black)
        );
    }

    #[test]
    fn boxed_parser_fixtures() {
        assert_eq!(
            parse_boxed("reasoning... \\boxed{White}", labels_reversi()),
            ParsedAnswer::Label(PlayerLabel::White)
        );
        assert_eq!(
            parse_boxed("\\boxed{X} wait no \\boxed{O}", labels_ttt()),
            ParsedAnswer::Label(PlayerLabel::O)
        );
        assert_eq!(
            parse_boxed(
                "thinking about Red and Yellow\nAnswer: Red",
                Game::ConnectFour.labels()
            ),
            ParsedAnswer::Label(PlayerLabel::Red)
        );
        assert!(matches!(
            parse_boxed("\\boxed{X or O}", labels_ttt()),
            ParsedAnswer::Invalid(_)
        ));
    }

    #[test]
    fn curly_parser_fixtures() {
        assert_eq!(parse_curly("{4}"), ParsedAnswer::Count(4));
        assert_eq!(parse_curly("maybe {3} or {5}"), ParsedAnswer::Count(5));
        assert!(matches!(parse_curly("four"), ParsedAnswer::Invalid(_)));
        assert_eq!(parse_curly("{ 12 }"), ParsedAnswer::Count(12));
        assert!(matches!(parse_curly("{x}"), ParsedAnswer::Invalid(_)));
    }

    #[test]
    fn parser_round_trip_over_all_labels() {
        for game in Game::ALL {
            let labels = game.labels();
            for label in [labels.0, labels.1] {
                assert_eq!(parse_direct(label.as_str(), labels), ParsedAnswer::Label(label));
                let cot = format!("step one... step two. \\boxed{{{}}}", label.as_str());
                assert_eq!(parse_boxed(&cot, labels), ParsedAnswer::Label(label));
            }
        }
        for n in 0..20 {
            assert_eq!(parse_curly(&format!("{{{n}}}")), ParsedAnswer::Count(n));
        }
    }

    fn scored_oracle(game: Game, kind: OracleKind) -> (ScoreTable, Manifest) {
        let cfg = SamplerConfig { seed: 3, n_states: 12, ttt_quotas: Some([4, 4, 2, 2]) };
        let pool = sample_game(game, &cfg).unwrap();
        let m = expand(
            &pool,
            Config { family: PromptFamily::Base, style: RenderStyle::Base },
            ResponseVariant::Direct,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(&m, &oracle_responder(kind), dir.path(), None, 4).unwrap();
        (score(&r.records, &m).unwrap(), m)
    }

    #[test]
    fn perfect_oracle_scores_100_everywhere() {
        for game in Game::ALL {
            let (table, m) = scored_oracle(game, OracleKind::Perfect);
            assert_eq!(table.total_n(), m.rows.len());
            for stats in table.cells.values() {
                assert_eq!(stats.n_correct, stats.n);
            }
        }
    }

    #[test]
    fn fixated_oracle_gap_is_100_points() {
        let (table, _) = scored_oracle(Game::TicTacToe, OracleKind::Fixated);
        let s = table.rule_aggregate(
            Game::TicTacToe,
            PromptFamily::Base,
            RenderStyle::Base,
            ResponseVariant::Direct,
            RuleCondition::Standard,
        );
        let i = table.rule_aggregate(
            Game::TicTacToe,
            PromptFamily::Base,
            RenderStyle::Base,
            ResponseVariant::Direct,
            RuleCondition::Inverse,
        );
        assert_eq!(s.accuracy(), 100.0);
        assert_eq!(i.accuracy(), 0.0);
        assert_eq!(
            table.gap(Game::TicTacToe, PromptFamily::Base, RenderStyle::Base, ResponseVariant::Direct),
            100.0
        );
    }

    #[test]
    fn independent_tally_agrees_with_cells() {
        let (table, m) = scored_oracle(Game::Reversi, OracleKind::UniformRandom(4));
        // One-pass recount straight from correctness, no cell machinery.
        let mut recount: BTreeMap<CellKey, (usize, usize)> = BTreeMap::new();
        for row in &m.rows {
            let key = CellKey {
                game: row.spec.game,
                family: row.spec.family,
                style: row.spec.style,
                rule: row.spec.rule,
                order: row.spec.order,
                target: row.spec.target,
                variant: row.spec.variant,
            };
            let e = recount.entry(key).or_default();
            e.0 += 1;
            if table.correctness[&row.spec.example_id] {
                e.1 += 1;
            }
        }
        assert_eq!(recount.len(), table.cells.len());
        for (key, (n, n_correct)) in recount {
            let cell = table.cells[&key];
            assert_eq!((cell.n, cell.n_correct), (n, n_correct));
        }
        // Aggregates equal sums of constituent cells.
        let agg = table.rule_aggregate(
            Game::Reversi,
            PromptFamily::Base,
            RenderStyle::Base,
            ResponseVariant::Direct,
            RuleCondition::Standard,
        );
        let sum: usize = table
            .cells
            .iter()
            .filter(|(k, _)| k.rule == RuleCondition::Standard)
            .map(|(_, v)| v.n)
            .sum();
        assert_eq!(agg.n, sum);
    }

    #[test]
    fn missing_records_are_a_partial_run_error() {
        let cfg = SamplerConfig { seed: 3, n_states: 12, ttt_quotas: Some([4, 4, 2, 2]) };
        let pool = sample_game(Game::TicTacToe, &cfg).unwrap();
        let m = expand(
            &pool,
            Config { family: PromptFamily::Base, style: RenderStyle::Base },
            ResponseVariant::Direct,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(&m, &oracle_responder(OracleKind::Perfect), dir.path(), None, 4)
            .unwrap();
        let partial = &r.records[..r.records.len() - 3];
        assert!(matches!(score(partial, &m), Err(ForgeError::PartialRun { missing: 3, .. })));
    }

    #[test]
    fn invalid_counts_as_incorrect() {
        let cfg = SamplerConfig { seed: 3, n_states: 12, ttt_quotas: Some([4, 4, 2, 2]) };
        let pool = sample_game(Game::TicTacToe, &cfg).unwrap();
        let m = expand(
            &pool,
            Config { family: PromptFamily::Base, style: RenderStyle::Base },
            ResponseVariant::Direct,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(&m, &oracle_responder(OracleKind::Perfect), dir.path(), None, 4)
            .unwrap();
        let mut records = r.records.clone();
        records[0].raw_text = "garbled".to_string();
        let table = score(&records, &m).unwrap();
        let total_correct: usize = table.cells.values().map(|c| c.n_correct).sum();
        let total_invalid: usize = table.cells.values().map(|c| c.n_invalid).sum();
        assert_eq!(total_correct, m.rows.len() - 1);
        assert_eq!(total_invalid, 1);
    }

    #[test]
    fn bias_rate_fixtures() {
        // All answers equal the prior.
        let answers: Vec<(String, i64, Option<i64>)> =
            (0..4).map(|_| ("{2}".to_string(), 3, Some(2))).collect();
        let s = bias_rate(&answers).unwrap();
        assert_eq!(s.bias_rate(), 100.0);
        assert_eq!(s.accuracy(), 0.0);

        // All answers equal ground truth != prior.
        let answers: Vec<(String, i64, Option<i64>)> =
            (0..4).map(|_| ("{3}".to_string(), 3, Some(2))).collect();
        let s = bias_rate(&answers).unwrap();
        assert_eq!(s.bias_rate(), 0.0);
        assert_eq!(s.accuracy(), 100.0);

        // Bird with 3 legs, prior 2, answers {2,2,3,5}: bias 50, accuracy 25.
        let answers: Vec<(String, i64, Option<i64>)> = ["{2}", "{2}", "{3}", "{5}"]
            .iter()
            .map(|t| (t.to_string(), 3, Some(2)))
            .collect();
        let s = bias_rate(&answers).unwrap();
        assert_eq!(s.bias_rate(), 50.0);
        assert_eq!(s.accuracy(), 25.0);

        // Missing prior is a configuration error.
        let answers = vec![("{2}".to_string(), 3, None)];
        assert!(matches!(bias_rate(&answers), Err(ForgeError::Config(_))));

        // Invalid answers leave the bias denominator.
        let answers: Vec<(String, i64, Option<i64>)> = ["{2}", "nope"]
            .iter()
            .map(|t| (t.to_string(), 3, Some(2)))
            .collect();
        let s = bias_rate(&answers).unwrap();
        assert_eq!(s.n_invalid, 1);
        assert_eq!(s.bias_rate(), 100.0);
    }

    #[test]
    fn csv_and_markdown_render() {
        let (table, _) = scored_oracle(Game::DotsAndBoxes, OracleKind::Perfect);
        let csv = table_csv(&table);
        assert!(csv.starts_with("game,family,style"));
        assert!(csv.lines().count() > 1);
        let md = table_markdown(&table);
        assert!(md.contains("| dnb | base+base | direct | 100.0 | 100.0 | 0.0 |"));
    }
}
