//! Paired significance testing: exact-binomial McNemar with Holm step-down
//! adjustment, and annotated comparison reports against a baseline run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::game::{Game, RuleCondition};
use crate::manifest::Manifest;
use crate::prompt::PromptFamily;
use crate::render::RenderStyle;
use crate::score::ScoreTable;

/// Discordant-pair summary for two conditions joined on aligned examples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedOutcomes {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    pub n_pairs: u64,
}

/// ln C(n, k) in log space, stable for large n.
fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Two-sided exact binomial McNemar test:
/// p = min(1, 2 * P[Bin(b+c, 1/2) <= min(b, c)]).
pub fn mcnemar_exact(pairs: PairedOutcomes) -> f64 {
    let n = pairs.b + pairs.c;
    if n == 0 {
        return 1.0;
    }
    let k = pairs.b.min(pairs.c);
    let ln_half_n = n as f64 * 0.5f64.ln();
    // Sum the lower tail in log space to avoid underflow at large n.
    let mut tail = 0.0f64;
    for i in 0..=k {
        tail += (ln_choose(n, i) + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}

/// Holm–Bonferroni step-down adjustment, order-preserving.
pub fn holm(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].partial_cmp(&pvals[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = (m - rank) as f64 * pvals[idx];
        running = running.max(scaled).min(1.0);
        adjusted[idx] = running;
    }
    adjusted
}

/// Join two score tables on example ids that appear in both, restricted to
/// the given manifest rows, and tally discordance. Condition A is the
/// baseline.
pub fn pair_outcomes(
    base: &ScoreTable,
    compare: &ScoreTable,
    example_ids: impl Iterator<Item = String>,
) -> PairedOutcomes {
    let mut out = PairedOutcomes::default();
    for id in example_ids {
        let (Some(&a), Some(&b)) = (base.correctness.get(&id), compare.correctness.get(&id))
        else {
            continue;
        };
        out.n_pairs += 1;
        match (a, b) {
            (true, false) => out.b += 1,
            (false, true) => out.c += 1,
            _ => {}
        }
    }
    out
}

/// One comparison cell in the annotated report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub game: Game,
    pub rule: RuleCondition,
    pub config: String,
    pub accuracy: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub b: u64,
    pub c: u64,
    pub n_pairs: u64,
}

/// Compare non-baseline runs against the baseline per (game, rule), pairing
/// rows on shared (state, rule, target, order) coordinates. Holm adjustment
/// is applied within each (game, rule) family across the comparison configs.
pub fn annotate_table(
    base: (&ScoreTable, &Manifest, &str),
    comparisons: &[(&ScoreTable, &Manifest, &str)],
) -> Vec<ComparisonCell> {
    let (base_table, base_manifest, _) = base;
    let mut cells: Vec<ComparisonCell> = Vec::new();
    let game = base_manifest.header.game;
    for rule in RuleCondition::BOTH {
        let mut raw: Vec<f64> = Vec::new();
        let mut partial: Vec<ComparisonCell> = Vec::new();
        for (table, manifest, name) in comparisons {
            // Join by coordinates: a comparison row pairs with the base row
            // sharing (state, rule, target, order).
            let mut b = 0u64;
            let mut c = 0u64;
            let mut n_pairs = 0u64;
            let base_by_coord: BTreeMap<(String, &str, &str), &str> = base_manifest
                .rows
                .iter()
                .filter(|r| r.spec.rule == rule)
                .map(|r| {
                    (
                        (r.spec.state_id.clone(), r.spec.target.slug(), r.spec.order.slug()),
                        r.spec.example_id.as_str(),
                    )
                })
                .collect();
            for row in manifest.rows.iter().filter(|r| r.spec.rule == rule) {
                let coord =
                    (row.spec.state_id.clone(), row.spec.target.slug(), row.spec.order.slug());
                let Some(base_id) = base_by_coord.get(&coord) else { continue };
                let (Some(&a_ok), Some(&b_ok)) = (
                    base_table.correctness.get(*base_id),
                    table.correctness.get(&row.spec.example_id),
                ) else {
                    continue;
                };
                n_pairs += 1;
                match (a_ok, b_ok) {
                    (true, false) => b += 1,
                    (false, true) => c += 1,
                    _ => {}
                }
            }
            let pairs = PairedOutcomes { b, c, n_pairs };
            let p = mcnemar_exact(pairs);
            raw.push(p);
            let acc = {
                let header = &manifest.header;
                table
                    .rule_aggregate(game, header.family, header.style, header.variant, rule)
                    .accuracy()
            };
            partial.push(ComparisonCell {
                game,
                rule,
                config: name.to_string(),
                accuracy: acc,
                p_raw: p,
                p_holm: 0.0,
                b,
                c,
                n_pairs,
            });
        }
        let adjusted = holm(&raw);
        for (cell, p_holm) in partial.iter_mut().zip(adjusted) {
            cell.p_holm = p_holm;
        }
        cells.extend(partial);
    }
    cells
}

pub fn report_csv(cells: &[ComparisonCell]) -> String {
    let mut out = String::from("game,rule,config,acc,p_raw,p_holm,b,c,n_pairs\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.6},{:.6},{},{},{}\n",
            cell.game.slug(),
            cell.rule.slug(),
            cell.config,
            cell.accuracy,
            cell.p_raw,
            cell.p_holm,
            cell.b,
            cell.c,
            cell.n_pairs
        ));
    }
    out
}

/// Wide table with Holm-adjusted p-value subscripts against the baseline.
pub fn report_markdown(cells: &[ComparisonCell], baseline_name: &str) -> String {
    let mut out = format!("Baseline: {baseline_name}\n\n| game | rule | config | accuracy (p_holm vs baseline) |\n|---|---|---|---|\n");
    for cell in cells {
        out.push_str(&format!(
            "| {} | {} | {} | {:.1} (p={:.3}) |\n",
            cell.game.slug(),
            cell.rule.slug(),
            cell.config,
            cell.accuracy,
            cell.p_holm
        ));
    }
    out
}

// Convenience wrapper so call sites can keep header-driven naming.
pub fn config_name(family: PromptFamily, style: RenderStyle) -> String {
    format!("{}+{}", family.slug(), style.slug())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{oracle_responder, run_manifest, OracleKind};
    use crate::game::Game;
    use crate::manifest::{expand, Config};
    use crate::prompt::ResponseVariant;
    use crate::sampler::{sample_game, SamplerConfig};
    use crate::score::score;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mcnemar_hand_values() {
        let p = mcnemar_exact(PairedOutcomes { b: 10, c: 0, n_pairs: 10 });
        assert!((p - 2.0 * 0.5f64.powi(10)).abs() < 1e-6, "p = {p}");
        assert!((p - 0.001953).abs() < 1e-5);
        assert_eq!(mcnemar_exact(PairedOutcomes { b: 7, c: 7, n_pairs: 14 }), 1.0);
        assert_eq!(mcnemar_exact(PairedOutcomes { b: 0, c: 0, n_pairs: 0 }), 1.0);
    }

    #[test]
    fn mcnemar_large_n_underflow_free() {
        // At b=1200 the true p ~ 2^-1199 is below f64's smallest positive
        // value; the computation must stay finite and report p < 1e-6.
        let p = mcnemar_exact(PairedOutcomes { b: 1200, c: 0, n_pairs: 1200 });
        assert!(p.is_finite() && p >= 0.0 && p < 1e-6);
        let p = mcnemar_exact(PairedOutcomes { b: 100, c: 0, n_pairs: 100 });
        assert!(p > 0.0 && p < 1e-6);
        let p = mcnemar_exact(PairedOutcomes { b: 600, c: 600, n_pairs: 1200 });
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn holm_hand_values() {
        assert_eq!(holm(&[0.03]), vec![0.03]);
        let adj = holm(&[0.01, 0.04]);
        assert!((adj[0] - 0.02).abs() < 1e-12);
        assert!((adj[1] - 0.04).abs() < 1e-12);
        let adj = holm(&[0.04, 0.01]);
        assert!((adj[0] - 0.04).abs() < 1e-12);
        assert!((adj[1] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn mcnemar_symmetry_and_holm_dominance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10_000 {
            let b = rng.gen_range(0..200u64);
            let c = rng.gen_range(0..200u64);
            let n = b + c + rng.gen_range(0..100u64);
            let p1 = mcnemar_exact(PairedOutcomes { b, c, n_pairs: n });
            let p2 = mcnemar_exact(PairedOutcomes { b: c, c: b, n_pairs: n });
            assert!((p1 - p2).abs() < 1e-12, "asymmetric at b={b} c={c}");
            assert!((0.0..=1.0).contains(&p1));

            let m = rng.gen_range(1..6usize);
            let pvals: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let adj = holm(&pvals);
            for (raw, a) in pvals.iter().zip(&adj) {
                assert!(a >= raw, "holm not dominant: {a} < {raw}");
                assert!(*a <= 1.0);
            }
            if m == 1 {
                assert_eq!(adj[0], pvals[0]);
            }
            // Monotone in sorted order.
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| pvals[x].partial_cmp(&pvals[y]).unwrap());
            for w in order.windows(2) {
                assert!(adj[w[0]] <= adj[w[1]] + 1e-12);
            }
        }
    }

    fn scored(
        game: Game,
        config: Config,
        kind: OracleKind,
    ) -> (ScoreTable, Manifest) {
        let cfg = SamplerConfig { seed: 21, n_states: 12, ttt_quotas: Some([4, 4, 2, 2]) };
        let pool = sample_game(game, &cfg).unwrap();
        let m = expand(&pool, config, ResponseVariant::Direct).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = run_manifest(&m, &oracle_responder(kind), dir.path(), None, 4).unwrap();
        (score(&r.records, &m).unwrap(), m)
    }

    #[test]
    fn self_comparison_yields_p_one() {
        let base_cfg = Config { family: PromptFamily::Base, style: RenderStyle::Base };
        let (t, m) = scored(Game::TicTacToe, base_cfg, OracleKind::Perfect);
        let cells = annotate_table((&t, &m, "base"), &[(&t, &m, "self")]);
        for cell in cells {
            assert_eq!(cell.p_raw, 1.0);
            assert_eq!(cell.p_holm, 1.0);
            assert_eq!(cell.b + cell.c, 0);
        }
    }

    #[test]
    fn perfect_vs_fixated_is_significant_on_inverse() {
        let base_cfg = Config { family: PromptFamily::Base, style: RenderStyle::Base };
        let alias_cfg = Config { family: PromptFamily::Alias, style: RenderStyle::Base };
        let (pt, pm) = scored(Game::TicTacToe, base_cfg, OracleKind::Perfect);
        let (ft, fm) = scored(Game::TicTacToe, alias_cfg, OracleKind::Fixated);
        let cells = annotate_table((&pt, &pm, "perfect"), &[(&ft, &fm, "fixated")]);
        let inv = cells.iter().find(|c| c.rule == RuleCondition::Inverse).unwrap();
        // Every inverse pair is discordant: base correct, fixated wrong.
        assert_eq!(inv.b, inv.n_pairs);
        assert_eq!(inv.c, 0);
        assert!(inv.n_pairs >= 48);
        assert!(inv.p_raw < 1e-6);
        assert!(inv.p_holm >= inv.p_raw);
        let std = cells.iter().find(|c| c.rule == RuleCondition::Standard).unwrap();
        assert_eq!(std.p_raw, 1.0);
    }

    #[test]
    fn reports_render() {
        let base_cfg = Config { family: PromptFamily::Base, style: RenderStyle::Base };
        let (t, m) = scored(Game::Reversi, base_cfg, OracleKind::Perfect);
        let cells = annotate_table((&t, &m, "base"), &[(&t, &m, "self")]);
        let csv = report_csv(&cells);
        assert!(csv.starts_with("game,rule,config"));
        let md = report_markdown(&cells, "base");
        assert!(md.contains("Baseline: base"));
    }
}
