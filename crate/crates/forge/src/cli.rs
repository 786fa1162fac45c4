//! Command-line entry point wiring the pipeline:
//! gen -> render -> expand -> eval -> score -> stats, plus synth/transform.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::client::{
    load_run, oracle_responder, run_manifest, EndpointConfig, HttpResponder, OracleKind, Responder,
};
use crate::error::{ForgeError, Result};
use crate::game::Game;
use crate::manifest::{
    asset_rel_path, expand, manifest_file_name, read_manifest, write_manifest, Config, Manifest,
};
use crate::prompt::{catalog, PromptFamily, ResponseVariant};
use crate::render::{flip_vertical, glyphs_for, render, RenderStyle, DEFAULT_PX};
use crate::sampler::{read_pool, sample_game, write_pool, SamplerConfig, StatePool};
use crate::score::{score, table_csv, table_markdown, ScoreTable};
use crate::stats::{annotate_table, config_name, report_csv, report_markdown};
use crate::synth::{alias_counting_prompt, gen_synth, write_synth, SynthItem};
use crate::{SCHEMA_VERSION, TOOL_VERSION};

/// Exit status classes: usage errors exit 1, data errors exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(ForgeError),
}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::InvalidArgument(_) | ForgeError::Config(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other),
        }
    }
}

pub type CliResult = std::result::Result<(), CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "forge",
    version = concat!(env!("CARGO_PKG_VERSION"), " (schema 1)"),
    about = "Deterministic game-outcome benchmark generator and evaluation harness"
)]
pub struct Cli {
    /// Optional TOML config file; values are overridden by FORGE_*
    /// environment variables, which are overridden by flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Sample a balanced pool of terminal game states.
    Gen {
        #[arg(long)]
        game: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render every pool state in one or all styles.
    Render {
        #[arg(long)]
        pool: PathBuf,
        /// base, checkerboard, or glyph; omit for all three.
        #[arg(long)]
        style: Option<String>,
        #[arg(long, default_value_t = DEFAULT_PX)]
        px: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand a pool into an evaluation manifest.
    Expand {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "base")]
        style: String,
        #[arg(long, default_value = "direct")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a manifest against an endpoint or a synthetic oracle.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// perfect, fixated, or random:SEED; replaces the network.
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        concurrency: Option<usize>,
        /// Root directory holding rendered assets.
        #[arg(long)]
        assets: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a completed run.
    Score {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a wide markdown table ("md").
        #[arg(long)]
        table: Option<String>,
    },
    /// Paired McNemar/Holm comparison of runs against a baseline run.
    Stats {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, num_args = 1..)]
        compare: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the procedural leg-counting glyph dataset.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = crate::synth::DEFAULT_SYNTH_N)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Counterfactual transforms of a synth dataset.
    Transform {
        #[arg(long)]
        flip: bool,
        /// Object phrase for the generic-ITEM counting prompt.
        #[arg(long)]
        alias: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the full prompt catalog.
    Prompts {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full offline pipeline: pools, renders, manifests, oracle runs,
    /// scores, and stats for every game and main configuration.
    All {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        concurrency: Option<usize>,
        /// Comma-separated: direct, cot.
        #[arg(long, default_value = "direct")]
        variants: String,
        /// Skip image rendering (oracle runs never read pixels).
        #[arg(long)]
        no_render: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Layered option sources: config file < environment < flags.
#[derive(Debug, Default, Clone)]
pub struct Layered {
    pub seed: Option<u64>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub concurrency: Option<usize>,
    pub oracle: Option<String>,
}

impl Layered {
    pub fn load(config_path: Option<&Path>) -> Result<Layered> {
        let mut layer = Layered::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)?;
            let value: toml::Value = text
                .parse()
                .map_err(|e| ForgeError::Config(format!("{}: {e}", path.display())))?;
            let get = |k: &str| value.get(k).cloned();
            if let Some(v) = get("seed").and_then(|v| v.as_integer()) {
                layer.seed = Some(v as u64);
            }
            if let Some(v) = get("endpoint").and_then(|v| v.as_str().map(String::from)) {
                layer.endpoint = Some(v);
            }
            if let Some(v) = get("model").and_then(|v| v.as_str().map(String::from)) {
                layer.model = Some(v);
            }
            if let Some(v) = get("concurrency").and_then(|v| v.as_integer()) {
                layer.concurrency = Some(v as usize);
            }
            if let Some(v) = get("oracle").and_then(|v| v.as_str().map(String::from)) {
                layer.oracle = Some(v);
            }
        }
        let env = |k: &str| std::env::var(k).ok();
        if let Some(v) = env("FORGE_SEED") {
            layer.seed = Some(v.parse().map_err(|_| {
                ForgeError::Config(format!("FORGE_SEED {v:?} is not an integer"))
            })?);
        }
        if let Some(v) = env("FORGE_ENDPOINT") {
            layer.endpoint = Some(v);
        }
        if let Some(v) = env("FORGE_MODEL") {
            layer.model = Some(v);
        }
        if let Some(v) = env("FORGE_CONCURRENCY") {
            layer.concurrency = Some(v.parse().map_err(|_| {
                ForgeError::Config(format!("FORGE_CONCURRENCY {v:?} is not an integer"))
            })?);
        }
        if let Some(v) = env("FORGE_ORACLE") {
            layer.oracle = Some(v);
        }
        Ok(layer)
    }
}

#[derive(Serialize)]
struct Snapshot<'a> {
    tool_version: &'a str,
    schema_version: u32,
    command: String,
}

/// Resolved-config snapshot and tool-version stamp. Directory outputs get
/// `resolved-config.json` inside; file outputs get a `.config.json` sibling.
fn write_snapshot(out: &Path, is_dir: bool, command: &str) -> Result<()> {
    let snap = Snapshot {
        tool_version: TOOL_VERSION,
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
    };
    let path = if is_dir {
        std::fs::create_dir_all(out)?;
        out.join("resolved-config.json")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".config.json");
        out.with_file_name(name)
    };
    std::fs::write(path, serde_json::to_vec_pretty(&snap)?)?;
    Ok(())
}

fn parse_game(s: &str) -> std::result::Result<Game, CliError> {
    Game::from_slug(s).ok_or_else(|| {
        CliError::Usage(format!("unknown game {s:?}; expected ttt, reversi, c4, or dnb"))
    })
}

fn parse_style(s: &str) -> std::result::Result<RenderStyle, CliError> {
    RenderStyle::from_slug(s).ok_or_else(|| {
        CliError::Usage(format!("unknown style {s:?}; expected base, checkerboard, or glyph"))
    })
}

fn parse_family(s: &str) -> std::result::Result<PromptFamily, CliError> {
    PromptFamily::from_slug(s).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown family {s:?}; expected base, alias, semalias, descriptive, or textonly"
        ))
    })
}

fn parse_variant(s: &str) -> std::result::Result<ResponseVariant, CliError> {
    ResponseVariant::from_slug(s)
        .ok_or_else(|| CliError::Usage(format!("unknown variant {s:?}; expected direct or cot")))
}

fn sampler_config(seed: u64, n: usize) -> SamplerConfig {
    SamplerConfig { seed, n_states: n, ttt_quotas: None }
}

fn render_pool(pool: &StatePool, styles: &[RenderStyle], px: u32, out: &Path) -> Result<()> {
    for entry in &pool.states {
        for style in styles {
            let assignment = (*style == RenderStyle::Glyph)
                .then(|| glyphs_for(pool.game, &entry.state.state_id, pool.seed));
            let asset = render(&entry.state, *style, assignment, px)?;
            let rel = asset_rel_path(pool.game, &entry.state.state_id, *style);
            let path = out.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &asset.png)?;
        }
    }
    Ok(())
}

fn make_responder(
    oracle: Option<&str>,
    endpoint: Option<&str>,
    model: Option<&str>,
    concurrency: Option<usize>,
) -> std::result::Result<(Box<dyn Responder>, usize), CliError> {
    match (oracle, endpoint) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--oracle conflicts with --endpoint; pick one".to_string(),
        )),
        (None, None) => Err(CliError::Usage(
            "one of --oracle or --endpoint is required".to_string(),
        )),
        (Some(kind), None) => {
            let kind = OracleKind::parse(kind).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((Box::new(oracle_responder(kind)), concurrency.unwrap_or(8)))
        }
        (None, Some(url)) => {
            let model = model.ok_or_else(|| {
                CliError::Usage("--model is required with --endpoint".to_string())
            })?;
            let mut cfg = EndpointConfig::new(url, model);
            if let Some(c) = concurrency {
                cfg.concurrency = c;
            }
            let conc = cfg.concurrency;
            let http = HttpResponder::new(cfg).map_err(CliError::from)?;
            Ok((Box::new(http), conc))
        }
    }
}

fn eval_one(
    manifest: &Manifest,
    responder: &dyn Responder,
    run_dir: &Path,
    assets: Option<&Path>,
    concurrency: usize,
) -> Result<ScoreTable> {
    std::fs::create_dir_all(run_dir)?;
    write_manifest(manifest, &run_dir.join("manifest.jsonl"))?;
    let report = run_manifest(manifest, responder, run_dir, assets, concurrency)?;
    eprintln!(
        "evaluated {} rows into {} ({} cached, {} fresh)",
        manifest.rows.len(),
        run_dir.display(),
        report.cache_hits,
        report.network_calls
    );
    score(&report.records, manifest)
}

fn load_scored_run(run_dir: &Path) -> Result<(ScoreTable, Manifest)> {
    let manifest = read_manifest(&run_dir.join("manifest.jsonl"))?;
    let records = load_run(run_dir, &manifest)?;
    let table = score(&records, &manifest)?;
    Ok((table, manifest))
}

fn read_synth_dir(dir: &Path) -> Result<Vec<SynthItem>> {
    let text = std::fs::read_to_string(dir.join("synth.jsonl"))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut item: SynthItem =
            serde_json::from_str(line).map_err(|e| ForgeError::ManifestLine {
                line: i + 1,
                msg: e.to_string(),
            })?;
        let png = std::fs::read(dir.join("images").join(format!("{}.png", item.item_id)))?;
        item.image = crate::render::RenderedAsset {
            state_id: item.item_id.clone(),
            style: RenderStyle::Base,
            px: crate::synth::SYNTH_PX,
            png,
            content_hash: item.content_hash.clone(),
        };
        items.push(item);
    }
    Ok(items)
}

pub fn dispatch(cli: Cli) -> CliResult {
    let layer = Layered::load(cli.config.as_deref()).map_err(CliError::from)?;
    match cli.cmd {
        Cmd::Gen { game, seed, n, out } => {
            let game = parse_game(&game)?;
            let seed = seed.or(layer.seed).unwrap_or(0);
            let pool =
                sample_game(game, &sampler_config(seed, n)).map_err(CliError::Data)?;
            write_pool(&pool, &out).map_err(CliError::Data)?;
            write_snapshot(&out, false, &format!("gen --game {} --seed {seed} --n {n}", game.slug()))
                .map_err(CliError::Data)?;
            eprintln!("wrote {} states to {}", pool.states.len(), out.display());
            Ok(())
        }
        Cmd::Render { pool, style, px, out } => {
            let pool = read_pool(&pool).map_err(CliError::Data)?;
            let styles = match style {
                Some(s) => vec![parse_style(&s)?],
                None => RenderStyle::ALL.to_vec(),
            };
            render_pool(&pool, &styles, px, &out).map_err(CliError::Data)?;
            write_snapshot(&out, true, &format!("render --px {px}")).map_err(CliError::Data)?;
            eprintln!(
                "rendered {} states x {} styles into {}",
                pool.states.len(),
                styles.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Expand { pool, family, style, variant, out } => {
            let pool = read_pool(&pool).map_err(CliError::Data)?;
            let config = Config { family: parse_family(&family)?, style: parse_style(&style)? };
            let variant = parse_variant(&variant)?;
            let manifest = expand(&pool, config, variant).map_err(CliError::from)?;
            write_manifest(&manifest, &out).map_err(CliError::Data)?;
            write_snapshot(&out, false, &format!("expand --family {family} --style {style} --variant {}", variant.slug()))
                .map_err(CliError::Data)?;
            eprintln!("wrote {} rows to {}", manifest.rows.len(), out.display());
            Ok(())
        }
        Cmd::Eval { manifest, endpoint, model, oracle, concurrency, assets, out } => {
            let oracle = oracle.or(layer.oracle);
            let endpoint = endpoint.or(layer.endpoint);
            let model = model.or(layer.model);
            let concurrency = concurrency.or(layer.concurrency);
            let (responder, conc) =
                make_responder(oracle.as_deref(), endpoint.as_deref(), model.as_deref(), concurrency)?;
            let manifest = read_manifest(&manifest).map_err(CliError::Data)?;
            write_snapshot(&out, true, "eval").map_err(CliError::Data)?;
            eval_one(&manifest, responder.as_ref(), &out, assets.as_deref(), conc)
                .map_err(CliError::Data)?;
            Ok(())
        }
        Cmd::Score { run, manifest, out, table } => {
            let manifest = match manifest {
                Some(path) => read_manifest(&path).map_err(CliError::Data)?,
                None => read_manifest(&run.join("manifest.jsonl")).map_err(CliError::Data)?,
            };
            let records = load_run(&run, &manifest).map_err(CliError::Data)?;
            let scored = score(&records, &manifest).map_err(CliError::Data)?;
            std::fs::write(&out, table_csv(&scored)).map_err(|e| CliError::Data(e.into()))?;
            if table.as_deref() == Some("md") {
                let md_path = out.with_extension("md");
                std::fs::write(&md_path, table_markdown(&scored))
                    .map_err(|e| CliError::Data(e.into()))?;
            }
            write_snapshot(&out, false, "score").map_err(CliError::Data)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Stats { base, compare, out } => {
            if compare.is_empty() {
                return Err(CliError::Usage("--compare needs at least one run".to_string()));
            }
            let (base_table, base_manifest) = load_scored_run(&base).map_err(CliError::Data)?;
            let mut loaded = Vec::new();
            for dir in &compare {
                loaded.push(load_scored_run(dir).map_err(CliError::Data)?);
            }
            let names: Vec<String> = loaded
                .iter()
                .map(|(_, m)| config_name(m.header.family, m.header.style))
                .collect();
            let comparisons: Vec<(&ScoreTable, &Manifest, &str)> = loaded
                .iter()
                .zip(&names)
                .map(|((t, m), n)| (t, m, n.as_str()))
                .collect();
            let base_name = config_name(base_manifest.header.family, base_manifest.header.style);
            let cells = annotate_table((&base_table, &base_manifest, base_name.as_str()), &comparisons);
            std::fs::write(&out, report_markdown(&cells, &base_name))
                .map_err(|e| CliError::Data(e.into()))?;
            std::fs::write(out.with_extension("csv"), report_csv(&cells))
                .map_err(|e| CliError::Data(e.into()))?;
            write_snapshot(&out, false, "stats").map_err(CliError::Data)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Synth { seed, n, out } => {
            let seed = seed.or(layer.seed).unwrap_or(0);
            let items = gen_synth(seed, n).map_err(CliError::from)?;
            write_synth(&items, &out).map_err(CliError::Data)?;
            write_snapshot(&out, true, &format!("synth --seed {seed} --n {n}"))
                .map_err(CliError::Data)?;
            eprintln!("wrote {} items to {}", items.len(), out.display());
            Ok(())
        }
        Cmd::Transform { flip, alias, input, out } => {
            if !flip && alias.is_none() {
                return Err(CliError::Usage(
                    "transform needs --flip and/or --alias PHRASE".to_string(),
                ));
            }
            let mut items = read_synth_dir(&input).map_err(CliError::Data)?;
            for item in &mut items {
                if flip {
                    item.image = flip_vertical(&item.image).map_err(CliError::Data)?;
                    item.content_hash = item.image.content_hash.clone();
                }
                if let Some(phrase) = &alias {
                    item.instruction = alias_counting_prompt(phrase).map_err(CliError::from)?;
                }
            }
            write_synth(&items, &out).map_err(CliError::Data)?;
            write_snapshot(&out, true, "transform").map_err(CliError::Data)?;
            eprintln!("wrote {} transformed items to {}", items.len(), out.display());
            Ok(())
        }
        Cmd::Prompts { out } => {
            let text = catalog();
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| CliError::Data(e.into()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Cmd::All {
            seed,
            n,
            oracle,
            endpoint,
            model,
            concurrency,
            variants,
            no_render,
            out,
        } => {
            let seed = seed.or(layer.seed).unwrap_or(0);
            let oracle = oracle.or(layer.oracle);
            let endpoint = endpoint.or(layer.endpoint);
            let model = model.or(layer.model);
            let concurrency = concurrency.or(layer.concurrency);
            let (responder, conc) =
                make_responder(oracle.as_deref(), endpoint.as_deref(), model.as_deref(), concurrency)?;
            let mut selected = Vec::new();
            for v in variants.split(',') {
                selected.push(parse_variant(v.trim())?);
            }
            run_all(seed, n, responder.as_ref(), conc, &selected, no_render, &out)
                .map_err(CliError::Data)
        }
    }
}

fn run_all(
    seed: u64,
    n: usize,
    responder: &dyn Responder,
    concurrency: usize,
    variants: &[ResponseVariant],
    no_render: bool,
    out: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out.join("pools"))?;
    std::fs::create_dir_all(out.join("manifests"))?;
    write_snapshot(out, true, &format!("all --seed {seed} --n {n}"))?;

    let mut merged = ScoreTable::default();
    let mut per_game_runs: Vec<(Game, Vec<(ScoreTable, Manifest, String)>)> = Vec::new();

    for game in Game::ALL {
        let pool = sample_game(game, &sampler_config(seed, n))?;
        write_pool(&pool, &out.join("pools").join(format!("pool-{}.jsonl", game.slug())))?;
        if !no_render {
            render_pool(&pool, &RenderStyle::ALL, DEFAULT_PX, out)?;
        }
        let mut runs = Vec::new();
        for config in Config::MAIN {
            for variant in variants {
                let manifest = expand(&pool, config, *variant)?;
                let file = manifest_file_name(game, config.family, config.style, *variant);
                write_manifest(&manifest, &out.join("manifests").join(&file))?;
                let run_name = format!(
                    "{}-{}-{}-{}",
                    game.slug(),
                    config.family.slug(),
                    config.style.slug(),
                    variant.slug()
                );
                let run_dir = out.join("runs").join(&run_name);
                let assets = (!no_render).then(|| out.to_path_buf());
                let table =
                    eval_one(&manifest, responder, &run_dir, assets.as_deref(), concurrency)?;
                merged.merge(&table);
                if *variant == ResponseVariant::Direct {
                    runs.push((table, manifest, config_name(config.family, config.style)));
                }
            }
        }
        per_game_runs.push((game, runs));
    }

    std::fs::write(out.join("scores.csv"), table_csv(&merged))?;
    std::fs::write(out.join("scores.md"), table_markdown(&merged))?;

    // Per game: the base configuration is the comparison baseline.
    let mut all_cells = Vec::new();
    for (_, runs) in &per_game_runs {
        let Some(base) = runs.iter().find(|(_, _, name)| name == "base+base") else {
            continue;
        };
        let comparisons: Vec<(&ScoreTable, &Manifest, &str)> = runs
            .iter()
            .filter(|(_, _, name)| name != "base+base")
            .map(|(t, m, name)| (t, m, name.as_str()))
            .collect();
        all_cells.extend(annotate_table((&base.0, &base.1, "base+base"), &comparisons));
    }
    std::fs::write(out.join("stats.csv"), report_csv(&all_cells))?;
    std::fs::write(out.join("stats.md"), report_markdown(&all_cells, "base+base"))?;
    eprintln!("pipeline complete: {}", out.display());
    Ok(())
}
