use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{Command, RunConfig, SplitArg};
use crate::backtest::{
    equity_csv, index_metrics, read_signals, run_backtest, write_signals, BacktestSummary, IndexMetrics, Signal,
};
use crate::chart::{render_ohlct, render_with_width, write_image, ChartUnit, ImageFormat, ImageMeta};
use crate::error::{Error, Result};
use crate::market::{
    compute_ma5, date_cutoffs, parse_bars, split_by_date, synth_universe, universe_samples, write_bars_csv,
    DailyBar, DatasetSplit, Sample, SampleParams, Universe,
};
use crate::model::{encode_samples, evaluate, graph_checks, train_encoded, Checkpoint, EvalMetrics, Network};
use crate::multiscale::decompose;
use crate::nn::{layer_checks, NamedReport};

pub(super) fn execute(command: &Command, cfg: &RunConfig) -> Result<()> {
    let mut cfg = cfg.clone();
    match command {
        Command::Ingest => ingest(&cfg),
        Command::Synth { symbols, days } => {
            cfg.synth.symbols = symbols.unwrap_or(cfg.synth.symbols);
            cfg.synth.days = days.unwrap_or(cfg.synth.days);
            synth(&cfg)
        }
        Command::Render {
            symbol,
            date,
            format,
            submaps,
        } => render(&cfg, symbol.as_deref(), *date, *format, *submaps),
        Command::Decompose { symbol, date } => decompose_cmd(&cfg, symbol.as_deref(), *date),
        Command::Train => train(&cfg),
        Command::Evaluate { checkpoint, split } => evaluate_cmd(&cfg, checkpoint, *split),
        Command::Backtest {
            signals,
            checkpoint,
            index,
        } => backtest(&cfg, signals.as_deref(), checkpoint, index.as_deref()),
        Command::Gradcheck => gradcheck(&cfg),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write(path, text)
}

/// Creates the output directory and records the effective config in it.
fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.paths.output.clone();
    write(&dir.join("config.toml"), cfg.to_toml()?)?;
    Ok(dir)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads one bars CSV, or every `.csv` in a directory (in name order).
pub fn load_universe(path: &Path) -> Result<Universe> {
    if !path.is_dir() {
        return parse_bars(&read_text(path)?);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .csv files in directory"),
        ));
    }
    let mut universe = Universe::new();
    for file in files {
        for (symbol, bars) in parse_bars(&read_text(&file)?)? {
            universe.entry(symbol).or_insert_with(Vec::new).extend(bars);
        }
    }
    for (symbol, bars) in universe.iter_mut() {
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Duplicate {
                symbol: symbol.clone(),
                date: w[0].date,
            });
        }
        compute_ma5(bars);
    }
    Ok(universe)
}

fn samples_and_split(cfg: &RunConfig, universe: &Universe, params: &SampleParams) -> Result<DatasetSplit> {
    let samples = universe_samples(universe, params)?;
    let (train_end, val_end) = match (cfg.data.train_end, cfg.data.val_end) {
        (Some(a), Some(b)) => (a, b),
        _ => date_cutoffs(&samples, cfg.data.train_frac, cfg.data.val_frac)?,
    };
    let split = split_by_date(samples, train_end, val_end)?;
    info!(
        "split at {train_end} / {val_end}: {} train, {} validation, {} test, {} dropped",
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        split.dropped
    );
    Ok(split)
}

#[derive(Serialize)]
struct SymbolSummary {
    symbol: String,
    bars: usize,
    first: NaiveDate,
    last: NaiveDate,
}

fn ingest(cfg: &RunConfig) -> Result<()> {
    let universe = load_universe(cfg.data_path()?)?;
    let out = output_dir(cfg)?;
    write(&out.join("bars.csv"), write_bars_csv(&universe))?;
    let summary: Vec<SymbolSummary> = universe
        .iter()
        .filter(|(_, bars)| !bars.is_empty())
        .map(|(s, bars)| SymbolSummary {
            symbol: s.clone(),
            bars: bars.len(),
            first: bars[0].date,
            last: bars[bars.len() - 1].date,
        })
        .collect();
    println!("ingested {} symbols, {} bars", summary.len(), summary.iter().map(|s| s.bars).sum::<usize>());
    write_json(&out.join("ingest.json"), &summary)
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seeds[0];
    let universe = synth_universe(seed, cfg.synth.symbols, cfg.synth.days, &cfg.synth.params)?;
    let out = output_dir(cfg)?;
    let path = out.join("synthetic.csv");
    write(&path, write_bars_csv(&universe))?;
    println!("{}: {} symbols x {} days", path.display(), cfg.synth.symbols, cfg.synth.days);
    Ok(())
}

/// The `n` bars of `symbol` ending on `date` (the last bar by default).
fn select_window(
    universe: &Universe,
    symbol: Option<&str>,
    date: Option<NaiveDate>,
    n: usize,
) -> Result<(String, Vec<DailyBar>)> {
    let (name, bars) = match symbol {
        Some(s) => universe
            .get_key_value(s)
            .ok_or_else(|| Error::Domain(format!("symbol {s} not found in the data")))?,
        None => universe
            .iter()
            .next()
            .ok_or_else(|| Error::Domain("the data holds no symbols".into()))?,
    };
    let end = match date {
        Some(d) => bars
            .iter()
            .position(|b| b.date == d)
            .ok_or_else(|| Error::Domain(format!("{name} has no bar on {d}")))?,
        None => bars.len().checked_sub(1).ok_or_else(|| Error::Domain(format!("{name} has no bars")))?,
    };
    if end + 1 < n {
        return Err(Error::Domain(format!("{name} has only {} bars up to the end date, need {n}", end + 1)));
    }
    Ok((name.clone(), bars[end + 1 - n..=end].to_vec()))
}

fn render(
    cfg: &RunConfig,
    symbol: Option<&str>,
    date: Option<NaiveDate>,
    format: ImageFormat,
    submaps: bool,
) -> Result<()> {
    let universe = load_universe(cfg.data_path()?)?;
    let n = cfg.data.n;
    let (symbol, window) = select_window(&universe, symbol, date, n)?;
    let end = window[n - 1].date;
    let units = ChartUnit::from_bars(&window)?;
    let out = output_dir(cfg)?.join("render");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ext = match format {
        ImageFormat::Pgm => "pgm",
        ImageFormat::Raw => "raw",
    };
    let meta = ImageMeta {
        n,
        resolution: 1,
        symbol: symbol.clone(),
        end_date: Some(end),
    };
    let chart = match render_ohlct(&units, &cfg.model.geometry, meta.clone()) {
        Err(Error::Capacity { needed, available }) => {
            warn!("{symbol} {end}: window needs {needed} columns, widening from {available}");
            render_with_width(&units, &cfg.model.geometry, needed, meta)?
        }
        other => other?,
    };
    let mut images = vec![(format!("{symbol}_{end}_n{n}.{ext}"), chart)];
    if submaps {
        for map in decompose(&units, n)?.maps {
            let meta = ImageMeta {
                n: map.units.len(),
                resolution: map.resolution,
                symbol: symbol.clone(),
                end_date: Some(end),
            };
            let name = format!("{symbol}_{end}_x{}.{ext}", map.index);
            images.push((name, render_ohlct(&map.units, &cfg.model.geometry, meta)?));
        }
    }
    for (name, image) in images {
        let path = out.join(name);
        write_image(&image, &path, format)?;
        println!("{} {}x{}", path.display(), image.height, image.width);
    }
    Ok(())
}

fn decompose_cmd(cfg: &RunConfig, symbol: Option<&str>, date: Option<NaiveDate>) -> Result<()> {
    let universe = load_universe(cfg.data_path()?)?;
    let (symbol, window) = select_window(&universe, symbol, date, cfg.data.n)?;
    let end = window[window.len() - 1].date;
    let set = decompose(&ChartUnit::from_bars(&window)?, cfg.data.n)?;
    let path = output_dir(cfg)?.join(format!("decompose_{symbol}_{end}.json"));
    write_json(&path, &set)?;
    println!("{}: {} sub-maps, resolutions {:?}", path.display(), set.count(), set.resolutions());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SplitSummary {
    train: usize,
    validation: usize,
    test: usize,
    dropped: usize,
    train_end: Option<NaiveDate>,
    val_end: Option<NaiveDate>,
}

#[derive(Serialize, Deserialize)]
struct RunSummary {
    seed: u64,
    best_epoch: usize,
    epochs_run: usize,
    checkpoint: String,
    test: Option<EvalMetrics>,
}

#[derive(Serialize, Deserialize)]
struct Means {
    ppv: Option<f64>,
    npv: Option<f64>,
    accuracy: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrainSummary {
    split: SplitSummary,
    runs: Vec<RunSummary>,
    /// Averages over runs where the metric is defined.
    mean: Means,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn train(cfg: &RunConfig) -> Result<()> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("train needs at least one seed".into()));
    }
    let universe = load_universe(cfg.data_path()?)?;
    let split = samples_and_split(cfg, &universe, &cfg.sample_params())?;
    let train_set = encode_samples(&split.train, &cfg.model)?;
    let val_set = encode_samples(&split.validation, &cfg.model)?;
    let test_set = encode_samples(&split.test, &cfg.model)?;
    let out = output_dir(cfg)?;

    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let model = crate::model::ModelConfig { seed, ..cfg.model.clone() };
        info!("training {:?} with seed {seed}", model.kind);
        let ckpt = train_encoded(&model, &cfg.train, &train_set, &val_set)?;
        let name = format!("seed_{seed}");
        let ckpt_path = out.join(&name).join("model.ckpt");
        write(&ckpt_path, ckpt.to_bytes()?)?;
        write_json(&out.join(&name).join("history.json"), &ckpt.history)?;
        let test = if test_set.is_empty() {
            warn!("test split is empty; no test metrics");
            None
        } else {
            Some(evaluate(&ckpt.network()?, &test_set)?)
        };
        if let Some(t) = &test {
            println!(
                "seed {seed}: best epoch {}, test accuracy {:.4}, PPV {}, NPV {}",
                ckpt.best_epoch,
                t.accuracy.unwrap_or(f64::NAN),
                fmt_opt(t.ppv),
                fmt_opt(t.npv)
            );
        }
        runs.push(RunSummary {
            seed,
            best_epoch: ckpt.best_epoch,
            epochs_run: ckpt.history.len() - 1,
            checkpoint: format!("{name}/model.ckpt"),
            test,
        });
    }
    let summary = TrainSummary {
        split: SplitSummary {
            train: split.train.len(),
            validation: split.validation.len(),
            test: split.test.len(),
            dropped: split.dropped,
            train_end: split.train_end,
            val_end: split.val_end,
        },
        mean: Means {
            ppv: mean(runs.iter().map(|r| r.test.as_ref().and_then(|t| t.ppv))),
            npv: mean(runs.iter().map(|r| r.test.as_ref().and_then(|t| t.npv))),
            accuracy: mean(runs.iter().map(|r| r.test.as_ref().and_then(|t| t.accuracy))),
        },
        runs,
    };
    println!("mean PPV {}, mean NPV {}", fmt_opt(summary.mean.ppv), fmt_opt(summary.mean.npv));
    write_json(&out.join("summary.json"), &summary)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// Samples of one split, cut with the checkpoint's window length.
fn split_for(cfg: &RunConfig, universe: &Universe, ckpt: &Checkpoint, which: SplitArg) -> Result<Vec<Sample>> {
    let params = SampleParams {
        n: ckpt.model.n,
        ..cfg.sample_params()
    };
    let split = samples_and_split(cfg, universe, &params)?;
    Ok(match which {
        SplitArg::Train => split.train,
        SplitArg::Validation => split.validation,
        SplitArg::Test => split.test,
    })
}

fn signals_for(net: &Network, ckpt: &Checkpoint, samples: &[Sample]) -> Result<Vec<Signal>> {
    use rayon::prelude::*;
    let encoded = encode_samples(samples, &ckpt.model)?;
    let preds = encoded
        .par_iter()
        .map(|s| net.predict_encoded(s))
        .collect::<Result<Vec<_>>>()?;
    let mut signals: Vec<Signal> = samples
        .iter()
        .zip(preds)
        .map(|(s, p)| Signal {
            date: s.end_date(),
            symbol: s.symbol.clone(),
            p_up: p.p_up,
            r_hat: p.r_hat,
        })
        .collect();
    signals.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.symbol.cmp(&b.symbol)));
    Ok(signals)
}

#[derive(Serialize)]
struct EvaluateReport {
    split: String,
    model: crate::model::ModelKind,
    best_epoch: usize,
    metrics: EvalMetrics,
}

fn evaluate_cmd(cfg: &RunConfig, checkpoint: &Path, which: SplitArg) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let universe = load_universe(cfg.data_path()?)?;
    let samples = split_for(cfg, &universe, &ckpt, which)?;
    if samples.is_empty() {
        return Err(Error::Domain(format!("the {which:?} split is empty")));
    }
    let net = ckpt.network()?;
    let metrics = evaluate(&net, &encode_samples(&samples, &ckpt.model)?)?;
    let out = output_dir(cfg)?;
    write(&out.join("signals.csv"), write_signals(&signals_for(&net, &ckpt, &samples)?))?;
    println!(
        "{} samples: accuracy {}, PPV {}, NPV {}",
        metrics.count,
        fmt_opt(metrics.accuracy),
        fmt_opt(metrics.ppv),
        fmt_opt(metrics.npv)
    );
    let report = EvaluateReport {
        split: format!("{which:?}").to_lowercase(),
        model: ckpt.model.kind,
        best_epoch: ckpt.best_epoch,
        metrics,
    };
    write_json(&out.join("evaluate.json"), &report)
}

#[derive(Deserialize)]
struct IndexRow {
    date: NaiveDate,
    close: f64,
}

fn read_index(path: &Path) -> Result<Vec<IndexRow>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<IndexRow> = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        rows.push(row.map_err(|e: csv::Error| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?);
    }
    rows.sort_by_key(|r| r.date);
    Ok(rows)
}

#[derive(Serialize)]
struct BacktestRun {
    source: String,
    summary: BacktestSummary,
}

#[derive(Serialize)]
struct BacktestOverview {
    runs: Vec<BacktestRun>,
    mean_pf: f64,
    mean_mdd: f64,
    index: Option<IndexMetrics>,
}

fn backtest(cfg: &RunConfig, signals: Option<&Path>, checkpoints: &[PathBuf], index: Option<&Path>) -> Result<()> {
    let universe = load_universe(cfg.data_path()?)?;
    let mut sources: Vec<(String, Vec<Signal>)> = Vec::new();
    if let Some(path) = signals {
        sources.push((path.display().to_string(), read_signals(&read_text(path)?)?));
    }
    for path in checkpoints {
        let ckpt = Checkpoint::load(path)?;
        let samples = split_for(cfg, &universe, &ckpt, SplitArg::Test)?;
        sources.push((path.display().to_string(), signals_for(&ckpt.network()?, &ckpt, &samples)?));
    }
    if sources.is_empty() {
        return Err(Error::Config("backtest needs --signals or at least one --checkpoint".into()));
    }
    let out = output_dir(cfg)?;
    let mut runs = Vec::new();
    let mut span = None;
    for (k, (source, sigs)) in sources.into_iter().enumerate() {
        let report = run_backtest(&sigs, &universe, &cfg.backtest)?;
        let dir = out.join(format!("run_{k}"));
        write_json(&dir.join("report.json"), &report)?;
        write(&dir.join("equity.csv"), equity_csv(&report))?;
        println!(
            "{source}: PF {:.4}, MDD {:.4}, {} trades",
            report.summary.pf, report.summary.mdd, report.summary.trades
        );
        span = Some((report.equity[0].date, report.equity[report.equity.len() - 1].date));
        runs.push(BacktestRun {
            source,
            summary: report.summary,
        });
    }
    let index = match index {
        Some(path) => {
            let rows = read_index(path)?;
            let (first, last) = span.expect("at least one run");
            let inside: Vec<f64> = rows.iter().filter(|r| r.date >= first && r.date <= last).map(|r| r.close).collect();
            let closes = if inside.is_empty() {
                warn!("index series does not overlap the backtest; using all of it");
                rows.iter().map(|r| r.close).collect()
            } else {
                inside
            };
            let m = index_metrics(&closes)?;
            println!("index: IDC {:.4}, IMD {:.4}", m.idc, m.imd);
            Some(m)
        }
        None => None,
    };
    let count = runs.len() as f64;
    let overview = BacktestOverview {
        mean_pf: runs.iter().map(|r| r.summary.pf).sum::<f64>() / count,
        mean_mdd: runs.iter().map(|r| r.summary.mdd).sum::<f64>() / count,
        runs,
        index,
    };
    write_json(&out.join("backtest.json"), &overview)
}

fn gradcheck(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let mut reports: Vec<NamedReport> = layer_checks(seed)?;
    reports.extend(graph_checks(seed)?);
    for r in &reports {
        println!(
            "{} {:<16} max relative error {:.3e} (tolerance {:.0e})",
            if r.report.passed { "PASS" } else { "FAIL" },
            r.name,
            r.report.max_rel_error,
            r.report.tolerance
        );
    }
    write_json(&output_dir(cfg)?.join("gradcheck.json"), &reports)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.report.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Domain(format!("gradient check failed for {}", failed.join(", "))))
    }
}
