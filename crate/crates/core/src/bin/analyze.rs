//! Offline analysis over an encrypted event log or an exported CSV.
//!
//!     analyze --log data/events.log export --out export/
//!     analyze --log data/events.log affect
//!     analyze --log data/events.log perceptions --battery imaginations
//!     analyze wilcoxon --csv export/participant_summary.csv --column img_01 --mu 4
//!     analyze spearman --csv export/participant_summary.csv --x sug_01 --y img_01
//!     analyze --log data/events.log lexicon

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono_tz::Tz;
use clap::{Parser, Subcommand, ValueEnum};
use reverie::analysis::{
    affect_delta_table, affect_pairs, corpus, length_stats, lexicon_counts, perception_item_tests, spearman,
    wilcoxon_signed_rank, write_export, TestResult, AFFECT_COLUMNS,
};
use reverie::lexicon::Lexicon;
use reverie::store::{replay, StoreKey, StoreState};
use reverie::study::{Battery, InstrumentSet};

#[derive(Parser)]
#[command(name = "analyze", about = "Export and analyse journaling study data")]
struct Cli {
    /// Encrypted event log.
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    /// Store key, 64 hex characters.
    #[arg(long, global = true, env = "REVERIE_STORE_KEY", hide_env_values = true)]
    key: Option<String>,
    /// Passphrase the store key was derived from.
    #[arg(long, global = true, env = "REVERIE_STORE_PASSPHRASE", hide_env_values = true)]
    passphrase: Option<String>,
    /// Zone used for study-day numbering.
    #[arg(long, global = true, env = "REVERIE_STUDY_TZ", default_value = "UTC")]
    tz: Tz,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write every CSV table into a directory.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre/post affect means, SDs and deltas per arm.
    Affect,
    /// Signed-rank test of each perception statement against the midpoint.
    Perceptions {
        #[arg(long, value_enum, default_value = "suggestions")]
        battery: BatteryArg,
        #[arg(long, default_value_t = 4.0)]
        mu: f64,
    },
    /// Signed-rank test of one CSV column against `mu`.
    Wilcoxon {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = 4.0)]
        mu: f64,
    },
    /// Rank correlation between two CSV columns; rows missing either are dropped.
    Spearman {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Per-text lexicon category counts.
    Lexicon {
        /// Tab-separated `word<TAB>category` file; the built-in list otherwise.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Character and word lengths per text type.
    Lengths,
}

#[derive(Clone, Copy, ValueEnum)]
enum BatteryArg {
    Suggestions,
    Imaginations,
}

impl From<BatteryArg> for Battery {
    fn from(b: BatteryArg) -> Self {
        match b {
            BatteryArg::Suggestions => Battery::Suggestions,
            BatteryArg::Imaginations => Battery::Imaginations,
        }
    }
}

type Res<T> = Result<T, String>;

fn load_state(cli: &Cli) -> Res<StoreState> {
    let log = cli.log.as_ref().ok_or("--log is required for this command")?;
    let key = match (&cli.key, &cli.passphrase) {
        (Some(hex), _) => StoreKey::from_hex(hex)?,
        (None, Some(p)) => StoreKey::from_passphrase(p),
        (None, None) => return Err("set --key or --passphrase (or REVERIE_STORE_KEY)".into()),
    };
    let bytes = std::fs::read(log).map_err(|e| format!("{}: {e}", log.display()))?;
    replay(&bytes, &key).map_err(|e| e.to_string())
}

fn read_column(path: &Path, column: &str) -> Res<Vec<Option<f64>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let idx = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("{}: no column {column}", path.display()))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            let field = r.get(idx).unwrap_or("").trim();
            if field.is_empty() {
                Ok(None)
            } else {
                field
                    .parse()
                    .map(Some)
                    .map_err(|_| format!("{column}: not a number: {field}"))
            }
        })
        .collect()
}

fn test_row(r: &TestResult) -> [String; 4] {
    [
        r.n.to_string(),
        format!("{:.6}", r.statistic),
        format!("{:.6}", r.p_value),
        format!("{:?}", r.method).to_lowercase(),
    ]
}

fn run(cli: &Cli) -> Res<()> {
    let mut out = csv::WriterBuilder::new().from_writer(std::io::stdout());
    let err = |e: csv::Error| e.to_string();
    match &cli.command {
        Command::Export { out: dir } => {
            let state = load_state(cli)?;
            let written = write_export(dir, &state, &InstrumentSet::default(), cli.tz).map_err(|e| e.to_string())?;
            for name in written {
                writeln!(std::io::stdout(), "{}", dir.join(name).display()).map_err(|e| e.to_string())?;
            }
        }
        Command::Affect => {
            let rows = affect_delta_table(&affect_pairs(&load_state(cli)?)).map_err(|e| e.to_string())?;
            out.write_record(AFFECT_COLUMNS).map_err(err)?;
            for row in rows {
                out.write_record(row.values()).map_err(err)?;
            }
        }
        Command::Perceptions { battery, mu } => {
            let state = load_state(cli)?;
            let instruments = InstrumentSet::default();
            let battery = Battery::from(*battery);
            out.write_record([
                "item_id",
                "reverse_keyed",
                "mean",
                "n",
                "statistic",
                "p_value",
                "method",
                "text",
            ])
            .map_err(err)?;
            for t in perception_item_tests(&state, instruments.battery(battery), battery, *mu) {
                let [n, stat, p, method] = match &t.result {
                    Ok(r) => test_row(r),
                    Err(e) => [t.n.to_string(), String::new(), String::new(), e.to_string()],
                };
                out.write_record([
                    t.item_id,
                    t.reverse_keyed.to_string(),
                    format!("{:.4}", t.mean),
                    n,
                    stat,
                    p,
                    method,
                    t.text,
                ])
                .map_err(err)?;
            }
        }
        Command::Wilcoxon { csv, column, mu } => {
            let xs: Vec<f64> = read_column(csv, column)?.into_iter().flatten().collect();
            let r = wilcoxon_signed_rank(&xs, *mu).map_err(|e| e.to_string())?;
            out.write_record(["column", "mu", "n", "statistic", "p_value", "method"])
                .map_err(err)?;
            let [n, s, p, m] = test_row(&r);
            out.write_record([column.clone(), mu.to_string(), n, s, p, m])
                .map_err(err)?;
        }
        Command::Spearman { csv, x, y } => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = read_column(csv, x)?
                .into_iter()
                .zip(read_column(csv, y)?)
                .filter_map(|(a, b)| Some((a?, b?)))
                .unzip();
            let r = spearman(&xs, &ys).map_err(|e| e.to_string())?;
            out.write_record(["x", "y", "n", "rho", "p_value", "method"])
                .map_err(err)?;
            let [n, s, p, m] = test_row(&r);
            out.write_record([x.clone(), y.clone(), n, s, p, m]).map_err(err)?;
        }
        Command::Lexicon { lexicon } => {
            let lexicon = match lexicon {
                Some(p) => Lexicon::load(p).map_err(|e| e.to_string())?,
                None => Lexicon::builtin(),
            };
            let categories: Vec<String> = lexicon.categories().iter().cloned().collect();
            let mut header = vec!["text_id".to_string(), "text_type".into(), "word_count".into()];
            header.extend(categories.iter().cloned());
            out.write_record(&header).map_err(err)?;
            for (id, ty, text) in corpus(&load_state(cli)?) {
                let c = lexicon_counts(&id, &text, &lexicon);
                let mut row = vec![id, ty.as_str().to_string(), c.word_count.to_string()];
                row.extend(
                    categories
                        .iter()
                        .map(|k| c.category_counts.get(k).copied().unwrap_or(0).to_string()),
                );
                out.write_record(&row).map_err(err)?;
            }
        }
        Command::Lengths => {
            out.write_record(["text_type", "n", "mean_chars", "sd_chars", "mean_words", "sd_words"])
                .map_err(err)?;
            for s in length_stats(&load_state(cli)?) {
                out.write_record([
                    s.text_type.as_str().to_string(),
                    s.n.to_string(),
                    format!("{:.2}", s.mean_chars),
                    format!("{:.2}", s.sd_chars),
                    format!("{:.2}", s.mean_words),
                    format!("{:.2}", s.sd_words),
                ])
                .map_err(err)?;
            }
        }
    }
    out.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("analyze: {e}");
            ExitCode::FAILURE
        }
    }
}
