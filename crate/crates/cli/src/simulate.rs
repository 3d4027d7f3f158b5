//! Scenario runs for the figure and the tables.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use covtest_sim::config::{
    preset_figure1, preset_figure1_reduced, preset_table1, preset_table2, ScenarioFile,
};
use covtest_sim::{figure_grid, run_table, EventBPoint, Method, ScenarioSummary};

use crate::error::{CliError, Result};
use crate::input::read_text;
use crate::output::{sha256_hex, sig6, unix_now, Table, VERSION};

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Which {
    Table1,
    Table2,
    Figure1,
    #[value(name = "figure1_reduced")]
    Figure1Reduced,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Table1 => "table1",
            Which::Table2 => "table2",
            Which::Figure1 => "figure1",
            Which::Figure1Reduced => "figure1_reduced",
        }
    }

    fn preset(self) -> ScenarioFile {
        match self {
            Which::Table1 => preset_table1(),
            Which::Table2 => preset_table2(),
            Which::Figure1 => preset_figure1(),
            Which::Figure1Reduced => preset_figure1_reduced(),
        }
    }

    fn is_figure(self) -> bool {
        matches!(self, Which::Figure1 | Which::Figure1Reduced)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Which study to run; selects the preset and the kind of output.
    #[arg(long, value_enum)]
    pub which: Which,
    /// Scenario file (TOML) replacing the built-in preset.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "COVTEST_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn effective_file(args: &SimulateArgs) -> Result<ScenarioFile> {
    let mut file = match &args.scenario {
        Some(path) => ScenarioFile::parse(&read_text(path)?).map_err(CliError::from)?,
        None => args.which.preset(),
    };
    if let Some(r) = args.runs {
        file.scenario.runs = r;
    }
    if let Some(s) = args.seed {
        file.scenario.seed = s;
    }
    file.validate()?;
    let missing = if args.which.is_figure() {
        file.figure.is_none()
    } else {
        file.table.is_none()
    };
    if missing {
        let section = if args.which.is_figure() {
            "[figure]"
        } else {
            "[table]"
        };
        return Err(CliError::Config(format!(
            "--which {} needs a {section} section",
            args.which.name()
        )));
    }
    Ok(file)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn run_simulate(args: &SimulateArgs, command: &str) -> Result<()> {
    let start = unix_now();
    let file = effective_file(args)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let toml = file.to_toml();
    let digest = sha256_hex(&[toml.as_bytes()]);
    let meta = |t: &mut Table| {
        t.meta("tool", VERSION)
            .meta("command", command)
            .meta("config_sha256", &digest)
            .meta("seed", file.scenario.seed)
            .meta("which", args.which.name())
            .meta("config", toml.trim_end());
    };
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    let (summary, plot) = if args.which.is_figure() {
        let fig = file.figure.as_ref().expect("checked above");
        let points = figure_grid(&file.scenario, fig, jobs)?;
        figure_tables(&points, &fig.k0_values, &fig.coef_sizes)
    } else {
        let table = file.table.as_ref().expect("checked above");
        let rows = run_table(&file.scenario, table, jobs)?;
        table_tables(&rows)
    };
    let (mut summary, mut plot) = (summary, plot);
    meta(&mut summary);
    meta(&mut plot);
    write(&args.out.join("summary.tsv"), &summary.render())?;
    write(&args.out.join("plot.tsv"), &plot.render())?;
    let end = unix_now();
    let manifest = format!(
        "tool: {VERSION}\ncommand: {command}\nconfig_sha256: {digest}\nseed: {}\njobs: {jobs}\n\
         start_unix: {start:.3}\nend_unix: {end:.3}\nelapsed_s: {:.3}\nfiles: summary.tsv plot.tsv\n",
        file.scenario.seed,
        end - start
    );
    write(&args.out.join("manifest.txt"), &manifest)
}

fn table_tables(rows: &[ScenarioSummary]) -> (Table, Table) {
    let mut summary = Table::new(&[
        "coef_size",
        "method",
        "fwer",
        "tp",
        "runs_ok",
        "failures",
        "sigma_hat",
    ]);
    let mut plot_cols = vec!["coef_size".to_string()];
    for m in Method::ALL {
        plot_cols.push(format!("fwer_{m}"));
        plot_cols.push(format!("tp_{m}"));
    }
    let mut plot = Table::new(&plot_cols.iter().map(String::as_str).collect::<Vec<_>>());
    for r in rows {
        let mut line = vec![sig6(r.coef_size)];
        for m in Method::ALL {
            let s = r.method(m);
            let sigma = if m == Method::Despars {
                r.mean_sigma_hat
            } else {
                r.mean_sigma_hat_cov
            };
            summary.row(vec![
                sig6(r.coef_size),
                m.name().into(),
                sig6(s.fwer),
                sig6(s.tp),
                s.runs_ok.to_string(),
                s.failures.to_string(),
                sig6(sigma),
            ]);
            line.push(sig6(s.fwer));
            line.push(sig6(s.tp));
        }
        plot.row(line);
    }
    (summary, plot)
}

fn figure_tables(points: &[EventBPoint], k0s: &[usize], sizes: &[f64]) -> (Table, Table) {
    let mut summary = Table::new(&["k0", "coef_size", "fraction", "se", "runs", "failures"]);
    for pt in points {
        summary.row(vec![
            pt.k0.to_string(),
            sig6(pt.coef_size),
            sig6(pt.fraction),
            sig6(pt.se),
            pt.runs.to_string(),
            pt.failures.to_string(),
        ]);
    }
    let mut cols = vec!["coef_size".to_string()];
    cols.extend(k0s.iter().map(|k| format!("k0_{k}")));
    let mut plot = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
    for &s in sizes {
        let mut line = vec![sig6(s)];
        for &k in k0s {
            let pt = points
                .iter()
                .find(|p| p.k0 == k && p.coef_size == s)
                .expect("grid point");
            line.push(sig6(pt.fraction));
        }
        plot.row(line);
    }
    (summary, plot)
}
