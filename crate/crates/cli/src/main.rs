use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use cvtree::analysis::{
    describe_panel, load_configured_panel, panel_selection, study_panel, study_subsamples, write_summary_csv,
    StudyReport,
};
use cvtree::config::RunConfig;
use cvtree::error::{Error, Result};
use cvtree::rescale::RescaleScope;
use cvtree::select::spec_fragment_toml;

#[derive(Parser, Debug)]
#[command(name = "cvtree", version, about = "Charter value segmentation by regression trees")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, env = "CVTREE_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Minimum rows per tree leaf.
    #[arg(long, global = true)]
    min_leaf: Option<usize>,
    /// Trees per random forest.
    #[arg(long, global = true)]
    trees: Option<usize>,
    /// Where quartiles for rescaling are computed.
    #[arg(long, global = true, value_enum)]
    rescale_scope: Option<Scope>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scope {
    Full,
    Subsample,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate the panel; write summary statistics and exclusions.
    Ingest,
    /// Rank proxies by forest importance and pick one per CAMELS group.
    Select,
    /// Grow and prune the tree of one subsample.
    Grow {
        /// Subsample name; defaults to the first configured one.
        #[arg(long)]
        subsample: Option<String>,
    },
    /// Run every configured subsample and write the report bundle.
    Study,
}

enum Status {
    Ok,
    Degraded,
}

impl Cli {
    fn load_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::Config("no config given; pass --config or set CVTREE_CONFIG".into()))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(m) = self.min_leaf {
            cfg.tree.min_leaf = m;
        }
        if let Some(t) = self.trees {
            cfg.forest.n_trees = t;
        }
        if let Some(s) = self.rescale_scope {
            cfg.rescale_scope = match s {
                Scope::Full => RescaleScope::Full,
                Scope::Subsample => RescaleScope::Subsample,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn ingest(cfg: &RunConfig) -> Result<Status> {
    let (panel, exclusions) = load_configured_panel(cfg)?;
    create_dir(&cfg.out)?;
    let mut stats = Vec::new();
    write_summary_csv(&describe_panel(&panel)?, &mut stats)?;
    write(&cfg.out.join("summary.csv"), &stats)?;
    let mut ex = Vec::new();
    exclusions.write_csv(&mut ex)?;
    write(&cfg.out.join("exclusions.csv"), &ex)?;
    println!(
        "{}: {} bank-years kept, {} excluded",
        panel.provenance,
        panel.len(),
        exclusions.len()
    );
    Ok(Status::Ok)
}

fn select(cfg: &RunConfig) -> Result<Status> {
    let (panel, _) = load_configured_panel(cfg)?;
    let r = panel_selection(&panel, cfg)?;
    create_dir(&cfg.out)?;
    let mut imp = Vec::new();
    r.importance.write_csv(&mut imp)?;
    write(&cfg.out.join("importance.csv"), &imp)?;
    let mut sel = Vec::new();
    r.write_csv(&mut sel)?;
    write(&cfg.out.join("selection.csv"), &sel)?;
    let fragment = spec_fragment_toml(&r.spec_fragment(&cfg.proxies)?);
    write(&cfg.out.join("proxies.toml"), fragment.as_bytes())?;
    for c in &r.chosen {
        let pct = c.pct_inc_mse.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into());
        println!("{}  {:<8} {:>7}", c.group.letter(), c.proxy, pct);
    }
    Ok(Status::Ok)
}

fn finish(report: &StudyReport, out: &Path) -> Result<Status> {
    report.write_bundle(out)?;
    print!("{}", report.summary_table());
    info!("bundle written to {}", out.display());
    Ok(if report.is_degraded() {
        Status::Degraded
    } else {
        Status::Ok
    })
}

fn grow(cfg: &RunConfig, name: Option<&str>) -> Result<Status> {
    let index = match name {
        None => 0,
        Some(n) => cfg
            .subsamples
            .iter()
            .position(|s| s.name == n)
            .ok_or_else(|| Error::Config(format!("no subsample named {n:?}")))?,
    };
    let (panel, exclusions) = load_configured_panel(cfg)?;
    let report = study_subsamples(&panel, exclusions, cfg, &[index])?;
    finish(&report, &cfg.out)
}

fn study(cfg: &RunConfig) -> Result<Status> {
    let (panel, exclusions) = load_configured_panel(cfg)?;
    let report = study_panel(&panel, exclusions, cfg)?;
    finish(&report, &cfg.out)
}

fn run(cli: &Cli) -> Result<Status> {
    let cfg = cli.load_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    info!("seed {}, {} worker threads", cfg.seed, pool.current_num_threads());
    pool.install(|| match &cli.command {
        Command::Ingest => ingest(&cfg),
        Command::Select => select(&cfg),
        Command::Grow { subsample } => grow(&cfg, subsample.as_deref()),
        Command::Study => study(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Degraded) => {
            eprintln!("warning: some subsamples produced no tree");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
