//! Command-line surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::analysis::{
    analytic_revival_difference, analytic_revival_time, free_width, measure_revivals, separability_scan,
    sweep, sweep_contours, REVIVAL_WINDOW,
};
use crate::check;
use crate::config::{resolve_threads, RunConfig};
use crate::error::{Error, Result};
use crate::io::{
    read_timeseries, sidecar_path, write_contours, write_density_snapshot, write_sidecar, write_sweep,
    write_timeseries,
};
use crate::observables::density;

#[derive(Parser, Debug)]
#[command(name = "ringsplit", version, about = "Two-component condensate revivals in a ring trap")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one evolution; write the time series and requested snapshots.
    Simulate(RunArgs),
    /// Separability sweep over (r0, a12); write the table and contours.
    Sweep(RunArgs),
    /// Recompute revivals and separability peaks from a time-series CSV.
    Analyze {
        /// Time-series CSV written by `simulate`.
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print closed-form revival times and the free width.
    Oracle {
        #[arg(long, default_value_t = 12.0)]
        r0: f64,
        #[arg(long, default_value_t = 85.0)]
        m1: f64,
        #[arg(long, default_value_t = 87.0)]
        m2: f64,
        /// Initial width for the free-expansion law.
        #[arg(long, default_value_t = 0.75)]
        w: f64,
        /// Time at which to evaluate the free width.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run the invariant self-checks.
    Check,
}

/// Shared flags; overrides take precedence over the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub r0: Option<f64>,
    /// In units of a11.
    #[arg(long)]
    pub a12: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<i64>,
    #[arg(long)]
    pub sample_every: Option<i64>,
    /// Snapshot times in units of 1/omega_perp, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    /// Sweep radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub r0_values: Option<Vec<f64>>,
    /// Sweep a12 ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub a12_values: Option<Vec<f64>>,
    /// Sweep target label (S1/2, S1, S3/2, S2).
    #[arg(long)]
    pub target: Option<String>,
}

fn set(table: &mut toml::Table, section: &str, key: &str, value: toml::Value) {
    let sec = table
        .entry(section)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if let toml::Value::Table(t) = sec {
        t.insert(key.to_string(), value);
    }
}

fn floats(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect())
}

impl RunArgs {
    /// Config file (if any) with the command-line overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => {
                RunConfig::load(p)?;
                std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?
            }
            None => String::new(),
        };
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config {
                line: 0,
                msg: e.message().to_string(),
            })?;
        use toml::Value::{Float, Integer, String as Str};
        let floats_opt = [
            ("trap", "r0", self.r0),
            ("physical", "a12", self.a12),
            ("physical", "lambda", self.lambda),
            ("trap", "sigma", self.sigma),
            ("trap", "omega", self.omega),
            ("numerics", "dx", self.dx),
            ("numerics", "dt", self.dt),
        ];
        for (sec, key, v) in floats_opt {
            if let Some(v) = v {
                set(&mut table, sec, key, Float(v));
            }
        }
        for (sec, key, v) in [
            ("numerics", "n", self.n),
            ("numerics", "n_steps", self.n_steps),
            ("numerics", "sample_every", self.sample_every),
        ] {
            if let Some(v) = v {
                set(&mut table, sec, key, Integer(v));
            }
        }
        if let Some(v) = &self.snapshots {
            set(&mut table, "output", "snapshot_times", floats(v));
        }
        if let Some(v) = &self.r0_values {
            set(&mut table, "sweep", "r0_values", floats(v));
        }
        if let Some(v) = &self.a12_values {
            set(&mut table, "sweep", "a12_values", floats(v));
        }
        if let Some(v) = &self.target {
            set(&mut table, "sweep", "target", Str(v.clone()));
        }
        if let Some(v) = &self.out {
            set(&mut table, "output", "dir", Str(v.display().to_string()));
        }
        RunConfig::parse(&toml::to_string(&table).expect("table serializes"))
            .map_err(|e| e.context("applying command-line overrides"))
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn simulate(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let dir = out_dir(&cfg)?;
    let scenario = cfg.scenario();
    let toml = cfg.to_toml();
    let stride = scenario.numerics.dt * scenario.numerics.sample_every as f64;
    let mut pending: Vec<f64> = cfg.output.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut written: Vec<PathBuf> = Vec::new();
    let t_unit = scenario.model()?.t_unit;
    let mut hook = |t: f64, psi1: &crate::grid::ComplexField2D, psi2: &crate::grid::ComplexField2D| -> Result<()> {
        while let Some(&target) = pending.first() {
            if t + 0.5 * stride < target {
                break;
            }
            pending.remove(0);
            for (k, psi) in [psi1, psi2].into_iter().enumerate() {
                let path = dir.join(format!("density_s{}_t{:010.3}.bin", k + 1, target));
                write_density_snapshot(&path, &psi.grid, &density(psi), t)?;
                let notes = vec![
                    format!("density snapshot of species {}", k + 1),
                    format!("requested t = {target}, recorded t = {t} (1/omega_perp) = {:.6} s", t * t_unit),
                ];
                write_sidecar(&sidecar_path(&path), &notes, &toml)?;
                written.push(path);
            }
        }
        Ok(())
    };
    let out = scenario.run(Some(&mut hook))?;
    let path = dir.join("timeseries.csv");
    write_timeseries(&out.series, &path)?;
    write_sidecar(&sidecar_path(&path), &["time series of one evolution".into()], &toml)?;
    println!("wrote {} ({} samples)", path.display(), out.series.len());
    for p in written {
        println!("wrote {}", p.display());
    }
    if !pending.is_empty() {
        println!("snapshot times beyond the run end were skipped: {pending:?}");
    }
    Ok(())
}

fn run_sweep(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let dir = out_dir(&cfg)?;
    let threads = resolve_threads(args.threads);
    info!("sweeping {} cells on {threads} threads", cfg.sweep.r0_values.len() * cfg.sweep.a12_values.len());
    let result = sweep(
        &cfg.scenario(),
        &cfg.sweep.r0_values,
        &cfg.sweep.a12_values,
        cfg.target(),
        threads,
    )?;
    let toml = cfg.to_toml();
    let table = dir.join("sweep.csv");
    write_sweep(&result, &table)?;
    write_sidecar(&sidecar_path(&table), &[format!("{} yield sweep", cfg.sweep.target)], &toml)?;
    let contours = dir.join("contours.csv");
    write_contours(&sweep_contours(&result, &cfg.sweep.levels), &contours)?;
    write_sidecar(&sidecar_path(&contours), &["iso-yield contours".into()], &toml)?;
    for (r0, best) in result.argmax_a12() {
        match best {
            Some(a) => println!("r0 = {r0}: best a12 = {a} a11"),
            None => println!("r0 = {r0}: no successful cell"),
        }
    }
    println!("wrote {} and {}", table.display(), contours.display());
    Ok(())
}

fn analyze(input: &Path, args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let series = read_timeseries(input)?;
    let scenario = cfg.scenario();
    let mr = scenario.physical.mass_ratio();
    let r0 = scenario.geometry.r0;
    let t_unit = scenario.model()?.t_unit;
    match measure_revivals(&series, r0, mr, REVIVAL_WINDOW) {
        Ok(rev) => println!(
            "T_R1 = {:.3}  T_R2 = {:.3}  T_R2 - T_R1 = {:.3}  (analytic {:.3}, {:.3}, {:.3})",
            rev.t1,
            rev.t2,
            rev.difference(),
            analytic_revival_time(r0, 0, 1, mr),
            analytic_revival_time(r0, 1, 1, mr),
            analytic_revival_difference(r0, mr)
        ),
        Err(e) => println!("revivals: {e}"),
    }
    let peaks = separability_scan(&series, analytic_revival_time(r0, 1, 1, mr))?;
    println!("label  t(1/omega_perp)  t(s)     S(%)");
    for p in &peaks.peaks {
        println!("{:5}  {:15.3}  {:7.4}  {:5.1}", p.label.name(), p.t, p.t * t_unit, 100.0 * p.value);
    }
    Ok(())
}

fn oracle(r0: f64, m1: f64, m2: f64, w: f64, t: Option<f64>) -> Result<()> {
    if !(r0 > 0.0 && m1 > 0.0 && m2 > 0.0 && w > 0.0) {
        return Err(Error::InvalidParameter("r0, m1, m2 and w must be positive".into()));
    }
    let mr = m2 / m1;
    println!("T_{{R,1}}={:.3}", analytic_revival_time(r0, 0, 1, mr));
    println!("T_{{R,2}}={:.3}", analytic_revival_time(r0, 1, 1, mr));
    println!("ΔT_R={:.3}", analytic_revival_difference(r0, mr));
    if let Some(t) = t {
        println!("w_1(t)={:.6}", free_width(w, t, 0, mr));
        println!("w_2(t)={:.6}", free_width(w, t, 1, mr));
    }
    Ok(())
}

fn self_check() -> Result<bool> {
    let mut ok = true;
    for c in check::run_all()? {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(ok)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Analyze { input, run } => analyze(input, run),
        Command::Oracle { r0, m1, m2, w, t } => oracle(*r0, *m1, *m2, *w, *t),
        Command::Check => match self_check() {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
