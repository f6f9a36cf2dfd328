//! Command line driver: configuration, run, artifacts.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;

use crate::enclosure::EnclosedDensity;
use crate::map::parse::parse_map;
use crate::map::{MapError, PiecewiseMap};
use crate::matrix::NormKind;
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, RunResult};
use crate::report::{report, CertificateReport};

pub const DENSITY_CSV: &str = "density.csv";
pub const DENSITY_PLOT: &str = "density.dat";
pub const MAP_PLOT: &str = "map.dat";
pub const CERTIFICATE_JSON: &str = "certificate.json";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const MATRIX_DUMP: &str = "matrix.txt";
const MAP_PLOT_POINTS: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "invdens", version, about = "Certified invariant density and Lyapunov exponent of a piecewise expanding map")]
pub struct Cli {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Map description file.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// l1 (Ulam) or linf (hat basis, circle maps).
    #[arg(long)]
    pub mode: Option<NormKind>,
    /// Cells (l1) or hat nodes (linf).
    #[arg(long)]
    pub k: Option<i64>,
    /// Subdivision threshold of the l1 assembly.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long = "eps-num")]
    pub eps_num: Option<f64>,
    /// Replaces the `iterate` directive of the map file.
    #[arg(long)]
    pub iterate: Option<u32>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    #[arg(long = "dump-matrix")]
    pub dump_matrix: bool,
    #[arg(long)]
    pub verbose: bool,
    #[arg(long = "no-lyap")]
    pub no_lyap: bool,
    /// Name recorded in the certificate; the map file stem by default.
    #[arg(long = "map-id")]
    pub map_id: Option<String>,
    #[arg(long = "j-max")]
    pub j_max: Option<usize>,
}

/// Contents of a configuration file. Keys may sit at top level or in any `[section]`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub map: Option<PathBuf>,
    /// Inline map description, used when `map` is absent.
    pub map_spec: Option<String>,
    pub mode: Option<String>,
    pub k: Option<i64>,
    pub nu: Option<f64>,
    pub eps_num: Option<f64>,
    pub iterate: Option<u32>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub dump_matrix: Option<bool>,
    pub verbose: Option<bool>,
    pub lyapunov: Option<bool>,
    pub map_id: Option<String>,
    pub j_max: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut flat = toml::Table::new();
        for (key, value) in table {
            match value {
                toml::Value::Table(section) => {
                    for (k, v) in section {
                        if flat.insert(k.clone(), v).is_some() {
                            return Err(CliError::Config(format!("key `{k}` given twice (section `{key}`)")));
                        }
                    }
                }
                v => {
                    if flat.insert(key.clone(), v).is_some() {
                        return Err(CliError::Config(format!("key `{key}` given twice")));
                    }
                }
            }
        }
        toml::Value::Table(flat).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.map = cfg.map.map(|p| base.join(p));
        cfg.out_dir = cfg.out_dir.map(|p| base.join(p));
        if cfg.map_id.is_none() && cfg.map.is_none() {
            cfg.map_id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapSource {
    File(PathBuf),
    Inline(String),
}

/// Fully resolved run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub map: MapSource,
    pub iterate: Option<u32>,
    pub pipeline: PipelineConfig,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
    pub dump_matrix: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let map = match (&cli.map, file.map, file.map_spec) {
            (Some(p), _, _) => MapSource::File(p.clone()),
            (None, Some(p), _) => MapSource::File(p),
            (None, None, Some(s)) => MapSource::Inline(s),
            (None, None, None) => return Err(CliError::Config("no map given (--map or `map` in the config)".into())),
        };
        let mode = match (cli.mode, file.mode) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse().map_err(CliError::Config)?,
            (None, None) => NormKind::L1,
        };
        let k = cli.k.or(file.k).ok_or_else(|| CliError::Config("k is required".into()))?;
        let k = usize::try_from(k).map_err(|_| CliError::Config(format!("k must be positive, got {k}")))?;
        let map_id = cli.map_id.clone().or(file.map_id).unwrap_or_else(|| match &map {
            MapSource::File(p) => p.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned()),
            MapSource::Inline(_) => "map".into(),
        });
        let mut pipeline = PipelineConfig::new(mode, k, map_id);
        pipeline.nu = cli.nu.or(file.nu);
        pipeline.eps_num = cli.eps_num.or(file.eps_num);
        if let Some(j) = cli.j_max.or(file.j_max) {
            pipeline.j_max = j;
        }
        pipeline.lyapunov = !cli.no_lyap && file.lyapunov.unwrap_or(true);
        pipeline.verbose = cli.verbose || file.verbose.unwrap_or(false);
        if let Some(0) = cli.iterate.or(file.iterate) {
            return Err(CliError::Config("iterate must be at least 1".into()));
        }
        let cfg = RunConfig {
            map,
            iterate: cli.iterate.or(file.iterate),
            pipeline,
            workers: cli.workers.or(file.workers),
            out_dir: cli.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            dump_matrix: cli.dump_matrix || file.dump_matrix.unwrap_or(false),
        };
        cfg.pipeline.validate()?;
        if cfg.workers == Some(0) {
            return Err(CliError::Config("workers must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load_map(&self) -> Result<PiecewiseMap<f64>, CliError> {
        let text = match &self.map {
            MapSource::File(p) => fs::read_to_string(p).map_err(|e| CliError::Io(p.clone(), e))?,
            MapSource::Inline(s) => s.clone(),
        };
        let mut spec = parse_map(&text).map_err(|e| CliError::Config(format!("map description: {e}")))?;
        if let Some(p) = self.iterate {
            spec.iterate = p;
        }
        PiecewiseMap::build(spec).map_err(|e| match e {
            MapError::ExpansionTooWeak { .. } | MapError::NoContractingPower => CliError::Pipeline(PipelineError::Expansion(e)),
            other => CliError::Config(other.to_string()),
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, io::Error),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Pipeline(e) => e.exit_code(),
            _ => 1,
        }
    }
}

/// Completed run with its rendered report.
pub struct RunOutput {
    pub result: RunResult<f64>,
    pub report: CertificateReport,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let map = cfg.load_map()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    let result = pool.install(|| run_pipeline(&map, &cfg.pipeline))?;
    let rep = report(&result.certificate, result.lyapunov.as_ref(), &result.density, &result.ly);
    let files = write_artifacts(cfg, &map, &result, &rep)?;
    Ok(RunOutput { result, report: rep, files })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

fn write_artifacts(cfg: &RunConfig, map: &PiecewiseMap<f64>, result: &RunResult<f64>, rep: &CertificateReport) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut files = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<fs::File>) -> io::Result<()>| -> Result<(), CliError> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        f(&mut w).and_then(|_| w.flush()).map_err(io_at(&path))?;
        files.push(path);
        Ok(())
    };
    emit(DENSITY_CSV, &|w| write_density_csv(&result.density, w))?;
    emit(DENSITY_PLOT, &|w| write_density_plot(&result.density, w))?;
    emit(MAP_PLOT, &|w| write_map_plot(map, MAP_PLOT_POINTS, w))?;
    emit(CERTIFICATE_JSON, &|w| writeln!(w, "{}", serde_json::to_string_pretty(&result.certificate).expect("certificate serializes")))?;
    emit(REPORT_TXT, &|w| w.write_all(rep.render_table().as_bytes()))?;
    emit(REPORT_JSON, &|w| writeln!(w, "{}", rep.to_json()))?;
    if cfg.dump_matrix {
        emit(MATRIX_DUMP, &|w| result.matrix.dump(w))?;
    }
    Ok(files)
}

/// `i,left,right,value`: Ulam cells in `l1` mode, hat supports in `linf` mode.
pub fn write_density_csv<W: Write>(d: &EnclosedDensity<f64>, mut w: W) -> io::Result<()> {
    let k = d.values.len();
    writeln!(w, "i,left,right,value")?;
    for (i, v) in d.values.iter().enumerate() {
        let (l, r) = match d.norm_kind {
            NormKind::L1 => (i as f64 / k as f64, (i + 1) as f64 / k as f64),
            NormKind::Linf => ((i as f64 - 1.0) / k as f64, (i + 1) as f64 / k as f64),
        };
        writeln!(w, "{i},{l},{r},{v}")?;
    }
    Ok(())
}

/// `x density` at the `k` cell midpoints.
pub fn write_density_plot<W: Write>(d: &EnclosedDensity<f64>, mut w: W) -> io::Result<()> {
    let k = d.values.len();
    for i in 0..k {
        let x = (i as f64 + 0.5) / k as f64;
        let v = match d.norm_kind {
            NormKind::L1 => d.values[i],
            NormKind::Linf => 0.5 * (d.values[i] + d.values[(i + 1) % k]),
        };
        writeln!(w, "{x} {v}")?;
    }
    Ok(())
}

/// `x T(x)` of the iterated map at `n` midpoints; points on a breakpoint enclosure are skipped.
pub fn write_map_plot<W: Write>(map: &PiecewiseMap<f64>, n: usize, mut w: W) -> io::Result<()> {
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        if let Some(y) = map.eval_point(x) {
            writeln!(w, "{x} {y}")?;
        }
    }
    Ok(())
}

/// Parses `args`, runs, prints the table; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(out) => {
            print!("{}", out.report.render_table());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("hint: the map is not expanding enough; try a higher --iterate");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_flatten() {
        let c = FileConfig::parse("k = 64\n[run]\nmode = \"linf\"\n[output]\nout_dir = \"o\"\n").unwrap();
        assert_eq!(c.k, Some(64));
        assert_eq!(c.mode.as_deref(), Some("linf"));
        assert_eq!(c.out_dir, Some(PathBuf::from("o")));
    }

    #[test]
    fn duplicate_and_unknown_keys_rejected() {
        assert!(FileConfig::parse("k = 64\n[run]\nk = 32\n").is_err());
        assert!(FileConfig::parse("kk = 64\n").is_err());
    }
}
