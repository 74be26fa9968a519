//! Command-line front end for `sponge-core`.
//!
//! Every subcommand parses its inputs, calls one library operation and
//! serializes the result. Machine output goes to `out`, diagnostics to `err`.

pub mod error;
pub mod input;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Map, Value};
use sponge_core::cubes::{approximate_cube, count_cubes, prefractal, scale_exponents};
use sponge_core::dims::{dim_report, lg_family_dims};
use sponge_core::model::Extremum;
use sponge_core::verify::{
    check_tangent_with, doubling_report, positive_simplex_grid, scan_ball_ratios_vssc, scan_cube_ratios,
    tangent_construction, witnesses, DoublingConfig, Neighbourhood, ScanConfig,
};
use sponge_core::{BernoulliMeasure, Sponge, DEFAULT_ENUMERATION_CAP};

pub use error::{CliError, Result};
use input::{parse_positive, parse_scale, parse_word, read_measure, read_sponge, tuple_string, ParsedScale};
use output::{document, rational, word_string, write_json};

#[derive(Debug, Parser)]
#[command(name = "sponge", version, about = "Dimensions, measures and numeric checks for self-affine sponges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assouad, lower, box and Hausdorff dimensions.
    Dims { file: PathBuf },
    /// Check a sponge file and summarize its structure.
    Validate { file: PathBuf },
    /// The coordinate uniform weights.
    Weights { file: PathBuf },
    /// Measure of the approximate cube of a word at a scale.
    CubeMeasure {
        file: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long)]
        scale: String,
        /// Probability file; coordinate uniform when absent.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Number of approximate cubes at a scale.
    Count {
        file: PathBuf,
        #[arg(long)]
        scale: String,
    },
    /// Random check of the cube-ratio sandwich.
    Scan {
        file: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
        /// Write every sample to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random check of the ball-ratio sandwich under the separation condition.
    BallScan {
        file: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Largest neighbouring-cube ratio per depth and a doubling verdict.
    Doubling {
        file: PathBuf,
        #[arg(long, conflicts_with = "grid")]
        measure: Option<PathBuf>,
        /// Run every strictly positive weight vector with entries in STEP·ℕ.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 10)]
        max_depth: u64,
        /// face, touching or near:G
        #[arg(long, default_value = "face", value_parser = parse_neighbourhood)]
        neighbourhood: Neighbourhood,
    },
    /// Compare a rescaled approximate cube with the limiting product set.
    Tangent {
        file: PathBuf,
        #[arg(long)]
        scale: String,
        #[arg(long, value_enum, default_value_t = Mode::Max)]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        level: u64,
        /// Witness digits for coordinates 2..d, e.g. "1,1,1;1,2,2".
        #[arg(long)]
        witness: Option<String>,
        /// Write the image and limit boxes to this CSV file.
        #[arg(long)]
        emit_boxes: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Dimensions of the three-map carpet family as CSV.
    FamilyLg {
        #[arg(long)]
        min: String,
        #[arg(long)]
        max: String,
        #[arg(long)]
        step: String,
    },
    /// Write the level-M pre-fractal as SVG (planar only) or CSV.
    Render {
        file: PathBuf,
        #[arg(long)]
        level: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
}

#[derive(Debug, Args)]
pub struct Sampling {
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    depth: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Max,
    Min,
}

impl From<Mode> for Extremum {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Max => Extremum::Max,
            Mode::Min => Extremum::Min,
        }
    }
}

fn parse_neighbourhood(s: &str) -> std::result::Result<Neighbourhood, String> {
    match s {
        "face" => Ok(Neighbourhood::Face),
        "touching" => Ok(Neighbourhood::Touching),
        _ => s
            .strip_prefix("near:")
            .and_then(|g| g.parse::<u32>().ok())
            .filter(|&g| g >= 1)
            .map(Neighbourhood::Near)
            .ok_or_else(|| format!("expected face, touching or near:G, got {s:?}")),
    }
}

/// Parses `args` (program name first) and runs one subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn scale_json(p: &ParsedScale) -> Value {
    json!({
        "input": p.input,
        "exact": p.scale.value().to_string(),
        "rounded": p.rounded,
    })
}

fn note_rounding(p: &ParsedScale, err: &mut dyn Write) -> Result<()> {
    if p.rounded {
        writeln!(err, "note: scale {} read as {}", p.input, p.scale.value())?;
    }
    Ok(())
}

fn measure_or_uniform(s: &Sponge, path: Option<&Path>) -> Result<BernoulliMeasure> {
    match path {
        Some(p) => read_measure(s, p),
        None => Ok(BernoulliMeasure::coordinate_uniform(s)),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source: e.into() }
}

fn sponge_header(doc: &mut Map<String, Value>, file: &Path, s: &Sponge) {
    doc.insert("file".into(), json!(file.display().to_string()));
    doc.insert("bases".into(), json!(s.bases()));
}

/// Runs an already parsed subcommand.
pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Dims { file } => {
            let s = read_sponge(file)?;
            let mut doc = document("dims");
            sponge_header(&mut doc, file, &s);
            doc.extend(output::dims(&dim_report(&s)));
            write_json(out, doc)?;
        }
        Command::Validate { file } => {
            let s = read_sponge(file)?;
            let mut doc = document("validate");
            sponge_header(&mut doc, file, &s);
            doc.insert("valid".into(), json!(true));
            doc.insert("dimension".into(), json!(s.dim()));
            doc.insert("digit_count".into(), json!(s.digits().len()));
            doc.insert("strictly_increasing_bases".into(), json!(s.is_strict()));
            doc.insert("uniform_fibres".into(), json!(s.has_uniform_fibres()));
            doc.insert("vssc".into(), json!(s.satisfies_vssc()));
            let counts: Vec<usize> = (0..s.dim()).map(|l| s.projection(l + 1).map_or(0, <[_]>::len)).collect();
            doc.insert("projection_sizes".into(), json!(counts));
            write_json(out, doc)?;
        }
        Command::Weights { file } => {
            let s = read_sponge(file)?;
            let m = BernoulliMeasure::coordinate_uniform(&s);
            let mut table = Map::new();
            let mut sum = BigRational::from_integer(0.into());
            for (t, w) in m.weights() {
                table.insert(tuple_string(t), rational(w));
                sum += w;
            }
            let mut doc = document("weights");
            sponge_header(&mut doc, file, &s);
            doc.insert("weights".into(), Value::Object(table));
            doc.insert("sum".into(), rational(&sum));
            doc.insert("sums_to_one".into(), json!(sum.is_one()));
            write_json(out, doc)?;
        }
        Command::CubeMeasure { file, word, scale, measure } => {
            let s = read_sponge(file)?;
            let word = parse_word(word)?;
            let r = parse_scale(scale)?;
            let m = measure_or_uniform(&s, measure.as_deref())?;
            note_rounding(&r, err)?;
            let cube = approximate_cube(&s, &word, &r.scale)?;
            let value = m.approximate_cube_measure(&cube)?;
            let mut doc = document("cube-measure");
            sponge_header(&mut doc, file, &s);
            doc.insert("scale".into(), scale_json(&r));
            doc.insert("exponents".into(), json!(cube.k));
            let tracks: Vec<String> =
                cube.tracks.iter().map(|t| t.iter().map(u32::to_string).collect::<Vec<_>>().join(",")).collect();
            doc.insert("tracks".into(), json!(tracks));
            doc.insert("measure".into(), output::measure_value(&value));
            write_json(out, doc)?;
        }
        Command::Count { file, scale } => {
            let s = read_sponge(file)?;
            let r = parse_scale(scale)?;
            note_rounding(&r, err)?;
            let count = count_cubes(&s, &r.scale);
            let mut doc = document("count");
            sponge_header(&mut doc, file, &s);
            doc.insert("scale".into(), scale_json(&r));
            doc.insert("exponents".into(), json!(scale_exponents(&s, &r.scale).k));
            doc.insert("count".into(), json!(count.to_string()));
            write_json(out, doc)?;
        }
        Command::Scan { file, measure, sampling, csv } => {
            let s = read_sponge(file)?;
            let m = measure_or_uniform(&s, measure.as_deref())?;
            let cfg = ScanConfig { samples: sampling.samples, seed: sampling.seed, depth: sampling.depth, record: csv.is_some() };
            let report = scan_cube_ratios(&s, &m, &cfg)?;
            if let Some(path) = csv {
                output::scan_csv(&mut create(path)?, &report).map_err(|e| csv_error(path, e))?;
            }
            let mut doc = document("scan");
            sponge_header(&mut doc, file, &s);
            doc.insert("measure".into(), json!(measure.as_ref().map_or("coordinate-uniform".to_string(), |p| p.display().to_string())));
            doc.insert("seed".into(), json!(cfg.seed));
            doc.insert("depth".into(), json!(cfg.depth));
            doc.extend(output::scan(&report));
            write_json(out, doc)?;
        }
        Command::BallScan { file, sampling, cap, csv } => {
            let s = read_sponge(file)?;
            let cfg = ScanConfig { samples: sampling.samples, seed: sampling.seed, depth: sampling.depth, record: csv.is_some() };
            let report = scan_ball_ratios_vssc(&s, &cfg, *cap)?;
            if let Some(path) = csv {
                output::scan_csv(&mut create(path)?, &report).map_err(|e| csv_error(path, e))?;
            }
            let mut doc = document("ball-scan");
            sponge_header(&mut doc, file, &s);
            doc.insert("seed".into(), json!(cfg.seed));
            doc.insert("depth".into(), json!(cfg.depth));
            doc.extend(output::scan(&report));
            write_json(out, doc)?;
        }
        Command::Doubling { file, measure, grid, max_depth, neighbourhood } => {
            let s = read_sponge(file)?;
            let cfg = DoublingConfig { max_depth: *max_depth, neighbourhood: *neighbourhood, ..DoublingConfig::default() };
            let mut doc = document("doubling");
            sponge_header(&mut doc, file, &s);
            match grid {
                None => {
                    let m = measure_or_uniform(&s, measure.as_deref())?;
                    let report = doubling_report(&s, &m, &cfg)?;
                    doc.insert("measure".into(), json!(measure.as_ref().map_or("coordinate-uniform".to_string(), |p| p.display().to_string())));
                    doc.extend(output::doubling(&report, true));
                }
                Some(step) => {
                    let parts = grid_parts(step)?;
                    let mut rows = Vec::new();
                    let mut all_non_doubling = true;
                    for vector in positive_simplex_grid(s.digits().len(), parts) {
                        let weights: Vec<(Vec<u32>, BigRational)> =
                            s.digits().iter().map(|t| t.to_vec()).zip(vector).collect();
                        let m = BernoulliMeasure::new(&s, weights)?;
                        let report = doubling_report(&s, &m, &cfg)?;
                        all_non_doubling &= matches!(report.verdict, sponge_core::verify::DoublingVerdict::NonDoublingCertificate { .. });
                        let mut row = Map::new();
                        let table: Map<String, Value> = m.weights().map(|(t, w)| (tuple_string(t), rational(w))).collect();
                        row.insert("weights".into(), Value::Object(table));
                        row.extend(output::doubling(&report, false));
                        rows.push(Value::Object(row));
                    }
                    doc.insert("grid_step".into(), json!(format!("1/{parts}")));
                    doc.insert("vectors".into(), json!(rows.len()));
                    doc.insert("all_non_doubling".into(), json!(all_non_doubling));
                    doc.insert("results".into(), Value::Array(rows));
                }
            }
            write_json(out, doc)?;
        }
        Command::Tangent { file, scale, mode, level, witness, emit_boxes, cap } => {
            let s = read_sponge(file)?;
            let r = parse_scale(scale)?;
            note_rounding(&r, err)?;
            let chosen = match witness {
                Some(w) => parse_word(w)?,
                None => witnesses(&s, (*mode).into())?,
            };
            let check = check_tangent_with(&s, &r.scale, &chosen, *level, *cap)?;
            let construction = tangent_construction(&s, &r.scale, &chosen, *level, *cap)?;
            if let Some(path) = emit_boxes {
                let (image, hat) = (construction.image.to_box_set(), construction.hat.to_box_set());
                output::boxes_csv(&mut create(path)?, &[("image", &image), ("hat", &hat)])
                    .map_err(|e| csv_error(path, e))?;
            }
            let mut doc = document("tangent");
            sponge_header(&mut doc, file, &s);
            doc.insert("scale".into(), scale_json(&r));
            doc.insert("mode".into(), json!(format!("{mode:?}").to_lowercase()));
            doc.insert("level".into(), json!(level));
            doc.insert("witnesses".into(), json!(word_string(&chosen)));
            doc.insert("exponents".into(), json!(construction.map.cube.k));
            doc.insert("hat_factors".into(), json!(construction.factors));
            doc.insert("distance".into(), json!(check.distance));
            doc.insert("limit_term".into(), json!(check.limit_term));
            doc.insert("resolution_slack".into(), json!(check.resolution_slack));
            doc.insert("bound".into(), json!(check.bound));
            doc.insert("within_bound".into(), json!(check.ok));
            doc.insert("contained".into(), json!(check.contained));
            doc.insert("lipschitz_ratio".into(), rational(&check.lipschitz_ratio));
            doc.insert("lipschitz_ok".into(), json!(check.lipschitz_ok));
            doc.insert("image_cells".into(), json!(check.image_cells));
            doc.insert("hat_cells".into(), json!(check.hat_cells));
            write_json(out, doc)?;
        }
        Command::FamilyLg { min, max, step } => {
            let (lo, hi, h) = (parse_positive(min)?, parse_positive(max)?, parse_positive(step)?);
            if lo > hi {
                return Err(CliError::Usage("--min exceeds --max".into()));
            }
            let mut rows = Vec::new();
            let mut lambda = lo;
            while lambda <= hi {
                let x = lambda.to_f64().ok_or_else(|| CliError::Usage("lambda out of range".into()))?;
                rows.push(lg_family_dims(x)?);
                lambda += &h;
            }
            output::family_csv(out, &rows).map_err(|e| CliError::Output(e.into()))?;
        }
        Command::Render { file, level, out: path, cap } => {
            let s = read_sponge(file)?;
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if ext != "svg" && ext != "csv" {
                return Err(CliError::Usage(format!("--out must end in .svg or .csv, got {}", path.display())));
            }
            if ext == "svg" && s.dim() != 2 {
                return Err(CliError::Usage(format!("SVG needs a planar carpet; this sponge has d = {}", s.dim())));
            }
            let set = prefractal(&s, *level, *cap)?;
            let mut w = create(path)?;
            if ext == "svg" {
                output::svg(&mut w, &set).map_err(|source| CliError::Io { path: path.clone(), source })?;
            } else {
                output::boxes_csv(&mut w, &[("prefractal", &set)]).map_err(|e| csv_error(path, e))?;
            }
            w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
            let mut doc = document("render");
            sponge_header(&mut doc, file, &s);
            doc.insert("level".into(), json!(level));
            doc.insert("format".into(), json!(ext));
            doc.insert("out".into(), json!(path.display().to_string()));
            doc.insert("boxes".into(), json!(set.len()));
            write_json(out, doc)?;
        }
    }
    Ok(())
}

/// `STEP = 1/q` as the integer `q`.
fn grid_parts(step: &str) -> Result<u32> {
    let v = parse_positive(step)?;
    let inv = v.recip();
    match (inv.is_integer(), inv.to_integer().to_u32()) {
        (true, Some(q)) if q >= 1 => Ok(q),
        _ => Err(CliError::Usage(format!("--grid needs a step 1/q, got {step:?}"))),
    }
}
