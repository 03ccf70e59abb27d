use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rampflex::format::{fmt9, round9};
use rampflex::grid::{solve_dispatch_with, GridModel};
use rampflex::lp::LpStatus;
use rampflex::models;
use rampflex::risk::{self, Band, EmpiricalErrorDistribution, Grid, RiskError};
use rampflex::surface::{build_surface_with, contour_with, ContourSet, CostSurface, SurfaceError};
use rampflex::tolerance::{Tolerances, TOLERANCE_ENV};

/// Ramping-product cost surfaces and risk-limiting ramp awards for DC dispatch models.
#[derive(Parser, Debug)]
#[command(name = "rampflex", version)]
struct Cli {
    /// Tolerance overrides, e.g. `feas=1e-8,val=1e-7`; applied after the
    /// environment variable.
    #[arg(long, global = true)]
    tolerances: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimum-cost dispatch at fixed ramping awards.
    Dispatch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        fu: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        fd: f64,
    },
    /// Triangulated cost surface over the ramping region.
    Surface {
        #[command(flatten)]
        common: Common,
    },
    /// Equally spaced cost contours.
    Contour {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 'k', default_value_t = 10)]
        levels: usize,
    },
    /// Cheapest ramping awards meeting a confidence level on forecast errors.
    Risk {
        #[command(flatten)]
        common: Common,
        /// CSV with header `predicted_mw,actual_mw`.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        /// Grid step in MW; defaults to 1/200 of the error support.
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        /// Restrict to one output band; requires `--capacity`.
        #[arg(long, requires = "capacity")]
        band: Option<Band>,
        /// Plant capacity in MW, used for band assignment.
        #[arg(long)]
        capacity: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Model JSON path or bundled name (`threebus`, `garver6`).
    #[arg(long, default_value = "threebus")]
    model: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Exit status for a well-formed run whose program has no feasible point.
const EXIT_INFEASIBLE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INFEASIBLE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn tolerances(cli_override: Option<&str>) -> Result<Tolerances> {
    let tol = Tolerances::from_env().map_err(anyhow::Error::msg).with_context(|| format!("reading {TOLERANCE_ENV}"))?;
    match cli_override {
        Some(spec) => tol.with_overrides(spec).map_err(anyhow::Error::msg),
        None => Ok(tol),
    }
}

fn load_model(name: &str) -> Result<GridModel> {
    let path = Path::new(name);
    if path.exists() {
        return GridModel::load(path).with_context(|| format!("loading model {name}"));
    }
    models::by_name(name).with_context(|| format!("no model file or bundled model named {name:?}"))
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Returns `Ok(false)` when the requested program is infeasible.
fn run(cli: Cli) -> Result<bool> {
    let tol = tolerances(cli.tolerances.as_deref())?;
    match cli.command {
        Command::Dispatch { common, fu, fd } => dispatch(&common, fu, fd, &tol),
        Command::Surface { common } => surface(&common, tol),
        Command::Contour { common, levels } => contour(&common, levels, tol),
        Command::Risk { common, samples, p, delta, band, capacity } => {
            risk_cmd(&common, &samples, p, delta, band, capacity, tol)
        }
    }
}

fn dispatch(common: &Common, fu: f64, fd: f64, tol: &Tolerances) -> Result<bool> {
    if !(fu >= 0.0 && fd >= 0.0) {
        bail!("ramping awards must be nonnegative, got --fu {fu} --fd {fd}");
    }
    let model = load_model(&common.model)?;
    let sol = solve_dispatch_with(&model, fu, fd, tol)?;
    let text = match common.format {
        Format::Json => sol.to_json() + "\n",
        Format::Csv => {
            let mut out = String::from("generator,t,g,r_up,r_down\n");
            for (n, id) in sol.generators.iter().enumerate() {
                for t in 0..sol.g.get(n).map_or(0, Vec::len) {
                    let award = |m: &Vec<Vec<f64>>| if t == 0 { 0.0 } else { m[n][t - 1] };
                    out.push_str(&format!(
                        "{id},{t},{},{},{}\n",
                        fmt9(sol.g[n][t]),
                        fmt9(award(&sol.r_up)),
                        fmt9(award(&sol.r_down))
                    ));
                }
            }
            out
        }
    };
    emit(common, &text)?;
    match sol.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => {
            eprintln!("dispatch is infeasible at f_u = {fu}, f_d = {fd}");
            Ok(false)
        }
        LpStatus::Unbounded => bail!("dispatch is unbounded"),
    }
}

fn build(model: &GridModel, tol: Tolerances) -> Result<Option<CostSurface>> {
    match build_surface_with(model, tol) {
        Ok(s) => Ok(Some(s)),
        Err(SurfaceError::BaseInfeasible) => {
            eprintln!("model {} is infeasible without ramping requirements", model.name);
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn surface(common: &Common, tol: Tolerances) -> Result<bool> {
    let model = load_model(&common.model)?;
    let Some(s) = build(&model, tol)? else { return Ok(false) };
    let text = match common.format {
        Format::Json => s.to_json() + "\n",
        Format::Csv => {
            let mut out = String::from("triangle,f_u,f_d,cost\n");
            for (t, tri) in s.triangles.iter().enumerate() {
                for &v in tri {
                    let v = &s.vertices[v];
                    out.push_str(&format!("{t},{},{},{}\n", fmt9(v.f_u), fmt9(v.f_d), fmt9(v.cost)));
                }
            }
            out
        }
    };
    emit(common, &text)?;
    let (free_u, free_d) = s.free_widths();
    eprintln!("triangles: {}", s.triangles.len());
    eprintln!("base cost: {}", fmt9(s.base_cost));
    eprintln!("max cost: {} at ({}, {})", fmt9(s.theta_max), fmt9(s.bounds.argmax.0), fmt9(s.bounds.argmax.1));
    eprintln!("free ramping: up {} MW, down {} MW", fmt9(free_u), fmt9(free_d));
    Ok(true)
}

#[derive(Serialize)]
struct ContourExport {
    levels: Vec<f64>,
    lines: Vec<LineExport>,
}

#[derive(Serialize)]
struct LineExport {
    level: f64,
    points: Vec<[f64; 2]>,
}

impl From<&ContourSet> for ContourExport {
    fn from(set: &ContourSet) -> Self {
        ContourExport {
            levels: set.levels.iter().map(|&l| round9(l)).collect(),
            lines: set
                .lines
                .iter()
                .map(|l| LineExport {
                    level: round9(l.level),
                    points: l.points.iter().map(|&(u, d)| [round9(u), round9(d)]).collect(),
                })
                .collect(),
        }
    }
}

fn contour(common: &Common, levels: usize, tol: Tolerances) -> Result<bool> {
    if levels < 2 {
        bail!("--levels must be at least 2, got {levels}");
    }
    let model = load_model(&common.model)?;
    let set = match contour_with(&model, levels, tol) {
        Ok(set) => set,
        Err(SurfaceError::BaseInfeasible) => {
            eprintln!("model {} is infeasible without ramping requirements", model.name);
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&ContourExport::from(&set))? + "\n",
        Format::Csv => set.to_csv(),
    };
    emit(common, &text)?;
    Ok(true)
}

fn risk_cmd(
    common: &Common,
    samples: &Path,
    p: f64,
    delta: Option<f64>,
    band: Option<Band>,
    capacity: Option<f64>,
    tol: Tolerances,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        bail!("--p must lie in [0, 1], got {p}");
    }
    if let Some(d) = delta {
        if !(d > 0.0) {
            bail!("--delta must be positive, got {d}");
        }
    }
    let records = risk::load_samples_csv(samples).with_context(|| format!("reading samples {}", samples.display()))?;
    let dist = match (band, capacity) {
        (Some(b), Some(c)) => risk::ingest_samples(&records, c)?.band(b)?,
        _ => EmpiricalErrorDistribution::new(records.iter().map(|&(pred, act)| act - pred).collect())?,
    };
    let model = load_model(&common.model)?;
    let Some(s) = build(&model, tol)? else { return Ok(false) };
    let delta = delta.unwrap_or_else(|| Grid::default_delta(&dist));
    let result = match risk::risk_dispatch(&s, &dist, p, delta) {
        Ok(r) => r,
        Err(e @ RiskError::NoFeasiblePair { .. }) => {
            eprintln!("{e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let text = match common.format {
        Format::Json => result.to_json() + "\n",
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
            format!(
                "f_u,f_d,cost,ds,confidence,greedy_f_u,greedy_f_d,greedy_cost,greedy_ds\n{},{},{},{},{},{},{},{},{}\n",
                fmt9(result.f_u),
                fmt9(result.f_d),
                fmt9(result.cost),
                fmt9(result.ds),
                fmt9(result.confidence),
                fmt9(result.greedy.f_u),
                fmt9(result.greedy.f_d),
                opt(result.greedy.cost),
                opt(result.greedy.ds)
            )
        }
    };
    emit(common, &text)?;
    Ok(true)
}
