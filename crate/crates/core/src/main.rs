use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use capdeform::curvature::{boundary_ii_eig, warped_curvature};
use capdeform::deform::{
    boundary_perturb, conformal_collar, double, glue_interpolate, shift, smooth_c1, Smoothness,
};
use capdeform::flow::{run_flow, FlowMode, FlowOptions};
use capdeform::metric::{build_warped, Profile, WarpedBallMetric};
use capdeform::pipeline::{build_path, PathParams, Theorem};
use capdeform::report::{emit_report, write_csv, Manifest, ReportFormat};
use capdeform::verdict::{check_membership, MetricClass};
use capdeform::{GeomError, Result};

#[derive(Parser)]
#[command(name = "capdeform", version, about = "Convex three-ball metrics: curvature, deformation paths and Ricci flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature field and boundary form of a profile.
    Curvature(Common),
    /// Double a ball and glue it across the boundary band.
    Glue(Common),
    /// Ricci flow of the doubled (glued and smoothed) profile.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModeArg::Normalized)]
        mode: ModeArg,
    },
    /// Apply one deformation and report the class verdicts of the result.
    Deform {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: DeformOp,
        /// Conformal parameter for `--op collar`.
        #[arg(long, default_value_t = 0.05)]
        s: f64,
    },
    /// Build the full deformation path and print its manifest.
    Path(Common),
    /// Check class membership of a profile.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Defaults to the target class of `--theorem`.
        #[arg(long)]
        class: Option<MetricClass>,
    },
    /// Build the path and write the sample table and manifest to `--out`.
    Report(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Raw,
    Normalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeformOp {
    Shift,
    Double,
    Glue,
    Smooth,
    Perturb,
    Collar,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON file whose keys mirror the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// flat_ball[:R], hemisphere, round_cap:A or csv:PATH.
    #[arg(long)]
    profile: Option<String>,
    /// 1: path inside class D from a collar deformation; 2: path inside class C.
    #[arg(long)]
    theorem: Option<Theorem>,
    /// Gluing half-width (default 0.1·|r_min|).
    #[arg(long)]
    rho: Option<f64>,
    /// Shift depth (default 0.2·|r_min|).
    #[arg(long)]
    eps: Option<f64>,
    /// Boundary perturbation size; halved until every half passes.
    #[arg(long)]
    eta: Option<f64>,
    /// Half-width of the perturbation bump.
    #[arg(long)]
    r0: Option<f64>,
    /// Shift along the reconnecting paths; searched if absent.
    #[arg(long)]
    delta0: Option<f64>,
    /// Ramp width of the shift schedule, in path parameter.
    #[arg(long)]
    delta1: Option<f64>,
    /// Radial grid points of the input profile.
    #[arg(long)]
    grid: Option<usize>,
    /// Metrics checked per path stage.
    #[arg(long)]
    samples_per_stage: Option<usize>,
    /// Output directory for tables and manifests.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Config {
    profile: Option<String>,
    #[serde(default, deserialize_with = "theorem_any")]
    theorem: Option<Theorem>,
    rho: Option<f64>,
    eps: Option<f64>,
    eta: Option<f64>,
    r0: Option<f64>,
    delta0: Option<f64>,
    delta1: Option<f64>,
    grid: Option<usize>,
    samples_per_stage: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
}

/// Accept `2` as well as `"2"`.
fn theorem_any<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Theorem>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(d)?;
    match v {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(serde_json::Value::Number(n)) => n.to_string().parse().map(Some).map_err(serde::de::Error::custom),
        Some(serde_json::Value::String(s)) => s.parse().map(Some).map_err(serde::de::Error::custom),
        Some(o) => Err(serde::de::Error::custom(format!("bad theorem {o}"))),
    }
}

/// Flags merged over the config file.
struct Settings {
    profile: String,
    grid: usize,
    params: PathParams,
    rho: Option<f64>,
    out: Option<PathBuf>,
    format: ReportFormat,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let cfg: Config = match &self.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
            None => Config::default(),
        };
        let d = PathParams::default();
        let params = PathParams {
            theorem: self.theorem.or(cfg.theorem).unwrap_or(d.theorem),
            eps: self.eps.or(cfg.eps),
            rho: self.rho.or(cfg.rho),
            eta: self.eta.or(cfg.eta).unwrap_or(d.eta),
            r0: self.r0.or(cfg.r0).unwrap_or(d.r0),
            delta0: self.delta0.or(cfg.delta0),
            delta1: self.delta1.or(cfg.delta1).unwrap_or(d.delta1),
            samples_per_stage: self.samples_per_stage.or(cfg.samples_per_stage).unwrap_or(d.samples_per_stage),
            ..d
        };
        let format = self.format.clone().or(cfg.format).unwrap_or_else(|| "csv".into());
        Ok(Settings {
            profile: self.profile.clone().or(cfg.profile).unwrap_or_else(|| "round_cap:pi/3".into()),
            grid: self.grid.or(cfg.grid).unwrap_or(1025),
            rho: params.rho,
            params,
            out: self.out.clone().or(cfg.out),
            format: format.parse()?,
        })
    }
}

impl Settings {
    fn metric(&self) -> Result<WarpedBallMetric> {
        build_warped(&self.profile.parse::<Profile>()?, self.grid)
    }

    /// Glue width for commands that do not derive it from the shift length.
    fn rho_for(&self, m: &WarpedBallMetric) -> f64 {
        self.rho.unwrap_or(-0.1 * m.grid.r_min)
    }

    fn write_table(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.out else { return Ok(None) };
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        Ok(Some(path))
    }
}

/// Doubled metric ready for the flow: glued and smoothed unless the double is
/// already smooth.
fn flow_ready(s: &Settings, m: &WarpedBallMetric) -> Result<WarpedBallMetric> {
    let (d, smooth) = double(m)?;
    if smooth == Smoothness::Smooth {
        return Ok(d);
    }
    let rho = s.rho_for(m);
    let (g, _) = glue_interpolate(&d, rho)?;
    Ok(smooth_c1(&g, rho / 4.0)?.metric)
}

fn print_json(v: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Curvature(c) => {
            let s = c.settings()?;
            let m = s.metric()?;
            let field = warped_curvature(&m)?;
            let table = s.write_table("curvature.csv", |w| {
                writeln!(w, "r,K_mixed,K_tan,ric_radial,ric_tangential,scalar")?;
                for k in 0..field.r.len() {
                    writeln!(w, "{},{},{},{},{},{}", field.r[k], field.k_mixed[k][0], field.k_tan[k],
                             field.ricci_radial[k], field.ricci_tangential[k][0], field.scalar[k])?;
                }
                Ok(())
            })?;
            print_json(&json!({
                "profile": s.profile,
                "grid": m.n(),
                "min_ricci_eig": field.min_ricci_eig,
                "boundary_II_eig": boundary_ii_eig(&m)?,
                "table": table,
            }))?;
            Ok(true)
        }
        Command::Glue(c) => {
            let s = c.settings()?;
            let m = s.metric()?;
            let (d, _) = double(&m)?;
            let (g, diag) = glue_interpolate(&d, s.rho_for(&m))?;
            let table = s.write_table("glued.csv", |w| g.write_csv(w))?;
            print_json(&json!({ "profile": s.profile, "glue": diag, "table": table }))?;
            Ok(diag.eqper_margin > 0.0 && diag.ricci_min_interior > 0.0)
        }
        Command::Flow { common, mode } => {
            let s = common.settings()?;
            let m = s.metric()?;
            let opts = FlowOptions {
                mode: match mode {
                    ModeArg::Raw => FlowMode::Raw,
                    ModeArg::Normalized => FlowMode::Normalized,
                },
                n_points: Some(s.params.flow_grid),
                store_interval: 0.005,
                ..FlowOptions::default()
            };
            let traj = run_flow(&flow_ready(&s, &m)?, &opts)?;
            let table = s.write_table("flow.csv", |w| traj.write_csv(w, 9))?;
            print_json(&json!({ "profile": s.profile, "flow": traj.manifest(&opts), "table": table }))?;
            Ok(true)
        }
        Command::Deform { common, op, s: cs } => {
            let s = common.settings()?;
            let m = s.metric()?;
            let eps = s.params.eps.unwrap_or(-0.2 * m.grid.r_min);
            let out = match op {
                DeformOp::Shift => shift(&m, eps)?,
                DeformOp::Double => double(&m)?.0,
                DeformOp::Glue => glue_interpolate(&double(&m)?.0, s.rho_for(&m))?.0,
                DeformOp::Smooth => flow_ready(&s, &m)?,
                DeformOp::Perturb => boundary_perturb(&m, s.params.eta, s.params.r0)?,
                DeformOp::Collar => conformal_collar(&m, (0.5f64).min(-0.5 * m.grid.r_min), cs)?.metric,
            };
            let table = s.write_table("metric.csv", |w| out.write_csv(w))?;
            let verdicts: Vec<_> = if out.doubled {
                Vec::new()
            } else {
                [MetricClass::C, MetricClass::C0, MetricClass::D]
                    .into_iter()
                    .map(|c| check_membership(&out, c, None))
                    .collect()
            };
            print_json(&json!({
                "profile": s.profile,
                "grid": out.n(),
                "interval": [out.grid.r_min, out.grid.r_max],
                "verdicts": verdicts,
                "table": table,
            }))?;
            Ok(true)
        }
        Command::Verify { common, class } => {
            let s = common.settings()?;
            let m = s.metric()?;
            let v = check_membership(&m, class.unwrap_or(s.params.theorem.target()), None);
            print_json(&json!({ "profile": s.profile, "verdict": v }))?;
            Ok(v.pass)
        }
        Command::Path(c) => {
            let s = c.settings()?;
            let run = build_path(&s.metric()?, &s.params)?;
            print_json(&Manifest::new(&s.profile, &run))?;
            if s.out.is_some() {
                s.write_table(&format!("report.{}", s.format), |w| match s.format {
                    ReportFormat::Csv => write_csv(&run.samples, w),
                    ReportFormat::Json => {
                        let rows: Vec<_> = run.samples.iter().map(capdeform::report::SampleRow::from).collect();
                        Ok(serde_json::to_writer_pretty(w, &rows)?)
                    }
                })?;
            }
            if let Some(f) = run.first_failure() {
                eprintln!("first failing sample: stage {} at {}", f.stage, f.param);
            }
            Ok(run.all_pass())
        }
        Command::Report(c) => {
            let s = c.settings()?;
            let run = build_path(&s.metric()?, &s.params)?;
            let dir = s.out.clone().unwrap_or_else(|| Path::new("report").to_path_buf());
            let written: Vec<_> = emit_report(&run, &s.profile, s.format, &dir)?;
            print_json(&written)?;
            Ok(run.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, GeomError::Verdict { .. }) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
