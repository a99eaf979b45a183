use std::path::{Path, PathBuf};

use clap::ValueEnum;
use orlicz_capacity::bodies::Body;
use orlicz_capacity::capacity::{
    capacity_report, inequality_suite, mahler_chain, CapacityReport, InequalityGrid, InequalityReport,
};
use orlicz_capacity::embedding::{embed_report, EmbedReport, EmbedSettings, EmbeddingSpec};
use orlicz_capacity::{Error, YoungFunction};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::render::{body_name, curve_csv, curve_svg, is_convex, symmetry_defect};
use crate::CliError;

/// Tolerance on boundary gauges and axis intercepts of plotted curves.
pub const PLOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Capacity,
    Embed,
    Plot,
    Volume,
    Inequalities,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Capacity => "capacity",
            Command::Embed => "embed",
            Command::Plot => "plot",
            Command::Volume => "volume",
            Command::Inequalities => "inequalities",
            Command::Report => "report",
        }
    }
}

/// What a command produced: the JSON document, any extra files, and
/// whether every checked invariant held.
#[derive(Debug, Clone)]
pub struct Output {
    pub json: String,
    pub files: Vec<(PathBuf, String)>,
    pub pass: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: &'a str,
    seed: u64,
    tuple: &'a [YoungFunction],
    pass: bool,
    result: T,
}

fn compute(e: Error) -> CliError {
    match e {
        Error::NotSupported(m) => CliError::Unsupported(m),
        e => CliError::Compute(e),
    }
}

pub fn capacity(cfg: &LoadedConfig, mahler: Option<(usize, u64)>) -> Result<CapacityReport, CliError> {
    capacity_report(&cfg.tuple, cfg.config.flag_tolerance, mahler).map_err(compute)
}

pub fn inequalities(cfg: &LoadedConfig, seed: u64) -> Result<InequalityReport, CliError> {
    let grid = InequalityGrid {
        n_random: cfg.config.samples.inequality_pairs,
        grid_n: cfg.config.grids.inequality,
        x_max: cfg.config.grids.x_max,
        seed,
    };
    inequality_suite(&cfg.tuple, &grid).map_err(compute)
}

pub fn embed(cfg: &LoadedConfig, seed: u64) -> Result<EmbedReport, CliError> {
    let c = &cfg.config;
    let spec = EmbeddingSpec::new(cfg.tuple.clone(), c.epsilon).map_err(compute)?;
    let settings = EmbedSettings {
        dual_samples: c.samples.embed_dual,
        polar_samples: c.samples.embed_polar,
        jacobian_points: c.samples.jacobian,
        jacobian_step: c.grids.jacobian_step,
        seed,
    };
    embed_report(spec, &settings).map_err(compute)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSummary {
    pub body: &'static str,
    pub resolution: usize,
    pub svg: String,
    pub csv: String,
    /// Where the curve crosses the positive axes.
    pub intercepts: [f64; 2],
    /// Bounding half-widths from the inverse functions.
    pub expected_intercepts: [f64; 2],
    pub intercept_error: f64,
    /// Largest `|gauge(x) - 1|` over the emitted points.
    pub max_gauge_error: f64,
    pub symmetry_defect: Option<f64>,
    pub convex: bool,
}

impl PlotSummary {
    pub fn pass(&self) -> bool {
        self.max_gauge_error <= PLOT_TOL
            && self.intercept_error <= PLOT_TOL
            && self.convex
            && self.symmetry_defect.is_none_or(|d| d <= PLOT_TOL)
    }
}

/// Curve, rendered files and checks for the configured body.
pub fn plot(cfg: &LoadedConfig, svg_path: &Path) -> Result<(PlotSummary, String, String), CliError> {
    let settings = cfg.config.plot;
    let body = Body::new(settings.body, &cfg.tuple).map_err(compute)?;
    let curve = body.boundary_curve(settings.resolution).map_err(compute)?;

    let mut max_gauge_error: f64 = 0.0;
    for [_, x, y] in &curve {
        let g = body.gauge_value(&[*x, *y]).map_err(compute)?;
        max_gauge_error = max_gauge_error.max((g - 1.0).abs());
    }
    let ex = body.boundary_point(&[1.0, 0.0]).map_err(compute)?[0];
    let ey = body.boundary_point(&[0.0, 1.0]).map_err(compute)?[1];
    let hw = [body.half_widths()[0], body.half_widths()[1]];
    let intercept_error = (ex - hw[0]).abs().max((ey - hw[1]).abs());

    let csv_path = svg_path.with_extension("csv");
    let tuple: Vec<String> = cfg.config.tuple.iter().map(|f| f.to_string()).collect();
    let title = format!("{} for [{}]", body_name(settings.body), tuple.join(", "));
    let summary = PlotSummary {
        body: body_name(settings.body),
        resolution: settings.resolution,
        svg: svg_path.display().to_string(),
        csv: csv_path.display().to_string(),
        intercepts: [ex, ey],
        expected_intercepts: hw,
        intercept_error,
        max_gauge_error,
        symmetry_defect: symmetry_defect(&curve),
        convex: is_convex(&curve, 1e-12),
    };
    Ok((summary, curve_svg(&curve, hw, &title), curve_csv(&curve)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub capacity: CapacityReport,
    pub inequalities: InequalityReport,
    pub embed: EmbedReport,
}

/// Runs one command. `out` is the resolved output path (flag or config).
pub fn execute(cmd: Command, cfg: &LoadedConfig, seed: u64, out: Option<&Path>) -> Result<Output, CliError> {
    let samples = cfg.config.samples;
    let mut files = Vec::new();
    let (pass, result) = match cmd {
        Command::Capacity => {
            let r = capacity(cfg, None)?;
            (r.holds(), serde_json::to_value(r))
        }
        Command::Volume => {
            let r = mahler_chain(&cfg.tuple, samples.volume, seed).map_err(compute)?;
            (r.holds(), serde_json::to_value(r))
        }
        Command::Inequalities => {
            let r = inequalities(cfg, seed)?;
            (r.pass, serde_json::to_value(r))
        }
        Command::Embed => {
            let r = embed(cfg, seed)?;
            (r.holds(), serde_json::to_value(r))
        }
        Command::Plot => {
            let default = PathBuf::from(format!("{}.svg", body_name(cfg.config.plot.body)));
            let svg_path = out.map(Path::to_path_buf).unwrap_or(default);
            let (summary, svg, csv) = plot(cfg, &svg_path)?;
            files.push((PathBuf::from(&summary.csv), csv));
            files.push((svg_path, svg));
            (summary.pass(), serde_json::to_value(summary))
        }
        Command::Report => {
            let r = FullReport {
                capacity: capacity(cfg, Some((samples.volume, seed)))?,
                inequalities: inequalities(cfg, seed)?,
                embed: embed(cfg, seed)?,
            };
            (
                r.capacity.holds() && r.inequalities.pass && r.embed.holds(),
                serde_json::to_value(r),
            )
        }
    };
    let result = result.map_err(|e| CliError::Io(format!("cannot serialise report: {e}")))?;
    let envelope = Envelope {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        config_sha256: &cfg.sha256,
        seed,
        tuple: &cfg.config.tuple,
        pass,
        result,
    };
    let mut json =
        serde_json::to_string_pretty(&envelope).map_err(|e| CliError::Io(format!("cannot serialise report: {e}")))?;
    json.push('\n');
    Ok(Output { json, files, pass })
}
