//! Fit → contour → design conditions → diagnostics, with file output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::cma::{fit_conditional, CmaModel};
use crate::design::{build_frame_with, design_conditions_in_frame};
use crate::diagnostics::{exceedance_report, ExceedanceReport, INDEPENDENCE_CAVEAT};
use crate::error::{Error, Result, RowError};
use crate::grid::{Dataset, DensityGrid, DesignCondition, ReturnPeriodSpec};
use crate::hdc::{compute_contour, HdcResult};
use crate::io::config::{Method, RunConfig};
use crate::io::dataset::{load_csv, CsvOptions};
use crate::io::output::{self, period_tag, Metadata};
use crate::io::svg::{self, PlotLayer};
use crate::kde::{self, EvalOptions};
use crate::synth::generate_synthetic;

/// Smallest dataset the pipeline fits. With two states the bandwidth rule
/// rests on a single pairwise difference and the median origin is the
/// midpoint between them.
pub const MIN_FIT_SAMPLES: usize = 3;

/// How far a run goes; each stage includes the previous ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Fit,
    Contour,
    DesignConditions,
    Diagnose,
    Run,
}

impl Stage {
    fn contours(self) -> bool {
        self >= Stage::Contour
    }

    fn design(self) -> bool {
        matches!(self, Stage::DesignConditions | Stage::Run)
    }

    fn diagnostics(self) -> bool {
        matches!(self, Stage::Diagnose | Stage::Run)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourOutcome {
    pub return_period_years: f64,
    pub hdc: HdcResult,
    pub conditions: Option<Vec<DesignCondition>>,
    pub report: Option<ExceedanceReport>,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub grid: DensityGrid,
    pub contours: Vec<ContourOutcome>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub n: usize,
    pub rejected: Vec<RowError>,
    pub methods: Vec<MethodOutcome>,
    pub files: Vec<PathBuf>,
}

/// Loads the configured input, or draws the synthetic dataset when no input
/// is set.
pub fn load_input(cfg: &RunConfig) -> Result<(Dataset, Vec<RowError>)> {
    match &cfg.input {
        Some(path) => {
            let opts = CsvOptions {
                columns: cfg.columns.clone(),
                skip_invalid: cfg.skip_invalid,
                state_duration_hours: cfg.state_duration_hours,
            };
            let loaded = load_csv(path, &opts)?;
            Ok((loaded.dataset, loaded.rejected))
        }
        None => {
            let d = generate_synthetic(cfg.synth.n, cfg.synth.seed)?;
            Ok((Dataset::new(d.samples().to_vec(), cfg.state_duration_hours)?, Vec::new()))
        }
    }
}

/// Density grid for one method plus a JSON description of the fit.
pub fn fit_method(cfg: &RunConfig, dataset: &Dataset, method: Method) -> Result<(DensityGrid, serde_json::Value)> {
    match method {
        Method::Kde => {
            let model = kde::fit_with(dataset, cfg.bandwidth_rule())?;
            let (ha, va) = model.axes(cfg.grid.step_hs, cfg.grid.step_v, cfg.grid.padding)?;
            let opts = EvalOptions {
                required_padding: cfg.grid.padding,
                ..EvalOptions::default()
            };
            let grid = model.evaluate_with(&ha, &va, &opts)?;
            let info = json!({
                "method": "kde",
                "n": dataset.len(),
                "sigma_hs": model.sigma_hs,
                "sigma_v": model.sigma_v,
                "b_hs": model.b_hs,
                "b_v": model.b_v,
                "grid": grid_info(&grid),
            });
            Ok((grid, info))
        }
        Method::Cma => {
            let model: CmaModel = fit_conditional(dataset, &cfg.cma.options())?;
            let (ha, va) = model.axes(cfg.grid.step_hs, cfg.grid.step_v, Some(dataset))?;
            let grid = model.evaluate(&ha, &va)?;
            let info = json!({
                "method": "cma",
                "n": dataset.len(),
                "hs_marginal": model.hs_marginal,
                "v_scale": model.v_scale,
                "v_shape": model.v_shape,
                "fit_report": model.fit_report,
                "grid": grid_info(&grid),
            });
            Ok((grid, info))
        }
    }
}

fn grid_info(grid: &DensityGrid) -> serde_json::Value {
    let (ha, va) = (grid.hs_axis(), grid.v_axis());
    json!({
        "hs_origin": ha.origin(), "hs_step": ha.step(), "hs_count": ha.count(),
        "v_origin": va.origin(), "v_step": va.step(), "v_count": va.count(),
        "total_mass": grid.total_mass(),
    })
}

/// Runs up to `stage` and writes the corresponding files into
/// `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig, stage: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    let (dataset, rejected) = load_input(cfg)?;
    if dataset.len() < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateData(format!(
            "{} samples; the pipeline needs at least {MIN_FIT_SAMPLES}",
            dataset.len()
        )));
    }
    let hash = cfg.hash();
    let meta = Metadata::new(&hash);
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        let path = out.join(name);
        output::write_text(&path, &text)?;
        files.push(path);
        Ok(())
    };

    let mut methods = Vec::new();
    let mut fit_infos = Vec::new();
    for &method in cfg.method.methods() {
        log::info!("fitting {}", method.name());
        let (grid, info) = fit_method(cfg, &dataset, method)?;
        if cfg.output.density {
            emit(format!("density_{}.csv", method.name()), output::density_csv(&meta, method.name(), &grid))?;
        }
        fit_infos.push(info);

        let mut contours = Vec::new();
        if stage.contours() {
            for &years in &cfg.return_periods {
                contours.push(contour_outcome(cfg, &dataset, &grid, years, stage)?);
            }
        }
        methods.push(MethodOutcome {
            method,
            grid,
            contours,
        });
    }

    emit(
        "fit.json".into(),
        output::json(&json!({ "metadata": meta, "fits": fit_infos })),
    )?;

    for m in &methods {
        let name = m.method.name();
        for c in &m.contours {
            let tag = period_tag(c.return_period_years);
            emit(
                format!("contour_{name}_{tag}y.csv"),
                output::contour_csv(&meta, name, c.return_period_years, &c.hdc),
            )?;
            if let Some(rows) = &c.conditions {
                emit(
                    format!("design_conditions_{name}_{tag}y.csv"),
                    output::design_csv(&meta, name, c.return_period_years, rows),
                )?;
            }
        }
    }

    if stage.diagnostics() {
        emit("diagnostics.json".into(), output::json(&diagnostics_json(cfg, &meta, &dataset, &rejected, &methods)))?;
    }

    if stage == Stage::Run && cfg.output.plot {
        for (k, &years) in cfg.return_periods.iter().enumerate() {
            let layers: Vec<PlotLayer<'_>> = methods
                .iter()
                .map(|m| PlotLayer {
                    name: m.method.name(),
                    contour: &m.contours[k].hdc.contour,
                    conditions: m.contours[k].conditions.as_deref().unwrap_or(&[]),
                })
                .collect();
            let title = format!("{years}-year contours");
            emit(format!("plot_{}y.svg", period_tag(years)), svg::render(&title, &dataset, &layers))?;
        }
    }

    Ok(RunSummary {
        config_hash: hash,
        n: dataset.len(),
        rejected,
        methods,
        files,
    })
}

fn contour_outcome(
    cfg: &RunConfig,
    dataset: &Dataset,
    grid: &DensityGrid,
    years: f64,
    stage: Stage,
) -> Result<ContourOutcome> {
    let hdc = compute_contour(grid, ReturnPeriodSpec::new(years)?, dataset.state_duration_hours())?;
    if hdc.coverage_warning {
        log::warn!("{years}-year contour: threshold reached the grid's smallest density");
    }
    let conditions = if stage.design() {
        let frame = build_frame_with(dataset, &hdc.contour, cfg.normalization)?;
        Some(design_conditions_in_frame(&frame, &hdc.contour, &cfg.angles)?)
    } else {
        None
    };
    let report = if stage.diagnostics() {
        Some(exceedance_report(dataset, grid, &hdc)?)
    } else {
        None
    };
    Ok(ContourOutcome {
        return_period_years: years,
        hdc,
        conditions,
        report,
    })
}

fn diagnostics_json(
    cfg: &RunConfig,
    meta: &Metadata,
    dataset: &Dataset,
    rejected: &[RowError],
    methods: &[MethodOutcome],
) -> serde_json::Value {
    let input = match &cfg.input {
        Some(p) => json!({ "path": p }),
        None => json!({ "synthetic": { "n": cfg.synth.n, "seed": cfg.synth.seed } }),
    };
    let contours: Vec<serde_json::Value> = methods
        .iter()
        .flat_map(|m| {
            m.contours.iter().map(move |c| {
                let r = c.report.as_ref();
                json!({
                    "method": m.method.name(),
                    "return_period_years": c.return_period_years,
                    "alpha": c.hdc.alpha,
                    "f_m": c.hdc.threshold,
                    "enclosed_mass": c.hdc.enclosed_mass,
                    "cell_mass": c.hdc.cell_mass,
                    "coverage_warning": c.hdc.coverage_warning,
                    "touches_boundary": c.hdc.contour.touches_boundary(),
                    "loops": c.hdc.contour.loops.len(),
                    "n": r.map(|r| r.n),
                    "observed_exceedances": r.map(|r| r.observed_exceedances),
                    "expected_exceedances": r.map(|r| r.expected_exceedances),
                    "tail_probability": r.map(|r| r.tail_probability),
                })
            })
        })
        .collect();
    json!({
        "metadata": meta,
        "input": input,
        "n": dataset.len(),
        "state_duration_hours": dataset.state_duration_hours(),
        "rejected_rows": rejected,
        "caveat": INDEPENDENCE_CAVEAT,
        "contours": contours,
    })
}

/// Machine-readable description of a failed run.
pub fn error_report(err: &Error) -> serde_json::Value {
    let rows = match err {
        Error::Range(rows) => Some(rows.clone()),
        _ => None,
    };
    json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
        "rows": rows,
        "version": output::TOOL_VERSION,
    })
}

/// Writes `error.json` into `dir`, ignoring failures to do so.
pub fn write_error_report(dir: &Path, err: &Error) {
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join("error.json"), output::json(&error_report(err)));
    }
}
