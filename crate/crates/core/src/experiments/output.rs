//! Rendering experiment results to files, and reading them back.

use std::{ fmt::Write as _, fs, io, path::Path };
use serde::{ de::DeserializeOwned, Deserialize, Serialize };
use sha2::{ Digest, Sha256 };
use super::{
    ConvergenceFlag, ExperimentConfig, ExperimentError, Feasibility, FilterCurve, PointStatus, QSweep,
    Sensitivity, Sharpening, Summary,
};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const RECORD_FILE: &str = "run.json";

/// Moments of one conditioned distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub m: u32,
    pub mean: f64,
    pub variance: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QSweepRow {
    pub g0: f64,
    pub m: u32,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub q: Option<f64>,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub pulse: String,
    pub delta_omega: f64,
    pub p_minus: Option<f64>,
    pub shift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub atom_speed: f64,
    pub mode_frequency: f64,
    pub wavenumber: f64,
    pub interaction_time: f64,
    pub loss_time: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything known about a finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub manifest: Vec<ManifestEntry>,
    pub duration_secs: f64,
    pub convergence: Vec<ConvergenceFlag>,
    pub warnings: Vec<String>,
    pub summary: Summary,
}

impl RunRecord {
    pub fn all_converged(&self) -> bool {
        self.convergence.iter().all(|c| c.converged)
    }

    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Typed rows of a delimited table written by a run.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Reader::from_reader(file).deserialize().collect::<Result<_, _>>()?)
}

fn io_err(path: &Path, source: io::Error) -> ExperimentError {
    ExperimentError::Io { path: path.display().to_string(), source }
}

#[derive(Default)]
pub(crate) struct Rendered {
    files: Vec<(String, Vec<u8>)>,
    convergence: Vec<ConvergenceFlag>,
    warnings: Vec<String>,
    summary: Summary,
}

impl Rendered {
    fn add(&mut self, name: impl Into<String>, contents: Vec<u8>) {
        self.files.push((name.into(), contents));
    }
}

fn table<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| ExperimentError::Io { path: "<table>".into(), source: e.into_error() })
}

const GNUPLOT_PREAMBLE: &str = "set datafile separator \",\"\nset terminal pngcairo size 900,600\n";

fn plot_script(output: &str, xlabel: &str, ylabel: &str, extra: &str, series: &[String]) -> Vec<u8> {
    let mut s = String::from(GNUPLOT_PREAMBLE);
    let _ = writeln!(s, "set output \"{output}\"");
    let _ = writeln!(s, "set xlabel \"{xlabel}\"");
    let _ = writeln!(s, "set ylabel \"{ylabel}\"");
    s.push_str(extra);
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s.into_bytes()
}

pub(crate) fn render_filter_curves(cfg: &ExperimentConfig, curves: &[FilterCurve]) -> Result<Rendered, ExperimentError> {
    let mut out = Rendered::default();
    let mut series = Vec::new();
    for curve in curves {
        match &curve.filter {
            Ok(f) => {
                let name = format!("filter_{}.csv", curve.label);
                let mut buf = Vec::new();
                f.write_csv(&mut buf)?;
                out.add(&name, buf);
                series.push(format!("\"{name}\" using 1:3 with linespoints title \"{}\"", curve.label));
                if f.diagnostics().is_some() {
                    out.convergence.push(ConvergenceFlag::from_filter(&curve.label, &curve.filter));
                }
            }
            Err(e) => out.convergence.push(ConvergenceFlag::failed(&curve.label, e)),
        }
    }
    out.summary.insert("delta_omega".into(), cfg.delta_omega);
    let extra = format!("set title \"g0 = {}, T = {}, dw = {}\"\nset yrange [0:1.05]\n", cfg.g0, cfg.t_width, cfg.delta_omega);
    out.add("filter_curves.gp", plot_script("filter_curves.png", "n", "|a_-(n)|^2", &extra, &series));
    Ok(out)
}

pub(crate) fn render_sharpening(result: &Sharpening) -> Result<Rendered, ExperimentError> {
    let mut out = Rendered::default();
    let mut series = Vec::new();
    let mut stats = Vec::new();
    for step in &result.steps {
        let name = format!("sharpen_m{}.csv", step.atoms);
        let mut buf = Vec::new();
        step.distribution.write_csv(&mut buf)?;
        out.add(&name, buf);
        series.push(format!("\"{name}\" using 1:2 with linespoints title \"m = {}\"", step.atoms));
        stats.push(StatsRow {
            m: step.atoms,
            mean: step.stats.mean,
            variance: step.stats.variance,
            q: step.stats.mandel_q,
        });
        out.summary.insert(format!("q_m{}", step.atoms), step.stats.mandel_q);
        out.summary.insert(format!("probability_m{}", step.atoms), step.probability);
    }
    out.add("sharpen_stats.csv", table(stats)?);
    out.convergence.push(ConvergenceFlag::from_filter("filter", &Ok(result.filter.clone())));
    out.warnings = result.warnings.clone();
    out.add("sharpen.gp", plot_script("sharpen.png", "n", "P_n", "", &series));
    Ok(out)
}

pub(crate) fn render_q_sweep(result: &QSweep) -> Result<Rendered, ExperimentError> {
    let mut out = Rendered::default();
    let rows = result.points.iter().map(|p| QSweepRow {
        g0: p.g0,
        m: p.atoms,
        mean: p.stats.map(|s| s.mean),
        variance: p.stats.map(|s| s.variance),
        q: p.stats.map(|s| s.mandel_q),
        status: p.status.clone(),
    });
    out.add("q_sweep.csv", table(rows)?);
    let mut atoms: Vec<u32> = result.points.iter().map(|p| p.atoms).collect();
    atoms.sort_unstable();
    atoms.dedup();
    let mut series = Vec::new();
    for m in atoms {
        if let Some((best, stats)) = result.optimum(m).and_then(|p| p.stats.map(|s| (p, s))) {
            out.summary.insert(format!("optimal_g0_m{m}"), best.g0);
            out.summary.insert(format!("min_q_m{m}"), stats.mandel_q);
        }
        series.push(format!("\"q_sweep.csv\" using ($2 == {m} ? $1 : 1/0):5 with linespoints title \"m = {m}\""));
    }
    let flagged = result.points.iter().filter(|p| p.status != PointStatus::Ok).count();
    if flagged > 0 {
        out.warnings.push(format!("{flagged} grid points have no Q value"));
    }
    out.convergence = result.convergence.clone();
    out.add("q_sweep.gp", plot_script("q_sweep.png", "g0", "Q", "set xzeroaxis\n", &series));
    Ok(out)
}

pub(crate) fn render_sensitivity(result: &Sensitivity) -> Result<Rendered, ExperimentError> {
    let mut out = Rendered::default();
    let rows = result.points.iter().map(|p| SensitivityRow {
        pulse: p.pulse.label().to_string(),
        delta_omega: p.delta_omega,
        p_minus: p.p_minus,
        shift: p.shift,
    });
    out.add("detuning_sensitivity.csv", table(rows)?);
    for (kind, base) in &result.baselines {
        out.summary.insert(format!("baseline_{kind}"), *base);
    }
    let series: Vec<String> = result
        .baselines
        .iter()
        .map(|(kind, _)| {
            format!(
                "\"detuning_sensitivity.csv\" using (strcol(1) eq \"{kind}\" ? $2 : 1/0):4 with linespoints title \"{kind}\""
            )
        })
        .collect();
    out.convergence = result.convergence.clone();
    let ylabel = format!("shift of |a_-(n={})|^2", result.probe_n);
    out.add("detuning_sensitivity.gp", plot_script("detuning_sensitivity.png", "dw", &ylabel, "set key left top\n", &series));
    Ok(out)
}

pub(crate) fn render_feasibility(cfg: &ExperimentConfig, f: &Feasibility) -> Result<Rendered, ExperimentError> {
    let mut out = Rendered::default();
    out.add(
        "feasibility.csv",
        table([FeasibilityRow {
            atom_speed: cfg.atom_speed,
            mode_frequency: cfg.mode_frequency,
            wavenumber: f.wavenumber,
            interaction_time: f.interaction_time,
            loss_time: f.loss_time,
            ratio: f.ratio,
        }])?,
    );
    out.summary.insert("interaction_time".into(), f.interaction_time);
    out.summary.insert("ratio".into(), f.ratio);
    Ok(out)
}

pub(crate) fn write_run(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    rendered: Rendered,
    duration_secs: f64,
) -> Result<RunRecord, ExperimentError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut manifest = Vec::with_capacity(rendered.files.len());
    for (name, contents) in &rendered.files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        manifest.push(ManifestEntry {
            path: name.clone(),
            bytes: contents.len() as u64,
            sha256: hex::encode(Sha256::digest(contents)),
        });
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, table(&manifest)?).map_err(|e| io_err(&manifest_path, e))?;
    for w in &rendered.warnings {
        log::warn!("{w}");
    }
    let record = RunRecord {
        config: cfg.clone(),
        manifest,
        duration_secs,
        convergence: rendered.convergence,
        warnings: rendered.warnings,
        summary: rendered.summary,
    };
    let record_path = out_dir.join(RECORD_FILE);
    fs::write(&record_path, serde_json::to_vec_pretty(&record)?).map_err(|e| io_err(&record_path, e))?;
    Ok(record)
}
