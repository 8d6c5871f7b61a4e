//! End-to-end runs driven by a [`SimulationConfig`]: synthesis, field maps,
//! analysis and file output.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{estimate_direction, polarization_report, polarization_report_from, propagation_range};
use crate::config::{BeamKind, SimulationConfig};
use crate::error::ConfigError;
use crate::export::{
    field_heatmap, fmt_f64, phase_heatmap, read_field_csv, report_entries, report_text, write_field_csv,
    write_phase_csv, write_report_csv, Component, Heatmap,
};
use crate::field::{total_field, FieldGrid};
use crate::synthesis::{synthesize, to_excitation, ArrayGeometry, Excitation, PhaseDistribution};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Numerical(_) => 3,
            PipelineError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written and human-readable summary lines of one command.
#[derive(Debug, Default)]
pub struct Summary {
    pub written: Vec<PathBuf>,
    pub lines: Vec<String>,
}

pub struct Pipeline {
    pub config: SimulationConfig,
    pub out_dir: PathBuf,
    array: ArrayGeometry,
}

impl Pipeline {
    /// Validates the config, including the observation grid against the array.
    pub fn new(config: SimulationConfig, out_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        config.validate()?;
        let array = config.array()?;
        config.wavefront()?;
        config
            .grid()?
            .check_against(&array)
            .map_err(|e| ConfigError::new("observation.bounds_m", e.to_string()))?;
        Ok(Pipeline {
            config,
            out_dir: out_dir.into(),
            array,
        })
    }

    pub fn array(&self) -> &ArrayGeometry {
        &self.array
    }

    fn output_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write_file(
        &self,
        path: PathBuf,
        summary: &mut Summary,
        body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
    ) -> Result<(), PipelineError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        summary.written.push(path);
        Ok(())
    }

    fn write_heatmap(&self, suffix: &str, hm: &Heatmap, summary: &mut Summary) -> Result<(), PipelineError> {
        let Some(base) = &self.config.outputs.heatmap else {
            return Ok(());
        };
        let base = self.output_path(base);
        let name = base.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let image = base.with_file_name(format!("{name}_{suffix}.pgm"));
        let sidecar = base.with_file_name(format!("{name}_{suffix}.txt"));
        self.write_file(image, summary, |w| w.write_all(&hm.to_pgm()))?;
        self.write_file(sidecar, summary, |w| w.write_all(hm.sidecar().as_bytes()))
    }

    pub fn phase(&self) -> Result<PhaseDistribution, PipelineError> {
        let w = self.config.wavefront()?;
        synthesize(&self.array, &w, &self.array.solver_config()).map_err(|e| PipelineError::Numerical(e.to_string()))
    }

    pub fn field(&self, exc: &Excitation) -> Result<FieldGrid, PipelineError> {
        let fg = total_field(&self.array, exc, &self.config.grid()?)
            .map_err(|e| PipelineError::Numerical(e.to_string()))?;
        Ok(fg.with_meta(self.config.angles()?, self.config.beam.kind.name()))
    }

    pub fn synthesize_cmd(&self) -> Result<(PhaseDistribution, Summary), PipelineError> {
        let mut summary = Summary::default();
        let pd = self.phase()?;
        if let Some(p) = &self.config.outputs.phase_csv {
            self.write_file(self.output_path(p), &mut summary, |w| write_phase_csv(&pd, w))?;
        }
        self.write_heatmap("phase", &phase_heatmap(&pd), &mut summary)?;
        let (lo, hi) = pd
            .phase
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        summary.lines.push(format!(
            "synthesized {} elements, unwrapped phase in [{lo:.6}, {hi:.6}] rad",
            pd.len()
        ));
        Ok((pd, summary))
    }

    pub fn field_cmd(&self) -> Result<(PhaseDistribution, FieldGrid, Summary), PipelineError> {
        let (pd, mut summary) = self.synthesize_cmd()?;
        let fg = self.field(&to_excitation(&pd))?;
        if let Some(p) = &self.config.outputs.field_csv {
            self.write_file(self.output_path(p), &mut summary, |w| write_field_csv(&fg, w))?;
        }
        for c in Component::ALL {
            if let Some(hm) = field_heatmap(&fg, c) {
                self.write_heatmap(c.name(), &hm, &mut summary)?;
            }
        }
        summary
            .lines
            .push(format!("field evaluated at {} observation points", fg.field.len()));
        Ok((pd, fg, summary))
    }

    /// Full pipeline: phase map, field map, polarization and direction analysis.
    pub fn run_cmd(&self) -> Result<Summary, PipelineError> {
        let start = Instant::now();
        let (pd, fg, mut summary) = self.field_cmd()?;
        let entries = self.analysis_entries(&to_excitation(&pd), &fg)?;
        self.write_report(&entries, &mut summary)?;
        let get = |k: &str| {
            entries
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.parse::<f64>().unwrap_or(f64::NAN))
                .unwrap_or(f64::NAN)
        };
        summary.lines.push(format!(
            "peak direction: azimuth {:.2} deg, elevation {:.2} deg",
            get("estimated_azimuth_deg"),
            get("estimated_elevation_deg")
        ));
        summary.lines.push(format!(
            "polarization fractions: x {:.6e}, y {:.6e}, z {:.6e}",
            get("fraction_ex"),
            get("fraction_ey"),
            get("fraction_ez")
        ));
        summary
            .lines
            .push(format!("runtime: {:.2} s", start.elapsed().as_secs_f64()));
        Ok(summary)
    }

    /// Analysis only. With `input`, reads a field CSV and reports its
    /// polarization content; otherwise computes the configured field first.
    pub fn analyze_cmd(&self, input: Option<&Path>) -> Result<Summary, PipelineError> {
        let mut summary = Summary::default();
        let entries = match input {
            Some(path) => {
                let file = fs::File::open(path).map_err(io_err(path))?;
                let rows = read_field_csv(io::BufReader::new(file)).map_err(io_err(path))?;
                let field: Vec<_> = rows.into_iter().map(|(_, e)| e).collect();
                let pol = polarization_report_from(&field).map_err(|e| PipelineError::Numerical(e.to_string()))?;
                report_entries(&pol, None, &[("source".into(), path.display().to_string())])
            }
            None => {
                let exc = to_excitation(&self.phase()?);
                let fg = self.field(&exc)?;
                self.analysis_entries(&exc, &fg)?
            }
        };
        self.write_report(&entries, &mut summary)?;
        summary.lines.push(report_text(&entries).trim_end().to_string());
        Ok(summary)
    }

    fn analysis_entries(&self, exc: &Excitation, fg: &FieldGrid) -> Result<Vec<(String, String)>, PipelineError> {
        let numerical = |e: crate::error::AnalysisError| PipelineError::Numerical(e.to_string());
        let pol = polarization_report(fg).map_err(numerical)?;
        let radius = self.config.analysis_radius(&self.array);
        let mut metrics = estimate_direction(&self.array, exc, radius).map_err(numerical)?;
        if self.config.beam.kind == BeamKind::Bessel {
            metrics.propagation_range_estimate = Some(propagation_range(&self.array, self.config.beam.h_over_r));
        }
        let c = &self.config;
        let extra = vec![
            ("beam".to_string(), c.beam.kind.name().to_string()),
            ("h_over_r".to_string(), fmt_f64(c.beam.h_over_r)),
            ("frequency_hz".to_string(), fmt_f64(c.frequency_hz)),
            ("n_x".to_string(), c.array.n_x.to_string()),
            ("n_z".to_string(), c.array.n_z.to_string()),
            ("commanded_azimuth_deg".to_string(), fmt_f64(c.steering.azimuth_deg)),
            ("commanded_elevation_deg".to_string(), fmt_f64(c.steering.elevation_deg)),
            ("analysis_radius_m".to_string(), fmt_f64(radius)),
        ];
        Ok(report_entries(&pol, Some(&metrics), &extra))
    }

    fn write_report(&self, entries: &[(String, String)], summary: &mut Summary) -> Result<(), PipelineError> {
        let Some(p) = &self.config.outputs.report else {
            return Ok(());
        };
        let text_path = self.output_path(p);
        let csv_path = text_path.with_extension("csv");
        self.write_file(text_path, summary, |w| w.write_all(report_text(entries).as_bytes()))?;
        self.write_file(csv_path, summary, |w| write_report_csv(entries, w))
    }
}
