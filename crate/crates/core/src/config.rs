//! Simulation configuration: TOML document plus command-line overrides.
//!
//! Lengths are meters except `array.spacing_in_wavelengths`; angles are degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::propagation_range;
use crate::error::ConfigError;
use crate::field::{GridPlane, ObservationGrid, MIN_DISTANCE_WAVELENGTHS};
use crate::geometry::SteeringAngles;
use crate::synthesis::ArrayGeometry;
use crate::wavefront::{SteeredWavefront, Wavefront, DEFAULT_H_OVER_R};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub frequency_hz: f64,
    pub array: ArrayConfig,
    pub beam: BeamConfig,
    pub steering: SteeringConfig,
    pub observation: ObservationConfig,
    pub analysis: AnalysisConfig,
    pub outputs: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub n_x: usize,
    pub n_z: usize,
    pub spacing_in_wavelengths: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamKind {
    Gaussian,
    Bessel,
}

impl BeamKind {
    pub fn name(self) -> &'static str {
        match self {
            BeamKind::Gaussian => "gaussian",
            BeamKind::Bessel => "bessel",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(BeamKind::Gaussian),
            "bessel" => Ok(BeamKind::Bessel),
            _ => Err(ConfigError::new("beam.kind", format!("expected gaussian or bessel, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub kind: BeamKind,
    /// Cone slope; ignored by gaussian beams except for placing the analysis radius.
    pub h_over_r: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringConfig {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneKind {
    Xy,
    Yz,
    Xz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationConfig {
    pub plane: PlaneKind,
    /// Position of the plane along its normal axis.
    pub offset_m: f64,
    /// `[u_min, u_max, v_min, v_max]` over the plane's two in-plane axes
    /// (xy: x then y, yz: y then z, xz: x then z).
    pub bounds_m: [f64; 4],
    pub resolution: [usize; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Radius of the direction scan; half the propagation range when unset.
    pub radius_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub phase_csv: Option<PathBuf>,
    pub field_csv: Option<PathBuf>,
    /// Base path; images are written as `<base>_phase.pgm`, `<base>_ex.pgm`, ...
    pub heatmap: Option<PathBuf>,
    /// Text report; a `key,value` CSV is written next to it with a `.csv` extension.
    pub report: Option<PathBuf>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            frequency_hz: 100e9,
            array: ArrayConfig::default(),
            beam: BeamConfig::default(),
            steering: SteeringConfig::default(),
            observation: ObservationConfig::default(),
            analysis: AnalysisConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            n_x: 100,
            n_z: 100,
            spacing_in_wavelengths: 0.5,
        }
    }
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            kind: BeamKind::Bessel,
            h_over_r: DEFAULT_H_OVER_R,
        }
    }
}

impl Default for ObservationConfig {
    fn default() -> Self {
        ObservationConfig {
            plane: PlaneKind::Yz,
            offset_m: 0.0,
            bounds_m: [0.05, 0.6, -0.05, 0.05],
            resolution: [111, 101],
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            phase_csv: Some("phase.csv".into()),
            field_csv: Some("field.csv".into()),
            heatmap: Some("heatmap".into()),
            report: Some("report.txt".into()),
        }
    }
}

/// Command-line values that replace config keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub azimuth_deg: Option<f64>,
    pub elevation_deg: Option<f64>,
    pub beam: Option<String>,
    pub h_over_r: Option<f64>,
    pub frequency_ghz: Option<f64>,
    pub n_x: Option<usize>,
    pub n_z: Option<usize>,
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = unknown_field_name(&msg).unwrap_or_else(|| "document".to_string());
            ConfigError::new(field, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(v) = o.azimuth_deg {
            self.steering.azimuth_deg = v;
        }
        if let Some(v) = o.elevation_deg {
            self.steering.elevation_deg = v;
        }
        if let Some(b) = &o.beam {
            self.beam.kind = BeamKind::parse(b)?;
        }
        if let Some(v) = o.h_over_r {
            self.beam.h_over_r = v;
        }
        if let Some(v) = o.frequency_ghz {
            self.frequency_hz = v * 1e9;
        }
        if let Some(v) = o.n_x {
            self.array.n_x = v;
        }
        if let Some(v) = o.n_z {
            self.array.n_z = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("frequency_hz", self.frequency_hz)?;
        positive("array.spacing_in_wavelengths", self.array.spacing_in_wavelengths)?;
        positive("beam.h_over_r", self.beam.h_over_r)?;
        if self.array.n_x == 0 {
            return Err(ConfigError::new("array.n_x", "must be at least 1"));
        }
        if self.array.n_z == 0 {
            return Err(ConfigError::new("array.n_z", "must be at least 1"));
        }
        for (name, v) in [
            ("steering.azimuth_deg", self.steering.azimuth_deg),
            ("steering.elevation_deg", self.steering.elevation_deg),
        ] {
            if !(v.is_finite() && v.abs() < 90.0) {
                return Err(ConfigError::new(name, format!("must lie strictly within (-90, 90) degrees, got {v}")));
            }
        }
        let o = &self.observation;
        if !o.offset_m.is_finite() {
            return Err(ConfigError::new("observation.offset_m", "must be finite"));
        }
        let [u0, u1, v0, v1] = o.bounds_m;
        if !(u0.is_finite() && u1.is_finite() && u0 < u1) || !(v0.is_finite() && v1.is_finite() && v0 < v1) {
            return Err(ConfigError::new(
                "observation.bounds_m",
                "expected finite [u_min, u_max, v_min, v_max] with min < max",
            ));
        }
        if o.resolution[0] < 2 || o.resolution[1] < 2 {
            return Err(ConfigError::new("observation.resolution", "needs at least 2 samples per axis"));
        }
        if let Some(r) = self.analysis.radius_m {
            positive("analysis.radius_m", r)?;
        }
        Ok(())
    }

    pub fn array(&self) -> Result<ArrayGeometry, ConfigError> {
        ArrayGeometry::from_frequency(
            self.array.n_x,
            self.array.n_z,
            self.array.spacing_in_wavelengths,
            self.frequency_hz,
        )
        .map_err(|e| ConfigError::new("array", e.to_string()))
    }

    pub fn angles(&self) -> Result<SteeringAngles, ConfigError> {
        SteeringAngles::from_degrees(self.steering.azimuth_deg, self.steering.elevation_deg)
            .map_err(|e| ConfigError::new("steering", e.to_string()))
    }

    pub fn wavefront(&self) -> Result<SteeredWavefront, ConfigError> {
        let base = match self.beam.kind {
            BeamKind::Gaussian => Wavefront::Plane,
            BeamKind::Bessel => {
                Wavefront::cone(self.beam.h_over_r).map_err(|e| ConfigError::new("beam.h_over_r", e.to_string()))?
            }
        };
        Ok(SteeredWavefront::new(base, self.angles()?))
    }

    pub fn plane(&self) -> GridPlane {
        let c = self.observation.offset_m;
        match self.observation.plane {
            PlaneKind::Xy => GridPlane::Xy { z: c },
            PlaneKind::Yz => GridPlane::Yz { x: c },
            PlaneKind::Xz => GridPlane::Xz { y: c },
        }
    }

    pub fn grid(&self) -> Result<ObservationGrid, ConfigError> {
        let [nu, nv] = self.observation.resolution;
        ObservationGrid::planar(self.plane(), self.observation.bounds_m, (nu, nv))
            .map_err(|e| ConfigError::new("observation", e.to_string()))
    }

    /// Direction-scan radius: configured value, else half the propagation range,
    /// never below the element far-field limit.
    pub fn analysis_radius(&self, array: &ArrayGeometry) -> f64 {
        self.analysis.radius_m.unwrap_or_else(|| {
            let minimum = array.aperture_radius() + MIN_DISTANCE_WAVELENGTHS * array.wavelength();
            (0.5 * propagation_range(array, self.beam.h_over_r)).max(1.5 * minimum)
        })
    }
}

fn unknown_field_name(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    rest.split('`').next().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimulationConfig::default();
        c.validate().unwrap();
        assert_eq!(c.frequency_hz, 100e9);
        assert_eq!((c.array.n_x, c.array.n_z), (100, 100));
        assert_eq!(c.beam.kind, BeamKind::Bessel);
        let a = c.array().unwrap();
        c.grid().unwrap().check_against(&a).unwrap();
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(SimulationConfig::from_toml("").unwrap(), SimulationConfig::default());
    }

    #[test]
    fn parses_full_document() {
        let c = SimulationConfig::from_toml(
            r#"
frequency_hz = 60e9
[array]
n_x = 16
n_z = 8
spacing_in_wavelengths = 0.5
[beam]
kind = "gaussian"
h_over_r = 0.3
[steering]
azimuth_deg = 20
elevation_deg = -10
[observation]
plane = "xy"
offset_m = 0.0
bounds_m = [-0.2, 0.2, 0.1, 0.5]
resolution = [41, 41]
[analysis]
radius_m = 0.3
[outputs]
phase_csv = "p.csv"
"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.beam.kind, BeamKind::Gaussian);
        assert_eq!(c.steering.elevation_deg, -10.0);
        assert_eq!(c.outputs.phase_csv, Some(PathBuf::from("p.csv")));
        assert_eq!(c.outputs.field_csv, Some(PathBuf::from("field.csv")));
        assert_eq!(c.plane(), GridPlane::Xy { z: 0.0 });
        assert_eq!(SimulationConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = SimulationConfig::default();
        c.steering.elevation_deg = 95.0;
        assert_eq!(c.validate().unwrap_err().field, "steering.elevation_deg");

        let mut c = SimulationConfig::default();
        c.observation.resolution = [1, 10];
        assert_eq!(c.validate().unwrap_err().field, "observation.resolution");

        let c = SimulationConfig {
            frequency_hz: 0.0,
            ..SimulationConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "frequency_hz");

        let e = SimulationConfig::from_toml("[beam]\nslope = 1\n").unwrap_err();
        assert_eq!(e.field, "slope");
        let e = SimulationConfig::from_toml("[beam]\nkind = \"airy\"\n").unwrap_err();
        assert_eq!(e.field, "document");
        assert_eq!(BeamKind::parse("airy").unwrap_err().field, "beam.kind");
    }

    #[test]
    fn overrides_replace_keys() {
        let mut c = SimulationConfig::default();
        c.apply(&Overrides {
            azimuth_deg: Some(20.0),
            beam: Some("Gaussian".into()),
            frequency_ghz: Some(28.0),
            n_x: Some(4),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(c.steering.azimuth_deg, 20.0);
        assert_eq!(c.beam.kind, BeamKind::Gaussian);
        assert_eq!(c.frequency_hz, 28e9);
        assert_eq!(c.array.n_x, 4);
        assert_eq!(c.array.n_z, 100);
    }
}
