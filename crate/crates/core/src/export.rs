//! CSV tables, 16-bit graymap heatmaps and text reports.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::analysis::{BeamMetrics, PolarizationReport};
use crate::field::{ComplexVec3, FieldGrid, GridLayout};
use crate::geometry::Vec3;
use crate::synthesis::{wrap_angle, PhaseDistribution};

pub const PHASE_HEADER: [&str; 5] = [
    "x_m",
    "z_m",
    "phase_rad_wrapped",
    "phase_rad_unwrapped",
    "distance_m",
];

pub const FIELD_HEADER: [&str; 9] = [
    "px_m", "py_m", "pz_m", "re_Ex", "im_Ex", "re_Ey", "im_Ey", "re_Ez", "im_Ez",
];

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

pub fn write_phase_csv<W: Write>(pd: &PhaseDistribution, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PHASE_HEADER).map_err(csv_err)?;
    for n in 0..pd.len() {
        let p = pd.positions[n];
        w.write_record([
            fmt_f64(p.x),
            fmt_f64(p.z),
            fmt_f64(wrap_angle(pd.phase[n])),
            fmt_f64(pd.phase[n]),
            fmt_f64(pd.signed_distance[n]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_field_csv<W: Write>(fg: &FieldGrid, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIELD_HEADER).map_err(csv_err)?;
    for (p, e) in fg.grid.points().iter().zip(&fg.field) {
        w.write_record([
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z),
            fmt_f64(e.x.re),
            fmt_f64(e.x.im),
            fmt_f64(e.y.re),
            fmt_f64(e.y.im),
            fmt_f64(e.z.re),
            fmt_f64(e.z.im),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Reads a field CSV back into points and complex field vectors.
pub fn read_field_csv<R: Read>(input: R) -> io::Result<Vec<(Vec3, ComplexVec3)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(FIELD_HEADER) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unexpected field CSV header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        if v.len() != FIELD_HEADER.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "short field CSV row"));
        }
        rows.push((
            Vec3::new(v[0], v[1], v[2]),
            ComplexVec3 {
                x: Complex64::new(v[3], v[4]),
                y: Complex64::new(v[5], v[6]),
                z: Complex64::new(v[7], v[8]),
            },
        ));
    }
    Ok(rows)
}

/// Scalar image with row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub quantity: String,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub axes: (String, String),
    pub extent: [f64; 4],
}

impl Heatmap {
    /// Builds an image from bottom-up grid data indexed `iv * width + iu`.
    fn from_grid(
        quantity: impl Into<String>,
        width: usize,
        height: usize,
        axes: (&str, &str),
        extent: [f64; 4],
        at: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            let iv = height - 1 - row;
            for iu in 0..width {
                values.push(at(iu, iv));
            }
        }
        Heatmap {
            quantity: quantity.into(),
            width,
            height,
            values,
            axes: (axes.0.to_string(), axes.1.to_string()),
            extent,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// Binary 16-bit PGM, big-endian samples, linear map of [min, max] to [0, 65535].
    pub fn to_pgm(&self) -> Vec<u8> {
        let (min, max) = self.range();
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(2 * self.values.len());
        for &v in &self.values {
            let level = if max > min {
                ((v - min) / (max - min) * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
        out
    }

    pub fn sidecar(&self) -> String {
        let (min, max) = self.range();
        let [u0, u1, v0, v1] = self.extent;
        format!(
            "quantity: {}\nmin: {}\nmax: {}\nwidth: {}\nheight: {}\nhorizontal_axis: {} [{}, {}]\nvertical_axis: {} [{}, {}]\norientation: horizontal increases left to right, vertical increases bottom to top\n",
            self.quantity,
            fmt_f64(min),
            fmt_f64(max),
            self.width,
            self.height,
            self.axes.0,
            fmt_f64(u0),
            fmt_f64(u1),
            self.axes.1,
            fmt_f64(v0),
            fmt_f64(v1),
        )
    }
}

/// Wrapped phase over the array face, x across and z up.
pub fn phase_heatmap(pd: &PhaseDistribution) -> Heatmap {
    let first = pd.positions.first().copied().unwrap_or(Vec3::ZERO);
    let last = pd.positions.last().copied().unwrap_or(Vec3::ZERO);
    Heatmap::from_grid(
        "phase_rad_wrapped",
        pd.n_x,
        pd.n_z,
        ("x", "z"),
        [first.x, last.x, first.z, last.z],
        |i, j| wrap_angle(pd.phase[i * pd.n_z + j]),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Ex,
    Ey,
    Ez,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Ex, Component::Ey, Component::Ez];

    pub fn name(self) -> &'static str {
        match self {
            Component::Ex => "ex",
            Component::Ey => "ey",
            Component::Ez => "ez",
        }
    }

    fn magnitude(self, e: &ComplexVec3) -> f64 {
        match self {
            Component::Ex => e.x.norm(),
            Component::Ey => e.y.norm(),
            Component::Ez => e.z.norm(),
        }
    }
}

/// `|E|` of one component over a planar grid; `None` for point-list grids.
pub fn field_heatmap(fg: &FieldGrid, component: Component) -> Option<Heatmap> {
    let GridLayout::Planar { plane, bounds, resolution } = *fg.grid.layout() else {
        return None;
    };
    let (nu, nv) = resolution;
    Some(Heatmap::from_grid(
        format!("abs_{}_v_per_m", component.name()),
        nu,
        nv,
        plane.axis_names(),
        bounds,
        |iu, iv| component.magnitude(&fg.field[iv * nu + iu]),
    ))
}

/// Ordered key/value pairs of the analysis summary.
pub fn report_entries(
    pol: &PolarizationReport,
    metrics: Option<&BeamMetrics>,
    extra: &[(String, String)],
) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = extra.to_vec();
    let mut push = |k: &str, v: String| out.push((k.to_string(), v));
    push("points", pol.points.to_string());
    push("power_ex", fmt_f64(pol.power[0]));
    push("power_ey", fmt_f64(pol.power[1]));
    push("power_ez", fmt_f64(pol.power[2]));
    push("fraction_ex", fmt_f64(pol.fractions[0]));
    push("fraction_ey", fmt_f64(pol.fractions[1]));
    push("fraction_ez", fmt_f64(pol.fractions[2]));
    push("peak_cross_pol", fmt_f64(pol.peak_cross_pol));
    if let Some(m) = metrics {
        push("peak_x_m", fmt_f64(m.peak_point.x));
        push("peak_y_m", fmt_f64(m.peak_point.y));
        push("peak_z_m", fmt_f64(m.peak_point.z));
        push("peak_abs_e_v_per_m", fmt_f64(m.peak_magnitude));
        push("estimated_azimuth_deg", fmt_f64(m.estimated_azimuth.to_degrees()));
        push("estimated_elevation_deg", fmt_f64(m.estimated_elevation.to_degrees()));
        push(
            "first_null_radius_m",
            m.first_null_radius.map_or("none".to_string(), fmt_f64),
        );
        push(
            "propagation_range_m",
            m.propagation_range_estimate.map_or("none".to_string(), fmt_f64),
        );
    }
    out
}

pub fn report_text(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
}

pub fn write_report_csv<W: Write>(entries: &[(String, String)], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"]).map_err(csv_err)?;
    for (k, v) in entries {
        w.write_record([k, v]).map_err(csv_err)?;
    }
    w.flush()
}
