//! Beam diagnostics over computed fields.

use crate::error::AnalysisError;
use crate::field::{
    total_field, ComplexVec3, FieldGrid, GridLayout, GridPlane, ObservationGrid,
    MIN_DISTANCE_WAVELENGTHS,
};
use crate::geometry::{SteeringAngles, Vec3};
use crate::synthesis::{ArrayGeometry, Excitation};

/// Points whose `|Ez|` is below this are left out of the cross-pol ratio.
pub const EZ_FLOOR: f64 = 1e-15;

/// Minimum dip below the main lobe, as a fraction of its peak, for a null.
pub const NULL_PROMINENCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationReport {
    /// `(Σ|Ex|², Σ|Ey|², Σ|Ez|²)`, V²/m².
    pub power: [f64; 3],
    pub fractions: [f64; 3],
    /// Max over points of `max(|Ex|, |Ey|) / |Ez|`.
    pub peak_cross_pol: f64,
    pub points: usize,
}

pub fn polarization_report(fg: &FieldGrid) -> Result<PolarizationReport, AnalysisError> {
    polarization_report_from(&fg.field)
}

pub fn polarization_report_from(field: &[ComplexVec3]) -> Result<PolarizationReport, AnalysisError> {
    if field.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    let mut power = [0.0; 3];
    let mut peak_cross_pol = 0.0_f64;
    for e in field {
        power[0] += e.x.norm_sqr();
        power[1] += e.y.norm_sqr();
        power[2] += e.z.norm_sqr();
        let ez = e.z.norm();
        if ez >= EZ_FLOOR {
            peak_cross_pol = peak_cross_pol.max(e.x.norm().max(e.y.norm()) / ez);
        }
    }
    let total: f64 = power.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(AnalysisError::ZeroPower);
    }
    Ok(PolarizationReport {
        power,
        fractions: power.map(|p| p / total),
        peak_cross_pol,
        points: field.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamMetrics {
    pub peak_point: Vec3,
    pub peak_magnitude: f64,
    pub estimated_azimuth: f64,
    pub estimated_elevation: f64,
    /// First null across the beam at the peak, if one is resolved.
    pub first_null_radius: Option<f64>,
    pub propagation_range_estimate: Option<f64>,
}

/// Direction of maximum `|E|` on a sphere of the given radius about the array
/// centre: a 1° scan of the forward hemisphere refined to 0.1°.
pub fn estimate_direction(
    array: &ArrayGeometry,
    exc: &Excitation,
    radius: f64,
) -> Result<BeamMetrics, AnalysisError> {
    let minimum = array.aperture_radius() + MIN_DISTANCE_WAVELENGTHS * array.wavelength();
    if !(radius.is_finite() && radius >= minimum) {
        return Err(AnalysisError::RadiusOutOfRange { radius, minimum });
    }

    let coarse: Vec<(f64, f64)> = (-89..=89)
        .flat_map(|el| (-89..=89).map(move |az| (az as f64, el as f64)))
        .collect();
    let (az0, el0, _) = scan_peak(array, exc, radius, &coarse)?;

    let fine: Vec<(f64, f64)> = (-10..=10)
        .flat_map(|de| (-10..=10).map(move |da| (az0 + 0.1 * da as f64, el0 + 0.1 * de as f64)))
        .filter(|(a, e)| a.abs() < 90.0 && e.abs() < 90.0)
        .collect();
    let (az, el, peak_magnitude) = scan_peak(array, exc, radius, &fine)?;

    let angles = SteeringAngles::from_degrees(az, el).map_err(|_| AnalysisError::LineOutsideGrid)?;
    let dir = angles.direction();
    let peak_point = dir * radius;

    // transverse cut through the peak, horizontal and perpendicular to the beam
    let across = Vec3::new(-dir.y, dir.x, 0.0)
        .normalized()
        .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let half_span = 0.1 * radius;
    let n = 400;
    let offsets: Vec<f64> = (-n..=n).map(|i| half_span * i as f64 / n as f64).collect();
    let line = ObservationGrid::from_points(offsets.iter().map(|&t| peak_point + across * t).collect())?;
    let first_null_radius = match total_field(array, exc, &line) {
        Ok(fg) => {
            let samples: Vec<(f64, f64)> = offsets
                .iter()
                .zip(&fg.field)
                .map(|(&t, e)| (t, e.norm()))
                .collect();
            first_null(&samples)
        }
        Err(_) => None,
    };

    Ok(BeamMetrics {
        peak_point,
        peak_magnitude,
        estimated_azimuth: angles.azimuth(),
        estimated_elevation: angles.elevation(),
        first_null_radius,
        propagation_range_estimate: None,
    })
}

fn scan_peak(
    array: &ArrayGeometry,
    exc: &Excitation,
    radius: f64,
    directions: &[(f64, f64)],
) -> Result<(f64, f64, f64), AnalysisError> {
    let points = directions
        .iter()
        .map(|&(az, el)| {
            SteeringAngles::from_degrees(az, el)
                .map(|a| a.direction() * radius)
                .map_err(|_| AnalysisError::RadiusOutOfRange { radius, minimum: radius })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fg = total_field(array, exc, &ObservationGrid::from_points(points)?)?;
    let mut best = 0;
    for (i, e) in fg.field.iter().enumerate() {
        if e.norm_sqr() > fg.field[best].norm_sqr() {
            best = i;
        }
    }
    let (az, el) = directions[best];
    Ok((az, el, fg.field[best].norm()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransverseProfile {
    /// `(offset, |E|)` with offsets symmetric about the axis point, meters and V/m.
    pub samples: Vec<(f64, f64)>,
    pub first_null_radius: Option<f64>,
}

/// `|E|` along the line `axis_point + t·direction` inside a planar grid,
/// interpolated bilinearly from the complex field.
pub fn transverse_profile(
    fg: &FieldGrid,
    axis_point: Vec3,
    direction: Vec3,
) -> Result<TransverseProfile, AnalysisError> {
    let GridLayout::Planar { plane, bounds, resolution } = *fg.grid.layout() else {
        return Err(AnalysisError::LineOutsideGrid);
    };
    let (nu, nv) = resolution;
    let [u_min, u_max, v_min, v_max] = bounds;
    let scale = 1.0 + u_min.abs().max(u_max.abs()).max(v_min.abs()).max(v_max.abs());

    let (u0, v0, off) = plane.coordinates(axis_point);
    if off.abs() > 1e-12 * scale {
        return Err(AnalysisError::LineOutsideGrid);
    }
    let dir = direction.normalized().ok_or(AnalysisError::LineOutsideGrid)?;
    let (du, dv, dn) = in_plane(plane, dir);
    if dn.abs() > 1e-12 {
        return Err(AnalysisError::LineOutsideGrid);
    }
    let inside = |u: f64, v: f64| {
        let eps = 1e-12 * scale;
        u >= u_min - eps && u <= u_max + eps && v >= v_min - eps && v <= v_max + eps
    };
    if !inside(u0, v0) {
        return Err(AnalysisError::LineOutsideGrid);
    }

    let cell = |lo: f64, hi: f64, n: usize| if n > 1 { (hi - lo) / (n - 1) as f64 } else { f64::INFINITY };
    let (cu, cv) = (cell(u_min, u_max, nu), cell(v_min, v_max, nv));
    if (du.abs() > 1e-12 && nu == 1) || (dv.abs() > 1e-12 && nv == 1) {
        return Err(AnalysisError::LineOutsideGrid);
    }
    let step = cu.min(cv);
    // symmetric reach along the line in both directions
    let reach = |c0: f64, d: f64, lo: f64, hi: f64| {
        if d.abs() <= 1e-12 {
            f64::INFINITY
        } else {
            ((hi - c0) / d.abs()).min((c0 - lo) / d.abs())
        }
    };
    let t_max = reach(u0, du, u_min, u_max).min(reach(v0, dv, v_min, v_max));
    let n = (t_max / step * (1.0 + 1e-12)).floor();
    if !(n.is_finite() && n >= 1.0) {
        return Err(AnalysisError::LineOutsideGrid);
    }
    let n = n as i64;

    let samples: Vec<(f64, f64)> = (-n..=n)
        .map(|i| {
            let t = i as f64 * step;
            let e = bilinear(fg, (u_min, cu, nu), (v_min, cv, nv), u0 + t * du, v0 + t * dv);
            (t, e.norm())
        })
        .collect();
    let first_null_radius = first_null(&samples);
    Ok(TransverseProfile {
        samples,
        first_null_radius,
    })
}

fn in_plane(plane: GridPlane, d: Vec3) -> (f64, f64, f64) {
    match plane {
        GridPlane::Xy { .. } => (d.x, d.y, d.z),
        GridPlane::Yz { .. } => (d.y, d.z, d.x),
        GridPlane::Xz { .. } => (d.x, d.z, d.y),
    }
}

fn bilinear(
    fg: &FieldGrid,
    (u_min, cu, nu): (f64, f64, usize),
    (v_min, cv, nv): (f64, f64, usize),
    u: f64,
    v: f64,
) -> ComplexVec3 {
    let locate = |c: f64, lo: f64, cell: f64, n: usize| -> (usize, f64) {
        if n == 1 {
            return (0, 0.0);
        }
        let s = ((c - lo) / cell).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    };
    let (iu, fu) = locate(u, u_min, cu, nu);
    let (iv, fv) = locate(v, v_min, cv, nv);
    let at = |i: usize, j: usize| fg.field[j.min(nv - 1) * nu + i.min(nu - 1)];
    let weight = |e: ComplexVec3, w: f64| e * num_complex::Complex64::new(w, 0.0);
    let mut acc = weight(at(iu, iv), (1.0 - fu) * (1.0 - fv));
    if fu > 0.0 {
        acc = acc + weight(at(iu + 1, iv), fu * (1.0 - fv));
    }
    if fv > 0.0 {
        acc = acc + weight(at(iu, iv + 1), (1.0 - fu) * fv);
    }
    if fu > 0.0 && fv > 0.0 {
        acc = acc + weight(at(iu + 1, iv + 1), fu * fv);
    }
    acc
}

/// Radius of the first null on either side of offset 0: the first strict local
/// minimum that dips more than [`NULL_PROMINENCE`] of the main-lobe peak below
/// both neighbouring maxima. Averaged over both sides when both resolve.
pub fn first_null(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let center = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.abs().total_cmp(&b.1 .0.abs()))
        .map(|(i, _)| i)?;
    let right: Vec<(f64, f64)> = samples[center..].to_vec();
    let left: Vec<(f64, f64)> = samples[..=center].iter().rev().copied().collect();
    match (one_sided_null(&right), one_sided_null(&left)) {
        (Some(r), Some(l)) => Some(0.5 * (r.abs() + l.abs())),
        (Some(r), None) => Some(r.abs()),
        (None, Some(l)) => Some(l.abs()),
        (None, None) => None,
    }
}

fn one_sided_null(s: &[(f64, f64)]) -> Option<f64> {
    let mut lobe_peak = s.first()?.1;
    for i in 1..s.len().saturating_sub(1) {
        lobe_peak = lobe_peak.max(s[i].1);
        let m = s[i].1;
        if !(m < s[i - 1].1 && m <= s[i + 1].1) {
            continue;
        }
        let mut j = i + 1;
        while j + 1 < s.len() && s[j + 1].1 >= s[j].1 {
            j += 1;
        }
        let next_peak = s[j].1;
        if lobe_peak.min(next_peak) - m > NULL_PROMINENCE * lobe_peak {
            return Some(parabolic_vertex(s[i - 1], s[i], s[i + 1]));
        }
    }
    None
}

fn parabolic_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let ca = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let cb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if ca > 0.0 && ca.is_finite() {
        let v = -cb / (2.0 * ca);
        if v >= x0.min(x2) && v <= x0.max(x2) {
            return v;
        }
    }
    x1
}

/// Geometric range of a cone-wavefront beam: aperture radius (half the array
/// diagonal) over h/r.
pub fn propagation_range(array: &ArrayGeometry, h_over_r: f64) -> f64 {
    array.aperture_radius() / h_over_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridPlane;
    use crate::synthesis::{synthesize, to_excitation};
    use crate::wavefront::{SteeredWavefront, Wavefront};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fake_grid(field: Vec<ComplexVec3>) -> FieldGrid {
        let n = field.len();
        let grid = ObservationGrid::from_points(vec![Vec3::new(0.0, 1.0, 0.0); n]).unwrap();
        FieldGrid {
            grid,
            field,
            meta: crate::field::FieldMeta {
                frequency_hz: 1e11,
                angles: None,
                beam: None,
            },
        }
    }

    #[test]
    fn report_examples() {
        let z_only = fake_grid(vec![
            ComplexVec3 { z: c(1.0, 2.0), ..ComplexVec3::ZERO },
            ComplexVec3 { z: c(-0.5, 0.0), ..ComplexVec3::ZERO },
        ]);
        let r = polarization_report(&z_only).unwrap();
        assert_eq!(r.fractions, [0.0, 0.0, 1.0]);
        assert_eq!(r.peak_cross_pol, 0.0);

        let equal = fake_grid(vec![ComplexVec3 { x: c(0.0, 1.0), y: c(1.0, 0.0), z: c(-1.0, 0.0) }]);
        let r = polarization_report(&equal).unwrap();
        for f in r.fractions {
            assert!((f - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((r.fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!((r.peak_cross_pol - 1.0).abs() < 1e-15);

        assert_eq!(polarization_report(&fake_grid(vec![])), Err(AnalysisError::EmptyGrid));
        assert_eq!(
            polarization_report(&fake_grid(vec![ComplexVec3::ZERO])),
            Err(AnalysisError::ZeroPower)
        );
    }

    #[test]
    fn ez_floor_excludes_points() {
        let r = polarization_report(&fake_grid(vec![
            ComplexVec3 { x: c(1.0, 0.0), z: c(1e-16, 0.0), ..ComplexVec3::ZERO },
            ComplexVec3 { x: c(0.1, 0.0), z: c(1.0, 0.0), ..ComplexVec3::ZERO },
        ]))
        .unwrap();
        assert!((r.peak_cross_pol - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unsteered_cone_on_axis_is_z_polarized() {
        let a = ArrayGeometry::from_frequency(16, 16, 0.5, 100e9).unwrap();
        let w = SteeredWavefront::unsteered(Wavefront::cone(0.2).unwrap());
        let exc = to_excitation(&synthesize(&a, &w, &a.solver_config()).unwrap());
        let range = propagation_range(&a, 0.2);
        let grid = ObservationGrid::planar(GridPlane::Yz { x: 0.0 }, [0.04, range, 0.0, 0.0], (50, 1)).unwrap();
        let fg = total_field(&a, &exc, &grid).unwrap();
        let r = polarization_report(&fg).unwrap();
        assert!(r.fractions[2] > 1.0 - 1e-9);
    }

    #[test]
    fn propagation_range_examples() {
        let a = ArrayGeometry::from_frequency(100, 100, 0.5, 100e9).unwrap();
        let r = propagation_range(&a, 0.2);
        assert!((r - 0.530).abs() < 1e-3, "{r}");
        assert!((propagation_range(&a, 0.4) - r / 2.0).abs() < 1e-15);
        let wide = ArrayGeometry::from_frequency(100, 100, 1.0, 100e9).unwrap();
        assert!((propagation_range(&wide, 0.2) - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn first_null_detection() {
        // sampled |J0|-like profile: cos has its first zero at π/2
        let samples: Vec<(f64, f64)> = (-300..=300)
            .map(|i| {
                let x = i as f64 * 0.01;
                (x, x.cos().abs() * (1.0 + 0.1 * x * x).recip())
            })
            .collect();
        let null = first_null(&samples).unwrap();
        assert!((null - std::f64::consts::FRAC_PI_2).abs() < 5e-3, "{null}");

        // monotone decay: no null
        let decay: Vec<(f64, f64)> = (-50..=50).map(|i| (i as f64, 1.0 / (1.0 + (i as f64).abs()))).collect();
        assert_eq!(first_null(&decay), None);

        // ripple well below the prominence threshold is ignored
        let ripple: Vec<(f64, f64)> = (-50..=50)
            .map(|i| {
                let x = i as f64;
                (x, 1.0 / (1.0 + 0.01 * x * x) + 1e-4 * (3.0 * x).sin())
            })
            .collect();
        assert_eq!(first_null(&ripple), None);
    }

    #[test]
    fn single_element_profile_has_no_null() {
        let a = ArrayGeometry::from_frequency(1, 1, 0.5, 100e9).unwrap();
        let grid = ObservationGrid::planar(GridPlane::Xz { y: 0.1 }, [-0.05, 0.05, -0.001, 0.001], (101, 3)).unwrap();
        let fg = total_field(&a, &Excitation::uniform(1), &grid).unwrap();
        let prof = transverse_profile(&fg, Vec3::new(0.0, 0.1, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(prof.first_null_radius, None);
        let mid = prof.samples.len() / 2;
        for w in prof.samples[mid..].windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        for (l, r) in prof.samples[..mid].iter().zip(prof.samples[mid + 1..].iter().rev()) {
            assert!((l.1 - r.1).abs() <= 1e-9 * r.1);
        }
    }

    #[test]
    fn profile_rejects_lines_off_grid() {
        let a = ArrayGeometry::from_frequency(1, 1, 0.5, 100e9).unwrap();
        let grid = ObservationGrid::planar(GridPlane::Xz { y: 0.1 }, [-0.05, 0.05, -0.01, 0.01], (11, 3)).unwrap();
        let fg = total_field(&a, &Excitation::uniform(1), &grid).unwrap();
        let x = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(
            transverse_profile(&fg, Vec3::new(0.0, 0.2, 0.0), x),
            Err(AnalysisError::LineOutsideGrid)
        );
        assert_eq!(
            transverse_profile(&fg, Vec3::new(0.0, 0.1, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            Err(AnalysisError::LineOutsideGrid)
        );
        assert_eq!(
            transverse_profile(&fg, Vec3::new(0.3, 0.1, 0.0), x),
            Err(AnalysisError::LineOutsideGrid)
        );
    }

    #[test]
    fn direction_radius_checked() {
        let a = ArrayGeometry::from_frequency(8, 8, 0.5, 100e9).unwrap();
        let exc = Excitation::uniform(a.len());
        assert!(matches!(
            estimate_direction(&a, &exc, 0.01),
            Err(AnalysisError::RadiusOutOfRange { .. })
        ));
        assert!(estimate_direction(&a, &exc, f64::NAN).is_err());
    }

    #[test]
    fn direction_of_unsteered_and_scaled_beams() {
        let a = ArrayGeometry::from_frequency(16, 16, 0.5, 100e9).unwrap();
        let w = SteeredWavefront::unsteered(Wavefront::cone(0.2).unwrap());
        let exc = to_excitation(&synthesize(&a, &w, &a.solver_config()).unwrap());
        let radius = 0.1;
        let m = estimate_direction(&a, &exc, radius).unwrap();
        assert!(m.estimated_azimuth.to_degrees().abs() < 0.5);
        assert!(m.estimated_elevation.to_degrees().abs() < 0.5);
        let scaled = estimate_direction(&a, &exc.scaled(Complex64::from_polar(3.5, 1.1)), radius).unwrap();
        assert_eq!(scaled.estimated_azimuth, m.estimated_azimuth);
        assert_eq!(scaled.estimated_elevation, m.estimated_elevation);
    }
}
