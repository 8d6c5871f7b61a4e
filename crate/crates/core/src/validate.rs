//! Self-check suites runnable from the command line.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::export::{write_field_csv, write_phase_csv};
use crate::field::{total_field, GridPlane, ObservationGrid};
use crate::geometry::{steering_rotation, to_primed, Mat3, SteeringAngles};
use crate::solver::{
    cone_distance_closed_form, oracle_min_distance, plane_distance_closed_form, solve_foot, SolverConfig,
};
use crate::synthesis::{synthesize, synthesize_numerical, to_excitation, ArrayGeometry, Excitation};
use crate::wavefront::{surface_eval, surface_gradient, SteeredWavefront, Wavefront};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Rotation,
    Gradient,
    Gaussian,
    Oracle,
    Cone,
    Linearity,
    Determinism,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Rotation,
        Check::Gradient,
        Check::Gaussian,
        Check::Oracle,
        Check::Cone,
        Check::Linearity,
        Check::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Rotation => "rotation",
            Check::Gradient => "gradient",
            Check::Gaussian => "gaussian",
            Check::Oracle => "oracle",
            Check::Cone => "cone",
            Check::Linearity => "linearity",
            Check::Determinism => "determinism",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("no checks selected")]
    EmptyCheckList,
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationOptions {
    pub checks: Vec<Check>,
    pub seed: u64,
    /// Added to every solver distance before comparison. Test hook: any nonzero
    /// value of a micrometre or more must make the distance checks fail.
    pub distance_perturbation: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            checks: Check::ALL.to_vec(),
            seed: 0x5eed,
            distance_perturbation: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<12} max_error={:.3e} tolerance={:.3e} ({:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check.name(),
            self.max_error,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

pub fn parse_checks(list: &str) -> Result<Vec<Check>, ValidationError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Check::parse(s).ok_or_else(|| ValidationError::UnknownCheck(s.to_string())))
        .collect()
}

pub fn run_validation(opts: &ValidationOptions) -> Result<Vec<CheckResult>, ValidationError> {
    if opts.checks.is_empty() {
        return Err(ValidationError::EmptyCheckList);
    }
    Ok(opts.checks.iter().map(|&c| run_check(c, opts)).collect())
}

fn run_check(check: Check, opts: &ValidationOptions) -> CheckResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (max_error, tolerance, detail) = match check {
        Check::Rotation => rotation(&mut rng),
        Check::Gradient => gradient(&mut rng),
        Check::Gaussian => gaussian(opts.distance_perturbation),
        Check::Oracle => oracle(&mut rng, opts.distance_perturbation),
        Check::Cone => cone(opts.distance_perturbation),
        Check::Linearity => linearity(&mut rng),
        Check::Determinism => determinism(),
    };
    CheckResult {
        check,
        passed: max_error <= tolerance,
        max_error,
        tolerance,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn random_angles(rng: &mut ChaCha8Rng, max_deg: f64) -> SteeringAngles {
    SteeringAngles::from_degrees(rng.gen_range(-max_deg..=max_deg), rng.gen_range(-max_deg..=max_deg))
        .expect("angles inside range")
}

fn rotation(rng: &mut ChaCha8Rng) -> (f64, f64, String) {
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let r = steering_rotation(random_angles(rng, 89.0));
        worst = worst
            .max(r.transpose().mul_mat(&r).max_abs_diff(&Mat3::IDENTITY))
            .max((r.determinant() - 1.0).abs());
    }
    (worst, 1e-12, "1000 random steering rotations, |RᵀR − I| and |det − 1|".into())
}

fn gradient(rng: &mut ChaCha8Rng) -> (f64, f64, String) {
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let s = rng.gen_range(0.05..0.5);
        let w = Wavefront::cone(s).expect("valid slope");
        let x: f64 = rng.gen_range(-0.2..0.2);
        let z = rng.gen_range(-0.2..0.2);
        if x.hypot(z) < 1e-3 {
            continue;
        }
        let (gx, gz) = surface_gradient(&w, x, z).expect("off-apex gradient");
        let h = 1e-6 * x.hypot(z).max(1e-3);
        let fx = (surface_eval(&w, x + h, z) - surface_eval(&w, x - h, z)) / (2.0 * h);
        let fz = (surface_eval(&w, x, z + h) - surface_eval(&w, x, z - h)) / (2.0 * h);
        let rel = ((gx - fx).hypot(gz - fz)) / gx.hypot(gz);
        worst = worst.max(rel);
    }
    (worst, 1e-6, "500 cone points, analytic vs central differences (relative)".into())
}

fn gaussian(perturb: f64) -> (f64, f64, String) {
    let array = ArrayGeometry::from_frequency(100, 100, 0.5, 100e9).expect("valid array");
    let k = array.wavenumber();
    let cfg = array.solver_config();
    let mut worst = 0.0_f64;
    for (az, el) in [(20.0, 0.0), (0.0, 20.0), (-40.0, 40.0)] {
        let angles = SteeringAngles::from_degrees(az, el).expect("valid angles");
        let w = SteeredWavefront::new(Wavefront::Plane, angles);
        let pd = match synthesize_numerical(&array, &w, &cfg) {
            Ok(pd) => pd,
            Err(e) => return (f64::INFINITY, 1e-9, format!("solver failed: {e}")),
        };
        for (p, &d) in array.positions().iter().zip(&pd.signed_distance) {
            let expected = k * plane_distance_closed_form(angles, *p);
            worst = worst.max((k * (d + perturb) - expected).abs());
        }
    }
    (worst, 1e-9, "100x100 plane wavefront, numerical phase vs closed form, rad".into())
}

/// A sub-millimetre array with a fine oracle so that the oracle bound is below
/// one micrometre.
fn oracle(rng: &mut ChaCha8Rng, perturb: f64) -> (f64, f64, String) {
    let array = ArrayGeometry::from_frequency(2, 2, 0.5, 300e9).expect("valid array");
    let cfg = SolverConfig {
        oracle_grid: 2001,
        oracle_halfwidth: 5e-4,
        ..array.solver_config()
    };
    let bound = cfg.oracle_cell_diagonal();
    let mut worst = 0.0_f64;
    for case in 0..16 {
        let base = if case % 2 == 0 {
            Wavefront::Plane
        } else {
            Wavefront::cone(rng.gen_range(0.05..0.5)).expect("valid slope")
        };
        let w = SteeredWavefront::new(base, random_angles(rng, 30.0));
        let p = array.positions()[rng.gen_range(0..array.len())];
        let d = match solve_foot(&w, p, &cfg) {
            Ok(s) => s.signed_distance + perturb,
            Err(e) => return (f64::INFINITY, bound, format!("solver failed: {e}")),
        };
        worst = worst.max((d.abs() - oracle_min_distance(&w, p, &cfg)).abs());
    }
    (worst, bound, "16 plane/cone cases, |Newton| vs grid oracle, m".into())
}

fn cone(perturb: f64) -> (f64, f64, String) {
    let array = ArrayGeometry::from_frequency(32, 32, 0.5, 100e9).expect("valid array");
    let s = 0.2;
    let w = SteeredWavefront::unsteered(Wavefront::cone(s).expect("valid slope"));
    let pd = match synthesize_numerical(&array, &w, &array.solver_config()) {
        Ok(pd) => pd,
        Err(e) => return (f64::INFINITY, 1e-9, format!("solver failed: {e}")),
    };
    let mut worst = 0.0_f64;
    for (p, &d) in array.positions().iter().zip(&pd.signed_distance) {
        let rho = p.x.hypot(p.z);
        let expected = rho * s / (1.0 + s * s).sqrt();
        worst = worst.max((d + perturb - expected).abs());
        let primed = to_primed(w.rotation(), *p);
        worst = worst.max((d + perturb - cone_distance_closed_form(s, primed)).abs());
    }
    (worst, 1e-9, "32x32 unsteered cone, h/r 0.2, vs point-to-ray distance, m".into())
}

fn linearity(rng: &mut ChaCha8Rng) -> (f64, f64, String) {
    let array = ArrayGeometry::from_frequency(8, 8, 0.5, 100e9).expect("valid array");
    let random_currents = |rng: &mut ChaCha8Rng| {
        Excitation::from_currents(
            (0..array.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    };
    let i1 = random_currents(rng);
    let i2 = random_currents(rng);
    let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let combined = Excitation::from_currents(
        i1.currents
            .iter()
            .zip(&i2.currents)
            .map(|(x, y)| a * x + b * y)
            .collect(),
    );
    let grid = ObservationGrid::planar(GridPlane::Xz { y: 0.1 }, [-0.05, 0.05, -0.05, 0.05], (9, 9))
        .expect("valid grid");
    let (e1, e2, ec) = match (
        total_field(&array, &i1, &grid),
        total_field(&array, &i2, &grid),
        total_field(&array, &combined, &grid),
    ) {
        (Ok(e1), Ok(e2), Ok(ec)) => (e1, e2, ec),
        _ => return (f64::INFINITY, 1e-12, "field evaluation failed".into()),
    };
    let scale = ec.field.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let mut worst = 0.0_f64;
    for ((x, y), c) in e1.field.iter().zip(&e2.field).zip(&ec.field) {
        let diff = (*x * a + *y * b + *c * Complex64::new(-1.0, 0.0)).norm();
        worst = worst.max(diff / scale);
    }
    (worst, 1e-12, "E(aI1 + bI2) vs aE(I1) + bE(I2), relative to peak".into())
}

fn determinism() -> (f64, f64, String) {
    let array = ArrayGeometry::from_frequency(16, 16, 0.5, 100e9).expect("valid array");
    let w = SteeredWavefront::new(
        Wavefront::cone(0.2).expect("valid slope"),
        SteeringAngles::from_degrees(20.0, 10.0).expect("valid angles"),
    );
    let grid = ObservationGrid::planar(GridPlane::Yz { x: 0.0 }, [0.05, 0.2, -0.05, 0.05], (31, 21))
        .expect("valid grid");
    let render = || -> Option<(Vec<u8>, Vec<u8>)> {
        let pd = synthesize(&array, &w, &array.solver_config()).ok()?;
        let fg = total_field(&array, &to_excitation(&pd), &grid).ok()?;
        let (mut phase, mut field) = (Vec::new(), Vec::new());
        write_phase_csv(&pd, &mut phase).ok()?;
        write_field_csv(&fg, &mut field).ok()?;
        Some((phase, field))
    };
    match (render(), render()) {
        (Some(a), Some(b)) if a == b => (0.0, 0.0, "two pipeline runs, byte-identical CSV".into()),
        (Some(_), Some(_)) => (1.0, 0.0, "CSV bytes differ between runs".into()),
        _ => (f64::INFINITY, 0.0, "pipeline failed".into()),
    }
}
