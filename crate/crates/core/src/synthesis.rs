//! Per-element phase shifts and excitation currents.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::SynthesisError;
use crate::geometry::{to_primed, Vec3};
use crate::solver::{
    oracle_min_distance_primed, plane_distance_closed_form, solve_foot_primed, SolverConfig,
};
use crate::wavefront::{surface_eval, SteeredWavefront, Wavefront};

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

pub fn wavelength_from_frequency(frequency_hz: f64) -> f64 {
    C0 / frequency_hz
}

/// Centred rectangular grid of elements in the `xz`-plane.
///
/// Element `(i, j)` sits at `x = (i − (n_x−1)/2)·spacing`,
/// `z = (j − (n_z−1)/2)·spacing` and has flat index `i·n_z + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    n_x: usize,
    n_z: usize,
    spacing: f64,
    wavelength: f64,
    positions: Vec<Vec3>,
}

impl ArrayGeometry {
    pub fn new(n_x: usize, n_z: usize, spacing: f64, wavelength: f64) -> Result<Self, SynthesisError> {
        if n_x == 0 {
            return Err(SynthesisError::InvalidArray("n_x"));
        }
        if n_z == 0 {
            return Err(SynthesisError::InvalidArray("n_z"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(SynthesisError::InvalidArray("spacing"));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(SynthesisError::InvalidArray("wavelength"));
        }
        let cx = (n_x as f64 - 1.0) / 2.0;
        let cz = (n_z as f64 - 1.0) / 2.0;
        let positions = (0..n_x)
            .flat_map(|i| {
                (0..n_z).map(move |j| {
                    Vec3::new((i as f64 - cx) * spacing, 0.0, (j as f64 - cz) * spacing)
                })
            })
            .collect();
        Ok(Self {
            n_x,
            n_z,
            spacing,
            wavelength,
            positions,
        })
    }

    /// Array at `frequency_hz` with spacing given in wavelengths.
    pub fn from_frequency(
        n_x: usize,
        n_z: usize,
        spacing_in_wavelengths: f64,
        frequency_hz: f64,
    ) -> Result<Self, SynthesisError> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(SynthesisError::InvalidArray("frequency"));
        }
        let wavelength = wavelength_from_frequency(frequency_hz);
        Self::new(n_x, n_z, spacing_in_wavelengths * wavelength, wavelength)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn frequency(&self) -> f64 {
        C0 / self.wavelength
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    /// Physical extent `(n_x·spacing, n_z·spacing)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.n_x as f64 * self.spacing, self.n_z as f64 * self.spacing)
    }

    /// Longer side of the physical extent.
    pub fn aperture(&self) -> f64 {
        let (ex, ez) = self.extent();
        ex.max(ez)
    }

    /// Half the diagonal of the physical extent.
    pub fn aperture_radius(&self) -> f64 {
        let (ex, ez) = self.extent();
        0.5 * ex.hypot(ez)
    }

    /// Distance from `p` to the nearest element.
    pub fn nearest_element_distance(&self, p: Vec3) -> f64 {
        let snap = |coord: f64, n: usize| {
            let c = (n as f64 - 1.0) / 2.0;
            let k = (coord / self.spacing + c).round().clamp(0.0, n as f64 - 1.0);
            (k - c) * self.spacing
        };
        let nearest = Vec3::new(snap(p.x, self.n_x), 0.0, snap(p.z, self.n_z));
        (p - nearest).norm()
    }

    /// Solver defaults for this array's aperture and spacing.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::for_aperture(self.aperture(), self.spacing)
    }
}

/// Phase shift accumulated over a signed path `d`: `2π·d/λ`.
pub fn phase_shift(d: f64, wavelength: f64) -> f64 {
    TAU * d / wavelength
}

/// Signed distances and unwrapped phases per element, in element-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDistribution {
    pub n_x: usize,
    pub n_z: usize,
    pub wavelength: f64,
    pub positions: Vec<Vec3>,
    pub signed_distance: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PhaseDistribution {
    fn from_distances(array: &ArrayGeometry, signed_distance: Vec<f64>) -> Self {
        let phase = signed_distance
            .iter()
            .map(|&d| phase_shift(d, array.wavelength))
            .collect();
        Self {
            n_x: array.n_x,
            n_z: array.n_z,
            wavelength: array.wavelength,
            positions: array.positions.clone(),
            signed_distance,
            phase,
        }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }
}

/// Complex element currents in element-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    pub currents: Vec<Complex64>,
}

impl Excitation {
    pub fn from_currents(currents: Vec<Complex64>) -> Self {
        Self { currents }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            currents: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            currents: self.currents.iter().map(|i| i * c).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currents.is_empty()
    }
}

/// Phase distribution for a steered wavefront. Plane wavefronts use the closed
/// form; every other wavefront is solved numerically per element.
pub fn synthesize(
    array: &ArrayGeometry,
    w: &SteeredWavefront,
    cfg: &SolverConfig,
) -> Result<PhaseDistribution, SynthesisError> {
    if let Wavefront::Plane = w.base() {
        let angles = w.angles();
        let d = array
            .positions
            .iter()
            .map(|&p| plane_distance_closed_form(angles, p))
            .collect();
        return Ok(PhaseDistribution::from_distances(array, d));
    }
    synthesize_numerical(array, w, cfg)
}

/// Phase distribution from the Newton solve for every element, falling back to
/// the brute-force minimization when Newton fails.
pub fn synthesize_numerical(
    array: &ArrayGeometry,
    w: &SteeredWavefront,
    cfg: &SolverConfig,
) -> Result<PhaseDistribution, SynthesisError> {
    let d = array
        .positions
        .par_iter()
        .enumerate()
        .map(|(index, &pos)| element_distance(w, pos, cfg).map_err(|cause| (index, cause)))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|(index, cause)| SynthesisError::SolverFailure { index, cause })?;
    Ok(PhaseDistribution::from_distances(array, d))
}

fn element_distance(
    w: &SteeredWavefront,
    pos: Vec3,
    cfg: &SolverConfig,
) -> Result<f64, crate::error::SolverError> {
    let p = to_primed(w.rotation(), pos);
    match solve_foot_primed(w.base(), p, cfg) {
        Ok(sol) => Ok(sol.signed_distance),
        Err(err) => {
            let d = oracle_min_distance_primed(w.base(), p, cfg);
            if !d.is_finite() {
                return Err(err);
            }
            // the nearest-point segment never crosses the surface, so the side
            // of the element fixes the sign
            let side = surface_eval(w.base(), p.x, p.z) - p.y;
            Ok(if side >= 0.0 { d } else { -d })
        }
    }
}

/// `I_n = exp(j·ΔΦ_n)`.
pub fn to_excitation(pd: &PhaseDistribution) -> Excitation {
    Excitation {
        currents: pd.phase.iter().map(|&ph| Complex64::from_polar(1.0, ph)).collect(),
    }
}

pub fn wrap_angle(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Copy of `pd` with every phase mapped into `[0, 2π)`.
pub fn wrap_phase(pd: &PhaseDistribution) -> PhaseDistribution {
    PhaseDistribution {
        phase: pd.phase.iter().map(|&p| wrap_angle(p)).collect(),
        ..pd.clone()
    }
}
