//! Vector electric near field of the array.
//!
//! Each element radiates `E_n = α·I_n·e^{−jk‖r_n‖}/‖r_n‖ · u_θn` with `α = 1 V/A`
//! and `u_θn = (cos Φ cos θ, sin Φ cos θ, −sin θ)` in element-local angles whose
//! axes are parallel to the array axes. Observation points are independent and
//! evaluated in parallel; the sum over elements at one point always runs in
//! element-index order so results are bit-reproducible.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::FieldError;
use crate::geometry::{SteeringAngles, Vec3};
use crate::synthesis::{ArrayGeometry, Excitation};

/// Minimum distance from any element, in wavelengths.
pub const MIN_DISTANCE_WAVELENGTHS: f64 = 10.0;

/// Complex field vector, V/m.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl ComplexVec3 {
    pub const ZERO: ComplexVec3 = ComplexVec3 {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
        z: Complex64::new(0.0, 0.0),
    };

    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for ComplexVec3 {
    type Output = ComplexVec3;
    fn add(self, rhs: ComplexVec3) -> ComplexVec3 {
        ComplexVec3 {
            x: self.x + rhs.x,
            y: self.y + rhs.y,
            z: self.z + rhs.z,
        }
    }
}

impl Mul<Complex64> for ComplexVec3 {
    type Output = ComplexVec3;
    fn mul(self, c: Complex64) -> ComplexVec3 {
        ComplexVec3 {
            x: self.x * c,
            y: self.y * c,
            z: self.z * c,
        }
    }
}

/// Plane of a regular observation grid. The first grid axis `u` runs
/// left-to-right in exported images and the second axis `v` bottom-to-top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridPlane {
    /// `u = x`, `v = y`, at fixed `z`.
    Xy { z: f64 },
    /// `u = y`, `v = z`, at fixed `x`.
    Yz { x: f64 },
    /// `u = x`, `v = z`, at fixed `y`.
    Xz { y: f64 },
}

impl GridPlane {
    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        match *self {
            GridPlane::Xy { z } => Vec3::new(u, v, z),
            GridPlane::Yz { x } => Vec3::new(x, u, v),
            GridPlane::Xz { y } => Vec3::new(u, y, v),
        }
    }

    /// `(u, v, offset from the plane)` of a point.
    pub fn coordinates(&self, p: Vec3) -> (f64, f64, f64) {
        match *self {
            GridPlane::Xy { z } => (p.x, p.y, p.z - z),
            GridPlane::Yz { x } => (p.y, p.z, p.x - x),
            GridPlane::Xz { y } => (p.x, p.z, p.y - y),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GridPlane::Xy { .. } => "xy",
            GridPlane::Yz { .. } => "yz",
            GridPlane::Xz { .. } => "xz",
        }
    }

    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            GridPlane::Xy { .. } => ("x", "y"),
            GridPlane::Yz { .. } => ("y", "z"),
            GridPlane::Xz { .. } => ("x", "z"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridLayout {
    /// `nu × nv` samples over `[u_min, u_max] × [v_min, v_max]`; point index `iv·nu + iu`.
    Planar {
        plane: GridPlane,
        bounds: [f64; 4],
        resolution: (usize, usize),
    },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationGrid {
    layout: GridLayout,
    points: Vec<Vec3>,
}

impl ObservationGrid {
    /// Regular grid; `bounds = [u_min, u_max, v_min, v_max]`.
    pub fn planar(
        plane: GridPlane,
        bounds: [f64; 4],
        resolution: (usize, usize),
    ) -> Result<Self, FieldError> {
        let (nu, nv) = resolution;
        if nu == 0 || nv == 0 {
            return Err(FieldError::InvalidGrid("resolution must be at least 1".into()));
        }
        if bounds.iter().any(|b| !b.is_finite()) || bounds[1] < bounds[0] || bounds[3] < bounds[2] {
            return Err(FieldError::InvalidGrid(format!("bad bounds {bounds:?}")));
        }
        let coord = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut points = Vec::with_capacity(nu * nv);
        for iv in 0..nv {
            let v = coord(bounds[2], bounds[3], nv, iv);
            for iu in 0..nu {
                points.push(plane.point(coord(bounds[0], bounds[1], nu, iu), v));
            }
        }
        Ok(Self {
            layout: GridLayout::Planar {
                plane,
                bounds,
                resolution,
            },
            points,
        })
    }

    pub fn from_points(points: Vec<Vec3>) -> Result<Self, FieldError> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(FieldError::InvalidGrid(format!("point {i} is not finite")));
        }
        Ok(Self {
            layout: GridLayout::Custom,
            points,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rejects points on an element or inside the element far-field limit.
    pub fn check_against(&self, array: &ArrayGeometry) -> Result<(), FieldError> {
        let minimum = MIN_DISTANCE_WAVELENGTHS * array.wavelength();
        for (index, &p) in self.points.iter().enumerate() {
            let distance = array.nearest_element_distance(p);
            if distance == 0.0 {
                return Err(FieldError::CoincidentPoint { index });
            }
            if distance < minimum {
                return Err(FieldError::TooClose {
                    index,
                    distance,
                    minimum,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldMeta {
    pub frequency_hz: f64,
    pub angles: Option<SteeringAngles>,
    pub beam: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub grid: ObservationGrid,
    pub field: Vec<ComplexVec3>,
    pub meta: FieldMeta,
}

impl FieldGrid {
    pub fn with_meta(mut self, angles: SteeringAngles, beam: impl Into<String>) -> Self {
        self.meta.angles = Some(angles);
        self.meta.beam = Some(beam.into());
        self
    }
}

/// Local azimuth `Φ ∈ (−π, π]` and polar angle `θ ∈ [0, π]` of `p` seen from
/// the element. `Φ` is 0 on the local `z` axis.
pub fn local_angles(element_pos: Vec3, p: Vec3) -> Result<(f64, f64), FieldError> {
    let r = p - element_pos;
    let dist = r.norm();
    if dist == 0.0 {
        return Err(FieldError::CoincidentPoint { index: 0 });
    }
    let theta = (r.z / dist).clamp(-1.0, 1.0).acos();
    let phi = r.y.atan2(r.x);
    Ok((phi, theta))
}

pub fn polarization_unit_vector(phi_n: f64, theta_n: f64) -> Vec3 {
    let (sp, cp) = phi_n.sin_cos();
    let (st, ct) = theta_n.sin_cos();
    Vec3::new(cp * ct, sp * ct, -st)
}

/// Contribution of one element for `r = p − element`, `‖r‖ > 0`.
///
/// `u_θ` is formed from the components of `r` directly:
/// `cos Φ = r_x/ρ`, `sin Φ = r_y/ρ`, `cos θ = r_z/‖r‖`, `sin θ = ρ/‖r‖` with
/// `ρ = √(r_x² + r_y²)`.
#[inline]
fn contribution(r: Vec3, current: Complex64, k: f64) -> ComplexVec3 {
    let rho2 = r.x * r.x + r.y * r.y;
    let dist = (rho2 + r.z * r.z).sqrt();
    let rho = rho2.sqrt();
    let (ux, uy, uz) = if rho > 0.0 {
        let c = r.z / (rho * dist);
        (r.x * c, r.y * c, -rho / dist)
    } else {
        (r.z.signum(), 0.0, 0.0)
    };
    let (s, c) = (k * dist).sin_cos();
    let amp = current * Complex64::new(c / dist, -s / dist);
    ComplexVec3 {
        x: amp * ux,
        y: amp * uy,
        z: amp * uz,
    }
}

pub fn element_field(
    element_pos: Vec3,
    current: Complex64,
    p: Vec3,
    k: f64,
) -> Result<ComplexVec3, FieldError> {
    let r = p - element_pos;
    if r.norm() == 0.0 {
        return Err(FieldError::CoincidentPoint { index: 0 });
    }
    Ok(contribution(r, current, k))
}

fn sum_at(positions: &[Vec3], currents: &[Complex64], p: Vec3, k: f64) -> ComplexVec3 {
    let mut acc = ComplexVec3::ZERO;
    for (&e, &i) in positions.iter().zip(currents) {
        let c = contribution(p - e, i, k);
        acc.x += c.x;
        acc.y += c.y;
        acc.z += c.z;
    }
    acc
}

/// Superposed field of all elements at every grid point.
pub fn total_field(
    array: &ArrayGeometry,
    exc: &Excitation,
    grid: &ObservationGrid,
) -> Result<FieldGrid, FieldError> {
    if exc.len() != array.len() {
        return Err(FieldError::LengthMismatch {
            currents: exc.len(),
            elements: array.len(),
        });
    }
    grid.check_against(array)?;
    let k = array.wavenumber();
    let positions = array.positions();
    let field = grid
        .points()
        .par_iter()
        .map(|&p| sum_at(positions, &exc.currents, p, k))
        .collect();
    Ok(FieldGrid {
        grid: grid.clone(),
        field,
        meta: FieldMeta {
            frequency_hz: array.frequency(),
            angles: None,
            beam: None,
        },
    })
}
