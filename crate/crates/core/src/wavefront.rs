//! Canonical phase-wavefront surfaces `y' = f(x', z')` and their steered form.
//!
//! A [`Wavefront`] lives in the primed frame. Pairing it with
//! [`SteeringAngles`] gives a [`SteeredWavefront`]; distances are always solved
//! against the canonical surface after moving the element into the primed frame.

use std::fmt;
use std::sync::Arc;

use crate::error::WavefrontError;
use crate::geometry::{steering_rotation, Mat3, SteeringAngles};

/// Default axicon slope h/r of the cone wavefront.
pub const DEFAULT_H_OVER_R: f64 = 0.2;

pub type SurfaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Shape of the unsteered phase wavefront.
#[derive(Clone)]
pub enum Wavefront {
    /// `y' = 0`: the Gaussian beam wavefront.
    Plane,
    /// `y' = (h/r)·√(x'² + z'²)`: the Bessel beam wavefront.
    Cone { h_over_r: f64 },
    /// User surface; the gradient falls back to central differences when absent.
    Custom {
        surface: SurfaceFn,
        gradient: Option<GradientFn>,
    },
}

impl fmt::Debug for Wavefront {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wavefront::Plane => write!(f, "Plane"),
            Wavefront::Cone { h_over_r } => f.debug_struct("Cone").field("h_over_r", h_over_r).finish(),
            Wavefront::Custom { gradient, .. } => f
                .debug_struct("Custom")
                .field("analytic_gradient", &gradient.is_some())
                .finish(),
        }
    }
}

impl Wavefront {
    pub fn cone(h_over_r: f64) -> Result<Self, WavefrontError> {
        if !(h_over_r.is_finite() && h_over_r > 0.0) {
            return Err(WavefrontError::InvalidSlope(h_over_r));
        }
        Ok(Wavefront::Cone { h_over_r })
    }

    pub fn custom<F>(surface: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Wavefront::Custom {
            surface: Arc::new(surface),
            gradient: None,
        }
    }

    pub fn custom_with_gradient<F, G>(surface: F, gradient: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        Wavefront::Custom {
            surface: Arc::new(surface),
            gradient: Some(Arc::new(gradient)),
        }
    }

    pub fn steer(self, angles: SteeringAngles) -> SteeredWavefront {
        SteeredWavefront::new(self, angles)
    }
}

/// Height of the canonical surface above the `x'z'` plane.
pub fn surface_eval(w: &Wavefront, x: f64, z: f64) -> f64 {
    match w {
        Wavefront::Plane => 0.0,
        Wavefront::Cone { h_over_r } => h_over_r * x.hypot(z),
        Wavefront::Custom { surface, .. } => surface(x, z),
    }
}

fn fd_step(x: f64, z: f64, rel: f64) -> f64 {
    rel * x.hypot(z).max(1.0)
}

fn central_gradient(f: &(dyn Fn(f64, f64) -> f64 + Send + Sync), x: f64, z: f64) -> (f64, f64) {
    let h = fd_step(x, z, 1e-6);
    (
        (f(x + h, z) - f(x - h, z)) / (2.0 * h),
        (f(x, z + h) - f(x, z - h)) / (2.0 * h),
    )
}

/// `(∂f/∂x', ∂f/∂z')`.
pub fn surface_gradient(w: &Wavefront, x: f64, z: f64) -> Result<(f64, f64), WavefrontError> {
    match w {
        Wavefront::Plane => Ok((0.0, 0.0)),
        Wavefront::Cone { h_over_r } => {
            let rho = x.hypot(z);
            if rho == 0.0 {
                return Err(WavefrontError::ApexSingularity);
            }
            Ok((h_over_r * x / rho, h_over_r * z / rho))
        }
        Wavefront::Custom { surface, gradient } => Ok(match gradient {
            Some(g) => g(x, z),
            None => central_gradient(surface.as_ref(), x, z),
        }),
    }
}

/// Second derivatives `(f_xx, f_xz, f_zz)`, used for the Newton Jacobian.
pub(crate) fn surface_hessian(
    w: &Wavefront,
    x: f64,
    z: f64,
) -> Result<(f64, f64, f64), WavefrontError> {
    match w {
        Wavefront::Plane => Ok((0.0, 0.0, 0.0)),
        Wavefront::Cone { h_over_r } => {
            let rho = x.hypot(z);
            if rho == 0.0 {
                return Err(WavefrontError::ApexSingularity);
            }
            let c = h_over_r / (rho * rho * rho);
            Ok((c * z * z, -c * x * z, c * x * x))
        }
        Wavefront::Custom { gradient, .. } => {
            // differentiate the gradient; a coarser step when it is itself a difference quotient
            let h = fd_step(x, z, if gradient.is_some() { 1e-6 } else { 1e-4 });
            let (gx_p, gz_p) = surface_gradient(w, x + h, z)?;
            let (gx_m, gz_m) = surface_gradient(w, x - h, z)?;
            let (gx_zp, gz_zp) = surface_gradient(w, x, z + h)?;
            let (gx_zm, gz_zm) = surface_gradient(w, x, z - h)?;
            let fxx = (gx_p - gx_m) / (2.0 * h);
            let fzz = (gz_zp - gz_zm) / (2.0 * h);
            let fxz = 0.5 * ((gz_p - gz_m) + (gx_zp - gx_zm)) / (2.0 * h);
            Ok((fxx, fxz, fzz))
        }
    }
}

/// Tilted plane `y₀ = x·tan θ_Az + z·tan θ_El / cos θ_Az` in array coordinates:
/// the steered plane wavefront written in the original frame.
pub fn tilted_plane_eval(angles: SteeringAngles, x: f64, z: f64) -> f64 {
    let (az, el) = (angles.azimuth(), angles.elevation());
    x * az.tan() + z * el.tan() / az.cos()
}

/// A canonical wavefront rotated toward a steering direction.
#[derive(Clone, Debug)]
pub struct SteeredWavefront {
    base: Wavefront,
    angles: SteeringAngles,
    rotation: Mat3,
}

impl SteeredWavefront {
    pub fn new(base: Wavefront, angles: SteeringAngles) -> Self {
        Self {
            rotation: steering_rotation(angles),
            base,
            angles,
        }
    }

    pub fn unsteered(base: Wavefront) -> Self {
        Self::new(base, SteeringAngles::unsteered())
    }

    pub fn base(&self) -> &Wavefront {
        &self.base
    }

    pub fn angles(&self) -> SteeringAngles {
        self.angles
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }
}
