//! Minimum signed distance from an array element to a steered wavefront.
//!
//! The element is moved into the primed frame and the foot of the perpendicular
//! is found on the canonical surface `y' = f(x', z')`. With the surface normal
//! `n = (f_x, −1, f_z)` the normal-line condition `r₀ = r_elem − t·n` reduces to
//! two equations in `(x', z')` once `t = f(x', z') − y'_elem` is substituted:
//!
//! ```text
//! F₁ = x' − x'_e + (f − y'_e)·f_x = 0
//! F₂ = z' − z'_e + (f − y'_e)·f_z = 0
//! ```
//!
//! `F` is half the gradient of the squared distance, so the Newton iteration is
//! damped Levenberg–Marquardt style and only accepts steps that do not increase
//! the squared distance. The signed distance is `t·‖n‖`: positive when the
//! element lies on the `−y'` side of the surface.
//!
//! [`oracle_min_distance`] minimizes the squared distance by brute force and
//! shares nothing with the Newton path beyond [`surface_eval`].

use rayon::prelude::*;

use crate::error::SolverError;
use crate::geometry::{to_primed, SteeringAngles, Vec3};
use crate::wavefront::{
    surface_eval, surface_gradient, surface_hessian, SteeredWavefront, Wavefront,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Residual of the normal-line system accepted as converged, meters.
    pub residual_tol: f64,
    /// Samples per axis of the brute-force oracle.
    pub oracle_grid: usize,
    /// Half-width of the oracle search box around the element projection, meters.
    pub oracle_halfwidth: f64,
    /// Newton starts closer than this to the cone axis are pushed outward, meters.
    pub apex_guard: f64,
    /// Radial push applied to starts inside `apex_guard`, meters.
    pub start_offset: f64,
}

impl SolverConfig {
    /// Defaults scaled to an array of the given aperture and element spacing.
    pub fn for_aperture(aperture: f64, spacing: f64) -> Self {
        Self {
            max_iterations: 50,
            residual_tol: 1e-12,
            oracle_grid: 2001,
            oracle_halfwidth: 4.0 * aperture,
            apex_guard: 1e-3 * aperture,
            start_offset: spacing,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let checks: [(&'static str, bool); 6] = [
            ("max_iterations", self.max_iterations > 0),
            ("residual_tol", self.residual_tol > 0.0),
            ("oracle_grid", self.oracle_grid >= 2),
            ("oracle_halfwidth", self.oracle_halfwidth > 0.0),
            ("apex_guard", self.apex_guard > 0.0),
            ("start_offset", self.start_offset > 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(SolverError::InvalidConfig(name));
            }
        }
        Ok(())
    }

    /// Spacing between adjacent oracle samples, meters.
    pub fn oracle_cell(&self) -> f64 {
        2.0 * self.oracle_halfwidth / (self.oracle_grid - 1) as f64
    }

    /// Diagonal of one oracle grid cell: the oracle's accuracy bound.
    pub fn oracle_cell_diagonal(&self) -> f64 {
        self.oracle_cell() * std::f64::consts::SQRT_2
    }
}

impl Default for SolverConfig {
    /// Nominal 1 m aperture with 1 cm spacing.
    fn default() -> Self {
        Self::for_aperture(1.0, 0.01)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FootKind {
    /// Foot of a perpendicular from the element.
    Perpendicular,
    /// The cone apex, where the surface has no normal.
    Apex,
}

/// Nearest point on the wavefront for one element, in primed coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootSolution {
    pub foot: Vec3,
    pub t: f64,
    pub signed_distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kind: FootKind,
    /// Max-norm residual of the normal-line system at the foot, meters.
    pub residual: f64,
}

/// Solve for the foot of the perpendicular from `element_pos` (array frame).
pub fn solve_foot(
    w: &SteeredWavefront,
    element_pos: Vec3,
    cfg: &SolverConfig,
) -> Result<FootSolution, SolverError> {
    solve_foot_primed(w.base(), to_primed(w.rotation(), element_pos), cfg)
}

/// Same as [`solve_foot`] with the element already in primed coordinates.
pub fn solve_foot_primed(
    base: &Wavefront,
    p: Vec3,
    cfg: &SolverConfig,
) -> Result<FootSolution, SolverError> {
    match base {
        Wavefront::Cone { h_over_r } => solve_cone(base, *h_over_r, p, cfg),
        Wavefront::Plane => newton(base, p, (p.x, p.z), cfg.residual_tol, cfg),
        Wavefront::Custom { gradient, .. } => {
            // difference-quotient gradients carry ~1e-10 relative noise
            let tol = if gradient.is_some() {
                cfg.residual_tol
            } else {
                cfg.residual_tol.max(1e-9 * p.norm().max(1.0))
            };
            newton(base, p, (p.x, p.z), tol, cfg)
        }
    }
}

fn solve_cone(
    base: &Wavefront,
    slope: f64,
    p: Vec3,
    cfg: &SolverConfig,
) -> Result<FootSolution, SolverError> {
    let rho = p.x.hypot(p.z);
    let apex = apex_solution(slope, p);
    // Subgradient test: the apex is the minimizer exactly when the element lies
    // in the polar cone below it.
    if rho + slope * p.y <= 0.0 {
        return Ok(apex);
    }

    let start = if rho < cfg.apex_guard {
        if rho > 0.0 {
            let k = (rho + cfg.start_offset) / rho;
            (p.x * k, p.z * k)
        } else {
            (cfg.start_offset, 0.0)
        }
    } else {
        (p.x, p.z)
    };
    let reflected = (-start.0, -start.1);

    let mut best: Option<FootSolution> = None;
    let mut first_err = None;
    for s in [start, reflected] {
        match newton(base, p, s, cfg.residual_tol, cfg) {
            Ok(sol) => {
                if best.is_none_or(|b| sol.signed_distance.abs() < b.signed_distance.abs()) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(b) if apex.signed_distance.abs() < b.signed_distance.abs() => Ok(apex),
        Some(b) => Ok(b),
        None => Err(first_err.unwrap_or(SolverError::ApexSingularity)),
    }
}

fn apex_solution(slope: f64, p: Vec3) -> FootSolution {
    let side = slope * p.x.hypot(p.z) - p.y;
    let d = p.norm();
    FootSolution {
        foot: Vec3::ZERO,
        t: -p.y,
        signed_distance: if side >= 0.0 { d } else { -d },
        iterations: 0,
        converged: true,
        kind: FootKind::Apex,
        residual: 0.0,
    }
}

/// Surface quantities at one `(x', z')` iterate.
struct Iterate {
    x: f64,
    z: f64,
    f: f64,
    gx: f64,
    gz: f64,
    fx_res: f64,
    fz_res: f64,
    dist2: f64,
}

impl Iterate {
    fn at(base: &Wavefront, p: Vec3, x: f64, z: f64) -> Result<Self, SolverError> {
        let f = surface_eval(base, x, z);
        let (gx, gz) = surface_gradient(base, x, z).map_err(|_| SolverError::ApexSingularity)?;
        let t = f - p.y;
        let (dx, dz) = (x - p.x, z - p.z);
        Ok(Self {
            x,
            z,
            f,
            gx,
            gz,
            fx_res: dx + t * gx,
            fz_res: dz + t * gz,
            dist2: dx * dx + t * t + dz * dz,
        })
    }

    fn residual(&self) -> f64 {
        self.fx_res.abs().max(self.fz_res.abs())
    }
}

fn newton(
    base: &Wavefront,
    p: Vec3,
    start: (f64, f64),
    tol: f64,
    cfg: &SolverConfig,
) -> Result<FootSolution, SolverError> {
    let mut cur = Iterate::at(base, p, start.0, start.1)?;
    let mut iterations = 0;
    loop {
        let residual = cur.residual();
        if residual <= tol {
            return Ok(finish(&cur, p, iterations, residual));
        }
        if iterations >= cfg.max_iterations {
            return Err(SolverError::NonConvergence { iterations, residual });
        }
        iterations += 1;

        let t = cur.f - p.y;
        let (hxx, hxz, hzz) =
            surface_hessian(base, cur.x, cur.z).map_err(|_| SolverError::ApexSingularity)?;
        let a = 1.0 + cur.gx * cur.gx + t * hxx;
        let b = cur.gx * cur.gz + t * hxz;
        let c = 1.0 + cur.gz * cur.gz + t * hzz;
        let half_gap = (0.5 * (a - c)).hypot(b);
        let lambda_min = 0.5 * (a + c) - half_gap;
        let scale = a.abs() + c.abs() + 2.0 * b.abs();
        let mut mu = if lambda_min > 1e-12 * scale {
            0.0
        } else {
            -lambda_min + 1e-3 * scale
        };

        let mut accepted = None;
        for _ in 0..40 {
            let (a_m, c_m) = (a + mu, c + mu);
            let det = a_m * c_m - b * b;
            if det > 0.0 && det.is_finite() {
                let dx = (-cur.fx_res * c_m + cur.fz_res * b) / det;
                let dz = (-cur.fz_res * a_m + cur.fx_res * b) / det;
                let trial = Iterate::at(base, p, cur.x + dx, cur.z + dz)?;
                let no_worse = trial.dist2 <= cur.dist2
                    || (trial.dist2 <= cur.dist2 * (1.0 + 1e-12) && trial.residual() < residual);
                if no_worse && trial.dist2.is_finite() {
                    accepted = Some((trial, dx.hypot(dz)));
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-6 * scale.max(1.0) } else { mu * 10.0 };
        }

        match accepted {
            Some((trial, step)) => {
                let stalled = step <= 4.0 * f64::EPSILON * (1.0 + trial.x.abs() + trial.z.abs());
                cur = trial;
                if stalled && cur.residual() > tol {
                    return Err(SolverError::NonConvergence {
                        iterations,
                        residual: cur.residual(),
                    });
                }
            }
            None => {
                return Err(SolverError::NonConvergence { iterations, residual });
            }
        }
    }
}

fn finish(it: &Iterate, p: Vec3, iterations: usize, residual: f64) -> FootSolution {
    let t = it.f - p.y;
    let n_norm = (1.0 + it.gx * it.gx + it.gz * it.gz).sqrt();
    FootSolution {
        foot: Vec3::new(it.x, it.f, it.z),
        t,
        signed_distance: t * n_norm,
        iterations,
        converged: true,
        kind: FootKind::Perpendicular,
        residual,
    }
}

/// Unsigned minimum distance by dense sampling of the squared distance over the
/// primed-frame box centred on the element projection, then one golden-section
/// pass per axis around the best sample.
pub fn oracle_min_distance(w: &SteeredWavefront, element_pos: Vec3, cfg: &SolverConfig) -> f64 {
    oracle_min_distance_primed(w.base(), to_primed(w.rotation(), element_pos), cfg)
}

pub fn oracle_min_distance_primed(base: &Wavefront, p: Vec3, cfg: &SolverConfig) -> f64 {
    let n = cfg.oracle_grid.max(2);
    let cell = cfg.oracle_cell();
    let x0 = p.x - cfg.oracle_halfwidth;
    let z0 = p.z - cfg.oracle_halfwidth;
    let dist2 = |x: f64, z: f64| {
        let dy = surface_eval(base, x, z) - p.y;
        (x - p.x).powi(2) + dy * dy + (z - p.z).powi(2)
    };

    let (best, best_idx) = (0..n)
        .into_par_iter()
        .map(|iz| {
            let z = z0 + iz as f64 * cell;
            let mut row_best = (f64::INFINITY, usize::MAX);
            for ix in 0..n {
                let v = dist2(x0 + ix as f64 * cell, z);
                if v < row_best.0 {
                    row_best = (v, iz * n + ix);
                }
            }
            row_best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    if best_idx == usize::MAX {
        return f64::NAN;
    }

    let bx = x0 + (best_idx % n) as f64 * cell;
    let bz = z0 + (best_idx / n) as f64 * cell;
    let (rx, vx) = golden_section(|x| dist2(x, bz), bx - cell, bx + cell);
    let (_, vz) = golden_section(|z| dist2(rx, z), bz - cell, bz + cell);
    best.min(vx).min(vz).sqrt()
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Signed distance from an element in the `xz`-plane to the steered plane
/// wavefront: `x·cos θ_El·sin θ_Az + z·sin θ_El`.
pub fn plane_distance_closed_form(angles: SteeringAngles, element_pos: Vec3) -> f64 {
    let (az, el) = (angles.azimuth(), angles.elevation());
    element_pos.x * el.cos() * az.sin() + element_pos.z * el.sin()
}

/// Signed distance from a primed-frame point to the cone `y' = s·ρ'`, computed
/// in the meridian half-plane `(ρ, y)` against the ray `y = s·ρ, ρ ≥ 0`.
pub fn cone_distance_closed_form(h_over_r: f64, element_primed: Vec3) -> f64 {
    let s = h_over_r;
    let rho = element_primed.x.hypot(element_primed.z);
    let y = element_primed.y;
    let side = s * rho - y;
    let along = (rho + s * y) / (1.0 + s * s);
    if along <= 0.0 {
        let d = rho.hypot(y);
        if side >= 0.0 {
            d
        } else {
            -d
        }
    } else {
        side / (1.0 + s * s).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{steering_rotation, SteeringAngles};
    use crate::wavefront::tilted_plane_eval;
    use proptest::prelude::*;

    const LAMBDA: f64 = 3e-3;

    fn steered(base: Wavefront, az_deg: f64, el_deg: f64) -> SteeredWavefront {
        base.steer(SteeringAngles::from_degrees(az_deg, el_deg).unwrap())
    }

    #[test]
    fn plane_matches_closed_form() {
        let cfg = SolverConfig::default();
        for (az, el) in [(0.0, 0.0), (20.0, 0.0), (-40.0, 20.0), (35.0, -25.0)] {
            let w = steered(Wavefront::Plane, az, el);
            for p in [
                Vec3::new(0.01, 0.0, -0.02),
                Vec3::new(-0.07, 0.0, 0.03),
                Vec3::ZERO,
            ] {
                let sol = solve_foot(&w, p, &cfg).unwrap();
                let expected = plane_distance_closed_form(w.angles(), p);
                assert!((sol.signed_distance - expected).abs() <= 1e-15, "{az} {el} {p:?}");
            }
        }
    }

    #[test]
    fn unsteered_cone_examples() {
        let cfg = SolverConfig::default();
        let w = SteeredWavefront::unsteered(Wavefront::cone(0.2).unwrap());
        let sol = solve_foot(&w, Vec3::new(1.0, 0.0, 0.0), &cfg).unwrap();
        let expected = 0.2 / 1.04f64.sqrt();
        assert!((sol.signed_distance - expected).abs() <= 1e-12);
        assert!((sol.signed_distance - 0.196_116).abs() <= 1e-6);
        assert_eq!(sol.kind, FootKind::Perpendicular);

        let sol = solve_foot(&w, Vec3::ZERO, &cfg).unwrap();
        assert_eq!(sol.signed_distance, 0.0);
        assert_eq!(sol.kind, FootKind::Apex);
    }

    #[test]
    fn cone_closed_form_examples() {
        let s = 0.2;
        let d = cone_distance_closed_form(s, Vec3::new(0.05, 0.0, 0.0));
        assert!((d - 0.05 * s / (1.0 + s * s).sqrt()).abs() < 1e-15);
        assert_eq!(cone_distance_closed_form(s, Vec3::ZERO), 0.0);
        // a point on the surface
        let on = Vec3::new(0.3, s * 0.5, 0.4);
        assert!(cone_distance_closed_form(s, on).abs() <= 1e-12);
        // below the apex, inside the polar cone: nearest point is the apex
        let below = Vec3::new(0.01, -1.0, 0.0);
        assert!((cone_distance_closed_form(s, below) - below.norm()).abs() < 1e-15);
        // inside the cone: negative
        assert!(cone_distance_closed_form(s, Vec3::new(0.0, 1.0, 0.1)) < 0.0);
    }

    #[test]
    fn element_on_cone_axis_above_apex() {
        let s = 0.3;
        let cfg = SolverConfig::for_aperture(0.1, 1.5e-3);
        let p = Vec3::new(0.0, 0.05, 0.0);
        let sol = solve_foot_primed(&Wavefront::cone(s).unwrap(), p, &cfg).unwrap();
        assert!((sol.signed_distance - cone_distance_closed_form(s, p)).abs() <= 1e-12);
        assert!(sol.signed_distance < 0.0);
    }

    #[test]
    fn oracle_examples() {
        let cfg = SolverConfig::for_aperture(LAMBDA, LAMBDA / 2.0);
        let w = steered(Wavefront::Plane, 20.0, 0.0);
        let p = Vec3::new(LAMBDA, 0.0, 0.0);
        let oracle = oracle_min_distance(&w, p, &cfg);
        let exact = plane_distance_closed_form(w.angles(), p).abs();
        assert!((oracle - exact).abs() <= cfg.oracle_cell_diagonal());

        let cfg = SolverConfig::for_aperture(0.1, 1e-3);
        let w = SteeredWavefront::unsteered(Wavefront::cone(0.2).unwrap());
        let oracle = oracle_min_distance(&w, Vec3::new(0.05, 0.0, 0.0), &cfg);
        let expected = 0.05 * 0.2f64.atan().sin();
        assert!((expected - 0.009_805_8).abs() < 1e-7);
        assert!((oracle - expected).abs() <= cfg.oracle_cell_diagonal());

        for base in [Wavefront::Plane, Wavefront::cone(0.4).unwrap()] {
            let w = steered(base, 30.0, -10.0);
            assert!(oracle_min_distance(&w, Vec3::ZERO, &cfg) <= 1e-15);
        }
    }

    #[test]
    fn steered_solve_is_unsteered_solve_of_primed_point() {
        let cfg = SolverConfig::for_aperture(0.15, 1.5e-3);
        let cone = Wavefront::cone(0.25).unwrap();
        let w = steered(cone.clone(), 25.0, -15.0);
        let unsteered = SteeredWavefront::unsteered(cone);
        for p in [Vec3::new(0.03, 0.0, -0.02), Vec3::new(-0.07, 0.0, 0.05)] {
            let a = solve_foot(&w, p, &cfg).unwrap();
            let b = solve_foot(&unsteered, to_primed(w.rotation(), p), &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn plane_solved_in_array_frame_agrees() {
        let cfg = SolverConfig::default();
        let angles = SteeringAngles::from_degrees(-30.0, 25.0).unwrap();
        let (ta, tb) = (angles.azimuth().tan(), angles.elevation().tan() / angles.azimuth().cos());
        let tilted = Wavefront::custom_with_gradient(
            move |x, z| tilted_plane_eval(angles, x, z),
            move |_, _| (ta, tb),
        );
        let in_array_frame = SteeredWavefront::unsteered(tilted);
        let primed = Wavefront::Plane.steer(angles);
        for p in [Vec3::new(0.02, 0.0, 0.04), Vec3::new(-0.05, 0.0, -0.01)] {
            let a = solve_foot(&in_array_frame, p, &cfg).unwrap();
            let b = solve_foot(&primed, p, &cfg).unwrap();
            assert!((a.signed_distance - b.signed_distance).abs() <= 1e-12);
        }
    }

    #[test]
    fn custom_surface_without_gradient() {
        let cfg = SolverConfig::default();
        let bowl = Wavefront::custom(|x, z| 0.1 + 0.5 * (x * x + z * z));
        let sol = solve_foot_primed(&bowl, Vec3::new(0.2, 0.0, -0.1), &cfg).unwrap();
        let oracle = oracle_min_distance_primed(&bowl, Vec3::new(0.2, 0.0, -0.1), &cfg);
        assert!((sol.signed_distance.abs() - oracle).abs() <= cfg.oracle_cell_diagonal());
        assert!(sol.signed_distance > 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { oracle_grid: 1, ..SolverConfig::default() };
        assert_eq!(bad.validate(), Err(SolverError::InvalidConfig("oracle_grid")));
    }

    fn residual_certificate(base: &Wavefront, p: Vec3, sol: &FootSolution) {
        if sol.kind == FootKind::Apex {
            return;
        }
        let foot = sol.foot;
        let (gx, gz) = surface_gradient(base, foot.x, foot.z).unwrap();
        let n = Vec3::new(gx, -1.0, gz);
        let line = p - n * sol.t;
        assert!((line - foot).norm() <= 1e-10, "residual {:e}", (line - foot).norm());
        assert!((sol.signed_distance.abs() - (foot - p).norm()).abs() <= 1e-9);
        let d = p - foot;
        if d.norm() > 1e-9 {
            let sin_angle = d.cross(n).norm() / (d.norm() * n.norm());
            assert!(sin_angle <= 1e-8, "angle {sin_angle:e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn steered_cone_matches_closed_form(
            s in 0.05f64..0.5,
            az in -60.0f64..60.0, el in -60.0f64..60.0,
            x in -0.1f64..0.1, z in -0.1f64..0.1,
        ) {
            let cfg = SolverConfig::for_aperture(0.2, 1.5e-3);
            let base = Wavefront::cone(s).unwrap();
            let w = steered(base.clone(), az, el);
            let p = Vec3::new(x, 0.0, z);
            let sol = solve_foot(&w, p, &cfg).unwrap();
            let pp = to_primed(&steering_rotation(w.angles()), p);
            let exact = cone_distance_closed_form(s, pp);
            prop_assert!((sol.signed_distance - exact).abs() <= 1e-12,
                "newton {} closed {}", sol.signed_distance, exact);
            residual_certificate(&base, pp, &sol);
        }

        #[test]
        fn primed_cone_any_point_matches_closed_form(
            s in 0.05f64..0.5,
            x in -0.1f64..0.1, y in -0.1f64..0.1, z in -0.1f64..0.1,
        ) {
            let cfg = SolverConfig::for_aperture(0.2, 1.5e-3);
            let base = Wavefront::cone(s).unwrap();
            let p = Vec3::new(x, y, z);
            let sol = solve_foot_primed(&base, p, &cfg).unwrap();
            prop_assert!((sol.signed_distance - cone_distance_closed_form(s, p)).abs() <= 1e-12);
            residual_certificate(&base, p, &sol);
        }

        #[test]
        fn plane_residual_certificate(
            az in -80.0f64..80.0, el in -80.0f64..80.0,
            x in -0.1f64..0.1, z in -0.1f64..0.1,
        ) {
            let w = steered(Wavefront::Plane, az, el);
            let p = Vec3::new(x, 0.0, z);
            let sol = solve_foot(&w, p, &SolverConfig::default()).unwrap();
            residual_certificate(&Wavefront::Plane, to_primed(w.rotation(), p), &sol);
        }
    }
}
