//! Closed-form expected distances on the spaces built from `SO(3)`, the
//! one-dimensional quadrature for complete flags, and iterated-integral
//! cross-checks in hyperspherical and join coordinates.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flagspec::PartitionKind;
use crate::montecarlo::Space;
use crate::pi_series::PiSeries;
use crate::quadrature::{integrate_2d, integrate_3d, try_integrate, QuadratureResult, DEFAULT_MAX_EVALUATIONS};
use crate::quatcover::join_distance_to_one;

/// Smallest tolerance accepted by [`expected_distance_full_flag`].
pub const MIN_FULL_FLAG_TOL: f64 = 1e-13;
/// Smallest tolerance accepted by the iterated-integral routines.
pub const MIN_ITERATED_TOL: f64 = 1e-12;
/// Tolerance used when [`analytic_expected_distance`] falls back to quadrature.
pub const DEFAULT_FULL_FLAG_TOL: f64 = 1e-12;

/// The spaces with a known expected distance, up to isometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolvedSpace {
    So3,
    Sphere2,
    ProjectivePlane2,
    PartialFlag,
    FullFlag,
    Point,
}

impl SolvedSpace {
    pub fn classify(space: &Space) -> Result<Self> {
        let unsupported = || Error::UnsupportedSpace(format!("{space}: no closed form"));
        match space {
            Space::SpecialOrthogonal(3) => Ok(SolvedSpace::So3),
            Space::Sphere2 => Ok(SolvedSpace::Sphere2),
            Space::ProjectivePlane2 => Ok(SolvedSpace::ProjectivePlane2),
            Space::Point(_) => Ok(SolvedSpace::Point),
            Space::FiniteFlag(spec) if spec.n() == 3 => Ok(match spec.partition().kind() {
                PartitionKind::Complete => SolvedSpace::So3,
                PartitionKind::Proper => SolvedSpace::PartialFlag,
                PartitionKind::Trivial => SolvedSpace::FullFlag,
            }),
            _ => Err(unsupported()),
        }
    }
}

/// Which expression a [`ClosedForm`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormTag {
    TwoOverPiPlusHalfPi,
    HalfPi,
    One,
    OnePlusQuarterPi,
    Zero,
    FullFlagQuadrature,
}

impl ClosedFormTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClosedFormTag::TwoOverPiPlusHalfPi => "2/π + π/2",
            ClosedFormTag::HalfPi => "π/2",
            ClosedFormTag::One => "1",
            ClosedFormTag::OnePlusQuarterPi => "1 + π/4",
            ClosedFormTag::Zero => "0",
            ClosedFormTag::FullFlagQuadrature => "full-flag-quadrature",
        }
    }

    /// The exact value, when the tag names a polynomial in `π` and `1/π`.
    pub fn exact(&self) -> Option<PiSeries> {
        Some(match self {
            ClosedFormTag::TwoOverPiPlusHalfPi => PiSeries::ratio(2, 1, -1) + PiSeries::ratio(1, 2, 1),
            ClosedFormTag::HalfPi => PiSeries::ratio(1, 2, 1),
            ClosedFormTag::One => PiSeries::one(),
            ClosedFormTag::OnePlusQuarterPi => PiSeries::one() + PiSeries::ratio(1, 4, 1),
            ClosedFormTag::Zero => PiSeries::zero(),
            ClosedFormTag::FullFlagQuadrature => return None,
        })
    }
}

impl fmt::Display for ClosedFormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ClosedFormTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub tag: ClosedFormTag,
    /// Symbolic value; `None` only for the quadrature-backed tag.
    pub exact: Option<PiSeries>,
    pub value: f64,
}

impl ClosedForm {
    fn from_tag(tag: ClosedFormTag) -> Self {
        let exact = tag.exact().expect("symbolic tag");
        Self {
            tag,
            value: exact.to_f64(),
            exact: Some(exact),
        }
    }
}

/// Expected distance between two random points of `space`.
///
/// Complete flags have no known closed form and go through
/// [`expected_distance_full_flag`] at [`DEFAULT_FULL_FLAG_TOL`].
pub fn analytic_expected_distance(space: &Space) -> Result<ClosedForm> {
    let tag = match SolvedSpace::classify(space)? {
        SolvedSpace::So3 => ClosedFormTag::TwoOverPiPlusHalfPi,
        SolvedSpace::Sphere2 => ClosedFormTag::HalfPi,
        SolvedSpace::ProjectivePlane2 => ClosedFormTag::One,
        SolvedSpace::PartialFlag => ClosedFormTag::OnePlusQuarterPi,
        SolvedSpace::Point => ClosedFormTag::Zero,
        SolvedSpace::FullFlag => {
            let q = expected_distance_full_flag(DEFAULT_FULL_FLAG_TOL)?;
            return Ok(ClosedForm {
                tag: ClosedFormTag::FullFlagQuadrature,
                exact: None,
                value: q.value,
            });
        }
    };
    Ok(ClosedForm::from_tag(tag))
}

/// `arctan(tan²(arctan(sec φ)/2)) − arctan²(√(1+sec²φ)) / √(1+sec²φ)` on `[0, π/4]`.
pub fn full_flag_integrand(phi: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_4).contains(&phi) {
        return Err(Error::OutOfRange {
            name: "phi3",
            value: phi,
            range: "[0, π/4]",
        });
    }
    Ok(full_flag_integrand_unchecked(phi))
}

fn full_flag_integrand_unchecked(phi: f64) -> f64 {
    let c = phi.cos();
    let half = 0.5 * 1.0_f64.atan2(c);
    let t = half.tan();
    let s = (1.0 + 1.0 / (c * c)).sqrt();
    let a = s.atan();
    (t * t).atan() - a * a / s
}

fn check_tol(tol: f64, min: f64) -> Result<()> {
    if tol >= min && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance {tol:e} is below {min:e}")))
    }
}

fn scaled(r: QuadratureResult, factor: f64, offset: f64) -> QuadratureResult {
    QuadratureResult {
        value: offset + factor * r.value,
        abs_error_bound: factor.abs() * r.abs_error_bound,
        evaluations: r.evaluations,
    }
}

/// `3π/2 + (96/π²) ∫₀^{π/4} full_flag_integrand` with absolute error at most `tol`.
pub fn expected_distance_full_flag(tol: f64) -> Result<QuadratureResult> {
    check_tol(tol, MIN_FULL_FLAG_TOL)?;
    let factor = 96.0 / (PI * PI);
    let r = try_integrate(
        |phi| Ok(full_flag_integrand_unchecked(phi)),
        0.0,
        FRAC_PI_4,
        tol / factor,
        DEFAULT_MAX_EVALUATIONS,
    )?;
    Ok(scaled(r, factor, 1.5 * PI))
}

/// `arctan(sec φ)`.
fn atan_sec(phi: f64) -> f64 {
    1.0_f64.atan2(phi.cos())
}

/// Complete-flag expectation as the hyperspherical triple integral over the
/// tetrahedron `x ≥ y ≥ z ≥ w ≥ 0`, one 48th of the Voronoi cell of `1`.
pub fn expected_distance_full_flag_hyperspherical(tol: f64) -> Result<QuadratureResult> {
    check_tol(tol, MIN_ITERATED_TOL)?;
    let factor = 48.0 / (2.0 * PI * PI);
    let r = integrate_3d(
        |_phi3, phi2, phi1| 2.0 * phi1 * 8.0 * phi1.sin().powi(2) * phi2.sin(),
        0.0,
        FRAC_PI_4,
        |_| 0.0,
        atan_sec,
        |_, _| 0.0,
        |_, phi2| atan_sec(phi2),
        tol / factor,
    )?;
    Ok(scaled(r, factor, 0.0))
}

/// Complete-flag expectation as the join-coordinate triple integral with
/// `α ∈ [0, arctan(cos θ1 / cos θ2)]`. The integrand is even in `θ1` and
/// `θ2`, so only the quadrant `[0, π/4]²` is integrated.
pub fn expected_distance_full_flag_join(tol: f64) -> Result<QuadratureResult> {
    check_tol(tol, MIN_ITERATED_TOL)?;
    let factor = 4.0 * 4.0 / (2.0 * PI * PI);
    let r = integrate_3d(
        |_theta2, theta1, alpha| {
            let (sa, ca) = alpha.sin_cos();
            2.0 * join_distance_to_one(alpha, theta1) * 8.0 * ca * sa
        },
        0.0,
        FRAC_PI_4,
        |_| 0.0,
        |_| FRAC_PI_4,
        |_, _| 0.0,
        |theta2, theta1| theta1.cos().atan2(theta2.cos()),
        tol / factor,
    )?;
    Ok(scaled(r, factor, 0.0))
}

/// `(16/π) ∫₀^{π/4} ∫₀^{π/2} arccos(cos α cos θ1) cos α sin α dα dθ1`, which
/// equals `1 + π/4`.
pub fn expected_distance_partial_flag_integral(tol: f64) -> Result<QuadratureResult> {
    check_tol(tol, MIN_ITERATED_TOL)?;
    let factor = 16.0 / PI;
    let r = integrate_2d(
        |theta1, alpha| {
            let (sa, ca) = alpha.sin_cos();
            join_distance_to_one(alpha, theta1) * ca * sa
        },
        0.0,
        FRAC_PI_4,
        |_| 0.0,
        |_| FRAC_PI_2,
        tol / factor,
    )?;
    Ok(scaled(r, factor, 0.0))
}

/// Volume of `space` by iterated integration of its volume form.
///
/// `SO(3)` and its quotients use hyperspherical coordinates with density
/// `8 sin²φ1 sin φ2`; `S²` and `ℝP²` use spherical coordinates.
pub fn numeric_volume(space: &Space, tol: f64) -> Result<QuadratureResult> {
    check_tol(tol, MIN_ITERATED_TOL)?;
    let so3_density = |_phi3: f64, phi2: f64, phi1: f64| 8.0 * phi1.sin().powi(2) * phi2.sin();
    let sphere_density = |_theta: f64, phi: f64| phi.sin();
    match SolvedSpace::classify(space)? {
        SolvedSpace::So3 => integrate_3d(
            so3_density,
            0.0,
            2.0 * PI,
            |_| 0.0,
            |_| PI,
            |_, _| 0.0,
            |_, _| FRAC_PI_2,
            tol,
        ),
        // x ≥ |y| is symmetric under φ2 ↦ π − φ2; integrate φ2 ∈ [0, π/2] and double.
        SolvedSpace::PartialFlag => integrate_3d(
            so3_density,
            0.0,
            2.0 * PI,
            |_| 0.0,
            |_| FRAC_PI_2,
            |_, _| 0.0,
            |_, phi2| atan_sec(phi2),
            tol / 2.0,
        )
        .map(|r| scaled(r, 2.0, 0.0)),
        SolvedSpace::FullFlag => integrate_3d(
            so3_density,
            0.0,
            FRAC_PI_4,
            |_| 0.0,
            atan_sec,
            |_, _| 0.0,
            |_, phi2| atan_sec(phi2),
            tol / 48.0,
        )
        .map(|r| scaled(r, 48.0, 0.0)),
        SolvedSpace::Sphere2 => integrate_2d(sphere_density, 0.0, 2.0 * PI, |_| 0.0, |_| PI, tol),
        SolvedSpace::ProjectivePlane2 => integrate_2d(sphere_density, 0.0, 2.0 * PI, |_| 0.0, |_| FRAC_PI_2, tol),
        SolvedSpace::Point => Err(Error::UnsupportedSpace(format!("{space}: zero-dimensional"))),
    }
}
