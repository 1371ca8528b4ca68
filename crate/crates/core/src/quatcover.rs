//! The double cover `S³ → SO(3)`.
//!
//! A unit quaternion `q = cos θ + sin θ n` acts on purely imaginary
//! quaternions by `u ↦ q u q⁻¹`, which is rotation about `n` by `2θ`. The map
//! is 2:1 (`q` and `−q` agree) and doubles distances, so distances on
//! quotients `SO(3)/H` for finite `H` can be measured upstairs as twice the
//! minimum `S³` distance between lifted orbits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Mul, Neg};

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flagspec::{isotropy_group, FlagSpec};
use crate::orthogonal::Rotation;

pub const UNIT_TOL: f64 = 1e-12;

/// `x + y i + z j + w k` with `x² + y² + z² + w² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub(crate) x: f64,
    pub(crate) y: f64,
    pub(crate) z: f64,
    pub(crate) w: f64,
}

impl UnitQuaternion {
    pub const ONE: Self = Self::raw(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::raw(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::raw(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::raw(0.0, 0.0, 0.0, 1.0);

    const fn raw(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    /// Checks the unit-norm invariant within `1e−12`.
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z + w * w).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::NotUnit(norm));
        }
        Ok(Self::raw(x, y, z, w))
    }

    /// Scales a nonzero 4-vector onto `S³`.
    pub fn normalized(x: f64, y: f64, z: f64, w: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z + w * w).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotUnit(norm));
        }
        Ok(Self::raw(x / norm, y / norm, z / norm, w / norm))
    }

    /// `cos θ + sin θ n` for a unit axis `n`; it rotates by `2θ` about `n`.
    pub fn from_half_angle_axis(theta: f64, axis: [f64; 3]) -> Result<Self> {
        check_unit3(&axis)?;
        let (s, c) = theta.sin_cos();
        Ok(Self::raw(c, s * axis[0], s * axis[1], s * axis[2]))
    }

    pub fn components(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn real(&self) -> f64 {
        self.x
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    pub fn conjugate(&self) -> Self {
        Self::raw(self.x, -self.y, -self.z, -self.w)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// Hamilton product.
    fn mul(self, q: UnitQuaternion) -> UnitQuaternion {
        let p = self;
        UnitQuaternion::raw(
            p.x * q.x - p.y * q.y - p.z * q.z - p.w * q.w,
            p.x * q.y + p.y * q.x + p.z * q.w - p.w * q.z,
            p.x * q.z - p.y * q.w + p.z * q.x + p.w * q.y,
            p.x * q.w + p.y * q.z - p.z * q.y + p.w * q.x,
        )
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        UnitQuaternion::raw(-self.x, -self.y, -self.z, -self.w)
    }
}

impl Serialize for UnitQuaternion {
    /// `[x, y, z, w]`
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.components().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitQuaternion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z, w] = <[f64; 4]>::deserialize(deserializer)?;
        UnitQuaternion::new(x, y, z, w).map_err(serde::de::Error::custom)
    }
}

fn check_unit3(u: &[f64; 3]) -> Result<()> {
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (norm - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::NotUnit(norm))
    }
}

/// `q u q⁻¹` for a unit vector `u`, i.e. the Rodrigues rotation
/// `cos 2θ u + sin 2θ (n × u) + (1 − cos 2θ)(u·n) n`.
pub fn rotate_vector(q: &UnitQuaternion, u: [f64; 3]) -> Result<[f64; 3]> {
    check_unit3(&u)?;
    let pure = UnitQuaternion::raw(0.0, u[0], u[1], u[2]);
    let r = *q * pure * q.conjugate();
    Ok([r.y, r.z, r.w])
}

fn rotation_entries(q: &UnitQuaternion) -> [[f64; 3]; 3] {
    let UnitQuaternion { x, y, z, w } = *q;
    // each entry is quadratic in q, so q and −q give identical bits
    [
        [
            x * x + y * y - z * z - w * w,
            2.0 * (y * z - x * w),
            2.0 * (y * w + x * z),
        ],
        [
            2.0 * (y * z + x * w),
            x * x - y * y + z * z - w * w,
            2.0 * (z * w - x * y),
        ],
        [
            2.0 * (y * w - x * z),
            2.0 * (z * w + x * y),
            x * x - y * y - z * z + w * w,
        ],
    ]
}

/// The rotation whose `i`-th column is `q e_i q⁻¹`.
pub fn quaternion_to_rotation(q: &UnitQuaternion) -> Rotation {
    let e = rotation_entries(q);
    let flat: Vec<f64> = e.iter().flatten().copied().collect();
    Rotation::from_matrix_unchecked(DMatrix::from_row_slice(3, 3, &flat))
}

/// The lift of `r` with nonnegative real part.
///
/// For rotations by `π` (real part exactly zero) the representative whose
/// first nonzero imaginary coordinate is positive is returned. The branch is
/// chosen on the largest of `trace, r11, r22, r33` to avoid cancellation.
pub fn rotation_to_quaternion(r: &Rotation) -> Result<UnitQuaternion> {
    if r.dim() != 3 {
        return Err(Error::DimensionMismatch(3, r.dim()));
    }
    let m = r.matrix();
    let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let candidates = [trace, m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let branch = (0..4)
        .max_by(|&a, &b| candidates[a].total_cmp(&candidates[b]))
        .unwrap();
    let (x, y, z, w) = match branch {
        0 => {
            let s = 2.0 * (1.0 + trace).max(0.0).sqrt();
            (
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        }
        1 => {
            let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).max(0.0).sqrt();
            (
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        }
        2 => {
            let s = 2.0 * (1.0 - m[(0, 0)] + m[(1, 1)] - m[(2, 2)]).max(0.0).sqrt();
            (
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        }
        _ => {
            let s = 2.0 * (1.0 - m[(0, 0)] - m[(1, 1)] + m[(2, 2)]).max(0.0).sqrt();
            (
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        }
    };
    let q = UnitQuaternion::normalized(x, y, z, w)?;
    Ok(canonical_hemisphere(q))
}

fn canonical_hemisphere(q: UnitQuaternion) -> UnitQuaternion {
    let flip = if q.x != 0.0 {
        q.x < 0.0
    } else {
        [q.y, q.z, q.w]
            .into_iter()
            .find(|c| *c != 0.0)
            .is_some_and(|c| c < 0.0)
    };
    let q = if flip { -q } else { q };
    // avoid handing back −0.0 in the real slot
    UnitQuaternion { x: q.x + 0.0, ..q }
}

/// Great-circle distance on `S³`, in `[0, π]`.
pub fn sphere_distance(p: &UnitQuaternion, q: &UnitQuaternion) -> f64 {
    p.dot(q).clamp(-1.0, 1.0).acos()
}

/// Full preimage in `S³` of the coset `R(q) · SG_λ^P` for `λ = (1,1,1)`:
/// `{±q·h̃ : h ∈ SG_λ^P}` where `h̃` lifts `h`. Listed as `q·h̃, −q·h̃` per
/// group element, identity first.
pub fn lifted_orbit(spec: &FlagSpec, q: &UnitQuaternion) -> Result<Vec<UnitQuaternion>> {
    if spec.lambda().parts() != [1, 1, 1] {
        return Err(Error::UnsupportedSpace(format!(
            "lifted orbits need lambda = (1,1,1), got {spec}"
        )));
    }
    let group = isotropy_group(spec)?;
    let mut orbit = Vec::with_capacity(2 * group.order());
    for h in group.elements() {
        let lift = *q * rotation_to_quaternion(h)?;
        orbit.push(lift);
        orbit.push(-lift);
    }
    Ok(orbit)
}

/// Distance between the cosets of `a` and `b` in `SO(3)/SG_λ^P`, computed
/// upstairs as twice the minimum `S³` distance between the lifted orbits.
pub fn lifted_quotient_distance(spec: &FlagSpec, a: &Rotation, b: &Rotation) -> Result<f64> {
    let oa = lifted_orbit(spec, &rotation_to_quaternion(a)?)?;
    let ob = lifted_orbit(spec, &rotation_to_quaternion(b)?)?;
    let min = oa
        .iter()
        .flat_map(|p| ob.iter().map(move |q| sphere_distance(p, q)))
        .fold(f64::INFINITY, f64::min);
    Ok(2.0 * min)
}

/// Hyperspherical coordinates `(φ1, φ2, φ3)` on `S³`:
/// `x = cos φ1`, `y = sin φ1 cos φ2`, `z = sin φ1 sin φ2 cos φ3`,
/// `w = sin φ1 sin φ2 sin φ3`. The volume element is `sin² φ1 sin φ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Hyperspherical {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl From<[f64; 3]> for Hyperspherical {
    fn from([phi1, phi2, phi3]: [f64; 3]) -> Self {
        Self { phi1, phi2, phi3 }
    }
}

impl From<Hyperspherical> for [f64; 3] {
    fn from(h: Hyperspherical) -> Self {
        [h.phi1, h.phi2, h.phi3]
    }
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, hi_open: bool, range: &'static str) -> Result<()> {
    let ok = value >= lo && if hi_open { value < hi } else { value <= hi };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

pub fn hyperspherical_to_cartesian(h: &Hyperspherical) -> Result<UnitQuaternion> {
    check_range("phi1", h.phi1, 0.0, PI, false, "[0, π]")?;
    check_range("phi2", h.phi2, 0.0, PI, false, "[0, π]")?;
    check_range("phi3", h.phi3, 0.0, 2.0 * PI, true, "[0, 2π)")?;
    let (s1, c1) = h.phi1.sin_cos();
    let (s2, c2) = h.phi2.sin_cos();
    let (s3, c3) = h.phi3.sin_cos();
    Ok(UnitQuaternion::raw(c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3))
}

pub fn cartesian_to_hyperspherical(q: &UnitQuaternion) -> Hyperspherical {
    let r_zw = q.z.hypot(q.w);
    let r_yzw = q.y.hypot(r_zw);
    let mut phi3 = q.w.atan2(q.z);
    if phi3 < 0.0 {
        phi3 += 2.0 * PI;
    }
    if phi3 >= 2.0 * PI {
        phi3 = 0.0;
    }
    Hyperspherical {
        phi1: r_yzw.atan2(q.x),
        phi2: r_zw.atan2(q.y),
        phi3,
    }
}

/// Join coordinates `(α, θ1, θ2)`: `(z₁, z₂) = (cos α e^{iθ1}, sin α e^{iθ2})`
/// with `x + iy = z₁`, `z + iw = z₂`. The volume element is `cos α sin α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct JoinCoords {
    pub alpha: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl From<[f64; 3]> for JoinCoords {
    fn from([alpha, theta1, theta2]: [f64; 3]) -> Self {
        Self {
            alpha,
            theta1,
            theta2,
        }
    }
}

impl From<JoinCoords> for [f64; 3] {
    fn from(j: JoinCoords) -> Self {
        [j.alpha, j.theta1, j.theta2]
    }
}

pub fn join_to_cartesian(j: &JoinCoords) -> Result<UnitQuaternion> {
    check_range("alpha", j.alpha, 0.0, FRAC_PI_2, false, "[0, π/2]")?;
    // (−π, π]
    if !(j.theta1 > -PI && j.theta1 <= PI) {
        return Err(Error::OutOfRange {
            name: "theta1",
            value: j.theta1,
            range: "(−π, π]",
        });
    }
    if !(j.theta2 > -PI && j.theta2 <= PI) {
        return Err(Error::OutOfRange {
            name: "theta2",
            value: j.theta2,
            range: "(−π, π]",
        });
    }
    let (sa, ca) = j.alpha.sin_cos();
    let (s1, c1) = j.theta1.sin_cos();
    let (s2, c2) = j.theta2.sin_cos();
    Ok(UnitQuaternion::raw(ca * c1, ca * s1, sa * c2, sa * s2))
}

fn principal_arg(y: f64, x: f64) -> f64 {
    let a = y.atan2(x);
    if a <= -PI {
        PI
    } else {
        a
    }
}

pub fn cartesian_to_join(q: &UnitQuaternion) -> JoinCoords {
    JoinCoords {
        alpha: q.z.hypot(q.w).atan2(q.x.hypot(q.y)),
        theta1: principal_arg(q.y, q.x),
        theta2: principal_arg(q.w, q.z),
    }
}

/// `S³` distance from `1` to the point with join coordinates `(α, θ1, ·)`.
///
/// Equal to `arccos(cos α cos θ1)`, evaluated as an `atan2` of the
/// imaginary and real parts so it stays accurate near `1`.
pub fn join_distance_to_one(alpha: f64, theta1: f64) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let (s1, c1) = theta1.sin_cos();
    (ca * s1).hypot(sa).atan2(ca * c1)
}

/// Rotation axis and angle in `[0, π]` of a 3-vector rotation.
pub fn axis_angle(r: &Rotation) -> Result<(Vector3<f64>, f64)> {
    let q = rotation_to_quaternion(r)?;
    let v = Vector3::new(q.y, q.z, q.w);
    let s = v.norm();
    let angle = 2.0 * s.atan2(q.x);
    let axis = if s > 0.0 { v / s } else { Vector3::x() };
    Ok((axis, angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthogonal::{distance_to_identity, random_special_orthogonal, RngStream};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    const E1: [f64; 3] = [1.0, 0.0, 0.0];
    const E2: [f64; 3] = [0.0, 1.0, 0.0];
    const E3: [f64; 3] = [0.0, 0.0, 1.0];

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn sqrt_i() -> UnitQuaternion {
        UnitQuaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0).unwrap()
    }

    /// Rodrigues formula evaluated directly.
    fn rodrigues(theta: f64, n: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        let n = Vector3::from(n);
        let u = Vector3::from(u);
        let c = (2.0 * theta).cos();
        let s = (2.0 * theta).sin();
        let r = c * u + s * n.cross(&u) + (1.0 - c) * u.dot(&n) * n;
        [r.x, r.y, r.z]
    }

    #[test]
    fn rotating_vectors() {
        assert!(close3(rotate_vector(&UnitQuaternion::ONE, E2).unwrap(), E2, 0.0));
        assert!(close3(rotate_vector(&UnitQuaternion::I, E2).unwrap(), [0.0, -1.0, 0.0], 0.0));
        let v = rotate_vector(&sqrt_i(), E2).unwrap();
        assert!(close3(v, rodrigues(FRAC_PI_4, E1, E2), 1e-15));
        assert!(close3(v, E3, 1e-15));
        assert!(rotate_vector(&UnitQuaternion::ONE, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn klein_group_images() {
        let i = quaternion_to_rotation(&UnitQuaternion::I);
        assert_eq!(i, Rotation::diagonal_signs(&[1.0, -1.0, -1.0]));
        let k = quaternion_to_rotation(&UnitQuaternion::K);
        assert_eq!(k, Rotation::diagonal_signs(&[-1.0, -1.0, 1.0]));
        assert_eq!(quaternion_to_rotation(&UnitQuaternion::ONE), Rotation::identity(3));
    }

    #[test]
    fn lifting_rotations() {
        assert_eq!(rotation_to_quaternion(&Rotation::identity(3)).unwrap(), UnitQuaternion::ONE);
        let flip = Rotation::diagonal_signs(&[1.0, -1.0, -1.0]);
        assert_eq!(rotation_to_quaternion(&flip).unwrap(), UnitQuaternion::I);
        let quarter = crate::orthogonal::plane_rotation(3, 1, 2, FRAC_PI_2);
        let q = rotation_to_quaternion(&quarter).unwrap();
        assert!(q.max_abs_diff(&sqrt_i()) < 1e-15);
        assert!(quaternion_to_rotation(&q).max_abs_diff(&quarter).unwrap() < 1e-15);
    }

    #[test]
    fn sphere_distances() {
        let one = UnitQuaternion::ONE;
        assert_eq!(sphere_distance(&one, &one), 0.0);
        assert!((sphere_distance(&one, &UnitQuaternion::I) - FRAC_PI_2).abs() < 1e-15);
        assert!((sphere_distance(&one, &sqrt_i()) - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn orbits_of_the_identity() {
        let p = |blocks: &[&[usize]]| FlagSpec::from_parts(&[1, 1, 1], blocks).unwrap();
        let one = UnitQuaternion::ONE;
        let full = lifted_orbit(&p(&[&[1, 2, 3]]), &one).unwrap();
        assert_eq!(full.len(), 8);
        for unit in [UnitQuaternion::ONE, UnitQuaternion::I, UnitQuaternion::J, UnitQuaternion::K] {
            assert!(full.contains(&unit) && full.contains(&-unit));
        }
        assert_eq!(lifted_orbit(&p(&[&[1], &[2], &[3]]), &one).unwrap(), vec![one, -one]);
        let p1 = lifted_orbit(&p(&[&[1], &[2, 3]]), &one).unwrap();
        assert_eq!(p1, vec![one, -one, UnitQuaternion::I, -UnitQuaternion::I]);
        let p2 = lifted_orbit(&p(&[&[2], &[1, 3]]), &one).unwrap();
        assert!(p2.contains(&UnitQuaternion::J));
        let p3 = lifted_orbit(&p(&[&[3], &[1, 2]]), &one).unwrap();
        assert!(p3.contains(&UnitQuaternion::K));
        let bad = FlagSpec::from_parts(&[1, 2], &[&[1, 2]]).unwrap();
        assert!(lifted_orbit(&bad, &one).is_err());
    }

    #[test]
    fn sixteen_cell_orbits() {
        let spec = FlagSpec::with_trivial(&[1, 1, 1]).unwrap();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let r = random_special_orthogonal(3, &mut rng).unwrap();
            let orbit = lifted_orbit(&spec, &rotation_to_quaternion(&r).unwrap()).unwrap();
            assert_eq!(orbit.len(), 8);
            for (a, p) in orbit.iter().enumerate() {
                for q in &orbit[a + 1..] {
                    let d = sphere_distance(p, q);
                    assert!((d - FRAC_PI_2).abs() < 1e-7 || (d - PI).abs() < 1e-7, "{d}");
                }
            }
        }
    }

    #[test]
    fn coordinate_examples() {
        let h = Hyperspherical { phi1: 0.0, phi2: 1.0, phi3: 2.0 };
        assert_eq!(hyperspherical_to_cartesian(&h).unwrap(), UnitQuaternion::ONE);
        let h = Hyperspherical { phi1: FRAC_PI_2, phi2: FRAC_PI_2, phi3: 0.0 };
        assert!(hyperspherical_to_cartesian(&h).unwrap().max_abs_diff(&UnitQuaternion::J) < 1e-15);
        assert!(hyperspherical_to_cartesian(&Hyperspherical { phi1: -0.1, phi2: 0.0, phi3: 0.0 }).is_err());
        assert!(hyperspherical_to_cartesian(&Hyperspherical { phi1: 0.1, phi2: 0.0, phi3: 2.0 * PI }).is_err());

        let j = JoinCoords { alpha: 0.0, theta1: 0.0, theta2: 1.0 };
        assert_eq!(join_to_cartesian(&j).unwrap(), UnitQuaternion::ONE);
        let j = JoinCoords { alpha: FRAC_PI_2, theta1: 0.7, theta2: 0.0 };
        assert!(join_to_cartesian(&j).unwrap().max_abs_diff(&UnitQuaternion::J) < 1e-15);
        assert!(join_to_cartesian(&JoinCoords { alpha: 0.1, theta1: -PI, theta2: 0.0 }).is_err());
    }

    #[test]
    fn join_region_matches_cartesian_inequality() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..2000 {
            let r = random_special_orthogonal(3, &mut rng).unwrap();
            let q = rotation_to_quaternion(&r).unwrap();
            let j = cartesian_to_join(&q);
            assert_eq!(q.x >= q.y.abs(), j.theta1.abs() <= FRAC_PI_4);
            let d = join_distance_to_one(j.alpha, j.theta1);
            assert!((d - sphere_distance(&UnitQuaternion::ONE, &q)).abs() < 1e-7);
        }
    }

    fn unit_quaternion() -> impl Strategy<Value = UnitQuaternion> {
        prop::array::uniform4(-1.0f64..1.0)
            .prop_filter("nonzero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-3)
            .prop_map(|[x, y, z, w]| UnitQuaternion::normalized(x, y, z, w).unwrap())
    }

    proptest! {
        #[test]
        fn homomorphism(p in unit_quaternion(), q in unit_quaternion()) {
            let lhs = quaternion_to_rotation(&(p * q));
            let rhs = quaternion_to_rotation(&p).compose(&quaternion_to_rotation(&q));
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10);
        }

        #[test]
        fn sign_invariance(q in unit_quaternion()) {
            let diff = quaternion_to_rotation(&q).max_abs_diff(&quaternion_to_rotation(&-q)).unwrap();
            prop_assert!(diff <= 1e-15);
        }

        #[test]
        fn columns_are_rotated_basis_vectors(q in unit_quaternion()) {
            let r = quaternion_to_rotation(&q);
            for (c, e) in [E1, E2, E3].into_iter().enumerate() {
                let v = rotate_vector(&q, e).unwrap();
                for (row, x) in v.iter().enumerate() {
                    prop_assert!((r.matrix()[(row, c)] - x).abs() < 1e-14);
                }
            }
        }

        #[test]
        fn rodrigues_agrees_with_conjugation(
            theta in 0.0f64..PI,
            axis in unit_quaternion(),
            u in unit_quaternion(),
        ) {
            let n = Vector3::new(axis.y, axis.z, axis.w).normalize();
            let v = Vector3::new(u.x, u.y, u.z).normalize();
            let q = UnitQuaternion::from_half_angle_axis(theta, [n.x, n.y, n.z]).unwrap();
            let got = rotate_vector(&q, [v.x, v.y, v.z]).unwrap();
            prop_assert!(close3(got, rodrigues(theta, [n.x, n.y, n.z], [v.x, v.y, v.z]), 1e-13));
        }

        #[test]
        fn lift_roundtrip(q in unit_quaternion()) {
            let r = quaternion_to_rotation(&q);
            let lifted = rotation_to_quaternion(&r).unwrap();
            prop_assert!(lifted.x >= 0.0);
            prop_assert!(lifted.max_abs_diff(&q).min(lifted.max_abs_diff(&-q)) <= 1e-10);
            prop_assert!(quaternion_to_rotation(&lifted).max_abs_diff(&r).unwrap() <= 1e-10);
        }

        #[test]
        fn double_cover_scales_distance(q in unit_quaternion()) {
            let d3 = sphere_distance(&UnitQuaternion::ONE, &q);
            let expected = 2.0 * d3.min(PI - d3);
            let got = distance_to_identity(&quaternion_to_rotation(&q)).unwrap();
            prop_assert!((got - expected).abs() <= 1e-10, "{got} vs {expected}");
        }
    }
}
