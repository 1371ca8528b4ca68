//! Haar sampling of `SO(n)` and its bi-invariant geodesic distance.
//!
//! The distance between `A` and `B` depends only on the spectrum of `ABᵀ`:
//! with eigenvalues `μ_k = e^{±iψ_j}` the distance is
//! `(½ Σ_k |log μ_k|²)^{1/2} = (Σ_j ψ_j²)^{1/2}`, the principal angles `ψ_j`
//! being read off the 2×2 blocks of a real Schur form.

use std::f64::consts::PI;

use nalgebra::linalg::{Schur, QR};
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Max-norm tolerance on `QᵀQ − I` for a matrix to count as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Tolerance on `det Q − 1`.
pub const DETERMINANT_TOL: f64 = 1e-10;

const SCHUR_MAX_ITERATIONS: usize = 10_000;

/// A point of `SO(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    m: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Validates `‖MᵀM − I‖_max ≤ 1e−12` and `|det M − 1| ≤ 1e−10`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::NotSpecialOrthogonal(format!(
                "shape {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let err = orthogonality_error(&m);
        if !(err <= ORTHOGONALITY_TOL) {
            return Err(Error::NotSpecialOrthogonal(format!(
                "max |QᵀQ − I| = {err:e}"
            )));
        }
        let det = m.determinant();
        if !((det - 1.0).abs() <= DETERMINANT_TOL) {
            return Err(Error::NotSpecialOrthogonal(format!("det = {det}")));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSpecialOrthogonal("ragged or non-square rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_row_slice(n, n, &flat))
    }

    /// Skips validation; callers guarantee the invariants (products of
    /// rotations, sign matrices with an even number of `−1`s).
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    /// `diag(signs)`; the number of negative entries must be even.
    pub fn diagonal_signs(signs: &[f64]) -> Self {
        debug_assert!(signs.iter().all(|s| s.abs() == 1.0));
        debug_assert!(signs.iter().filter(|&&s| s < 0.0).count() % 2 == 0);
        Self {
            m: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(signs)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// `self · other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            m: &self.m * &other.m,
        }
    }

    /// The inverse `selfᵀ`.
    pub fn inverse(&self) -> Rotation {
        Rotation {
            m: self.m.transpose(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.m)
    }

    /// Largest entrywise difference, or `None` on a dimension mismatch.
    pub fn max_abs_diff(&self, other: &Rotation) -> Option<f64> {
        (self.dim() == other.dim()).then(|| (&self.m - &other.m).amax())
    }
}

fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).amax()
}

impl Serialize for Rotation {
    /// Row-major array of arrays.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Rotation::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A reproducible random stream: identical `(seed, stream)` pairs yield
/// identical sequences and distinct stream ids are independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// How a Gaussian matrix is turned into an orthogonal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orthogonalization {
    /// Householder QR with `Q ← Q · diag(sign R_ii)`.
    #[default]
    Householder,
    /// Modified Gram–Schmidt on the columns.
    GramSchmidt,
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let entries: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(n, n, &entries)
}

fn householder_orthogonalize(a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let qr = QR::new(a);
    let r = qr.r();
    let mut q = qr.q();
    let diag_max = r.diagonal().amax();
    let floor = n as f64 * f64::EPSILON * diag_max;
    for j in 0..n {
        let rjj = r[(j, j)];
        if !(rjj.abs() > floor) {
            return None;
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Some(q)
}

fn gram_schmidt_orthogonalize(a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = a.amax();
    let mut q = a;
    for j in 0..n {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let qi = q.column(i).clone_owned();
            q.column_mut(j).axpy(-proj, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        if !(norm > n as f64 * f64::EPSILON * scale) {
            return None;
        }
        q.column_mut(j).unscale_mut(norm);
    }
    Some(q)
}

/// Haar-distributed rotation via Householder QR of a Gaussian matrix.
pub fn random_special_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Rotation> {
    random_special_orthogonal_with(n, rng, Orthogonalization::Householder)
}

/// Haar-distributed rotation: orthogonalize a standard Gaussian matrix and,
/// when the result has determinant `−1`, swap its first two rows.
///
/// Numerically rank-deficient draws are discarded and redrawn.
pub fn random_special_orthogonal_with<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    method: Orthogonalization,
) -> Result<Rotation> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if n == 1 {
        return Ok(Rotation::identity(1));
    }
    loop {
        let a = gaussian_matrix(n, rng);
        let q = match method {
            Orthogonalization::Householder => householder_orthogonalize(a),
            Orthogonalization::GramSchmidt => gram_schmidt_orthogonalize(a),
        };
        let Some(mut q) = q else { continue };
        if !(orthogonality_error(&q) <= ORTHOGONALITY_TOL) {
            continue;
        }
        if q.determinant() < 0.0 {
            q.swap_rows(0, 1);
        }
        return Ok(Rotation { m: q });
    }
}

/// Principal rotation angles, sorted descending, one per conjugate
/// eigenvalue pair (`⌊n/2⌋` of them).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationAngles {
    angles: Vec<f64>,
}

impl RotationAngles {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `(Σ ψ_j²)^{1/2}`, the geodesic distance to the identity.
    pub fn norm(&self) -> f64 {
        self.angles.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Principal angles of an orthogonal matrix with determinant `+1`.
pub(crate) fn principal_angles(m: &DMatrix<f64>) -> Result<RotationAngles> {
    let n = m.nrows();
    if n == 1 {
        return Ok(RotationAngles { angles: Vec::new() });
    }
    // nalgebra's shifted QR can stall on clustered spectra (e.g. near I) at
    // the tightest deflation tolerance; a slightly looser one converges.
    let schur = [1.0, 4.0, 64.0]
        .into_iter()
        .find_map(|k| Schur::try_new(m.clone(), k * f64::EPSILON, SCHUR_MAX_ITERATIONS))
        .ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    let mut angles = Vec::with_capacity(n / 2);
    // indices of real eigenvalues near +1 and near −1
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_trace = 0.5 * (a + d);
            let disc = half_trace * half_trace - (a * d - b * c);
            if disc >= 0.0 {
                let cluster = if half_trace >= 0.0 { &mut plus } else { &mut minus };
                cluster.extend([i, i + 1]);
            } else {
                // the block is ±[[c, −s], [s, c]] up to roundoff
                angles.push(f64::atan2(0.5 * (c - b).abs(), half_trace));
            }
            i += 2;
        } else {
            if t[(i, i)] >= 0.0 { plus.push(i) } else { minus.push(i) }
            i += 1;
        }
    }
    // Real eigenvalues only appear for angles within ~1e-8 of 0 or π, where
    // acos is ill-conditioned. On such a cluster ‖T_c ∓ I‖²_F equals
    // Σ 8 sin²(ψ/2) (resp. Σ 8 cos²(ψ/2)), which is computed to full precision.
    let offset = |idx: &[usize], shift: f64| -> f64 {
        let mut sum = 0.0;
        for &r in idx {
            for &c in idx {
                let v = t[(r, c)] - if r == c { shift } else { 0.0 };
                sum += v * v;
            }
        }
        sum
    };
    let planes = plus.len() / 2;
    if planes > 0 {
        angles.push(2.0 * (offset(&plus, 1.0) / 8.0).sqrt().min(1.0).asin());
        angles.extend(std::iter::repeat_n(0.0, planes - 1));
    }
    let planes = minus.len() / 2;
    if planes > 0 {
        let delta = 2.0 * (offset(&minus, -1.0) / (8.0 * planes as f64)).sqrt().min(1.0).asin();
        angles.extend(std::iter::repeat_n(PI - delta, planes));
    }
    angles.sort_by(|a, b| b.total_cmp(a));
    Ok(RotationAngles { angles })
}

/// Principal angles of `a`.
pub fn rotation_angles(a: &Rotation) -> Result<RotationAngles> {
    principal_angles(&a.m)
}

/// Geodesic distance `d(A, B) = d(ABᵀ, I)` on `SO(n)`.
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let relative = &a.m * b.m.transpose();
    Ok(principal_angles(&relative)?.norm())
}

/// Geodesic distance to the identity.
pub fn distance_to_identity(a: &Rotation) -> Result<f64> {
    Ok(principal_angles(&a.m)?.norm())
}

/// Rotation by `angle` in the plane of coordinates `(i, j)` of `ℝⁿ`.
pub fn plane_rotation(n: usize, i: usize, j: usize, angle: f64) -> Rotation {
    assert!(i < n && j < n && i != j);
    let mut m = DMatrix::identity(n, n);
    let (s, c) = angle.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    Rotation { m }
}
