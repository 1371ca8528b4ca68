//! Ordered partitions, set partitions and the manifolds `Fl(λ; P)` they name.
//!
//! A [`FlagSpec`] pairs an ordered partition `λ = (λ_1, …, λ_k)` of `n` with a
//! set partition `P` of the index set `{1, …, k}`. The isotropy subgroup
//! `SG_λ^P ⊂ SO(n)` is block diagonal with one `O(λ_j)` block per index, and
//! the blocks grouped by each member of `P` are required to have determinant
//! `+1` jointly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthogonal::Rotation;
use crate::pi_series::PiSeries;

/// Largest `k` for which [`isotropy_group`] enumerates sign vectors.
pub const MAX_FINITE_ISOTROPY_RANK: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedPartition {
    parts: Vec<usize>,
}

impl OrderedPartition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidPartition("no parts".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!(
                "parts must be positive, got {parts:?}"
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// The integer being partitioned.
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of parts `k`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Partial sums `d_m = λ_1 + … + λ_m`, the dimensions of the nested subspaces.
    pub fn signature(&self) -> Vec<usize> {
        self.parts
            .iter()
            .scan(0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    pub fn is_all_ones(&self) -> bool {
        self.parts.iter().all(|&p| p == 1)
    }

    /// Applies `σ·λ = (λ_σ(1), …, λ_σ(k))` for a 0-based permutation `sigma`.
    pub fn permuted(&self, sigma: &[usize]) -> Result<Self> {
        check_permutation(sigma, self.len())?;
        Self::new(sigma.iter().map(|&s| self.parts[s]).collect())
    }
}

impl fmt::Display for OrderedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn check_permutation(sigma: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if sigma.len() != k {
        return Err(Error::InvalidArgument(format!(
            "permutation of length {} applied to {k} indices",
            sigma.len()
        )));
    }
    for &s in sigma {
        if s >= k || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidArgument(format!(
                "{sigma:?} is not a permutation of 0..{k}"
            )));
        }
    }
    Ok(())
}

/// Conjugate of a partition: the row lengths of the transposed Young diagram.
///
/// The input may be in any order; it is sorted descending first.
pub fn conjugate_partition(parts: &[usize]) -> Result<Vec<usize>> {
    if parts.is_empty() {
        return Err(Error::InvalidPartition("no parts".into()));
    }
    if parts.contains(&0) {
        return Err(Error::InvalidPartition(format!(
            "parts must be positive, got {parts:?}"
        )));
    }
    let mut sorted = parts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let widest = sorted[0];
    Ok((1..=widest)
        .map(|i| sorted.iter().take_while(|&&p| p >= i).count())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    /// A single block. For `k = 1` this is also the complete partition.
    Trivial,
    /// All singletons.
    Complete,
    Proper,
}

/// A set partition of `{1, …, k}`, stored with sorted blocks ordered by their
/// smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
    k: usize,
}

impl SetPartition {
    /// Validates that `blocks` partitions exactly `{1, …, k}` (1-based).
    pub fn new(blocks: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        let mut canon = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidSetPartition("empty block".into()));
            }
            let mut block = block;
            block.sort_unstable();
            for &i in &block {
                if i == 0 || i > k {
                    return Err(Error::InvalidSetPartition(format!(
                        "index {i} outside 1..={k}"
                    )));
                }
                if std::mem::replace(&mut seen[i - 1], true) {
                    return Err(Error::InvalidSetPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
            }
            canon.push(block);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidSetPartition(format!(
                "index {} is not covered",
                missing + 1
            )));
        }
        canon.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks: canon, k })
    }

    /// Builds the partition over `{1, …, max index}`.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let k = blocks.iter().flatten().copied().max().unwrap_or(0);
        Self::new(blocks, k)
    }

    pub fn trivial(k: usize) -> Self {
        Self {
            blocks: vec![(1..=k).collect()],
            k,
        }
    }

    pub fn complete(k: usize) -> Self {
        Self {
            blocks: (1..=k).map(|i| vec![i]).collect(),
            k,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Size of the ground set.
    pub fn ground_size(&self) -> usize {
        self.k
    }

    /// Number of blocks `|P|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn kind(&self) -> PartitionKind {
        if self.blocks.len() == 1 {
            PartitionKind::Trivial
        } else if self.blocks.len() == self.k {
            PartitionKind::Complete
        } else {
            PartitionKind::Proper
        }
    }

    /// Whether every block of `self` lies inside a block of `coarse`.
    pub fn refines(&self, coarse: &SetPartition) -> bool {
        if self.k != coarse.k {
            return false;
        }
        let mut owner = vec![0usize; self.k];
        for (b, block) in coarse.blocks.iter().enumerate() {
            for &i in block {
                owner[i - 1] = b;
            }
        }
        self.blocks
            .iter()
            .all(|block| block.iter().all(|&i| owner[i - 1] == owner[block[0] - 1]))
    }

    /// Relabels index `i` to `σ(i)` (0-based `sigma`), matching `σ·λ`.
    pub fn permuted(&self, sigma: &[usize]) -> Result<Self> {
        check_permutation(sigma, self.k)?;
        // position j of σ·λ holds old index sigma[j]; old index i moves to inv[i]
        let mut inv = vec![0; self.k];
        for (j, &s) in sigma.iter().enumerate() {
            inv[s] = j;
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&i| inv[i - 1] + 1).collect())
            .collect();
        Self::new(blocks, self.k)
    }
}

impl fmt::Display for SetPartition {
    /// `{1}{2,3}`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            let items: Vec<String> = block.iter().map(ToString::to_string).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

/// Parses `{1}{2,3}` into raw blocks; whitespace is ignored.
pub fn parse_blocks(text: &str) -> Result<Vec<Vec<usize>>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut rest = compact.as_str();
    let mut blocks = Vec::new();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('{')
            .ok_or_else(|| Error::Parse(format!("expected '{{' in {text:?}")))?;
        let close = body
            .find('}')
            .ok_or_else(|| Error::Parse(format!("unclosed block in {text:?}")))?;
        let block = parse_list(&body[..close])?;
        blocks.push(block);
        rest = &body[close + 1..];
    }
    if blocks.is_empty() {
        return Err(Error::Parse(format!("no blocks in {text:?}")));
    }
    Ok(blocks)
}

/// Parses a comma-separated list of positive integers.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        })
        .collect()
}

/// Names the manifold `Fl(λ; P) = SO(n) / SG_λ^P`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FlagSpecJson", into = "FlagSpecJson")]
pub struct FlagSpec {
    lambda: OrderedPartition,
    p: SetPartition,
}

#[derive(Serialize, Deserialize)]
struct FlagSpecJson {
    lambda: Vec<usize>,
    #[serde(rename = "P")]
    p: Vec<Vec<usize>>,
}

impl TryFrom<FlagSpecJson> for FlagSpec {
    type Error = Error;

    fn try_from(raw: FlagSpecJson) -> Result<Self> {
        let lambda = OrderedPartition::new(raw.lambda)?;
        let p = SetPartition::new(raw.p, lambda.len())?;
        FlagSpec::new(lambda, p)
    }
}

impl From<FlagSpec> for FlagSpecJson {
    fn from(spec: FlagSpec) -> Self {
        FlagSpecJson {
            lambda: spec.lambda.parts,
            p: spec.p.blocks,
        }
    }
}

impl FlagSpec {
    pub fn new(lambda: OrderedPartition, p: SetPartition) -> Result<Self> {
        if p.ground_size() != lambda.len() {
            return Err(Error::InvalidSetPartition(format!(
                "P covers {} indices but lambda has {} parts",
                p.ground_size(),
                lambda.len()
            )));
        }
        Ok(Self { lambda, p })
    }

    /// Convenience constructor from raw parts and 1-based blocks.
    pub fn from_parts(parts: &[usize], blocks: &[&[usize]]) -> Result<Self> {
        let lambda = OrderedPartition::new(parts.to_vec())?;
        let p = SetPartition::new(blocks.iter().map(|b| b.to_vec()).collect(), lambda.len())?;
        Self::new(lambda, p)
    }

    pub fn with_trivial(parts: &[usize]) -> Result<Self> {
        let lambda = OrderedPartition::new(parts.to_vec())?;
        let p = SetPartition::trivial(lambda.len());
        Self::new(lambda, p)
    }

    pub fn with_complete(parts: &[usize]) -> Result<Self> {
        let lambda = OrderedPartition::new(parts.to_vec())?;
        let p = SetPartition::complete(lambda.len());
        Self::new(lambda, p)
    }

    pub fn lambda(&self) -> &OrderedPartition {
        &self.lambda
    }

    pub fn partition(&self) -> &SetPartition {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.lambda.n()
    }

    /// Applies `σ` to both `λ` and `P`.
    pub fn permuted(&self, sigma: &[usize]) -> Result<Self> {
        Self::new(self.lambda.permuted(sigma)?, self.p.permuted(sigma)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("FlagSpec serializes")
    }
}

impl fmt::Display for FlagSpec {
    /// `lambda=1,1,1 P={1}{2,3}`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lambda={} P={}", self.lambda, self.p)
    }
}

impl FromStr for FlagSpec {
    type Err = Error;

    /// Accepts `lambda=1,1,1 P={1}{2,3}`; the two fields may appear in either
    /// order and `P` may be omitted (trivial partition).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lambda_at = s
            .find("lambda=")
            .ok_or_else(|| Error::Parse(format!("missing 'lambda=' in {s:?}")))?;
        let p_at = s.find("P=");
        let lambda_end = match p_at {
            Some(p) if p > lambda_at => p,
            _ => s.len(),
        };
        let lambda_text = &s[lambda_at + "lambda=".len()..lambda_end];
        let lambda = OrderedPartition::new(parse_list(lambda_text.trim())?)?;
        let p = match p_at {
            Some(p) => {
                let end = if lambda_at > p { lambda_at } else { s.len() };
                SetPartition::new(parse_blocks(&s[p + 2..end])?, lambda.len())?
            }
            None => SetPartition::trivial(lambda.len()),
        };
        FlagSpec::new(lambda, p)
    }
}

/// `Vol(S^{i−1}) = 2 π^{i/2} / Γ(i/2)` as an exact multiple of a power of π.
pub fn sphere_volume_exact(i: usize) -> Result<PiSeries> {
    if i == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let factorial = |m: usize| (1..=m).fold(BigInt::one(), |acc, j| acc * BigInt::from(j));
    let m = i / 2;
    if i.is_multiple_of(2) {
        // Γ(m) = (m−1)!
        let coeff = BigRational::new(BigInt::from(2), factorial(m - 1));
        Ok(PiSeries::term(coeff, m as i32))
    } else {
        // Γ(m + 1/2) = (2m)! √π / (4^m m!)
        let numer = BigInt::from(2u32).pow(2 * m as u32 + 1) * factorial(m);
        let coeff = BigRational::new(numer, factorial(2 * m));
        Ok(PiSeries::term(coeff, m as i32))
    }
}

/// Volume of the unit sphere `S^{i−1} ⊂ ℝ^i`.
pub fn sphere_volume(i: usize) -> Result<f64> {
    sphere_volume_exact(i).map(|v| v.to_f64())
}

/// `Vol(Fl(λ; P)) = 2^{|P|−1} · Π_{i=1..n} V_i^{1 − λ̄_i}` with `V_i = Vol(S^{i−1})`
/// and `λ̄` the conjugate partition, zero-padded to length `n`.
pub fn flag_volume(spec: &FlagSpec) -> PiSeries {
    let n = spec.n();
    let conj = conjugate_partition(spec.lambda.parts()).expect("validated partition");
    let mut coeff = BigRational::from_integer(BigInt::from(2u32).pow(spec.p.len() as u32 - 1));
    let mut power = 0i32;
    for i in 1..=n {
        let exponent = 1 - conj.get(i - 1).copied().unwrap_or(0) as i64;
        if exponent == 0 {
            continue;
        }
        let v = sphere_volume_exact(i).expect("i >= 1");
        let (q, s) = v.as_monomial().expect("sphere volumes are monomials");
        let q_pow = if exponent > 0 {
            num_traits::pow(q.clone(), exponent as usize)
        } else {
            num_traits::pow(q.recip(), (-exponent) as usize)
        };
        coeff *= q_pow;
        power += s * exponent as i32;
    }
    PiSeries::term(coeff, power)
}

/// Sheet count `2^m`, `m = |P′| − |P|`, of `Fl(λ; P′)` over `Fl(λ; P)`.
pub fn covering_multiplicity(p: &SetPartition, p_refined: &SetPartition) -> Result<u64> {
    if !p_refined.refines(p) {
        return Err(Error::NotRefinement {
            coarse: p.to_string(),
            refined: p_refined.to_string(),
        });
    }
    let m = p_refined.len() - p.len();
    1u64.checked_shl(m as u32)
        .ok_or_else(|| Error::InvalidArgument(format!("2^{m} overflows")))
}

/// A finite subgroup of `SO(n)` given by its full element list.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteIsotropy {
    n: usize,
    elements: Vec<Rotation>,
}

impl FiniteIsotropy {
    /// Accepts `elements` if they share a dimension, contain the identity and
    /// are closed under products (within `tol` in the max norm).
    pub fn from_elements(elements: Vec<Rotation>, tol: f64) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty group".into()))?;
        let n = first.dim();
        if let Some(bad) = elements.iter().find(|e| e.dim() != n) {
            return Err(Error::DimensionMismatch(n, bad.dim()));
        }
        let group = Self { n, elements };
        if group.position(&Rotation::identity(n), tol).is_none() {
            return Err(Error::InvalidArgument("group lacks the identity".into()));
        }
        for a in &group.elements {
            for b in &group.elements {
                if group.position(&a.compose(b), tol).is_none() {
                    return Err(Error::InvalidArgument(
                        "element list is not closed under multiplication".into(),
                    ));
                }
            }
        }
        Ok(group)
    }

    /// The trivial group `{I}` in `SO(n)`.
    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            elements: vec![Rotation::identity(n)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Rotation] {
        &self.elements
    }

    /// Index of the element equal to `r` within `tol`, if any.
    pub fn position(&self, r: &Rotation, tol: f64) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.max_abs_diff(r).is_some_and(|d| d <= tol))
    }
}

/// `SG_λ^P` for `λ = (1, …, 1)`: the diagonal sign matrices whose product of
/// signs is `+1` within every block of `P`. Identity comes first.
pub fn isotropy_group(spec: &FlagSpec) -> Result<FiniteIsotropy> {
    if !spec.lambda.is_all_ones() {
        return Err(Error::InfiniteIsotropy(spec.lambda.parts().to_vec()));
    }
    let k = spec.lambda.len();
    if k > MAX_FINITE_ISOTROPY_RANK {
        return Err(Error::InvalidArgument(format!(
            "enumerating 2^{k} sign vectors is not supported"
        )));
    }
    let block_masks: Vec<u64> = spec
        .p
        .blocks()
        .iter()
        .map(|b| b.iter().fold(0u64, |m, &i| m | 1 << (i - 1)))
        .collect();
    let elements = (0u64..1 << k)
        .filter(|mask| {
            block_masks
                .iter()
                .all(|bm| (mask & bm).count_ones() % 2 == 0)
        })
        .map(|mask| {
            let signs: Vec<f64> = (0..k)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            Rotation::diagonal_signs(&signs)
        })
        .collect();
    Ok(FiniteIsotropy { n: k, elements })
}
