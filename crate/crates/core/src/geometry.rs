//! Vertices of the martingale-measure polytope `Δ^{b-1} ∩ A`.
//!
//! `A` is the affine solution space of `M q = c`. Every point of the
//! polytope is a convex combination of points where `A` meets a face of the
//! simplex in a single relative-interior point; those points are the
//! generators. [`enumerate_generators`] finds them by walking faces in order
//! of increasing size and only ever looking at a face once all of its facets
//! are known to miss `A`. [`brute_force_generators`] is an independent
//! exhaustive search kept as an oracle.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactmath::{solve, Rational, RationalMatrix, RationalVector, SolutionSpace};
use crate::market::{augmented_matrix, MartingaleSystem};

pub const DEFAULT_MAX_OUTCOMES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Refuse systems with more outcomes than this (2^b faces in the worst case).
    pub max_outcomes: usize,
    /// Skip face sizes that cannot contribute generators given `dim A`.
    pub dimension_pruning: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            max_outcomes: DEFAULT_MAX_OUTCOMES,
            dimension_pruning: true,
        }
    }
}

impl EnumerationOptions {
    pub fn with_max_outcomes(max_outcomes: usize) -> Self {
        Self {
            max_outcomes,
            ..Self::default()
        }
    }
}

/// A face of the standard simplex, given by its (0-based, sorted) vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceIndexSet(Vec<usize>);

impl FaceIndexSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::ContractViolation(
                "a face needs at least one vertex".into(),
            ));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Simplex dimension of the face, `|J| - 1`.
    pub fn dimension(&self) -> usize {
        self.0.len() - 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    fn without(&self, position: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(position);
        Self(v)
    }
}

impl fmt::Display for FaceIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

/// Generators of the martingale-measure polytope, each with its support.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratorSet {
    generators: Vec<RationalVector>,
    supports: Vec<FaceIndexSet>,
}

impl GeneratorSet {
    pub fn from_vectors(generators: Vec<RationalVector>) -> Self {
        let supports = generators
            .iter()
            .map(|g| support_of(g).expect("generators sum to one"))
            .collect();
        Self {
            generators,
            supports,
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[RationalVector] {
        &self.generators
    }

    /// `{i : p_i > 0}` for each generator.
    pub fn supports(&self) -> &[FaceIndexSet] {
        &self.supports
    }

    pub fn iter(&self) -> impl Iterator<Item = &RationalVector> + '_ {
        self.generators.iter()
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.generators.iter().any(|g| g.as_slice() == v)
    }

    /// Order-independent view for set comparisons.
    pub fn as_set(&self) -> BTreeSet<RationalVector> {
        self.generators.iter().cloned().collect()
    }

    pub fn same_set(&self, other: &GeneratorSet) -> bool {
        self.len() == other.len() && self.as_set() == other.as_set()
    }

    /// Uniform average of the generators, `None` when there are none.
    pub fn barycenter(&self) -> Option<RationalVector> {
        let first = self.generators.first()?;
        let k = Rational::from_integer(self.len().into());
        let mut acc = vec![Rational::zero(); first.len()];
        for g in &self.generators {
            for (a, x) in acc.iter_mut().zip(g) {
                *a += x;
            }
        }
        Some(acc.into_iter().map(|a| a / &k).collect())
    }

    /// `Σ_j weights_j · p^j`.
    pub fn combine(&self, weights: &[Rational]) -> Result<RationalVector> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "generator weights",
                expected: self.len(),
                found: weights.len(),
            });
        }
        let width = self.generators.first().map_or(0, Vec::len);
        let mut acc = vec![Rational::zero(); width];
        for (g, w) in self.generators.iter().zip(weights) {
            for (a, x) in acc.iter_mut().zip(g) {
                *a += w * x;
            }
        }
        Ok(acc)
    }

    fn push(&mut self, generator: RationalVector, support: FaceIndexSet) {
        self.generators.push(generator);
        self.supports.push(support);
    }
}

fn support_of(v: &[Rational]) -> Result<FaceIndexSet> {
    FaceIndexSet::new(
        v.iter()
            .enumerate()
            .filter(|(_, x)| x.is_positive())
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Solves `{M_J x = c, Σ x = 1}` restricted to the columns of `face`.
fn restricted_solution(sys: &MartingaleSystem, face: &FaceIndexSet) -> Result<SolutionSpace> {
    let columns = sys.matrix.select_columns(face.indices());
    let ones = RationalMatrix::from_rows(face.len(), vec![vec![Rational::one(); face.len()]])?;
    let stacked = columns.vstack(&ones)?;
    let mut rhs = sys.rhs.clone();
    rhs.push(Rational::one());
    solve(&stacked, &rhs)
}

fn embed(face: &FaceIndexSet, local: RationalVector, width: usize) -> RationalVector {
    let mut full = vec![Rational::zero(); width];
    for (&j, x) in face.indices().iter().zip(local) {
        full[j] = x;
    }
    full
}

/// Intersection of `A` with the relative interior of `face`.
///
/// Intended to be called on faces none of whose proper subfaces meet `A`.
/// Under that condition the intersection is empty or a single point, and the
/// point cannot lie on the face boundary; a boundary point is reported as a
/// [`Error::ContractViolation`]. When the restricted system has a positive
/// dimensional solution set, the face cannot be met either (a line through the
/// face would also cross its boundary), so `None` is returned.
pub fn face_intersection(
    sys: &MartingaleSystem,
    face: &FaceIndexSet,
) -> Result<Option<RationalVector>> {
    if let Some(&last) = face.indices().last() {
        if last >= sys.outcomes() {
            return Err(Error::DimensionMismatch {
                context: "face index",
                expected: sys.outcomes(),
                found: last + 1,
            });
        }
    }
    match restricted_solution(sys, face)? {
        SolutionSpace::Inconsistent | SolutionSpace::Affine { .. } => Ok(None),
        SolutionSpace::Unique(x) => {
            if x.iter().any(Signed::is_negative) {
                Ok(None)
            } else if x.iter().any(Zero::is_zero) {
                Err(Error::ContractViolation(format!(
                    "face {face} meets A on its boundary; a subface should have been reported first"
                )))
            } else {
                Ok(Some(embed(face, x, sys.outcomes())))
            }
        }
    }
}

/// Staged face walk: stage `k` looks at every `k`-element index set whose
/// `(k-1)`-element subsets all missed `A` in the previous stage.
///
/// Output order is by face size, then lexicographic in the face indices.
pub fn enumerate_generators(
    sys: &MartingaleSystem,
    opts: &EnumerationOptions,
) -> Result<GeneratorSet> {
    let b = sys.outcomes();
    if b > opts.max_outcomes {
        return Err(Error::LimitExceeded {
            outcomes: b,
            max: opts.max_outcomes,
        });
    }

    let mut found = GeneratorSet::default();
    let dim_a = match solve(&sys.matrix, &sys.rhs)?.dimension() {
        Some(d) => d,
        None => return Ok(found),
    };
    // Faces with at least b + 2 - dim A vertices always meet A on their
    // boundary whenever they meet it at all.
    let stage_limit = if opts.dimension_pruning {
        (b + 1).saturating_sub(dim_a).min(b)
    } else {
        b
    };

    let mut misses: Vec<FaceIndexSet> = Vec::new();
    for k in 1..=stage_limit {
        let candidates: Vec<FaceIndexSet> = if k == 1 {
            (0..b).map(|i| FaceIndexSet(vec![i])).collect()
        } else {
            next_candidates(&misses, b)
        };
        if candidates.is_empty() {
            break;
        }

        let mut stage_misses = Vec::new();
        for face in candidates {
            match face_intersection(sys, &face)? {
                Some(point) => found.push(point, face),
                None => stage_misses.push(face),
            }
        }
        misses = stage_misses;
    }
    Ok(found)
}

/// Extends each `k`-face by a larger index and keeps the result when every
/// facet is among `misses`. `misses` must be sorted lexicographically, which
/// keeps the output sorted too.
fn next_candidates(misses: &[FaceIndexSet], b: usize) -> Vec<FaceIndexSet> {
    let known: BTreeSet<&FaceIndexSet> = misses.iter().collect();
    let mut out = Vec::new();
    for face in misses {
        let last = *face.0.last().expect("faces are nonempty");
        for next in last + 1..b {
            let mut indices = face.0.clone();
            indices.push(next);
            let candidate = FaceIndexSet(indices);
            // dropping the last index gives `face` itself
            let all_facets_miss =
                (0..candidate.len() - 1).all(|pos| known.contains(&candidate.without(pos)));
            if all_facets_miss {
                out.push(candidate);
            }
        }
    }
    out
}

/// Exhaustive oracle: a probability vector is a vertex of the polytope exactly
/// when the system restricted to its support has a unique solution. Checks all
/// `2^b - 1` supports, so keep `b` small.
pub fn brute_force_generators(sys: &MartingaleSystem) -> Result<GeneratorSet> {
    exhaustive_search(sys, sys.outcomes(), false)
}

/// Supports of size at most `max_support`, smallest first; stops at the first
/// hit when `first_only`.
fn exhaustive_search(
    sys: &MartingaleSystem,
    max_support: usize,
    first_only: bool,
) -> Result<GeneratorSet> {
    let b = sys.outcomes();
    let mut found = GeneratorSet::default();
    for size in 1..=max_support.min(b) {
        let mut face: Vec<usize> = (0..size).collect();
        loop {
            let f = FaceIndexSet(face.clone());
            if let SolutionSpace::Unique(x) = restricted_solution(sys, &f)? {
                if x.iter().all(Signed::is_positive) {
                    let point = embed(&f, x, b);
                    if !found.contains(&point) {
                        found.push(point, f);
                        if first_only {
                            return Ok(found);
                        }
                    }
                }
            }
            if !next_combination(&mut face, b) {
                break;
            }
        }
    }
    Ok(found)
}

/// Advances `c` to the next `|c|`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// Weights `λ ≥ 0, Σλ = 1` with `Σ λ_i points_i = target`, if any exist.
///
/// This is itself a simplex-meets-affine-space question, answered with the
/// exhaustive search. By Carathéodory only supports up to the rank of the
/// augmented point matrix need to be tried.
pub fn convex_weights(
    points: &[RationalVector],
    target: &[Rational],
) -> Result<Option<RationalVector>> {
    if points.is_empty() {
        return Ok(None);
    }
    let columns = points.len();
    let rows: Vec<RationalVector> = (0..target.len())
        .map(|i| points.iter().map(|p| p[i].clone()).collect())
        .collect();
    let matrix = RationalMatrix::from_rows(columns, rows)?;
    let sys = MartingaleSystem::new(matrix, target.to_vec())?;
    let rank = augmented_matrix(&sys).rank();
    Ok(exhaustive_search(&sys, rank, true)?
        .generators()
        .first()
        .cloned())
}
