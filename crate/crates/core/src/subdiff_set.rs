//! Finite representation of limiting subdifferentials.
//!
//! A [`SubdiffSet`] denotes a union of terms, each term being the Minkowski
//! sum of a polytope (given by its vertex list) and a scaled Euclidean unit
//! ball. The union may be nonconvex, which is what limiting subdifferentials
//! of min-type functions need. The `exactness` tag records whether the set is
//! known to equal the limiting subdifferential or is only a calculated
//! superset of it.

use serde::{Deserialize, Serialize};

/// Whether a computed set equals the limiting subdifferential or only
/// contains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    Superset,
}

impl Exactness {
    pub fn combine(self, other: Exactness) -> Exactness {
        if self == Exactness::Exact && other == Exactness::Exact {
            Exactness::Exact
        } else {
            Exactness::Superset
        }
    }

    pub fn is_exact(self) -> bool {
        self == Exactness::Exact
    }
}

/// One term of the union: `conv(vertices) + ball_radius * B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffTerm {
    pub vertices: Vec<Vec<f64>>,
    pub ball_radius: f64,
}

impl SubdiffTerm {
    pub fn singleton(v: Vec<f64>) -> Self {
        SubdiffTerm {
            vertices: vec![v],
            ball_radius: 0.0,
        }
    }

    fn scale(&self, k: f64) -> SubdiffTerm {
        debug_assert!(k >= 0.0);
        SubdiffTerm {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|c| k * c).collect())
                .collect(),
            ball_radius: k * self.ball_radius,
        }
    }

    /// Minkowski sum of two polytope-plus-ball terms: pairwise vertex sums
    /// and added radii.
    fn minkowski(&self, other: &SubdiffTerm) -> SubdiffTerm {
        let mut vertices = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                vertices.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        SubdiffTerm {
            vertices,
            ball_radius: self.ball_radius + other.ball_radius,
        }
    }

    fn dedup_vertices(&mut self) {
        self.vertices.sort_by(|a, b| {
            a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
        });
        self.vertices.dedup_by(|a, b| {
            a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= 1e-12)
        });
    }
}

/// Cap on the number of union terms; beyond it the set is collapsed into a
/// single convex enclosure and tagged as a superset.
pub const MAX_TERMS: usize = 256;

/// A finite union of polytope-plus-ball terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffSet {
    pub terms: Vec<SubdiffTerm>,
    pub exactness: Exactness,
}

impl SubdiffSet {
    pub fn singleton(v: Vec<f64>) -> Self {
        SubdiffSet {
            terms: vec![SubdiffTerm::singleton(v)],
            exactness: Exactness::Exact,
        }
    }

    pub fn zero(n: usize) -> Self {
        SubdiffSet::singleton(vec![0.0; n])
    }

    /// True when the set is a single zero-radius point, i.e. the function is
    /// differentiable at the query point as far as the calculus can tell.
    pub fn is_singleton(&self) -> bool {
        self.terms.len() == 1
            && self.terms[0].vertices.len() == 1
            && self.terms[0].ball_radius == 0.0
    }

    /// The single gradient when [`is_singleton`](Self::is_singleton) holds.
    pub fn singleton_vertex(&self) -> Option<&[f64]> {
        if self.is_singleton() {
            Some(&self.terms[0].vertices[0])
        } else {
            None
        }
    }

    /// Scale by a nonnegative factor (an exact set operation).
    pub fn scale(&self, k: f64) -> SubdiffSet {
        SubdiffSet {
            terms: self.terms.iter().map(|t| t.scale(k)).collect(),
            exactness: self.exactness,
        }
    }

    /// Minkowski sum: the term lists multiply. `exact` says whether the sum
    /// rule applied here is exact; the result is additionally a superset when
    /// either operand already was.
    pub fn minkowski(&self, other: &SubdiffSet, exact: bool) -> SubdiffSet {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.minkowski(b));
            }
        }
        let mut exactness = self.exactness.combine(other.exactness);
        if !exact {
            exactness = Exactness::Superset;
        }
        let mut out = SubdiffSet { terms, exactness };
        out.collapse_if_oversized();
        out
    }

    /// Replace an oversized union by the convex enclosure of all its terms.
    fn collapse_if_oversized(&mut self) {
        if self.terms.len() <= MAX_TERMS {
            return;
        }
        let mut vertices = Vec::new();
        let mut radius: f64 = 0.0;
        for t in &self.terms {
            vertices.extend(t.vertices.iter().cloned());
            radius = radius.max(t.ball_radius);
        }
        self.terms = vec![SubdiffTerm {
            vertices,
            ball_radius: radius,
        }];
        self.exactness = Exactness::Superset;
    }

    /// Canonicalize: dedup vertices within terms, sort terms for determinism.
    pub fn normalize(&mut self) {
        for t in &mut self.terms {
            t.dedup_vertices();
        }
        self.terms.sort_by(|a, b| {
            a.vertices
                .partial_cmp(&b.vertices)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        self.terms.dedup_by(|a, b| {
            a.ball_radius == b.ball_radius
                && a.vertices.len() == b.vertices.len()
                && a.vertices.iter().zip(&b.vertices).all(|(u, v)| {
                    u.iter().zip(v.iter()).all(|(x, y)| (x - y).abs() <= 1e-12)
                })
        });
        debug_assert!(self.terms.iter().all(|t| !t.vertices.is_empty()));
        debug_assert!(self.terms.iter().all(|t| t.ball_radius >= 0.0));
    }
}
