//! Graph structures over `p` vertices and the free-coordinate index sets they induce.
//!
//! Vertices are 0-based in the API; the text edge-list format (handled by the
//! command-line crate) is 1-based.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Largest number of vertex pairs for which exhaustive enumeration is allowed.
pub const ENUMERATION_LIMIT: usize = 30;

/// Number of unordered vertex pairs, `p(p-1)/2`.
#[inline]
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// An undirected edge stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    i: usize,
    j: usize,
}

impl Edge {
    /// Normalizes the endpoint order; self-loops are rejected.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => Ok(Self { i: a, j: b }),
            core::cmp::Ordering::Greater => Ok(Self { i: b, j: a }),
            core::cmp::Ordering::Equal => Err(Error::InvalidEdge(a, b)),
        }
    }

    #[inline]
    pub fn i(self) -> usize {
        self.i
    }

    #[inline]
    pub fn j(self) -> usize {
        self.j
    }

    /// Position of the pair in lexicographic order over all pairs of `p` vertices.
    #[inline]
    pub fn pair_index(self, p: usize) -> usize {
        self.i * p - self.i * (self.i + 1) / 2 + (self.j - self.i - 1)
    }

    pub fn from_pair_index(index: usize, p: usize) -> Self {
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = p - i - 1;
            if index < start + row {
                return Self {
                    i,
                    j: i + 1 + (index - start),
                };
            }
            start += row;
            i += 1;
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i + 1, self.j + 1)
    }
}

/// Edge-inclusion indicator vector over all `p(p-1)/2` pairs.
///
/// Ordering (and therefore any map keyed by graphs) is by vertex count and then
/// by the packed indicator bits, which is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphStructure {
    p: usize,
    bits: Vec<u64>,
    count: usize,
}

impl GraphStructure {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            bits: vec![0; pair_count(p).div_ceil(64)],
            count: 0,
        }
    }

    pub fn complete(p: usize) -> Self {
        let mut g = Self::empty(p);
        for k in 0..pair_count(p) {
            g.set_index(k, true);
        }
        g
    }

    pub fn from_edges<I>(p: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(p);
        for (a, b) in edges {
            if a >= p || b >= p {
                return Err(Error::InvalidEdge(a, b));
            }
            g.insert(Edge::new(a, b)?);
        }
        Ok(g)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// `#Γ`.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    fn get_index(&self, k: usize) -> bool {
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    fn set_index(&mut self, k: usize, on: bool) {
        let was = self.get_index(k);
        if on && !was {
            self.bits[k / 64] |= 1 << (k % 64);
            self.count += 1;
        } else if !on && was {
            self.bits[k / 64] &= !(1 << (k % 64));
            self.count -= 1;
        }
    }

    pub fn contains(&self, e: Edge) -> bool {
        e.j < self.p && self.get_index(e.pair_index(self.p))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        Edge::new(a, b).map(|e| self.contains(e)).unwrap_or(false)
    }

    pub fn insert(&mut self, e: Edge) {
        assert!(e.j < self.p, "edge {e} outside {} vertices", self.p);
        self.set_index(e.pair_index(self.p), true);
    }

    pub fn remove(&mut self, e: Edge) {
        assert!(e.j < self.p, "edge {e} outside {} vertices", self.p);
        self.set_index(e.pair_index(self.p), false);
    }

    /// Returns the graph with edge `e` flipped.
    pub fn toggled(&self, e: Edge) -> Self {
        let mut g = self.clone();
        let k = e.pair_index(self.p);
        g.set_index(k, !self.get_index(k));
        g
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..pair_count(self.p))
            .filter(move |&k| self.get_index(k))
            .map(move |k| Edge::from_pair_index(k, self.p))
    }

    /// True iff every edge of `self` is an edge of `sup`.
    pub fn is_submodel_of(&self, sup: &GraphStructure) -> bool {
        self.p == sup.p && self.bits.iter().zip(&sup.bits).all(|(a, b)| a & !b == 0)
    }

    /// Edges of `self` that are not in `other`.
    pub fn without(&self, removed: &[Edge]) -> Self {
        let mut g = self.clone();
        for &e in removed {
            g.remove(e);
        }
        g
    }

    pub fn free_index(&self) -> FreeIndexSet {
        FreeIndexSet::for_graph(self)
    }
}

impl fmt::Display for GraphStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, e) in self.edges().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// `true` iff `sub`'s edge set is contained in `sup`'s (same vertex count).
pub fn is_submodel(sub: &GraphStructure, sup: &GraphStructure) -> bool {
    sub.is_submodel_of(sup)
}

/// The free coordinates of a graph: every diagonal `(i, i)` followed by the edges
/// in lexicographic order. This order fixes the rows of the restricted Hessian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeIndexSet {
    p: usize,
    entries: Vec<(usize, usize)>,
}

impl FreeIndexSet {
    pub fn for_graph(g: &GraphStructure) -> Self {
        let mut entries: Vec<(usize, usize)> = (0..g.p()).map(|i| (i, i)).collect();
        entries.extend(g.edges().map(|e| (e.i(), e.j())));
        Self { p: g.p(), entries }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Free entries of `m`, in index order.
    pub fn pack(&self, m: &SymMatrix) -> Vec<f64> {
        self.entries.iter().map(|&(i, j)| m.get(i, j)).collect()
    }

    /// Symmetric matrix holding `values` on the free entries and zero elsewhere.
    pub fn unpack(&self, values: &[f64]) -> SymMatrix {
        assert_eq!(values.len(), self.entries.len());
        let mut m = SymMatrix::zeros(self.p);
        for (&(i, j), &v) in self.entries.iter().zip(values) {
            m.set(i, j, v);
        }
        m
    }

    /// `Σ_k values[k] · E_(i_k, j_k)` added onto `base`.
    pub fn displace(&self, base: &SymMatrix, values: &[f64]) -> SymMatrix {
        let mut m = base.clone();
        for (&(i, j), &v) in self.entries.iter().zip(values) {
            m.add_to(i, j, v);
        }
        m
    }
}

/// The matrices `E_(i,j)`: ones at `(i, j)` and `(j, i)`, a single one for diagonals.
pub fn embedding_basis(idx: &FreeIndexSet) -> Vec<SymMatrix> {
    idx.entries()
        .iter()
        .map(|&(i, j)| {
            let mut m = SymMatrix::zeros(idx.p());
            m.set(i, j, 1.0);
            m
        })
        .collect()
}

/// Every graph with at most `max_edges` edges: by edge count, then lexicographically.
pub fn enumerate_all(p: usize, max_edges: usize) -> Result<GraphEnumeration> {
    let pairs = pair_count(p);
    if pairs > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            pairs,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(GraphEnumeration {
        p,
        pairs,
        max_edges: max_edges.min(pairs),
        k: 0,
        combo: Some(Vec::new()),
    })
}

#[derive(Debug, Clone)]
pub struct GraphEnumeration {
    p: usize,
    pairs: usize,
    max_edges: usize,
    k: usize,
    combo: Option<Vec<usize>>,
}

impl GraphEnumeration {
    fn advance(&mut self) {
        let Some(c) = self.combo.as_mut() else {
            return;
        };
        let k = c.len();
        // next k-combination of 0..pairs in lexicographic order
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if c[pos] < self.pairs - k + pos {
                c[pos] += 1;
                for t in (pos + 1)..k {
                    c[t] = c[t - 1] + 1;
                }
                return;
            }
        }
        self.k += 1;
        self.combo = (self.k <= self.max_edges).then(|| (0..self.k).collect());
    }
}

impl Iterator for GraphEnumeration {
    type Item = GraphStructure;

    fn next(&mut self) -> Option<GraphStructure> {
        let c = self.combo.as_ref()?;
        let mut g = GraphStructure::empty(self.p);
        for &k in c {
            g.set_index(k, true);
        }
        self.advance();
        Some(g)
    }
}
