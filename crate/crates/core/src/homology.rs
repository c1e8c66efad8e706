//! Exact simplicial homology over the integers.
//!
//! The pipeline is: enumerate faces of a complex grouped by dimension,
//! assemble sparse boundary matrices with the alternating-sign convention
//! induced by the global vertex order, and diagonalize them by integer
//! Smith normal form. Reduced Betti numbers and torsion coefficients fall
//! out of ranks and invariant factors; an augmentation map accounts for
//! degree zero. Everything is integer or rational arithmetic, never
//! floating point, and every boundary composite is checked to vanish at
//! run time, not just under test.
//!
//! Matrices start in `i128` and escalate to arbitrary precision only if
//! an intermediate value overflows, which keeps the common case fast
//! without compromising exactness.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poset::{ElementSet, FinitePoset};

/// A finite simplicial complex stored by its facets.
///
/// Vertices are indices `0..num_vertices`; unused indices are permitted
/// (the ambient numbering of a poset may leave gaps). No facet contains
/// another and the facet list is sorted, so equality of complexes is
/// structural equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimplicialComplex {
    num_vertices: usize,
    facets: Vec<ElementSet>,
}

impl SimplicialComplex {
    /// Normalizing constructor: deduplicates, drops faces contained in
    /// other faces, and sorts. Empty facet lists are allowed and denote
    /// the empty complex; an empty *facet* is rejected.
    pub fn from_facets(num_vertices: usize, facets: Vec<ElementSet>) -> Result<Self> {
        let mut facets = facets;
        for f in &facets {
            if f.is_empty() {
                return Err(Error::invalid("empty facet"));
            }
            if f.members().last().copied().unwrap_or(0) >= num_vertices {
                return Err(Error::invalid(format!(
                    "facet {f} outside vertex range 0..{num_vertices}"
                )));
            }
        }
        facets.sort_unstable();
        facets.dedup();
        // Keep only inclusion-maximal faces. Quadratic, but constructor
        // inputs are facet lists, which stay small even when the face
        // enumeration underneath them does not.
        let keep: Vec<bool> = facets
            .iter()
            .map(|f| {
                !facets
                    .iter()
                    .any(|g| g.len() > f.len() && f.is_subset_of(g))
            })
            .collect();
        let facets = facets
            .into_iter()
            .zip(keep)
            .filter_map(|(f, k)| k.then_some(f))
            .collect();
        Ok(SimplicialComplex {
            num_vertices,
            facets,
        })
    }

    /// Constructor for callers that guarantee pairwise incomparability,
    /// such as maximal chains of a poset. Skips the quadratic filter.
    pub(crate) fn from_maximal_facets(num_vertices: usize, mut facets: Vec<ElementSet>) -> Self {
        facets.sort_unstable();
        facets.dedup();
        debug_assert!(
            facets.len() > 500
                || facets.iter().all(|f| !facets
                    .iter()
                    .any(|g| g.len() > f.len() && f.is_subset_of(g))),
            "facets claimed maximal but are not"
        );
        SimplicialComplex {
            num_vertices,
            facets,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn facets(&self) -> &[ElementSet] {
        &self.facets
    }

    /// Dimension of the complex, `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.facets.iter().map(|f| f.len() - 1).max()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn contains_face(&self, s: &ElementSet) -> bool {
        !s.is_empty() && self.facets.iter().any(|f| s.is_subset_of(f))
    }

    /// All faces, grouped by dimension and sorted lexicographically by
    /// vertex list inside each group. The indexing is deterministic and
    /// is the one used by [`boundary_matrix`].
    ///
    /// Cost is proportional to the total number of faces, i.e. up to
    /// `2^f - 1` per facet with `f` vertices; callers gate big inputs.
    pub fn faces_by_dimension(&self) -> Vec<Vec<ElementSet>> {
        FaceTable::build(self).into_sets()
    }

    /// Total face count without materializing faces per se (it still
    /// enumerates, so the same cost caveat applies).
    pub fn euler_characteristic(&self) -> i64 {
        let faces = FaceTable::build(self);
        let mut chi = 0i64;
        for k in 0..faces.num_dims() {
            let c = faces.count(k) as i64;
            chi += if k % 2 == 0 { c } else { -c };
        }
        chi
    }

    /// Parses the facet file format: one facet per line as strictly
    /// ascending vertex indices, `#` comments and blank lines ignored.
    /// The vertex count is inferred as `max index + 1`.
    pub fn parse_facet_file(text: &str) -> Result<Self> {
        let mut facets = Vec::new();
        let mut max_vertex = None::<usize>;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut vs = Vec::new();
            for tok in line.split_whitespace() {
                let v: usize = tok.parse().map_err(|_| {
                    Error::invalid(format!("line {}: bad vertex {tok:?}", lineno + 1))
                })?;
                if let Some(&last) = vs.last() {
                    if v <= last {
                        return Err(Error::invalid(format!(
                            "line {}: vertices not strictly ascending",
                            lineno + 1
                        )));
                    }
                }
                vs.push(v);
            }
            max_vertex = max_vertex.max(vs.last().copied());
            facets.push(ElementSet::new(vs));
        }
        let num_vertices = max_vertex.map_or(0, |m| m + 1);
        SimplicialComplex::from_facets(num_vertices, facets)
    }

    pub fn to_facet_file(&self) -> String {
        let mut out = String::new();
        for f in &self.facets {
            let line: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Face storage: bit masks when the vertex universe fits in a `u128`,
/// explicit sorted vertex lists otherwise. Both orderings agree with
/// lexicographic order on vertex lists.
enum FaceTable {
    Masks { dims: Vec<Vec<u128>> },
    Sets { dims: Vec<Vec<ElementSet>> },
}

/// Lexicographic order on the vertex lists encoded by two masks: the one
/// holding the lowest differing vertex comes first.
fn lex_mask_cmp(a: &u128, b: &u128) -> std::cmp::Ordering {
    let d = a ^ b;
    if d == 0 {
        return std::cmp::Ordering::Equal;
    }
    let low = d & d.wrapping_neg();
    if a & low != 0 {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

impl FaceTable {
    fn build(k: &SimplicialComplex) -> FaceTable {
        if k.num_vertices <= 128 {
            let mut all: Vec<u128> = Vec::new();
            for f in &k.facets {
                let mut mask = 0u128;
                for v in f.iter() {
                    mask |= 1u128 << v;
                }
                // Standard submask walk: visits every non-empty subset.
                let mut sub = mask;
                loop {
                    all.push(sub);
                    sub = (sub - 1) & mask;
                    if sub == 0 {
                        break;
                    }
                }
            }
            all.sort_unstable_by(lex_mask_cmp);
            all.dedup();
            let top = all
                .iter()
                .map(|m| m.count_ones() as usize)
                .max()
                .unwrap_or(0);
            let mut dims: Vec<Vec<u128>> = vec![Vec::new(); top];
            for m in all {
                dims[m.count_ones() as usize - 1].push(m);
            }
            FaceTable::Masks { dims }
        } else {
            let mut all: Vec<ElementSet> = Vec::new();
            for f in &k.facets {
                let vs = f.members();
                // Enumerate subsets by index mask; facets beyond 64
                // vertices would need the mask path, which covers every
                // universe this branch is reachable from.
                assert!(vs.len() < 64, "facet too large to enumerate");
                for bits in 1u64..(1 << vs.len()) {
                    let face: Vec<usize> = (0..vs.len())
                        .filter(|i| bits >> i & 1 == 1)
                        .map(|i| vs[i])
                        .collect();
                    all.push(ElementSet::new(face));
                }
            }
            all.sort_unstable();
            all.dedup();
            let top = all.iter().map(ElementSet::len).max().unwrap_or(0);
            let mut dims: Vec<Vec<ElementSet>> = vec![Vec::new(); top];
            for s in all {
                let k = s.len() - 1;
                dims[k].push(s);
            }
            FaceTable::Sets { dims }
        }
    }

    fn num_dims(&self) -> usize {
        match self {
            FaceTable::Masks { dims, .. } => dims.len(),
            FaceTable::Sets { dims } => dims.len(),
        }
    }

    fn count(&self, k: usize) -> usize {
        match self {
            FaceTable::Masks { dims, .. } => dims.get(k).map_or(0, Vec::len),
            FaceTable::Sets { dims } => dims.get(k).map_or(0, Vec::len),
        }
    }

    fn into_sets(self) -> Vec<Vec<ElementSet>> {
        match self {
            FaceTable::Sets { dims } => dims,
            FaceTable::Masks { dims, .. } => dims
                .into_iter()
                .map(|bucket| {
                    bucket
                        .into_iter()
                        .map(|m| ElementSet::new((0..128).filter(|v| m >> v & 1 == 1).collect()))
                        .collect()
                })
                .collect(),
        }
    }

    /// Boundary matrix from `k`-faces to `(k-1)`-faces, `k >= 1`.
    fn boundary(&self, k: usize) -> IntegerMatrix {
        assert!(
            k >= 1 && k < self.num_dims(),
            "boundary degree out of range"
        );
        let rows = self.count(k - 1);
        let mut cols = Vec::with_capacity(self.count(k));
        match self {
            FaceTable::Masks { dims, .. } => {
                let lower = &dims[k - 1];
                for &mask in &dims[k] {
                    let mut col: Vec<(u32, BigInt)> = Vec::with_capacity(k + 1);
                    let mut rest = mask;
                    let mut pos = 0u32;
                    while rest != 0 {
                        let bit = rest & rest.wrapping_neg();
                        let sub = mask & !bit;
                        let row = lower
                            .binary_search_by(|probe| lex_mask_cmp(probe, &sub))
                            .expect("subface of a face is a face");
                        let sign = if pos % 2 == 0 {
                            BigInt::one()
                        } else {
                            -BigInt::one()
                        };
                        col.push((row as u32, sign));
                        rest &= !bit;
                        pos += 1;
                    }
                    col.sort_unstable_by_key(|e| e.0);
                    cols.push(col);
                }
            }
            FaceTable::Sets { dims } => {
                let lower = &dims[k - 1];
                for face in &dims[k] {
                    let vs = face.members();
                    let mut col: Vec<(u32, BigInt)> = Vec::with_capacity(vs.len());
                    for p in 0..vs.len() {
                        let sub: Vec<usize> = vs
                            .iter()
                            .enumerate()
                            .filter_map(|(i, &v)| (i != p).then_some(v))
                            .collect();
                        let sub = ElementSet::new(sub);
                        let row = lower
                            .binary_search(&sub)
                            .expect("subface of a face is a face");
                        let sign = if p % 2 == 0 {
                            BigInt::one()
                        } else {
                            -BigInt::one()
                        };
                        col.push((row as u32, sign));
                    }
                    col.sort_unstable_by_key(|e| e.0);
                    cols.push(col);
                }
            }
        }
        IntegerMatrix { rows, cols }
    }
}

/// A sparse integer matrix stored by columns; entries are exact
/// arbitrary-precision integers, kept sorted by row and non-zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    rows: usize,
    cols: Vec<Vec<(u32, BigInt)>>,
}

impl IntegerMatrix {
    pub fn zero(rows: usize, num_cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols: vec![Vec::new(); num_cols],
        }
    }

    /// Test- and example-friendly constructor from dense rows.
    pub fn from_dense(entries: &[Vec<i64>]) -> Self {
        let rows = entries.len();
        let num_cols = entries.first().map_or(0, Vec::len);
        let mut cols = vec![Vec::new(); num_cols];
        for (i, row) in entries.iter().enumerate() {
            assert_eq!(row.len(), num_cols, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    cols[j].push((i as u32, BigInt::from(v)));
                }
            }
        }
        IntegerMatrix { rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, BigInt)] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// Matrix product, used for composite checks; panics on shape mismatch.
    pub fn multiply(&self, rhs: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.num_cols(), rhs.rows(), "inner dimensions differ");
        let mut cols = Vec::with_capacity(rhs.num_cols());
        for j in 0..rhs.num_cols() {
            let mut acc: BTreeMap<u32, BigInt> = BTreeMap::new();
            for (mid, w) in rhs.column(j) {
                for (r, v) in self.column(*mid as usize) {
                    let slot = acc.entry(*r).or_insert_with(BigInt::zero);
                    *slot += v * w;
                }
            }
            cols.push(
                acc.into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect::<Vec<_>>(),
            );
        }
        IntegerMatrix {
            rows: self.rows,
            cols,
        }
    }
}

/// Boundary matrix of a complex in one degree, with rows and columns
/// indexed as in [`SimplicialComplex::faces_by_dimension`].
pub fn boundary_matrix(k: &SimplicialComplex, degree: usize) -> Result<IntegerMatrix> {
    let table = FaceTable::build(k);
    if degree < 1 || degree >= table.num_dims() {
        return Err(Error::invalid(format!(
            "boundary degree {degree} outside 1..={}",
            table.num_dims().saturating_sub(1)
        )));
    }
    Ok(table.boundary(degree))
}

/// Result of a Smith normal form computation: the rank and the full list
/// of invariant factors `d_1 | d_2 | ... | d_rank`, each positive, ones
/// included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithNormalForm {
    pub rank: usize,
    pub factors: Vec<BigInt>,
}

// ---- scalar abstraction for the elimination ------------------------------

/// Integer arithmetic used inside the elimination. Operations return
/// `None` when an intermediate would overflow, which triggers escalation
/// to arbitrary precision; the `BigInt` instance never overflows.
trait SnfScalar: Clone + Ord + fmt::Debug {
    fn from_bigint(v: &BigInt) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
    fn is_zero_val(&self) -> bool;
    fn is_negative_val(&self) -> bool;
    fn is_unit(&self) -> bool;
    fn abs_val(&self) -> Option<Self>;
    fn neg_val(&self) -> Option<Self>;
    fn mul_val(&self, o: &Self) -> Option<Self>;
    fn sub_val(&self, o: &Self) -> Option<Self>;
    /// Floor division by a strictly positive divisor.
    fn div_floor_pos(&self, d: &Self) -> Self;
}

impl SnfScalar for i128 {
    fn from_bigint(v: &BigInt) -> Option<Self> {
        let x = v.to_i128()?;
        (x != i128::MIN).then_some(x)
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn is_zero_val(&self) -> bool {
        *self == 0
    }
    fn is_negative_val(&self) -> bool {
        *self < 0
    }
    fn is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
    fn abs_val(&self) -> Option<Self> {
        self.checked_abs()
    }
    fn neg_val(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn mul_val(&self, o: &Self) -> Option<Self> {
        let v = self.checked_mul(*o)?;
        (v != i128::MIN).then_some(v)
    }
    fn sub_val(&self, o: &Self) -> Option<Self> {
        let v = self.checked_sub(*o)?;
        (v != i128::MIN).then_some(v)
    }
    fn div_floor_pos(&self, d: &Self) -> Self {
        self.div_euclid(*d)
    }
}

impl SnfScalar for BigInt {
    fn from_bigint(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
    fn is_zero_val(&self) -> bool {
        self.is_zero()
    }
    fn is_negative_val(&self) -> bool {
        self.is_negative()
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
    fn abs_val(&self) -> Option<Self> {
        Some(self.abs())
    }
    fn neg_val(&self) -> Option<Self> {
        Some(-self)
    }
    fn mul_val(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn sub_val(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn div_floor_pos(&self, d: &Self) -> Self {
        self.div_floor(d)
    }
}

struct Overflow;

/// Row-major sparse elimination state.
struct Working<T> {
    rows: Vec<Vec<(u32, T)>>,
    col_rows: Vec<BTreeSet<u32>>,
    /// Lazy priority queue of candidate unit pivots, keyed by Markowitz
    /// score. Entries may be stale; they are revalidated on pop.
    unit_heap: BinaryHeap<Reverse<(u64, u32, u32)>>,
}

impl<T: SnfScalar> Working<T> {
    fn from_matrix(m: &IntegerMatrix) -> std::result::Result<Self, Overflow> {
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); m.rows()];
        let mut col_rows = vec![BTreeSet::new(); m.num_cols()];
        for j in 0..m.num_cols() {
            for (r, v) in m.column(j) {
                let t = T::from_bigint(v).ok_or(Overflow)?;
                if !t.is_zero_val() {
                    rows[*r as usize].push((j as u32, t));
                    col_rows[j].insert(*r);
                }
            }
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|e| e.0);
        }
        let mut w = Working {
            rows,
            col_rows,
            unit_heap: BinaryHeap::new(),
        };
        for r in 0..w.rows.len() {
            for k in 0..w.rows[r].len() {
                let (c, ref v) = w.rows[r][k];
                if v.is_unit() {
                    let s = w.score(r as u32, c);
                    w.unit_heap.push(Reverse((s, r as u32, c)));
                }
            }
        }
        Ok(w)
    }

    fn score(&self, r: u32, c: u32) -> u64 {
        let rn = self.rows[r as usize].len().saturating_sub(1) as u64;
        let cn = self.col_rows[c as usize].len().saturating_sub(1) as u64;
        rn * cn
    }

    fn get(&self, r: u32, c: u32) -> Option<&T> {
        let row = &self.rows[r as usize];
        row.binary_search_by_key(&c, |e| e.0)
            .ok()
            .map(|k| &row[k].1)
    }

    /// Writes `value` at `(r, c)`, maintaining the column index and the
    /// unit queue. A zero value removes the entry.
    fn set(&mut self, r: u32, c: u32, value: Option<T>) {
        let row = &mut self.rows[r as usize];
        match row.binary_search_by_key(&c, |e| e.0) {
            Ok(k) => match value {
                Some(v) if !v.is_zero_val() => {
                    let unit = v.is_unit();
                    row[k].1 = v;
                    if unit {
                        let s = self.score(r, c);
                        self.unit_heap.push(Reverse((s, r, c)));
                    }
                }
                _ => {
                    row.remove(k);
                    self.col_rows[c as usize].remove(&r);
                }
            },
            Err(k) => {
                if let Some(v) = value {
                    if !v.is_zero_val() {
                        let unit = v.is_unit();
                        row.insert(k, (c, v));
                        self.col_rows[c as usize].insert(r);
                        if unit {
                            let s = self.score(r, c);
                            self.unit_heap.push(Reverse((s, r, c)));
                        }
                    }
                }
            }
        }
    }

    /// `row[dst] -= q * row[src]`; unimodular for any integer `q`.
    fn row_axpy(&mut self, dst: u32, src: u32, q: &T) -> std::result::Result<(), Overflow> {
        if q.is_zero_val() {
            return Ok(());
        }
        let src_row = std::mem::take(&mut self.rows[src as usize]);
        let dst_row = std::mem::take(&mut self.rows[dst as usize]);
        let mut merged: Vec<(u32, T)> = Vec::with_capacity(dst_row.len() + src_row.len());
        let (mut i, mut j) = (0, 0);
        let mut outcome: std::result::Result<(), Overflow> = Ok(());
        while i < dst_row.len() || j < src_row.len() {
            let take_dst = j == src_row.len() || (i < dst_row.len() && dst_row[i].0 < src_row[j].0);
            let take_src = i == dst_row.len() || (j < src_row.len() && src_row[j].0 < dst_row[i].0);
            if take_dst {
                merged.push(dst_row[i].clone());
                i += 1;
            } else if take_src {
                let (c, ref b) = src_row[j];
                let delta = match q.mul_val(b).and_then(|p| p.neg_val()) {
                    Some(d) => d,
                    None => {
                        outcome = Err(Overflow);
                        break;
                    }
                };
                if !delta.is_zero_val() {
                    merged.push((c, delta));
                }
                j += 1;
            } else {
                let (c, ref a) = dst_row[i];
                let (_, ref b) = src_row[j];
                let v = match q.mul_val(b).and_then(|p| a.sub_val(&p)) {
                    Some(v) => v,
                    None => {
                        outcome = Err(Overflow);
                        break;
                    }
                };
                if !v.is_zero_val() {
                    merged.push((c, v));
                }
                i += 1;
                j += 1;
            }
        }
        self.rows[src as usize] = src_row;
        if outcome.is_err() {
            // Restore so the caller can rebuild from scratch in BigInt.
            self.rows[dst as usize] = dst_row;
            return outcome;
        }
        // Update the column index and unit queue against the old row.
        let mut oi = 0;
        for &(c, ref v) in &merged {
            while oi < dst_row.len() && dst_row[oi].0 < c {
                self.col_rows[dst_row[oi].0 as usize].remove(&dst);
                oi += 1;
            }
            let existed = oi < dst_row.len() && dst_row[oi].0 == c;
            if existed {
                oi += 1;
            } else {
                self.col_rows[c as usize].insert(dst);
            }
            if v.is_unit() {
                self.unit_heap.push(Reverse((0, dst, c)));
            }
        }
        while oi < dst_row.len() {
            self.col_rows[dst_row[oi].0 as usize].remove(&dst);
            oi += 1;
        }
        self.rows[dst as usize] = merged;
        Ok(())
    }

    fn negate_row(&mut self, r: u32) -> std::result::Result<(), Overflow> {
        let mut row = std::mem::take(&mut self.rows[r as usize]);
        for e in &mut row {
            match e.1.neg_val() {
                Some(v) => e.1 = v,
                None => {
                    self.rows[r as usize] = row;
                    return Err(Overflow);
                }
            }
        }
        self.rows[r as usize] = row;
        Ok(())
    }

    /// Removes a fully processed pivot at `(r, c)`: the column holds only
    /// this entry, and clearing the rest of the row is a sequence of
    /// column operations that touch no other row.
    fn retire(&mut self, r: u32, c: u32) {
        debug_assert_eq!(self.col_rows[c as usize].len(), 1);
        let row = std::mem::take(&mut self.rows[r as usize]);
        for (cc, _) in row {
            self.col_rows[cc as usize].remove(&r);
        }
        let _ = c;
    }

    /// Eliminates around the pivot until its row and column are clean,
    /// then retires it. Returns the invariant-factor contribution.
    fn smith_local(&mut self, mut r: u32, mut c: u32) -> std::result::Result<T, Overflow> {
        'outer: loop {
            if self.get(r, c).expect("pivot vanished").is_negative_val() {
                self.negate_row(r)?;
            }
            let d = self.get(r, c).expect("pivot vanished").clone();
            debug_assert!(!d.is_negative_val() && !d.is_zero_val());

            // Clean the column with row operations.
            let others: Vec<u32> = self.col_rows[c as usize]
                .iter()
                .copied()
                .filter(|&x| x != r)
                .collect();
            for rr in others {
                let a = self.get(rr, c).expect("column index out of sync").clone();
                let q = a.div_floor_pos(&d);
                self.row_axpy(rr, r, &q)?;
                if self.get(rr, c).is_some() {
                    // Non-zero remainder: strictly smaller pivot found.
                    r = rr;
                    continue 'outer;
                }
            }

            // Clean the row with column operations; the column is now a
            // singleton, so these touch row `r` only.
            let row_rest: Vec<(u32, T)> = self.rows[r as usize]
                .iter()
                .filter(|e| e.0 != c)
                .cloned()
                .collect();
            for (cc, a) in row_rest {
                let q = a.div_floor_pos(&d);
                let rem = match q.mul_val(&d).and_then(|p| a.sub_val(&p)) {
                    Some(v) => v,
                    None => return Err(Overflow),
                };
                let rem_zero = rem.is_zero_val();
                self.set(r, cc, Some(rem));
                if !rem_zero {
                    c = cc;
                    continue 'outer;
                }
            }

            self.retire(r, c);
            return Ok(d);
        }
    }

    /// Pops a valid unit pivot, if any remain.
    fn pop_unit(&mut self) -> Option<(u32, u32)> {
        while let Some(Reverse((s, r, c))) = self.unit_heap.pop() {
            match self.get(r, c) {
                Some(v) if v.is_unit() => {
                    let now = self.score(r, c);
                    if now <= s {
                        return Some((r, c));
                    }
                    self.unit_heap.push(Reverse((now, r, c)));
                }
                _ => {}
            }
        }
        None
    }

    /// Smallest-magnitude entry with Markowitz tie-break, for the phase
    /// after unit pivots run out.
    fn best_remaining(&self) -> Option<(u32, u32)> {
        let mut best: Option<(T, u64, u32, u32)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                let a = v.abs_val().expect("abs fits after prior checks");
                let s = self.score(r as u32, *c);
                let candidate = (a, s, r as u32, *c);
                if best.as_ref().is_none_or(|b| candidate < *b) {
                    best = Some(candidate);
                }
            }
        }
        best.map(|(_, _, r, c)| (r, c))
    }

    fn run(&mut self) -> std::result::Result<Vec<T>, Overflow> {
        let mut diag = Vec::new();
        while let Some((r, c)) = self.pop_unit() {
            diag.push(self.smith_local(r, c)?);
        }
        while let Some((r, c)) = self.best_remaining() {
            diag.push(self.smith_local(r, c)?);
        }
        Ok(diag)
    }
}

/// Rearranges a diagonal produced by unimodular elimination into the
/// canonical divisibility chain. Any diagonalization of a matrix has the
/// same invariant factors, recoverable by repeated gcd/lcm pairing.
fn divisibility_chain(diag: Vec<BigInt>) -> Vec<BigInt> {
    let mut f: Vec<BigInt> = diag.into_iter().map(|d| d.abs()).collect();
    f.sort();
    loop {
        let mut changed = false;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                if !(&f[j] % &f[i]).is_zero() {
                    let g = f[i].gcd(&f[j]);
                    let l = &f[i] / &g * &f[j];
                    f[i] = g;
                    f[j] = l;
                    changed = true;
                }
            }
        }
        if !changed {
            f.sort();
            return f;
        }
    }
}

/// Smith normal form of a sparse integer matrix.
///
/// Runs in `i128` and restarts in arbitrary precision if any intermediate
/// value overflows, so the result is always exact.
pub fn smith_normal_form(m: &IntegerMatrix) -> SmithNormalForm {
    let diag = match Working::<i128>::from_matrix(m).and_then(|mut w| w.run()) {
        Ok(diag) => diag.into_iter().map(|d| d.to_bigint()).collect::<Vec<_>>(),
        Err(Overflow) => {
            let mut w = Working::<BigInt>::from_matrix(m)
                .unwrap_or_else(|_| unreachable!("BigInt conversion cannot overflow"));
            w.run()
                .unwrap_or_else(|_| unreachable!("BigInt arithmetic cannot overflow"))
        }
    };
    let factors = divisibility_chain(diag);
    SmithNormalForm {
        rank: factors.len(),
        factors,
    }
}

// ---- reduced homology -----------------------------------------------------

/// Reduced integral homology of a complex: Betti numbers and torsion
/// coefficients per degree. The empty complex is flagged explicitly; its
/// only non-trivial reduced group sits in degree -1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyResult {
    empty_complex: bool,
    betti: Vec<usize>,
    torsion: Vec<Vec<BigInt>>,
}

impl HomologyResult {
    pub fn is_empty_complex(&self) -> bool {
        self.empty_complex
    }

    /// Top degree carried by the complex, `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        if self.empty_complex {
            None
        } else {
            Some(self.betti.len() - 1)
        }
    }

    /// Reduced Betti number in degree `k` (0 beyond the dimension).
    pub fn rank(&self, k: usize) -> usize {
        self.betti.get(k).copied().unwrap_or(0)
    }

    /// Torsion coefficients of degree `k`, divisibility-chained.
    pub fn torsion(&self, k: usize) -> &[BigInt] {
        self.torsion.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn betti_vector(&self) -> &[usize] {
        &self.betti
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.iter().all(Vec::is_empty)
    }
}

impl fmt::Display for HomologyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty_complex {
            return writeln!(f, "H~-1 rank=1");
        }
        for k in 0..self.betti.len() {
            write!(f, "H~{k} rank={}", self.betti[k])?;
            if !self.torsion[k].is_empty() {
                let ts: Vec<String> = self.torsion[k].iter().map(BigInt::to_string).collect();
                write!(f, " torsion={}", ts.join(","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Reduced integral homology via Smith normal form in every degree.
///
/// The composite of consecutive boundary maps is verified to vanish on
/// every call; this is an internal soundness check, not a test-only one.
pub fn integral_homology(k: &SimplicialComplex) -> HomologyResult {
    let table = FaceTable::build(k);
    if table.num_dims() == 0 {
        return HomologyResult {
            empty_complex: true,
            betti: Vec::new(),
            torsion: Vec::new(),
        };
    }
    let dim = table.num_dims() - 1;
    let boundaries: Vec<IntegerMatrix> = (1..=dim).map(|q| table.boundary(q)).collect();
    for q in 1..dim {
        assert!(
            boundaries[q - 1].multiply(&boundaries[q]).is_zero(),
            "boundary composite in degrees ({q}, {}) is non-zero",
            q + 1
        );
    }
    // Degrees are independent, so the diagonalizations fan out across
    // the thread pool; the collected order is fixed, keeping results
    // identical for every pool size.
    let snfs: Vec<SmithNormalForm> = boundaries.par_iter().map(smith_normal_form).collect();

    // rank of the augmentation: 1 whenever there are vertices at all.
    let mut ranks = vec![0usize; dim + 2];
    ranks[0] = 1;
    for q in 1..=dim {
        ranks[q] = snfs[q - 1].rank;
    }
    let mut betti = vec![0usize; dim + 1];
    let mut torsion = vec![Vec::new(); dim + 1];
    for q in 0..=dim {
        betti[q] = table.count(q) - ranks[q] - ranks[q + 1];
        if q + 1 <= dim {
            torsion[q] = snfs[q]
                .factors
                .iter()
                .filter(|d| !d.is_one())
                .cloned()
                .collect();
        }
    }
    HomologyResult {
        empty_complex: false,
        betti,
        torsion,
    }
}

// ---- mod-p ranks ------------------------------------------------------------

/// Deterministic Miller-Rabin for 64-bit integers.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Rank of an integer matrix over `GF(p)`.
pub fn rank_mod_p(m: &IntegerMatrix, p: u64) -> Result<usize> {
    if !is_prime_u64(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let pb = BigInt::from(p);
    let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); m.rows()];
    let mut col_rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); m.num_cols()];
    for j in 0..m.num_cols() {
        for (r, v) in m.column(j) {
            let red = v.mod_floor(&pb).to_u64().expect("reduced value fits");
            if red != 0 {
                rows[*r as usize].push((j as u32, red));
                col_rows[j].insert(*r);
            }
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };

    let mut heap: BinaryHeap<Reverse<(u64, u32, u32)>> = BinaryHeap::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, _) in row {
            let s = (row.len() as u64 - 1) * (col_rows[*c as usize].len() as u64 - 1);
            heap.push(Reverse((s, r as u32, *c)));
        }
    }
    let get = |rows: &Vec<Vec<(u32, u64)>>, r: u32, c: u32| -> Option<u64> {
        let row = &rows[r as usize];
        row.binary_search_by_key(&c, |e| e.0).ok().map(|k| row[k].1)
    };
    let mut rank = 0usize;
    while let Some(Reverse((s, r, c))) = heap.pop() {
        let Some(v) = get(&rows, r, c) else { continue };
        let now = {
            let rn = rows[r as usize].len() as u64 - 1;
            let cn = col_rows[c as usize].len() as u64 - 1;
            rn * cn
        };
        if now > s {
            heap.push(Reverse((now, r, c)));
            continue;
        }
        // Pivot: clear the column, then drop the pivot row entirely.
        rank += 1;
        let inv = powmod(v, p - 2);
        let others: Vec<u32> = col_rows[c as usize]
            .iter()
            .copied()
            .filter(|&x| x != r)
            .collect();
        let src = std::mem::take(&mut rows[r as usize]);
        for (cc, _) in &src {
            col_rows[*cc as usize].remove(&r);
        }
        for rr in others {
            let a = get(&rows, rr, c).expect("column index out of sync");
            let factor = mulmod(a, inv);
            // rows[rr] -= factor * src  (mod p)
            let dst = std::mem::take(&mut rows[rr as usize]);
            let mut merged = Vec::with_capacity(dst.len() + src.len());
            let (mut i, mut j) = (0, 0);
            while i < dst.len() || j < src.len() {
                if j == src.len() || (i < dst.len() && dst[i].0 < src[j].0) {
                    merged.push(dst[i]);
                    i += 1;
                } else if i == dst.len() || src[j].0 < dst[i].0 {
                    let val = (p - mulmod(factor, src[j].1)) % p;
                    if val != 0 {
                        merged.push((src[j].0, val));
                        col_rows[src[j].0 as usize].insert(rr);
                        let rn = 0u64; // score refreshed lazily on pop
                        heap.push(Reverse((rn, rr, src[j].0)));
                    }
                    j += 1;
                } else {
                    let val = (dst[i].1 + p - mulmod(factor, src[j].1)) % p;
                    if val != 0 {
                        merged.push((dst[i].0, val));
                    } else {
                        col_rows[dst[i].0 as usize].remove(&rr);
                    }
                    i += 1;
                    j += 1;
                }
            }
            rows[rr as usize] = merged;
        }
    }
    Ok(rank)
}

/// Reduced Betti numbers over `GF(p)`, same augmentation convention as
/// [`integral_homology`]. Rejects non-prime moduli.
pub fn betti_mod_p(k: &SimplicialComplex, p: u64) -> Result<Vec<usize>> {
    if !is_prime_u64(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let table = FaceTable::build(k);
    if table.num_dims() == 0 {
        return Ok(Vec::new());
    }
    let dim = table.num_dims() - 1;
    let boundaries: Vec<IntegerMatrix> = (1..=dim).map(|q| table.boundary(q)).collect();
    for q in 1..dim {
        assert!(
            boundaries[q - 1].multiply(&boundaries[q]).is_zero(),
            "boundary composite in degrees ({q}, {}) is non-zero",
            q + 1
        );
    }
    let mut ranks = vec![0usize; dim + 2];
    ranks[0] = 1;
    let eliminated: Vec<usize> = boundaries
        .par_iter()
        .map(|b| rank_mod_p(b, p))
        .collect::<Result<_>>()?;
    ranks[1..=dim].copy_from_slice(&eliminated);
    Ok((0..=dim)
        .map(|q| table.count(q) - ranks[q] - ranks[q + 1])
        .collect())
}

// ---- chain maps and induced maps on homology -------------------------------

/// Chain maps induced by a vertex map, one matrix per degree of the
/// domain. A simplex whose image degenerates contributes a zero column;
/// a non-degenerate image that is not a simplex of the codomain is an
/// input error carrying the witness. The boundary-commutation identity
/// is asserted on every call.
pub fn chain_map_from_vertex_map(
    k1: &SimplicialComplex,
    k2: &SimplicialComplex,
    vertex_map: &[usize],
) -> Result<Vec<IntegerMatrix>> {
    if vertex_map.len() != k1.num_vertices() {
        return Err(Error::invalid(format!(
            "vertex map has {} entries for {} vertices",
            vertex_map.len(),
            k1.num_vertices()
        )));
    }
    for (v, &w) in vertex_map.iter().enumerate() {
        if w >= k2.num_vertices() {
            return Err(Error::invalid(format!(
                "vertex {v} maps outside codomain ({w})"
            )));
        }
    }
    let faces1 = k1.faces_by_dimension();
    let faces2 = k2.faces_by_dimension();
    let dim1 = faces1.len().saturating_sub(1);
    let mut maps = Vec::with_capacity(dim1 + 1);
    for q in 0..faces1.len() {
        let rows = faces2.get(q).map_or(0, Vec::len);
        let mut cols = Vec::with_capacity(faces1[q].len());
        for face in &faces1[q] {
            let mut image: Vec<usize> = face.iter().map(|v| vertex_map[v]).collect();
            // Insertion sort counting swaps gives the orientation sign.
            let mut swaps = 0usize;
            for i in 1..image.len() {
                let mut j = i;
                while j > 0 && image[j - 1] > image[j] {
                    image.swap(j - 1, j);
                    swaps += 1;
                    j -= 1;
                }
            }
            let degenerate = image.windows(2).any(|w| w[0] == w[1]);
            if degenerate {
                cols.push(Vec::new());
                continue;
            }
            let target = ElementSet::new(image);
            let row = faces2
                .get(q)
                .and_then(|bucket| bucket.binary_search(&target).ok())
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "image of simplex {face} is {target}, not a simplex of the codomain"
                    ))
                })?;
            let sign = if swaps % 2 == 0 {
                BigInt::one()
            } else {
                -BigInt::one()
            };
            cols.push(vec![(row as u32, sign)]);
        }
        maps.push(IntegerMatrix { rows, cols });
    }

    // f# must commute with the boundaries; this is a theorem once the
    // image checks above pass, so a failure indicates an internal bug.
    for q in 1..=dim1 {
        let d1 = boundary_matrix(k1, q).expect("degree within domain dimension");
        let left = maps[q - 1].multiply(&d1);
        let right = if faces2.len() > q {
            boundary_matrix(k2, q)
                .expect("degree within codomain dimension")
                .multiply(&maps[q])
        } else {
            IntegerMatrix::zero(maps[q - 1].rows(), maps[q].num_cols())
        };
        assert!(
            left == right,
            "chain map does not commute with boundaries in degree {q}"
        );
    }
    Ok(maps)
}

/// Per-degree outcome of comparing a map on unreduced rational homology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeIso {
    pub degree: usize,
    pub rank_domain: usize,
    pub rank_codomain: usize,
    pub rank_map: usize,
    pub iso: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedMapReport {
    pub degrees: Vec<DegreeIso>,
    pub all_iso: bool,
}

const DENSE_RATIONAL_LIMIT: usize = 600;

/// Decides, degree by degree, whether a vertex map induces isomorphisms
/// on unreduced rational homology.
///
/// Rational only: the induced map rank is computed by comparing the image
/// of a kernel basis against the boundary space, which is an elimination
/// over `Q`. Degrees beyond both dimensions are trivially isomorphic and
/// omitted; degrees present in either complex are all reported.
pub fn homology_map_is_iso(
    k1: &SimplicialComplex,
    k2: &SimplicialComplex,
    vertex_map: &[usize],
) -> Result<InducedMapReport> {
    if k1.is_empty() || k2.is_empty() {
        return Err(Error::invalid("empty complex has no vertex map"));
    }
    let maps = chain_map_from_vertex_map(k1, k2, vertex_map)?;
    let faces1 = k1.faces_by_dimension();
    let faces2 = k2.faces_by_dimension();
    let dim1 = faces1.len() - 1;
    let dim2 = faces2.len() - 1;
    for q in 0..=dim1.max(dim2) {
        let size = faces1
            .get(q)
            .map_or(0, Vec::len)
            .max(faces2.get(q).map_or(0, Vec::len));
        if size > DENSE_RATIONAL_LIMIT {
            return Err(Error::budget(format!(
                "{size} faces in degree {q} exceed the dense rational limit \
                 ({DENSE_RATIONAL_LIMIT}); compare Betti numbers of the two \
                 complexes instead"
            )));
        }
    }

    let rank_of = |k: &SimplicialComplex, faces: &[Vec<ElementSet>], q: usize| -> usize {
        if q == 0 || q >= faces.len() {
            0
        } else {
            smith_normal_form(&boundary_matrix(k, q).expect("valid degree")).rank
        }
    };

    let mut degrees = Vec::new();
    for q in 0..=dim1.max(dim2) {
        let f1q = faces1.get(q).map_or(0, Vec::len);
        let f2q = faces2.get(q).map_or(0, Vec::len);
        let b1 = if f1q == 0 {
            0
        } else {
            f1q - rank_of(k1, &faces1, q) - rank_of(k1, &faces1, q + 1)
        };
        let b2 = if f2q == 0 {
            0
        } else {
            f2q - rank_of(k2, &faces2, q) - rank_of(k2, &faces2, q + 1)
        };

        // rank H(f)_q = rank [f# Z | B] - rank B, with Z a kernel basis
        // upstairs and B the boundary columns downstairs.
        let rank_map = if b1 == 0 || b2 == 0 {
            0
        } else {
            let z = if q == 0 {
                rational_identity(f1q)
            } else {
                rational_kernel_basis(&to_dense_rational(
                    &boundary_matrix(k1, q).expect("valid degree"),
                ))
            };
            let fz = sparse_times_dense(&maps[q], &z);
            let b_cols = if q + 1 < faces2.len() {
                to_dense_rational(&boundary_matrix(k2, q + 1).expect("valid degree"))
            } else {
                vec![Vec::new(); f2q]
            };
            let rank_b = rational_rank(transpose_cols(&b_cols));
            let mut combined = b_cols;
            for (row, extra) in combined.iter_mut().zip(fz.iter()) {
                row.extend(extra.iter().cloned());
            }
            rational_rank(transpose_cols(&combined)) - rank_b
        };
        degrees.push(DegreeIso {
            degree: q,
            rank_domain: b1,
            rank_codomain: b2,
            rank_map,
            iso: b1 == b2 && rank_map == b1,
        });
    }
    let all_iso = degrees.iter().all(|d| d.iso);
    Ok(InducedMapReport { degrees, all_iso })
}

// Dense rational helpers. Row-major matrices of BigRational; sizes are
// capped by DENSE_RATIONAL_LIMIT before these run.

fn to_dense_rational(m: &IntegerMatrix) -> Vec<Vec<BigRational>> {
    let mut rows = vec![vec![BigRational::zero(); m.num_cols()]; m.rows()];
    for j in 0..m.num_cols() {
        for (r, v) in m.column(j) {
            rows[*r as usize][j] = BigRational::from_integer(v.clone());
        }
    }
    rows
}

fn rational_identity(n: usize) -> Vec<Vec<BigRational>> {
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigRational::one();
    }
    m
}

fn transpose_cols(rows: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let ncols = rows[0].len();
    (0..ncols)
        .map(|j| rows.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Rank by Gaussian elimination; consumes its argument.
fn rational_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..nrows).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = rows[rank][col].recip();
        for c in col..ncols {
            let v = &rows[rank][c] * &inv;
            rows[rank][c] = v;
        }
        for r in 0..nrows {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let v = &rows[r][c] - &factor * &rows[rank][c];
                    rows[r][c] = v;
                }
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

/// Basis of the kernel of a dense rational matrix, returned as a
/// row-major matrix whose columns are the basis vectors.
fn rational_kernel_basis(rows_in: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let nrows = rows_in.len();
    let ncols = rows_in.first().map_or(0, Vec::len);
    let mut rows = rows_in.to_vec();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..nrows).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = rows[rank][col].recip();
        for c in col..ncols {
            let v = &rows[rank][c] * &inv;
            rows[rank][c] = v;
        }
        for r in 0..nrows {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let v = &rows[r][c] - &factor * &rows[rank][c];
                    rows[r][c] = v;
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    let free_cols: Vec<usize> = (0..ncols).filter(|&c| pivot_of_col[c].is_none()).collect();
    let mut basis = vec![vec![BigRational::zero(); free_cols.len()]; ncols];
    for (bk, &fc) in free_cols.iter().enumerate() {
        basis[fc][bk] = BigRational::one();
        for c in 0..ncols {
            if let Some(pr) = pivot_of_col[c] {
                let v = -rows[pr][fc].clone();
                basis[c][bk] = v;
            }
        }
    }
    basis
}

/// `sparse (rows x n) * dense (n x k)`, dense result.
fn sparse_times_dense(m: &IntegerMatrix, dense: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let k = dense.first().map_or(0, Vec::len);
    let mut out = vec![vec![BigRational::zero(); k]; m.rows()];
    for j in 0..m.num_cols() {
        for (r, v) in m.column(j) {
            let vr = BigRational::from_integer(v.clone());
            for (c, cell) in dense[j].iter().enumerate() {
                if !cell.is_zero() {
                    let add = &vr * cell;
                    let v2 = &out[*r as usize][c] + add;
                    out[*r as usize][c] = v2;
                }
            }
        }
    }
    out
}

// ---- subdivision ------------------------------------------------------------

/// Poset of non-empty faces ordered by inclusion, with the dictionary
/// mapping poset indices back to faces. The index order matches
/// [`SimplicialComplex::faces_by_dimension`], flattened.
pub fn face_poset(k: &SimplicialComplex) -> Result<(FinitePoset, Vec<ElementSet>)> {
    let faces: Vec<ElementSet> = k.faces_by_dimension().into_iter().flatten().collect();
    let masks: Vec<fixedbitset::FixedBitSet> =
        faces.iter().map(|f| f.mask(k.num_vertices())).collect();
    let poset = FinitePoset::from_relation(faces.len(), |i, j| masks[i].is_subset(&masks[j]))?;
    Ok((poset, faces))
}

/// Barycentric subdivision: the order complex of the face poset.
/// Vertex `i` of the subdivision is the face `dictionary[i]`.
pub fn barycentric_subdivision(
    k: &SimplicialComplex,
) -> Result<(SimplicialComplex, Vec<ElementSet>)> {
    let (poset, dictionary) = face_poset(k)?;
    Ok((poset.order_complex(), dictionary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn es(v: &[usize]) -> ElementSet {
        ElementSet::new(v.to_vec())
    }

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_facets(3, vec![es(&[0, 1]), es(&[0, 2]), es(&[1, 2])]).unwrap()
    }

    /// Six-vertex triangulation of the real projective plane.
    fn projective_plane() -> SimplicialComplex {
        let facets = [
            [0, 1, 3],
            [0, 1, 4],
            [0, 2, 3],
            [0, 2, 5],
            [0, 4, 5],
            [1, 2, 4],
            [1, 2, 5],
            [1, 3, 5],
            [2, 3, 4],
            [3, 4, 5],
        ];
        SimplicialComplex::from_facets(
            6,
            facets.iter().map(|f| es(&f.map(|v| v as usize))).collect(),
        )
        .unwrap()
    }

    fn sphere_2() -> SimplicialComplex {
        SimplicialComplex::from_facets(
            4,
            vec![
                es(&[0, 1, 2]),
                es(&[0, 1, 3]),
                es(&[0, 2, 3]),
                es(&[1, 2, 3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn from_facets_drops_contained_and_duplicate_faces() {
        let k = SimplicialComplex::from_facets(
            4,
            vec![es(&[0, 1]), es(&[0, 1, 2]), es(&[0, 1, 2]), es(&[3])],
        )
        .unwrap();
        assert_eq!(k.facets(), &[es(&[0, 1, 2]), es(&[3])]);
        assert_eq!(k.dim(), Some(2));
        assert!(k.contains_face(&es(&[0, 2])));
        assert!(!k.contains_face(&es(&[0, 3])));
    }

    #[test]
    fn from_facets_rejects_bad_input() {
        assert!(SimplicialComplex::from_facets(2, vec![es(&[])]).is_err());
        assert!(SimplicialComplex::from_facets(2, vec![es(&[0, 5])]).is_err());
    }

    #[test]
    fn faces_by_dimension_counts_and_order() {
        let k = hollow_triangle();
        let faces = k.faces_by_dimension();
        assert_eq!(faces[0], vec![es(&[0]), es(&[1]), es(&[2])]);
        assert_eq!(faces[1], vec![es(&[0, 1]), es(&[0, 2]), es(&[1, 2])]);

        let full = SimplicialComplex::from_facets(3, vec![es(&[0, 1, 2])]).unwrap();
        let faces = full.faces_by_dimension();
        assert_eq!(
            faces.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![3, 3, 1]
        );
        assert_eq!(full.euler_characteristic(), 1);
    }

    #[test]
    fn lex_mask_order_matches_lex_list_order() {
        let mut masks: Vec<u128> = vec![
            0b1001, // {0,3}
            0b0110, // {1,2}
            0b0011, // {0,1}
            0b1010, // {1,3}
        ];
        masks.sort_by(lex_mask_cmp);
        let lists: Vec<Vec<usize>> = masks
            .iter()
            .map(|m| (0..4).filter(|v| m >> v & 1 == 1).collect())
            .collect();
        assert_eq!(lists, vec![vec![0, 1], vec![0, 3], vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn boundary_of_hollow_triangle_is_the_usual_incidence_matrix() {
        let k = hollow_triangle();
        let d1 = boundary_matrix(&k, 1).unwrap();
        // Columns follow {0,1}, {0,2}, {1,2}; boundary [a,b] = [b] - [a].
        let expected = IntegerMatrix::from_dense(&[vec![-1, -1, 0], vec![1, 0, -1], vec![0, 1, 1]]);
        assert_eq!(d1, expected);
        assert!(boundary_matrix(&k, 2).is_err(), "degree above dimension");
        assert!(
            boundary_matrix(&k, 0).is_err(),
            "degree zero is the augmentation"
        );
    }

    #[test]
    fn smith_normal_form_on_small_known_matrices() {
        let snf = smith_normal_form(&IntegerMatrix::from_dense(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(snf.rank, 2);
        assert_eq!(snf.factors, vec![BigInt::from(1), BigInt::from(6)]);

        let snf = smith_normal_form(&IntegerMatrix::from_dense(&[vec![2, 4], vec![4, 2]]));
        assert_eq!(snf.factors, vec![BigInt::from(2), BigInt::from(6)]);

        let snf = smith_normal_form(&IntegerMatrix::zero(3, 4));
        assert_eq!((snf.rank, snf.factors.len()), (0, 0));

        let k = hollow_triangle();
        let snf = smith_normal_form(&boundary_matrix(&k, 1).unwrap());
        assert_eq!(snf.rank, 2);
        assert!(snf.factors.iter().all(|f| f.is_one()));
    }

    #[test]
    fn integral_homology_of_standard_spaces() {
        let point = SimplicialComplex::from_facets(1, vec![es(&[0])]).unwrap();
        assert_eq!(integral_homology(&point).betti_vector(), &[0]);

        let circle = integral_homology(&hollow_triangle());
        assert_eq!(circle.betti_vector(), &[0, 1]);
        assert!(circle.is_torsion_free());

        let sphere = integral_homology(&sphere_2());
        assert_eq!(sphere.betti_vector(), &[0, 0, 1]);

        let two_components =
            SimplicialComplex::from_facets(4, vec![es(&[0, 1]), es(&[2, 3])]).unwrap();
        assert_eq!(integral_homology(&two_components).rank(0), 1);

        let solid = SimplicialComplex::from_facets(4, vec![es(&[0, 1, 2, 3])]).unwrap();
        assert_eq!(integral_homology(&solid).betti_vector(), &[0, 0, 0, 0]);
    }

    #[test]
    fn projective_plane_has_two_torsion_and_nothing_else() {
        let h = integral_homology(&projective_plane());
        assert_eq!(h.betti_vector(), &[0, 0, 0], "rational homology vanishes");
        assert_eq!(h.torsion(1), &[BigInt::from(2)], "degree one carries Z/2");
        assert!(h.torsion(0).is_empty());
        assert!(h.torsion(2).is_empty());
        assert_eq!(
            h.to_string(),
            "H~0 rank=0\nH~1 rank=0 torsion=2\nH~2 rank=0\n"
        );
    }

    #[test]
    fn empty_complex_is_flagged_not_zeroed() {
        let empty = SimplicialComplex::from_facets(0, vec![]).unwrap();
        let h = integral_homology(&empty);
        assert!(h.is_empty_complex());
        assert_eq!(h.dim(), None);
        assert_eq!(h.to_string(), "H~-1 rank=1\n");
    }

    #[test]
    fn mod_p_betti_detects_torsion_where_rational_does_not() {
        let rp2 = projective_plane();
        assert_eq!(betti_mod_p(&rp2, 2).unwrap(), vec![0, 1, 1]);
        assert_eq!(betti_mod_p(&rp2, 3).unwrap(), vec![0, 0, 0]);
        assert!(betti_mod_p(&rp2, 4).is_err(), "4 is not prime");
        assert!(betti_mod_p(&rp2, 1).is_err(), "1 is not prime");

        // Torsion-free space: all characteristics agree.
        let circle = hollow_triangle();
        for p in [2u64, 3, 97] {
            assert_eq!(betti_mod_p(&circle, p).unwrap(), vec![0, 1]);
        }
    }

    #[test]
    fn facet_file_round_trip_and_rejections() {
        let k = projective_plane();
        let text = k.to_facet_file();
        let back = SimplicialComplex::parse_facet_file(&text).unwrap();
        assert_eq!(k, back);

        let commented = format!("# triangulation\n\n{text}");
        assert_eq!(SimplicialComplex::parse_facet_file(&commented).unwrap(), k);

        assert!(
            SimplicialComplex::parse_facet_file("2 1\n").is_err(),
            "descending"
        );
        assert!(
            SimplicialComplex::parse_facet_file("1 1\n").is_err(),
            "repeated"
        );
        assert!(
            SimplicialComplex::parse_facet_file("0 x\n").is_err(),
            "non-numeric"
        );
        let empty = SimplicialComplex::parse_facet_file("# nothing\n").unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn identity_vertex_map_induces_isomorphisms() {
        let k = hollow_triangle();
        let report = homology_map_is_iso(&k, &k, &[0, 1, 2]).unwrap();
        assert!(report.all_iso);
        assert_eq!(report.degrees[0].rank_domain, 1, "unreduced degree zero");
        assert_eq!(report.degrees[1].rank_map, 1);
    }

    #[test]
    fn constant_map_is_iso_exactly_in_degree_zero() {
        let k = hollow_triangle();
        let point = SimplicialComplex::from_facets(1, vec![es(&[0])]).unwrap();
        let report = homology_map_is_iso(&k, &point, &[0, 0, 0]).unwrap();
        assert!(report.degrees[0].iso, "connected to connected in degree 0");
        assert!(!report.degrees[1].iso, "circle class dies");
        assert!(!report.all_iso);
    }

    #[test]
    fn non_simplicial_vertex_map_is_rejected_with_witness() {
        let k = hollow_triangle();
        let path = SimplicialComplex::from_facets(3, vec![es(&[0, 1]), es(&[1, 2])]).unwrap();
        let err = chain_map_from_vertex_map(&k, &path, &[0, 1, 2]).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("{0,2}"),
            "witness simplex missing from {msg:?}"
        );
    }

    #[test]
    fn orientation_signs_follow_the_sort_parity() {
        // Map flipping an edge: 0 -> 1, 1 -> 0 on a single edge complex.
        let edge = SimplicialComplex::from_facets(2, vec![es(&[0, 1])]).unwrap();
        let maps = chain_map_from_vertex_map(&edge, &edge, &[1, 0]).unwrap();
        assert_eq!(maps[1].column(0), &[(0u32, BigInt::from(-1))]);
    }

    #[test]
    fn barycentric_subdivision_preserves_homology() {
        for k in [hollow_triangle(), sphere_2(), projective_plane()] {
            let (sd, dictionary) = barycentric_subdivision(&k).unwrap();
            assert_eq!(integral_homology(&k), integral_homology(&sd));
            assert_eq!(
                dictionary.len(),
                k.faces_by_dimension().iter().map(Vec::len).sum::<usize>()
            );
        }
    }

    #[test]
    fn face_poset_of_hollow_triangle_is_the_hexagon_fan() {
        let (poset, faces) = face_poset(&hollow_triangle()).unwrap();
        assert_eq!(poset.len(), 6);
        assert_eq!(faces.len(), 6);
        assert_eq!(poset.total_height(), 3);
        // Each edge covers its two endpoints and nothing else.
        assert_eq!(poset.covers().len(), 6);
    }

    // Textbook dense Smith normal form over BigInt, used as an oracle.
    fn dense_snf_oracle(mut m: Vec<Vec<BigInt>>) -> (usize, Vec<BigInt>) {
        let rows = m.len();
        let cols = m.first().map_or(0, Vec::len);
        let mut top = 0;
        let mut diag = Vec::new();
        while top < rows && top < cols {
            let mut best: Option<(usize, usize)> = None;
            for i in top..rows {
                for j in top..cols {
                    if !m[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            m.swap(top, bi);
            for row in &mut m {
                row.swap(top, bj);
            }
            'reduce: loop {
                if m[top][top].is_negative() {
                    for j in 0..cols {
                        let v = -m[top][j].clone();
                        m[top][j] = v;
                    }
                }
                for i in top + 1..rows {
                    if !m[i][top].is_zero() {
                        let q = m[i][top].div_floor(&m[top][top]);
                        for j in 0..cols {
                            let v = &m[i][j] - &q * &m[top][j];
                            m[i][j] = v;
                        }
                        if !m[i][top].is_zero() {
                            m.swap(top, i);
                            continue 'reduce;
                        }
                    }
                }
                for j in top + 1..cols {
                    if !m[top][j].is_zero() {
                        let q = m[top][j].div_floor(&m[top][top]);
                        for i in 0..rows {
                            let v = &m[i][j] - &q * &m[i][top];
                            m[i][j] = v;
                        }
                        if !m[top][j].is_zero() {
                            for row in &mut m {
                                row.swap(top, j);
                            }
                            continue 'reduce;
                        }
                    }
                }
                let d = m[top][top].clone();
                for i in top + 1..rows {
                    for j in top + 1..cols {
                        if !(&m[i][j] % &d).is_zero() {
                            for jj in 0..cols {
                                let v = &m[top][jj] + &m[i][jj];
                                m[top][jj] = v;
                            }
                            continue 'reduce;
                        }
                    }
                }
                break;
            }
            diag.push(m[top][top].clone());
            top += 1;
        }
        (diag.len(), diag)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn sparse_snf_matches_dense_oracle(
            rows in 1usize..7,
            cols in 1usize..7,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 19) as i64 - 9
            };
            let dense: Vec<Vec<i64>> =
                (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let snf = smith_normal_form(&IntegerMatrix::from_dense(&dense));
            let oracle = dense_snf_oracle(
                dense
                    .iter()
                    .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                    .collect(),
            );
            prop_assert_eq!(snf.rank, oracle.0);
            prop_assert_eq!(snf.factors, oracle.1);
        }

        #[test]
        fn snf_is_invariant_under_permutations(
            rows in 1usize..7,
            cols in 1usize..7,
            seed in any::<u64>(),
            perm_seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 9) as i64 - 4
            };
            let dense: Vec<Vec<i64>> =
                (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            // Deterministic pseudo-shuffle of rows and columns.
            let mut row_order: Vec<usize> = (0..rows).collect();
            let mut col_order: Vec<usize> = (0..cols).collect();
            let mut s = perm_seed;
            for i in (1..rows).rev() {
                s = s.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                row_order.swap(i, (s % (i as u64 + 1)) as usize);
            }
            for i in (1..cols).rev() {
                s = s.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                col_order.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let permuted: Vec<Vec<i64>> = row_order
                .iter()
                .map(|&i| col_order.iter().map(|&j| dense[i][j]).collect())
                .collect();
            let a = smith_normal_form(&IntegerMatrix::from_dense(&dense));
            let b = smith_normal_form(&IntegerMatrix::from_dense(&permuted));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rank_mod_p_agrees_with_integer_rank_generically(
            rows in 1usize..7,
            cols in 1usize..7,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 5) as i64 - 2
            };
            let dense: Vec<Vec<i64>> =
                (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let m = IntegerMatrix::from_dense(&dense);
            let exact = smith_normal_form(&m);
            // Over a prime dividing no invariant factor the ranks agree.
            let p = 1_000_000_007u64;
            let clean = exact
                .factors
                .iter()
                .all(|f| !(f % BigInt::from(p)).is_zero());
            prop_assume!(clean);
            prop_assert_eq!(rank_mod_p(&m, p).unwrap(), exact.rank);
        }

        #[test]
        fn boundary_composites_vanish_on_random_complexes(
            seed in any::<u64>(),
            n in 4usize..8,
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            let mut facets = Vec::new();
            for _ in 0..6 {
                let size = 2 + (next() % 3) as usize;
                let mut f: Vec<usize> = (0..size).map(|_| (next() as usize) % n).collect();
                f.sort_unstable();
                f.dedup();
                facets.push(ElementSet::new(f));
            }
            let k = SimplicialComplex::from_facets(n, facets).unwrap();
            // integral_homology asserts the composites internally.
            let h = integral_homology(&k);
            // Euler characteristic cross-check.
            let chi = k.euler_characteristic();
            let from_betti: i64 = 1 + h
                .betti_vector()
                .iter()
                .enumerate()
                .map(|(q, &b)| if q % 2 == 0 { b as i64 } else { -(b as i64) })
                .sum::<i64>();
            prop_assert_eq!(chi, from_betti);
        }
    }

    #[test]
    fn primality_spot_checks() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(0xC0FFEE_u64 | 1).eq(&is_prime_u64(12648431)));
        assert!(is_prime_u64(1_000_000_007));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(561), "Carmichael number");
        assert!(is_prime_u64(4611686018427387847), "62-bit prime");
    }
}
