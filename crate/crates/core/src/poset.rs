//! Finite posets with exact meet and join queries, heights, order
//! complexes and extremal-element maps.
//!
//! Elements are the indices `0..n`. The order is stored as a dense bit
//! matrix, built once as the reflexive-transitive closure of a cover
//! relation (or taken verbatim from a validated relation), so that
//! comparability tests are single bit probes and bound computations are
//! word-parallel sweeps over bit rows.
//!
//! The two virtual bounds that complete the poset are never materialized:
//! a meet or join that would land on a virtual bound simply does not
//! exist as far as this module is concerned. Heights account for the
//! virtual bottom by convention, so minimal elements have height 1, and
//! the total height exceeds the longest chain of stored elements by one.

use std::collections::HashSet;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::homology::SimplicialComplex;

/// A finite set of poset elements, kept sorted and duplicate free.
///
/// The canonical representation makes structural equality, hashing and
/// the derived lexicographic order meaningful, which the rest of the
/// crate relies on for deduplication and deterministic output.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct ElementSet {
    members: Vec<usize>,
}

impl ElementSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        ElementSet { members }
    }

    pub fn singleton(x: usize) -> Self {
        ElementSet { members: vec![x] }
    }

    pub fn empty() -> Self {
        ElementSet {
            members: Vec::new(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// Set union, preserving the canonical form.
    pub fn union(&self, other: &Self) -> Self {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => {
                    merged.push(self.members[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    merged.push(other.members[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    merged.push(self.members[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        merged.extend_from_slice(&self.members[i..]);
        merged.extend_from_slice(&other.members[j..]);
        ElementSet { members: merged }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        let mut j = 0;
        for &x in &self.members {
            while j < other.members.len() && other.members[j] < x {
                j += 1;
            }
            if j == other.members.len() || other.members[j] != x {
                return false;
            }
            j += 1;
        }
        true
    }

    /// Bit mask over an ambient universe of size `n`.
    ///
    /// # Panics
    ///
    /// Panics if some member is `>= n`.
    pub fn mask(&self, n: usize) -> FixedBitSet {
        let mut m = FixedBitSet::with_capacity(n);
        for &x in &self.members {
            assert!(x < n, "element {x} outside universe of size {n}");
            m.insert(x);
        }
        m
    }

    pub fn from_mask(mask: &FixedBitSet) -> Self {
        ElementSet {
            members: mask.ones().collect(),
        }
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        ElementSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, x) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// Which end of the order `extreme_elements` should report.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Min,
    Max,
}

/// A finite poset on elements `0..n`.
#[derive(Clone, Debug)]
pub struct FinitePoset {
    n: usize,
    /// `up[i]` holds every `j` with `i <= j`, including `i` itself.
    up: Vec<FixedBitSet>,
    /// Transpose of `up`: `down[i]` holds every `j` with `j <= i`.
    down: Vec<FixedBitSet>,
    /// The cover relation (transitive reduction), sorted.
    covers: Vec<(usize, usize)>,
    /// `heights[i]` = number of elements of a longest chain ending at `i`.
    heights: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl FinitePoset {
    /// Builds the poset generated by a cover relation.
    ///
    /// `covers` lists pairs `(i, j)` meaning `i < j`; redundant pairs are
    /// allowed and folded into the closure. A directed cycle is rejected
    /// with a witness walk.
    pub fn from_covers(n: usize, covers: &[(usize, usize)]) -> Result<Self> {
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(i, j) in covers {
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "cover ({i}, {j}) out of range for {n} elements"
                )));
            }
            if seen.insert((i, j)) {
                succ[i].push(j);
                pred[j].push(i);
            }
        }

        // Kahn's algorithm; leftovers witness a cycle.
        let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            topo.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push(j);
                }
            }
        }
        if topo.len() < n {
            let remaining: HashSet<usize> = (0..n).filter(|&i| indeg[i] > 0).collect();
            return Err(Error::Cycle(witness_cycle(&pred, &remaining)));
        }

        // Reflexive-transitive closure in reverse topological order.
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for &i in topo.iter().rev() {
            let mut row = FixedBitSet::with_capacity(n);
            row.insert(i);
            for &j in &succ[i] {
                row.union_with(&up[j]);
            }
            up[i] = row;
        }
        Ok(Self::finish(n, up, None))
    }

    /// Builds a poset from an arbitrary relation given as a predicate.
    ///
    /// The predicate must describe a partial order; reflexivity,
    /// antisymmetry and transitivity are all verified.
    pub fn from_relation(n: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            if !leq(i, i) {
                return Err(Error::invalid(format!("relation not reflexive at {i}")));
            }
            for j in 0..n {
                if leq(i, j) {
                    up[i].insert(j);
                }
            }
        }
        for i in 0..n {
            for j in up[i].ones() {
                if j != i && up[j].contains(i) {
                    return Err(Error::invalid(format!(
                        "relation not antisymmetric on ({i}, {j})"
                    )));
                }
                if !up[j].is_subset(&up[i]) {
                    return Err(Error::invalid(format!(
                        "relation not transitive through ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::finish(n, up, None))
    }

    fn finish(n: usize, up: Vec<FixedBitSet>, labels: Option<Vec<String>>) -> Self {
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            for j in up[i].ones() {
                down[j].insert(i);
            }
        }

        // Covers: i < j with nothing strictly between.
        let mut covers = Vec::new();
        let mut between = FixedBitSet::with_capacity(n);
        for i in 0..n {
            for j in up[i].ones() {
                if j == i {
                    continue;
                }
                between.clone_from(&up[i]);
                between.intersect_with(&down[j]);
                // `between` now holds the closed interval [i, j].
                if between.count_ones(..) == 2 {
                    covers.push((i, j));
                }
            }
        }
        covers.sort_unstable();

        // Longest chain ending at each element, computed in an order where
        // smaller down-sets come first (y < x implies |down(y)| < |down(x)|).
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by_key(|&i| down[i].count_ones(..));
        let mut heights = vec![0usize; n];
        for &i in &order {
            let mut best = 0;
            for j in down[i].ones() {
                if j != i {
                    best = best.max(heights[j]);
                }
            }
            heights[i] = best + 1;
        }

        FinitePoset {
            n,
            up,
            down,
            covers,
            heights,
            labels,
        }
    }

    /// Attaches display labels, one per element.
    ///
    /// Labels must be non-empty and free of whitespace so they survive
    /// the line-oriented file format.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::invalid(format!(
                "{} labels for {} elements",
                labels.len(),
                self.n
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("label {i:?} ({l:?}) unusable")));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.up[i].contains(j)
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        i != j && self.leq(i, j)
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    /// Label if present, element index otherwise.
    pub fn render(&self, i: usize) -> String {
        match self.label(i) {
            Some(l) => l.to_string(),
            None => i.to_string(),
        }
    }

    /// Renders a set of elements as `{a,b,c}` using labels when present.
    pub fn render_set(&self, s: &ElementSet) -> String {
        let inner: Vec<String> = s.iter().map(|i| self.render(i)).collect();
        format!("{{{}}}", inner.join(","))
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// Row of all elements `>= i`, including `i`.
    pub fn up_row(&self, i: usize) -> &FixedBitSet {
        &self.up[i]
    }

    /// Row of all elements `<= i`, including `i`.
    pub fn down_row(&self, i: usize) -> &FixedBitSet {
        &self.down[i]
    }

    /// Common upper bounds of a non-empty set, as a mask.
    pub fn upper_bounds(&self, s: &ElementSet) -> FixedBitSet {
        assert!(
            !s.is_empty(),
            "bounds of the empty set are not defined here"
        );
        let mut acc = self.up[s.members()[0]].clone();
        for x in s.iter().skip(1) {
            acc.intersect_with(&self.up[x]);
        }
        acc
    }

    /// Common lower bounds of a non-empty set, as a mask.
    pub fn lower_bounds(&self, s: &ElementSet) -> FixedBitSet {
        assert!(
            !s.is_empty(),
            "bounds of the empty set are not defined here"
        );
        let mut acc = self.down[s.members()[0]].clone();
        for x in s.iter().skip(1) {
            acc.intersect_with(&self.down[x]);
        }
        acc
    }

    /// Greatest lower bound among the stored elements, if it exists.
    ///
    /// The meet exists exactly when the set of common lower bounds has a
    /// unique maximal element; a meet that would land on the virtual
    /// bottom yields `None`. For a singleton the element itself is
    /// returned.
    ///
    /// # Panics
    ///
    /// Panics if `s` is empty or contains an out-of-range index.
    pub fn meet_of(&self, s: &ElementSet) -> Option<usize> {
        let bounds = self.lower_bounds(s);
        self.unique_max_in(&bounds)
    }

    /// Least upper bound among the stored elements, if it exists.
    ///
    /// Dual of [`meet_of`](Self::meet_of).
    ///
    /// # Panics
    ///
    /// Panics if `s` is empty or contains an out-of-range index.
    pub fn join_of(&self, s: &ElementSet) -> Option<usize> {
        let bounds = self.upper_bounds(s);
        self.unique_min_in(&bounds)
    }

    /// The unique maximal element of a mask, or `None` if there are zero
    /// or several maximal elements.
    fn unique_max_in(&self, mask: &FixedBitSet) -> Option<usize> {
        let mut found = None;
        let mut scratch = FixedBitSet::with_capacity(self.n);
        for i in mask.ones() {
            scratch.clone_from(&self.up[i]);
            scratch.intersect_with(mask);
            if scratch.count_ones(..) == 1 {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    fn unique_min_in(&self, mask: &FixedBitSet) -> Option<usize> {
        let mut found = None;
        let mut scratch = FixedBitSet::with_capacity(self.n);
        for i in mask.ones() {
            scratch.clone_from(&self.down[i]);
            scratch.intersect_with(mask);
            if scratch.count_ones(..) == 1 {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    /// Number of elements of a longest chain ending at `x` (atoms get 1).
    pub fn height_of(&self, x: usize) -> usize {
        self.heights[x]
    }

    /// One more than the number of elements of a longest chain.
    ///
    /// This counts the two virtual bounds as chain links minus one, so it
    /// equals the dimension of the order complex of the poset extended by
    /// its virtual bounds. The empty poset has total height 1.
    pub fn total_height(&self) -> usize {
        self.heights.iter().copied().max().unwrap_or(0) + 1
    }

    /// The minimal or maximal elements of a non-empty subset.
    ///
    /// The result is a non-empty antichain, and every member of `s` is
    /// comparable to some member of the result.
    ///
    /// # Panics
    ///
    /// Panics if `s` is empty or contains an out-of-range index.
    pub fn extreme_elements(&self, s: &ElementSet, dir: Direction) -> ElementSet {
        assert!(
            !s.is_empty(),
            "extreme elements of the empty set are not defined"
        );
        let mask = s.mask(self.n);
        let mut out = Vec::new();
        let mut scratch = FixedBitSet::with_capacity(self.n);
        for x in s.iter() {
            let row = match dir {
                Direction::Min => &self.down[x],
                Direction::Max => &self.up[x],
            };
            scratch.clone_from(row);
            scratch.intersect_with(&mask);
            if scratch.count_ones(..) == 1 {
                out.push(x);
            }
        }
        ElementSet::new(out)
    }

    pub fn is_antichain(&self, s: &ElementSet) -> bool {
        let mask = s.mask(self.n);
        let mut scratch = FixedBitSet::with_capacity(self.n);
        for x in s.iter() {
            scratch.clone_from(&self.up[x]);
            scratch.intersect_with(&mask);
            if scratch.count_ones(..) != 1 {
                return false;
            }
        }
        true
    }

    /// The order complex: vertices are the poset elements and facets are
    /// the maximal chains.
    pub fn order_complex(&self) -> SimplicialComplex {
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        let mut has_pred = vec![false; self.n];
        for &(i, j) in &self.covers {
            succ[i].push(j);
            has_pred[j] = true;
        }
        let mut facets = Vec::new();
        let mut path = Vec::new();
        for start in 0..self.n {
            if !has_pred[start] {
                self.maximal_chains_from(start, &succ, &mut path, &mut facets);
            }
        }
        // Maximal chains can repeat as sets only if they are equal, and
        // distinct maximal chains never contain one another.
        SimplicialComplex::from_maximal_facets(self.n, facets)
    }

    fn maximal_chains_from(
        &self,
        v: usize,
        succ: &[Vec<usize>],
        path: &mut Vec<usize>,
        out: &mut Vec<ElementSet>,
    ) {
        path.push(v);
        if succ[v].is_empty() {
            out.push(ElementSet::new(path.clone()));
        } else {
            for &w in &succ[v] {
                self.maximal_chains_from(w, succ, path, out);
            }
        }
        path.pop();
    }

    /// Serializes to the line-oriented poset format.
    pub fn to_poset_file(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("POSET {}\n", self.n));
        if let Some(labels) = &self.labels {
            for (i, l) in labels.iter().enumerate() {
                out.push_str(&format!("LABEL {i} {l}\n"));
            }
        }
        for &(i, j) in &self.covers {
            out.push_str(&format!("COVER {i} {j}\n"));
        }
        out
    }

    /// Parses the line-oriented poset format.
    ///
    /// Grammar: a single `POSET n` line, then any number of
    /// `LABEL i token` and `COVER i j` lines. Lines starting with `#` and
    /// blank lines are ignored. Duplicate covers, duplicate labels,
    /// out-of-range indices and cyclic cover relations are rejected.
    pub fn parse_poset_file(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut covers: Vec<(usize, usize)> = Vec::new();
        let mut cover_seen: HashSet<(usize, usize)> = HashSet::new();
        let mut labels: Vec<Option<String>> = Vec::new();
        let mut any_label = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let ctx = |msg: String| Error::invalid(format!("line {}: {msg}", lineno + 1));
            match fields[0] {
                "POSET" => {
                    if n.is_some() {
                        return Err(ctx("duplicate POSET line".into()));
                    }
                    if fields.len() != 2 {
                        return Err(ctx("expected POSET <n>".into()));
                    }
                    let count = parse_index(fields[1], lineno)?;
                    n = Some(count);
                    labels = vec![None; count];
                }
                "COVER" => {
                    let count = n.ok_or_else(|| ctx("COVER before POSET".into()))?;
                    if fields.len() != 3 {
                        return Err(ctx("expected COVER <i> <j>".into()));
                    }
                    let i = parse_index(fields[1], lineno)?;
                    let j = parse_index(fields[2], lineno)?;
                    if i >= count || j >= count {
                        return Err(ctx(format!("cover ({i}, {j}) out of range")));
                    }
                    if !cover_seen.insert((i, j)) {
                        return Err(ctx(format!("duplicate cover ({i}, {j})")));
                    }
                    covers.push((i, j));
                }
                "LABEL" => {
                    let count = n.ok_or_else(|| ctx("LABEL before POSET".into()))?;
                    if fields.len() != 3 {
                        return Err(ctx("expected LABEL <i> <token>".into()));
                    }
                    let i = parse_index(fields[1], lineno)?;
                    if i >= count {
                        return Err(ctx(format!("label index {i} out of range")));
                    }
                    if labels[i].is_some() {
                        return Err(ctx(format!("duplicate label for {i}")));
                    }
                    labels[i] = Some(fields[2].to_string());
                    any_label = true;
                }
                other => {
                    return Err(ctx(format!("unknown directive {other:?}")));
                }
            }
        }

        let n = n.ok_or_else(|| Error::invalid("missing POSET line"))?;
        let poset = FinitePoset::from_covers(n, &covers)?;
        if any_label {
            let filled: Vec<String> = labels
                .into_iter()
                .enumerate()
                .map(|(i, l)| l.unwrap_or_else(|| i.to_string()))
                .collect();
            poset.with_labels(filled)
        } else {
            Ok(poset)
        }
    }
}

fn parse_index(tok: &str, lineno: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::invalid(format!("line {}: bad number {tok:?}", lineno + 1)))
}

/// Extracts a closed walk from the nodes Kahn's algorithm could not order.
fn witness_cycle(pred: &[Vec<usize>], remaining: &HashSet<usize>) -> Vec<usize> {
    let &start = remaining.iter().min().expect("cycle set is non-empty");
    let mut path = vec![start];
    let mut pos = std::collections::HashMap::new();
    pos.insert(start, 0usize);
    let mut cur = start;
    loop {
        // Every unordered node keeps a predecessor among the unordered
        // ones, so the walk below cannot get stuck before revisiting.
        let p = *pred[cur]
            .iter()
            .find(|q| remaining.contains(q))
            .expect("unordered node without unordered predecessor");
        if let Some(&k) = pos.get(&p) {
            let mut cycle: Vec<usize> = path[k..].to_vec();
            cycle.reverse(); // follow edge direction
            return cycle;
        }
        pos.insert(p, path.len());
        path.push(p);
        cur = p;
    }
}
