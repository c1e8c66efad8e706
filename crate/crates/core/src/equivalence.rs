//! The closure operator and the two comparison maps between the common
//! basis complex and the partial decomposition poset.
//!
//! For a chain c of faces of CB, the map m sends c to the maximal
//! elements of the union of min(Cl(sigma)) over the links sigma of c;
//! it always lands in PD. For a chain of partial decompositions, the
//! map u takes the union of the links; the union is a face of CB for
//! every chain precisely when the family has the extension property,
//! so u carries a face flag instead of erroring.
//!
//! Both maps are order-preserving, so applying one link-wise to a chain
//! of chains (the delta construction) yields a chain again. The two
//! composite inequalities checked by [`verify_composite_bounds`] relate
//! these delta maps to plain closure and extremal-element maps; they are
//! the combinatorial core of the homotopy-equivalence argument, and
//! [`induced_homology_iso`] verifies the homology-level consequence
//! directly on small instances.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frames::{DecompositionPoset, FrameFamily};
use crate::homology::{face_poset, homology_map_is_iso, InducedMapReport, SimplicialComplex};
use crate::poset::{Direction, ElementSet, FinitePoset};

/// Subset enumeration cap for [`closure`], matching the frame budget.
const MAX_CLOSURE_SIZE: usize = 24;

/// All meets of non-empty subsets of `sigma` that exist in the poset.
/// Extensive, monotone and idempotent; costs `2^|sigma|` meet queries,
/// capped at [`MAX_CLOSURE_SIZE`] elements.
pub fn closure(p: &FinitePoset, sigma: &ElementSet) -> ElementSet {
    assert!(!sigma.is_empty(), "closure of an empty set");
    assert!(
        sigma.len() <= MAX_CLOSURE_SIZE,
        "closure of {} elements exceeds the enumeration budget",
        sigma.len()
    );
    let members = sigma.members();
    let mut out: std::collections::BTreeSet<usize> = members.iter().copied().collect();
    for mask in 1u32..(1 << members.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        let subset: Vec<usize> = (0..members.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| members[i])
            .collect();
        if let Some(m) = p.meet_of(&ElementSet::new(subset)) {
            out.insert(m);
        }
    }
    out.into_iter().collect()
}

/// What a chain's links are: faces of the common basis complex ordered
/// by inclusion, or partial decompositions ordered by refinement.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ChainKind {
    CbFaces,
    Refinement,
}

/// A validated chain, the common input of the maps m and u. The links
/// are element sets over the ambient poset, strictly increasing in the
/// order named by the constructor used.
#[derive(Clone, Debug)]
pub struct ChainInPoset {
    links: Vec<ElementSet>,
    kind: ChainKind,
}

impl ChainInPoset {
    /// A chain of faces of the common basis complex, strictly
    /// increasing under inclusion, each witnessed by some frame.
    pub fn of_cb_faces(family: &FrameFamily, faces: Vec<ElementSet>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::invalid("empty chain"));
        }
        for face in &faces {
            if face.is_empty() {
                return Err(Error::invalid("empty link in a chain"));
            }
            if !family.sigmas().iter().any(|s| face.is_subset_of(s)) {
                return Err(Error::invalid(format!(
                    "{face} is not a face of the common basis complex"
                )));
            }
        }
        for w in faces.windows(2) {
            if !(w[0].is_subset_of(&w[1]) && w[0].len() < w[1].len()) {
                return Err(Error::invalid(format!(
                    "links {} and {} are not strictly nested",
                    w[0], w[1]
                )));
            }
        }
        Ok(ChainInPoset {
            links: faces,
            kind: ChainKind::CbFaces,
        })
    }

    /// A chain in the partial decomposition poset, strictly increasing
    /// under refinement.
    pub fn of_refinement(pd: &DecompositionPoset, sets: Vec<ElementSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::invalid("empty chain"));
        }
        let mut indices = Vec::with_capacity(sets.len());
        for s in &sets {
            match pd.index_of(s) {
                Some(i) => indices.push(i),
                None => {
                    return Err(Error::invalid(format!(
                        "{s} is not a partial decomposition"
                    )));
                }
            }
        }
        for w in indices.windows(2) {
            if !pd.poset().lt(w[0], w[1]) {
                return Err(Error::invalid(format!(
                    "links {} and {} are not strictly increasing under refinement",
                    pd.elements()[w[0]],
                    pd.elements()[w[1]]
                )));
            }
        }
        Ok(ChainInPoset {
            links: sets,
            kind: ChainKind::Refinement,
        })
    }

    pub fn links(&self) -> &[ElementSet] {
        &self.links
    }
}

fn union_all<'a>(sets: impl Iterator<Item = &'a ElementSet>) -> ElementSet {
    sets.fold(ElementSet::empty(), |acc, s| acc.union(s))
}

/// min(Cl(sigma)): the minimal elements of the closure of a face.
fn min_closure(p: &FinitePoset, sigma: &ElementSet) -> ElementSet {
    p.extreme_elements(&closure(p, sigma), Direction::Min)
}

/// The chain-to-decomposition map: the maximal elements of the union of
/// min(Cl(sigma)) over the links. The result is always a partial
/// decomposition (checked by tests, not re-derived here) and the map is
/// monotone in the chain.
pub fn map_m(p: &FinitePoset, c: &ChainInPoset) -> Result<ElementSet> {
    if c.kind != ChainKind::CbFaces {
        return Err(Error::invalid("map m expects a chain of complex faces"));
    }
    let pooled = c
        .links()
        .iter()
        .fold(ElementSet::empty(), |acc, s| acc.union(&min_closure(p, s)));
    Ok(p.extreme_elements(&pooled, Direction::Max))
}

/// Image of the union map on a chain: the union of the links, flagged
/// by whether some frame's join closure contains it. On refinement
/// chains the flag is exactly the extension property at that chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UImage {
    pub union: ElementSet,
    pub is_face: bool,
}

/// The union formula reads off any chain, so face chains are accepted
/// too; there the union is the top link and the flag always true.
pub fn map_u(family: &FrameFamily, c: &ChainInPoset) -> UImage {
    let union = union_all(c.links().iter());
    let is_face = family.sigmas().iter().any(|s| union.is_subset_of(s));
    UImage { union, is_face }
}

// ---- chain universes: counting, enumeration, sampling ----------------------

/// Default sampling parameters of the bound verifier.
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;
pub const DEFAULT_SAMPLE_SEED: u64 = 0xC0FFEE;

/// Effort budget for the double-subdivision checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

/// Exhaustive verification is accepted up to this many chain-of-chain
/// elements per side. The worst complex under the 64-face exhaustive
/// default, the full simplex on six vertices, has 5,016,249.
const EXHAUSTIVE_CAP: u128 = 6_000_000;
/// Universe construction cap: faces of the complex, or poset elements.
const UNIVERSE_CAP: usize = 5_000;
/// Longest chain the counting tables accommodate.
const MAX_CHAIN_LEN: usize = 32;

/// A finite poset presented by strict predecessor lists, with the chain
/// counting tables needed for uniform sampling: `counts[x][k-1]` is the
/// number of k-link chains ending at x.
struct ChainUniverse {
    preds: Vec<Vec<u32>>,
    succs: Vec<Vec<u32>>,
    counts: Vec<Vec<u128>>,
    totals: Vec<u128>,
}

impl ChainUniverse {
    fn from_inclusion(faces: &[ElementSet]) -> Result<Self> {
        let n = faces.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if faces[i].len() < faces[j].len() && faces[i].is_subset_of(&faces[j]) {
                    preds[j].push(i as u32);
                    succs[i].push(j as u32);
                }
            }
        }
        Self::build(preds, succs)
    }

    fn from_poset(p: &FinitePoset) -> Result<Self> {
        let n = p.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if p.lt(i, j) {
                    preds[j].push(i as u32);
                    succs[i].push(j as u32);
                }
            }
        }
        Self::build(preds, succs)
    }

    fn build(preds: Vec<Vec<u32>>, succs: Vec<Vec<u32>>) -> Result<Self> {
        let n = preds.len();
        let overflow = || Error::budget("chain count exceeds the counting range");
        let mut counts: Vec<Vec<u128>> = vec![vec![1]; n];
        let mut totals = vec![n as u128];
        for k in 1..MAX_CHAIN_LEN {
            let mut any = false;
            let mut total: u128 = 0;
            for x in 0..n {
                let mut c: u128 = 0;
                for &y in &preds[x] {
                    if let Some(prev) = counts[y as usize].get(k - 1) {
                        c = c.checked_add(*prev).ok_or_else(overflow)?;
                    }
                }
                if c > 0 {
                    // counts[x] grows densely: length k+1 goes at index k.
                    debug_assert_eq!(counts[x].len(), k);
                    counts[x].push(c);
                    any = true;
                    total = total.checked_add(c).ok_or_else(overflow)?;
                }
            }
            if !any {
                break;
            }
            // Rows that did not extend stay short; pad lookups handle it.
            for row in counts.iter_mut() {
                if row.len() == k {
                    row.push(0);
                }
            }
            totals.push(total);
        }
        if totals.len() >= MAX_CHAIN_LEN {
            return Err(Error::budget("chains exceed the supported length"));
        }
        Ok(ChainUniverse {
            preds,
            succs,
            counts,
            totals,
        })
    }

    fn total_chains(&self) -> Option<u128> {
        self.totals.iter().try_fold(0u128, |a, &b| a.checked_add(b))
    }

    /// Visits every chain exactly once, links ascending in the order.
    fn for_each_chain(&self, visit: &mut impl FnMut(&[u32])) {
        fn rec(u: &ChainUniverse, chain: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
            visit(chain);
            let last = *chain.last().unwrap() as usize;
            for &next in &u.succs[last] {
                chain.push(next);
                rec(u, chain, visit);
                chain.pop();
            }
        }
        let mut chain = Vec::new();
        for x in 0..self.preds.len() as u32 {
            chain.push(x);
            rec(self, &mut chain, visit);
            chain.pop();
        }
    }

    /// Draws a uniformly random chain of exactly `len` links.
    fn sample_chain(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let ends: Vec<u128> = (0..self.counts.len())
            .map(|x| self.counts[x].get(len - 1).copied().unwrap_or(0))
            .collect();
        let mut x = pick_weighted(&ends, rng) as u32;
        let mut chain = vec![x];
        for k in (1..len).rev() {
            let weights: Vec<u128> = self.preds[x as usize]
                .iter()
                .map(|&y| self.counts[y as usize].get(k - 1).copied().unwrap_or(0))
                .collect();
            x = self.preds[x as usize][pick_weighted(&weights, rng)];
            chain.push(x);
        }
        chain.reverse();
        chain
    }
}

fn pick_weighted(weights: &[u128], rng: &mut ChaCha8Rng) -> usize {
    let total: u128 = weights.iter().sum();
    assert!(total > 0, "weighted draw from an empty distribution");
    let mut r = rng.gen_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if r < w {
            return i;
        }
        r -= w;
    }
    unreachable!("weights sum to total")
}

/// Ordered set partition counts: `fubini[n]` counts the ways to split
/// an n-set into a sequence of non-empty blocks.
fn fubini_table(n: usize) -> Vec<u128> {
    let binom = binomial_table(n);
    let mut f = vec![0u128; n + 1];
    f[0] = 1;
    for i in 1..=n {
        for k in 1..=i {
            f[i] = f[i]
                .checked_add(binom[i][k].checked_mul(f[i - k]).expect("fubini overflow"))
                .expect("fubini overflow");
        }
    }
    f
}

fn binomial_table(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for k in 1..=i {
            c[i][k] = c[i - 1][k - 1]
                .checked_add(c[i - 1][k])
                .expect("binomial overflow");
        }
    }
    c
}

/// Visits every ordered set partition of `0..len` as a sequence of
/// prefix-union bit masks (strictly growing, last = full set).
fn for_each_prefix_sequence(len: usize, visit: &mut impl FnMut(&[u32])) {
    assert!(len <= 25, "partition enumeration over too many links");
    let full: u32 = if len == 32 { u32::MAX } else { (1 << len) - 1 };
    fn rec(rem: u32, prefix: u32, acc: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if rem == 0 {
            visit(acc);
            return;
        }
        // Standard walk over the non-empty submasks of rem.
        let mut block = rem;
        loop {
            acc.push(prefix | block);
            rec(rem & !block, prefix | block, acc, visit);
            acc.pop();
            block = (block - 1) & rem;
            if block == 0 {
                break;
            }
        }
    }
    rec(full, 0, &mut Vec::with_capacity(len), visit);
}

/// Draws a uniformly random ordered set partition of `0..len`, returned
/// as prefix-union masks.
fn sample_prefix_sequence(
    len: usize,
    fubini: &[u128],
    binom: &[Vec<u128>],
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let mut remaining: Vec<u32> = (0..len as u32).collect();
    let mut prefix: u32 = 0;
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let k = remaining.len();
        let weights: Vec<u128> = (1..=k).map(|j| binom[k][j] * fubini[k - j]).collect();
        let j = pick_weighted(&weights, rng) + 1;
        // Partial shuffle: the first j entries become the block.
        for i in 0..j {
            let pick = rng.gen_range(i..k);
            remaining.swap(i, pick);
        }
        for &pos in &remaining[..j] {
            prefix |= 1 << pos;
        }
        remaining.drain(..j);
        out.push(prefix);
    }
    out
}

/// Outcome of the composite-bound verification.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    /// Human-readable effort description, e.g. `exhaustive` or
    /// `sample n=10000 seed=0xc0ffee`.
    pub mode: String,
    pub checked_alpha: usize,
    pub checked_beta: usize,
    /// Counterexamples; the theorems say this stays empty.
    pub violations: Vec<String>,
}

impl BoundsReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Picks the default effort: exhaustive only when the complex provably
/// has at most 64 faces.
pub fn default_budget(cb: &SimplicialComplex) -> Budget {
    let sample = Budget::Sample {
        count: DEFAULT_SAMPLE_COUNT,
        seed: DEFAULT_SAMPLE_SEED,
    };
    let mut bound: u64 = 0;
    for f in cb.facets() {
        if f.len() >= 7 {
            return sample;
        }
        bound = bound.saturating_add((1u64 << f.len()) - 1);
    }
    if cb.facets().len() > 64 || bound > 4096 {
        return sample;
    }
    let faces: usize = cb.faces_by_dimension().iter().map(Vec::len).sum();
    if faces <= 64 {
        Budget::Exhaustive
    } else {
        sample
    }
}

/// Shared state of the two bound checkers.
struct BoundContext<'a> {
    p: &'a FinitePoset,
    family: &'a FrameFamily,
    pd: &'a DecompositionPoset,
    /// Faces of the complex in canonical order (alpha side universe).
    faces: Vec<ElementSet>,
    min_cl_by_face: HashMap<u32, ElementSet>,
    cl_by_face: HashMap<u32, ElementSet>,
    min_cl_by_set: HashMap<ElementSet, ElementSet>,
}

impl<'a> BoundContext<'a> {
    fn min_cl_face(&mut self, idx: u32) -> ElementSet {
        if let Some(hit) = self.min_cl_by_face.get(&idx) {
            return hit.clone();
        }
        let v = min_closure(self.p, &self.faces[idx as usize]);
        self.min_cl_by_face.insert(idx, v.clone());
        v
    }

    fn cl_face(&mut self, idx: u32) -> ElementSet {
        if let Some(hit) = self.cl_by_face.get(&idx) {
            return hit.clone();
        }
        let v = closure(self.p, &self.faces[idx as usize]);
        self.cl_by_face.insert(idx, v.clone());
        v
    }

    fn min_cl_set(&mut self, s: &ElementSet) -> ElementSet {
        if let Some(hit) = self.min_cl_by_set.get(s) {
            return hit.clone();
        }
        let v = min_closure(self.p, s);
        self.min_cl_by_set.insert(s.clone(), v.clone());
        v
    }

    /// m on a chain of complex faces given by indices into the canonical
    /// face list.
    fn m_of_face_indices(&mut self, idxs: impl Iterator<Item = u32>) -> ElementSet {
        let mut pooled = ElementSet::empty();
        for i in idxs {
            let mc = self.min_cl_face(i);
            pooled = pooled.union(&mc);
        }
        self.p.extreme_elements(&pooled, Direction::Max)
    }

    /// First composite bound on one alpha: the union image of the
    /// m-chain must lie inside the closure of the top face.
    fn check_alpha(&mut self, chain: &[u32], prefixes: &[u32]) -> Option<String> {
        let mut union_of_ms = ElementSet::empty();
        for &mask in prefixes {
            let sigma = self.m_of_face_indices(
                (0..chain.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| chain[i]),
            );
            if self.pd.index_of(&sigma).is_none() {
                return Some(format!(
                    "m image {} is not a partial decomposition",
                    self.p.render_set(&sigma)
                ));
            }
            union_of_ms = union_of_ms.union(&sigma);
        }
        let top = *chain.last().unwrap();
        let cl_top = self.cl_face(top);
        if union_of_ms.is_subset_of(&cl_top) {
            None
        } else {
            Some(format!(
                "u(delta m) = {} escapes Cl(top face {}) = {}",
                self.p.render_set(&union_of_ms),
                self.p.render_set(&self.faces[top as usize]),
                self.p.render_set(&cl_top)
            ))
        }
    }

    /// Well-definedness and monotonicity of m along one chain of faces:
    /// every prefix must map into the decomposition poset, refining the
    /// image of the next prefix.
    fn check_chain_m(&mut self, chain: &[u32]) -> Option<String> {
        let mut prev: Option<usize> = None;
        for k in 1..=chain.len() {
            let sigma = self.m_of_face_indices(chain[..k].iter().copied());
            let Some(idx) = self.pd.index_of(&sigma) else {
                return Some(format!(
                    "m image {} is not a partial decomposition",
                    self.p.render_set(&sigma)
                ));
            };
            if let Some(prev_idx) = prev {
                if !self.pd.poset().leq(prev_idx, idx) {
                    return Some(format!(
                        "m is not monotone: {} does not refine {}",
                        self.p.render_set(&self.pd.elements()[prev_idx]),
                        self.p.render_set(&sigma)
                    ));
                }
            }
            prev = Some(idx);
        }
        None
    }

    /// Totality of u on one refinement chain: the union must be a face.
    fn check_chain_u(&mut self, chain: &[u32]) -> Option<String> {
        let union = union_all(chain.iter().map(|&i| &self.pd.elements()[i as usize]));
        if self.family.sigmas().iter().any(|s| union.is_subset_of(s)) {
            None
        } else {
            Some(format!(
                "u image {} is not a face; the family fails the extension property",
                self.p.render_set(&union)
            ))
        }
    }

    /// Second composite bound on one beta: m of the union chain must
    /// dominate the largest of the chain minima.
    fn check_beta(&mut self, chain: &[u32], prefixes: &[u32]) -> Option<String> {
        let mut pooled = ElementSet::empty();
        let mut faces_chain: Vec<ElementSet> = Vec::new();
        for &mask in prefixes {
            for i in (0..chain.len()).filter(|i| mask >> i & 1 == 1) {
                pooled = pooled.union(&self.pd.elements()[chain[i] as usize]);
            }
            let union = pooled.clone();
            if !self.family.sigmas().iter().any(|s| union.is_subset_of(s)) {
                return Some(format!(
                    "u image {} is not a face; the family fails the extension property",
                    self.p.render_set(&union)
                ));
            }
            if faces_chain.last() != Some(&union) {
                faces_chain.push(union);
            }
        }
        let mut m_pool = ElementSet::empty();
        for f in &faces_chain {
            let mc = self.min_cl_set(f);
            m_pool = m_pool.union(&mc);
        }
        let m_result = self.p.extreme_elements(&m_pool, Direction::Max);
        let Some(m_idx) = self.pd.index_of(&m_result) else {
            return Some(format!(
                "m image {} is not a partial decomposition",
                self.p.render_set(&m_result)
            ));
        };
        // The largest of the per-block minima, taken in refinement order.
        let minima: ElementSet = prefixes
            .iter()
            .map(|mask| chain[mask.trailing_zeros() as usize] as usize)
            .collect();
        let rhs = self.pd.poset().extreme_elements(&minima, Direction::Max);
        assert_eq!(rhs.len(), 1, "chain minima are totally ordered");
        let rhs_idx = rhs.members()[0];
        if self.pd.poset().leq(rhs_idx, m_idx) {
            None
        } else {
            Some(format!(
                "m(delta u) = {} does not dominate {}",
                self.p.render_set(&m_result),
                self.p.render_set(&self.pd.elements()[rhs_idx])
            ))
        }
    }
}

/// Verifies the two composite inequalities over chains of chains, on
/// both sides, exhaustively or by uniform sampling. The report carries
/// every counterexample found; the theorems predict none whenever the
/// family has the extension property.
pub fn verify_composite_bounds(
    p: &FinitePoset,
    family: &FrameFamily,
    cb: &SimplicialComplex,
    pd: &DecompositionPoset,
    budget: Budget,
) -> Result<BoundsReport> {
    let face_bound: u64 = cb
        .facets()
        .iter()
        .map(|f| 1u64 << f.len().min(40))
        .fold(0, u64::saturating_add);
    if face_bound > 2_000_000 {
        return Err(Error::budget(
            "complex has too many faces to enumerate; rebuild with a smaller instance",
        ));
    }
    let faces: Vec<ElementSet> = cb.faces_by_dimension().into_iter().flatten().collect();
    if faces.len() > UNIVERSE_CAP || pd.len() > UNIVERSE_CAP {
        return Err(Error::budget(format!(
            "chain universes of {} faces / {} decompositions exceed the cap ({UNIVERSE_CAP})",
            faces.len(),
            pd.len()
        )));
    }
    let alpha_universe = ChainUniverse::from_inclusion(&faces)?;
    let beta_universe = ChainUniverse::from_poset(pd.poset())?;

    let mut ctx = BoundContext {
        p,
        family,
        pd,
        faces,
        min_cl_by_face: HashMap::new(),
        cl_by_face: HashMap::new(),
        min_cl_by_set: HashMap::new(),
    };

    let mut violations = Vec::new();
    let mut checked_alpha = 0usize;
    let mut checked_beta = 0usize;
    let mode;

    match budget {
        Budget::Exhaustive => {
            mode = "exhaustive".to_string();
            for (universe, is_alpha) in [(&alpha_universe, true), (&beta_universe, false)] {
                let max_len = universe.totals.len();
                let fubini = fubini_table(max_len);
                let total: u128 = universe
                    .totals
                    .iter()
                    .enumerate()
                    .map(|(i, t)| t * fubini[i + 1])
                    .sum();
                if total > EXHAUSTIVE_CAP {
                    return Err(Error::budget(format!(
                        "{total} chain-of-chain elements exceed the exhaustive cap \
                         ({EXHAUSTIVE_CAP}); use sampling"
                    )));
                }
                let mut chains: Vec<Vec<u32>> = Vec::new();
                universe.for_each_chain(&mut |c| chains.push(c.to_vec()));
                for chain in &chains {
                    for_each_prefix_sequence(chain.len(), &mut |prefixes| {
                        let fail = if is_alpha {
                            checked_alpha += 1;
                            ctx.check_alpha(chain, prefixes)
                        } else {
                            checked_beta += 1;
                            ctx.check_beta(chain, prefixes)
                        };
                        if let Some(v) = fail {
                            violations.push(v);
                        }
                    });
                }
            }
        }
        Budget::Sample { count, seed } => {
            mode = format!("sample n={count} seed={seed:#x}");
            for (universe, is_alpha) in [(&alpha_universe, true), (&beta_universe, false)] {
                let max_len = universe.totals.len();
                let fubini = fubini_table(max_len.max(1));
                let binom = binomial_table(max_len.max(1));
                let weights: Vec<u128> = universe
                    .totals
                    .iter()
                    .enumerate()
                    .map(|(i, t)| t * fubini[i + 1])
                    .collect();
                // Independent streams per side keep the two draws stable
                // under changes to the other side.
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ if is_alpha { 0 } else { 1 });
                for _ in 0..count {
                    let len = pick_weighted(&weights, &mut rng) + 1;
                    let chain = universe.sample_chain(len, &mut rng);
                    let prefixes = sample_prefix_sequence(len, &fubini, &binom, &mut rng);
                    let fail = if is_alpha {
                        checked_alpha += 1;
                        ctx.check_alpha(&chain, &prefixes)
                    } else {
                        checked_beta += 1;
                        ctx.check_beta(&chain, &prefixes)
                    };
                    if let Some(v) = fail {
                        violations.push(v);
                    }
                }
            }
        }
    }
    violations.sort_unstable();
    violations.dedup();
    Ok(BoundsReport {
        mode,
        checked_alpha,
        checked_beta,
        violations,
    })
}

/// Outcome of the per-chain map property checks.
#[derive(Clone, Debug)]
pub struct MapPropertyReport {
    pub mode: String,
    /// Chains of complex faces checked for m-membership and
    /// monotonicity.
    pub checked_m: usize,
    /// Refinement chains checked for u producing a face.
    pub checked_u: usize,
    pub violations: Vec<String>,
}

impl MapPropertyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, chain by chain, that m lands in the decomposition poset and
/// is monotone, and that u turns refinement chains into faces. On a
/// family without the extension property the u side reports the
/// non-face witnesses rather than erroring.
pub fn verify_map_properties(
    p: &FinitePoset,
    family: &FrameFamily,
    cb: &SimplicialComplex,
    pd: &DecompositionPoset,
    budget: Budget,
) -> Result<MapPropertyReport> {
    let face_bound: u64 = cb
        .facets()
        .iter()
        .map(|f| 1u64 << f.len().min(40))
        .fold(0, u64::saturating_add);
    if face_bound > 2_000_000 {
        return Err(Error::budget(
            "complex has too many faces to enumerate; rebuild with a smaller instance",
        ));
    }
    let faces: Vec<ElementSet> = cb.faces_by_dimension().into_iter().flatten().collect();
    if faces.len() > UNIVERSE_CAP || pd.len() > UNIVERSE_CAP {
        return Err(Error::budget(format!(
            "chain universes of {} faces / {} decompositions exceed the cap ({UNIVERSE_CAP})",
            faces.len(),
            pd.len()
        )));
    }
    let m_universe = ChainUniverse::from_inclusion(&faces)?;
    let u_universe = ChainUniverse::from_poset(pd.poset())?;

    let mut ctx = BoundContext {
        p,
        family,
        pd,
        faces,
        min_cl_by_face: HashMap::new(),
        cl_by_face: HashMap::new(),
        min_cl_by_set: HashMap::new(),
    };

    let mut violations = Vec::new();
    let mut checked_m = 0usize;
    let mut checked_u = 0usize;
    let mode;

    match budget {
        Budget::Exhaustive => {
            mode = "exhaustive".to_string();
            for (universe, is_m) in [(&m_universe, true), (&u_universe, false)] {
                let total = universe
                    .total_chains()
                    .ok_or_else(|| Error::budget("chain count exceeds the counting range"))?;
                if total > EXHAUSTIVE_CAP {
                    return Err(Error::budget(format!(
                        "{total} chains exceed the exhaustive cap ({EXHAUSTIVE_CAP}); \
                         use sampling"
                    )));
                }
                universe.for_each_chain(&mut |chain| {
                    let fail = if is_m {
                        checked_m += 1;
                        ctx.check_chain_m(chain)
                    } else {
                        checked_u += 1;
                        ctx.check_chain_u(chain)
                    };
                    violations.extend(fail);
                });
            }
        }
        Budget::Sample { count, seed } => {
            mode = format!("sample n={count} seed={seed:#x}");
            for (universe, is_m) in [(&m_universe, true), (&u_universe, false)] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ if is_m { 0 } else { 1 });
                for _ in 0..count {
                    let len = pick_weighted(&universe.totals, &mut rng) + 1;
                    let chain = universe.sample_chain(len, &mut rng);
                    let fail = if is_m {
                        checked_m += 1;
                        ctx.check_chain_m(&chain)
                    } else {
                        checked_u += 1;
                        ctx.check_chain_u(&chain)
                    };
                    violations.extend(fail);
                }
            }
        }
    }
    violations.sort_unstable();
    violations.dedup();
    Ok(MapPropertyReport {
        mode,
        checked_m,
        checked_u,
        violations,
    })
}

/// Which comparison map to realize simplicially.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapSide {
    /// m: double subdivision of the complex into the decomposition
    /// order complex.
    M,
    /// u: subdivided decomposition order complex into the subdivided
    /// complex.
    U,
}

const SD_FACE_CAP: usize = 3_000;
const SD_CHAIN_CAP: u128 = 100_000;

fn budget_advice(what: &str, n: u128, cap: u128) -> Error {
    Error::budget(format!(
        "{what} needs {n} simplices, over the cap ({cap}); \
         compare Betti numbers of the two complexes instead"
    ))
}

/// Subdivision with explosion guards: counts chains before enumerating
/// maximal ones.
fn guarded_subdivision(
    k: &SimplicialComplex,
    what: &str,
) -> Result<(SimplicialComplex, Vec<ElementSet>)> {
    let bound: u64 = k
        .facets()
        .iter()
        .map(|f| 1u64 << f.len().min(40))
        .fold(0, u64::saturating_add);
    if bound > 2_000_000 {
        return Err(budget_advice(what, bound as u128, 2_000_000));
    }
    // Check the face count before face_poset builds its quadratic
    // comparability relation.
    let num_faces: usize = k.faces_by_dimension().iter().map(Vec::len).sum();
    if num_faces > SD_FACE_CAP {
        return Err(budget_advice(what, num_faces as u128, SD_FACE_CAP as u128));
    }
    let (poset, dictionary) = face_poset(k)?;
    let universe = ChainUniverse::from_poset(&poset)?;
    let chains = universe
        .total_chains()
        .ok_or_else(|| Error::budget("chain count exceeds the counting range"))?;
    if chains > SD_CHAIN_CAP {
        return Err(budget_advice(what, chains, SD_CHAIN_CAP));
    }
    Ok((poset.order_complex(), dictionary))
}

/// Builds the simplicial realization of the chosen map and reports
/// whether the induced map on rational homology is an isomorphism in
/// every degree. Small instances only; size guards return budget
/// errors that advise the Betti-comparison fallback.
pub fn induced_homology_iso(
    p: &FinitePoset,
    cb: &SimplicialComplex,
    pd: &DecompositionPoset,
    side: MapSide,
) -> Result<InducedMapReport> {
    match side {
        MapSide::U => {
            // Vertices of sd(order complex of PD) are chains in PD;
            // send each to its union, a vertex of sd(CB).
            let pd_universe = ChainUniverse::from_poset(pd.poset())?;
            let pd_chains = pd_universe
                .total_chains()
                .ok_or_else(|| Error::budget("chain count exceeds the counting range"))?;
            if pd_chains > SD_FACE_CAP as u128 {
                return Err(budget_advice(
                    "the decomposition order complex",
                    pd_chains,
                    SD_FACE_CAP as u128,
                ));
            }
            let delta_pd = pd.order_complex();
            let (k1, chains_dict) =
                guarded_subdivision(&delta_pd, "the subdivided decomposition complex")?;
            let (k2, faces_dict) = guarded_subdivision(cb, "the subdivided complex")?;
            let face_index: HashMap<&ElementSet, usize> =
                faces_dict.iter().enumerate().map(|(i, f)| (f, i)).collect();
            let mut vertex_map = Vec::with_capacity(chains_dict.len());
            for chain in &chains_dict {
                let union = union_all(chain.iter().map(|i| &pd.elements()[i]));
                let Some(&v) = face_index.get(&union) else {
                    return Err(Error::invalid(format!(
                        "union {} of a chain is not a face; \
                         the family fails the extension property",
                        p.render_set(&union)
                    )));
                };
                vertex_map.push(v);
            }
            homology_map_is_iso(&k1, &k2, &vertex_map)
        }
        MapSide::M => {
            // Vertices of sd(sd(CB)) are chains of faces of CB; send
            // each through m to a vertex of the PD order complex.
            let (sd_cb, faces_dict) = guarded_subdivision(cb, "the subdivided complex")?;
            let (k1, chain_dict) = guarded_subdivision(&sd_cb, "the doubly subdivided complex")?;
            let k2 = pd.order_complex();
            let mut min_cl_cache: HashMap<usize, ElementSet> = HashMap::new();
            let mut vertex_map = Vec::with_capacity(chain_dict.len());
            for chain in &chain_dict {
                let mut pooled = ElementSet::empty();
                for i in chain.iter() {
                    let mc = min_cl_cache
                        .entry(i)
                        .or_insert_with(|| min_closure(p, &faces_dict[i]))
                        .clone();
                    pooled = pooled.union(&mc);
                }
                let sigma = p.extreme_elements(&pooled, Direction::Max);
                let Some(v) = pd.index_of(&sigma) else {
                    return Err(Error::invalid(format!(
                        "m image {} is not a partial decomposition",
                        p.render_set(&sigma)
                    )));
                };
                vertex_map.push(v);
            }
            homology_map_is_iso(&k1, &k2, &vertex_map)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_cb, build_pd, check_ep, FrameFamily};

    fn es(v: &[usize]) -> ElementSet {
        ElementSet::new(v.to_vec())
    }

    fn boolean3() -> FinitePoset {
        FinitePoset::from_covers(6, &[(0, 3), (0, 4), (1, 3), (1, 5), (2, 4), (2, 5)]).unwrap()
    }

    fn three_lines() -> (FinitePoset, FrameFamily) {
        let p = FinitePoset::from_covers(3, &[]).unwrap();
        let family = FrameFamily::new(&p, vec![es(&[0, 1]), es(&[0, 2]), es(&[1, 2])]).unwrap();
        (p, family)
    }

    fn four_lines() -> (FinitePoset, FrameFamily) {
        let p = FinitePoset::from_covers(4, &[]).unwrap();
        let frames: Vec<ElementSet> = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| es(&[i, j])))
            .collect();
        (p.clone(), FrameFamily::new(&p, frames).unwrap())
    }

    fn non_ep_instance() -> (FinitePoset, FrameFamily) {
        let p = FinitePoset::from_covers(4, &[(0, 2)]).unwrap();
        let family = FrameFamily::new(&p, vec![es(&[0, 1]), es(&[2, 3])]).unwrap();
        (p, family)
    }

    #[test]
    fn closure_adds_exactly_the_existing_meets() {
        let p = boolean3();
        assert_eq!(
            closure(&p, &es(&[3, 4])),
            es(&[0, 3, 4]),
            "pairs meet in their atom"
        );
        assert_eq!(closure(&p, &es(&[3, 4, 5])), es(&[0, 1, 2, 3, 4, 5]));
        assert_eq!(
            closure(&p, &es(&[0, 5])),
            es(&[0, 5]),
            "no common lower bound"
        );
        assert_eq!(closure(&p, &es(&[2])), es(&[2]));
    }

    #[test]
    fn closure_is_a_closure_operation() {
        let p = boolean3();
        for mask in 1u32..64 {
            let sigma: ElementSet = (0..6).filter(|v| mask >> v & 1 == 1).collect();
            let cl = closure(&p, &sigma);
            assert!(sigma.is_subset_of(&cl), "extensive at {sigma}");
            assert_eq!(closure(&p, &cl), cl, "idempotent at {sigma}");
            for sup_mask in 1u32..64 {
                if sup_mask & mask == mask {
                    let sup: ElementSet = (0..6).filter(|v| sup_mask >> v & 1 == 1).collect();
                    assert!(
                        cl.is_subset_of(&closure(&p, &sup)),
                        "monotone at {sigma} within {sup}"
                    );
                }
            }
        }
    }

    #[test]
    fn closure_preserves_the_witnessing_frame() {
        // Faces of the complex keep their frame after closing.
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2]), es(&[0, 5])]).unwrap();
        for sigma_mask in 1u32..64 {
            let sigma: ElementSet = (0..6).filter(|v| sigma_mask >> v & 1 == 1).collect();
            for sig in family.sigmas() {
                if sigma.is_subset_of(sig) {
                    assert!(
                        closure(&p, &sigma).is_subset_of(sig),
                        "closure of {sigma} escapes its join closure"
                    );
                }
            }
        }
    }

    #[test]
    fn chain_constructors_validate_their_input() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let pd = build_pd(&p, &family);

        assert!(ChainInPoset::of_cb_faces(&family, vec![]).is_err());
        assert!(
            ChainInPoset::of_cb_faces(&family, vec![es(&[3]), es(&[3, 4])]).is_ok(),
            "nested faces form a chain"
        );
        assert!(
            ChainInPoset::of_cb_faces(&family, vec![es(&[3, 4]), es(&[3])]).is_err(),
            "descending is rejected"
        );
        let (lines_p, lines_family) = three_lines();
        let _ = lines_p;
        assert!(
            ChainInPoset::of_cb_faces(&lines_family, vec![es(&[0, 1, 2])]).is_err(),
            "the three lines never span a common face"
        );

        assert!(ChainInPoset::of_refinement(&pd, vec![es(&[0]), es(&[0, 1])]).is_ok());
        assert!(
            ChainInPoset::of_refinement(&pd, vec![es(&[0, 1]), es(&[0])]).is_err(),
            "refinement runs the other way"
        );
        assert!(
            ChainInPoset::of_refinement(&pd, vec![es(&[3, 5])]).is_err(),
            "two pairs sharing an atom are no decomposition"
        );

        // m needs faces; u reads any chain. The mismatch is caught at
        // the map, not the constructor.
        let face_chain = ChainInPoset::of_cb_faces(&family, vec![es(&[3])]).unwrap();
        assert!(
            map_u(&family, &face_chain).is_face,
            "union of faces is the top face"
        );
        let ref_chain = ChainInPoset::of_refinement(&pd, vec![es(&[0])]).unwrap();
        assert!(map_m(&p, &ref_chain).is_err());
    }

    #[test]
    fn map_m_collapses_a_nested_chain_to_its_decomposition() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        // Cl({3,4}) = {0,3,4} with minimum {0}; Cl({3}) = {3}.
        let c = ChainInPoset::of_cb_faces(&family, vec![es(&[3]), es(&[3, 4])]).unwrap();
        assert_eq!(
            map_m(&p, &c).unwrap(),
            es(&[3]),
            "3 dominates the pooled minima"
        );
        let single = ChainInPoset::of_cb_faces(&family, vec![es(&[0, 1])]).unwrap();
        assert_eq!(
            map_m(&p, &single).unwrap(),
            es(&[0, 1]),
            "decompositions are fixed"
        );
    }

    #[test]
    fn map_m_lands_in_the_partial_decomposition_poset() {
        let (p, family) = three_lines();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let faces: Vec<ElementSet> = cb.faces_by_dimension().into_iter().flatten().collect();
        // All single faces and all nested pairs.
        for f in &faces {
            let c = ChainInPoset::of_cb_faces(&family, vec![f.clone()]).unwrap();
            let m = map_m(&p, &c).unwrap();
            assert!(pd.index_of(&m).is_some(), "m({f}) = {m} outside the poset");
        }
        for a in &faces {
            for b in &faces {
                if a.is_subset_of(b) && a.len() < b.len() {
                    let c = ChainInPoset::of_cb_faces(&family, vec![a.clone(), b.clone()]).unwrap();
                    let m = map_m(&p, &c).unwrap();
                    assert!(pd.index_of(&m).is_some());
                }
            }
        }
    }

    #[test]
    fn map_m_is_monotone_in_the_chain() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let pd = build_pd(&p, &family);
        let short = ChainInPoset::of_cb_faces(&family, vec![es(&[0, 3])]).unwrap();
        let long = ChainInPoset::of_cb_faces(&family, vec![es(&[0, 3]), es(&[0, 3, 5])]).unwrap();
        let m_short = map_m(&p, &short).unwrap();
        let m_long = map_m(&p, &long).unwrap();
        let i = pd.index_of(&m_short).unwrap();
        let j = pd.index_of(&m_long).unwrap();
        assert!(pd.poset().leq(i, j), "{m_short} should refine {m_long}");
    }

    #[test]
    fn map_u_unions_the_chain_and_flags_faces() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let pd = build_pd(&p, &family);
        let c = ChainInPoset::of_refinement(&pd, vec![es(&[0]), es(&[0, 1])]).unwrap();
        let img = map_u(&family, &c);
        assert_eq!(img.union, es(&[0, 1]));
        assert!(img.is_face);
    }

    #[test]
    fn map_u_detects_the_extension_property_failure() {
        let (p, family) = non_ep_instance();
        let pd = build_pd(&p, &family);
        assert!(!check_ep(&family, &pd).holds);
        let c = ChainInPoset::of_refinement(&pd, vec![es(&[0]), es(&[2])]).unwrap();
        let img = map_u(&family, &c);
        assert_eq!(img.union, es(&[0, 2]));
        assert!(!img.is_face, "no frame contains both endpoints");
    }

    #[test]
    fn map_u_is_total_on_faces_when_ep_holds() {
        let (p, family) = three_lines();
        let _ = p;
        let pd = build_pd(&p, &family);
        // Every chain in a 6-element poset, by brute force.
        let n = pd.len();
        for mask in 1u32..(1 << n) {
            let idxs: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let is_chain = idxs.iter().all(|&i| {
                idxs.iter()
                    .all(|&j| pd.poset().leq(i, j) || pd.poset().leq(j, i))
            });
            if !is_chain {
                continue;
            }
            let mut sets: Vec<(usize, ElementSet)> = idxs
                .iter()
                .map(|&i| (i, pd.elements()[i].clone()))
                .collect();
            sets.sort_by(|a, b| {
                if a.0 == b.0 {
                    std::cmp::Ordering::Equal
                } else if pd.poset().leq(a.0, b.0) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            });
            let chain =
                ChainInPoset::of_refinement(&pd, sets.into_iter().map(|e| e.1).collect()).unwrap();
            assert!(map_u(&family, &chain).is_face);
        }
    }

    #[test]
    fn default_budget_follows_the_face_count() {
        let (p, family) = three_lines();
        let cb = build_cb(&p, &family);
        assert_eq!(default_budget(&cb), Budget::Exhaustive, "six faces");

        let p6 = boolean3();
        let fam6 = FrameFamily::new(&p6, vec![es(&[0, 1, 2])]).unwrap();
        let cb6 = build_cb(&p6, &fam6);
        assert_eq!(
            default_budget(&cb6),
            Budget::Exhaustive,
            "63 faces squeak under"
        );

        let p7 = FinitePoset::from_covers(7, &[]).unwrap();
        let fam7 = FrameFamily::new(&p7, vec![es(&[0, 1, 2, 3, 4, 5, 6])]).unwrap();
        let cb7 = build_cb(&p7, &fam7);
        assert_eq!(
            default_budget(&cb7),
            Budget::Sample {
                count: DEFAULT_SAMPLE_COUNT,
                seed: DEFAULT_SAMPLE_SEED
            },
            "127 faces exceed the exhaustive threshold"
        );
    }

    #[test]
    fn composite_bounds_hold_exhaustively_on_three_lines() {
        let (p, family) = three_lines();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = verify_composite_bounds(&p, &family, &cb, &pd, Budget::Exhaustive).unwrap();
        assert!(report.holds(), "violations: {:?}", report.violations);
        // Hand count: 6 faces and 6 poset elements each give 12 chains,
        // hence 12 single-link plus 6 three-way split chain-of-chains.
        assert_eq!(report.checked_alpha, 24);
        assert_eq!(report.checked_beta, 24);
        assert_eq!(report.mode, "exhaustive");
    }

    #[test]
    fn composite_bounds_hold_exhaustively_on_the_boolean_fixture() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = verify_composite_bounds(&p, &family, &cb, &pd, Budget::Exhaustive).unwrap();
        assert!(report.holds(), "violations: {:?}", report.violations);

        // Independent count of the complex side: the complex is the full
        // simplex on six vertices, so chains with l links are functions
        // from the vertices onto at least {1..l}, counted by
        // inclusion-exclusion, and each chain carries one ordered set
        // partition per Fubini number.
        let fubini = fubini_table(pd.len().max(6));
        let binom = binomial_table(7);
        let mut expected_alpha: u128 = 0;
        for l in 1..=6usize {
            let mut t: i128 = 0;
            for i in 0..=l {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                t += sign * (binom[l][i] as i128) * ((l + 1 - i) as i128).pow(6);
            }
            expected_alpha += t as u128 * fubini[l];
        }
        assert_eq!(expected_alpha, 5_016_249);
        assert_eq!(report.checked_alpha as u128, expected_alpha);

        // Independent count of the poset side: brute-force chains over
        // the 13 partial decompositions.
        let n = pd.len();
        let mut expected_beta: u128 = 0;
        for mask in 1u32..(1 << n) {
            let idxs: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let is_chain = idxs.iter().all(|&i| {
                idxs.iter()
                    .all(|&j| pd.poset().leq(i, j) || pd.poset().leq(j, i))
            });
            if is_chain {
                expected_beta += fubini[idxs.len()];
            }
        }
        assert_eq!(report.checked_beta as u128, expected_beta);
    }

    #[test]
    fn sampled_bounds_are_deterministic_per_seed() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let budget = Budget::Sample {
            count: 400,
            seed: DEFAULT_SAMPLE_SEED,
        };
        let a = verify_composite_bounds(&p, &family, &cb, &pd, budget).unwrap();
        let b = verify_composite_bounds(&p, &family, &cb, &pd, budget).unwrap();
        assert!(a.holds());
        assert_eq!(a.checked_alpha, b.checked_alpha);
        assert_eq!(a.checked_beta, b.checked_beta);
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.mode, "sample n=400 seed=0xc0ffee");
    }

    #[test]
    fn map_properties_hold_exhaustively_on_three_lines() {
        let (p, family) = three_lines();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = verify_map_properties(&p, &family, &cb, &pd, Budget::Exhaustive).unwrap();
        assert!(report.holds(), "violations: {:?}", report.violations);
        // Hand count: the circle has 3 vertices + 3 edges with two
        // vertices under each edge, 12 chains; the poset mirrors it.
        assert_eq!(report.checked_m, 12);
        assert_eq!(report.checked_u, 12);
        assert_eq!(report.mode, "exhaustive");
    }

    #[test]
    fn map_property_counts_match_the_boolean_chain_oracle() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = verify_map_properties(&p, &family, &cb, &pd, Budget::Exhaustive).unwrap();
        assert!(report.holds(), "violations: {:?}", report.violations);

        // Chains of l links among the faces of the full simplex on six
        // vertices are functions onto at least {1..l}, counted by
        // inclusion-exclusion.
        let binom = binomial_table(7);
        let mut expected_m: i128 = 0;
        for l in 1..=6usize {
            for i in 0..=l {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                expected_m += sign * (binom[l][i] as i128) * ((l + 1 - i) as i128).pow(6);
            }
        }
        assert_eq!(expected_m, 9365);
        assert_eq!(report.checked_m as i128, expected_m);

        // Poset side by brute force over the 13 partial decompositions.
        let n = pd.len();
        let mut expected_u = 0usize;
        for mask in 1u32..(1 << n) {
            let idxs: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let is_chain = idxs.iter().all(|&i| {
                idxs.iter()
                    .all(|&j| pd.poset().leq(i, j) || pd.poset().leq(j, i))
            });
            if is_chain {
                expected_u += 1;
            }
        }
        assert_eq!(report.checked_u, expected_u);
    }

    #[test]
    fn map_property_check_flags_the_non_ep_union() {
        let (p, family) = non_ep_instance();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = verify_map_properties(&p, &family, &cb, &pd, Budget::Exhaustive).unwrap();
        assert!(!report.holds(), "the union {{0,2}} has no containing frame");
        assert!(
            report.violations.iter().any(|v| v.contains("{0,2}")),
            "missing witness in {:?}",
            report.violations
        );
        assert!(
            report.violations.windows(2).all(|w| w[0] <= w[1]),
            "violations come sorted"
        );
    }

    #[test]
    fn sampled_map_properties_are_deterministic_per_seed() {
        let p = boolean3();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2])]).unwrap();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let budget = Budget::Sample {
            count: 400,
            seed: DEFAULT_SAMPLE_SEED,
        };
        let a = verify_map_properties(&p, &family, &cb, &pd, budget).unwrap();
        let b = verify_map_properties(&p, &family, &cb, &pd, budget).unwrap();
        assert!(a.holds());
        assert_eq!(a.checked_m, 400);
        assert_eq!((a.checked_m, a.checked_u), (b.checked_m, b.checked_u));
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.mode, "sample n=400 seed=0xc0ffee");
    }

    #[test]
    fn induced_map_u_is_an_isomorphism_on_the_circle_instance() {
        let (p, family) = three_lines();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = induced_homology_iso(&p, &cb, &pd, MapSide::U).unwrap();
        assert!(report.all_iso, "{:?}", report.degrees);
        assert_eq!(report.degrees[1].rank_domain, 1, "both sides are circles");
    }

    #[test]
    fn induced_map_m_matches_the_wedge_rank_on_four_lines() {
        let (p, family) = four_lines();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let report = induced_homology_iso(&p, &cb, &pd, MapSide::M).unwrap();
        assert!(report.all_iso, "{:?}", report.degrees);
        assert_eq!(
            (report.degrees[0].rank_domain, report.degrees[1].rank_domain),
            (1, 3),
            "unreduced ranks of the complete graph on four vertices"
        );
    }

    #[test]
    fn induced_map_checks_respect_the_budget() {
        // A single frame of seven incomparable elements: the complex is
        // a full simplex whose subdivision chains overflow the caps.
        let p = FinitePoset::from_covers(7, &[]).unwrap();
        let family = FrameFamily::new(&p, vec![es(&[0, 1, 2, 3, 4, 5, 6])]).unwrap();
        let cb = build_cb(&p, &family);
        let pd = build_pd(&p, &family);
        let err = induced_homology_iso(&p, &cb, &pd, MapSide::M).unwrap_err();
        assert!(matches!(err, Error::Budget(_)), "{err}");
        assert!(err.to_string().contains("Betti"), "advice missing: {err}");
    }
}
