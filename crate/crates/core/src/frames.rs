//! Frames and the structures they generate.
//!
//! A frame is an antichain tau whose join-closure Sigma(tau) is meet
//! friendly: any subset of Sigma(tau) with a common lower bound has a
//! meet, and that meet stays inside Sigma(tau). A family of frames
//! determines three objects. The common basis complex CB has the
//! Sigma(tau) as facet candidates. The partial decomposition poset PD
//! collects the antichains sigma that sit inside some Sigma(tau) with
//! no frame element below two members of sigma; the decomposition poset
//! D keeps those sigma that additionally cover the whole frame. Both
//! posets are ordered by refinement.
//!
//! The extension property EP asks that comparable PD members share a
//! witnessing frame; it governs whether the union map on chains lands
//! in CB, and several dimension bounds below apply only when it holds.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::homology::SimplicialComplex;
use crate::poset::{ElementSet, FinitePoset};

/// Largest frame the subset-enumeration routines accept.
const MAX_FRAME_SIZE: usize = 24;
/// Largest frame for which set partitions are enumerated.
const MAX_PARTITION_SIZE: usize = 12;

/// An antichain generating a join-closed, meet-friendly subposet.
/// Validity is checked by [`validate_frame`]; the type itself is a
/// plain carrier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Frame {
    tau: ElementSet,
}

impl Frame {
    pub fn new(tau: ElementSet) -> Self {
        Frame { tau }
    }

    pub fn elements(&self) -> &ElementSet {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// All joins of non-empty subsets of `tau` that exist in the poset,
/// `tau` itself included. Cost is `2^|tau|` join queries; inputs are
/// capped at [`MAX_FRAME_SIZE`] elements.
pub fn sigma_of(p: &FinitePoset, tau: &ElementSet) -> ElementSet {
    assert!(!tau.is_empty(), "sigma of an empty set");
    assert!(
        tau.len() <= MAX_FRAME_SIZE,
        "frame of {} elements exceeds the enumeration budget",
        tau.len()
    );
    let members = tau.members();
    let mut out: BTreeSet<usize> = members.iter().copied().collect();
    for mask in 1u32..(1 << members.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        let subset: Vec<usize> = (0..members.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| members[i])
            .collect();
        if let Some(j) = p.join_of(&ElementSet::new(subset)) {
            out.insert(j);
        }
    }
    out.into_iter().collect()
}

/// Outcome of frame validation; failures carry a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameVerdict {
    Valid,
    /// Two comparable elements inside the candidate.
    NotAntichain {
        lower: usize,
        upper: usize,
    },
    /// A pair in Sigma(tau) with a common lower bound whose meet is
    /// missing (`None`) or lies outside Sigma(tau).
    MeetViolation {
        pair: (usize, usize),
        meet: Option<usize>,
    },
}

impl FrameVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, FrameVerdict::Valid)
    }
}

impl std::fmt::Display for FrameVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameVerdict::Valid => write!(f, "valid"),
            FrameVerdict::NotAntichain { lower, upper } => {
                write!(f, "not an antichain: {lower} < {upper}")
            }
            FrameVerdict::MeetViolation {
                pair: (x, y),
                meet: None,
            } => {
                write!(f, "elements {x}, {y} have common lower bounds but no meet")
            }
            FrameVerdict::MeetViolation {
                pair: (x, y),
                meet: Some(m),
            } => {
                write!(f, "meet {m} of {x}, {y} escapes the join closure")
            }
        }
    }
}

/// Checks the two frame conditions: `tau` is an antichain, and every
/// subset of Sigma(tau) with a common lower bound has its meet inside
/// Sigma(tau).
///
/// Only pairs are examined. This is equivalent to the subset condition:
/// a subset with a common lower bound shrinks two elements at a time,
/// since replacing x, y by their meet preserves the set of common lower
/// bounds. The equivalence is cross-checked exhaustively in tests.
pub fn validate_frame(p: &FinitePoset, tau: &ElementSet) -> FrameVerdict {
    assert!(!tau.is_empty(), "empty frame candidate");
    for &x in tau.members() {
        for &y in tau.members() {
            if x != y && p.leq(x, y) {
                return FrameVerdict::NotAntichain { lower: x, upper: y };
            }
        }
    }
    let sigma = sigma_of(p, tau);
    let elems = sigma.members();
    for (i, &x) in elems.iter().enumerate() {
        for &y in &elems[i + 1..] {
            if p.lower_bounds(&ElementSet::new(vec![x, y])).count_ones(..) == 0 {
                continue;
            }
            match p.meet_of(&ElementSet::new(vec![x, y])) {
                Some(m) if sigma.contains(m) => {}
                other => {
                    return FrameVerdict::MeetViolation {
                        pair: (x, y),
                        meet: other,
                    };
                }
            }
        }
    }
    FrameVerdict::Valid
}

/// A validated, deduplicated, canonically ordered family of frames with
/// their join closures precomputed. Constructed against a specific
/// poset; use it only with that poset.
#[derive(Clone, Debug)]
pub struct FrameFamily {
    frames: Vec<Frame>,
    sigmas: Vec<ElementSet>,
    max_frame_size: usize,
}

impl FrameFamily {
    pub fn new(p: &FinitePoset, frames: Vec<ElementSet>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("frame family is empty"));
        }
        let mut frames = frames;
        frames.sort_unstable();
        frames.dedup();
        for tau in &frames {
            if tau.is_empty() {
                return Err(Error::invalid("empty frame"));
            }
            if tau.len() > MAX_FRAME_SIZE {
                return Err(Error::budget(format!(
                    "frame of {} elements exceeds the enumeration budget ({MAX_FRAME_SIZE})",
                    tau.len()
                )));
            }
            if let Some(&top) = tau.members().last() {
                if top >= p.len() {
                    return Err(Error::invalid(format!(
                        "frame {tau} mentions element {top}, poset has {}",
                        p.len()
                    )));
                }
            }
            let verdict = validate_frame(p, tau);
            if !verdict.is_valid() {
                return Err(Error::invalid(format!("frame {tau} rejected: {verdict}")));
            }
        }
        let sigmas: Vec<ElementSet> = frames.iter().map(|t| sigma_of(p, t)).collect();
        let max_frame_size = frames.iter().map(ElementSet::len).max().unwrap();
        Ok(FrameFamily {
            frames: frames.into_iter().map(Frame::new).collect(),
            sigmas,
            max_frame_size,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn sigmas(&self) -> &[ElementSet] {
        &self.sigmas
    }

    pub fn sigma(&self, i: usize) -> &ElementSet {
        &self.sigmas[i]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The largest frame size, the `m` of the dimension bounds.
    pub fn max_frame_size(&self) -> usize {
        self.max_frame_size
    }

    /// Serializes the family in the frame file format.
    pub fn to_frame_file(&self) -> String {
        let mut out = String::new();
        for frame in &self.frames {
            out.push_str("FRAME");
            for v in frame.elements().iter() {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the frame file format: `FRAME <i1> <i2> ...` with strictly
/// ascending indices, `#` comments and blank lines ignored. Validation
/// against a poset happens in [`FrameFamily::new`].
pub fn parse_frame_file(text: &str) -> Result<Vec<ElementSet>> {
    let mut frames = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("FRAME") => {}
            Some(other) => {
                return Err(Error::invalid(format!(
                    "line {}: unknown directive {other:?}",
                    lineno + 1
                )));
            }
            None => unreachable!("blank lines are skipped"),
        }
        let mut vs = Vec::new();
        for tok in toks {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::invalid(format!("line {}: bad index {tok:?}", lineno + 1)))?;
            if let Some(&last) = vs.last() {
                if v <= last {
                    return Err(Error::invalid(format!(
                        "line {}: indices not strictly ascending",
                        lineno + 1
                    )));
                }
            }
            vs.push(v);
        }
        if vs.is_empty() {
            return Err(Error::invalid(format!("line {}: empty frame", lineno + 1)));
        }
        frames.push(ElementSet::new(vs));
    }
    if frames.is_empty() {
        return Err(Error::invalid("no FRAME lines"));
    }
    Ok(frames)
}

/// The three defining properties of a candidate sigma against a frame:
/// sigma lies in the join closure (p1), no frame element sits below two
/// members of sigma (p2), every frame element sits below one (p3).
pub fn check_properties(p: &FinitePoset, sigma: &ElementSet, frame: &Frame) -> (bool, bool, bool) {
    assert!(!sigma.is_empty() && !frame.is_empty(), "empty input");
    let closure = sigma_of(p, frame.elements());
    let p1 = sigma.is_subset_of(&closure);
    let mut p2 = true;
    let mut p3 = true;
    for x in frame.elements().iter() {
        let above = sigma.iter().filter(|&y| p.leq(x, y)).count();
        p2 &= above <= 1;
        p3 &= above >= 1;
    }
    (p1, p2, p3)
}

/// A poset of decompositions: each element is an antichain of ambient
/// poset elements, ordered by refinement (sigma below sigma' when every
/// member of sigma lies below some member of sigma').
#[derive(Clone, Debug)]
pub struct DecompositionPoset {
    elements: Vec<ElementSet>,
    poset: FinitePoset,
}

impl DecompositionPoset {
    /// Builds the refinement order on the given antichains. The order
    /// axioms are re-validated during construction; antisymmetry is a
    /// theorem for antichains, so a failure means a non-antichain
    /// slipped in.
    pub(crate) fn from_elements(ambient: &FinitePoset, elements: Vec<ElementSet>) -> Self {
        let mut elements = elements;
        elements.sort_unstable();
        elements.dedup();
        let refines =
            |a: &ElementSet, b: &ElementSet| a.iter().all(|x| b.iter().any(|y| ambient.leq(x, y)));
        let poset =
            FinitePoset::from_relation(elements.len(), |i, j| refines(&elements[i], &elements[j]))
                .expect("refinement on antichains is a partial order")
                .with_labels(elements.iter().map(|s| ambient.render_set(s)).collect())
                .expect("rendered labels are non-empty and whitespace-free");
        DecompositionPoset { elements, poset }
    }

    pub fn elements(&self) -> &[ElementSet] {
        &self.elements
    }

    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of a decomposition in the canonical element order.
    pub fn index_of(&self, sigma: &ElementSet) -> Option<usize> {
        self.elements.binary_search(sigma).ok()
    }

    pub fn order_complex(&self) -> SimplicialComplex {
        self.poset.order_complex()
    }
}

/// Enumerates set partitions of `0..k` as restricted growth strings.
fn for_each_partition(k: usize, visit: &mut impl FnMut(&[usize], usize)) {
    assert!(k >= 1);
    fn rec(
        i: usize,
        k: usize,
        used: usize,
        rgs: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize], usize),
    ) {
        if i == k {
            visit(rgs, used);
            return;
        }
        for b in 0..=used {
            rgs.push(b);
            rec(i + 1, k, used.max(b + 1), rgs, visit);
            rgs.pop();
        }
    }
    rec(0, k, 0, &mut Vec::with_capacity(k), visit);
}

/// The decompositions induced by one frame: block joins of set
/// partitions of tau whose joins all exist, kept when no frame element
/// lands under two of them.
fn decompositions_of_frame(p: &FinitePoset, frame: &ElementSet, out: &mut BTreeSet<ElementSet>) {
    let members = frame.members();
    assert!(
        members.len() <= MAX_PARTITION_SIZE,
        "frame of {} elements exceeds the partition budget",
        members.len()
    );
    for_each_partition(members.len(), &mut |rgs, blocks| {
        let mut joined = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let block: Vec<usize> = (0..members.len())
                .filter(|&i| rgs[i] == b)
                .map(|i| members[i])
                .collect();
            let j = if block.len() == 1 {
                Some(block[0])
            } else {
                p.join_of(&ElementSet::new(block))
            };
            match j {
                Some(j) => joined.push(j),
                None => return,
            }
        }
        let sigma: ElementSet = joined.into_iter().collect();
        // Joins of distinct blocks may coincide; the property checks
        // are against the resulting set, per the definition.
        let p2 = frame
            .iter()
            .all(|x| sigma.iter().filter(|&y| p.leq(x, y)).count() <= 1);
        if p2 {
            out.insert(sigma);
        }
    });
}

/// The decomposition poset: for every frame, every set partition whose
/// block joins exist and satisfy the at-most-one property, dedup across
/// frames, under refinement order.
pub fn build_d(p: &FinitePoset, family: &FrameFamily) -> DecompositionPoset {
    let mut out = BTreeSet::new();
    for frame in family.frames() {
        decompositions_of_frame(p, frame.elements(), &mut out);
    }
    DecompositionPoset::from_elements(p, out.into_iter().collect())
}

/// The partial decomposition poset: all non-empty subsets of members of
/// the decomposition poset. Subsets inherit the defining properties, and
/// every partial decomposition extends to a full one, so this exhausts
/// them; the equivalence with the direct definition is covered by the
/// brute-force oracle in tests.
pub fn build_pd(p: &FinitePoset, family: &FrameFamily) -> DecompositionPoset {
    let d = build_d(p, family);
    let mut out: BTreeSet<ElementSet> = BTreeSet::new();
    for sigma in d.elements() {
        let members = sigma.members();
        assert!(
            members.len() <= MAX_PARTITION_SIZE,
            "decomposition too large"
        );
        for mask in 1u32..(1 << members.len()) {
            let subset: Vec<usize> = (0..members.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| members[i])
                .collect();
            out.insert(ElementSet::new(subset));
        }
    }
    DecompositionPoset::from_elements(p, out.into_iter().collect())
}

/// The common basis complex: facets are the inclusion-maximal join
/// closures Sigma(tau); vertices carry the ambient poset numbering.
pub fn build_cb(p: &FinitePoset, family: &FrameFamily) -> SimplicialComplex {
    SimplicialComplex::from_facets(p.len(), family.sigmas().to_vec())
        .expect("join closures are valid non-empty faces")
}

/// Result of an extension-property check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpReport {
    pub holds: bool,
    /// A comparable pair sharing no witnessing frame, when one exists.
    pub witness: Option<(ElementSet, ElementSet)>,
    /// Comparable pairs (or maximal chains) examined.
    pub checked: usize,
}

fn frame_masks(family: &FrameFamily, pd: &DecompositionPoset) -> Vec<FixedBitSet> {
    pd.elements()
        .iter()
        .map(|sigma| {
            let mut mask = FixedBitSet::with_capacity(family.len());
            for (t, sig) in family.sigmas().iter().enumerate() {
                if sigma.is_subset_of(sig) {
                    mask.insert(t);
                }
            }
            mask
        })
        .collect()
}

/// The extension property: every comparable pair in the partial
/// decomposition poset fits inside a single frame's join closure.
/// Exhaustive over ordered pairs; the witness is the first failure in
/// canonical element order.
pub fn check_ep(family: &FrameFamily, pd: &DecompositionPoset) -> EpReport {
    let masks = frame_masks(family, pd);
    let mut checked = 0;
    for i in 0..pd.len() {
        for j in 0..pd.len() {
            if i == j || !pd.poset().leq(i, j) {
                continue;
            }
            checked += 1;
            if masks[i].intersection(&masks[j]).next().is_none() {
                return EpReport {
                    holds: false,
                    witness: Some((pd.elements()[i].clone(), pd.elements()[j].clone())),
                    checked,
                };
            }
        }
    }
    EpReport {
        holds: true,
        witness: None,
        checked,
    }
}

/// The chain form of the extension property: a single frame witnesses
/// every maximal chain. Implied by the pairwise form, but verified
/// directly on request; the chains are the facets of the order complex.
pub fn check_ep_chains(family: &FrameFamily, pd: &DecompositionPoset) -> EpReport {
    let masks = frame_masks(family, pd);
    let complex = pd.order_complex();
    let mut checked = 0;
    for chain in complex.facets() {
        checked += 1;
        let mut common = masks[chain.members()[0]].clone();
        for &link in &chain.members()[1..] {
            common.intersect_with(&masks[link]);
        }
        if common.is_clear() {
            let lo = pd.elements()[chain.members()[0]].clone();
            let hi = pd.elements()[*chain.members().last().unwrap()].clone();
            return EpReport {
                holds: false,
                witness: Some((lo, hi)),
                checked,
            };
        }
    }
    EpReport {
        holds: true,
        witness: None,
        checked,
    }
}

/// One dimension bound: `applicable` is false when the bound's
/// hypothesis (the extension property, or Boolean frames) fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub applicable: bool,
    pub ok: bool,
}

/// Dimensions of the three derived objects with the bounds they must
/// satisfy. `bounds_ok` is the conjunction over applicable checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionReport {
    pub m: usize,
    pub dim_cb: usize,
    pub dim_pd: usize,
    pub dim_d: usize,
    pub ep_holds: bool,
    pub boolean_frames: bool,
    pub checks: Vec<BoundCheck>,
}

impl DimensionReport {
    pub fn bounds_ok(&self) -> bool {
        self.checks.iter().all(|c| !c.applicable || c.ok)
    }
}

/// Detects the Boolean situation: every frame has the maximal size m,
/// joins of proper non-empty subsets exist, the full join does not, and
/// a frame element sits below a join exactly when it belongs to the
/// joined subset. Then each Sigma(tau) is a copy of the proper part of
/// the Boolean lattice on m atoms.
fn frames_are_boolean(p: &FinitePoset, family: &FrameFamily) -> bool {
    let m = family.max_frame_size();
    for frame in family.frames() {
        let members = frame.elements().members();
        if members.len() != m {
            return false;
        }
        let full = (1u32 << m) - 1;
        for mask in 1u32..=full {
            let subset: Vec<usize> = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| members[i])
                .collect();
            let join = if subset.len() == 1 {
                Some(subset[0])
            } else {
                p.join_of(&ElementSet::new(subset))
            };
            match join {
                Some(_) if mask == full => return false,
                None if mask != full => return false,
                Some(j) => {
                    for (i, &x) in members.iter().enumerate() {
                        let in_subset = mask >> i & 1 == 1;
                        if p.leq(x, j) != in_subset {
                            return false;
                        }
                    }
                }
                None => {}
            }
        }
    }
    true
}

/// Assembles the dimension report from the built objects. The poset
/// dimensions are longest-chain lengths minus one; the complex dimension
/// is the largest facet size minus one.
pub fn dimension_report(
    p: &FinitePoset,
    family: &FrameFamily,
    cb: &SimplicialComplex,
    pd: &DecompositionPoset,
    d: &DecompositionPoset,
    ep_holds: bool,
) -> DimensionReport {
    let m = family.max_frame_size();
    let dim_cb = cb.dim().expect("a frame family yields a non-empty complex");
    let dim_pd = pd.poset().total_height() - 2;
    let dim_d = d.poset().total_height() - 2;
    let boolean = frames_are_boolean(p, family);

    let two_m = 1usize
        .checked_shl(m as u32)
        .expect("frame sizes are capped well below the word size");
    let mut checks = vec![
        BoundCheck {
            name: "m-1 <= dim CB <= 2^m-2",
            applicable: true,
            ok: m - 1 <= dim_cb && dim_cb <= two_m - 2,
        },
        BoundCheck {
            name: "dim D <= m-1",
            applicable: ep_holds,
            ok: dim_d <= m - 1,
        },
        BoundCheck {
            name: "m-1 <= dim PD <= 2m-2",
            applicable: ep_holds,
            ok: m - 1 <= dim_pd && dim_pd <= 2 * m - 2,
        },
        BoundCheck {
            name: "Boolean: dim CB = 2^m-3",
            applicable: boolean,
            ok: two_m >= 3 && dim_cb == two_m - 3,
        },
    ];
    checks.push(BoundCheck {
        name: "Boolean: dim PD = 2m-3",
        applicable: boolean && ep_holds,
        ok: 2 * m >= 3 && dim_pd == 2 * m - 3,
    });
    checks.push(BoundCheck {
        name: "Boolean: dim D = m-2",
        applicable: boolean && ep_holds,
        ok: m >= 2 && dim_d == m - 2,
    });
    DimensionReport {
        m,
        dim_cb,
        dim_pd,
        dim_d,
        ep_holds,
        boolean_frames: boolean,
        checks,
    }
}

/// Verifies additive heights: whenever a partial decomposition has a
/// join in the poset, the join's height is the sum of the members'
/// heights. Returns the first violation as (sigma, height of join, sum
/// of heights), or `None` when all pass.
pub fn height_additivity(
    p: &FinitePoset,
    pd: &DecompositionPoset,
) -> Option<(ElementSet, usize, usize)> {
    for sigma in pd.elements() {
        let join = if sigma.len() == 1 {
            Some(sigma.members()[0])
        } else {
            p.join_of(sigma)
        };
        if let Some(j) = join {
            let lhs = p.height_of(j);
            let rhs: usize = sigma.iter().map(|x| p.height_of(x)).sum();
            if lhs != rhs {
                return Some((sigma.clone(), lhs, rhs));
            }
        }
    }
    None
}
