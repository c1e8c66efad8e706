//! Matroid flat lattices (proper part) with rank-one-flat frames.
//!
//! The rank of a set is its largest intersection with a basis; closure
//! and flats derive from that. Uniform and free matroids generate their
//! basis lists, explicit lists are validated against the exchange axiom
//! (exhaustively for ground sets up to 12 elements).

use crate::error::{Error, Result};
use crate::frames::FrameFamily;
use crate::poset::{ElementSet, FinitePoset};
use crate::providers::DEFAULT_ELEMENT_BUDGET;

#[derive(Clone, Debug)]
pub enum MatroidSpec {
    /// Independent sets are the subsets of size at most k.
    Uniform { n: usize, k: usize },
    /// Every subset is independent.
    Free { n: usize },
    /// Explicit basis list; ground size is one past the largest element.
    Bases { bases: Vec<ElementSet> },
}

pub struct MatroidInstance {
    pub ground: usize,
    pub rank: usize,
    pub bases: Vec<ElementSet>,
    /// Proper flats (loops flat and full flat excluded), poset-aligned,
    /// sorted by size then lexicographically.
    pub flats: Vec<ElementSet>,
    pub poset: FinitePoset,
    pub family: FrameFamily,
}

struct RankOracle {
    ground: usize,
    basis_masks: Vec<u32>,
}

impl RankOracle {
    fn rank(&self, mask: u32) -> usize {
        self.basis_masks
            .iter()
            .map(|b| (mask & b).count_ones() as usize)
            .max()
            .unwrap()
    }

    fn closure(&self, mask: u32) -> u32 {
        let r = self.rank(mask);
        let mut out = mask;
        for x in 0..self.ground {
            if mask >> x & 1 == 0 && self.rank(mask | 1 << x) == r {
                out |= 1 << x;
            }
        }
        out
    }
}

fn mask_of(s: &ElementSet) -> u32 {
    s.iter().fold(0u32, |m, x| m | 1 << x)
}

fn set_of(mask: u32, ground: usize) -> ElementSet {
    (0..ground).filter(|x| mask >> x & 1 == 1).collect()
}

pub fn matroid_provider(spec: MatroidSpec) -> Result<MatroidInstance> {
    matroid_provider_with_budget(spec, DEFAULT_ELEMENT_BUDGET)
}

pub fn matroid_provider_with_budget(
    spec: MatroidSpec,
    max_elements: usize,
) -> Result<MatroidInstance> {
    let bases: Vec<ElementSet> = match &spec {
        MatroidSpec::Uniform { n, k } => {
            if *k < 2 || k > n {
                return Err(Error::invalid("uniform matroid needs 2 <= k <= n"));
            }
            subsets_of_size(*n, *k)
        }
        MatroidSpec::Free { n } => {
            if *n < 2 {
                return Err(Error::invalid("free matroid needs at least 2 elements"));
            }
            vec![(0..*n).collect()]
        }
        MatroidSpec::Bases { bases } => bases.clone(),
    };

    if bases.is_empty() {
        return Err(Error::invalid("a matroid has at least one basis"));
    }
    let rank = bases[0].len();
    if bases.iter().any(|b| b.len() != rank) {
        return Err(Error::invalid("bases must share one cardinality"));
    }
    if rank < 2 {
        return Err(Error::invalid("rank must be at least 2"));
    }
    let ground = bases
        .iter()
        .flat_map(|b| b.iter())
        .max()
        .expect("bases are non-empty")
        + 1;
    if ground > 20 {
        return Err(Error::budget(format!(
            "ground set of {ground} elements exceeds the enumeration range (20)"
        )));
    }

    let mut sorted_bases = bases;
    sorted_bases.sort_unstable();
    sorted_bases.dedup();
    if ground <= 12 {
        check_exchange(&sorted_bases)?;
    }

    let oracle = RankOracle {
        ground,
        basis_masks: sorted_bases.iter().map(mask_of).collect(),
    };

    let loops_flat = oracle.closure(0);
    let full: u32 = (1 << ground) - 1;
    let mut flats: Vec<ElementSet> = Vec::new();
    for mask in 0..=full {
        if mask != loops_flat && mask != full && oracle.closure(mask) == mask {
            flats.push(set_of(mask, ground));
        }
    }
    if flats.len() > max_elements {
        return Err(Error::budget(format!(
            "{} proper flats exceed the budget ({max_elements})",
            flats.len()
        )));
    }
    flats.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let labels: Vec<String> = flats.iter().map(|f| f.to_string()).collect();
    let poset = FinitePoset::from_relation(flats.len(), |i, j| flats[i].is_subset_of(&flats[j]))?
        .with_labels(labels)?;

    // Frames: rank-many rank-one flats whose non-loop transversal is a
    // basis. One transversal suffices because parallel elements have
    // equal closures; `verify_all_transversals` re-checks the rest.
    let rank_one: Vec<usize> = (0..flats.len())
        .filter(|&i| oracle.rank(mask_of(&flats[i])) == 1)
        .collect();
    let mut frames = Vec::new();
    for combo in subsets_of_size(rank_one.len(), rank) {
        let chosen: Vec<usize> = combo.iter().map(|i| rank_one[i]).collect();
        let transversal: u32 = chosen
            .iter()
            .map(|&i| 1 << representative(&flats[i], loops_flat))
            .fold(0, |a, b| a | b);
        if oracle.rank(transversal) == rank {
            frames.push(ElementSet::new(chosen));
        }
    }

    let family = FrameFamily::new(&poset, frames)?;
    Ok(MatroidInstance {
        ground,
        rank,
        bases: sorted_bases,
        flats,
        poset,
        family,
    })
}

/// Smallest non-loop member of a rank-one flat.
fn representative(flat: &ElementSet, loops_flat: u32) -> usize {
    flat.iter()
        .find(|&x| loops_flat >> x & 1 == 0)
        .expect("a rank-one flat contains a non-loop")
}

fn subsets_of_size(n: usize, k: usize) -> Vec<ElementSet> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, from: usize, current: &mut Vec<usize>, out: &mut Vec<ElementSet>) {
        if current.len() == k {
            out.push(ElementSet::new(current.clone()));
            return;
        }
        for x in from..n {
            current.push(x);
            rec(n, k, x + 1, current, out);
            current.pop();
        }
    }
    rec(n, k, 0, &mut current, &mut out);
    out
}

fn check_exchange(bases: &[ElementSet]) -> Result<()> {
    for b1 in bases {
        for b2 in bases {
            for x in b1.iter().filter(|&x| !b2.contains(x)) {
                let found = b2.iter().filter(|&y| !b1.contains(y)).any(|y| {
                    let swapped: ElementSet = b1
                        .iter()
                        .filter(|&e| e != x)
                        .chain(std::iter::once(y))
                        .collect();
                    bases.binary_search(&swapped).is_ok()
                });
                if !found {
                    return Err(Error::invalid(format!(
                        "basis exchange fails for {b1} and {b2} at element {x}"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl MatroidInstance {
    /// Poset index of a flat given by its ground members.
    pub fn flat_index(&self, flat: &ElementSet) -> Option<usize> {
        self.flats.iter().position(|f| f == flat)
    }

    /// Re-checks every frame against every transversal, not just the
    /// canonical one. Quadratic blowup; callers gate on ground size.
    pub fn verify_all_transversals(&self) -> bool {
        let oracle = RankOracle {
            ground: self.ground,
            basis_masks: self.bases.iter().map(mask_of).collect(),
        };
        let loops_flat = oracle.closure(0);
        self.family.frames().iter().all(|frame| {
            let choices: Vec<Vec<usize>> = frame
                .elements()
                .iter()
                .map(|i| {
                    self.flats[i]
                        .iter()
                        .filter(|&x| loops_flat >> x & 1 == 0)
                        .collect()
                })
                .collect();
            all_transversals_are_bases(&oracle, &choices, 0, 0, self.rank)
        })
    }
}

fn all_transversals_are_bases(
    oracle: &RankOracle,
    choices: &[Vec<usize>],
    depth: usize,
    mask: u32,
    rank: usize,
) -> bool {
    if depth == choices.len() {
        return mask.count_ones() as usize == rank && oracle.rank(mask) == rank;
    }
    choices[depth]
        .iter()
        .all(|&x| all_transversals_are_bases(oracle, choices, depth + 1, mask | 1 << x, rank))
}
