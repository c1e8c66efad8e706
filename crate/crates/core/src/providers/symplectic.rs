//! Totally isotropic subspaces of a symplectic space with frames built
//! from symplectic bases.
//!
//! The ambient space is GF(q)^(2n) with the standard alternating form
//! pairing coordinate i with coordinate n+i. Every line is isotropic;
//! a frame is an unordered set of 2n lines whose non-orthogonality
//! graph is a perfect matching (the line pairs of a symplectic basis).
//! For each frame the join closure is verified to be a copy of the
//! face poset of the boundary of the n-dimensional cross polytope:
//! one line or the other of each matched pair, never both.

use crate::error::{Error, Result};
use crate::frames::FrameFamily;
use crate::poset::{ElementSet, FinitePoset};
use crate::providers::gf;
use crate::providers::{label_of_matrix, DEFAULT_ELEMENT_BUDGET};

pub struct SymplecticInstance {
    pub q: u64,
    /// Half-dimension: the ambient space has dimension 2n.
    pub n: usize,
    /// Canonical bases of the isotropic subspaces, poset-aligned,
    /// sorted by dimension then lexicographically (lines first).
    pub subspaces: Vec<Vec<Vec<u64>>>,
    pub poset: FinitePoset,
    pub family: FrameFamily,
}

/// The standard alternating form.
fn form(u: &[u64], v: &[u64], n: usize, q: u64) -> u64 {
    let mut acc = 0u64;
    for i in 0..n {
        acc = (acc + u[i] * v[n + i]) % q;
        acc = (acc + q * q - u[n + i] * v[i] % q) % q;
    }
    acc % q
}

fn totally_isotropic(rows: &[Vec<u64>], n: usize, q: u64) -> bool {
    // The form is alternating, so single rows vanish automatically.
    (0..rows.len()).all(|i| (i + 1..rows.len()).all(|j| form(&rows[i], &rows[j], n, q) == 0))
}

pub fn symplectic_provider(q: u64, n: usize) -> Result<SymplecticInstance> {
    symplectic_provider_with_budget(q, n, DEFAULT_ELEMENT_BUDGET)
}

pub fn symplectic_provider_with_budget(
    q: u64,
    n: usize,
    max_elements: usize,
) -> Result<SymplecticInstance> {
    gf::require_prime(q)?;
    if n < 1 {
        return Err(Error::invalid("half-dimension must be at least 1"));
    }

    let mut candidates: u128 = 0;
    for r in 1..=n {
        candidates += gf::gaussian_binomial(2 * n, r, q)
            .ok_or_else(|| Error::budget("subspace count overflows the counter"))?;
    }
    if candidates > (max_elements as u128).max(5_000_000) {
        return Err(Error::budget(format!(
            "{candidates} candidate subspaces exceed the enumeration budget"
        )));
    }

    let mut subspaces: Vec<Vec<Vec<u64>>> = Vec::new();
    for r in 1..=n {
        subspaces.extend(
            gf::enumerate_rref(2 * n, r, q)
                .into_iter()
                .filter(|rows| totally_isotropic(rows, n, q)),
        );
    }
    if subspaces.len() > max_elements {
        return Err(Error::budget(format!(
            "{} isotropic subspaces exceed the budget ({max_elements})",
            subspaces.len()
        )));
    }
    subspaces.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let labels: Vec<String> = subspaces.iter().map(|m| label_of_matrix(m, q)).collect();
    let poset = FinitePoset::from_relation(subspaces.len(), |i, j| {
        gf::row_space_leq(&subspaces[i], &subspaces[j], q)
    })?
    .with_labels(labels)?;

    let num_lines = subspaces.iter().take_while(|m| m.len() == 1).count();
    let gram: Vec<Vec<u64>> = (0..num_lines)
        .map(|i| {
            (0..num_lines)
                .map(|j| form(&subspaces[i][0], &subspaces[j][0], n, q))
                .collect()
        })
        .collect();

    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut pairs = Vec::with_capacity(n);
    let mut used = vec![false; num_lines];
    matching_search(&gram, n, 0, &mut pairs, &mut used, &mut matchings);

    let frames: Vec<ElementSet> = matchings
        .iter()
        .map(|m| m.iter().flat_map(|&(a, b)| [a, b]).collect())
        .collect();
    let family = FrameFamily::new(&poset, frames)?;

    // The family reorders frames canonically; the matching of a frame
    // is still unambiguous because the pairing graph is determined by
    // the line set.
    for matching in &matchings {
        let lines: ElementSet = matching.iter().flat_map(|&(a, b)| [a, b]).collect();
        let frame_idx = family
            .frames()
            .iter()
            .position(|f| *f.elements() == lines)
            .expect("every matching became a frame");
        verify_cross_polytope(&poset, &family, frame_idx, matching, &subspaces, n);
    }

    Ok(SymplecticInstance {
        q,
        n,
        subspaces,
        poset,
        family,
    })
}

/// Enumerates perfect matchings on the lines where mates pair
/// non-trivially and distinct pairs are orthogonal. Pairs are chosen
/// with increasing minima, each pair minimum-first, so every matching
/// appears exactly once.
fn matching_search(
    gram: &[Vec<u64>],
    n: usize,
    min_start: usize,
    pairs: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if pairs.len() == n {
        out.push(pairs.clone());
        return;
    }
    let ok = |x: usize, used: &[bool]| {
        (0..gram.len())
            .filter(|&u| used[u])
            .all(|u| gram[x][u] == 0)
    };
    for a in min_start..gram.len() {
        if used[a] || !ok(a, used) {
            continue;
        }
        for b in a + 1..gram.len() {
            if used[b] || gram[a][b] == 0 || !ok(b, used) {
                continue;
            }
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
            matching_search(gram, n, a + 1, pairs, used, out);
            pairs.pop();
            used[a] = false;
            used[b] = false;
        }
    }
}

/// Σ(τ) must be the face poset of the cross-polytope boundary: members
/// correspond to the subsets of the matched lines avoiding both mates
/// of any pair, ordered by inclusion.
fn verify_cross_polytope(
    poset: &FinitePoset,
    family: &FrameFamily,
    frame_idx: usize,
    matching: &[(usize, usize)],
    subspaces: &[Vec<Vec<u64>>],
    n: usize,
) {
    let sigma = family.sigma(frame_idx);
    let expected = 3u64.pow(n as u32) - 1;
    assert_eq!(
        sigma.len() as u64,
        expected,
        "join closure size must be 3^n - 1"
    );
    let tau: Vec<usize> = matching.iter().flat_map(|&(a, b)| [a, b]).collect();
    let supports: Vec<ElementSet> = sigma
        .iter()
        .map(|s| tau.iter().copied().filter(|&l| poset.leq(l, s)).collect())
        .collect();
    for (s, sup) in sigma.iter().zip(supports.iter()) {
        assert_eq!(
            sup.len(),
            subspaces[s].len(),
            "a dimension-d member lies over exactly d frame lines"
        );
        for &(a, b) in matching {
            assert!(
                !(sup.contains(a) && sup.contains(b)),
                "no member contains a hyperbolic pair"
            );
        }
    }
    let mut distinct = supports.clone();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), supports.len(), "support map is injective");
    let members: Vec<usize> = sigma.iter().collect();
    for (i, &s) in members.iter().enumerate() {
        for (j, &t) in members.iter().enumerate() {
            assert_eq!(
                poset.leq(s, t),
                supports[i].is_subset_of(&supports[j]),
                "support map preserves and reflects order"
            );
        }
    }
}
