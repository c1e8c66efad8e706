//! The subspace poset of GF(q)^n with its line-basis frames.

use crate::error::{Error, Result};
use crate::frames::FrameFamily;
use crate::poset::{ElementSet, FinitePoset};
use crate::providers::gf;
use crate::providers::{label_of_matrix, DEFAULT_ELEMENT_BUDGET};

/// Proper non-zero subspaces of GF(q)^n ordered by containment, with
/// one frame per unordered basis of lines.
pub struct SubspaceInstance {
    pub q: u64,
    pub n: usize,
    /// Canonical reduced row-echelon basis per element, poset-aligned;
    /// sorted by dimension, then lexicographically, so all lines come
    /// first.
    pub subspaces: Vec<Vec<Vec<u64>>>,
    pub poset: FinitePoset,
    pub family: FrameFamily,
}

pub fn subspace_provider(q: u64, n: usize) -> Result<SubspaceInstance> {
    subspace_provider_with_budget(q, n, DEFAULT_ELEMENT_BUDGET)
}

pub fn subspace_provider_with_budget(
    q: u64,
    n: usize,
    max_elements: usize,
) -> Result<SubspaceInstance> {
    gf::require_prime(q)?;
    if n < 2 {
        return Err(Error::invalid("dimension must be at least 2"));
    }

    let mut count: u128 = 0;
    for r in 1..n {
        count += gf::gaussian_binomial(n, r, q)
            .ok_or_else(|| Error::budget("subspace count overflows the counter"))?;
    }
    if count > max_elements as u128 {
        return Err(Error::budget(format!(
            "GF({q})^{n} has {count} proper subspaces, over the budget ({max_elements})"
        )));
    }

    let mut subspaces: Vec<Vec<Vec<u64>>> = Vec::with_capacity(count as usize);
    for r in 1..n {
        subspaces.extend(gf::enumerate_rref(n, r, q));
    }
    subspaces.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let labels: Vec<String> = subspaces.iter().map(|m| label_of_matrix(m, q)).collect();
    let poset = FinitePoset::from_relation(subspaces.len(), |i, j| {
        gf::row_space_leq(&subspaces[i], &subspaces[j], q)
    })?
    .with_labels(labels)?;

    let num_lines = subspaces.iter().take_while(|m| m.len() == 1).count();
    let mut frames = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut tracker = gf::RankTracker::new(q);
    frame_search(
        &subspaces,
        num_lines,
        n,
        0,
        &mut chosen,
        &mut tracker,
        &mut frames,
    );

    let family = FrameFamily::new(&poset, frames)?;
    Ok(SubspaceInstance {
        q,
        n,
        subspaces,
        poset,
        family,
    })
}

/// Depth-first search over ascending line indices; a prefix is extended
/// only while its lines stay independent, so every emitted n-set is a
/// basis and each unordered basis appears exactly once.
fn frame_search(
    subspaces: &[Vec<Vec<u64>>],
    num_lines: usize,
    n: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    tracker: &mut gf::RankTracker,
    out: &mut Vec<ElementSet>,
) {
    if chosen.len() == n {
        out.push(ElementSet::new(chosen.clone()));
        return;
    }
    let needed = n - chosen.len();
    for line in from..num_lines {
        if num_lines - line < needed {
            break;
        }
        if tracker.push(&subspaces[line][0]) {
            chosen.push(line);
            frame_search(subspaces, num_lines, n, line + 1, chosen, tracker, out);
            chosen.pop();
            tracker.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_cb, build_pd, check_ep, validate_frame};
    use num_bigint::BigUint;

    /// |GL_n(q)| / ((q-1)^n n!), the number of unordered line bases.
    fn expected_frame_count(q: u64, n: usize) -> u128 {
        let mut gl = BigUint::from(1u32);
        let qb = BigUint::from(q);
        for i in 0..n {
            gl *= qb.pow(n as u32) - qb.pow(i as u32);
        }
        let mut den = (BigUint::from(q) - 1u32).pow(n as u32);
        for i in 1..=n {
            den *= BigUint::from(i);
        }
        let (quot, rem) = num_integer::Integer::div_rem(&gl, &den);
        assert_eq!(rem, BigUint::from(0u32), "line-basis count divides evenly");
        let digits = quot.to_u64_digits();
        assert!(digits.len() <= 1);
        digits.first().copied().unwrap_or(0) as u128
    }

    #[test]
    fn gf22_is_the_hollow_triangle() {
        let inst = subspace_provider(2, 2).unwrap();
        assert_eq!(inst.poset.len(), 3, "three lines in GF(2)^2");
        assert_eq!(inst.family.len(), 3);
        let cb = build_cb(&inst.poset, &inst.family);
        assert_eq!(cb.facets().len(), 3, "three edges");
        assert_eq!(cb.dim(), Some(1));
    }

    #[test]
    fn counts_match_the_closed_forms() {
        for (q, n, elements) in [(2, 2, 3), (3, 2, 4), (2, 3, 14), (5, 2, 6), (2, 4, 65)] {
            let inst = subspace_provider(q, n).unwrap();
            assert_eq!(inst.poset.len(), elements, "GF({q})^{n} subspaces");
            assert_eq!(
                inst.family.len() as u128,
                expected_frame_count(q, n),
                "GF({q})^{n} frames"
            );
        }
    }

    #[test]
    fn every_frame_validates_and_spans_a_boolean_join_closure() {
        let inst = subspace_provider(2, 3).unwrap();
        assert_eq!(inst.family.len(), 28);
        for frame in inst.family.frames() {
            assert!(validate_frame(&inst.poset, frame.elements()).is_valid());
        }
        for i in 0..inst.family.len() {
            assert_eq!(
                inst.family.sigma(i).len(),
                (1 << inst.n) - 2,
                "join closure of a basis misses only zero and the full space"
            );
        }
    }

    #[test]
    fn containment_agrees_with_dimension_bounds() {
        let inst = subspace_provider(3, 2).unwrap();
        // Four lines, no containments among distinct elements.
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(inst.poset.leq(i, j), i == j);
            }
        }
    }

    #[test]
    fn extension_property_holds_for_line_bases() {
        let inst = subspace_provider(2, 2).unwrap();
        let pd = build_pd(&inst.poset, &inst.family);
        assert!(check_ep(&inst.family, &pd).holds);
    }

    #[test]
    fn budget_and_input_errors_are_reported() {
        assert!(matches!(
            subspace_provider(4, 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            subspace_provider(2, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            subspace_provider_with_budget(2, 3, 5),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn labels_render_echelon_bases() {
        let inst = subspace_provider(2, 2).unwrap();
        let rendered: Vec<String> = (0..3).map(|i| inst.poset.render(i)).collect();
        assert_eq!(rendered, vec!["[01]", "[10]", "[11]"]);
    }
}
