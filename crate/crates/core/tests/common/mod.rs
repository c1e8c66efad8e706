//! Shared fixtures for the integration suites: the standard instance
//! collection, homology profile helpers, and chain samplers.
#![allow(dead_code)]

use cbpd_core::*;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named poset-with-frames instance.
pub struct Instance {
    pub name: &'static str,
    pub poset: FinitePoset,
    pub family: FrameFamily,
}

impl Instance {
    fn new(name: &'static str, poset: FinitePoset, family: FrameFamily) -> Self {
        Instance {
            name,
            poset,
            family,
        }
    }
}

/// The standard desk-scale collection exercised by the cross-cutting
/// suites: three subspace lattices, two free and two uniform matroids,
/// and two symplectic instances.
pub fn standard_instances() -> Vec<Instance> {
    let sub = |q, n| {
        let SubspaceInstance { poset, family, .. } = subspace_provider(q, n).unwrap();
        (poset, family)
    };
    let mat = |spec| {
        let MatroidInstance { poset, family, .. } = matroid_provider(spec).unwrap();
        (poset, family)
    };
    let sym = |q, n| {
        let SymplecticInstance { poset, family, .. } = symplectic_provider(q, n).unwrap();
        (poset, family)
    };

    let mut out = Vec::new();
    let (p, f) = sub(2, 2);
    out.push(Instance::new("gf(2)^2", p, f));
    let (p, f) = sub(3, 2);
    out.push(Instance::new("gf(3)^2", p, f));
    let (p, f) = sub(2, 3);
    out.push(Instance::new("gf(2)^3", p, f));
    let (p, f) = mat(MatroidSpec::Free { n: 3 });
    out.push(Instance::new("free(3)", p, f));
    let (p, f) = mat(MatroidSpec::Free { n: 4 });
    out.push(Instance::new("free(4)", p, f));
    let (p, f) = mat(MatroidSpec::Uniform { n: 4, k: 2 });
    out.push(Instance::new("u(4,2)", p, f));
    let (p, f) = mat(MatroidSpec::Uniform { n: 5, k: 3 });
    out.push(Instance::new("u(5,3)", p, f));
    let (p, f) = sym(2, 1);
    out.push(Instance::new("symplectic(2,1)", p, f));
    let (p, f) = sym(2, 2);
    out.push(Instance::new("symplectic(2,2)", p, f));
    out
}

/// Four elements with a single relation and two frames whose join
/// closures share no witness for the comparable pair: the extension
/// property fails with witness ({0}, {2}).
pub fn non_ep_fixture() -> (FinitePoset, FrameFamily) {
    let p = FinitePoset::from_covers(4, &[(0, 2)]).unwrap();
    let family = FrameFamily::new(
        &p,
        vec![ElementSet::new(vec![0, 1]), ElementSet::new(vec![2, 3])],
    )
    .unwrap();
    (p, family)
}

/// Reduced Betti and torsion sequences trimmed of trailing trivial
/// degrees, so complexes of different dimension compare as graded
/// groups.
pub fn reduced_profile(h: &HomologyResult) -> (Vec<usize>, Vec<Vec<BigInt>>) {
    let Some(dim) = h.dim() else {
        return (Vec::new(), Vec::new());
    };
    let mut betti: Vec<usize> = (0..=dim).map(|k| h.rank(k)).collect();
    let mut torsion: Vec<Vec<BigInt>> = (0..=dim).map(|k| h.torsion(k).to_vec()).collect();
    while betti.last() == Some(&0) && torsion.last().is_some_and(Vec::is_empty) {
        betti.pop();
        torsion.pop();
    }
    (betti, torsion)
}

/// Every chain of the refinement poset, as ascending index lists. Each
/// chain appears exactly once: extension always appends a strictly
/// greater element.
pub fn all_refinement_chains(pd: &DecompositionPoset) -> Vec<Vec<usize>> {
    fn extend(pd: &DecompositionPoset, chain: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(chain.clone());
        let last = *chain.last().unwrap();
        for next in 0..pd.len() {
            if last != next && pd.poset().leq(last, next) {
                chain.push(next);
                extend(pd, chain, out);
                chain.pop();
            }
        }
    }
    let mut out = Vec::new();
    for start in 0..pd.len() {
        extend(pd, &mut vec![start], &mut out);
    }
    out
}

/// Seeded random chains in the refinement poset: grow upward then
/// downward from a random start by uniform comparable extensions.
/// Not uniform over chains, but deterministic and full-support.
pub fn sample_refinement_chains(
    pd: &DecompositionPoset,
    count: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pd.len();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let start = rng.gen_range(0..n);
        let mut chain = vec![start];
        loop {
            let last = *chain.last().unwrap();
            let ups: Vec<usize> = (0..n)
                .filter(|&j| j != last && pd.poset().leq(last, j))
                .collect();
            if ups.is_empty() || rng.gen_range(0..3) == 0 {
                break;
            }
            chain.push(ups[rng.gen_range(0..ups.len())]);
        }
        loop {
            let first = chain[0];
            let downs: Vec<usize> = (0..n)
                .filter(|&j| j != first && pd.poset().leq(j, first))
                .collect();
            if downs.is_empty() || rng.gen_range(0..3) == 0 {
                break;
            }
            chain.insert(0, downs[rng.gen_range(0..downs.len())]);
        }
        out.push(chain);
    }
    out
}
