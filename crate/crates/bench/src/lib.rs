//! Fixture constructors shared by the criterion benches.

use cbpd_core::{matroid_provider, subspace_provider, FinitePoset, FrameFamily, MatroidSpec};

/// Subspace lattice of GF(q)^n with its family of decomposition frames.
pub fn subspace_instance(q: u64, n: usize) -> (FinitePoset, FrameFamily) {
    let inst = subspace_provider(q, n).expect("desk-scale instance fits the default budget");
    (inst.poset, inst.family)
}

/// Lattice of flats of the uniform matroid on `n` points of rank `k`,
/// framed by its bases.
pub fn uniform_instance(n: usize, k: usize) -> (FinitePoset, FrameFamily) {
    let inst = matroid_provider(MatroidSpec::Uniform { n, k })
        .expect("desk-scale instance fits the default budget");
    (inst.poset, inst.family)
}
