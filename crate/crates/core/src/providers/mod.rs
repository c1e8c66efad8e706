//! Builders for the concrete instances the verification suites run on:
//! subspace posets over prime fields, matroid flat lattices, symplectic
//! isotropic posets, and the closed-form expected top homology rank of
//! the subspace family.

mod gf;
mod matroid;
mod subspace;
mod symplectic;

pub use matroid::{matroid_provider, matroid_provider_with_budget, MatroidInstance, MatroidSpec};
pub use subspace::{subspace_provider, subspace_provider_with_budget, SubspaceInstance};
pub use symplectic::{symplectic_provider, symplectic_provider_with_budget, SymplecticInstance};

use num_bigint::BigUint;
use num_integer::Integer;

/// Default cap on poset elements a provider will enumerate.
pub const DEFAULT_ELEMENT_BUDGET: usize = 200_000;

/// Whitespace-free label for a subspace given by its canonical basis:
/// rows joined by commas, coordinates as digits (dot-separated for
/// fields past GF(9), where single digits would collide).
fn label_of_matrix(rows: &[Vec<u64>], q: u64) -> String {
    let sep = if q <= 9 { "" } else { "." };
    let body: Vec<String> = rows
        .iter()
        .map(|r| r.iter().map(u64::to_string).collect::<Vec<_>>().join(sep))
        .collect();
    format!("[{}]", body.join(","))
}

/// The predicted rank of the top reduced homology group of the
/// subspace-instance complex for GF(q)^n:
/// |GL_n(q)| / (n (q^n - 1)), with |GL_n(q)| = prod (q^n - q^i).
/// The division is exact; this is asserted, not assumed.
pub fn expected_top_rank(q: u64, n: usize) -> BigUint {
    assert!(gf::is_prime(q), "field order must be prime");
    assert!(n >= 2, "dimension must be at least 2");
    let qb = BigUint::from(q);
    let mut gl = BigUint::from(1u32);
    for i in 0..n {
        gl *= qb.pow(n as u32) - qb.pow(i as u32);
    }
    let den = BigUint::from(n) * (qb.pow(n as u32) - 1u32);
    let (quot, rem) = gl.div_rem(&den);
    assert_eq!(rem, BigUint::from(0u32), "group order divides evenly");
    quot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_top_rank_matches_the_known_values() {
        for (q, n, want) in [(2, 2, 1u32), (3, 2, 3), (2, 3, 8), (2, 4, 336)] {
            assert_eq!(expected_top_rank(q, n), BigUint::from(want), "({q},{n})");
        }
    }

    #[test]
    fn expected_top_rank_stays_exact_at_larger_parameters() {
        // The divisibility assert inside must hold well past the test
        // instances; sweep a grid.
        for q in [2u64, 3, 5, 7, 11] {
            for n in 2..=6 {
                let _ = expected_top_rank(q, n);
            }
        }
    }

    #[test]
    fn labels_stay_unambiguous_for_large_fields() {
        assert_eq!(label_of_matrix(&[vec![1, 0], vec![0, 1]], 2), "[10,01]");
        assert_eq!(label_of_matrix(&[vec![1, 10]], 11), "[1.10]");
    }
}
