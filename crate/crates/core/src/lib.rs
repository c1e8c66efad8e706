//! Order-theoretic simplicial complexes built from frame families in
//! finite posets, together with exact integral homology.
//!
//! A frame family singles out finitely many antichains (frames) of a
//! finite poset. From it this crate constructs:
//!
//! * the complex whose facets collect all joins of non-empty subsets
//!   of each frame ([`build_cb`]),
//! * the poset of partial decompositions ([`build_pd`]) and the
//!   decomposition poset it contains ([`build_d`]),
//! * order complexes, barycentric subdivisions, and their homology
//!   over the integers and modulo a prime ([`SimplicialComplex`]).
//!
//! The [`equivalence`] module compares the homology of the two sides
//! and checks the combinatorial maps connecting them, either
//! exhaustively or by seeded sampling. The [`providers`] module builds
//! ready-made instances: subspace lattices over prime fields, matroid
//! lattices of flats, and symplectic isotropic-subspace lattices.
//!
//! All homology is computed exactly via Smith normal form on the
//! integer boundary matrices; nothing is floating point.

// Index loops mirror the row/column bookkeeping of the elimination
// code, and comparisons like `dim <= m - 1` mirror the reported bound
// names; the suggested rewrites trade that away for nothing.
#![allow(
    clippy::needless_range_loop,
    clippy::manual_is_multiple_of,
    clippy::int_plus_one
)]

pub mod equivalence;
mod error;
pub mod frames;
pub mod homology;
pub mod poset;
pub mod providers;

pub use equivalence::{
    closure, default_budget, induced_homology_iso, map_m, map_u, verify_composite_bounds,
    verify_map_properties, BoundsReport, Budget, ChainInPoset, MapPropertyReport, MapSide, UImage,
    DEFAULT_SAMPLE_COUNT, DEFAULT_SAMPLE_SEED,
};
pub use error::{Error, Result};
pub use frames::{
    build_cb, build_d, build_pd, check_ep, check_ep_chains, check_properties, dimension_report,
    height_additivity, parse_frame_file, sigma_of, validate_frame, DecompositionPoset,
    DimensionReport, EpReport, Frame, FrameFamily, FrameVerdict,
};
pub use homology::{
    barycentric_subdivision, betti_mod_p, boundary_matrix, face_poset, integral_homology,
    rank_mod_p, smith_normal_form, HomologyResult, InducedMapReport, IntegerMatrix,
    SimplicialComplex, SmithNormalForm,
};
pub use poset::{Direction, ElementSet, FinitePoset};
pub use providers::{
    expected_top_rank, matroid_provider, matroid_provider_with_budget, subspace_provider,
    subspace_provider_with_budget, symplectic_provider, symplectic_provider_with_budget,
    MatroidInstance, MatroidSpec, SubspaceInstance, SymplecticInstance, DEFAULT_ELEMENT_BUDGET,
};
