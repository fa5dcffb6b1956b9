//! Flips on perfect straight-line matchings.
//!
//! A flip replaces two crossing segments of a matching by two opposite sides
//! of the convex quadrilateral on their endpoints. This crate provides exact
//! integer predicates, the flip state machine, two potential functions that
//! bound flip sequences, the lower-bound instance families, and exact
//! flip-graph search for the longest and shortest sequences.

pub mod format;
pub mod generators;
pub mod geometry;
pub mod matching;
pub mod potentials;
pub mod search;
pub mod svg;

pub use generators::{gen_convex, gen_random, gen_two_line, BBox, GeneratorError, Instance, Permutation, Provenance};
pub use geometry::{orient, segments_properly_cross, shear_to_distinct_x, validate_general_position, Point, PointSet, Segment, Violation};
pub use matching::{
    find_crossings, flip, is_noncrossing, replay, total_length, CrossingPair, EngineError, FlipChoice, FlipRecord,
    FlipTrace, Matching,
};
pub use potentials::{decrement_audit, phi_lines, phi_vertical, DecrementAudit, LineType, PerturbedLine, Side};
pub use search::{
    enumerate_all_matchings, extremal_estimates, longest_flip_sequence, run_strategy, shortest_flip_sequence,
    Adversary, ChoiceRegime, SearchError, SearchLimits, Strategy,
};
