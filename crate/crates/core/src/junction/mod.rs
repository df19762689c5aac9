//! θ-relaxed minimum-density junction trees.
//!
//! Pipeline per root: scaled graph → layered graph → leveled graph (height
//! reduction) → tuple trees with folded pay-per-use → label cover → paths.

pub mod labelcover;
pub mod layered;
pub mod leveled;
pub mod pipeline;
pub mod scaled;
pub mod tuple;

pub use labelcover::{solve_label_cover, to_label_cover, LabelCoverInstance, LabelCoverOptions, LabelCoverSolution};
pub use layered::{build_layered, LayerVertex, LayeredGraph, Side};
pub use leveled::{height_reduce, LeveledGraph, ReductionOptions, Shortcut};
pub use pipeline::{
    check_junction_tree, default_height, extract_paths, is_arborescence, junction_at_root, min_density_junction_tree, min_density_with,
    normalize_arborescence, prepare, JunctionContext, JunctionOptions, JunctionRoutes, JunctionTree,
};
pub use scaled::{scale_graph, scale_graph_coarse, ScaledGraph};
pub use tuple::{build_tuple_trees, ReducedTree};
