//! Explicit ball embeddings into Lagrangian products of Orlicz balls.

pub mod family;
pub mod sigma;

pub use family::{constraint_slack, feasibility_certificate, Feasibility, NestedRectFamily, RectState};
pub use sigma::{build_sigma, AreaEstimate, JacobianAudit, SigmaMap};
pub mod verify;

pub use verify::{
    check_polar_point, embed_report, product_map, verify_containment_dual, verify_containment_polar, DualContainment,
    EmbedReport, EmbedSettings, EmbeddingSpec, PolarContainment, ProductEmbedding,
};
