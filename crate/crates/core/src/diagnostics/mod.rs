//! Quantitative verdicts on (renormalized) sections: `C^m` seminorms,
//! transversality margins, zero loci with tangent data, symplecticity of the
//! zero set and its sectional curvature.

mod curvature;
mod norms;
mod report;
mod structure;
mod transversality;
mod winding;
mod zeros;

pub use curvature::{curvature_estimate, CurvatureEstimate, HESSIAN_STEP};
pub use norms::{cm_norm, multi_indices};
pub use report::{Check, Comparison, DiagnosticsReport, Metric, Resolution, RungRecord};
pub use structure::{symplectic_margin, FlatStructure, StructureField, SymplecticMargin};
pub use transversality::{transversality_margin, Epsilon, TransversalityMargin};
pub use winding::{winding_number_on_circle, zero_count_by_winding};
pub use zeros::{zero_locus, zero_locus_with, ZeroLocus, ZeroLocusOptions, ZeroPoint};
