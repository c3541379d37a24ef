//! Reproducers of computable constants and of the hierarchical interpolation machinery.

mod eigenstudy;
mod hierarchy;

pub use eigenstudy::{defect_forms, eigen_study, minimal_levels, mu_squared, reference_triangle, table1_csv, EigenStudy};
pub use hierarchy::{
    conforming_interpolant, delta_d_defect, hierarchical_details, measure_ratios, reconstruction_defect,
    split_details, DetailVector, RatioSample,
};
