//! Match metrics and rank-based comparison of methods across datasets.

mod diagram;
mod metrics;
mod ranks;

pub use diagram::{cd_diagram, render_cd_svg};
pub use metrics::{mean_prf, per_type_prf, prf, Prf};
pub use ranks::{
    average_ranks, cd_groups, chi2_sf, f_sf, friedman_test, nemenyi_cd, nemenyi_q, rank_report, rank_row, Alpha,
    FriedmanResult, RankReport, ScoreMatrix,
};
