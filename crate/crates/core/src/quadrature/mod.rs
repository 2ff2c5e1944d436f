//! Gauss rules, endpoint-adapted composite rules, element-pair integrals
//! and the adaptive reference integrator.

pub mod line;
pub mod oracle;
pub mod pair;
pub mod rules;

pub use line::{EndBehavior, Grading, LineRule};
pub use oracle::{adaptive_integral, adaptive_integral_2d, adaptive_oracle_integral, OracleEstimate, OracleIntegrand};
pub use pair::{checked_pair_matrix, singular_pair_integral, CheckedPair, LocalMatrix, PairRuleCache, PairRules};
pub use rules::{gauss_jacobi, gauss_legendre, QuadRule, RuleKind};
