//! Uncertainty budgets, the analytic model curve and Monte Carlo propagation.

pub mod budget;
pub mod model_curve;
pub mod monte_carlo;

pub use budget::{expanded, propagate_output, uncertainty_budget, BudgetEntry, OutputUncertainty, UncertaintyBudget};
pub use model_curve::{model_curve, phase_uncertainty_crossing, response_tve, ModelPoint, ResponseParams};
pub use monte_carlo::{
    monte_carlo, GainPopulation, Manifest, McResult, McScenario, McStatistics, SequenceTrace, SummaryRow,
    TemperatureMode, TrialOutcome,
};
