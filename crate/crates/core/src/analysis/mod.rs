//! Closed forms for large debt, envelope bounds, threshold sweeps and the
//! classification of the large-threshold behaviour.

mod closed_form;
mod envelope;
mod regime;
mod sweep;

pub use closed_form::{
    closed_form_region, compact_support_default, implicit_price, time_consistency_gap, ClosedFormPoint,
    CompactSupportVerdict, TimeConsistencyGap,
};
pub use envelope::{envelope_at, envelope_kink, flattening_point, stochastic_envelope, EnvelopePoint, EnvelopeSet};
pub use regime::{classify_regime, Regime, RegimeBasis, RegimeTag};
pub use sweep::{sweep_xstar, SweepOptions, SweepPoint, SweepResult, SweepStatus};

use crate::model::ModelParams;

/// `M1 = 2rB / ((r - mu) L'(0))`: above this ratio the deterministic control is zero.
pub fn threshold_m1(params: &ModelParams) -> f64 {
    2.0 * params.r * params.b / ((params.r - params.mu) * params.cost.slope_at_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostFunction;

    #[test]
    fn m1_scaling() {
        let m = ModelParams::benchmark(100.0, 0.0);
        assert!((threshold_m1(&m) - 100.0 / 3.0).abs() < 1e-12);
        let mut m2 = m;
        m2.b = 20.0;
        assert!((threshold_m1(&m2) - 2.0 * threshold_m1(&m)).abs() < 1e-12);
        m2 = m;
        m2.cost = CostFunction::log_barrier(2.0);
        assert!((threshold_m1(&m2) - 0.5 * threshold_m1(&m)).abs() < 1e-12);
    }
}
