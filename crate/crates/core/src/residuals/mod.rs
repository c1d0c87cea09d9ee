//! Rule-based critics: one equation definition per benchmark.
//!
//! Every critic is written once, generically over [`Scalar`], and used two
//! ways: instantiated at `f64` it scores a classical reference solution in
//! tests, instantiated at `Nd` it emits the training-loss graph the
//! optimizer descends. Rewards are negated sums of squared imbalance rows,
//! so r <= 0 always and r = 0 exactly when every stated condition holds.
//!
//! Derivative bundles are indexed by the equation's input order:
//! - time-domain systems (oscillator, shear frame, convection cell) take the
//!   single input `t`: `d1(0)` is d/dt, `d2(0)` is d^2/dt^2;
//! - space-time fields (viscous convection, wave envelope) take `(x, t)`:
//!   `d1(0)` = d/dx, `d1(1)` = d/dt, `d2(0)` = d^2/dx^2;
//! - the steady channel takes `(x, y)`: `d1` in that order, `d2` likewise.

pub mod bouc_wen;
pub mod burgers;
pub mod couette;
pub mod lorenz;
pub mod schrodinger;
pub mod van_der_pol;

use crate::diff::Scalar;
use crate::optim::DecaySchedule;

/// Negated sum of squared rows: the common reward shape.
pub(crate) fn neg_sum_squares<T: Scalar>(proto: &T, rows: &[T]) -> T {
    let mut acc = T::constant(proto, 0.0);
    for r in rows {
        acc = acc - r.sq();
    }
    acc
}

/// Whether a penalty set anchors the field at t = 0 or on the spatial rim.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionKind {
    Initial,
    Boundary,
}

/// One penalized condition set and the schedule weighting its reward term.
#[derive(Clone, Debug)]
pub struct ConditionSet {
    pub name: &'static str,
    pub kind: ConditionKind,
    pub weight: DecaySchedule,
}

impl ConditionSet {
    fn unit(name: &'static str, kind: ConditionKind) -> Self {
        ConditionSet {
            name,
            kind,
            weight: DecaySchedule::constant(1.0),
        }
    }
}

/// Descriptor of one benchmark equation: problem geometry, solution shape,
/// and how its conditions are enforced (hard trial transform vs penalties).
#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub name: &'static str,
    /// Input coordinate names, in bundle index order.
    pub inputs: &'static [&'static str],
    /// Lower/upper bound per input coordinate (default spans; runs may
    /// shorten or extend the temporal axis).
    pub domain: Vec<(f64, f64)>,
    pub solution_dim: usize,
    /// Conditions enforced identically by a trial transform need no
    /// penalty sets, so exactly one of the two mechanisms is populated.
    pub has_trial: bool,
    pub conditions: Vec<ConditionSet>,
}

impl EquationSpec {
    pub fn van_der_pol() -> Self {
        EquationSpec {
            name: "van_der_pol",
            inputs: &["t"],
            domain: vec![(0.0, 10.0)],
            solution_dim: 2,
            has_trial: true,
            conditions: vec![],
        }
    }

    pub fn equation_of_motion() -> Self {
        EquationSpec {
            name: "equation_of_motion",
            inputs: &["t"],
            domain: vec![(0.0, 10.0)],
            solution_dim: 9,
            has_trial: true,
            conditions: vec![],
        }
    }

    pub fn lorenz() -> Self {
        EquationSpec {
            name: "lorenz",
            inputs: &["t"],
            domain: vec![(0.0, 5.0)],
            solution_dim: 3,
            has_trial: true,
            conditions: vec![],
        }
    }

    pub fn burgers() -> Self {
        EquationSpec {
            name: "burgers",
            inputs: &["x", "t"],
            domain: vec![(-1.0, 1.0), (0.0, 1.0)],
            solution_dim: 1,
            has_trial: true,
            conditions: vec![],
        }
    }

    pub fn schrodinger() -> Self {
        EquationSpec {
            name: "schrodinger",
            inputs: &["x", "t"],
            domain: vec![(-5.0, 5.0), (0.0, std::f64::consts::FRAC_PI_2)],
            solution_dim: 2,
            has_trial: false,
            conditions: vec![
                ConditionSet::unit("initial_profile", ConditionKind::Initial),
                ConditionSet::unit("edge_matching", ConditionKind::Boundary),
            ],
        }
    }

    pub fn couette() -> Self {
        EquationSpec {
            name: "couette",
            inputs: &["x", "y"],
            domain: vec![(0.0, 0.5), (-0.005, 0.005)],
            solution_dim: 3,
            has_trial: false,
            conditions: vec![
                ConditionSet {
                    name: "moving_wall",
                    kind: ConditionKind::Boundary,
                    weight: couette::wall_weight_schedule(),
                },
                ConditionSet {
                    name: "fixed_wall",
                    kind: ConditionKind::Boundary,
                    weight: couette::wall_weight_schedule(),
                },
                ConditionSet::unit("inlet", ConditionKind::Boundary),
                ConditionSet::unit("outlet", ConditionKind::Boundary),
            ],
        }
    }

    pub fn all() -> Vec<EquationSpec> {
        vec![
            EquationSpec::van_der_pol(),
            EquationSpec::equation_of_motion(),
            EquationSpec::lorenz(),
            EquationSpec::burgers(),
            EquationSpec::schrodinger(),
            EquationSpec::couette(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_transforms_replace_condition_sets() {
        for spec in EquationSpec::all() {
            assert_eq!(
                spec.has_trial,
                spec.conditions.is_empty(),
                "{}: hard and soft enforcement must not mix",
                spec.name
            );
            assert_eq!(spec.inputs.len(), spec.domain.len(), "{}", spec.name);
            assert!(spec.solution_dim > 0);
            for (lo, hi) in &spec.domain {
                assert!(lo < hi, "{}: empty domain axis", spec.name);
            }
        }
    }

    #[test]
    fn condition_weights_start_at_stated_values() {
        let couette = EquationSpec::couette();
        // Walls anneal from 50; inlet and outlet stay at 1.
        assert_eq!(couette.conditions[0].weight.value_at(0), 50.0);
        assert_eq!(couette.conditions[2].weight.value_at(0), 1.0);
        assert_eq!(couette.conditions[3].weight.value_at(10_000), 1.0);
    }
}
