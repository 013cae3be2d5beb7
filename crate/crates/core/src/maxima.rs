//! Partial-maxima paths, time-space point measures and the maximum
//! functional.

use serde::{Deserialize, Serialize};

use crate::cadlag::StepFunction;
use crate::error::{Error, Result};

/// Finite multiset of atoms `(time, mark)` in `[0, 1] x (0, inf)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "PointMeasureRepr", into = "PointMeasureRepr")]
pub struct PointMeasure {
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct PointMeasureRepr {
    atoms: Vec<[f64; 2]>,
}

impl TryFrom<PointMeasureRepr> for PointMeasure {
    type Error = Error;

    fn try_from(r: PointMeasureRepr) -> Result<Self> {
        PointMeasure::new(r.atoms.into_iter().map(|[t, x]| (t, x)).collect())
    }
}

impl From<PointMeasure> for PointMeasureRepr {
    fn from(p: PointMeasure) -> Self {
        PointMeasureRepr { atoms: p.atoms.into_iter().map(|(t, x)| [t, x]).collect() }
    }
}

impl PointMeasure {
    /// Atoms are stored sorted by time, then mark.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(t, x) in &atoms {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::domain(format!("atom time {t} outside [0, 1]")));
            }
            if !(x > 0.0) {
                return Err(Error::domain(format!("atom mark {x} must be positive")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(PointMeasure { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of atoms with mark strictly above `level`.
    pub fn count_above(&self, level: f64) -> usize {
        self.atoms.iter().filter(|a| a.1 > level).count()
    }
}

fn check_inputs(xs: &[f64], a_n: f64) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::domain("partial maxima of an empty sequence"));
    }
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::domain(format!("normalizer must be positive, got {a_n}")));
    }
    Ok(())
}

/// Running maximum of `(value_i, i/n)` pairs, starting from 0 and ignoring
/// values not above `floor`.
fn running_max(xs: &[f64], a_n: f64, keep: impl Fn(f64) -> bool) -> StepFunction {
    let n = xs.len() as f64;
    let mut current = 0.0f64;
    let mut jumps = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let v = x / a_n;
        if keep(v) && v > current {
            current = v;
            jumps.push(((i + 1) as f64 / n, v));
        }
    }
    StepFunction::from_parts_unchecked(0.0, jumps)
}

/// `M_n(t) = max_{i <= floor(nt)} X_i / a_n`, with value 0 on `[0, 1/n)`.
pub fn partial_max_process(xs: &[f64], a_n: f64) -> Result<StepFunction> {
    check_inputs(xs, a_n)?;
    Ok(running_max(xs, a_n, |_| true))
}

/// `M_n^(u)(t)`: as [`partial_max_process`] but only terms with
/// `X_i / a_n > u` contribute.
pub fn truncated_max_process(xs: &[f64], a_n: f64, u: f64) -> Result<StepFunction> {
    check_inputs(xs, a_n)?;
    if !(u > 0.0) {
        return Err(Error::domain(format!("truncation level must be positive, got {u}")));
    }
    Ok(running_max(xs, a_n, |v| v > u))
}

/// `N_n^* = sum_i delta_{(i/n, X_i/a_n)}`; zero marks are dropped.
pub fn time_space_measure(xs: &[f64], a_n: f64) -> Result<PointMeasure> {
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::domain(format!("normalizer must be positive, got {a_n}")));
    }
    let n = xs.len() as f64;
    let atoms = xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| ((i + 1) as f64 / n, x / a_n))
        .collect();
    PointMeasure::new(atoms)
}

/// `phi^(u)(eta)(t) = max { x_i : t_i <= t, u < x_i < inf }`, 0 when empty.
pub fn max_functional(eta: &PointMeasure, u: f64) -> Result<StepFunction> {
    if !(u > 0.0) {
        return Err(Error::domain(format!("truncation level must be positive, got {u}")));
    }
    let mut current = 0.0f64;
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    for &(t, x) in eta.atoms() {
        if x > u && x < f64::INFINITY && x > current {
            current = x;
            match jumps.last_mut() {
                Some(last) if last.0 == t => last.1 = x,
                _ => jumps.push((t, x)),
            }
        }
    }
    // An atom at time 0 is visible from the start.
    let initial = match jumps.first() {
        Some(&(0.0, x)) => {
            jumps.remove(0);
            x
        }
        _ => 0.0,
    };
    StepFunction::new(initial, jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cadlag::sup_distance;
    use crate::skorokhod::osc_m1;
    use proptest::prelude::*;

    #[test]
    fn partial_max_examples() {
        let m = partial_max_process(&[1.0, 3.0, 2.0], 1.0).unwrap();
        assert_eq!(m.initial(), 0.0);
        assert_eq!(m.jumps(), &[(1.0 / 3.0, 1.0), (2.0 / 3.0, 3.0)]);
        assert_eq!(m.eval(1.0).unwrap(), 3.0);

        let single = partial_max_process(&[5.0], 5.0).unwrap();
        assert_eq!(single.eval(0.999).unwrap(), 0.0);
        assert_eq!(single.eval(1.0).unwrap(), 1.0);

        let flat = partial_max_process(&[2.0; 4], 2.0).unwrap();
        assert_eq!(flat.jumps(), &[(0.25, 1.0)]);

        assert!(partial_max_process(&[], 1.0).is_err());
        assert!(partial_max_process(&[1.0], 0.0).is_err());
    }

    #[test]
    fn truncated_examples() {
        let m = truncated_max_process(&[1.0, 3.0, 2.0], 1.0, 2.0).unwrap();
        assert_eq!(m.jumps(), &[(2.0 / 3.0, 3.0)]);
        let zero = truncated_max_process(&[1.0, 3.0, 2.0], 1.0, 3.0).unwrap();
        assert_eq!(zero, StepFunction::constant(0.0));
        let tiny = truncated_max_process(&[1.0, 3.0, 2.0], 1.0, 1e-300).unwrap();
        assert_eq!(tiny, partial_max_process(&[1.0, 3.0, 2.0], 1.0).unwrap());
    }

    #[test]
    fn time_space_examples() {
        let p = time_space_measure(&[1.0, 3.0], 1.0).unwrap();
        assert_eq!(p.atoms(), &[(0.5, 1.0), (1.0, 3.0)]);
        let q = time_space_measure(&[0.0, 2.0], 2.0).unwrap();
        assert_eq!(q.atoms(), &[(1.0, 1.0)]);
        assert_eq!(time_space_measure(&[0.5; 17], 1.0).unwrap().len(), 17);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"atoms":[[0.5,1.0],[1.0,3.0]]}"#
        );
    }

    #[test]
    fn max_functional_examples() {
        let u = 0.7;
        let eta = PointMeasure::new(vec![(0.5, 3.0 * u), (0.5, 2.0 * u)]).unwrap();
        let phi = max_functional(&eta, u).unwrap();
        assert_eq!(phi.initial(), 0.0);
        assert_eq!(phi.jumps(), &[(0.5, 3.0 * u)]);
        assert_eq!(max_functional(&PointMeasure::default(), u).unwrap(), StepFunction::constant(0.0));
        let low = PointMeasure::new(vec![(0.2, 0.5), (0.9, 0.7)]).unwrap();
        assert_eq!(max_functional(&low, u).unwrap(), StepFunction::constant(0.0));
        let at_zero = PointMeasure::new(vec![(0.0, 2.0), (0.4, 5.0)]).unwrap();
        let phi = max_functional(&at_zero, 1.0).unwrap();
        assert_eq!(phi.eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn point_measure_validation() {
        assert!(PointMeasure::new(vec![(1.5, 1.0)]).is_err());
        assert!(PointMeasure::new(vec![(0.5, 0.0)]).is_err());
        assert!(serde_json::from_str::<PointMeasure>(r#"{"atoms":[[0.5,-1]]}"#).is_err());
    }

    fn arb_sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0, 0.0f64..1000.0], 1..60)
    }

    proptest! {
        #[test]
        fn max_functional_reproduces_truncated_path(xs in arb_sample(), a in 0.1f64..5.0, u in 0.01f64..5.0) {
            let lhs = max_functional(&time_space_measure(&xs, a).unwrap(), u).unwrap();
            let rhs = truncated_max_process(&xs, a, u).unwrap();
            prop_assert_eq!(&lhs, &rhs);
            for i in 0..=200 {
                let t = i as f64 / 200.0;
                prop_assert_eq!(lhs.eval(t).unwrap(), rhs.eval(t).unwrap());
            }
        }

        #[test]
        fn partial_max_is_monotone_with_zero_m1_oscillation(xs in arb_sample(), a in 0.1f64..5.0) {
            let m = partial_max_process(&xs, a).unwrap();
            prop_assert!(m.is_nondecreasing());
            prop_assert_eq!(m.terminal(), xs.iter().copied().fold(0.0, f64::max) / a);
            for d in [0.01, 0.1, 0.5, 1.0] {
                prop_assert_eq!(osc_m1(&m, d).unwrap(), 0.0);
            }
        }

        #[test]
        fn max_inequality(pairs in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..60), a in 0.1f64..5.0) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let lhs = sup_distance(&partial_max_process(&xs, a).unwrap(), &partial_max_process(&ys, a).unwrap());
            let rhs = pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max) / a;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn truncation_sandwich(xs in arb_sample(), a in 0.1f64..5.0, u in 0.01f64..5.0) {
            let full = partial_max_process(&xs, a).unwrap();
            let cut = truncated_max_process(&xs, a, u).unwrap();
            for i in 0..=200 {
                let t = i as f64 / 200.0;
                prop_assert!(cut.eval(t).unwrap() <= full.eval(t).unwrap());
            }
            prop_assert!(sup_distance(&full, &cut) <= u);
        }
    }
}
