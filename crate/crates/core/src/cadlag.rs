//! Piecewise-constant càdlàg paths on `[0, 1]`.
//!
//! A [`StepFunction`] stores the value on `[0, t_1)` and an ordered list of
//! jumps `(t_k, v_k)`, where `v_k` holds on `[t_k, t_{k+1})`. Jumps of size
//! zero are removed on construction, so two paths are equal exactly when
//! they are equal as functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction {
    initial: f64,
    jumps: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    initial: f64,
    jumps: Vec<[f64; 2]>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;

    fn try_from(repr: StepFunctionRepr) -> Result<Self> {
        StepFunction::new(repr.initial, repr.jumps.into_iter().map(|[t, v]| (t, v)).collect())
    }
}

impl From<StepFunction> for StepFunctionRepr {
    fn from(f: StepFunction) -> Self {
        StepFunctionRepr { initial: f.initial, jumps: f.jumps.into_iter().map(|(t, v)| [t, v]).collect() }
    }
}

impl StepFunction {
    /// Builds a path from its value on `[0, t_1)` and its jumps.
    ///
    /// Jump times must be strictly increasing and lie in `(0, 1]`; all values
    /// must be finite. Jumps that do not change the value are dropped.
    pub fn new(initial: f64, jumps: Vec<(f64, f64)>) -> Result<Self> {
        if !initial.is_finite() {
            return Err(Error::domain("initial value must be finite"));
        }
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
        let mut prev_time = 0.0;
        let mut prev_value = initial;
        for (k, &(t, v)) in jumps.iter().enumerate() {
            if !(t > prev_time && t <= 1.0) {
                return Err(Error::domain(format!(
                    "jump {k} at time {t}: times must be strictly increasing in (0, 1]"
                )));
            }
            if !v.is_finite() {
                return Err(Error::domain(format!("jump {k} has non-finite value {v}")));
            }
            prev_time = t;
            if v != prev_value {
                out.push((t, v));
                prev_value = v;
            }
        }
        Ok(StepFunction { initial, jumps: out })
    }

    pub fn constant(value: f64) -> Self {
        StepFunction { initial: value, jumps: Vec::new() }
    }

    /// `1` on `[at, 1]`, `0` on `[0, at)`.
    pub fn indicator(at: f64) -> Result<Self> {
        StepFunction::new(0.0, vec![(at, 1.0)])
    }

    /// Builds a path from a nondecreasing sequence of jump times without
    /// validation. Callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(initial: f64, jumps: Vec<(f64, f64)>) -> Self {
        debug_assert!(StepFunction::new(initial, jumps.clone()).map(|f| f.jumps == jumps).unwrap_or(false));
        StepFunction { initial, jumps }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }

    /// Value at `t = 1`.
    pub fn terminal(&self) -> f64 {
        self.jumps.last().map_or(self.initial, |&(_, v)| v)
    }

    /// Values on successive constancy intervals, starting with the initial one.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial).chain(self.jumps.iter().map(|&(_, v)| v))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.levels().zip(self.levels().skip(1)).all(|(a, b)| a <= b)
    }

    /// Right-continuous value `x(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("evaluation time {t} outside [0, 1]")));
        }
        Ok(self.value_at(t))
    }

    /// Left limit `x(t-)`.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::domain(format!("left limit requires t in (0, 1], got {t}")));
        }
        let k = self.jumps.partition_point(|&(s, _)| s < t);
        Ok(self.level(k))
    }

    #[inline]
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|&(s, _)| s <= t);
        self.level(k)
    }

    /// Value on the `k`-th constancy interval (0 is the initial one).
    #[inline]
    pub(crate) fn level(&self, k: usize) -> f64 {
        if k == 0 {
            self.initial
        } else {
            self.jumps[k - 1].1
        }
    }

    /// Start of the `k`-th constancy interval.
    #[inline]
    pub(crate) fn level_start(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.jumps[k - 1].0
        }
    }

    pub fn completed_graph(&self) -> GraphPolyline {
        let mut points = Vec::with_capacity(2 * self.jumps.len() + 2);
        points.push((0.0, self.initial));
        let mut current = self.initial;
        for &(t, v) in &self.jumps {
            points.push((t, current));
            points.push((t, v));
            current = v;
        }
        if self.jumps.last().is_none_or(|&(t, _)| t < 1.0) {
            points.push((1.0, current));
        }
        GraphPolyline { points }
    }

    /// CSV rows `t,v`, starting with the row `0,initial`.
    ///
    /// Values are written in shortest round-trip form, so parsing the output
    /// reproduces the path bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,v\n");
        out.push_str(&format!("0,{}\n", self.initial));
        for &(t, v) in &self.jumps {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('t')) {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            };
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            rows.push((parse(t)?, parse(v)?));
        }
        let Some((&(t0, v0), rest)) = rows.split_first() else {
            return Err(Error::Parse("empty path".into()));
        };
        if t0 != 0.0 {
            return Err(Error::Parse(format!("first row must be at t = 0, got {t0}")));
        }
        StepFunction::new(v0, rest.to_vec())
    }
}

/// Sup-norm distance between two step paths, exact on the merged jump grid.
pub fn sup_distance(f: &StepFunction, g: &StepFunction) -> f64 {
    let mut best = (f.initial - g.initial).abs();
    let (mut i, mut j) = (0, 0);
    let (fj, gj) = (&f.jumps, &g.jumps);
    while i < fj.len() || j < gj.len() {
        let tf = fj.get(i).map_or(f64::INFINITY, |p| p.0);
        let tg = gj.get(j).map_or(f64::INFINITY, |p| p.0);
        let t = tf.min(tg);
        if tf == t {
            i += 1;
        }
        if tg == t {
            j += 1;
        }
        best = best.max((f.level(i) - g.level(j)).abs());
    }
    best
}

/// The completed graph of a step path traced in its natural order: a
/// horizontal run for every constancy interval and a vertical segment from
/// `x(t-)` to `x(t)` at every jump.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPolyline {
    points: Vec<(f64, f64)>,
}

impl GraphPolyline {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Recovers the path from the horizontal runs.
    pub fn to_step_function(&self) -> Result<StepFunction> {
        let mut jumps = Vec::new();
        for (a, b) in self.segments() {
            if a.0 == b.0 && a.1 != b.1 {
                jumps.push((b.0, b.1));
            }
        }
        StepFunction::new(self.points[0].1, jumps)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> StepFunction {
        StepFunction::indicator(0.5).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = half();
        assert_eq!(f.eval(0.25).unwrap(), 0.0);
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
        assert_eq!(f.eval(1.0).unwrap(), 1.0);
        assert!(matches!(f.eval(1.5), Err(Error::Domain(_))));
        assert!(f.eval(-0.1).is_err());
    }

    #[test]
    fn left_limit_examples() {
        let f = half();
        assert_eq!(f.left_limit(0.5).unwrap(), 0.0);
        assert_eq!(f.left_limit(0.75).unwrap(), 1.0);
        let c = StepFunction::constant(2.5);
        for t in [0.1, 0.5, 1.0] {
            assert_eq!(c.left_limit(t).unwrap(), 2.5);
        }
        assert!(matches!(f.left_limit(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sup_distance_examples() {
        let f = half();
        assert_eq!(sup_distance(&f, &f), 0.0);
        assert_eq!(sup_distance(&f, &StepFunction::constant(0.0)), 1.0);
        let g = StepFunction::indicator(0.6).unwrap();
        assert_eq!(sup_distance(&f, &g), 1.0);
    }

    #[test]
    fn construction_normalizes_and_validates() {
        let f = StepFunction::new(0.0, vec![(0.2, 0.0), (0.4, 1.0), (0.6, 1.0)]).unwrap();
        assert_eq!(f.jumps(), &[(0.4, 1.0)]);
        assert!(StepFunction::new(0.0, vec![(0.0, 1.0)]).is_err());
        assert!(StepFunction::new(0.0, vec![(0.5, 1.0), (0.5, 2.0)]).is_err());
        assert!(StepFunction::new(0.0, vec![(1.2, 1.0)]).is_err());
        assert!(StepFunction::new(0.0, vec![(0.5, f64::NAN)]).is_err());
    }

    #[test]
    fn completed_graph_examples() {
        let c = StepFunction::constant(1.0).completed_graph();
        assert_eq!(c.points(), &[(0.0, 1.0), (1.0, 1.0)]);

        let g = half().completed_graph();
        let segs: Vec<_> = g.segments().collect();
        assert_eq!(segs, vec![((0.0, 0.0), (0.5, 0.0)), ((0.5, 0.0), (0.5, 1.0)), ((0.5, 1.0), (1.0, 1.0))]);

        let two = StepFunction::new(0.0, vec![(1.0 / 3.0, 1.0), (2.0 / 3.0, 2.0)]).unwrap();
        assert_eq!(two.completed_graph().segment_count(), 5);
    }

    #[test]
    fn graph_ends_on_a_vertical_segment_when_last_jump_is_at_one() {
        let f = StepFunction::indicator(1.0).unwrap();
        let g = f.completed_graph();
        assert_eq!(g.points(), &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        assert_eq!(g.to_step_function().unwrap(), f);
    }

    #[test]
    fn json_and_csv_formats() {
        let f = StepFunction::new(0.0, vec![(0.1, 0.3), (0.7, 2.0 / 3.0)]).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"initial":0.0,"jumps":[[0.1,0.3],[0.7,0.6666666666666666]]}"#);
        let csv = f.to_csv();
        assert_eq!(csv, "t,v\n0,0\n0.1,0.3\n0.7,0.6666666666666666\n");
        assert!(serde_json::from_str::<StepFunction>(r#"{"initial":0,"jumps":[[0.5,1],[0.4,2]]}"#).is_err());
    }

    pub(crate) fn arb_step() -> impl Strategy<Value = StepFunction> {
        (-3.0f64..3.0, proptest::collection::vec((0.0f64..1.0, -3.0f64..3.0), 0..8)).prop_map(|(v0, raw)| {
            let mut jumps: Vec<(f64, f64)> = raw.into_iter().map(|(t, v)| (1.0 - t, v)).collect();
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            jumps.dedup_by(|a, b| a.0 == b.0);
            StepFunction::new(v0, jumps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn left_limit_matches_nearby_evaluation(f in arb_step(), t in 0.001f64..=1.0) {
            let prev = f.jumps().iter().map(|&(s, _)| s).filter(|&s| s < t).fold(0.0, f64::max);
            let h = (t - prev) / 2.0;
            prop_assert_eq!(f.left_limit(t).unwrap(), f.eval(t - h).unwrap());
        }

        #[test]
        fn completed_graph_is_connected_and_round_trips(f in arb_step()) {
            let g = f.completed_graph();
            let pts = g.points();
            prop_assert_eq!(pts[0], (0.0, f.initial()));
            prop_assert_eq!(*pts.last().unwrap(), (1.0, f.terminal()));
            prop_assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0));
            prop_assert_eq!(g.to_step_function().unwrap(), f);
        }

        #[test]
        fn sup_distance_is_a_metric(f in arb_step(), g in arb_step(), h in arb_step()) {
            prop_assert_eq!(sup_distance(&f, &f), 0.0);
            prop_assert_eq!(sup_distance(&f, &g), sup_distance(&g, &f));
            prop_assert!(sup_distance(&f, &h) <= sup_distance(&f, &g) + sup_distance(&g, &h) + 1e-12);
            if f != g {
                prop_assert!(sup_distance(&f, &g) > 0.0);
            }
        }

        #[test]
        fn sup_distance_dominates_sampled_gaps(f in arb_step(), g in arb_step()) {
            let d = sup_distance(&f, &g);
            for i in 0..=500 {
                let t = i as f64 / 500.0;
                prop_assert!((f.eval(t).unwrap() - g.eval(t).unwrap()).abs() <= d);
            }
        }

        #[test]
        fn serialization_round_trips_bit_exactly(f in arb_step()) {
            let back: StepFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(StepFunction::from_csv(&f.to_csv()).unwrap(), f);
        }
    }
}
