use serde::{Deserialize, Serialize};

use super::{PerturbationSpec, ProblemInstance};
use crate::error::{Error, Result};
use crate::poly::{univariate_real_roots, Polynomial};

/// Feasible part of a one-dimensional constraint set inside a window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    /// Disjoint closed intervals in increasing order.
    pub intervals: Vec<(f64, f64)>,
    /// Feasible points not contained in any interval.
    pub points: Vec<f64>,
}

impl FeasibleSet {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| x >= a - tol && x <= b + tol)
            || self.points.iter().any(|&p| (x - p).abs() <= tol)
    }
}

pub fn univariate_feasible_intervals(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    window: (f64, f64),
) -> Result<FeasibleSet> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::DegenerateWindow(lo, hi));
    }
    if prob.num_vars() != 1 {
        return Err(Error::NotUnivariate(prob.num_vars()));
    }
    if prob.num_equalities() > 0 {
        return Err(Error::Unsupported(
            "equality constraints are not supported in one-dimensional interval analysis".into(),
        ));
    }
    let bounds = prob.bounds(pert)?;
    let shifted: Vec<Polynomial> = prob
        .inequalities()
        .zip(&bounds)
        .map(|(g, &b)| g - &Polynomial::constant(1, b))
        .collect();

    let mut breaks = vec![lo, hi];
    for p in &shifted {
        if p.is_zero() {
            continue;
        }
        breaks.extend(univariate_real_roots(p, lo, hi)?);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let feasible_at = |x: f64| {
        shifted.iter().all(|p| {
            let scale: f64 = p
                .terms()
                .iter()
                .map(|t| t.coef.abs() * x.abs().powi(t.exps[0] as i32))
                .sum::<f64>()
                .max(1.0);
            p.eval(&[x]) <= 1e-9 * scale
        })
    };

    let node_ok: Vec<bool> = breaks.iter().map(|&b| feasible_at(b)).collect();
    let seg_ok: Vec<bool> = breaks
        .windows(2)
        .map(|w| feasible_at(0.5 * (w[0] + w[1])))
        .collect();

    let mut out = FeasibleSet::default();
    let mut open: Option<f64> = None;
    for (k, &ok) in seg_ok.iter().enumerate() {
        if ok {
            open.get_or_insert(breaks[k]);
        } else if let Some(start) = open.take() {
            out.intervals.push((start, breaks[k]));
        }
    }
    if let Some(start) = open {
        out.intervals.push((start, *breaks.last().unwrap()));
    }
    for (k, &b) in breaks.iter().enumerate() {
        let left = k > 0 && seg_ok[k - 1];
        let right = k < seg_ok.len() && seg_ok[k];
        if node_ok[k] && !left && !right {
            out.points.push(b);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, CatalogParams};

    fn pair() -> ProblemInstance {
        catalog("interval_pair", &CatalogParams::default()).unwrap()
    }

    #[test]
    fn baseline_interval_and_point() {
        let s = univariate_feasible_intervals(
            &pair(),
            &PerturbationSpec::Vector(vec![0.0, 0.0]),
            (-5.0, 5.0),
        )
        .unwrap();
        assert_eq!(s.intervals.len(), 1);
        let (a, b) = s.intervals[0];
        assert!(
            (a + 3.0).abs() <= 1e-10 && (b + 1.0).abs() <= 1e-10,
            "{s:?}"
        );
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn negative_perturbation_closed_form() {
        let (m1, m2) = (-0.19, -0.75);
        let s = univariate_feasible_intervals(
            &pair(),
            &PerturbationSpec::Vector(vec![m1, m2]),
            (-5.0, 5.0),
        )
        .unwrap();
        assert!(s.points.is_empty());
        assert_eq!(s.intervals.len(), 1);
        let (a, b) = s.intervals[0];
        assert!((a - (-1.0 - (4.0f64 + m2).sqrt())).abs() <= 1e-10);
        assert!((b - (-(1.0f64 - m1).sqrt())).abs() <= 1e-10);
    }

    #[test]
    fn positive_perturbation_single_interval() {
        // 1 - x^2 <= 1 always holds (double root at 0); (x+1)^2 <= 5
        let s = univariate_feasible_intervals(
            &pair(),
            &PerturbationSpec::Vector(vec![1.0, 1.0]),
            (-5.0, 5.0),
        )
        .unwrap();
        assert!(s.points.is_empty());
        assert_eq!(s.intervals.len(), 1);
        let (a, b) = s.intervals[0];
        let r5 = 5.0f64.sqrt();
        assert!(
            (a - (-1.0 - r5)).abs() <= 1e-10 && (b - (-1.0 + r5)).abs() <= 1e-10,
            "{s:?}"
        );
    }

    #[test]
    fn degenerate_window() {
        assert!(matches!(
            univariate_feasible_intervals(&pair(), &PerturbationSpec::Diagonal(0.0), (1.0, 1.0)),
            Err(Error::DegenerateWindow(..))
        ));
    }
}
