//! Per-step bandwidth split across active seekers.
//!
//! max eᵀb  s.t.  Σb ≤ B,  b_min ≤ b ≤ d,  b integer.
//!
//! One knapsack row with unit weights and box bounds: filling the residual
//! budget in descending-ε order is optimal, so no general MILP engine is needed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    /// Informative cells available per active seeker.
    pub d: Vec<u64>,
    /// Path-uncertainty per active seeker, in [0, 1].
    pub e: Vec<f64>,
    /// Budget in cell units.
    pub budget: u64,
    pub b_min: Vec<u64>,
}

impl AllocationProblem {
    /// Builds the problem with b_min[r] = min(⌊e[r]·B / |R|⌋, d[r]), where
    /// `team_size` is |R|, the full seeker count.
    pub fn new(d: Vec<u64>, e: Vec<f64>, budget: u64, team_size: usize) -> Result<Self> {
        if d.len() != e.len() {
            return Err(Error::InvalidParameter(format!("{} availabilities vs {} uncertainties", d.len(), e.len())));
        }
        if team_size == 0 || team_size < d.len() {
            return Err(Error::InvalidParameter(format!("team size {team_size} smaller than {} seekers", d.len())));
        }
        if let Some(x) = e.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!("uncertainty {x} outside [0, 1]")));
        }
        let b_min = d
            .iter()
            .zip(&e)
            .map(|(di, ei)| {
                // nudge so e.g. 0.3·10/1 lands on 3 rather than 2.999…
                let share = (ei * budget as f64 / team_size as f64 + 1e-9).floor() as u64;
                share.min(*di)
            })
            .collect();
        Ok(Self { d, e, budget, b_min })
    }

    pub fn objective(&self, b: &[u64]) -> f64 {
        self.e.iter().zip(b).map(|(e, b)| e * *b as f64).sum()
    }

    pub fn is_feasible(&self, b: &[u64]) -> bool {
        b.len() == self.d.len()
            && b.iter().sum::<u64>() <= self.budget
            && b.iter().zip(&self.b_min).zip(&self.d).all(|((b, lo), hi)| lo <= b && b <= hi)
    }
}

/// Optimal integer grants. Starts from b_min and hands out the residual
/// budget to the highest-ε seekers with slack (ties → lower index). Seekers
/// with ε = 0 only receive their minimum.
pub fn allocate(problem: &AllocationProblem) -> Result<Vec<u64>> {
    let r = problem.d.len();
    if problem.e.len() != r || problem.b_min.len() != r {
        return Err(Error::InvalidParameter("allocation vectors differ in length".into()));
    }
    if let Some(i) = (0..r).find(|&i| problem.b_min[i] > problem.d[i]) {
        return Err(Error::ContractViolation(format!("b_min {} > d {} for seeker {i}", problem.b_min[i], problem.d[i])));
    }
    let min_total: u64 = problem.b_min.iter().sum();
    if min_total > problem.budget {
        return Err(Error::InfeasibleAllocation { min_total, budget: problem.budget });
    }
    let mut b = problem.b_min.clone();
    let mut residual = problem.budget - min_total;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| problem.e[j].total_cmp(&problem.e[i]).then(i.cmp(&j)));
    for i in order {
        if residual == 0 || problem.e[i] <= 0.0 {
            break;
        }
        let add = (problem.d[i] - b[i]).min(residual);
        b[i] += add;
        residual -= add;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seeker_is_capped_by_availability() {
        let p = AllocationProblem::new(vec![5], vec![1.0], 10, 1).unwrap();
        assert_eq!(allocate(&p).unwrap(), vec![5]);
    }

    #[test]
    fn two_seeker_example() {
        let p = AllocationProblem::new(vec![7, 9], vec![0.8, 0.2], 10, 2).unwrap();
        assert_eq!(p.b_min, vec![4, 1]);
        let b = allocate(&p).unwrap();
        assert_eq!(b, vec![7, 3]);
        assert!((p.objective(&b) - 6.2).abs() < 1e-12);
        // exhaustive check of the frozen value
        let mut best = f64::MIN;
        for b0 in 0..=7 {
            for b1 in 0..=9 {
                if p.is_feasible(&[b0, b1]) {
                    best = best.max(p.objective(&[b0, b1]));
                }
            }
        }
        assert!((best - 6.2).abs() < 1e-12);
    }

    #[test]
    fn zero_uncertainty_returns_minimum() {
        let p = AllocationProblem::new(vec![4, 6], vec![0.0, 0.0], 10, 2).unwrap();
        assert_eq!(allocate(&p).unwrap(), p.b_min);
        assert_eq!(p.b_min, vec![0, 0]);
    }

    #[test]
    fn b_min_is_clamped_to_availability() {
        let p = AllocationProblem::new(vec![1, 9], vec![1.0, 1.0], 27, 3).unwrap();
        assert_eq!(p.b_min, vec![1, 9]);
        let b = allocate(&p).unwrap();
        assert!(p.is_feasible(&b));
    }

    #[test]
    fn infeasible_minimum_is_reported() {
        let p = AllocationProblem { d: vec![5, 5], e: vec![1.0, 1.0], budget: 4, b_min: vec![3, 3] };
        assert!(matches!(allocate(&p), Err(Error::InfeasibleAllocation { min_total: 6, budget: 4 })));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(AllocationProblem::new(vec![1], vec![1.5], 3, 1).is_err());
        assert!(AllocationProblem::new(vec![1, 2], vec![0.5], 3, 2).is_err());
        assert!(AllocationProblem::new(vec![1, 2], vec![0.5, 0.5], 3, 1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn problem() -> impl Strategy<Value = (Vec<u64>, Vec<f64>, u64, usize)> {
            (1usize..=4).prop_flat_map(|r| {
                (
                    proptest::collection::vec(0u64..=8, r),
                    proptest::collection::vec(0.0f64..=1.0, r),
                    1u64..=12,
                    r..=r + 2,
                )
            })
        }

        proptest! {
            #[test]
            fn grants_respect_bounds((d, e, budget, team) in problem()) {
                let p = AllocationProblem::new(d, e, budget, team).unwrap();
                prop_assert!(p.b_min.iter().sum::<u64>() <= budget);
                let b = allocate(&p).unwrap();
                prop_assert!(p.is_feasible(&b));
            }

            #[test]
            fn larger_budget_never_hurts((d, e, budget, team) in problem(), extra in 1u64..6) {
                let small = AllocationProblem::new(d, e, budget, team).unwrap();
                let large = AllocationProblem { budget: budget + extra, ..small.clone() };
                let bs = allocate(&small).unwrap();
                let bl = allocate(&large).unwrap();
                prop_assert!(large.objective(&bl) + 1e-12 >= small.objective(&bs));
            }
        }
    }
}
