//! Support patterns and the square linear systems they induce.
//!
//! Fixing which roads carry each class turns both the Wardrop conditions and
//! the stationarity conditions of the social optimum into linear equations:
//! one equal-cost row per (road, class) in the support plus one conservation
//! row per class with positive demand. The unknowns are the support flows
//! and one common-cost multiplier per class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearSolution};
use crate::model::Demand;

/// Flows at or below this are treated as zero.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Roads on which each class carries strictly positive flow.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportPattern {
    pub human: Vec<usize>,
    pub autonomous: Vec<usize>,
}

impl SupportPattern {
    pub fn new(mut human: Vec<usize>, mut autonomous: Vec<usize>) -> Self {
        human.sort_unstable();
        human.dedup();
        autonomous.sort_unstable();
        autonomous.dedup();
        SupportPattern { human, autonomous }
    }

    pub fn from_masks(human: u64, autonomous: u64) -> Self {
        SupportPattern {
            human: mask_to_indices(human),
            autonomous: mask_to_indices(autonomous),
        }
    }

    /// Strict support of a flow profile at [`SUPPORT_TOL`].
    pub fn of_flows(human: &[f64], autonomous: &[f64]) -> Self {
        let pick = |v: &[f64]| {
            v.iter()
                .enumerate()
                .filter(|(_, f)| **f > SUPPORT_TOL)
                .map(|(i, _)| i)
                .collect()
        };
        SupportPattern {
            human: pick(human),
            autonomous: pick(autonomous),
        }
    }

    pub fn human_mask(&self) -> u64 {
        indices_to_mask(&self.human)
    }

    pub fn autonomous_mask(&self) -> u64 {
        indices_to_mask(&self.autonomous)
    }

    /// Roads carrying both classes.
    pub fn mixed(&self) -> Vec<usize> {
        self.human
            .iter()
            .copied()
            .filter(|i| self.autonomous.binary_search(i).is_ok())
            .collect()
    }

    /// Checks indices against `n` and supports against the demand: a class
    /// with positive demand needs a nonempty support, a class with zero
    /// demand an empty one.
    pub fn validate(&self, n: usize, demand: &Demand) -> Result<()> {
        for (name, set, d) in [
            ("human", &self.human, demand.human),
            ("autonomous", &self.autonomous, demand.autonomous),
        ] {
            if let Some(i) = set.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidPattern(format!(
                    "{name} support contains road {i}, network has {n}"
                )));
            }
            if d > 0.0 && set.is_empty() {
                return Err(Error::InvalidPattern(format!(
                    "{name} demand is positive but its support is empty"
                )));
            }
            if d == 0.0 && !set.is_empty() {
                return Err(Error::InvalidPattern(format!(
                    "{name} demand is zero but its support is nonempty"
                )));
            }
        }
        Ok(())
    }
}

fn mask_to_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1u64 << i) != 0).collect()
}

fn indices_to_mask(idx: &[usize]) -> u64 {
    idx.iter().fold(0, |m, &i| m | (1u64 << i))
}

/// Masks a class may use: every nonempty subset when demand is positive,
/// only the empty set otherwise.
pub(crate) fn class_masks(n: usize, demand: f64) -> Vec<u64> {
    if demand > 0.0 {
        (1..(1u64 << n)).collect()
    } else {
        vec![0]
    }
}

/// Per-road coefficients of a pattern system. Row `h` of road i reads
/// `hh·f_h + ha·f_a + offset_h = λ_h`, and similarly for row `a`.
pub(crate) trait PatternCoefficients {
    fn block(&self, road: usize) -> [[f64; 2]; 2];
    fn offset_human(&self, road: usize) -> f64;
    fn offset_autonomous(&self, road: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PatternSolution {
    pub human: Vec<f64>,
    pub autonomous: Vec<f64>,
    pub lambda_h: Option<f64>,
    pub lambda_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PatternSolve {
    Solved(PatternSolution),
    /// Consistent but rank deficient: a continuum.
    Degenerate,
    /// No solution at all.
    Inconsistent,
}

/// Assembles and solves the pattern system. `pattern` must already be
/// validated against `demand`.
pub(crate) fn solve_pattern<C: PatternCoefficients>(
    coefs: &C,
    n: usize,
    demand: &Demand,
    pattern: &SupportPattern,
) -> PatternSolve {
    let nh = pattern.human.len();
    let na = pattern.autonomous.len();
    let has_h = demand.human > 0.0;
    let has_a = demand.autonomous > 0.0;
    let lam_h = nh + na;
    let lam_a = lam_h + usize::from(has_h);
    let dim = lam_a + usize::from(has_a);

    // Column of each road's autonomous flow, if in the support.
    let mut a_col = vec![None; n];
    for (j, &i) in pattern.autonomous.iter().enumerate() {
        a_col[i] = Some(nh + j);
    }
    let mut h_col = vec![None; n];
    for (j, &i) in pattern.human.iter().enumerate() {
        h_col[i] = Some(j);
    }

    let mut m = DenseMatrix::zeros(dim);
    let mut rhs = vec![0.0; dim];
    let mut row = 0;
    for &i in &pattern.human {
        let [[hh, ha], _] = coefs.block(i);
        m.set(row, h_col[i].unwrap(), hh);
        if let Some(c) = a_col[i] {
            m.set(row, c, ha);
        }
        m.set(row, lam_h, -1.0);
        rhs[row] = -coefs.offset_human(i);
        row += 1;
    }
    for &i in &pattern.autonomous {
        let [_, [ah, aa]] = coefs.block(i);
        if let Some(c) = h_col[i] {
            m.set(row, c, ah);
        }
        m.set(row, a_col[i].unwrap(), aa);
        m.set(row, lam_a, -1.0);
        rhs[row] = -coefs.offset_autonomous(i);
        row += 1;
    }
    if has_h {
        for j in 0..nh {
            m.set(row, j, 1.0);
        }
        rhs[row] = demand.human;
        row += 1;
    }
    if has_a {
        for j in 0..na {
            m.set(row, nh + j, 1.0);
        }
        rhs[row] = demand.autonomous;
        row += 1;
    }
    debug_assert_eq!(row, dim);

    match m.solve(rhs) {
        LinearSolution::Unique(x) => {
            let mut human = vec![0.0; n];
            let mut autonomous = vec![0.0; n];
            for (j, &i) in pattern.human.iter().enumerate() {
                human[i] = x[j];
            }
            for (j, &i) in pattern.autonomous.iter().enumerate() {
                autonomous[i] = x[nh + j];
            }
            PatternSolve::Solved(PatternSolution {
                human,
                autonomous,
                lambda_h: has_h.then(|| x[lam_h]),
                lambda_a: has_a.then(|| x[lam_a]),
            })
        }
        LinearSolution::Underdetermined => PatternSolve::Degenerate,
        LinearSolution::Inconsistent => PatternSolve::Inconsistent,
    }
}

/// Whether every support flow is strictly positive.
pub(crate) fn support_positive(sol: &PatternSolution, pattern: &SupportPattern) -> bool {
    pattern.human.iter().all(|&i| sol.human[i] > SUPPORT_TOL)
        && pattern
            .autonomous
            .iter()
            .all(|&i| sol.autonomous[i] > SUPPORT_TOL)
}
