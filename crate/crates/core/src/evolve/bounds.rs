use crate::error::{Error, Result};

/// `min_gap <= v[upper_index] - v[lower_index] <= max_gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConstraint {
    pub lower_index: usize,
    pub upper_index: usize,
    pub min_gap: f64,
    pub max_gap: f64,
}

/// Box bounds plus optional linear gap constraints between dimension pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
    pairs: Vec<PairConstraint>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config(format!(
                "bounds need equal, non-zero lengths (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        let invalid = |d: usize| !lower[d].is_finite() || !upper[d].is_finite() || lower[d] > upper[d];
        if let Some(d) = (0..lower.len()).find(|&d| invalid(d)) {
            return Err(Error::Config(format!(
                "dimension {d}: lower bound {} exceeds upper bound {}",
                lower[d], upper[d]
            )));
        }
        Ok(Self { lower, upper, pairs: Vec::new() })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Adds a gap constraint after checking it can be met inside the box.
    /// A dimension may take part in at most one constraint.
    pub fn with_pair(mut self, pair: PairConstraint) -> Result<Self> {
        let PairConstraint { lower_index: a, upper_index: b, min_gap, max_gap } = pair;
        let dim = self.dim();
        if a >= dim || b >= dim || a == b {
            return Err(Error::Config(format!("invalid constraint indices ({a}, {b})")));
        }
        if self.pairs.iter().any(|p| [p.lower_index, p.upper_index].iter().any(|i| *i == a || *i == b)) {
            return Err(Error::Config(format!("dimensions {a} and {b} already take part in a constraint")));
        }
        let lowest_gap = self.lower[b] - self.upper[a];
        let highest_gap = self.upper[b] - self.lower[a];
        if min_gap.is_nan()
            || max_gap.is_nan()
            || min_gap > max_gap
            || highest_gap < min_gap
            || lowest_gap > max_gap
        {
            return Err(Error::Config(format!(
                "gap constraint [{min_gap}, {max_gap}] on ({a}, {b}) is infeasible within bounds"
            )));
        }
        self.pairs.push(pair);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn pairs(&self) -> &[PairConstraint] {
        &self.pairs
    }

    /// Width `hi - lo` of dimension `d`.
    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn is_feasible(&self, genome: &[f64]) -> bool {
        genome.len() == self.dim()
            && genome
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
            && self.pairs.iter().all(|p| {
                let gap = genome[p.upper_index] - genome[p.lower_index];
                p.min_gap <= gap && gap <= p.max_gap
            })
    }

    /// Clamps every dimension into its box, then moves constrained pairs
    /// back inside their gap window. The result always satisfies
    /// [`is_feasible`](Self::is_feasible).
    pub fn repair(&self, genome: &mut [f64]) {
        debug_assert_eq!(genome.len(), self.dim());
        for ((x, lo), hi) in genome.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = if x.is_nan() { *lo } else { x.clamp(*lo, *hi) };
        }
        for p in &self.pairs {
            let (a, b) = (p.lower_index, p.upper_index);
            let (mut va, mut vb) = (genome[a], genome[b]);
            if vb - va < p.min_gap {
                // raise the upper value; if it hits its bound, lower the other
                vb = (va + p.min_gap).min(self.upper[b]);
                if vb - va < p.min_gap {
                    va = (vb - p.min_gap).max(self.lower[a]);
                }
                while vb - va < p.min_gap {
                    if vb < self.upper[b] {
                        vb = vb.next_up();
                    } else {
                        va = va.next_down();
                    }
                }
            } else if vb - va > p.max_gap {
                vb = (va + p.max_gap).max(self.lower[b]);
                if vb - va > p.max_gap {
                    va = (vb - p.max_gap).min(self.upper[a]);
                }
                while vb - va > p.max_gap {
                    if vb > self.lower[b] {
                        vb = vb.next_down();
                    } else {
                        va = va.next_up();
                    }
                }
            }
            genome[a] = va;
            genome[b] = vb;
        }
    }

    pub fn repaired(&self, mut genome: Vec<f64>) -> Vec<f64> {
        self.repair(&mut genome);
        genome
    }
}
