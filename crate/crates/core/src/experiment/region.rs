use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::Method;
use super::grid::GridRow;
use crate::measurement::Shots;

/// Trials of one `(d, N, S, method)` pooled: the mean success rate and
/// `√(Σ se²)/T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledCell {
    pub d: usize,
    pub n: usize,
    pub s: Shots,
    pub method: Method,
    pub success_rate: f64,
    pub stderr: f64,
    pub trials: usize,
}

pub fn pool(rows: &[GridRow]) -> Vec<PooledCell> {
    let mut groups: BTreeMap<(usize, usize, Shots, Method), Vec<&GridRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.d, r.n, r.s, r.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((d, n, s, method), rs)| {
            let t = rs.len() as f64;
            PooledCell {
                d,
                n,
                s,
                method,
                success_rate: rs.iter().map(|r| r.success_rate).sum::<f64>() / t,
                stderr: rs.iter().map(|r| r.stderr * r.stderr).sum::<f64>().sqrt() / t,
                trials: rs.len(),
            }
        })
        .collect()
}

pub type CellSet = BTreeSet<(usize, Shots)>;

/// High-accuracy cells `(N, S)` per `(d, method)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Region {
    pub cells: BTreeMap<(usize, Method), CellSet>,
}

impl Region {
    pub fn get(&self, d: usize, method: Method) -> CellSet {
        self.cells.get(&(d, method)).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.values().all(|c| c.is_empty())
    }

    /// For each `S` of the grid, the smallest `N` whose cell is in the region.
    pub fn boundary(&self, d: usize, method: Method, grid_s: &[Shots]) -> Vec<(Shots, Option<usize>)> {
        let set = self.get(d, method);
        grid_s.iter().map(|&s| (s, set.iter().filter(|c| c.1 == s).map(|c| c.0).min())).collect()
    }
}

/// Cells with `success_rate − stderr ≥ threshold` after pooling trials.
pub fn success_region(rows: &[GridRow], threshold: f64) -> Region {
    let mut region = Region::default();
    for c in pool(rows) {
        let entry = region.cells.entry((c.d, c.method)).or_default();
        if c.success_rate - c.stderr >= threshold {
            entry.insert((c.n, c.s));
        }
    }
    region
}

pub fn is_strict_subset(a: &CellSet, b: &CellSet) -> bool {
    a.is_subset(b) && a.len() < b.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: usize, n: usize, s: u64, p: f64) -> GridRow {
        GridRow {
            d,
            n,
            s: Shots::Finite(s),
            method: Method::SvmSwap,
            trial_seed: 0,
            success_rate: p,
            stderr: (p * (1.0 - p) / 200.0).sqrt(),
            tie_count: 0,
            swap_tests: 0,
            state_copies: 0,
        }
    }

    #[test]
    fn empty_grid_gives_empty_region() {
        assert!(success_region(&[], 0.99).is_empty());
    }

    #[test]
    fn all_success_grid_is_all_cells() {
        let rows: Vec<_> = [16, 32].iter().flat_map(|&n| [16, 32].map(|s| row(2, n, s, 1.0))).collect();
        let r = success_region(&rows, 0.99);
        assert_eq!(r.get(2, Method::SvmSwap).len(), 4);
    }

    #[test]
    fn stderr_margin_is_one_sided() {
        let r = success_region(&[row(2, 16, 16, 0.99), row(2, 32, 16, 0.995)], 0.99);
        let set = r.get(2, Method::SvmSwap);
        assert!(!set.contains(&(16, Shots::Finite(16))));
        assert!(set.contains(&(32, Shots::Finite(16))));
        assert_eq!(r.boundary(2, Method::SvmSwap, &[Shots::Finite(16)]), vec![(Shots::Finite(16), Some(32))]);
    }

    #[test]
    fn pooling_combines_trials() {
        let mut a = row(2, 16, 16, 0.98);
        let b = row(2, 16, 16, 1.0);
        a.trial_seed = 1;
        let p = pool(&[a.clone(), b]);
        assert_eq!(p.len(), 1);
        assert!((p[0].success_rate - 0.99).abs() < 1e-12);
        assert!((p[0].stderr - a.stderr / 2.0).abs() < 1e-12);
    }

    #[test]
    fn strict_subset() {
        let a: CellSet = [(16, Shots::Finite(16))].into();
        let b: CellSet = [(16, Shots::Finite(16)), (32, Shots::Finite(16))].into();
        assert!(is_strict_subset(&a, &b));
        assert!(!is_strict_subset(&b, &b));
        assert!(!is_strict_subset(&b, &a));
    }
}
