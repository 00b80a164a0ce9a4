//! Running-max distance profiles for many pairs of cached trajectories.
//!
//! For a center `i` and another point `j`, the profile at ladder time `t`
//! is `max_{s ≤ t} d(φ_s x_i, φ_s x_j) / w_i(s)` with `w_i = 1` (classical)
//! or `w_i = ‖X(φ_s x_i)‖` (rescaled). Ball membership at `(t, ε)` is then a
//! single comparison `profile < ε`. Pairs already at or beyond `eps_max` at
//! the first ladder time are dropped.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flows::FREEZE_SPEED;
use crate::metrics::TrajectoryCache;

#[derive(Clone, Debug)]
pub struct PairProfiles {
    ladder: Vec<f64>,
    rescaled: bool,
    eps_max: f64,
    centers: Vec<usize>,
    rows: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl PairProfiles {
    /// Profiles for every `center` against every index in `others`.
    pub fn build(
        cache: &TrajectoryCache,
        centers: &[usize],
        others: &[usize],
        ladder: &[f64],
        eps_max: f64,
        rescaled: bool,
    ) -> Result<Self> {
        if ladder.is_empty() || ladder.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(format!(
                "time ladder must be nonempty and sorted, got {ladder:?}"
            )));
        }
        let bounds: Vec<usize> = ladder
            .iter()
            .map(|&t| cache.samples_until(t))
            .collect::<Result<_>>()?;
        let nt = ladder.len();
        let last = *bounds.last().unwrap();
        let built: Vec<(Vec<u32>, Vec<f64>)> = centers
            .par_iter()
            .map(|&c| {
                let mut row = Vec::new();
                let mut vals = Vec::new();
                let mut weights = Vec::with_capacity(last);
                for k in 0..last {
                    let s = if rescaled { cache.speed(c, k) } else { 1.0 };
                    weights.push(if s < FREEZE_SPEED { 0.0 } else { s });
                }
                if weights.first().is_some_and(|&w| w == 0.0) {
                    return (row, vals);
                }
                let mut prof = vec![0.0; nt];
                for &j in others {
                    let mut run: f64 = 0.0;
                    let mut ladder_pos = 0;
                    let mut keep = true;
                    for k in 0..last {
                        while ladder_pos < nt && bounds[ladder_pos] == k {
                            prof[ladder_pos] = run;
                            ladder_pos += 1;
                        }
                        let w = weights[k];
                        let v = if w == 0.0 {
                            f64::INFINITY
                        } else {
                            cache.distance(c, j, k) / w
                        };
                        run = run.max(v);
                        if run >= eps_max {
                            if ladder_pos == 0 {
                                keep = false;
                            }
                            break;
                        }
                    }
                    if !keep {
                        continue;
                    }
                    if run >= eps_max {
                        for p in prof.iter_mut().skip(ladder_pos) {
                            *p = f64::INFINITY;
                        }
                    } else {
                        for p in prof.iter_mut().skip(ladder_pos) {
                            *p = run;
                        }
                    }
                    row.push(j as u32);
                    vals.extend_from_slice(&prof);
                }
                (row, vals)
            })
            .collect();
        let (rows, values) = built.into_iter().unzip();
        Ok(PairProfiles {
            ladder: ladder.to_vec(),
            rescaled,
            eps_max,
            centers: centers.to_vec(),
            rows,
            values,
        })
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn rescaled(&self) -> bool {
        self.rescaled
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Entries `(j, profile value at ladder index ti)` for center position `c`.
    pub fn row(&self, c: usize, ti: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let nt = self.ladder.len();
        self.rows[c]
            .iter()
            .enumerate()
            .map(move |(e, &j)| (j as usize, self.values[c][e * nt + ti]))
    }

    /// Cache indices inside the ball of center position `c` at `(t_ti, eps)`.
    pub fn ball(&self, c: usize, ti: usize, eps: f64) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(eps <= self.eps_max);
        self.row(c, ti).filter(move |&(_, v)| v < eps).map(|(j, _)| j)
    }

    /// Number of stored pairs.
    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}
