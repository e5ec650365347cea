//! Steady-state distribution of the sender window.
//!
//! `P(W)` is the probability that a window change lands on `W`, for
//! `W ∈ 1..=W_R`, where `W = 1` stands for a timeout. The solver walks the
//! balance equations downward from `W_R`, expressing each `P(W)` as
//! `A_{W,W−1}·P(W−1)`, then normalises through `P(1)`.
//!
//! The distribution depends on `(W_R, p)` only; no timing input exists.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDistribution {
    w_r: u32,
    p: f64,
    /// `mass[i]` is `P(i + 1)`.
    mass: Vec<f64>,
    mean: f64,
}

/// Probability that a TD at window `w` ends in fast recovery: one or two
/// drops among the `w` packets and no lost retransmission,
/// `q^w·(wp + w(w−1)/2·p²)`.
pub fn p_fr(w: u32, p: f64) -> f64 {
    let q = 1.0 - p;
    let w = f64::from(w);
    q.powf(w) * (w * p + w * (w - 1.0) / 2.0 * p * p)
}

pub fn solve_window_distribution(w_r: u32, p: f64) -> Result<WindowDistribution> {
    if w_r < 2 {
        return Err(Error::ReceiverWindow(w_r));
    }
    if p == 0.0 {
        return Err(Error::ZeroDropProbability);
    }
    crate::check_open_probability(p)?;
    let q = 1.0 - p;
    let n = w_r as usize;

    // step[w] = A_{w,w−1}, filled for w = W_R down to 2.
    let mut step = vec![0.0_f64; n + 1];
    // Ratio P(hi)/P(lo) for lo < hi, using steps already resolved above lo.
    let ratio = |step: &[f64], hi: usize, lo: usize| -> f64 { step[lo + 1..=hi].iter().product() };
    for w in (2..=n).rev() {
        let climb = q.powi(w as i32 - 1);
        step[w] = if w == n {
            climb / (1.0 - q.powi(n as i32))
        } else if w == 2 {
            // TDs need at least four packets, so W = 2 is only reached by a
            // successful retransmission after a timeout.
            q
        } else if 2 * w - 2 > n {
            climb
        } else {
            let mut denom = 1.0 - p_fr(2 * w as u32 - 2, p) * ratio(&step, 2 * w - 2, w);
            if 2 * w - 1 <= n {
                denom -= p_fr(2 * w as u32 - 1, p) * ratio(&step, 2 * w - 1, w);
            }
            climb / denom
        };
    }

    let mut mass = Vec::with_capacity(n);
    let mut cumulative = 1.0;
    mass.push(1.0);
    for a in &step[2..] {
        cumulative *= a;
        mass.push(cumulative);
    }
    let p1 = 1.0 / mass.iter().sum::<f64>();
    for m in &mut mass {
        *m *= p1;
    }
    let mean = mass.iter().enumerate().map(|(i, m)| (i + 1) as f64 * m).sum();
    Ok(WindowDistribution { w_r, p, mass, mean })
}

impl WindowDistribution {
    pub fn receiver_window(&self) -> u32 {
        self.w_r
    }

    pub fn drop_probability(&self) -> f64 {
        self.p
    }

    /// `P(w)`; zero outside `1..=W_R`.
    pub fn prob(&self, w: u32) -> f64 {
        if w == 0 {
            return 0.0;
        }
        self.mass.get(w as usize - 1).copied().unwrap_or(0.0)
    }

    /// `⟨W⟩ = Σ W·P(W)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `(W, P(W))` pairs in increasing `W`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.mass.iter().enumerate().map(|(i, &m)| (i as u32 + 1, m))
    }

    /// `P(W > k)`.
    pub fn tail_above(&self, k: u32) -> f64 {
        self.iter().filter(|&(w, _)| w > k).map(|(_, m)| m).sum()
    }

    /// Total-variation distance to an empirical histogram of window changes,
    /// where `counts[i]` counts changes to `W = i + 1`.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let n = self.mass.len().max(counts.len());
        let empirical = |i: usize| {
            if total == 0 {
                0.0
            } else {
                counts.get(i).copied().unwrap_or(0) as f64 / total as f64
            }
        };
        0.5 * (0..n).map(|i| (self.mass.get(i).copied().unwrap_or(0.0) - empirical(i)).abs()).sum::<f64>()
    }
}
