//! Windowed pair-based spike-timing-dependent plasticity over a dense weight
//! matrix.
//!
//! For a synapse `i -> j` and the spike vectors `s[t]`, one update is
//!
//! ```text
//! dW(i,j) = sum_k a_plus[k]  * s_i[t-k] * s_j[t]
//!         - sum_k a_minus[k] * s_j[t-k] * s_i[t]        k = 1..=window
//! ```
//!
//! followed by clipping to `[w_min, w_max]`. Both sums collapse into per-neuron
//! traces (`pre_trace[i]`, `post_trace[j]`), so a step only touches the rows and
//! columns of neurons that spiked recently.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::NeuronId;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdpConfig {
    /// Number of past steps considered, `a_plus.len() == a_minus.len() == window`.
    pub window: u32,
    /// `a_plus[k - 1]`: potentiation when the pre spike leads the post spike by `k` steps.
    pub a_plus: Vec<f64>,
    /// `a_minus[k - 1]`: depression when the post spike leads the pre spike by `k` steps.
    pub a_minus: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
}

impl StdpConfig {
    /// `a_plus[k] = amp_plus * exp(-k / tau_plus)`, likewise for `a_minus`.
    pub fn exponential(
        window: u32,
        amp_plus: f64,
        tau_plus: f64,
        amp_minus: f64,
        tau_minus: f64,
        w_min: f64,
        w_max: f64,
    ) -> Self {
        let curve = |amp: f64, tau: f64| {
            (1..=window)
                .map(|k| amp * (-(k as f64) / tau).exp())
                .collect::<Vec<_>>()
        };
        StdpConfig {
            window,
            a_plus: curve(amp_plus, tau_plus),
            a_minus: curve(amp_minus, tau_minus),
            w_min,
            w_max,
        }
    }

    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(format!("stdp: {msg}")));
        if self.window == 0 {
            return fail("window must be at least 1".into());
        }
        let w = self.window as usize;
        if self.a_plus.len() != w || self.a_minus.len() != w {
            return fail(format!(
                "a_plus/a_minus need {w} entries, got {}/{}",
                self.a_plus.len(),
                self.a_minus.len()
            ));
        }
        if self
            .a_plus
            .iter()
            .chain(&self.a_minus)
            .any(|a| !a.is_finite() || *a < 0.0)
        {
            return fail("amplitudes must be finite and non-negative".into());
        }
        if !(self.w_min.is_finite() && self.w_max.is_finite()) || self.w_min > self.w_max {
            return fail(format!(
                "bounds [{}, {}] are not an interval",
                self.w_min, self.w_max
            ));
        }
        Ok(())
    }
}

impl Default for StdpConfig {
    fn default() -> Self {
        StdpConfig::exponential(20, 0.01, 5.0, 0.012, 5.0, 0.0, 1.0)
    }
}

/// The last `capacity` spike vectors, most recent first, stored as ascending
/// id lists.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpikeHistory {
    capacity: usize,
    steps: VecDeque<Vec<NeuronId>>,
}

impl SpikeHistory {
    pub fn new(capacity: usize) -> Self {
        SpikeHistory {
            capacity,
            steps: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, spikes: &[NeuronId]) {
        if self.capacity == 0 {
            return;
        }
        let mut slot = if self.steps.len() == self.capacity {
            self.steps.pop_back().unwrap_or_default()
        } else {
            Vec::new()
        };
        slot.clear();
        slot.extend_from_slice(spikes);
        self.steps.push_front(slot);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// `get(k)` is the spike list of step `t - k`, for `k >= 1`.
    pub fn get(&self, k: usize) -> Option<&[NeuronId]> {
        k.checked_sub(1)
            .and_then(|i| self.steps.get(i))
            .map(Vec::as_slice)
    }
}

/// Per-neuron traces for one update at step `t`.
pub(crate) struct Traces {
    /// `sum_k a_plus[k] * s_i[t-k]`
    pre: Vec<f64>,
    /// `sum_k a_minus[k] * s_j[t-k]`
    post: Vec<f64>,
    spiking: Vec<bool>,
}

impl Traces {
    pub fn new(n: usize, current: &[NeuronId], history: &SpikeHistory, cfg: &StdpConfig) -> Self {
        let mut pre = vec![0.0f64; n];
        let mut post = vec![0.0f64; n];
        for k in 1..=history.len().min(cfg.window as usize) {
            let spikes = history.get(k).unwrap_or(&[]);
            for &i in spikes {
                pre[i as usize] += cfg.a_plus[k - 1];
                post[i as usize] += cfg.a_minus[k - 1];
            }
        }
        let mut spiking = vec![false; n];
        for &i in current {
            spiking[i as usize] = true;
        }
        Traces { pre, post, spiking }
    }

    /// Whether row `i` can change at all.
    #[inline]
    pub fn row_active(&self, i: usize) -> bool {
        self.spiking[i] || self.pre[i] != 0.0
    }

    #[inline]
    pub fn col_active(&self, j: usize) -> bool {
        self.spiking[j] || self.post[j] != 0.0
    }

    #[inline]
    pub fn delta(&self, i: usize, j: usize) -> f64 {
        let potentiation = if self.spiking[j] { self.pre[i] } else { 0.0 };
        let depression = if self.spiking[i] { self.post[j] } else { 0.0 };
        potentiation - depression
    }

    #[inline]
    pub fn apply(&self, w: &mut f64, i: usize, j: usize, cfg: &StdpConfig) {
        let delta = self.delta(i, j);
        if delta != 0.0 {
            *w = (*w + delta).clamp(cfg.w_min, cfg.w_max);
        }
    }
}

/// Applies one plasticity update in place. `weights` is row-major `n x n`
/// (row = pre, column = post), `plastic` masks the synapses allowed to change
/// and `current` lists the neurons spiking at step `t`.
pub(crate) fn update(
    weights: &mut [f64],
    plastic: &[bool],
    n: usize,
    current: &[NeuronId],
    history: &SpikeHistory,
    cfg: &StdpConfig,
) {
    let traces = Traces::new(n, current, history, cfg);
    let rows: Vec<usize> = (0..n).filter(|&i| traces.row_active(i)).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| traces.col_active(j)).collect();
    for &i in &rows {
        let row = i * n;
        for &j in &cols {
            if plastic[row + j] {
                traces.apply(&mut weights[row + j], i, j, cfg);
            }
        }
    }
}
