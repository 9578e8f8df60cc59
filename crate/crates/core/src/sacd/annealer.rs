use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealerConfig {
    /// Number of recent per-batch mean entropies kept.
    pub window: usize,
    /// Learner steps between stability checks.
    pub interval: usize,
    pub std_threshold: f64,
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for AnnealerConfig {
    fn default() -> Self {
        Self {
            window: 100,
            interval: 100,
            std_threshold: 0.07,
            start: 0.98,
            decay: 0.9,
            floor: 0.1,
        }
    }
}

/// Lowers the target entropy `H̄ = c · ln(n_actions)` whenever the recent
/// policy entropy has settled (windowed std-dev below the threshold).
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyAnnealer {
    pub config: AnnealerConfig,
    history: VecDeque<f64>,
    coefficient: f64,
    since_check: usize,
    max_entropy: f64,
}

impl EntropyAnnealer {
    pub fn new(config: AnnealerConfig, n_actions: usize) -> Self {
        Self {
            config,
            history: VecDeque::with_capacity(config.window),
            coefficient: config.start.clamp(config.floor, 1.0),
            since_check: 0,
            max_entropy: (n_actions as f64).ln(),
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn target_entropy(&self) -> f64 {
        self.coefficient * self.max_entropy
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    pub fn since_check(&self) -> usize {
        self.since_check
    }

    /// Population standard deviation of the window, `None` until it is full.
    pub fn window_std(&self) -> Option<f64> {
        if self.history.len() < self.config.window || self.history.is_empty() {
            return None;
        }
        let n = self.history.len() as f64;
        let mean = self.history.iter().sum::<f64>() / n;
        let var = self.history.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
        Some(var.sqrt())
    }

    /// Records one batch entropy. Returns true when the target was lowered.
    pub fn observe(&mut self, batch_entropy: f64) -> bool {
        if self.history.len() == self.config.window {
            self.history.pop_front();
        }
        self.history.push_back(batch_entropy);
        self.since_check += 1;
        if self.since_check < self.config.interval {
            return false;
        }
        self.since_check = 0;
        match self.window_std() {
            Some(std) if std < self.config.std_threshold => {
                let next = (self.coefficient * self.config.decay).max(self.config.floor);
                let changed = next < self.coefficient;
                self.coefficient = next;
                changed
            }
            _ => false,
        }
    }

    pub(crate) fn restore(&mut self, coefficient: f64, since_check: usize, history: Vec<f64>) {
        self.coefficient = coefficient;
        self.since_check = since_check;
        self.history = history.into_iter().collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_decays_once_per_interval() {
        let cfg = AnnealerConfig::default();
        let mut a = EntropyAnnealer::new(cfg, 6);
        let mut decays = 0;
        for step in 1..=500 {
            if a.observe(1.2) {
                decays += 1;
                assert_eq!(step % cfg.interval, 0);
            }
        }
        assert_eq!(decays, 5);
        assert!((a.coefficient() - 0.98 * 0.9f64.powi(5)).abs() < 1e-12);
        assert!((a.target_entropy() - a.coefficient() * 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_history_keeps_coefficient() {
        let mut a = EntropyAnnealer::new(AnnealerConfig::default(), 6);
        for step in 0..1000 {
            // alternating ±0.5 has population std exactly 0.5
            a.observe(if step % 2 == 0 { 1.0 } else { 0.0 });
        }
        assert_eq!(a.coefficient(), 0.98);
    }

    #[test]
    fn coefficient_clamps_at_floor() {
        let mut a = EntropyAnnealer::new(AnnealerConfig::default(), 6);
        for _ in 0..100_000 {
            a.observe(0.5);
        }
        assert_eq!(a.coefficient(), 0.1);
        for _ in 0..1_000 {
            assert!(!a.observe(0.5));
        }
        assert_eq!(a.coefficient(), 0.1);
    }
}
