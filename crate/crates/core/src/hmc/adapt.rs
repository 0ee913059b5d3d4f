/// Nesterov dual averaging of `log ε` toward a target acceptance statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    pub target: f64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    mu: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(target: f64, initial_step: f64) -> Self {
        DualAveraging {
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: (10.0 * initial_step).ln(),
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    /// Re-centres the iterates at `log(10 ε)`.
    pub fn restart(&mut self, step_size: f64) {
        self.mu = (10.0 * step_size).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let accept = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - accept);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    /// Step size to freeze once warmup ends.
    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Warmup schedule: an initial fast buffer, a run of doubling slow windows
/// that estimate the metric, and a terminal fast buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSchedule {
    pub n_warmup: usize,
    pub init_buffer: usize,
    pub term_buffer: usize,
    pub base_window: usize,
    /// False when warmup is too short to estimate a metric at all.
    pub estimate_metric: bool,
}

impl WindowSchedule {
    pub fn new(n_warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut base_window) = (75, 50, 25);
        let estimate_metric = n_warmup >= 20;
        if estimate_metric && init_buffer + base_window + term_buffer > n_warmup {
            init_buffer = (0.15 * n_warmup as f64) as usize;
            term_buffer = (0.1 * n_warmup as f64) as usize;
            base_window = n_warmup - (init_buffer + term_buffer);
        }
        WindowSchedule {
            n_warmup,
            init_buffer,
            term_buffer,
            base_window,
            estimate_metric,
        }
    }
}

/// Combined step-size and diagonal-metric adaptation over warmup.
#[derive(Debug, Clone)]
pub struct WindowedAdaptation {
    schedule: WindowSchedule,
    counter: usize,
    window_size: usize,
    next_window: usize,
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    pub step: DualAveraging,
}

impl WindowedAdaptation {
    pub fn new(dim: usize, n_warmup: usize, target_accept: f64, initial_step: f64) -> Self {
        let schedule = WindowSchedule::new(n_warmup);
        WindowedAdaptation {
            schedule,
            counter: 0,
            window_size: schedule.base_window,
            next_window: (schedule.init_buffer + schedule.base_window).saturating_sub(1),
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            step: DualAveraging::new(target_accept, initial_step),
        }
    }

    pub fn schedule(&self) -> &WindowSchedule {
        &self.schedule
    }

    fn in_window(&self) -> bool {
        let s = &self.schedule;
        self.counter >= s.init_buffer
            && self.counter < s.n_warmup - s.term_buffer
            && self.counter != s.n_warmup
    }

    fn window_ends(&self) -> bool {
        self.counter == self.next_window && self.counter != self.schedule.n_warmup
    }

    fn advance_window(&mut self) {
        let s = self.schedule;
        let last = s.n_warmup - s.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last && self.next_window + 2 * self.window_size >= s.n_warmup - s.term_buffer {
            self.next_window = last;
        }
    }

    fn add_sample(&mut self, q: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(q) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
    }

    /// Feeds the position of one warmup iteration. Returns a fresh
    /// regularized variance estimate when a slow window closes.
    pub fn learn_metric(&mut self, q: &[f64]) -> Option<Vec<f64>> {
        if !self.schedule.estimate_metric {
            self.counter += 1;
            return None;
        }
        if self.in_window() {
            self.add_sample(q);
        }
        if self.window_ends() {
            self.advance_window();
            let n = self.n as f64;
            let var = self
                .m2
                .iter()
                .map(|s| {
                    let v = if self.n > 1 { s / (n - 1.0) } else { 0.0 };
                    (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0))
                })
                .collect();
            self.n = 0;
            self.mean.fill(0.0);
            self.m2.fill(0.0);
            self.counter += 1;
            return Some(var);
        }
        self.counter += 1;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_windows() {
        let mut a = WindowedAdaptation::new(1, 1000, 0.8, 1.0);
        let mut ends = Vec::new();
        for i in 0..1000 {
            if a.learn_metric(&[i as f64]).is_some() {
                ends.push(i);
            }
        }
        assert_eq!(ends, vec![99, 149, 249, 449, 949]);
    }

    #[test]
    fn short_warmup_falls_back_to_proportions() {
        let s = WindowSchedule::new(100);
        assert_eq!((s.init_buffer, s.term_buffer, s.base_window), (15, 10, 75));
        assert!(!WindowSchedule::new(10).estimate_metric);
    }

    #[test]
    fn window_variance_is_regularized() {
        let mut a = WindowedAdaptation::new(1, 1000, 0.8, 1.0);
        let mut first = None;
        for i in 0..100 {
            if let Some(v) = a.learn_metric(&[(i % 2) as f64]) {
                first = Some(v);
            }
        }
        // 25 draws alternating 1, 0 starting at iteration 75 (odd → 1).
        let n = 25.0;
        let xs: Vec<f64> = (75..100).map(|i| (i % 2) as f64).collect();
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        let expected = n / (n + 5.0) * var + 1e-3 * 5.0 / (n + 5.0);
        assert!((first.unwrap()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn dual_averaging_moves_step_toward_target() {
        let mut da = DualAveraging::new(0.8, 1.0);
        let shrink = da.update(0.1);
        let mut da2 = DualAveraging::new(0.8, 1.0);
        let grow = da2.update(1.0);
        assert!(shrink < grow);
        assert!(da.final_step_size() > 0.0);
    }
}
