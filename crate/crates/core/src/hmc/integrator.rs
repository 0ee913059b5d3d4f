use super::LogDensity;

/// Position, momentum and the cached log-density/gradient at the position.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    /// Evaluates the target at `q`; momentum starts at zero.
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let log_density = target.log_density_and_grad(&q, &mut grad);
        PhasePoint {
            p: vec![0.0; q.len()],
            q,
            grad,
            log_density,
        }
    }

    pub fn kinetic(&self, inv_mass: &[f64]) -> f64 {
        0.5 * self.p.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
    }

    /// `H = −log p(q) + ½ pᵀ M⁻¹ p`, with NaN mapped to `+∞`.
    pub fn hamiltonian(&self, inv_mass: &[f64]) -> f64 {
        let h = -self.log_density + self.kinetic(inv_mass);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    /// `M⁻¹ p`, the velocity used by the U-turn criterion.
    pub(crate) fn velocity_into(&self, inv_mass: &[f64], out: &mut [f64]) {
        for ((o, p), m) in out.iter_mut().zip(&self.p).zip(inv_mass) {
            *o = p * m;
        }
    }

    fn refresh<T: LogDensity + ?Sized>(&mut self, target: &T) {
        self.log_density = target.log_density_and_grad(&self.q, &mut self.grad);
    }
}

/// `n_steps` leapfrog steps of size `step_size` (negative integrates
/// backwards) under the diagonal inverse metric `inv_mass`.
pub fn leapfrog<T: LogDensity + ?Sized>(
    z: &mut PhasePoint,
    step_size: f64,
    n_steps: usize,
    inv_mass: &[f64],
    target: &T,
) {
    for _ in 0..n_steps {
        let half = 0.5 * step_size;
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += half * g;
        }
        for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(inv_mass) {
            *q += step_size * m * p;
        }
        z.refresh(target);
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += half * g;
        }
    }
}
