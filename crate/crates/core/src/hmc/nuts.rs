use rand::Rng;
use rand_distr::StandardNormal;

use super::integrator::{leapfrog, PhasePoint};
use super::LogDensity;
use crate::error::{Error, Result};
use crate::math::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionStats {
    /// Mean Metropolis acceptance probability over the trajectory.
    pub accept_stat: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    /// Hamiltonian at the selected point.
    pub energy: f64,
    pub step_size: f64,
}

/// No-U-Turn sampler with a diagonal inverse metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Nuts {
    pub step_size: f64,
    /// Diagonal of `M⁻¹` (a posterior variance estimate after adaptation).
    pub inv_mass: Vec<f64>,
    pub max_depth: usize,
    pub max_delta_h: f64,
}

struct Tree<'a, T: ?Sized, R> {
    target: &'a T,
    rng: &'a mut R,
    eps: f64,
    inv_mass: &'a [f64],
    max_delta_h: f64,
    h0: f64,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
    /// Current edge of the trajectory being extended.
    z: PhasePoint,
}

fn sample_momentum<R: Rng>(inv_mass: &[f64], z: &mut PhasePoint, rng: &mut R) {
    for (p, m) in z.p.iter_mut().zip(inv_mass) {
        let e: f64 = rng.sample(StandardNormal);
        *p = e / m.sqrt();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Generalized no-U-turn check between two trajectory ends.
fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

impl<T: LogDensity + ?Sized, R: Rng> Tree<'_, T, R> {
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        depth: usize,
        z_propose: &mut PhasePoint,
        p_sharp_beg: &mut [f64],
        p_sharp_end: &mut [f64],
        rho: &mut [f64],
        p_beg: &mut [f64],
        p_end: &mut [f64],
        log_sum_weight: &mut f64,
    ) -> bool {
        if depth == 0 {
            leapfrog(&mut self.z, self.eps, 1, self.inv_mass, self.target);
            self.n_leapfrog += 1;
            let h = self.z.hamiltonian(self.inv_mass);
            if h - self.h0 > self.max_delta_h {
                self.divergent = true;
            }
            let log_w = self.h0 - h;
            *log_sum_weight = log_add_exp(*log_sum_weight, log_w);
            self.sum_metro_prob += if log_w > 0.0 { 1.0 } else { log_w.exp() };
            z_propose.clone_from(&self.z);
            self.z.velocity_into(self.inv_mass, p_sharp_beg);
            p_sharp_end.copy_from_slice(p_sharp_beg);
            add_into(rho, &self.z.p);
            p_beg.copy_from_slice(&self.z.p);
            p_end.copy_from_slice(&self.z.p);
            return !self.divergent;
        }
        let n = rho.len();

        let mut log_sum_weight_init = f64::NEG_INFINITY;
        let mut p_init_end = vec![0.0; n];
        let mut p_sharp_init_end = vec![0.0; n];
        let mut rho_init = vec![0.0; n];
        if !self.build(
            depth - 1,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            &mut log_sum_weight_init,
        ) {
            return false;
        }

        let mut z_propose_final = self.z.clone();
        let mut log_sum_weight_final = f64::NEG_INFINITY;
        let mut p_final_beg = vec![0.0; n];
        let mut p_sharp_final_beg = vec![0.0; n];
        let mut rho_final = vec![0.0; n];
        if !self.build(
            depth - 1,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            &mut log_sum_weight_final,
        ) {
            return false;
        }

        let log_sum_weight_subtree = log_add_exp(log_sum_weight_init, log_sum_weight_final);
        *log_sum_weight = log_add_exp(*log_sum_weight, log_sum_weight_subtree);
        if log_sum_weight_final > log_sum_weight_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept = (log_sum_weight_final - log_sum_weight_subtree).exp();
            if self.rng.random::<f64>() < accept {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree = sum(&rho_init, &rho_final);
        add_into(rho, &rho_subtree);
        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &sum(&rho_init, &p_final_beg));
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &sum(&rho_final, &p_init_end));
        persist
    }
}

impl Nuts {
    pub fn new(dim: usize, step_size: f64, max_depth: usize, max_delta_h: f64) -> Self {
        Nuts {
            step_size,
            inv_mass: vec![1.0; dim],
            max_depth,
            max_delta_h,
        }
    }

    /// One NUTS transition from `current`; returns the new point and its
    /// statistics. A divergent first doubling leaves the position unchanged.
    pub fn transition<T: LogDensity + ?Sized, R: Rng>(
        &self,
        current: &PhasePoint,
        target: &T,
        rng: &mut R,
    ) -> (PhasePoint, TransitionStats) {
        let n = current.q.len();
        let mut z = current.clone();
        let inv_mass = self.inv_mass.as_slice();
        sample_momentum(inv_mass, &mut z, rng);

        let mut z_fwd = z.clone();
        let mut z_bck = z.clone();
        let mut z_sample = z.clone();
        let mut z_propose = z.clone();

        let mut p_sharp = vec![0.0; n];
        z.velocity_into(inv_mass, &mut p_sharp);
        let mut p_fwd_fwd = z.p.clone();
        let mut p_sharp_fwd_fwd = p_sharp.clone();
        let mut p_fwd_bck = z.p.clone();
        let mut p_sharp_fwd_bck = p_sharp.clone();
        let mut p_bck_fwd = z.p.clone();
        let mut p_sharp_bck_fwd = p_sharp.clone();
        let mut p_bck_bck = z.p.clone();
        let mut p_sharp_bck_bck = p_sharp;

        let mut rho = z.p.clone();
        let mut log_sum_weight = 0.0;
        let h0 = z.hamiltonian(inv_mass);

        let mut tree = Tree {
            target,
            rng,
            eps: self.step_size,
            inv_mass,
            max_delta_h: self.max_delta_h,
            h0,
            n_leapfrog: 0,
            sum_metro_prob: 0.0,
            divergent: false,
            z,
        };
        let mut depth = 0;

        while depth < self.max_depth {
            let mut rho_fwd = vec![0.0; n];
            let mut rho_bck = vec![0.0; n];
            let mut log_sum_weight_subtree = f64::NEG_INFINITY;
            let valid = if tree.rng.random::<f64>() > 0.5 {
                rho_bck.copy_from_slice(&rho);
                p_bck_fwd.copy_from_slice(&p_fwd_bck);
                p_sharp_bck_fwd.copy_from_slice(&p_sharp_fwd_bck);
                tree.z.clone_from(&z_fwd);
                tree.eps = self.step_size;
                let ok = tree.build(
                    depth,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    &mut log_sum_weight_subtree,
                );
                z_fwd.clone_from(&tree.z);
                ok
            } else {
                rho_fwd.copy_from_slice(&rho);
                p_fwd_bck.copy_from_slice(&p_bck_fwd);
                p_sharp_fwd_bck.copy_from_slice(&p_sharp_bck_fwd);
                tree.z.clone_from(&z_bck);
                tree.eps = -self.step_size;
                let ok = tree.build(
                    depth,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    &mut log_sum_weight_subtree,
                );
                z_bck.clone_from(&tree.z);
                ok
            };
            if !valid {
                break;
            }
            depth += 1;

            if log_sum_weight_subtree > log_sum_weight {
                z_sample.clone_from(&z_propose);
            } else {
                let accept = (log_sum_weight_subtree - log_sum_weight).exp();
                if tree.rng.random::<f64>() < accept {
                    z_sample.clone_from(&z_propose);
                }
            }
            log_sum_weight = log_add_exp(log_sum_weight, log_sum_weight_subtree);

            rho = sum(&rho_bck, &rho_fwd);
            let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &sum(&rho_bck, &p_fwd_bck));
            persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &sum(&rho_fwd, &p_bck_fwd));
            if !persist {
                break;
            }
        }

        let n_leapfrog = tree.n_leapfrog;
        let stats = TransitionStats {
            accept_stat: if n_leapfrog > 0 {
                tree.sum_metro_prob / n_leapfrog as f64
            } else {
                0.0
            },
            tree_depth: depth,
            n_leapfrog,
            divergent: tree.divergent,
            energy: z_sample.hamiltonian(inv_mass),
            step_size: self.step_size,
        };
        (z_sample, stats)
    }

    /// Heuristic initial step size: doubles or halves until the one-step
    /// acceptance probability crosses 0.8.
    pub fn init_step_size<T: LogDensity + ?Sized, R: Rng>(
        &mut self,
        start: &PhasePoint,
        target: &T,
        rng: &mut R,
    ) -> Result<()> {
        if self.step_size == 0.0 || self.step_size > 1e7 {
            return Ok(());
        }
        let log_08 = 0.8f64.ln();
        let inv_mass = self.inv_mass.clone();
        let probe = |eps: f64, rng: &mut R| -> f64 {
            let mut z = start.clone();
            sample_momentum(&inv_mass, &mut z, rng);
            let h0 = z.hamiltonian(&inv_mass);
            leapfrog(&mut z, eps, 1, &inv_mass, target);
            h0 - z.hamiltonian(&inv_mass)
        };
        let delta_h = probe(self.step_size, rng);
        let increase = delta_h > log_08;
        loop {
            let delta_h = probe(self.step_size, rng);
            if increase && !(delta_h > log_08) || !increase && !(delta_h < log_08) {
                return Ok(());
            }
            self.step_size *= if increase { 2.0 } else { 0.5 };
            if self.step_size > 1e7 {
                return Err(Error::Sampling(
                    "posterior is improper: step size diverged during initialization".into(),
                ));
            }
            if self.step_size < 1e-300 {
                return Err(Error::Sampling("step size collapsed to zero during initialization".into()));
            }
        }
    }
}
