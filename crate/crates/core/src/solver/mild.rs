use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::model::{hall_nonlinearity, ModelParams};

use super::{heat_semigroup, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MildConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Successive-difference tolerance in `sup_t L²`, relative to `sup_t ‖B‖`.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl MildConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && t_end > dt) {
            return Err(EmhdError::Parameter(format!("need 0 < dt < t_end, got dt = {dt}, t_end = {t_end}")));
        }
        Ok(Self {
            dt,
            t_end,
            tol: 1e-10,
            max_iterations: 200,
            max_halvings: 20,
        })
    }

    fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }

    fn time(&self, m: usize) -> f64 {
        (m as f64 * self.dt).min(self.t_end)
    }
}

#[derive(Debug, Clone)]
pub struct MildSolution {
    pub trajectory: Trajectory,
    /// Fixed-point iterations used in each window.
    pub iterations: Vec<usize>,
    /// Window lengths, in steps.
    pub windows: Vec<usize>,
}

enum Window {
    Converged(Vec<SpectralVectorField>, usize),
    Stalled,
}

/// Fixed point of the discrete Duhamel map on steps `start..=start + len`.
fn solve_window(
    b_start: &SpectralVectorField,
    start: usize,
    len: usize,
    q: &Trajectory,
    p: &ModelParams,
    cfg: &MildConfig,
) -> Result<Window> {
    let times: Vec<f64> = (start..=start + len).map(|m| cfg.time(m)).collect();
    let mut iterate: Vec<SpectralVectorField> = times
        .iter()
        .map(|&t| heat_semigroup(b_start, t - times[0], p))
        .collect();
    let mut prev_diff = f64::INFINITY;
    let mut stalls = 0;
    for it in 1..=cfg.max_iterations {
        let mut next = Vec::with_capacity(iterate.len());
        let mut duhamel = b_start.clone();
        next.push(b_start.clone());
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            let n = hall_nonlinearity(&iterate[i - 1], q.left_value(times[i - 1]), p)?;
            duhamel.axpy(h, &n);
            duhamel = heat_semigroup(&duhamel, h, p);
            next.push(duhamel.clone());
        }
        let mut diff = 0.0_f64;
        let mut scale = 0.0_f64;
        for (a, b) in next.iter().zip(&iterate) {
            diff = diff.max((a - b).l2_norm());
            scale = scale.max(a.l2_norm());
        }
        iterate = next;
        if !diff.is_finite() {
            return Ok(Window::Stalled);
        }
        if diff <= cfg.tol * scale {
            return Ok(Window::Converged(iterate, it));
        }
        stalls = if diff >= prev_diff { stalls + 1 } else { 0 };
        if stalls >= 2 {
            return Ok(Window::Stalled);
        }
        prev_diff = diff;
    }
    Ok(Window::Stalled)
}

/// Solves `B_t + μΛ^κB + εΛ^4B = -∇×((∇×Λ^{-s}B) × q)` for a frozen `q` by
/// iterating the left-endpoint Duhamel map over successive windows.
pub fn linear_mild_solve(
    b0: &SpectralVectorField,
    q: &Trajectory,
    p: &ModelParams,
    cfg: &MildConfig,
) -> Result<MildSolution> {
    if !(p.eps_visc > 0.0) {
        return Err(EmhdError::Precondition("the regularized solve needs eps_visc > 0".into()));
    }
    if q.is_empty() {
        return Err(EmhdError::Precondition("empty q trajectory".into()));
    }
    b0.require_mean_free()?;
    let total = cfg.n_steps();
    let mut out = MildSolution {
        trajectory: Trajectory::constant(b0.clone()),
        iterations: Vec::new(),
        windows: Vec::new(),
    };
    let mut window = total;
    let mut halvings = 0;
    let mut start = 0;
    while start < total {
        let len = window.min(total - start);
        let b_start = out.trajectory.last().expect("nonempty").clone();
        match solve_window(&b_start, start, len, q, p, cfg)? {
            Window::Converged(states, its) => {
                for (i, s) in states.into_iter().enumerate().skip(1) {
                    out.trajectory.push(cfg.time(start + i), s);
                }
                out.iterations.push(its);
                out.windows.push(len);
                start += len;
            }
            Window::Stalled => {
                halvings += 1;
                if halvings > cfg.max_halvings || len == 1 {
                    return Err(EmhdError::WindowTooLong { window: len as f64 * cfg.dt });
                }
                window = len.div_ceil(2);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::init::beltrami;
    use crate::solver::{evolve, Coupling, Scheme, StepperConfig};
    use crate::testing::random_band_field;

    #[test]
    fn requires_regularization() {
        let g = Grid3::new(8).unwrap();
        let b = beltrami(g, 1.0);
        let p = ModelParams::new(0.0, 2.0).unwrap();
        let q = Trajectory::constant(b.clone());
        assert!(matches!(
            linear_mild_solve(&b, &q, &p, &MildConfig::new(0.1, 1.0).unwrap()),
            Err(EmhdError::Precondition(_))
        ));
    }

    #[test]
    fn zero_q_is_heat_flow_in_one_iteration() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::with_dissipation(0.1, 2.0, 1.0, 0.01).unwrap();
        let b = random_band_field(g, 1.0, 4.0, 1);
        let q = Trajectory::constant(SpectralVectorField::zeros(g));
        let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(0.05, 0.5).unwrap()).unwrap();
        assert_eq!(sol.iterations, vec![1]);
        let exact = heat_semigroup(&b, 0.5, &p);
        assert!((sol.trajectory.last().unwrap() - &exact).max_abs() < 1e-13 * b.max_abs());
    }

    #[test]
    fn beltrami_decays_with_regularized_rate() {
        let g = Grid3::new(8).unwrap();
        let eps = 0.05;
        let p = ModelParams::with_dissipation(0.3, 2.0, 1.0, eps).unwrap();
        let b = beltrami(g, 1.0);
        let q = Trajectory::constant(b.clone());
        let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(0.1, 1.0).unwrap()).unwrap();
        for (t, s) in sol.trajectory.times.iter().zip(&sol.trajectory.states) {
            let exact = b.scale((-(1.0 + eps) * t).exp());
            assert!((s - &exact).max_abs() < 1e-14);
        }
    }

    #[test]
    fn long_windows_are_halved() {
        let g = Grid3::new(16).unwrap();
        let p = ModelParams::with_dissipation(0.0, 2.0, 1.0, 0.001).unwrap();
        let q0 = random_band_field(g, 1.0, 3.0, 8);
        let q = Trajectory::constant(q0.scale(30.0 / q0.l2_norm()));
        let b = random_band_field(g, 1.0, 3.0, 9);
        let b = b.scale(1.0 / b.l2_norm());
        let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(0.005, 0.5).unwrap()).unwrap();
        assert!(sol.windows.len() > 1, "{:?}", sol.windows);
        assert_eq!(sol.windows.iter().sum::<usize>(), 100);
    }

    #[test]
    fn approaches_frozen_evolution_as_regularization_vanishes() {
        let g = Grid3::new(16).unwrap();
        let b = random_band_field(g, 1.0, 3.0, 2);
        let b = b.scale(0.5 / b.l2_norm());
        let q = Trajectory::constant(b.clone());
        let t_end = 0.2;
        let reference_params = ModelParams::new(0.1, 2.0).unwrap();
        let reference = evolve(
            &b,
            &reference_params,
            &StepperConfig::new(1e-4, t_end, Scheme::Etd2rk, 100_000).unwrap(),
            Coupling::Frozen(&q),
        )
        .unwrap();
        let target = reference.final_state().unwrap();
        let h = 0.01;
        let mut errors = Vec::new();
        for (eps, dt) in [(1e-2, h), (1e-3, h / 2.0), (1e-4, h / 4.0)] {
            let p = ModelParams::with_dissipation(0.1, 2.0, 1.0, eps).unwrap();
            let sol = linear_mild_solve(&b, &q, &p, &MildConfig::new(dt, t_end).unwrap()).unwrap();
            errors.push((sol.trajectory.last().unwrap() - target).l2_norm());
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }
}
