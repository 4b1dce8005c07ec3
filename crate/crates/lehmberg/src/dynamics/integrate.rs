use nalgebra::{DMatrix, DVector};

use super::{GeneratorMatrix, StateVector};
use crate::units::{ns_to_rate_time, rate_time_to_ns};
use crate::{Error, Result};

/// Adaptive-stepper settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub reltol: f64,
    pub abstol: f64,
    pub max_steps: usize,
    /// Number of evenly spaced samples returned (end points included).
    pub samples: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            reltol: 1e-9,
            abstol: 1e-12,
            max_steps: 2_000_000,
            samples: 2,
        }
    }
}

/// Time-stepping method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Dormand-Prince 5(4) with error control.
    Adaptive(IntegratorOptions),
    /// Repeated multiplication by `exp(Λ·step)`.
    Exponential { step_ns: f64 },
}

/// Sampled solution of `dw/dt = Λw`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<StateVector>,
    /// `‖Λw‖∞` at the initial and final samples.
    pub initial_residual: f64,
    pub final_residual: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.samples.last().expect("trajectories hold at least one sample")
    }
}

fn residual(g: &GeneratorMatrix, w: &DVector<f64>) -> f64 {
    g.apply(w).amax()
}

fn check_inputs(g: &GeneratorMatrix, w0: &StateVector, t_final_ns: f64) -> Result<()> {
    if w0.w.len() != g.len() {
        return Err(Error::shape(g.len(), w0.w.len()));
    }
    if !(t_final_ns >= w0.time_ns && t_final_ns.is_finite()) {
        return Err(Error::Integration(format!(
            "final time {t_final_ns} ns precedes start {} ns",
            w0.time_ns
        )));
    }
    Ok(())
}

fn sample_times(start: f64, stop: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|i| if i == n - 1 { stop } else { start + (stop - start) * i as f64 / (n - 1) as f64 })
        .collect()
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'a> {
    g: &'a DMatrix<f64>,
    opts: IntegratorOptions,
    h: f64,
    steps: usize,
}

impl Stepper<'_> {
    /// Advances `w` from `t` to `t_end` exactly.
    fn advance(&mut self, w: &mut DVector<f64>, mut t: f64, t_end: f64) -> Result<()> {
        let mut k1 = self.g * &*w;
        while t < t_end {
            if self.steps >= self.opts.max_steps {
                return Err(Error::Integration(format!(
                    "step limit {} reached at t = {:.6e} ns with step {:.3e} ns",
                    self.opts.max_steps,
                    rate_time_to_ns(t),
                    rate_time_to_ns(self.h)
                )));
            }
            let h = self.h.min(t_end - t);
            let k2 = self.g * (&*w + &k1 * (h * A21));
            let k3 = self.g * (&*w + (&k1 * A31 + &k2 * A32) * h);
            let k4 = self.g * (&*w + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h);
            let k5 = self.g * (&*w + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h);
            let k6 = self.g * (&*w + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h);
            let next = &*w + (&k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
            let k7 = self.g * &next;
            let err = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
            let norm = (err
                .iter()
                .zip(w.iter().zip(next.iter()))
                .map(|(e, (a, b))| {
                    let scale = self.opts.abstol + self.opts.reltol * a.abs().max(b.abs());
                    (e / scale).powi(2)
                })
                .sum::<f64>()
                / err.len().max(1) as f64)
                .sqrt();
            self.steps += 1;
            if !norm.is_finite() {
                return Err(Error::Integration(format!(
                    "non-finite error estimate at t = {:.6e} ns",
                    rate_time_to_ns(t)
                )));
            }
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            if norm <= 1.0 {
                t += h;
                *w = next;
                k1 = k7;
                // Keep the proposed step when the last one was clipped by an end point.
                if h == self.h || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
            }
            if self.h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {:.6e} ns",
                    rate_time_to_ns(t)
                )));
            }
        }
        Ok(())
    }
}

fn initial_step(g: &DMatrix<f64>) -> f64 {
    let scale = g.amax().max(1e-12);
    0.01 / scale
}

/// Integrates `dw/dt = Λw` from `w0` to `t_final_ns` with the adaptive stepper.
pub fn integrate(g: &GeneratorMatrix, w0: &StateVector, t_final_ns: f64, opts: IntegratorOptions) -> Result<Trajectory> {
    check_inputs(g, w0, t_final_ns)?;
    let times = sample_times(w0.time_ns, t_final_ns, opts.samples);
    let mut stepper = Stepper {
        g: g.matrix(),
        opts,
        h: initial_step(g.matrix()),
        steps: 0,
    };
    let mut w = w0.w.clone();
    let mut samples = vec![StateVector {
        w: w.clone(),
        time_ns: w0.time_ns,
    }];
    for pair in times.windows(2) {
        stepper.advance(&mut w, ns_to_rate_time(pair[0]), ns_to_rate_time(pair[1]))?;
        samples.push(StateVector {
            w: w.clone(),
            time_ns: pair[1],
        });
    }
    Ok(Trajectory {
        initial_residual: residual(g, &w0.w),
        final_residual: residual(g, &w),
        samples,
        steps: stepper.steps,
    })
}

/// Propagates with `exp(Λ·Δt)` between evenly spaced samples.
pub fn propagate_exponential(g: &GeneratorMatrix, w0: &StateVector, t_final_ns: f64, samples: usize) -> Result<Trajectory> {
    check_inputs(g, w0, t_final_ns)?;
    let times = sample_times(w0.time_ns, t_final_ns, samples);
    let dt = ns_to_rate_time(times[1] - times[0]);
    let propagator = (g.matrix() * dt).exp();
    let mut w = w0.w.clone();
    let mut out = vec![StateVector {
        w: w.clone(),
        time_ns: w0.time_ns,
    }];
    for &t in &times[1..] {
        w = &propagator * &w;
        out.push(StateVector { w: w.clone(), time_ns: t });
    }
    Ok(Trajectory {
        initial_residual: residual(g, &w0.w),
        final_residual: residual(g, &w),
        steps: times.len() - 1,
        samples: out,
    })
}

/// When a trajectory counts as stationary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyCriterion {
    /// Required `‖Λw‖∞ / ‖Λw₀‖∞`.
    pub relative_residual: f64,
    pub min_time_ns: f64,
    pub max_time_ns: f64,
}

impl Default for SteadyCriterion {
    fn default() -> Self {
        Self {
            relative_residual: 1e-6,
            min_time_ns: 800.0,
            max_time_ns: 1.0e7,
        }
    }
}

/// Evolves in chunks until both the residual and minimum-time conditions hold.
pub fn integrate_to_steady(g: &GeneratorMatrix, w0: &StateVector, criterion: SteadyCriterion, method: Method) -> Result<StateVector> {
    check_inputs(g, w0, w0.time_ns)?;
    let reference = residual(g, &w0.w);
    if reference == 0.0 {
        return Ok(w0.clone());
    }
    let chunk_ns = match method {
        Method::Exponential { step_ns } => step_ns,
        Method::Adaptive(_) => criterion.min_time_ns.max(1.0),
    };
    if chunk_ns.is_nan() || chunk_ns <= 0.0 {
        return Err(Error::Integration(format!("chunk length must be positive, got {chunk_ns}")));
    }
    let propagator = match method {
        Method::Exponential { .. } => Some((g.matrix() * ns_to_rate_time(chunk_ns)).exp()),
        Method::Adaptive(_) => None,
    };
    let mut state = w0.clone();
    loop {
        let t_next = state.time_ns + chunk_ns;
        state = match (&propagator, method) {
            (Some(p), _) => StateVector {
                w: p * &state.w,
                time_ns: t_next,
            },
            (None, Method::Adaptive(opts)) => integrate(g, &state, t_next, opts)?.last().clone(),
            (None, Method::Exponential { .. }) => unreachable!("propagator built for exponential method"),
        };
        let relative = residual(g, &state.w) / reference;
        if relative < criterion.relative_residual && state.time_ns >= criterion.min_time_ns {
            return Ok(state);
        }
        if state.time_ns >= criterion.max_time_ns {
            return Err(Error::Integration(format!(
                "no steady state by {:.3e} ns (relative residual {relative:.3e})",
                state.time_ns
            )));
        }
    }
}

/// Stationary state with the conserved total population of `w0`, by direct
/// solution of `Λw = 0` with one conserved row replaced by the normalization.
pub fn steady_state(g: &GeneratorMatrix, w0: &StateVector) -> Result<StateVector> {
    if w0.w.len() != g.len() {
        return Err(Error::shape(g.len(), w0.w.len()));
    }
    let conserved = g.conserved_indices();
    let Some(&row) = conserved.first() else {
        return Err(Error::Domain("generator has no conserved functional".into()));
    };
    let n = g.len();
    let mut a = g.matrix().clone();
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(row, j)] = 0.0;
    }
    for &k in conserved {
        a[(row, k)] = 1.0;
    }
    b[row] = conserved.iter().map(|&k| w0.w[k]).sum();

    let lu = a.clone().lu();
    let u = lu.u();
    let diag_max = u.diagonal().amax();
    let diag_min = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let solution = if diag_min > 1e-13 * diag_max { lu.solve(&b) } else { None };
    let scale = g.matrix().amax().max(1.0);
    match solution {
        Some(w) if residual(g, &w) < 1e-10 * scale => Ok(StateVector { w, time_ns: f64::INFINITY }),
        _ => {
            let singular = g.matrix().clone().svd(false, false).singular_values;
            let top = singular.amax();
            let dimension = singular.iter().filter(|&&s| s <= 1e-10 * top.max(1.0)).count();
            Err(Error::Degeneracy { dimension })
        }
    }
}
