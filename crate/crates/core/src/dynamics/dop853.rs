//! Dormand–Prince 8(5,3) explicit Runge–Kutta stepper for complex state
//! vectors, with the combined 5th/3rd-order error estimate and a PI step
//! size controller.

use std::time::Instant;

use num_complex::Complex64;

use super::DynamicsError;

// Butcher tableau (12 stages; the 13th evaluation is the FSAL derivative).
pub(crate) const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
pub(crate) const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
pub(crate) const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
pub(crate) const E3: [f64; 12] = [-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082];
pub(crate) const E5: [f64; 12] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294];

const ORDER: f64 = 8.0;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const PI_BETA: f64 = 0.04;

/// Error tolerances: a step is accepted when the scaled error norm, with
/// per-component scale `atol + rtol * |y|`, is at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn halved(self) -> Self {
        Tolerance {
            rtol: self.rtol / 2.0,
            atol: self.atol / 2.0,
        }
    }
}

/// Bounds on one integration.
#[derive(Debug, Clone, Copy)]
pub struct StepLimits {
    pub max_steps: usize,
    pub deadline: Option<Instant>,
}

impl Default for StepLimits {
    fn default() -> Self {
        StepLimits {
            max_steps: 50_000_000,
            deadline: None,
        }
    }
}

/// Right-hand side `dy = f(t, y)`.
pub(crate) trait System {
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub(crate) struct Dop853 {
    k: Vec<Vec<Complex64>>,
    f_new: Vec<Complex64>,
    y_new: Vec<Complex64>,
    y_stage: Vec<Complex64>,
    err5: Vec<Complex64>,
    err3: Vec<Complex64>,
}

#[inline]
fn axpy(y: &mut [Complex64], x: &[Complex64], a: f64) {
    for (yy, &xx) in y.iter_mut().zip(x) {
        *yy += xx * a;
    }
}

fn rms_scaled(v: &[Complex64], y: &[Complex64], tol: Tolerance) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(d, yy)| {
            let sc = tol.atol + tol.rtol * yy.norm();
            d.norm_sqr() / (sc * sc)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

impl Dop853 {
    pub(crate) fn new(dim: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Dop853 {
            k: vec![vec![zero; dim]; 12],
            f_new: vec![zero; dim],
            y_new: vec![zero; dim],
            y_stage: vec![zero; dim],
            err5: vec![zero; dim],
            err3: vec![zero; dim],
        }
    }

    fn initial_step<S: System>(&mut self, sys: &S, t0: f64, y: &[Complex64], f0: &[Complex64], tol: Tolerance, span: f64) -> f64 {
        let d0 = rms_scaled(y, y, tol);
        let d1 = rms_scaled(f0, y, tol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for ((s, &yy), &ff) in self.y_stage.iter_mut().zip(y).zip(f0) {
            *s = yy + ff * h0;
        }
        sys.rhs(t0 + h0, &self.y_stage, &mut self.f_new);
        let diff: Vec<Complex64> = self.f_new.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms_scaled(&diff, y, tol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / (ORDER + 1.0))
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates from `t0` to `t1` in place, calling `on_step(t, y)` after
    /// every accepted step (including the final one at `t1`).
    pub(crate) fn integrate<S, F>(
        &mut self,
        sys: &S,
        t0: f64,
        t1: f64,
        y: &mut [Complex64],
        tol: Tolerance,
        limits: StepLimits,
        mut on_step: F,
    ) -> Result<IntegrationStats, DynamicsError>
    where
        S: System,
        F: FnMut(f64, &[Complex64]) -> Result<(), DynamicsError>,
    {
        let mut stats = IntegrationStats::default();
        if t1 <= t0 {
            return Ok(stats);
        }
        let dim = y.len();
        let mut t = t0;
        sys.rhs(t, y, &mut self.k[0]);
        stats.evaluations += 1;
        let first = self.k[0].clone();
        let mut h = self.initial_step(sys, t0, y, &first, tol, t1 - t0);
        stats.evaluations += 1;
        let mut err_prev: f64 = 1e-4;
        let mut rejected_last = false;

        while t < t1 {
            if stats.accepted >= limits.max_steps {
                return Err(DynamicsError::StepLimitExceeded {
                    steps: stats.accepted,
                    time: t,
                });
            }
            if let Some(deadline) = limits.deadline {
                if stats.accepted % 256 == 0 && Instant::now() >= deadline {
                    return Err(DynamicsError::WallClockExceeded { time: t });
                }
            }
            let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
            if h < min_step {
                return Err(DynamicsError::StepSizeUnderflow { time: t });
            }
            let last = t + h >= t1;
            let h_try = if last { t1 - t } else { h };

            for s in 1..12 {
                self.y_stage.copy_from_slice(y);
                for (i, &a) in A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        axpy(&mut self.y_stage, &self.k[i], a * h_try);
                    }
                }
                sys.rhs(t + C[s] * h_try, &self.y_stage, &mut self.k[s]);
            }
            stats.evaluations += 11;

            self.y_new.copy_from_slice(y);
            self.err5.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
            self.err3.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
            for i in 0..12 {
                if B[i] != 0.0 {
                    axpy(&mut self.y_new, &self.k[i], B[i] * h_try);
                }
                if E5[i] != 0.0 {
                    axpy(&mut self.err5, &self.k[i], E5[i]);
                }
                if E3[i] != 0.0 {
                    axpy(&mut self.err3, &self.k[i], E3[i]);
                }
            }
            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for j in 0..dim {
                let sc = tol.atol + tol.rtol * y[j].norm().max(self.y_new[j].norm());
                let inv = 1.0 / (sc * sc);
                e5 += self.err5[j].norm_sqr() * inv;
                e3 += self.err3[j].norm_sqr() * inv;
            }
            let err = if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                h_try * e5 / ((e5 + 0.01 * e3) * dim as f64).sqrt()
            };

            if err <= 1.0 {
                t = if last { t1 } else { t + h_try };
                y.copy_from_slice(&self.y_new);
                sys.rhs(t, y, &mut self.f_new);
                stats.evaluations += 1;
                std::mem::swap(&mut self.k[0], &mut self.f_new);
                stats.accepted += 1;
                on_step(t, y)?;

                let expo = 1.0 / ORDER - 0.75 * PI_BETA;
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    SAFETY * err.powf(-expo) * err_prev.powf(PI_BETA)
                };
                factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
                if rejected_last {
                    factor = factor.min(1.0);
                }
                err_prev = err.max(1e-4);
                h = h_try * factor;
                rejected_last = false;
            } else {
                let factor = (SAFETY * err.powf(-1.0 / ORDER)).max(MIN_FACTOR);
                h = h_try * factor;
                stats.rejected += 1;
                rejected_last = true;
            }
        }
        Ok(stats)
    }
}
