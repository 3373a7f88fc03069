//! Unconstrained energy/time optimal trajectory used as the tracking target.
//!
//! Minimizing `beta (tf - t0) + ∫ u²/2` under double-integrator dynamics
//! with fixed entry state, terminal position `L`, free terminal speed and
//! free terminal time yields a control linear in time, `u*(t) = a t + b`.
//! The three unknowns solve
//!
//! ```text
//! a tf + b = 0                                   (free terminal speed)
//! a tf³/6 + b tf²/2 + v0 tf = L                  (reach the merging point)
//! beta + a (a tf²/2 + b tf + v0) = 0             (free terminal time)
//! ```

use crate::error::{Error, Result};
use crate::model::VehicleLimits;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSolution {
    /// Slope of the optimal control, m/s³.
    pub a: f64,
    /// Optimal control at entry, m/s².
    pub b: f64,
    /// Planned travel time from entry, s.
    pub tf: f64,
    /// Entry speed, m/s.
    pub v0: f64,
}

impl ReferenceSolution {
    /// Constant-speed plan; exact when `beta == 0`.
    pub fn coasting(v0: f64, length: f64) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            tf: length / v0,
            v0,
        }
    }

    pub fn is_coasting(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// Unclamped `u*(t)` for `t` in `[0, tf]`.
    pub fn control_raw(&self, t: f64) -> f64 {
        self.a * t + self.b
    }

    pub fn speed_raw(&self, t: f64) -> f64 {
        0.5 * self.a * t * t + self.b * t + self.v0
    }

    pub fn position_raw(&self, t: f64) -> f64 {
        self.a * t.powi(3) / 6.0 + 0.5 * self.b * t * t + self.v0 * t
    }

    /// `beta tf + ∫₀^tf u*²/2`.
    pub fn cost(&self, beta: f64) -> f64 {
        let (a, b, t) = (self.a, self.b, self.tf);
        beta * t + 0.5 * (a * a * t.powi(3) / 3.0 + a * b * t * t + b * b * t)
    }

    /// Residuals of the three optimality conditions.
    pub fn residuals(&self, length: f64, beta: f64) -> [f64; 3] {
        residuals([self.a, self.b, self.tf], self.v0, length, beta)
    }

    /// Reference control at `t_since_entry`, clamped to the control bounds;
    /// zero once the planned exit time has passed.
    pub fn ref_control(&self, t_since_entry: f64, lim: &VehicleLimits) -> f64 {
        if t_since_entry > self.tf {
            return 0.0;
        }
        lim.clamp_u(self.control_raw(t_since_entry.max(0.0)))
    }

    /// Reference speed at `t_since_entry`, clamped to the speed bounds and
    /// frozen at `v*(tf)` after the planned exit.
    pub fn ref_speed(&self, t_since_entry: f64, lim: &VehicleLimits) -> f64 {
        let t = t_since_entry.clamp(0.0, self.tf);
        lim.clamp_v(self.speed_raw(t))
    }
}

fn residuals(p: [f64; 3], v0: f64, length: f64, beta: f64) -> [f64; 3] {
    let [a, b, t] = p;
    [
        a * t + b,
        a * t.powi(3) / 6.0 + 0.5 * b * t * t + v0 * t - length,
        beta + a * (0.5 * a * t * t + b * t + v0),
    ]
}

fn jacobian(p: [f64; 3], v0: f64) -> [[f64; 3]; 3] {
    let [a, b, t] = p;
    let vf = 0.5 * a * t * t + b * t + v0;
    [
        [t, 1.0, a],
        [t.powi(3) / 6.0, 0.5 * t * t, 0.5 * a * t * t + b * t + v0],
        [vf + 0.5 * a * t * t, a * t, a * (a * t + b)],
    ]
}

fn norm(r: &[f64; 3]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = m;
    let mut b = rhs;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Travel time from the reduced optimality condition: eliminating `b` and
/// `a` leaves one equation in `tf`, negative near zero and equal to `beta`
/// at the coasting time, solved by bisection.
fn bracketed_travel_time(v0: f64, length: f64, beta: f64) -> f64 {
    let reduced = |t: f64| {
        let a = 3.0 * (v0 * t - length) / t.powi(3);
        beta + a * (v0 - 0.5 * a * t * t)
    };
    let (mut lo, mut hi) = (0.0, length / v0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reduced(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the optimality system by damped Newton, started from the root of
/// the reduced equation.
///
/// On [`Error::NoConvergence`] callers fall back to
/// [`ReferenceSolution::coasting`].
pub fn solve_reference(v0: f64, length: f64, beta: f64) -> Result<ReferenceSolution> {
    if !(v0 > 0.0 && length > 0.0 && beta >= 0.0) {
        return Err(Error::Validation(format!(
            "reference needs v0 > 0, L > 0, beta >= 0 (got {v0}, {length}, {beta})"
        )));
    }
    if beta == 0.0 {
        return Ok(ReferenceSolution::coasting(v0, length));
    }
    let t = bracketed_travel_time(v0, length, beta);
    let a = 3.0 * (v0 * t - length) / t.powi(3);
    let mut p = [a, -a * t, t];
    let mut r = residuals(p, v0, length, beta);
    let mut rn = norm(&r);
    for _ in 0..MAX_ITERATIONS {
        if r.iter().all(|x| x.abs() < TOLERANCE) {
            return Ok(ReferenceSolution {
                a: p[0],
                b: p[1],
                tf: p[2],
                v0,
            });
        }
        let Some(step) = solve3(jacobian(p, v0), [-r[0], -r[1], -r[2]]) else {
            break;
        };
        let mut damping = 1.0;
        let mut accepted = false;
        while damping > 1e-8 {
            let cand = [
                p[0] + damping * step[0],
                p[1] + damping * step[1],
                p[2] + damping * step[2],
            ];
            if cand[2] > 0.0 {
                let rc = residuals(cand, v0, length, beta);
                let rcn = norm(&rc);
                if rcn < rn || (rcn <= rn && damping == 1.0) {
                    p = cand;
                    r = rc;
                    rn = rcn;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.iter().all(|x| x.abs() < TOLERANCE) {
        return Ok(ReferenceSolution {
            a: p[0],
            b: p[1],
            tf: p[2],
            v0,
        });
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: rn,
    })
}

/// [`solve_reference`] with the coasting fallback applied.
pub fn reference_or_coast(v0: f64, length: f64, beta: f64) -> ReferenceSolution {
    solve_reference(v0, length, beta).unwrap_or_else(|_| ReferenceSolution::coasting(v0, length))
}
