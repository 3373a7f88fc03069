//! Exact solver for the two-variable QPs used by every controller:
//!
//! ```text
//! min ½ (u - u_ref)² + λ e²   s.t.   c_u u + c_e e + c_0 >= 0  for every row
//! ```
//!
//! With two decision variables the optimum lies on an active set of at most
//! two rows, so enumerating the unconstrained point, every single-row
//! projection and every row pair is exhaustive.

/// Primal feasibility tolerance on row values.
pub const FEAS_TOL: f64 = 1e-9;

/// What a row encodes; used for diagnostics and residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    ControlUpper,
    ControlLower,
    RearEnd,
    Merge,
    SpeedMax,
    SpeedMin,
    Clf,
    /// Restricts the sign of `u` (used by the event-triggered merge row).
    SignHint,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpRow {
    pub cu: f64,
    pub ce: f64,
    pub c0: f64,
    pub kind: RowKind,
}

impl QpRow {
    pub fn new(cu: f64, ce: f64, c0: f64) -> Self {
        Self {
            cu,
            ce,
            c0,
            kind: RowKind::Other,
        }
    }

    pub fn with_kind(mut self, kind: RowKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn eval(&self, u: f64, e: f64) -> f64 {
        self.cu * u + self.ce * e + self.c0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub u_ref: f64,
    pub lambda: f64,
    pub rows: Vec<QpRow>,
}

impl QpProblem {
    /// Problem with only the control bounds `u_min <= u <= u_max`.
    pub fn with_bounds(u_ref: f64, lambda: f64, u_min: f64, u_max: f64) -> Self {
        Self {
            u_ref,
            lambda,
            rows: vec![
                QpRow::new(-1.0, 0.0, u_max).with_kind(RowKind::ControlUpper),
                QpRow::new(1.0, 0.0, -u_min).with_kind(RowKind::ControlLower),
            ],
        }
    }

    pub fn push(&mut self, row: QpRow) {
        self.rows.push(row);
    }

    pub fn objective(&self, u: f64, e: f64) -> f64 {
        0.5 * (u - self.u_ref).powi(2) + self.lambda * e * e
    }

    pub fn is_feasible_point(&self, u: f64, e: f64) -> bool {
        self.rows.iter().all(|r| r.eval(u, e) >= -FEAS_TOL)
    }

    pub fn row(&self, kind: RowKind) -> Option<&QpRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub status: QpStatus,
    pub u: f64,
    pub e: f64,
    pub objective: f64,
    /// Indices of the rows held as equalities by the returned candidate.
    pub active_set: Vec<usize>,
}

impl QpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == QpStatus::Feasible
    }
}

/// Candidate minimizers of `½ (u - u0)² + w e²` (with `w > 0`) restricted
/// to each active set of size 0, 1 and 2, in tie-break order.
fn candidates(rows: &[QpRow], u0: f64, w: f64) -> impl Iterator<Item = (f64, f64, Vec<usize>)> + '_ {
    // metric H = diag(1, 2w); projection of (u0, 0) onto a·x + c = 0 is
    // x0 - H⁻¹ a (a·x0 + c) / (aᵀ H⁻¹ a)
    let h_inv_e = 1.0 / (2.0 * w);
    let free = std::iter::once((u0, 0.0, Vec::new()));
    let singles = rows.iter().enumerate().filter_map(move |(i, r)| {
        let denom = r.cu * r.cu + r.ce * r.ce * h_inv_e;
        if denom <= 1e-300 {
            return None;
        }
        let resid = r.cu * u0 + r.c0;
        let scale = resid / denom;
        Some((u0 - r.cu * scale, -r.ce * h_inv_e * scale, vec![i]))
    });
    let n = rows.len();
    let pairs = (0..n).flat_map(move |i| {
        (i + 1..n).filter_map(move |j| {
            let (a, b) = (&rows[i], &rows[j]);
            let det = a.cu * b.ce - a.ce * b.cu;
            let scale = (a.cu.abs() + a.ce.abs()) * (b.cu.abs() + b.ce.abs());
            if det.abs() <= 1e-12 * scale.max(1e-300) {
                return None;
            }
            let u = (-a.c0 * b.ce + b.c0 * a.ce) / det;
            let e = (-a.cu * b.c0 + b.cu * a.c0) / det;
            Some((u, e, vec![i, j]))
        })
    });
    free.chain(singles).chain(pairs)
}

fn better(obj: f64, best: f64) -> bool {
    obj < best - 1e-12 * (1.0 + best.abs())
}

/// Solves the QP exactly by active-set enumeration.
pub fn solve(p: &QpProblem) -> QpSolution {
    let mut best: Option<(f64, f64, f64, Vec<usize>)> = None;
    for (u, e, active) in candidates(&p.rows, p.u_ref, p.lambda) {
        if !(u.is_finite() && e.is_finite()) || !p.is_feasible_point(u, e) {
            continue;
        }
        let obj = p.objective(u, e);
        match &best {
            Some((_, _, b, _)) if !better(obj, *b) => {}
            _ => best = Some((u, e, obj, active)),
        }
    }
    if let Some((u, e, objective, active_set)) = best {
        return QpSolution {
            status: QpStatus::Feasible,
            u,
            e,
            objective,
            active_set,
        };
    }
    // No KKT candidate survived the tolerance; accept any feasible point
    // the feasibility search finds, otherwise report infeasibility.
    if let Some((u, e)) = feasible_point(p) {
        return QpSolution {
            status: QpStatus::Feasible,
            u,
            e,
            objective: p.objective(u, e),
            active_set: Vec::new(),
        };
    }
    QpSolution {
        status: QpStatus::Infeasible,
        u: f64::NAN,
        e: f64::NAN,
        objective: f64::INFINITY,
        active_set: Vec::new(),
    }
}

/// A point of the constraint polytope: the minimum-norm point, found by the
/// same enumeration applied to `½ (u² + e²)`.
fn feasible_point(p: &QpProblem) -> Option<(f64, f64)> {
    candidates(&p.rows, 0.0, 0.5)
        .filter(|(u, e, _)| u.is_finite() && e.is_finite())
        .find(|(u, e, _)| p.is_feasible_point(*u, *e))
        .map(|(u, e, _)| (u, e))
}

/// True iff the constraint polytope in `(u, e)` is nonempty.
pub fn feasibility_check(p: &QpProblem) -> bool {
    feasible_point(p).is_some()
}
