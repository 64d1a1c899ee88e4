//! Dense two-phase simplex over nonnegative variables.
//!
//! Minimizes `c . x` subject to sparse rows `a . x {<=, >=, =} b` and
//! `x >= 0`. Pricing is Dantzig's rule with index tie-breaks, falling back
//! to Bland's rule after a degenerate stall so cycling cannot occur. Fully
//! deterministic for a fixed model.

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// A linear program in minimization form.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimplexError {
    Infeasible,
    Unbounded,
    /// Iteration limit hit; indicates a numerical pathology.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const STALL_LIMIT: u32 = 64;

impl DenseLp {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), num_vars);
        DenseLp {
            num_vars,
            objective,
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
}

struct Tableau {
    /// m x (cols + 1), row-major; last column is the rhs.
    data: Vec<f64>,
    /// Objective row (reduced costs), length cols + 1; last entry is the
    /// negated objective value.
    obj: Vec<f64>,
    cols: usize,
    m: usize,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize, scratch: &mut Vec<f64>) {
        let width = self.cols + 1;
        let inv = 1.0 / self.data[row * width + col];
        for j in 0..width {
            self.data[row * width + j] *= inv;
        }
        self.data[row * width + col] = 1.0;
        scratch.clear();
        scratch.extend_from_slice(&self.data[row * width..(row + 1) * width]);
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.data[i * width + col];
            if factor != 0.0 {
                let dst = &mut self.data[i * width..(i + 1) * width];
                for (d, s) in dst.iter_mut().zip(scratch.iter()) {
                    *d -= factor * s;
                }
                dst[col] = 0.0;
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for (d, s) in self.obj.iter_mut().zip(scratch.iter()) {
                *d -= factor * s;
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }
}

/// Solve the program; returns a basic optimal solution.
pub fn solve(lp: &DenseLp) -> Result<LpSolution, SimplexError> {
    let m = lp.rows.len();
    let n = lp.num_vars;

    // Column layout: structural, then slack/surplus, then artificial.
    let mut slack_of_row = vec![usize::MAX; m];
    let mut num_slacks = 0usize;
    for (i, row) in lp.rows.iter().enumerate() {
        let rhs_negative = row.rhs < 0.0;
        let effective = match (row.relation, rhs_negative) {
            (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
            (Relation::Ge, false) | (Relation::Le, true) => Relation::Ge,
            (Relation::Eq, _) => Relation::Eq,
        };
        if effective != Relation::Eq {
            slack_of_row[i] = n + num_slacks;
            num_slacks += 1;
        }
    }
    let art_start = n + num_slacks;
    let mut num_arts = 0usize;
    let mut art_of_row = vec![usize::MAX; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let rhs_negative = row.rhs < 0.0;
        let effective = match (row.relation, rhs_negative) {
            (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
            (Relation::Ge, false) | (Relation::Le, true) => Relation::Ge,
            (Relation::Eq, _) => Relation::Eq,
        };
        if effective != Relation::Le {
            art_of_row[i] = art_start + num_arts;
            num_arts += 1;
        }
    }
    let cols = art_start + num_arts;
    let width = cols + 1;

    let mut tableau = Tableau {
        data: vec![0.0; m * width],
        obj: vec![0.0; width],
        cols,
        m,
        basis: vec![usize::MAX; m],
    };

    for (i, row) in lp.rows.iter().enumerate() {
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for &(j, a) in &row.coeffs {
            tableau.data[i * width + j] += sign * a;
        }
        tableau.data[i * width + cols] = sign * row.rhs;
        let rhs_negative = row.rhs < 0.0;
        let effective = match (row.relation, rhs_negative) {
            (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
            (Relation::Ge, false) | (Relation::Le, true) => Relation::Ge,
            (Relation::Eq, _) => Relation::Eq,
        };
        match effective {
            Relation::Le => {
                tableau.data[i * width + slack_of_row[i]] = 1.0;
                tableau.basis[i] = slack_of_row[i];
            }
            Relation::Ge => {
                tableau.data[i * width + slack_of_row[i]] = -1.0;
                tableau.data[i * width + art_of_row[i]] = 1.0;
                tableau.basis[i] = art_of_row[i];
            }
            Relation::Eq => {
                tableau.data[i * width + art_of_row[i]] = 1.0;
                tableau.basis[i] = art_of_row[i];
            }
        }
    }

    // Phase 1: minimize the artificial sum.
    if num_arts > 0 {
        for j in 0..width {
            tableau.obj[j] = 0.0;
        }
        for j in art_start..cols {
            tableau.obj[j] = 1.0;
        }
        for i in 0..m {
            if tableau.basis[i] >= art_start {
                for j in 0..width {
                    tableau.obj[j] -= tableau.data[i * width + j];
                }
                tableau.obj[tableau.basis[i]] = 0.0;
            }
        }
        run_simplex(&mut tableau, cols)?;
        let phase1 = -tableau.obj[cols];
        if phase1 > FEAS_TOL {
            return Err(SimplexError::Infeasible);
        }
        // Drive surviving artificials out of the basis at level zero.
        let mut scratch = Vec::new();
        for i in 0..m {
            if tableau.basis[i] >= art_start {
                let mut entering = None;
                for j in 0..art_start {
                    if tableau.at(i, j).abs() > PIVOT_TOL {
                        entering = Some(j);
                        break;
                    }
                }
                if let Some(j) = entering {
                    tableau.pivot(i, j, &mut scratch);
                }
                // A fully zero row is redundant; its artificial stays basic
                // at value zero and is barred from re-entering in phase 2.
            }
        }
    }

    // Phase 2: real objective, artificial columns barred from entering.
    for j in 0..width {
        tableau.obj[j] = 0.0;
    }
    for j in 0..n {
        tableau.obj[j] = lp.objective[j];
    }
    for i in 0..m {
        let b = tableau.basis[i];
        let cost = if b < n { lp.objective[b] } else { 0.0 };
        if cost != 0.0 {
            for j in 0..width {
                tableau.obj[j] -= cost * tableau.data[i * width + j];
            }
            tableau.obj[b] = 0.0;
        }
    }
    run_simplex(&mut tableau, art_start)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if tableau.basis[i] < n {
            x[tableau.basis[i]] = tableau.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

/// Pivots until no entering column among `0..allowed_cols` improves.
fn run_simplex(tableau: &mut Tableau, allowed_cols: usize) -> Result<(), SimplexError> {
    let m = tableau.m;
    let cols = tableau.cols;
    let max_iters = 50_000 + 200 * (m + cols);
    let mut stall = 0u32;
    let mut bland = false;
    let mut last_obj = -tableau.obj[cols];
    let mut scratch = Vec::new();

    for _ in 0..max_iters {
        let mut entering = None;
        if bland {
            for j in 0..allowed_cols {
                if tableau.obj[j] < -COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -COST_TOL;
            for j in 0..allowed_cols {
                if tableau.obj[j] < best {
                    best = tableau.obj[j];
                    entering = Some(j);
                }
            }
        }
        let Some(enter) = entering else {
            return Ok(());
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tableau.at(i, enter);
            if a > PIVOT_TOL {
                let ratio = tableau.rhs(i) / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((best_i, best_ratio)) => {
                        if ratio < best_ratio - 1e-12
                            || ((ratio - best_ratio).abs() <= 1e-12
                                && tableau.basis[i] < tableau.basis[best_i])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(SimplexError::Unbounded);
        };

        tableau.pivot(row, enter, &mut scratch);

        let obj = -tableau.obj[cols];
        if (last_obj - obj).abs() <= 1e-12 * (1.0 + obj.abs()) {
            stall += 1;
            if stall >= STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
            bland = false;
            last_obj = obj;
        }
    }
    Err(SimplexError::Stalled)
}
