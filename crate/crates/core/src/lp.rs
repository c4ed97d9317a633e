//! Exact two-phase simplex over the rationals.
//!
//! The solver works on a dense tableau. Free variables are split, finite lower
//! bounds are shifted to zero and upper bounds become extra rows. Every
//! standardized row keeps an identity column (its slack or an artificial) so
//! that the optimal basis inverse, and hence the dual values, can be read off
//! the final tableau.

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// Bounds on one variable. `lower: None` means unbounded below.
#[derive(Debug, Clone)]
pub struct VarBound {
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

impl Default for VarBound {
    fn default() -> Self {
        VarBound { lower: Some(Rat::zero()), upper: None }
    }
}

/// `maximize objective·x` subject to the constraints and bounds.
#[derive(Debug, Clone)]
pub struct RationalLp {
    num_vars: usize,
    objective: Vec<Rat>,
    constraints: Vec<Constraint>,
    bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index entering and leaving choices throughout.
    Bland,
    /// Steepest reduced cost, switching to Bland for good after a run of
    /// degenerate pivots.
    #[default]
    DantzigThenBland,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: Rat,
    pub x: Vec<Rat>,
    /// One value per constraint (not per bound), with the sign convention of a
    /// maximization: `<=` rows have `y >= 0`, `>=` rows `y <= 0`.
    pub duals: Vec<Rat>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

const DEGENERATE_SWITCH: usize = 50;

impl RationalLp {
    pub fn new(num_vars: usize) -> Self {
        RationalLp {
            num_vars,
            objective: vec![Rat::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![VarBound::default(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rat) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) -> usize {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var].lower = None;
    }

    pub fn set_lower(&mut self, var: usize, lower: Rat) {
        self.bounds[var].lower = Some(lower);
    }

    pub fn set_upper(&mut self, var: usize, upper: Rat) {
        self.bounds[var].upper = Some(upper);
    }

    pub fn solve(&self) -> LpOutcome {
        self.solve_with(PivotRule::default())
    }

    pub fn solve_with(&self, rule: PivotRule) -> LpOutcome {
        Tableau::standardize(self).run(self, rule)
    }

    /// Plain-text dump in an LP-format dialect understood by common solvers.
    pub fn to_lp_text(&self) -> String {
        use std::fmt::Write as _;
        let term = |j: usize, c: &Rat| format!("{} {} x{}", if c.is_negative() { "-" } else { "+" }, c.abs(), j);
        let mut s = String::from("Maximize\n obj:");
        for (j, c) in self.objective.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            let _ = write!(s, " {}", term(j, c));
        }
        s.push_str("\nSubject To\n");
        for (i, con) in self.constraints.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            for (j, c) in &con.coeffs {
                let _ = write!(s, " {}", term(*j, c));
            }
            let op = match con.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", con.rhs);
        }
        s.push_str("Bounds\n");
        for (j, b) in self.bounds.iter().enumerate() {
            match (&b.lower, &b.upper) {
                (None, None) => {
                    let _ = writeln!(s, " x{j} free");
                }
                (None, Some(u)) => {
                    let _ = writeln!(s, " -inf <= x{j} <= {u}");
                }
                (Some(l), Some(u)) => {
                    let _ = writeln!(s, " {l} <= x{j} <= {u}");
                }
                (Some(l), None) if !l.is_zero() => {
                    let _ = writeln!(s, " x{j} >= {l}");
                }
                _ => {}
            }
        }
        s.push_str("End\n");
        s
    }
}

/// How an original variable maps onto standardized columns.
struct VarMap {
    pos: usize,
    neg: Option<usize>,
    shift: Rat,
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    ncols: usize,
    is_artificial: Vec<bool>,
    /// Per standardized row: its identity column, whether it was negated, and
    /// the original constraint it came from (None for bound rows).
    row_meta: Vec<(usize, bool, Option<usize>)>,
    vars: Vec<VarMap>,
    cost: Vec<Rat>,
    pivots: usize,
}

impl Tableau {
    fn standardize(lp: &RationalLp) -> Tableau {
        let mut vars = Vec::with_capacity(lp.num_vars);
        let mut ncols = 0;
        for b in &lp.bounds {
            match &b.lower {
                Some(l) => {
                    vars.push(VarMap { pos: ncols, neg: None, shift: l.clone() });
                    ncols += 1;
                }
                None => {
                    vars.push(VarMap { pos: ncols, neg: Some(ncols + 1), shift: Rat::zero() });
                    ncols += 2;
                }
            }
        }
        let structural = ncols;

        // (coefficients over structural columns, relation, rhs, origin)
        let mut raw: Vec<(Vec<(usize, Rat)>, Relation, Rat, Option<usize>)> = Vec::new();
        for (i, con) in lp.constraints.iter().enumerate() {
            let mut coeffs = Vec::new();
            let mut rhs = con.rhs.clone();
            for (j, a) in &con.coeffs {
                let vm = &vars[*j];
                rhs.sub_mul(a, &vm.shift);
                coeffs.push((vm.pos, a.clone()));
                if let Some(n) = vm.neg {
                    coeffs.push((n, -a));
                }
            }
            raw.push((coeffs, con.relation, rhs, Some(i)));
        }
        for (j, b) in lp.bounds.iter().enumerate() {
            if let Some(u) = &b.upper {
                let vm = &vars[j];
                let mut coeffs = vec![(vm.pos, Rat::one())];
                if let Some(n) = vm.neg {
                    coeffs.push((n, -Rat::one()));
                }
                raw.push((coeffs, Relation::Le, u - &vm.shift, None));
            }
        }

        let m = raw.len();
        let slack_count = raw.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_needed: Vec<bool> = raw
            .iter()
            .map(|(_, rel, rhs, _)| match rel {
                Relation::Le => rhs.is_negative(),
                Relation::Ge => !rhs.is_negative(),
                Relation::Eq => true,
            })
            .collect();
        let art_count = art_needed.iter().filter(|&&b| b).count();
        let total = structural + slack_count + art_count;
        let mut rows = vec![vec![Rat::zero(); total]; m];
        let mut rhs_vec = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut is_artificial = vec![false; total];
        let mut row_meta = Vec::with_capacity(m);
        let mut next_slack = structural;
        let mut next_art = structural + slack_count;
        for (i, (coeffs, rel, rhs, origin)) in raw.into_iter().enumerate() {
            let negate = rhs.is_negative();
            let sign = if negate { -Rat::one() } else { Rat::one() };
            for (c, a) in coeffs {
                rows[i][c].add_mul(&sign, &a);
            }
            let mut id_col = None;
            if rel != Relation::Eq {
                let s = next_slack;
                next_slack += 1;
                let coef = if rel == Relation::Le { sign.clone() } else { -&sign };
                if coef.is_positive() {
                    id_col = Some(s);
                }
                rows[i][s] = coef;
            }
            if art_needed[i] {
                let a = next_art;
                next_art += 1;
                rows[i][a] = Rat::one();
                is_artificial[a] = true;
                id_col = Some(a);
            }
            let id = id_col.expect("every row has an identity column");
            basis.push(id);
            row_meta.push((id, negate, origin));
            rhs_vec.push(&rhs * &sign);
        }

        let mut cost = vec![Rat::zero(); total];
        for (j, c) in lp.objective.iter().enumerate() {
            let vm = &vars[j];
            cost[vm.pos] = c.clone();
            if let Some(n) = vm.neg {
                cost[n] = -c;
            }
        }
        Tableau { rows, rhs: rhs_vec, basis, ncols: total, is_artificial, row_meta, vars, cost, pivots: 0 }
    }

    fn reduced_costs(&self, cost: &[Rat]) -> (Vec<Rat>, Rat) {
        let mut z: Vec<Rat> = cost.iter().map(|c| -c).collect();
        let mut val = Rat::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[r].iter().enumerate() {
                if !a.is_zero() {
                    z[j].add_mul(cb, a);
                }
            }
            val.add_mul(cb, &self.rhs[r]);
        }
        (z, val)
    }

    fn pivot(&mut self, r: usize, j: usize, z: &mut [Rat], zval: &mut Rat) {
        let inv = self.rows[r][j].recip();
        let nz: Vec<usize> = (0..self.ncols).filter(|&c| !self.rows[r][c].is_zero()).collect();
        for &c in &nz {
            self.rows[r][c] = &self.rows[r][c] * &inv;
        }
        self.rhs[r] = &self.rhs[r] * &inv;
        let prow: Vec<(usize, Rat)> = nz.iter().map(|&c| (c, self.rows[r][c].clone())).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][j].is_zero() {
                continue;
            }
            let f = self.rows[i][j].clone();
            let row = &mut self.rows[i];
            for (c, v) in &prow {
                row[*c].sub_mul(&f, v);
            }
            self.rhs[i].sub_mul(&f, &prhs);
        }
        if !z[j].is_zero() {
            let f = z[j].clone();
            for (c, v) in &prow {
                z[*c].sub_mul(&f, v);
            }
            zval.sub_mul(&f, &prhs);
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Runs simplex iterations until optimal (true) or unbounded (false).
    fn iterate(&mut self, z: &mut [Rat], zval: &mut Rat, allow_art: bool, rule: PivotRule) -> bool {
        let mut bland = rule == PivotRule::Bland;
        let mut degenerate_run = 0;
        loop {
            let candidates = (0..self.ncols).filter(|&j| z[j].is_negative() && (allow_art || !self.is_artificial[j]));
            let entering = if bland {
                candidates.into_iter().next()
            } else {
                candidates.min_by(|&a, &b| z[a].cmp(&z[b]).then(a.cmp(&b)))
            };
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return false;
            };
            if ratio.is_zero() {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, j, z, zval);
        }
    }

    fn run(mut self, lp: &RationalLp, rule: PivotRule) -> LpOutcome {
        if self.is_artificial.iter().any(|&a| a) {
            let phase1: Vec<Rat> = self
                .is_artificial
                .iter()
                .map(|&a| if a { -Rat::one() } else { Rat::zero() })
                .collect();
            let (mut z, mut zval) = self.reduced_costs(&phase1);
            self.iterate(&mut z, &mut zval, true, rule);
            if zval.is_negative() {
                return LpOutcome::Infeasible;
            }
            self.drive_out_artificials();
        }
        let cost = self.cost.clone();
        let (mut z, mut zval) = self.reduced_costs(&cost);
        if !self.iterate(&mut z, &mut zval, false, rule) {
            return LpOutcome::Unbounded;
        }

        let mut xs = vec![Rat::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            xs[b] = self.rhs[r].clone();
        }
        let x: Vec<Rat> = self
            .vars
            .iter()
            .map(|vm| {
                let mut v = &vm.shift + &xs[vm.pos];
                if let Some(n) = vm.neg {
                    v -= &xs[n];
                }
                v
            })
            .collect();
        let mut duals = vec![Rat::zero(); lp.constraints.len()];
        for &(id, negated, origin) in &self.row_meta {
            if let Some(i) = origin {
                duals[i] = if negated { -&z[id] } else { z[id].clone() };
            }
        }
        let value = lp
            .objective
            .iter()
            .zip(&x)
            .fold(Rat::zero(), |mut acc, (c, v)| {
                if !c.is_zero() {
                    acc.add_mul(c, v);
                }
                acc
            });
        LpOutcome::Optimal(LpSolution { value, x, duals, pivots: self.pivots })
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and are dropped.
    fn drive_out_artificials(&mut self) {
        let mut dummy_z = vec![Rat::zero(); self.ncols];
        let mut dummy_val = Rat::zero();
        let mut r = 0;
        while r < self.rows.len() {
            if self.is_artificial[self.basis[r]] {
                let col = (0..self.ncols).find(|&j| !self.is_artificial[j] && !self.rows[r][j].is_zero());
                match col {
                    Some(j) => self.pivot(r, j, &mut dummy_z, &mut dummy_val),
                    None => {
                        // Dependent row. Duals are still read from every
                        // row's identity column, which stays valid.
                        self.rows.remove(r);
                        self.rhs.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}
