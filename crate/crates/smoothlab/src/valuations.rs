//! Combinatorial valuations over item sets.
//!
//! Two representations: XOS (max over additive clauses), the form auction
//! bidders play with, and explicit tables over all `2^m` sets, the ground
//! truth for class-membership checks. Item sets are bitmasks, `m <= 16`.

use std::cmp::Ordering;

use crate::error::{LabError, Result};

pub const MAX_ITEMS: usize = 16;

/// Sum of `values[j]` over the items of `mask`, ascending item order.
pub fn mask_sum(values: &[f64], mask: u32) -> f64 {
    let mut acc = 0.0;
    let mut rest = mask;
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        acc += values[j];
        rest &= rest - 1;
    }
    acc
}

/// Items of a mask in ascending order.
pub fn mask_items(mask: u32) -> Vec<usize> {
    let mut items = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        items.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    items
}

/// Lexicographic order on the sorted item sequences of two sets, with the
/// empty set first. `{1,2} < {2}` because `[1,2] < [2]` elementwise.
pub fn set_lex_cmp(a: u32, b: u32) -> Ordering {
    let (mut ra, mut rb) = (a, b);
    loop {
        match (ra, rb) {
            (0, 0) => return Ordering::Equal,
            (0, _) => return Ordering::Less,
            (_, 0) => return Ordering::Greater,
            _ => {
                let (la, lb) = (ra.trailing_zeros(), rb.trailing_zeros());
                match la.cmp(&lb) {
                    Ordering::Equal => {
                        ra &= ra - 1;
                        rb &= rb - 1;
                    }
                    other => return other,
                }
            }
        }
    }
}

/// An XOS (fractionally subadditive) valuation: max over additive clauses.
#[derive(Clone, Debug)]
pub struct XOSValuation {
    m: usize,
    clauses: Vec<Vec<f64>>,
}

impl XOSValuation {
    pub fn new(m: usize, clauses: Vec<Vec<f64>>) -> Result<Self> {
        if m > MAX_ITEMS {
            return Err(LabError::Invariant(format!("m={m} exceeds {MAX_ITEMS}")));
        }
        if clauses.is_empty() {
            return Err(LabError::Invariant("XOS needs at least one clause".into()));
        }
        for c in &clauses {
            if c.len() != m {
                return Err(LabError::Invariant("clause length must equal m".into()));
            }
            if c.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(LabError::Invariant(
                    "clause entries must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self { m, clauses })
    }

    /// Additive valuation as the single-clause special case.
    pub fn additive(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        Self::new(m, vec![values])
    }

    /// Unit-demand valuation with the given per-item values.
    pub fn unit_demand(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        let clauses = (0..m)
            .map(|j| {
                let mut c = vec![0.0; m];
                c[j] = values[j];
                c
            })
            .collect();
        Self::new(m, clauses)
    }

    pub fn items(&self) -> usize {
        self.m
    }

    pub fn clauses(&self) -> &[Vec<f64>] {
        &self.clauses
    }

    pub fn value(&self, set: u32) -> f64 {
        self.clauses
            .iter()
            .map(|c| mask_sum(c, set))
            .fold(0.0, f64::max)
    }

    /// The maximizing additive clause on `set`, zeroed outside `set`; ties go
    /// to the lowest clause index. Satisfies `Σ_{j∈set} a_j = value(set)` and
    /// `Σ_{j∈T} a_j <= value(T)` for every `T ⊆ set`. The empty set yields the
    /// zero vector.
    pub fn supporting_additive(&self, set: u32) -> Vec<f64> {
        let mut best = 0usize;
        let mut best_val = mask_sum(&self.clauses[0], set);
        for (k, c) in self.clauses.iter().enumerate().skip(1) {
            let v = mask_sum(c, set);
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        let mut a = vec![0.0; self.m];
        for j in mask_items(set) {
            a[j] = self.clauses[best][j];
        }
        a
    }

    /// Exact expansion into a table (`m <= 16`).
    pub fn to_table(&self) -> TableValuation {
        let values = (0u32..1 << self.m).map(|s| self.value(s)).collect();
        TableValuation::new(self.m, values).expect("XOS expands to a valid table")
    }

    /// Largest clause entry; bid grids must reach it.
    pub fn max_entry(&self) -> f64 {
        self.clauses
            .iter()
            .flat_map(|c| c.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// An explicit valuation over all `2^m` sets, indexed by bitmask.
#[derive(Clone, Debug)]
pub struct TableValuation {
    m: usize,
    values: Vec<f64>,
}

impl TableValuation {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m > MAX_ITEMS {
            return Err(LabError::Invariant(format!("m={m} exceeds {MAX_ITEMS}")));
        }
        if values.len() != 1 << m {
            return Err(LabError::Invariant(format!(
                "table needs {} entries, got {}",
                1u32 << m,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(LabError::Invariant("v(∅) must be 0".into()));
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(LabError::Invariant(
                "table entries must be finite and nonnegative".into(),
            ));
        }
        for s in 0u32..1 << m {
            for j in 0..m {
                if s & (1 << j) == 0 && values[(s | 1 << j) as usize] < values[s as usize] {
                    return Err(LabError::Invariant(format!(
                        "table not monotone at set {s:#b} item {j}"
                    )));
                }
            }
        }
        Ok(Self { m, values })
    }

    pub fn items(&self) -> usize {
        self.m
    }

    pub fn value(&self, set: u32) -> f64 {
        self.values[set as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A bidder valuation in either representation: XOS plays directly, tables go
/// through the cover LP.
#[derive(Clone, Debug)]
pub enum Valuation {
    Xos(XOSValuation),
    Table(TableValuation),
}

impl Valuation {
    pub fn items(&self) -> usize {
        match self {
            Valuation::Xos(v) => v.items(),
            Valuation::Table(v) => v.items(),
        }
    }

    pub fn value(&self, set: u32) -> f64 {
        match self {
            Valuation::Xos(v) => v.value(set),
            Valuation::Table(v) => v.value(set),
        }
    }

    /// The additive vector backing deviation bids: the supporting clause for
    /// XOS, the dominated cover LP solution for tables.
    pub fn cover(&self, set: u32) -> Vec<f64> {
        match self {
            Valuation::Xos(v) => v.supporting_additive(set),
            Valuation::Table(v) => dominated_cover(v, set).0,
        }
    }

    /// `β` of this valuation (1 for XOS by construction).
    pub fn beta(&self) -> f64 {
        match self {
            Valuation::Xos(_) => 1.0,
            Valuation::Table(v) => beta_fsubadditive(v),
        }
    }

    /// Largest value the bid grid has to reach for deviation bids.
    pub fn grid_reach(&self) -> f64 {
        match self {
            Valuation::Xos(v) => v.max_entry(),
            // cover entries are bounded by singleton values
            Valuation::Table(v) => (0..v.items())
                .map(|j| v.value(1 << j))
                .fold(0.0, f64::max),
        }
    }
}

/// `v(S∪T) <= v(S) + v(T)` for all S, T. Monotonicity reduces the check to
/// disjoint pairs.
pub fn is_subadditive(val: &TableValuation) -> bool {
    let m = val.items();
    for s in 1u32..1 << m {
        let complement = ((1u32 << m) - 1) & !s;
        // enumerate nonempty subsets of the complement
        let mut t = complement;
        while t != 0 {
            if val.value(s | t) > val.value(s) + val.value(t) + 1e-12 {
                return false;
            }
            t = (t - 1) & complement;
        }
    }
    true
}

/// Diminishing returns: `v(A∪{i}) + v(A∪{j}) >= v(A∪{i,j}) + v(A)`.
pub fn is_submodular(val: &TableValuation) -> bool {
    let m = val.items();
    for a in 0u32..1 << m {
        for i in 0..m {
            if a & (1 << i) != 0 {
                continue;
            }
            for j in (i + 1)..m {
                if a & (1 << j) != 0 {
                    continue;
                }
                let (bi, bj) = (a | 1 << i, a | 1 << j);
                if val.value(bi) + val.value(bj) < val.value(bi | bj) + val.value(a) - 1e-12 {
                    return false;
                }
            }
        }
    }
    true
}

/// Minimal `β >= 1` such that every set admits an additive vector covering a
/// `1/β` fraction of its value while dominated by `v` on all subsets.
///
/// Per set the cover LP `max a(S) s.t. a(T) <= v(T) ∀T⊆S, a >= 0` is solved
/// by exhaustive vertex search for `|S| <= 4` and by dense simplex beyond.
/// Returns `f64::INFINITY` when some set has positive value but a zero cover.
pub fn beta_fsubadditive(val: &TableValuation) -> f64 {
    let m = val.items();
    let mut beta = 1.0f64;
    for s in 1u32..1 << m {
        let vs = val.value(s);
        if vs == 0.0 {
            continue;
        }
        let (_, best) = dominated_cover(val, s);
        if best <= 1e-12 * vs.max(1.0) {
            return f64::INFINITY;
        }
        beta = beta.max(vs / best);
    }
    beta
}

/// Solves the per-set cover LP `max a(S) s.t. a(T) <= v(T) ∀T⊆S, a >= 0` and
/// returns the maximizing additive vector (length `m`, zero outside `S`) and
/// its value. This is the `β`-scaled analogue of a supporting additive
/// valuation: `a(S) >= v(S)/β` with `a` dominated by `v` on all subsets.
pub fn dominated_cover(val: &TableValuation, s: u32) -> (Vec<f64>, f64) {
    let items = mask_items(s);
    let k = items.len();
    if k == 0 {
        return (vec![0.0; val.items()], 0.0);
    }
    // constraint rows: for each nonempty T ⊆ S, Σ_{j∈T} a_j <= v(T)
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity((1 << k) - 1);
    let mut t = s;
    loop {
        if t != 0 {
            let coeffs = items
                .iter()
                .map(|j| if t & (1 << j) != 0 { 1.0 } else { 0.0 })
                .collect();
            rows.push((coeffs, val.value(t)));
        }
        if t == 0 {
            break;
        }
        t = (t - 1) & s;
    }
    let (point, value) = if k <= 4 {
        vertex_search_max(&rows, k)
    } else {
        simplex_max(&rows, k)
    };
    let mut full = vec![0.0; val.items()];
    for (pos, &j) in items.iter().enumerate() {
        full[j] = point[pos].max(0.0);
    }
    (full, value)
}

/// Enumerates all basic solutions (intersections of k tight constraints,
/// including nonnegativity planes) and maximizes `Σ a_j` over feasible ones.
fn vertex_search_max(rows: &[(Vec<f64>, f64)], k: usize) -> (Vec<f64>, f64) {
    // tight-set candidates: constraint rows plus axis planes a_j = 0
    let mut planes: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let n = planes.len();
    // a = 0 is always feasible
    let mut best_point = vec![0.0; k];
    let mut best = 0.0f64;
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        if let Some(point) = solve_square(&planes, &combo, k) {
            if point.iter().all(|x| *x >= -1e-9)
                && rows
                    .iter()
                    .all(|(c, b)| dot(c, &point) <= b + 1e-9)
            {
                let value = point.iter().sum::<f64>();
                if value > best {
                    best = value;
                    best_point = point;
                }
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return (best_point, best);
            }
            i -= 1;
            if combo[i] != i + n - k {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination on the k×k system selected by `combo`.
fn solve_square(planes: &[(Vec<f64>, f64)], combo: &[usize], k: usize) -> Option<Vec<f64>> {
    let mut mat: Vec<Vec<f64>> = combo
        .iter()
        .map(|&r| {
            let mut row = planes[r].0.clone();
            row.push(planes[r].1);
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| {
            mat[a][col]
                .abs()
                .partial_cmp(&mat[b][col].abs())
                .unwrap_or(Ordering::Equal)
        })?;
        if mat[pivot][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, pivot);
        let p = mat[col][col];
        for r in 0..k {
            if r != col {
                let f = mat[r][col] / p;
                if f != 0.0 {
                    for c in col..=k {
                        let sub = f * mat[col][c];
                        mat[r][c] -= sub;
                    }
                }
            }
        }
    }
    Some((0..k).map(|r| mat[r][k] / mat[r][r]).collect())
}

/// Phase-II dense simplex for `max Σ a_j s.t. rows, a >= 0` with Bland's rule.
/// All right-hand sides are nonnegative, so the slack basis is feasible.
fn simplex_max(rows: &[(Vec<f64>, f64)], k: usize) -> (Vec<f64>, f64) {
    let m = rows.len();
    let cols = k + m + 1; // variables, slacks, rhs
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for (r, (coeffs, b)) in rows.iter().enumerate() {
        let mut row = vec![0.0; cols];
        row[..k].copy_from_slice(coeffs);
        row[k + r] = 1.0;
        row[cols - 1] = *b;
        tab.push(row);
    }
    let mut obj = vec![0.0; cols];
    for c in obj.iter_mut().take(k) {
        *c = -1.0;
    }
    tab.push(obj);
    let mut basis: Vec<usize> = (k..k + m).collect();

    loop {
        // Bland: first column with negative reduced cost
        let Some(enter) = (0..cols - 1).find(|&c| tab[m][c] < -1e-12) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            if tab[r][enter] > 1e-12 {
                let ratio = tab[r][cols - 1] / tab[r][enter];
                match leave {
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15
                            || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                    None => leave = Some((r, ratio)),
                }
            }
        }
        let Some((lr, _)) = leave else {
            // unbounded; cannot happen with the singleton rows present
            return (vec![f64::INFINITY; k], f64::INFINITY);
        };
        let p = tab[lr][enter];
        for c in 0..cols {
            tab[lr][c] /= p;
        }
        for r in 0..=m {
            if r != lr {
                let f = tab[r][enter];
                if f != 0.0 {
                    for c in 0..cols {
                        let sub = f * tab[lr][c];
                        tab[r][c] -= sub;
                    }
                }
            }
        }
        basis[lr] = enter;
    }
    let mut point = vec![0.0; k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            point[b] = tab[r][cols - 1];
        }
    }
    (point, tab[m][cols - 1])
}
