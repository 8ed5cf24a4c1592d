//! Irreducibility of minor-matrix determinants over a prime field.
//!
//! The matrices studied here have one column block per variable matrix
//! `L^j` (an `n x 2` matrix of indeterminates) and one row per 2x2 minor:
//! entry `(i, j)` is the `i`-th Plucker minor `p^i(L^j)`, a quadratic in
//! the four variables of column `j` alone.  Determinants of `N x N` column
//! subsets (`N = C(n,2)`) are expanded exactly over `Z_p` with
//! `p = 2^61 - 1` and tested for irreducibility by the variable-partition
//! method: a multilinear polynomial factors only into factors with pairwise
//! disjoint variable sets, and variables `x`, `y` lie in different factors
//! iff the identity `P * d2P/dxdy = dP/dx * dP/dy` holds identically.  The
//! identity is probed by Schwartz-Zippel evaluation, so a detected failure
//! (an edge joining `x` and `y`) is certain while a missed edge carries a
//! quantified probability reported as 'error_bound'.
//!
//! A Monte Carlo companion samples random integer matrices, maps them to
//! their minor columns, and measures how often the resulting matrix has
//! full rank over `Z_p`, quantifying the genericity of the regular stratum.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Fixed prime modulus `2^61 - 1`; all polynomial arithmetic is exact mod p.
pub const PRIME: u64 = (1u64 << 61) - 1;

/// Symbolic determinants are capped at this many rows (`N = C(n,2)`).
pub const MAX_DET_ROWS: usize = 6;

/// Symbolic matrices are capped at this many columns.
pub const MAX_COLUMNS: usize = 8;

#[inline]
fn fp_add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= PRIME {
        s - PRIME
    } else {
        s
    }
}

#[inline]
fn fp_sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + (PRIME - b)
    }
}

#[inline]
fn fp_mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

// ---------------------------------------------------------------------------
// sparse polynomials
// ---------------------------------------------------------------------------

/// Sparse multivariate polynomial over `Z_p` with a fixed variable universe
/// of size `nvars`.  Terms map an exponent vector to a nonzero coefficient;
/// zero coefficients are never stored, so `P == 0` iff the map is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, u64>,
}

impl FpPoly {
    pub fn zero(nvars: usize) -> Self {
        FpPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: u64) -> Self {
        let mut p = FpPoly::zero(nvars);
        if c % PRIME != 0 {
            p.terms.insert(vec![0; nvars], c % PRIME);
        }
        p
    }

    pub fn variable(nvars: usize, v: usize) -> Self {
        FpPoly::monomial(nvars, &[(v, 1)], 1)
    }

    /// Single term `coeff * prod x_v^e` from `(variable, exponent)` pairs.
    pub fn monomial(nvars: usize, exps: &[(usize, u16)], coeff: u64) -> Self {
        let mut p = FpPoly::zero(nvars);
        let c = coeff % PRIME;
        if c == 0 {
            return p;
        }
        let mut key = vec![0u16; nvars];
        for &(v, e) in exps {
            key[v] += e;
        }
        p.terms.insert(key, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn ensure_same_universe(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::PolyInput(format!(
                "variable universes differ: {} vs {}",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    fn accumulate(&mut self, key: Vec<u16>, c: u64) {
        if c == 0 {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = fp_add(*e.get(), c);
                if s == 0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_universe(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.accumulate(k.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = FpPoly::zero(self.nvars);
        for (k, &c) in &self.terms {
            out.terms.insert(k.clone(), PRIME - c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.ensure_same_universe(other)?;
        let mut out = FpPoly::zero(self.nvars);
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let key: Vec<u16> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.accumulate(key, fp_mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|k| k.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// True iff every variable has exponent at most 1 in every term.
    pub fn is_multilinear(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|&e| e <= 1))
    }

    /// Variables appearing in at least one term, ascending.
    pub fn variables(&self) -> Vec<usize> {
        let mut present = vec![false; self.nvars];
        for k in self.terms.keys() {
            for (v, &e) in k.iter().enumerate() {
                if e > 0 {
                    present[v] = true;
                }
            }
        }
        present
            .iter()
            .enumerate()
            .filter_map(|(v, &p)| if p { Some(v) } else { None })
            .collect()
    }

    /// Variables dividing every term (exponent >= 1 throughout), ascending.
    pub fn common_variables(&self) -> Vec<usize> {
        let mut common = vec![!self.terms.is_empty(); self.nvars];
        for k in self.terms.keys() {
            for (v, &e) in k.iter().enumerate() {
                if e == 0 {
                    common[v] = false;
                }
            }
        }
        common
            .iter()
            .enumerate()
            .filter_map(|(v, &p)| if p { Some(v) } else { None })
            .collect()
    }

    /// Exact quotient by a variable that divides every term.
    pub fn divide_by_variable(&self, v: usize) -> Result<Self> {
        let mut out = FpPoly::zero(self.nvars);
        for (k, &c) in &self.terms {
            if k[v] == 0 {
                return Err(Error::PolyInput(format!(
                    "variable {v} does not divide every term"
                )));
            }
            let mut key = k.clone();
            key[v] -= 1;
            out.terms.insert(key, c);
        }
        Ok(out)
    }

    /// Evaluate at a point with one value per variable.
    pub fn eval(&self, point: &[u64]) -> Result<u64> {
        if point.len() != self.nvars {
            return Err(Error::PolyInput(format!(
                "point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let mut acc = 0u64;
        for (k, &c) in &self.terms {
            let mut t = c;
            for (v, &e) in k.iter().enumerate() {
                for _ in 0..e {
                    t = fp_mul(t, point[v] % PRIME);
                }
            }
            acc = fp_add(acc, t);
        }
        Ok(acc)
    }

    /// Per-term `(support bitmask, coefficient)` pairs for a multilinear
    /// polynomial on at most 128 variables.
    fn term_masks(&self) -> Result<Vec<(u128, u64)>> {
        if self.nvars > 128 {
            return Err(Error::PolyInput(format!(
                "support masks limited to 128 variables, have {}",
                self.nvars
            )));
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (k, &c) in &self.terms {
            let mut mask = 0u128;
            for (v, &e) in k.iter().enumerate() {
                if e > 1 {
                    return Err(Error::PolyInput(
                        "support masks require a multilinear polynomial".into(),
                    ));
                }
                if e == 1 {
                    mask |= 1u128 << v;
                }
            }
            out.push((mask, c));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// minor matrices
// ---------------------------------------------------------------------------

/// Matrix of Plucker minors: rows indexed by pairs `k1 < k2` of `{1..n}`,
/// columns by the `q` variable matrices, entry `(i, j)` equal to
/// `x^j_{k1} xbar^j_{k2} - x^j_{k2} xbar^j_{k1}`.
#[derive(Debug, Clone)]
pub struct PluckerMatrix {
    n: usize,
    q: usize,
    pairs: Vec<(usize, usize)>,
    entries: Vec<Vec<FpPoly>>,
    nvars: usize,
}

/// Build the symbolic minor matrix for `n x 2` blocks and `q` columns.
/// The symbolic pipeline is capped at `N = C(n,2) <= 6` rows and `q <= 8`
/// columns; larger analyses fall to the Monte Carlo rank path.
pub fn plucker_matrix(n: usize, q: usize) -> Result<PluckerMatrix> {
    if n < 2 || q < 1 {
        return Err(Error::PolyInput(format!(
            "need n >= 2 and q >= 1, got n = {n}, q = {q}"
        )));
    }
    let rows = n * (n - 1) / 2;
    if rows > MAX_DET_ROWS || q > MAX_COLUMNS {
        return Err(Error::BudgetExceeded(format!(
            "symbolic minor matrix capped at {MAX_DET_ROWS} rows and \
             {MAX_COLUMNS} columns; requested {rows} rows, {q} columns"
        )));
    }
    let nvars = 2 * n * q;
    let mut pairs = Vec::with_capacity(rows);
    for k1 in 0..n {
        for k2 in (k1 + 1)..n {
            pairs.push((k1, k2));
        }
    }
    let var = |j: usize, bar: bool, k: usize| j * 2 * n + if bar { n } else { 0 } + k;
    let mut entries = Vec::with_capacity(rows);
    for &(k1, k2) in &pairs {
        let mut row = Vec::with_capacity(q);
        for j in 0..q {
            let lead = FpPoly::monomial(nvars, &[(var(j, false, k1), 1), (var(j, true, k2), 1)], 1);
            let swap = FpPoly::monomial(nvars, &[(var(j, false, k2), 1), (var(j, true, k1), 1)], 1);
            row.push(lead.sub(&swap)?);
        }
        entries.push(row);
    }
    Ok(PluckerMatrix {
        n,
        q,
        pairs,
        entries,
        nvars,
    })
}

impl PluckerMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of rows `N = C(n,2)`.
    pub fn rows(&self) -> usize {
        self.pairs.len()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn entry(&self, i: usize, j: usize) -> &FpPoly {
        &self.entries[i][j]
    }

    /// Row index pairs `(k1, k2)` with `k1 < k2`, zero-based.
    pub fn row_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Variable indices belonging to column `j`.
    pub fn column_vars(&self, j: usize) -> std::ops::Range<usize> {
        j * 2 * self.n..(j + 1) * 2 * self.n
    }

    /// Human-readable variable name, one-based as `x^j_k` / `xbar^j_k`.
    pub fn var_name(&self, v: usize) -> String {
        let j = v / (2 * self.n) + 1;
        let rem = v % (2 * self.n);
        if rem < self.n {
            format!("x^{j}_{}", rem + 1)
        } else {
            format!("xbar^{j}_{}", rem - self.n + 1)
        }
    }

    /// Exact determinant of the square submatrix using all rows and the
    /// given columns in the given order.  Repeated columns are allowed and
    /// produce the zero polynomial.
    ///
    /// Expansion runs over row subsets: the subdeterminant on rows `S` and
    /// the first `|S|` listed columns is assembled by Laplace expansion
    /// along its last column.
    pub fn symbolic_det(&self, cols: &[usize]) -> Result<FpPoly> {
        let rows = self.rows();
        if cols.len() != rows {
            return Err(Error::PolyInput(format!(
                "need exactly {rows} columns for an {rows}x{rows} determinant, got {}",
                cols.len()
            )));
        }
        for &j in cols {
            if j >= self.q {
                return Err(Error::PolyInput(format!(
                    "column {j} out of range for q = {}",
                    self.q
                )));
            }
        }
        let mut table: Vec<Option<FpPoly>> = vec![None; 1usize << rows];
        table[0] = Some(FpPoly::constant(self.nvars, 1));
        for mask in 1usize..(1usize << rows) {
            let count = mask.count_ones() as usize;
            let col = cols[count - 1];
            let mut acc = FpPoly::zero(self.nvars);
            let mut row_pos = 0usize;
            for r in 0..rows {
                if mask & (1 << r) == 0 {
                    continue;
                }
                let sub = table[mask ^ (1 << r)]
                    .as_ref()
                    .expect("subsets are filled in ascending mask order");
                let term = self.entries[r][col].mul(sub)?;
                if (row_pos + count - 1) % 2 == 0 {
                    acc = acc.add(&term)?;
                } else {
                    acc = acc.sub(&term)?;
                }
                row_pos += 1;
            }
            table[mask] = Some(acc);
        }
        Ok(table[(1usize << rows) - 1].take().unwrap())
    }
}

// ---------------------------------------------------------------------------
// the variable-partition method
// ---------------------------------------------------------------------------

/// Verdict of [`factor_components`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Irreducible,
    Splits,
}

/// Variable partition produced by [`factor_components`].  Each component is
/// the variable set of one irreducible factor; variables dividing the whole
/// polynomial appear as singleton components and in `monomial_vars`.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    pub verdict: Verdict,
    pub components: Vec<Vec<usize>>,
    pub monomial_vars: Vec<usize>,
    /// Variable pairs left in distinct components; the `splits` verdict
    /// rests on their tested non-edges.
    pub cross_pairs: usize,
    pub trials: usize,
    /// Probability bound on a wrong partition: each cross pair misses its
    /// edge with probability at most `(2 deg P / (p - 1))` per trial.
    pub error_bound: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(size: usize) -> Self {
        UnionFind {
            parent: (0..size).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            false
        } else {
            self.parent[ra] = rb;
            true
        }
    }
}

/// Partition the variables of a multilinear polynomial into the variable
/// sets of its irreducible factors.
///
/// Any variable dividing `P` is split off exactly first.  For the rest, two
/// variables `x`, `y` belong to the same factor iff the identity
/// `P * d2P/dxdy = dP/dx * dP/dy` fails; writing `P = xyD + xC + yE + F`
/// with `D, C, E, F` free of `x` and `y`, the identity reads `CE = FD`, and
/// at a sample point with coordinates `r` it is equivalent to
/// `S10 S01 = S00 S11` where `S**` sums the term values grouped by the
/// membership bits of `x` and `y` (both sides carry the factor `r_x r_y`).
/// Term values are shared across all pairs of a trial, and pairs already
/// connected through earlier edges are skipped.
pub fn factor_components<R: Rng>(p: &FpPoly, trials: usize, rng: &mut R) -> Result<Factorization> {
    if p.is_zero() {
        return Err(Error::PolyInput(
            "zero polynomial has no variable partition".into(),
        ));
    }
    if !p.is_multilinear() {
        return Err(Error::PolyInput(
            "partition method requires a multilinear polynomial".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::PolyInput("need at least one trial".into()));
    }
    let vars = p.variables();
    if vars.is_empty() {
        return Err(Error::PolyInput(
            "constant polynomial is a unit; no variable partition".into(),
        ));
    }

    let monomial_vars = p.common_variables();
    let mut work = p.clone();
    for &v in &monomial_vars {
        work = work.divide_by_variable(v)?;
    }
    let active: Vec<usize> = vars
        .iter()
        .copied()
        .filter(|v| !monomial_vars.contains(v))
        .collect();

    let mut components: Vec<Vec<usize>> = monomial_vars.iter().map(|&v| vec![v]).collect();

    if active.is_empty() {
        // Pure monomial: every variable is its own factor.
        let verdict = if components.len() == 1 {
            Verdict::Irreducible
        } else {
            Verdict::Splits
        };
        return Ok(Factorization {
            verdict,
            components,
            monomial_vars,
            cross_pairs: 0,
            trials,
            error_bound: 0.0,
        });
    }

    let masks = work.term_masks()?;
    let deg = work.total_degree();
    let mut uf = UnionFind::new(active.len());
    let mut values = vec![0u64; masks.len()];

    for _ in 0..trials {
        let mut point = vec![0u64; p.nvars()];
        for &v in &active {
            point[v] = rng.gen_range(1..PRIME);
        }
        for (val, &(mask, coeff)) in values.iter_mut().zip(&masks) {
            let mut t = coeff;
            let mut m = mask;
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                t = fp_mul(t, point[v]);
            }
            *val = t;
        }
        let mut component_count = active.len();
        for ia in 0..active.len() {
            for ib in (ia + 1)..active.len() {
                if uf.find(ia) == uf.find(ib) {
                    continue;
                }
                let (ba, bb) = (active[ia], active[ib]);
                let mut s = [0u64; 4];
                for (&(mask, _), &val) in masks.iter().zip(&values) {
                    let idx = ((mask >> ba) & 1) as usize | (((mask >> bb) & 1) as usize) << 1;
                    s[idx] = fp_add(s[idx], val);
                }
                if fp_mul(s[1], s[2]) != fp_mul(s[0], s[3]) && uf.union(ia, ib) {
                    component_count -= 1;
                }
            }
        }
        if component_count == 1 {
            break;
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (slot, &v) in active.iter().enumerate() {
        groups.entry(uf.find(slot)).or_default().push(v);
    }
    let active_sizes: Vec<usize> = groups.values().map(|g| g.len()).collect();
    components.extend(groups.into_values());
    components.sort();

    let cross_pairs: usize = active_sizes
        .iter()
        .enumerate()
        .map(|(i, &a)| active_sizes[i + 1..].iter().map(|&b| a * b).sum::<usize>())
        .sum();
    let per_trial = 2.0 * deg as f64 / (PRIME - 1) as f64;
    let error_bound = if cross_pairs == 0 {
        0.0
    } else {
        cross_pairs as f64 * per_trial.powi(trials as i32)
    };
    let verdict = if components.len() == 1 {
        Verdict::Irreducible
    } else {
        Verdict::Splits
    };
    Ok(Factorization {
        verdict,
        components,
        monomial_vars,
        cross_pairs,
        trials,
        error_bound,
    })
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

/// Per-subset record in a [`LemmaReport`].
#[derive(Debug, Clone, Serialize)]
pub struct SubsetReport {
    /// One-based column indices of the determinant.
    pub subset: Vec<usize>,
    pub multilinear: bool,
    pub nonzero: bool,
    pub num_terms: usize,
    pub verdict: Verdict,
    pub components: Vec<Vec<String>>,
    pub cross_pairs: usize,
    pub error_bound: f64,
}

/// Output of [`lemma_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub q: usize,
    pub rows: usize,
    pub trials: usize,
    pub seed: u64,
    pub subsets: Vec<SubsetReport>,
    pub all_irreducible: bool,
    /// Supports of the determinants on columns `{1..N-1, k}`, stripped of
    /// the shared columns, are pairwise disjoint across `k`.
    pub family_supports_disjoint: bool,
    pub max_error_bound: f64,
}

fn combinations(q: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, q: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..q {
            cur.push(j);
            rec(j + 1, q, k, cur, out);
            cur.pop();
        }
    }
    rec(0, q, k, &mut cur, &mut out);
    out
}

/// Run the determinant checks for every `N`-column subset of the `n, q`
/// minor matrix: multilinearity, nonzeroness, and the partition verdict,
/// plus support disjointness of the distinguished family that fixes the
/// first `N - 1` columns.
pub fn lemma_suite(n: usize, q: usize, trials: usize, seed: u64) -> Result<LemmaReport> {
    let pm = plucker_matrix(n, q)?;
    let rows = pm.rows();
    if q < rows {
        return Err(Error::PolyInput(format!(
            "need at least N = {rows} columns to form a determinant, got q = {q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets = Vec::new();
    for cols in combinations(q, rows) {
        let det = pm.symbolic_det(&cols)?;
        let multilinear = det.is_multilinear();
        let nonzero = !det.is_zero();
        if !multilinear || !nonzero {
            return Err(Error::PolyInput(format!(
                "determinant on columns {cols:?} is {} (multilinear: {multilinear})",
                if nonzero { "nonzero" } else { "zero" }
            )));
        }
        let f = factor_components(&det, trials, &mut rng)?;
        subsets.push(SubsetReport {
            subset: cols.iter().map(|&j| j + 1).collect(),
            multilinear,
            nonzero,
            num_terms: det.num_terms(),
            verdict: f.verdict,
            components: f
                .components
                .iter()
                .map(|c| c.iter().map(|&v| pm.var_name(v)).collect())
                .collect(),
            cross_pairs: f.cross_pairs,
            error_bound: f.error_bound,
        });
    }

    // The distinguished family: columns {1..N-1} shared, one free column.
    let shared: Vec<usize> = (0..rows.saturating_sub(1)).collect();
    let mut reduced_supports: Vec<Vec<usize>> = Vec::new();
    for k in shared.len()..q {
        let mut cols = shared.clone();
        cols.push(k);
        let det = pm.symbolic_det(&cols)?;
        let support: Vec<usize> = det
            .variables()
            .into_iter()
            .filter(|&v| shared.iter().all(|&j| !pm.column_vars(j).contains(&v)))
            .collect();
        reduced_supports.push(support);
    }
    let family_supports_disjoint = reduced_supports.iter().enumerate().all(|(i, a)| {
        reduced_supports[i + 1..]
            .iter()
            .all(|b| a.iter().all(|v| !b.contains(v)))
    });

    let all_irreducible = subsets.iter().all(|s| s.verdict == Verdict::Irreducible);
    let max_error_bound = subsets.iter().map(|s| s.error_bound).fold(0.0, f64::max);
    Ok(LemmaReport {
        n,
        q,
        rows,
        trials,
        seed,
        subsets,
        all_irreducible,
        family_supports_disjoint,
        max_error_bound,
    })
}

/// Output of [`codim_monte_carlo`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CodimReport {
    pub m: usize,
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    /// Full rank demanded of the minor matrix, `C(m,2)`.
    pub rank_required: usize,
    /// The claimed codimension of the degenerate stratum, `q - C(m,2) + 1`.
    pub codimension: i64,
    pub full_rank_count: usize,
    pub full_rank_fraction: f64,
}

/// Rank of a row-major matrix over `Z_p` by Gaussian elimination.
fn fp_rank(mut a: Vec<Vec<u64>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rank = 0usize;
    for c in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, pivot);
        for r in (rank + 1)..rows {
            if a[r][c] == 0 {
                continue;
            }
            // Scale-free elimination: row_r <- a[rank][c] * row_r - a[r][c] * row_rank.
            let (head, tail) = a.split_at_mut(r);
            let (lead, row) = (&head[rank], &mut tail[0]);
            let (fa, fb) = (lead[c], row[c]);
            for (x, &y) in row.iter_mut().zip(lead) {
                *x = fp_sub(fp_mul(fa, *x), fp_mul(fb, y));
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Sample `q` random `m x 2` matrices with entries uniform over `Z_p`, map
/// each to its column of 2x2 minors, and record how often the assembled
/// `C(m,2) x q` matrix reaches full rank.  Degeneracy has probability on
/// the order of `1/p` per trial, so any full-rank witness certifies the
/// regular stratum is generic; `q < C(m,2)` simply yields fraction zero.
pub fn codim_monte_carlo(m: usize, q: usize, trials: usize, seed: u64) -> CodimReport {
    let rank_required = m * (m - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full_rank_count = 0usize;
    for _ in 0..trials {
        let mut matrix = vec![vec![0u64; q]; rank_required];
        for j in 0..q {
            let block: Vec<(u64, u64)> = (0..m)
                .map(|_| (rng.gen_range(0..PRIME), rng.gen_range(0..PRIME)))
                .collect();
            let mut i = 0usize;
            for k1 in 0..m {
                for k2 in (k1 + 1)..m {
                    matrix[i][j] = fp_sub(
                        fp_mul(block[k1].0, block[k2].1),
                        fp_mul(block[k2].0, block[k1].1),
                    );
                    i += 1;
                }
            }
        }
        if fp_rank(matrix) == rank_required {
            full_rank_count += 1;
        }
    }
    CodimReport {
        m,
        q,
        trials,
        seed,
        rank_required,
        codimension: q as i64 - rank_required as i64 + 1,
        full_rank_count,
        full_rank_fraction: if trials == 0 {
            0.0
        } else {
            full_rank_count as f64 / trials as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det_poly(n: usize, q: usize, cols: &[usize]) -> FpPoly {
        plucker_matrix(n, q).unwrap().symbolic_det(cols).unwrap()
    }

    #[test]
    fn smallest_matrix_entry_is_the_ad_minus_bc_pattern() {
        let pm = plucker_matrix(2, 1).unwrap();
        assert_eq!(pm.rows(), 1);
        let e = pm.entry(0, 0);
        assert_eq!(e.num_terms(), 2);
        assert_eq!(e.total_degree(), 2);
        assert!(e.is_multilinear());
        // x^1_1 xbar^1_2 - x^1_2 xbar^1_1 with variables (0, 3) and (1, 2).
        let expect = FpPoly::monomial(4, &[(0, 1), (3, 1)], 1)
            .sub(&FpPoly::monomial(4, &[(1, 1), (2, 1)], 1))
            .unwrap();
        assert_eq!(*e, expect);
        assert_eq!(pm.var_name(0), "x^1_1");
        assert_eq!(pm.var_name(3), "xbar^1_2");
    }

    #[test]
    fn entry_supports_stay_inside_their_column() {
        let pm = plucker_matrix(3, 3).unwrap();
        for i in 0..pm.rows() {
            for j in 0..pm.q() {
                let vars = pm.entry(i, j).variables();
                assert!(vars.iter().all(|v| pm.column_vars(j).contains(v)));
            }
        }
    }

    #[test]
    fn duplicated_column_kills_the_determinant() {
        let det = det_poly(3, 3, &[0, 1, 1]);
        assert!(det.is_zero());
    }

    #[test]
    fn column_swap_negates_the_determinant() {
        let pm = plucker_matrix(3, 3).unwrap();
        let d = pm.symbolic_det(&[0, 1, 2]).unwrap();
        let swapped = pm.symbolic_det(&[1, 0, 2]).unwrap();
        assert!(d.add(&swapped).unwrap().is_zero());
        assert!(!d.is_zero());
    }

    #[test]
    fn multilinearity_check_matches_definition() {
        assert!(det_poly(3, 3, &[0, 1, 2]).is_multilinear());
        let square = FpPoly::monomial(2, &[(0, 2)], 1);
        assert!(!square.is_multilinear());
        assert!(FpPoly::constant(2, 7).is_multilinear());
    }

    #[test]
    fn ad_minus_bc_is_irreducible() {
        let p = FpPoly::monomial(4, &[(0, 1), (3, 1)], 1)
            .sub(&FpPoly::monomial(4, &[(1, 1), (2, 1)], 1))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(130);
        let f = factor_components(&p, 4, &mut rng).unwrap();
        assert_eq!(f.verdict, Verdict::Irreducible);
        assert_eq!(f.components, vec![vec![0, 1, 2, 3]]);
        assert_eq!(f.error_bound, 0.0);
    }

    #[test]
    fn constructed_product_splits_into_its_factors() {
        // (x1 y1 + x2 y2)(z1 w1 + z2 w2) on eight variables.
        let left = FpPoly::monomial(8, &[(0, 1), (1, 1)], 1)
            .add(&FpPoly::monomial(8, &[(2, 1), (3, 1)], 1))
            .unwrap();
        let right = FpPoly::monomial(8, &[(4, 1), (5, 1)], 1)
            .add(&FpPoly::monomial(8, &[(6, 1), (7, 1)], 1))
            .unwrap();
        let p = left.mul(&right).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        let f = factor_components(&p, 4, &mut rng).unwrap();
        assert_eq!(f.verdict, Verdict::Splits);
        assert_eq!(f.components, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert_eq!(f.cross_pairs, 16);
        assert!(f.error_bound > 0.0 && f.error_bound < 1e-12);
    }

    #[test]
    fn common_variable_divides_out_as_a_singleton_factor() {
        // x0 * (x1 x2 + x3 x4): one monomial variable, one quadratic factor.
        let inner = FpPoly::monomial(5, &[(1, 1), (2, 1)], 1)
            .add(&FpPoly::monomial(5, &[(3, 1), (4, 1)], 1))
            .unwrap();
        let p = FpPoly::variable(5, 0).mul(&inner).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(132);
        let f = factor_components(&p, 4, &mut rng).unwrap();
        assert_eq!(f.verdict, Verdict::Splits);
        assert_eq!(f.monomial_vars, vec![0]);
        assert_eq!(f.components, vec![vec![0], vec![1, 2, 3, 4]]);
    }

    #[test]
    fn three_by_three_minor_determinant_is_irreducible() {
        let det = det_poly(3, 3, &[0, 1, 2]);
        assert!(det.is_multilinear());
        let mut rng = ChaCha8Rng::seed_from_u64(133);
        let f = factor_components(&det, 4, &mut rng).unwrap();
        assert_eq!(f.verdict, Verdict::Irreducible);
        assert_eq!(f.components.len(), 1);
        assert_eq!(f.components[0].len(), 18);
    }

    #[test]
    fn lemma_suite_covers_all_subsets() {
        let report = lemma_suite(3, 4, 4, 134).unwrap();
        assert_eq!(report.subsets.len(), 4);
        assert!(report.all_irreducible);
        assert!(report.family_supports_disjoint);
        assert!(report.max_error_bound < 1e-12);

        let tiny = lemma_suite(2, 2, 4, 135).unwrap();
        assert_eq!(tiny.subsets.len(), 2);
        assert!(tiny.all_irreducible);
    }

    #[test]
    fn oversized_requests_hit_the_budget_guard() {
        match plucker_matrix(5, 3) {
            Err(Error::BudgetExceeded(_)) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
        match plucker_matrix(3, 9) {
            Err(Error::BudgetExceeded(_)) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_rank_is_generically_full() {
        let report = codim_monte_carlo(3, 6, 200, 136);
        assert_eq!(report.rank_required, 3);
        assert_eq!(report.codimension, 4);
        assert_eq!(report.full_rank_fraction, 1.0);

        // Too few columns: full rank is impossible.
        let starved = codim_monte_carlo(3, 2, 50, 137);
        assert_eq!(starved.full_rank_fraction, 0.0);

        // Deterministic given the seed.
        let again = codim_monte_carlo(3, 6, 200, 136);
        assert_eq!(report, again);
    }

    #[test]
    fn determinant_matches_brute_force_on_permutations() {
        // Independent check of the subset expansion: explicit sum over
        // permutations with inline sign tracking.
        let pm = plucker_matrix(3, 3).unwrap();
        let cols = [0usize, 1, 2];
        let perms: [([usize; 3], bool); 6] = [
            ([0, 1, 2], true),
            ([0, 2, 1], false),
            ([1, 0, 2], false),
            ([1, 2, 0], true),
            ([2, 0, 1], true),
            ([2, 1, 0], false),
        ];
        let mut brute = FpPoly::zero(pm.nvars());
        for (perm, even) in perms {
            let mut prod = FpPoly::constant(pm.nvars(), 1);
            for (c, &r) in perm.iter().enumerate() {
                prod = prod.mul(pm.entry(r, cols[c])).unwrap();
            }
            brute = if even {
                brute.add(&prod).unwrap()
            } else {
                brute.sub(&prod).unwrap()
            };
        }
        let det = pm.symbolic_det(&cols).unwrap();
        assert_eq!(det, brute);
    }

    #[test]
    fn evaluation_agrees_with_structure() {
        // (ad - bc) at a = 2, b = 3, c = 5, d = 7 is 14 - 15 = -1.
        let p = FpPoly::monomial(4, &[(0, 1), (3, 1)], 1)
            .sub(&FpPoly::monomial(4, &[(1, 1), (2, 1)], 1))
            .unwrap();
        assert_eq!(p.eval(&[2, 3, 5, 7]).unwrap(), PRIME - 1);
    }
}
