//! Arithmetic and row reduction over prime fields GF(q).
//!
//! Vectors are `Vec<u64>` with entries already reduced mod q. Subspaces
//! are represented by their reduced row-echelon bases, which are unique,
//! so matrix equality is subspace equality.

use crate::error::{Error, Result};

pub(crate) fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn require_prime(q: u64) -> Result<()> {
    if is_prime(q) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "field order {q} is not prime; prime-power fields are not supported"
        )))
    }
}

fn inv_mod(a: u64, q: u64) -> u64 {
    // Fermat: a^(q-2) mod q.
    assert!(a % q != 0, "inverse of zero");
    let mut result = 1u64;
    let mut base = a % q;
    let mut e = q - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % q;
        }
        base = base * base % q;
        e >>= 1;
    }
    result
}

/// In-place reduction to reduced row echelon form; zero rows dropped.
/// Test oracle for the direct canonical enumeration below.
#[cfg(test)]
pub(crate) fn rref(mut rows: Vec<Vec<u64>>, q: u64) -> Vec<Vec<u64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(src) = (pivot_row..rows.len()).find(|&r| rows[r][col] % q != 0) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = inv_mod(rows[pivot_row][col], q);
        for x in rows[pivot_row].iter_mut() {
            *x = *x * inv % q;
        }
        for r in 0..rows.len() {
            if r != pivot_row && rows[r][col] % q != 0 {
                let factor = rows[r][col];
                for c in 0..cols {
                    let sub = factor * rows[pivot_row][c] % q;
                    rows[r][c] = (rows[r][c] + q - sub) % q;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rows.truncate(pivot_row);
    rows
}

/// Whether `v` lies in the row space spanned by an RREF basis.
pub(crate) fn contains_vector(basis: &[Vec<u64>], v: &[u64], q: u64) -> bool {
    let mut v = v.to_vec();
    for row in basis {
        let pivot = row
            .iter()
            .position(|&x| x != 0)
            .expect("RREF has no zero rows");
        let factor = v[pivot];
        if factor != 0 {
            for (x, &b) in v.iter_mut().zip(row.iter()) {
                *x = (*x + q - factor * b % q) % q;
            }
        }
    }
    v.iter().all(|&x| x == 0)
}

/// Containment of row spaces given by RREF bases.
pub(crate) fn row_space_leq(a: &[Vec<u64>], b: &[Vec<u64>], q: u64) -> bool {
    a.iter().all(|row| contains_vector(b, row, q))
}

/// All reduced row-echelon matrices with `rank` rows over `cols`
/// columns, i.e. canonical bases of all rank-`rank` subspaces.
pub(crate) fn enumerate_rref(cols: usize, rank: usize, q: u64) -> Vec<Vec<Vec<u64>>> {
    assert!(rank >= 1 && rank <= cols);
    let mut out = Vec::new();
    let mut pivots = Vec::with_capacity(rank);
    choose_pivots(cols, rank, q, 0, &mut pivots, &mut out);
    out
}

fn choose_pivots(
    cols: usize,
    rank: usize,
    q: u64,
    from: usize,
    pivots: &mut Vec<usize>,
    out: &mut Vec<Vec<Vec<u64>>>,
) {
    if pivots.len() == rank {
        fill_free_entries(cols, q, pivots, out);
        return;
    }
    let remaining = rank - pivots.len();
    for col in from..=cols - remaining {
        pivots.push(col);
        choose_pivots(cols, rank, q, col + 1, pivots, out);
        pivots.pop();
    }
}

fn fill_free_entries(cols: usize, q: u64, pivots: &[usize], out: &mut Vec<Vec<Vec<u64>>>) {
    // Free slots: to the right of the row's own pivot, not a pivot column.
    let is_pivot: Vec<bool> = {
        let mut m = vec![false; cols];
        for &p in pivots {
            m[p] = true;
        }
        m
    };
    let mut free: Vec<(usize, usize)> = Vec::new();
    for (r, &p) in pivots.iter().enumerate() {
        for c in p + 1..cols {
            if !is_pivot[c] {
                free.push((r, c));
            }
        }
    }
    let mut mat = vec![vec![0u64; cols]; pivots.len()];
    for (r, &p) in pivots.iter().enumerate() {
        mat[r][p] = 1;
    }
    fill_rec(&mut mat, &free, 0, q, out);
}

fn fill_rec(
    mat: &mut Vec<Vec<u64>>,
    free: &[(usize, usize)],
    i: usize,
    q: u64,
    out: &mut Vec<Vec<Vec<u64>>>,
) {
    if i == free.len() {
        out.push(mat.clone());
        return;
    }
    let (r, c) = free[i];
    for v in 0..q {
        mat[r][c] = v;
        fill_rec(mat, free, i + 1, q, out);
    }
    mat[free[i].0][free[i].1] = 0;
}

/// Number of rank-`rank` subspaces of GF(q)^cols, the Gaussian binomial.
pub(crate) fn gaussian_binomial(cols: usize, rank: usize, q: u64) -> Option<u128> {
    // Product formula (q^cols - q^i) / (q^rank - q^i); compute as the
    // exact integer via repeated division at the end of each factor pair.
    if rank > cols {
        return Some(0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    let q = q as u128;
    for i in 0..rank {
        num = num.checked_mul(q.checked_pow(cols as u32)? - q.checked_pow(i as u32)?)?;
        den = den.checked_mul(q.checked_pow(rank as u32)? - q.checked_pow(i as u32)?)?;
    }
    debug_assert_eq!(num % den, 0);
    Some(num / den)
}

/// Incremental rank tracker for prefix pruning during frame search.
pub(crate) struct RankTracker {
    q: u64,
    echelon: Vec<Vec<u64>>,
}

impl RankTracker {
    pub(crate) fn new(q: u64) -> Self {
        RankTracker {
            q,
            echelon: Vec::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn rank(&self) -> usize {
        self.echelon.len()
    }

    /// Reduces `v` against the tracked rows. On rank increase the new
    /// row is recorded and `true` returned; undo with [`Self::pop`].
    /// Otherwise the tracker is unchanged.
    pub(crate) fn push(&mut self, v: &[u64]) -> bool {
        let mut v = v.to_vec();
        for row in &self.echelon {
            let pivot = row.iter().position(|&x| x != 0).unwrap();
            let factor = v[pivot];
            if factor != 0 {
                for (x, &b) in v.iter_mut().zip(row.iter()) {
                    *x = (*x + self.q - factor * b % self.q) % self.q;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|&x| x != 0) {
            let inv = inv_mod(v[pivot], self.q);
            for x in v.iter_mut() {
                *x = *x * inv % self.q;
            }
            self.echelon.push(v);
            true
        } else {
            false
        }
    }

    pub(crate) fn pop(&mut self) {
        self.echelon.pop();
    }
}
