//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::rational::{primitive, Rational, Vector};

/// Reduced row echelon form. Returns the reduced rows (nonzero only) and
/// the pivot column of each.
pub fn rref(rows: &[Vector], ncols: usize) -> (Vec<Vector>, Vec<usize>) {
    let mut m: Vec<Vector> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[Vector], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Basis of `{x : row · x = 0 for every row}`, scaled to primitive integers.
pub fn nullspace(rows: &[Vector], ncols: usize) -> Vec<Vector> {
    let (m, pivots) = rref(rows, ncols);
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (row, &p) in m.iter().zip(&pivots) {
            v[p] = -row[free].clone();
        }
        basis.push(primitive(&v));
    }
    basis
}

/// Solves `coeffs · basis = target` exactly when `target` lies in the span.
pub fn express_in_span(basis: &[Vector], target: &[Rational]) -> Option<Vector> {
    let n = target.len();
    let k = basis.len();
    // Columns are basis vectors; augmented with target.
    let rows: Vec<Vector> = (0..n)
        .map(|i| {
            let mut row: Vector = basis.iter().map(|b| b[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    let (m, pivots) = rref(&rows, k + 1);
    if pivots.contains(&k) {
        return None;
    }
    let mut x = vec![Rational::zero(); k];
    for (row, &p) in m.iter().zip(&pivots) {
        x[p] = row[k].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{dot, vec_from_ints};

    #[test]
    fn nullspace_of_plane() {
        let rows = vec![vec_from_ints(&[1, 1, 1])];
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(dot(v, &rows[0]).is_zero());
        }
        assert_eq!(rank(&ns, 3), 2);
    }

    #[test]
    fn span_membership() {
        let basis = vec![vec_from_ints(&[1, 0, 1]), vec_from_ints(&[0, 1, 1])];
        let x = express_in_span(&basis, &vec_from_ints(&[2, 3, 5])).unwrap();
        assert_eq!(x, vec_from_ints(&[2, 3]));
        assert!(express_in_span(&basis, &vec_from_ints(&[1, 0, 0])).is_none());
    }
}
