//! Gaussian elimination over exact rationals.

use num_traits::{One, Zero};

use crate::rational::Rat;

/// Reduced row echelon form; returns the pivot columns.
fn rref(m: &mut [Vec<Rat>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[&[Rat]], cols: usize) -> usize {
    let mut m: Vec<Vec<Rat>> = rows.iter().map(|r| r.to_vec()).collect();
    rref(&mut m, cols).len()
}

/// A nonzero vector `x` with `row · x = 0` for every row, if one exists.
pub fn null_vector(rows: &[Vec<Rat>], cols: usize) -> Option<Vec<Rat>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, cols);
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut x = vec![Rat::zero(); cols];
    x[free] = Rat::one();
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = -m[r][free].clone();
    }
    Some(x)
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse(a: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut m, n);
    if pivots.len() < n {
        return None;
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{dot, int};

    #[test]
    fn rank_and_null_vector() {
        let rows = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        let refs: Vec<&[Rat]> = rows.iter().map(|r| r.as_slice()).collect();
        assert_eq!(rank(&refs, 2), 1);
        let x = null_vector(&rows, 2).unwrap();
        assert!(rows.iter().all(|r| dot(r, &x).is_zero()));
        assert!(x.iter().any(|v| !v.is_zero()));
    }

    #[test]
    fn inverse_round_trip() {
        let a = vec![vec![int(2), int(-1)], vec![int(-1), int(2)]];
        let inv = inverse(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let col: Vec<Rat> = inv.iter().map(|r| r[j].clone()).collect();
                let e = dot(&a[i], &col);
                assert_eq!(e, if i == j { int(1) } else { int(0) });
            }
        }
        assert!(inverse(&[vec![int(1), int(1)], vec![int(2), int(2)]]).is_none());
    }
}
