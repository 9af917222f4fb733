//! Double description method: extreme rays of `{x : <n, x> >= 0 for all normals n}`.
//!
//! Normals are inserted in input order, starting from the simplicial cone of
//! the first `d` linearly independent ones. Adjacency of a positive/negative
//! ray pair is decided algebraically: the constraints tight at both rays must
//! have rank `d - 2`.

use num_traits::{Signed, Zero};

use super::ConeError;
use crate::linalg::{inverse, null_vector, rank};
use crate::rational::{dot, lex_cmp, normalize_ray, scale, sub, Rat};

struct Ray {
    coords: Vec<Rat>,
    /// `tight[k]` is true when processed normal `k` vanishes on the ray.
    tight: Vec<bool>,
}

/// Extreme rays of the pointed cone cut out by `normals` in dimension `dim`,
/// each scaled so its first nonzero coordinate has absolute value 1, sorted
/// lexicographically.
pub fn extreme_rays(dim: usize, normals: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>, ConeError> {
    for n in normals {
        if n.len() != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                got: n.len(),
            });
        }
    }
    if dim == 0 {
        return Ok(Vec::new());
    }

    // Greedy choice of d independent normals, in input order.
    let mut basis_rows: Vec<usize> = Vec::with_capacity(dim);
    for (k, n) in normals.iter().enumerate() {
        let mut trial: Vec<&[Rat]> = basis_rows.iter().map(|&b| normals[b].as_slice()).collect();
        trial.push(n);
        if rank(&trial, dim) == trial.len() {
            basis_rows.push(k);
            if basis_rows.len() == dim {
                break;
            }
        }
    }
    if basis_rows.len() < dim {
        let line = null_vector(normals, dim).expect("rank deficit implies a null vector");
        return Err(ConeError::NotPointed {
            line: normalize_ray(&line),
        });
    }

    let m = normals.len();
    let a: Vec<Vec<Rat>> = basis_rows.iter().map(|&k| normals[k].clone()).collect();
    let inv = inverse(&a).expect("chosen rows are independent");
    let mut rays: Vec<Ray> = (0..dim)
        .map(|col| {
            let coords: Vec<Rat> = inv.iter().map(|row| row[col].clone()).collect();
            let mut tight = vec![false; m];
            for (pos, &k) in basis_rows.iter().enumerate() {
                tight[k] = pos != col;
            }
            Ray {
                coords: normalize_ray(&coords),
                tight,
            }
        })
        .collect();

    let mut processed: Vec<bool> = vec![false; m];
    for &k in &basis_rows {
        processed[k] = true;
    }

    for k in 0..m {
        if processed[k] {
            continue;
        }
        processed[k] = true;
        let normal = &normals[k];
        let values: Vec<Rat> = rays.iter().map(|r| dot(normal, &r.coords)).collect();

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len());
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (idx, v) in values.iter().enumerate() {
            if v.is_positive() {
                positive.push(idx);
            } else if v.is_negative() {
                negative.push(idx);
            }
        }
        for &p in &positive {
            for &n in &negative {
                if !adjacent(&rays[p], &rays[n], normals, &processed, dim) {
                    continue;
                }
                // <a,p> n - <a,n> p lies on the new hyperplane.
                let coords = sub(
                    &scale(&rays[n].coords, &values[p]),
                    &scale(&rays[p].coords, &values[n]),
                );
                let mut tight: Vec<bool> = rays[p]
                    .tight
                    .iter()
                    .zip(&rays[n].tight)
                    .map(|(a, b)| *a && *b)
                    .collect();
                tight[k] = true;
                next.push(Ray {
                    coords: normalize_ray(&coords),
                    tight,
                });
            }
        }
        for (idx, mut ray) in rays.into_iter().enumerate() {
            let v = &values[idx];
            if v.is_negative() {
                continue;
            }
            if v.is_zero() {
                ray.tight[k] = true;
            }
            next.push(ray);
        }
        rays = next;
    }

    let mut out: Vec<Vec<Rat>> = rays.into_iter().map(|r| r.coords).collect();
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup();
    Ok(out)
}

fn adjacent(p: &Ray, n: &Ray, normals: &[Vec<Rat>], processed: &[bool], dim: usize) -> bool {
    let common: Vec<&[Rat]> = p
        .tight
        .iter()
        .zip(&n.tight)
        .enumerate()
        .filter(|(k, (a, b))| processed[*k] && **a && **b)
        .map(|(k, _)| normals[k].as_slice())
        .collect();
    if common.len() + 2 < dim {
        return false;
    }
    rank(&common, dim) + 2 == dim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn orthant() {
        let rays = extreme_rays(2, &[vec![int(1), int(0)], vec![int(0), int(1)]]).unwrap();
        assert_eq!(rays, vec![vec![int(0), int(1)], vec![int(1), int(0)]]);
    }

    #[test]
    fn spread_cone() {
        let normals = vec![
            vec![int(1), int(0)],
            vec![int(0), int(1)],
            vec![int(2), int(-1)],
            vec![int(-1), int(2)],
        ];
        let rays = extreme_rays(2, &normals).unwrap();
        assert_eq!(rays, vec![vec![int(1), rat(1, 2)], vec![int(1), int(2)]]);
    }

    #[test]
    fn non_pointed_cone_names_a_line() {
        let err = extreme_rays(3, &[vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]]);
        match err {
            Err(ConeError::NotPointed { line }) => {
                assert_eq!(line, vec![int(0), int(0), int(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cube_corner_cut() {
        // Octant with the extra cut x + y - z >= 0 keeps 4 extreme rays.
        let normals = vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), int(1), int(0)],
            vec![int(0), int(0), int(1)],
            vec![int(1), int(1), int(-1)],
        ];
        let rays = extreme_rays(3, &normals).unwrap();
        assert_eq!(rays.len(), 4);
        for r in &rays {
            assert!(normals.iter().all(|n| !dot(n, r).is_negative()));
        }
    }

    #[test]
    fn zero_cone_has_no_rays() {
        let normals = vec![vec![int(1)], vec![int(-1)]];
        assert!(extreme_rays(1, &normals).unwrap().is_empty());
    }
}
