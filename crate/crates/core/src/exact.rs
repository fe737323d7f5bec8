//! Row reduction over the rationals.

use num_traits::{One, Zero};

use crate::poly::Rational;

/// Reduced row echelon form of a dense rational matrix.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Vec<Rational>>,
    pub pivots: Vec<usize>,
    pub ncols: usize,
}

impl Rref {
    pub fn new(mut m: Vec<Vec<Rational>>, ncols: usize) -> Self {
        let nrows = m.len();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == nrows {
                break;
            }
            let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let inv = Rational::one() / m[r][c].clone();
            for v in m[r].iter_mut() {
                *v = v.clone() * inv.clone();
            }
            for i in 0..nrows {
                if i != r && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    for k in c..ncols {
                        if !m[r][k].is_zero() {
                            let d = f.clone() * m[r][k].clone();
                            m[i][k] = m[i][k].clone() - d;
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        m.truncate(pivots.len());
        Self { rows: m, pivots, ncols }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Basis of the right null space.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let free: Vec<usize> = (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.ncols];
                v[f] = Rational::one();
                for (row, &pc) in self.rows.iter().zip(&self.pivots) {
                    v[pc] = -row[f].clone();
                }
                v
            })
            .collect()
    }
}

pub fn rank(m: Vec<Vec<Rational>>, ncols: usize) -> usize {
    Rref::new(m, ncols).rank()
}

/// Particular solution of `A x = b` (free variables zero), `None` when the
/// system is inconsistent.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let ncols = a.first().map_or(0, Vec::len);
    let aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let rr = Rref::new(aug, ncols + 1);
    if rr.pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (row, &pc) in rr.rows.iter().zip(&rr.pivots) {
        x[pc] = row[ncols].clone();
    }
    Some(x)
}

/// Express `target` in the span of `basis` (given as column vectors).
/// Returns the coefficients, or `None` if `target` is outside the span.
pub fn express_in_span(basis: &[Vec<Rational>], target: &[Rational]) -> Option<Vec<Rational>> {
    let n = target.len();
    let a: Vec<Vec<Rational>> = (0..n).map(|i| basis.iter().map(|col| col[i].clone()).collect()).collect();
    if basis.is_empty() {
        return target.iter().all(Zero::is_zero).then(Vec::new);
    }
    solve(&a, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| rat(v, 1)).collect()).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let rr = Rref::new(a.clone(), 3);
        assert_eq!(rr.rank(), 2);
        let ns = rr.nullspace();
        assert_eq!(ns.len(), 1);
        for row in &a {
            let s: Rational = row.iter().zip(&ns[0]).map(|(x, y)| x * y).sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = m(&[&[1, 1], &[1, -1]]);
        let x = solve(&a, &[rat(3, 1), rat(1, 1)]).unwrap();
        assert_eq!(x, vec![rat(2, 1), rat(1, 1)]);
        let singular = m(&[&[1, 1], &[2, 2]]);
        assert!(solve(&singular, &[rat(1, 1), rat(3, 1)]).is_none());
    }
}
