use crate::quadrature::{GaussRule, TriangleRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Adjacency {
    Identical,
    CommonEdge,
    CommonVertex,
    Disjoint,
}

/// Adjacency class of a cell pair with vertex permutations that put the
/// shared vertices first (in the same order on both cells).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairClass {
    pub adjacency: Adjacency,
    /// Permuted vertex `k` is original local vertex `perm[k]`.
    pub perm_a: [usize; 3],
    pub perm_b: [usize; 3],
}

fn permuted_to_original(perm: &[usize; 3], p: [f64; 2]) -> [f64; 2] {
    let lam = [1.0 - p[0] - p[1], p[0], p[1]];
    let mut orig = [0.0; 3];
    for k in 0..3 {
        orig[perm[k]] = lam[k];
    }
    [orig[1], orig[2]]
}

impl PairClass {
    pub fn from_triangles(ta: [usize; 3], tb: [usize; 3], same: bool) -> Self {
        const ID: [usize; 3] = [0, 1, 2];
        if same {
            return Self { adjacency: Adjacency::Identical, perm_a: ID, perm_b: ID };
        }
        let mut shared: Vec<(usize, usize)> =
            (0..3).filter_map(|i| tb.iter().position(|&v| v == ta[i]).map(|j| (i, j))).collect();
        // Global order makes (b, a) the exact mirror of (a, b).
        shared.sort_by_key(|&(i, _)| ta[i]);
        let rest = |used: &[usize]| (0..3).find(|k| !used.contains(k)).expect("three local vertices");
        match shared.len() {
            3 => Self { adjacency: Adjacency::Identical, perm_a: ID, perm_b: [shared[0].1, shared[1].1, shared[2].1] },
            2 => {
                let (a0, b0) = shared[0];
                let (a1, b1) = shared[1];
                Self {
                    adjacency: Adjacency::CommonEdge,
                    perm_a: [a0, a1, rest(&[a0, a1])],
                    perm_b: [b0, b1, rest(&[b0, b1])],
                }
            }
            1 => {
                let (a0, b0) = shared[0];
                Self {
                    adjacency: Adjacency::CommonVertex,
                    perm_a: [a0, (a0 + 1) % 3, (a0 + 2) % 3],
                    perm_b: [b0, (b0 + 1) % 3, (b0 + 2) % 3],
                }
            }
            _ => Self { adjacency: Adjacency::Disjoint, perm_a: ID, perm_b: ID },
        }
    }

    /// Map a rule node on the permuted cell `a` to original reference
    /// coordinates.
    #[inline]
    pub fn to_cell_a(&self, p: [f64; 2]) -> [f64; 2] {
        permuted_to_original(&self.perm_a, p)
    }

    #[inline]
    pub fn to_cell_b(&self, p: [f64; 2]) -> [f64; 2] {
        permuted_to_original(&self.perm_b, p)
    }
}

/// Quadrature on `K̂ × K̂` for one adjacency class: nodes `(x̂, ŷ, w)` in
/// the permuted reference frames, weights summing to `1/4`.
#[derive(Clone, Debug)]
pub struct PanelPairRule {
    pub adjacency: Adjacency,
    pub order: usize,
    pub nodes: Vec<([f64; 2], [f64; 2], f64)>,
}

/// Points of the triangle `0 ≤ x₂ ≤ x₁ ≤ 1` to the reference triangle.
#[inline]
fn from_ss(x1: f64, x2: f64) -> [f64; 2] {
    [x1 - x2, x2]
}

impl PanelPairRule {
    /// Rule with `order` Gauss points per 4-cube direction (singular
    /// classes) or per triangle direction (disjoint).
    pub fn new(adjacency: Adjacency, order: usize) -> Self {
        let order = order.max(1);
        let mut nodes = Vec::new();
        if adjacency == Adjacency::Disjoint {
            let t = TriangleRule::new(order);
            for (x, wx) in t.iter() {
                for (y, wy) in t.iter() {
                    nodes.push((x, y, wx * wy));
                }
            }
            return Self { adjacency, order, nodes };
        }
        let g = GaussRule::new(order);
        for (xi, w0) in g.iter() {
            for (e1, w1) in g.iter() {
                for (e2, w2) in g.iter() {
                    for (e3, w3) in g.iter() {
                        let w = w0 * w1 * w2 * w3;
                        push_terms(adjacency, xi, e1, e2, e3, w, &mut nodes);
                    }
                }
            }
        }
        Self { adjacency, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn push_terms(adj: Adjacency, xi: f64, e1: f64, e2: f64, e3: f64, w: f64, out: &mut Vec<([f64; 2], [f64; 2], f64)>) {
    let mut push = |x: (f64, f64), y: (f64, f64), wt: f64| out.push((from_ss(x.0, x.1), from_ss(y.0, y.1), w * wt));
    match adj {
        Adjacency::Identical => {
            let wt = xi.powi(3) * e1 * e1 * e2;
            let a = (xi, xi * (1.0 - e1 + e1 * e2));
            let b = (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1));
            push(a, b, wt);
            push(b, a, wt);
            let a = (xi, xi * e1 * (1.0 - e2 + e2 * e3));
            let b = (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2));
            push(a, b, wt);
            push(b, a, wt);
            let a = (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3));
            let b = (xi, xi * e1 * (1.0 - e2));
            push(a, b, wt);
            push(b, a, wt);
        }
        Adjacency::CommonEdge => {
            // Each term also enters mirrored so the rule is symmetric in (x, y).
            let w1 = 0.5 * xi.powi(3) * e1 * e1;
            let w2 = w1 * e2;
            let mut both = |x: (f64, f64), y: (f64, f64), wt: f64| {
                push(x, y, wt);
                push(y, x, wt);
            };
            both((xi, xi * e1 * e3), (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), w1);
            both((xi, xi * e1), (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), w2);
            both((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), (xi, xi * e1 * e2 * e3), w2);
            both((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), (xi, xi * e1), w2);
            both((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * e2), w2);
        }
        Adjacency::CommonVertex => {
            let wt = xi.powi(3) * e2;
            let a = (xi, xi * e1);
            let b = (xi * e2, xi * e2 * e3);
            push(a, b, wt);
            push(b, a, wt);
        }
        Adjacency::Disjoint => unreachable!("tensor rule"),
    }
}
