use crate::poly::{mono_count, monomial_values, Poly, VecPoly};

/// Reference vector shape functions of one cell with their divergences,
/// stored as coefficient rows padded to a common degree so that a whole
/// cell is evaluated with a single monomial table.
#[derive(Clone, Debug)]
pub struct ShapeTable {
    degree: usize,
    len: usize,
    cx: Vec<f64>,
    cy: Vec<f64>,
    cd: Vec<f64>,
}

impl ShapeTable {
    pub fn from_fields(fields: &[VecPoly<f64>]) -> Self {
        let degree = fields.iter().map(|f| f.x.degree_bound().max(f.y.degree_bound())).max().unwrap_or(0);
        let m = mono_count(degree);
        let mut cx = Vec::with_capacity(fields.len() * m);
        let mut cy = Vec::with_capacity(fields.len() * m);
        let mut cd = Vec::with_capacity(fields.len() * m);
        for f in fields {
            cx.extend(f.x.with_degree_bound(degree).coeffs());
            cy.extend(f.y.with_degree_bound(degree).coeffs());
            cd.extend(f.div().with_degree_bound(degree).coeffs());
        }
        Self { degree, len: fields.len(), cx, cy, cd }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Reference values and reference divergences at `p`.
    pub fn eval(&self, p: [f64; 2], mono: &mut Vec<f64>, values: &mut Vec<[f64; 2]>, divs: &mut Vec<f64>) {
        monomial_values(p[0], p[1], self.degree, mono);
        let m = mono.len();
        values.clear();
        divs.clear();
        for k in 0..self.len {
            let r = k * m..(k + 1) * m;
            let dot = |c: &[f64]| c.iter().zip(mono.iter()).map(|(a, b)| a * b).sum::<f64>();
            values.push([dot(&self.cx[r.clone()]), dot(&self.cy[r.clone()])]);
            divs.push(dot(&self.cd[r]));
        }
    }
}

/// Scalar analogue of [`ShapeTable`] (values and reference gradients).
#[derive(Clone, Debug)]
pub struct ScalarTable {
    degree: usize,
    len: usize,
    c: Vec<f64>,
    cdx: Vec<f64>,
    cdy: Vec<f64>,
}

impl ScalarTable {
    pub fn from_polys(polys: &[Poly<f64>]) -> Self {
        let degree = polys.iter().map(|f| f.degree_bound()).max().unwrap_or(0);
        let m = mono_count(degree);
        let mut c = Vec::with_capacity(polys.len() * m);
        let mut cdx = Vec::with_capacity(polys.len() * m);
        let mut cdy = Vec::with_capacity(polys.len() * m);
        for f in polys {
            c.extend(f.with_degree_bound(degree).coeffs());
            cdx.extend(f.dx().with_degree_bound(degree).coeffs());
            cdy.extend(f.dy().with_degree_bound(degree).coeffs());
        }
        Self { degree, len: polys.len(), c, cdx, cdy }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn eval(&self, p: [f64; 2], mono: &mut Vec<f64>, values: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        monomial_values(p[0], p[1], self.degree, mono);
        let m = mono.len();
        values.clear();
        grads.clear();
        for k in 0..self.len {
            let r = k * m..(k + 1) * m;
            let dot = |c: &[f64]| c.iter().zip(mono.iter()).map(|(a, b)| a * b).sum::<f64>();
            values.push(dot(&self.c[r.clone()]));
            grads.push([dot(&self.cdx[r.clone()]), dot(&self.cdy[r])]);
        }
    }
}
