use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{add, cross, dot, norm, scale, sub, Vec3};
use crate::mesh::{AffineChart, Fixture, SurfaceKind, SurfaceMesh};
use crate::{Error, Result};

/// Closed-form scalar function on `R³` with its gradient.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    /// `g·x + offset`.
    Affine {
        gradient: Vec3,
        offset: f64,
    },
    /// `amplitude · sin(frequency·x + phase)`.
    Sine {
        amplitude: f64,
        frequency: Vec3,
        phase: f64,
    },
    Sum(Vec<ScalarFn>),
    Product(Vec<ScalarFn>),
}

impl ScalarFn {
    pub fn coordinate(i: usize) -> Self {
        let mut g = [0.0; 3];
        g[i] = 1.0;
        ScalarFn::Affine { gradient: g, offset: 0.0 }
    }

    /// `a - x_i`.
    pub fn offset_coordinate(i: usize, a: f64) -> Self {
        let mut g = [0.0; 3];
        g[i] = -1.0;
        ScalarFn::Affine { gradient: g, offset: a }
    }

    pub fn value(&self, x: Vec3) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Affine { gradient, offset } => dot(*gradient, x) + offset,
            ScalarFn::Sine { amplitude, frequency, phase } => amplitude * (dot(*frequency, x) + phase).sin(),
            ScalarFn::Sum(terms) => terms.iter().map(|t| t.value(x)).sum(),
            ScalarFn::Product(factors) => factors.iter().map(|t| t.value(x)).product(),
        }
    }

    pub fn gradient(&self, x: Vec3) -> Vec3 {
        match self {
            ScalarFn::Constant(_) => [0.0; 3],
            ScalarFn::Affine { gradient, .. } => *gradient,
            ScalarFn::Sine { amplitude, frequency, phase } => {
                scale(*frequency, amplitude * (dot(*frequency, x) + phase).cos())
            }
            ScalarFn::Sum(terms) => terms.iter().fold([0.0; 3], |acc, t| add(acc, t.gradient(x))),
            ScalarFn::Product(factors) => {
                let vals: Vec<f64> = factors.iter().map(|t| t.value(x)).collect();
                let mut g = [0.0; 3];
                for (k, f) in factors.iter().enumerate() {
                    let others: f64 = vals.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v).product();
                    g = add(g, scale(f.gradient(x), others));
                }
                g
            }
        }
    }

    /// Sum of `terms` sines with amplitudes in `[-1, 1]`, frequency components
    /// in `[-max_freq, max_freq]` and random phases.
    pub fn random_trig<R: Rng>(rng: &mut R, terms: usize, max_freq: f64) -> Self {
        ScalarFn::Sum(
            (0..terms)
                .map(|_| ScalarFn::Sine {
                    amplitude: rng.random_range(-1.0..1.0),
                    frequency: [0; 3].map(|_| rng.random_range(-max_freq..max_freq)),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                })
                .collect(),
        )
    }

    /// Polynomial cutoff vanishing on the boundary of a built-in screen (and
    /// identically one on the cube).
    pub fn boundary_cutoff(fixture: Fixture) -> Self {
        use ScalarFn as S;
        match fixture {
            Fixture::Cube => S::Constant(1.0),
            Fixture::SquareScreen => S::Product(vec![
                S::coordinate(0),
                S::offset_coordinate(0, 1.0),
                S::coordinate(1),
                S::offset_coordinate(1, 1.0),
            ]),
            // the re-entrant sides lie on the lines x = 1 and y = 1
            Fixture::LScreen => S::Product(vec![
                S::coordinate(0),
                S::offset_coordinate(0, 2.0),
                S::coordinate(1),
                S::offset_coordinate(1, 2.0),
                S::offset_coordinate(0, 1.0),
                S::offset_coordinate(1, 1.0),
            ]),
        }
    }
}

impl ScalarFn {
    /// Product over the lines carrying boundary edges of the affine function
    /// `ν·(x − a) / diam`, `ν` the in-surface normal of the edge; vanishes on
    /// `∂Γ`. One on closed surfaces.
    pub fn vanishing_on_boundary(mesh: &SurfaceMesh) -> Self {
        if mesh.kind() == SurfaceKind::Closed {
            return ScalarFn::Constant(1.0);
        }
        let v = mesh.vertices();
        let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for x in v {
            for i in 0..3 {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let diag = norm(sub(hi, lo));
        let mut lines: Vec<(Vec3, Vec3)> = Vec::new();
        let mut factors = Vec::new();
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            let (a, b) = (v[e.vertices[0]], v[e.vertices[1]]);
            let t = scale(sub(b, a), 1.0 / norm(sub(b, a)));
            let on_line = |p: Vec3, s: Vec3, x: Vec3| norm(cross(sub(x, p), s)) < 1e-12 * diag;
            if lines.iter().any(|&(p, s)| on_line(p, s, a) && on_line(p, s, b)) {
                continue;
            }
            lines.push((a, t));
            let n = mesh.chart(e.cells[0].cell).map(|c| c.normal).unwrap_or([0.0, 0.0, 1.0]);
            let g = scale(cross(t, n), 1.0 / diag);
            factors.push(ScalarFn::Affine { gradient: g, offset: -dot(g, a) });
        }
        ScalarFn::Product(factors)
    }
}

/// Smooth test field on a piecewise flat surface, evaluated with the unit
/// normal of the cell the point is attributed to.
#[derive(Clone, Debug, PartialEq)]
pub enum SmoothFieldSpec {
    Scalar(ScalarFn),
    /// `B (n × g)`. Its normal trace `−B g·t` is single valued across folds,
    /// so the field is div-conforming on closed polyhedra.
    Rotated {
        weight: ScalarFn,
        potential: [ScalarFn; 3],
    },
    /// `g − (g·n) n`; div-conforming only on flat pieces.
    TangentialPart([ScalarFn; 3]),
}

impl SmoothFieldSpec {
    pub fn is_scalar(&self) -> bool {
        matches!(self, SmoothFieldSpec::Scalar(_))
    }

    /// Fixed tangential field used by the rate studies.
    pub fn standard_tangential() -> Self {
        let s = |a: f64, f: Vec3, ph: f64| ScalarFn::Sine { amplitude: a, frequency: f, phase: ph };
        SmoothFieldSpec::Rotated {
            weight: ScalarFn::Constant(1.0),
            potential: [
                ScalarFn::Sum(vec![
                    s(1.0, [0.0, 1.5, 1.0], 0.3),
                    ScalarFn::Affine { gradient: [0.0, 0.0, 0.5], offset: 0.2 },
                ]),
                s(0.8, [1.0, 0.0, -1.2], 0.7),
                s(1.2, [0.9, 1.1, 0.0], -0.4),
            ],
        }
    }

    /// Seeded random field `B (n × g)` with trigonometric `g`.
    pub fn random_rotated(seed: u64, weight: ScalarFn) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let potential = [0; 3].map(|_| ScalarFn::random_trig(&mut rng, 3, 2.5));
        SmoothFieldSpec::Rotated { weight, potential }
    }

    /// Seeded random scalar `B f` with trigonometric `f`.
    pub fn random_scalar(seed: u64, weight: ScalarFn) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SmoothFieldSpec::Scalar(ScalarFn::Product(vec![weight, ScalarFn::random_trig(&mut rng, 3, 2.5)]))
    }

    fn kind_error(&self, want: &str) -> Error {
        Error::Config(format!("field is not {want}"))
    }

    /// Tangential value at `x` on a face with unit normal `n`.
    pub fn vector_value(&self, x: Vec3, n: Vec3) -> Result<Vec3> {
        match self {
            SmoothFieldSpec::Rotated { weight, potential } => {
                Ok(scale(cross(n, potential.each_ref().map(|g| g.value(x))), weight.value(x)))
            }
            SmoothFieldSpec::TangentialPart(g) => {
                let g = g.each_ref().map(|f| f.value(x));
                Ok(sub(g, scale(n, dot(g, n))))
            }
            SmoothFieldSpec::Scalar(_) => Err(self.kind_error("a vector field")),
        }
    }

    /// Surface divergence on a flat face with unit normal `n`.
    pub fn surface_divergence(&self, x: Vec3, n: Vec3) -> Result<f64> {
        match self {
            SmoothFieldSpec::Rotated { weight, potential } => {
                let g = potential.each_ref().map(|f| f.value(x));
                let j = potential.each_ref().map(|f| f.gradient(x));
                let curl = [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]];
                Ok(dot(weight.gradient(x), cross(n, g)) - weight.value(x) * dot(n, curl))
            }
            SmoothFieldSpec::TangentialPart(g) => {
                let j = g.each_ref().map(|f| f.gradient(x));
                let trace = j[0][0] + j[1][1] + j[2][2];
                let mut njn = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        njn += n[a] * j[a][b] * n[b];
                    }
                }
                Ok(trace - njn)
            }
            SmoothFieldSpec::Scalar(_) => Err(self.kind_error("a vector field")),
        }
    }

    pub fn scalar_value(&self, x: Vec3) -> Result<f64> {
        match self {
            SmoothFieldSpec::Scalar(f) => Ok(f.value(x)),
            _ => Err(self.kind_error("a scalar field")),
        }
    }

    /// Full gradient in `R³`; tangential use only needs its in-plane part.
    pub fn gradient(&self, x: Vec3) -> Result<Vec3> {
        match self {
            SmoothFieldSpec::Scalar(f) => Ok(f.gradient(x)),
            _ => Err(self.kind_error("a scalar field")),
        }
    }

    /// Surface curl `∇φ × n`.
    pub fn surface_curl(&self, x: Vec3, n: Vec3) -> Result<Vec3> {
        Ok(cross(self.gradient(x)?, n))
    }
}

/// Finite-difference surface divergence at the image of `p` (central
/// differences of the Piola pullback), for spot checks of the closed form.
pub fn fd_surface_divergence(spec: &SmoothFieldSpec, chart: &AffineChart, p: [f64; 2], h: f64) -> Result<f64> {
    let pull =
        |q: [f64; 2]| -> Result<[f64; 2]> { Ok(chart.piola_pull(spec.vector_value(chart.map(q), chart.normal)?)) };
    let dx = (pull([p[0] + h, p[1]])?[0] - pull([p[0] - h, p[1]])?[0]) / (2.0 * h);
    let dy = (pull([p[0], p[1] + h])?[1] - pull([p[0], p[1] - h])?[1]) / (2.0 * h);
    Ok((dx + dy) / chart.jacobian)
}
