//! Bivariate polynomials in the monomial basis on the reference triangle
//! `K̂ = conv{(0,0), (1,0), (0,1)}`.
//!
//! The coefficient type is generic so the same code runs in exact rational
//! arithmetic (symbolic identities) and in `f64` (assembly).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Coefficient field for [`Poly`].
pub trait Coeff: Clone + Num + Neg<Output = Self> + FromPrimitive + Debug + PartialEq + Send + Sync {
    fn to_f64_lossy(&self) -> f64;
}

impl Coeff for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Coeff for Rational {
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int<T: Coeff>(v: i64) -> T {
    T::from_i64(v).expect("integer fits coefficient type")
}

/// Position of monomial `x^i y^j` in the graded coefficient layout.
#[inline]
pub fn mono_index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

#[inline]
pub fn mono_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponent pairs `(i, j)` with `i + j <= degree`, in layout order.
pub fn monomials(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(mono_count(degree));
    for d in 0..=degree {
        for j in 0..=d {
            out.push((d - j, j));
        }
    }
    out
}

/// Exponent pairs of total degree exactly `degree`.
pub fn homogeneous_monomials(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree).map(|j| (degree - j, j)).collect()
}

/// Scalar bivariate polynomial with a total-degree bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Coeff> Poly<T> {
    pub fn zeros(degree: usize) -> Self {
        Self { degree, coeffs: vec![T::zero(); mono_count(degree)] }
    }

    pub fn zero() -> Self {
        Self::zeros(0)
    }

    pub fn constant(c: T) -> Self {
        Self { degree: 0, coeffs: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn monomial(i: usize, j: usize, c: T) -> Self {
        let mut p = Self::zeros(i + j);
        p.coeffs[mono_index(i, j)] = c;
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, T::one())
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, T::one())
    }

    /// Barycentric coordinates of the reference triangle.
    pub fn barycentric(vertex: usize) -> Self {
        match vertex {
            0 => &Self::one() - &(&Self::x() + &Self::y()),
            1 => Self::x(),
            2 => Self::y(),
            _ => panic!("reference triangle has three vertices, got {vertex}"),
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), mono_count(degree), "coefficient length");
        Self { degree, coeffs }
    }

    /// Degree bound of the storage.
    pub fn degree_bound(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Actual total degree (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        monomials(self.degree)
            .into_iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|((i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, i: usize, j: usize) -> T {
        if i + j > self.degree {
            T::zero()
        } else {
            self.coeffs[mono_index(i, j)].clone()
        }
    }

    pub fn add_term(&mut self, i: usize, j: usize, c: T) {
        if i + j > self.degree {
            self.raise_degree(i + j);
        }
        let k = mono_index(i, j);
        self.coeffs[k] = self.coeffs[k].clone() + c;
    }

    fn raise_degree(&mut self, degree: usize) {
        if degree > self.degree {
            self.coeffs.resize(mono_count(degree), T::zero());
            self.degree = degree;
        }
    }

    /// Same polynomial stored with degree bound `degree` (must not truncate).
    pub fn with_degree_bound(&self, degree: usize) -> Self {
        assert!(degree >= self.degree(), "would truncate nonzero coefficients");
        let mut out = Self::zeros(degree);
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if i + j <= degree {
                out.coeffs[mono_index(i, j)] = c.clone();
            }
        }
        out
    }

    /// Drop trailing zero degrees.
    pub fn trimmed(&self) -> Self {
        self.with_degree_bound(self.degree())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    pub fn dx(&self) -> Self {
        let mut out = Self::zeros(self.degree.saturating_sub(1));
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if i > 0 && !c.is_zero() {
                out.add_term(i - 1, j, c.clone() * int::<T>(i as i64));
            }
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Self::zeros(self.degree.saturating_sub(1));
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if j > 0 && !c.is_zero() {
                out.add_term(i, j - 1, c.clone() * int::<T>(j as i64));
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, x: &T, y: &T) -> T {
        // Horner in y for each power of x would need a different layout;
        // the degrees here are small so plain power tables are fine.
        let mut xp = vec![T::one(); self.degree + 1];
        let mut yp = vec![T::one(); self.degree + 1];
        for k in 1..=self.degree {
            xp[k] = xp[k - 1].clone() * x.clone();
            yp[k] = yp[k - 1].clone() * y.clone();
        }
        let mut acc = T::zero();
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if !c.is_zero() {
                acc = acc + c.clone() * xp[i].clone() * yp[j].clone();
            }
        }
        acc
    }

    /// Exact integral over the reference triangle.
    pub fn integrate_ref(&self) -> T {
        let mut acc = T::zero();
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if !c.is_zero() {
                acc = acc + c.clone() * ref_monomial_integral::<T>(i, j);
            }
        }
        acc
    }

    /// `q(x) = p(M x + t)`.
    pub fn compose_affine(&self, m: &[[T; 2]; 2], t: &[T; 2]) -> Self {
        let lx = Self::from_coeffs(1, vec![t[0].clone(), m[0][0].clone(), m[0][1].clone()]);
        let ly = Self::from_coeffs(1, vec![t[1].clone(), m[1][0].clone(), m[1][1].clone()]);
        let xp: Vec<Self> = (0..=self.degree).map(|k| lx.pow(k)).collect();
        let yp: Vec<Self> = (0..=self.degree).map(|k| ly.pow(k)).collect();
        let mut out = Self::zeros(self.degree);
        for ((i, j), c) in monomials(self.degree).into_iter().zip(&self.coeffs) {
            if !c.is_zero() {
                out = &out + &(&xp[i] * &yp[j]).scale(c);
            }
        }
        out
    }

    /// Restriction to the segment `s -> a + s (b - a)`, returned as a
    /// univariate polynomial in `s` (coefficients of `s^k`).
    pub fn restrict_to_segment(&self, a: [T; 2], b: [T; 2]) -> Vec<T> {
        let m = [[b[0].clone() - a[0].clone(), T::zero()], [b[1].clone() - a[1].clone(), T::zero()]];
        let q = self.compose_affine(&m, &a);
        (0..=self.degree).map(|k| q.coeff(k, 0)).collect()
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly { degree: self.degree, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map(|c| c.to_f64_lossy())
    }

    /// Coefficients laid out for a degree bound `degree` (for linear algebra).
    pub fn coeff_vector(&self, degree: usize) -> Vec<T> {
        assert!(degree >= self.degree(), "coefficient vector would truncate");
        monomials(degree).into_iter().map(|(i, j)| self.coeff(i, j)).collect()
    }
}

impl Poly<f64> {
    /// Fast `f64` evaluation.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        let mut xi = 1.0;
        // iterate by x power, Horner in y along each anti-diagonal group
        for i in 0..=self.degree {
            let mut yj = 1.0;
            let mut row = 0.0;
            for j in 0..=(self.degree - i) {
                row += self.coeffs[mono_index(i, j)] * yj;
                yj *= y;
            }
            acc += row * xi;
            xi *= x;
        }
        acc
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `∫_K̂ x^i y^j = i! j! / (i + j + 2)!`.
pub fn ref_monomial_integral<T: Coeff>(i: usize, j: usize) -> T {
    // i! j! / (i+j+2)! = 1 / ((i+j+2)(i+j+1) * binom(i+j, i))
    let mut binom = T::one();
    for k in 0..i {
        binom = binom * int::<T>((i + j - k) as i64) / int::<T>((k + 1) as i64);
    }
    let n = (i + j) as i64;
    T::one() / (binom * int::<T>((n + 2) * (n + 1)))
}

impl<T: Coeff> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Self) -> Poly<T> {
        let degree = self.degree.max(rhs.degree);
        let mut out = Poly::zeros(degree);
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[k] = c.clone();
        }
        for (k, c) in rhs.coeffs.iter().enumerate() {
            out.coeffs[k] = out.coeffs[k].clone() + c.clone();
        }
        out
    }
}

impl<T: Coeff> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Self) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Coeff> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly { degree: self.degree, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }
}

impl<T: Coeff> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Self) -> Poly<T> {
        let mut out = Poly::<T>::zeros(self.degree + rhs.degree);
        let ma = monomials(self.degree);
        let mb = monomials(rhs.degree);
        for ((ia, ja), ca) in ma.iter().zip(&self.coeffs) {
            if ca.is_zero() {
                continue;
            }
            for ((ib, jb), cb) in mb.iter().zip(&rhs.coeffs) {
                if cb.is_zero() {
                    continue;
                }
                let k = mono_index(ia + ib, ja + jb);
                out.coeffs[k] = out.coeffs[k].clone() + ca.clone() * cb.clone();
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Coeff> $tr for Poly<T> {
            type Output = Poly<T>;
            fn $m(self, rhs: Self) -> Poly<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Tangential 2-vector field with polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct VecPoly<T> {
    pub x: Poly<T>,
    pub y: Poly<T>,
}

impl<T: Coeff> VecPoly<T> {
    pub fn new(x: Poly<T>, y: Poly<T>) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(Poly::zero(), Poly::zero())
    }

    pub fn div(&self) -> Poly<T> {
        &self.x.dx() + &self.y.dy()
    }

    /// Scalar rotation `∂₁ v₂ − ∂₂ v₁`.
    pub fn rot(&self) -> Poly<T> {
        &self.y.dx() - &self.x.dy()
    }

    /// Vector curl of a scalar on the reference plane: `(∂₂ φ, −∂₁ φ)`.
    pub fn curl_of(phi: &Poly<T>) -> Self {
        Self::new(phi.dy(), -&phi.dx())
    }

    pub fn grad_of(phi: &Poly<T>) -> Self {
        Self::new(phi.dx(), phi.dy())
    }

    pub fn degree(&self) -> usize {
        self.x.degree().max(self.y.degree())
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.x.scale(s), self.y.scale(s))
    }

    pub fn scale_by(&self, p: &Poly<T>) -> Self {
        Self::new(&self.x * p, &self.y * p)
    }

    pub fn dot(&self, other: &Self) -> Poly<T> {
        &(&self.x * &other.x) + &(&self.y * &other.y)
    }

    pub fn inner_ref(&self, other: &Self) -> T {
        self.dot(other).integrate_ref()
    }

    pub fn compose_affine(&self, m: &[[T; 2]; 2], t: &[T; 2]) -> Self {
        Self::new(self.x.compose_affine(m, t), self.y.compose_affine(m, t))
    }

    pub fn eval(&self, x: &T, y: &T) -> [T; 2] {
        [self.x.eval(x, y), self.y.eval(x, y)]
    }

    pub fn to_f64(&self) -> VecPoly<f64> {
        VecPoly::new(self.x.to_f64(), self.y.to_f64())
    }

    /// Concatenated coefficient vectors with degree bound `degree`.
    pub fn coeff_vector(&self, degree: usize) -> Vec<T> {
        let mut v = self.x.coeff_vector(degree);
        v.extend(self.y.coeff_vector(degree));
        v
    }

    pub fn from_coeff_vector(degree: usize, v: &[T]) -> Self {
        let n = mono_count(degree);
        assert_eq!(v.len(), 2 * n);
        Self::new(Poly::from_coeffs(degree, v[..n].to_vec()), Poly::from_coeffs(degree, v[n..].to_vec()))
    }
}

impl<T: Coeff> Add for &VecPoly<T> {
    type Output = VecPoly<T>;
    fn add(self, rhs: Self) -> VecPoly<T> {
        VecPoly::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl<T: Coeff> Sub for &VecPoly<T> {
    type Output = VecPoly<T>;
    fn sub(self, rhs: Self) -> VecPoly<T> {
        VecPoly::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl VecPoly<f64> {
    #[inline]
    pub fn at(&self, x: f64, y: f64) -> [f64; 2] {
        [self.x.at(x, y), self.y.at(x, y)]
    }
}

/// Values of all monomials `x^i y^j` with `i + j <= degree` in layout order.
pub fn monomial_values(x: f64, y: f64, degree: usize, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(mono_count(degree));
    let mut xp = [1.0; 16];
    let mut yp = [1.0; 16];
    assert!(degree < 16, "degree {degree} too large for the monomial table");
    for k in 1..=degree {
        xp[k] = xp[k - 1] * x;
        yp[k] = yp[k - 1] * y;
    }
    for d in 0..=degree {
        for j in 0..=d {
            out.push(xp[d - j] * yp[j]);
        }
    }
}

/// Coefficient vector of a univariate polynomial (lowest power first)
/// evaluated at `s`.
pub fn eval_univariate(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * s + v)
}
