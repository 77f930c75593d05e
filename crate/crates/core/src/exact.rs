//! Exact arithmetic: arbitrary-precision rationals, rational vectors and
//! matrices, and integer lattices.
//!
//! Nothing in the engine ever touches a float; `Rat::to_f64` exists only for
//! rendering.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Deref, DerefMut, Div, Index, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator. Values that fit machine words stay unboxed; everything else
/// falls back to `BigRational`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat(Repr);

// Invariant: `Small` whenever numerator and denominator fit in `i64`, so the
// derived equality and hash are structural.
#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64, i64),
    Big(BigRational),
}

impl Rat {
    fn from_big(r: BigRational) -> Rat {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(r)),
        }
    }

    fn from_i128(n: i128, d: i128) -> Rat {
        debug_assert!(d != 0);
        let g = n.gcd(&d);
        let (mut n, mut d) = (n / g, d / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(BigRational::new(BigInt::from(n), BigInt::from(d)))),
        }
    }

    fn big(&self) -> std::borrow::Cow<'_, BigRational> {
        match &self.0 {
            Repr::Small(n, d) => std::borrow::Cow::Owned(BigRational::new_raw(BigInt::from(*n), BigInt::from(*d))),
            Repr::Big(r) => std::borrow::Cow::Borrowed(r),
        }
    }

    pub fn zero() -> Rat {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Rat {
        Rat(Repr::Small(1, 1))
    }

    pub fn int(n: i64) -> Rat {
        Rat(Repr::Small(n, 1))
    }

    /// `n / d`; panics on a zero denominator (use `from_parts` for untrusted input).
    pub fn new(n: i64, d: i64) -> Rat {
        assert!(d != 0, "zero denominator");
        Rat::from_i128(n as i128, d as i128)
    }

    pub fn from_parts(n: BigInt, d: BigInt) -> Result<Rat> {
        if d.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rat::from_big(BigRational::new(n, d)))
    }

    pub fn from_bigint(n: BigInt) -> Rat {
        match n.to_i64() {
            Some(n) => Rat::int(n),
            None => Rat(Repr::Big(BigRational::from_integer(n))),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Option<Rat> {
        match &self.0 {
            Repr::Small(0, _) => None,
            Repr::Small(n, d) => Some(Rat::from_i128(*d as i128, *n as i128)),
            Repr::Big(r) => Some(Rat::from_big(r.recip())),
        }
    }

    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(Integer::div_floor(n, d)),
            Repr::Big(r) => r.floor().to_integer(),
        }
    }

    pub fn ceil(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(Integer::div_ceil(n, d)),
            Repr::Big(r) => r.ceil().to_integer(),
        }
    }

    /// Lossy; for drawing only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn midpoint(&self, other: &Rat) -> Rat {
        (self + other) / Rat::int(2)
    }

    fn add_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if let Some(n) = (a * d).checked_add(c * b) {
                return Rat::from_i128(n, b * d);
            }
        }
        Rat::from_big(&*self.big() + &*rhs.big())
    }

    fn sub_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if let Some(n) = (a * d).checked_sub(c * b) {
                return Rat::from_i128(n, b * d);
            }
        }
        Rat::from_big(&*self.big() - &*rhs.big())
    }

    fn mul_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            return Rat::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128);
        }
        Rat::from_big(&*self.big() * &*rhs.big())
    }

    fn div_ref(&self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            return Rat::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128);
        }
        Rat::from_big(&*self.big() / &*rhs.big())
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> std::cmp::Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.big().cmp(&other.big()),
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::int(n)
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Self {
        Rat::from_bigint(n)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `p` or `p/q` with an optional leading minus on `p` only.
    fn from_str(s: &str) -> Result<Rat> {
        let bad = || Error::Parse(format!("malformed rational {s:?} (expected \"p\" or \"p/q\")"));
        match s.split_once('/') {
            None => parse_int(s).map(Rat::from_bigint).ok_or_else(bad),
            Some((p, q)) => {
                if q.starts_with('-') {
                    return Err(bad());
                }
                let n = parse_int(p).ok_or_else(bad)?;
                let d = parse_int(q).ok_or_else(bad)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                Ok(Rat::from_big(BigRational::new(n, d)))
            }
        }
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! rat_binop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                self.$imp(&rhs)
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                self.$imp(rhs)
            }
        }
        impl<'a> $tr<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                self.$imp(&rhs)
            }
        }
        impl<'a, 'b> $tr<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                self.$imp(rhs)
            }
        }
    };
}

rat_binop!(Add, add, add_ref);
rat_binop!(Sub, sub, sub_ref);
rat_binop!(Mul, mul, mul_ref);
rat_binop!(Div, div, div_ref);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = self.add_ref(rhs);
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = self.sub_ref(rhs);
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match &self.0 {
            Repr::Small(n, d) => Rat::from_i128(-(*n as i128), *d as i128),
            Repr::Big(r) => Rat::from_big(-r),
        }
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// Dense rational vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatVec(pub Vec<Rat>);

impl RatVec {
    pub fn zeros(n: usize) -> RatVec {
        RatVec(vec![Rat::zero(); n])
    }

    pub fn unit(n: usize, k: usize) -> RatVec {
        let mut v = RatVec::zeros(n);
        v.0[k] = Rat::one();
        v
    }

    pub fn from_ints(xs: &[i64]) -> RatVec {
        RatVec(xs.iter().map(|&x| Rat::int(x)).collect())
    }

    pub fn dot(&self, other: &[Rat]) -> Rat {
        assert_eq!(self.len(), other.len(), "dot: dimension mismatch");
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, c: &Rat) -> RatVec {
        self.iter().map(|x| x * c).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(Rat::is_zero)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: &Rat, other: &RatVec) -> RatVec {
        assert_eq!(self.len(), other.len(), "axpy: dimension mismatch");
        self.iter().zip(other.iter()).map(|(a, b)| a + c * b).collect()
    }
}

impl Deref for RatVec {
    type Target = Vec<Rat>;
    fn deref(&self) -> &Vec<Rat> {
        &self.0
    }
}

impl DerefMut for RatVec {
    fn deref_mut(&mut self) -> &mut Vec<Rat> {
        &mut self.0
    }
}

impl FromIterator<Rat> for RatVec {
    fn from_iter<I: IntoIterator<Item = Rat>>(iter: I) -> Self {
        RatVec(iter.into_iter().collect())
    }
}

impl fmt::Debug for RatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Add<&RatVec> for &RatVec {
    type Output = RatVec;
    fn add(self, rhs: &RatVec) -> RatVec {
        assert_eq!(self.len(), rhs.len(), "add: dimension mismatch");
        self.iter().zip(rhs.iter()).map(|(a, b)| a + b).collect()
    }
}

impl Sub<&RatVec> for &RatVec {
    type Output = RatVec;
    fn sub(self, rhs: &RatVec) -> RatVec {
        assert_eq!(self.len(), rhs.len(), "sub: dimension mismatch");
        self.iter().zip(rhs.iter()).map(|(a, b)| a - b).collect()
    }
}

impl Neg for &RatVec {
    type Output = RatVec;
    fn neg(self) -> RatVec {
        self.iter().map(|x| -x).collect()
    }
}

/// Dense row-major rational matrix. The column count is explicit so that
/// matrices with zero rows still know their width.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> RatMat {
        RatMat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> RatMat {
        let mut m = RatMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    /// Fails on ragged input.
    pub fn from_rows(cols: usize, rows: Vec<RatVec>) -> Result<RatMat> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "matrix row {i} has length {} but {cols} columns were declared",
                    r.len()
                )));
            }
            data.extend(r.0);
        }
        Ok(RatMat { rows: nrows, cols, data })
    }

    pub fn from_int_rows(cols: usize, rows: &[Vec<i64>]) -> Result<RatMat> {
        RatMat::from_rows(cols, rows.iter().map(|r| RatVec::from_ints(r)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> RatVec {
        RatVec(self.row(i).to_vec())
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[Rat]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn select_rows(&self, idx: &[usize]) -> RatMat {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        RatMat { rows: idx.len(), cols: self.cols, data }
    }

    pub fn push_row(&mut self, r: &[Rat]) {
        assert_eq!(r.len(), self.cols, "push_row: dimension mismatch");
        self.data.extend_from_slice(r);
        self.rows += 1;
    }

    pub fn transpose(&self) -> RatMat {
        let mut t = RatMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[Rat]) -> RatVec {
        assert_eq!(x.len(), self.cols, "mul_vec: dimension mismatch");
        self.rows_iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows, "mul: dimension mismatch");
        let mut out = RatMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip().expect("nonzero pivot");
            for j in c..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Fraction-free (Bareiss) elimination on the row-scaled integer matrix.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let l = lcm_of_denoms(row);
                row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
            })
            .collect();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..self.rows).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(r, p);
            for i in r + 1..self.rows {
                for j in c + 1..self.cols {
                    let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                    m[i][j] = v;
                }
                m[i][c] = BigInt::zero();
            }
            prev = m[r][c].clone();
            r += 1;
            if r == self.rows {
                break;
            }
        }
        r
    }

    /// Basis of the right kernel `{x : M x = 0}`.
    pub fn nullspace(&self) -> Vec<RatVec> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = RatVec::zeros(self.cols);
                v[f] = Rat::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(i, f);
                }
                v
            })
            .collect()
    }

    /// Basis of the row space (the nonzero rows of the RREF).
    pub fn row_space_basis(&self) -> Vec<RatVec> {
        let (r, pivots) = self.rref();
        (0..pivots.len()).map(|i| r.row_vec(i)).collect()
    }

    /// Some solution of `M x = b`, or `None` if inconsistent.
    pub fn solve(&self, b: &[Rat]) -> Option<RatVec> {
        assert_eq!(b.len(), self.rows, "solve: dimension mismatch");
        let mut aug = RatMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = RatVec::zeros(self.cols);
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = r.get(i, self.cols).clone();
        }
        Some(x)
    }
}

impl Index<(usize, usize)> for RatMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        self.get(i, j)
    }
}

impl fmt::Debug for RatMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row_vec(i))?;
        }
        write!(f, "]")
    }
}

/// Solves a square system. `Ok(None)` if the matrix is singular.
pub fn solve_square(a: &RatMat, b: &[Rat]) -> Result<Option<RatVec>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "solve_square needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {} but matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let n = a.nrows();
    let mut aug = RatMat::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n, b[i].clone());
    }
    let (r, pivots) = aug.rref();
    if pivots.len() < n || pivots.last() == Some(&n) {
        return Ok(None);
    }
    Ok(Some((0..n).map(|i| r.get(i, n).clone()).collect()))
}

/// Rank of the affine hull of a point set; -1 when empty.
pub fn affine_rank(points: &[&RatVec]) -> i64 {
    let Some(first) = points.first() else { return -1 };
    let n = first.len();
    let diffs: Vec<RatVec> = points[1..].iter().map(|p| *p - *first).collect();
    match RatMat::from_rows(n, diffs) {
        Ok(m) => m.rank() as i64,
        Err(_) => unreachable!("points share a dimension"),
    }
}

fn lcm_of_denoms(v: &[Rat]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, x| acc.lcm(&x.denom()))
}

/// Clears denominators and divides by the content; zero stays zero.
pub fn primitive_integer(v: &[Rat]) -> Vec<BigInt> {
    let l = lcm_of_denoms(v);
    let ints: Vec<BigInt> = v.iter().map(|x| (x.numer() * &l) / x.denom()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// A lattice given by a basis of integer row vectors in ℚ^ambient.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticeBasis {
    ambient: usize,
    rows: Vec<Vec<BigInt>>,
}

impl fmt::Debug for LatticeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>())).finish()
    }
}

impl LatticeBasis {
    /// Rejects ragged or linearly dependent rows.
    pub fn new(ambient: usize, rows: Vec<Vec<BigInt>>) -> Result<LatticeBasis> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ambient) {
            return Err(Error::DimensionMismatch(format!(
                "lattice row {i} has length {} but ambient dimension is {ambient}",
                r.len()
            )));
        }
        let lb = LatticeBasis { ambient, rows };
        if lb.rational_matrix().rank() != lb.rows.len() {
            return Err(Error::Domain("lattice basis rows are linearly dependent".into()));
        }
        Ok(lb)
    }

    pub fn from_i64(ambient: usize, rows: &[Vec<i64>]) -> Result<LatticeBasis> {
        LatticeBasis::new(ambient, rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn standard(n: usize) -> LatticeBasis {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        LatticeBasis { ambient: n, rows }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row_rat(&self, i: usize) -> RatVec {
        self.rows[i].iter().cloned().map(Rat::from_bigint).collect()
    }

    pub fn rational_matrix(&self) -> RatMat {
        RatMat::from_rows(self.ambient, (0..self.rows.len()).map(|i| self.row_rat(i)).collect())
            .expect("rows checked at construction")
    }

    /// `Σ c_k b_k`.
    pub fn combine(&self, c: &[Rat]) -> RatVec {
        assert_eq!(c.len(), self.rank(), "combine: dimension mismatch");
        let mut out = RatVec::zeros(self.ambient);
        for (ck, row) in c.iter().zip(&self.rows) {
            if ck.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(row) {
                *o += &(ck * Rat::from_bigint(x.clone()));
            }
        }
        out
    }

    /// Coordinates of `v` in this basis, if `v` lies in its rational span.
    pub fn coordinates(&self, v: &[Rat]) -> Option<RatVec> {
        if v.len() != self.ambient {
            return None;
        }
        self.rational_matrix().transpose().solve(v)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.coordinates(v).is_some_and(|c| c.iter().all(Rat::is_integer))
    }
}

/// Unimodular row reduction of an integer matrix; returns the echelon form
/// and the transform `U` with `U * m = echelon`.
fn integer_echelon(m: &[Vec<BigInt>], cols: usize) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, usize) {
    let k = m.len();
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut u: Vec<Vec<BigInt>> =
        (0..k).map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let mut p = 0;
    for c in 0..cols {
        if p == k {
            break;
        }
        loop {
            let best = (p..k).filter(|&i| !a[i][c].is_zero()).min_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()));
            let Some(best) = best else { break };
            a.swap(p, best);
            u.swap(p, best);
            let mut done = true;
            for i in p + 1..k {
                if a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&a[p][c]);
                for j in 0..cols {
                    let t = &a[p][j] * &q;
                    a[i][j] -= t;
                }
                for j in 0..k {
                    let t = &u[p][j] * &q;
                    u[i][j] -= t;
                }
                if !a[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !a[p][c].is_zero() {
            p += 1;
        }
    }
    (a, u, p)
}

/// Row-style Hermite normal form of the lattice spanned by `rows`; zero rows dropped.
pub fn hermite_rows(rows: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let (mut a, _, rank) = integer_echelon(rows, cols);
    a.truncate(rank);
    let mut pivot_cols = Vec::with_capacity(rank);
    for i in 0..rank {
        let pc = (0..cols).find(|&j| !a[i][j].is_zero()).expect("nonzero echelon row");
        if a[i][pc].is_negative() {
            for x in a[i].iter_mut() {
                *x = -x.clone();
            }
        }
        pivot_cols.push(pc);
    }
    for i in 0..rank {
        let pc = pivot_cols[i];
        for r in 0..i {
            let q = a[r][pc].div_floor(&a[i][pc]);
            if q.is_zero() {
                continue;
            }
            for j in 0..cols {
                let t = &a[i][j] * &q;
                a[r][j] -= t;
            }
        }
    }
    a
}

/// `lattice ∩ span(subspace_basis)`, as a saturated basis in Hermite form.
pub fn lattice_intersect_subspace(lattice: &LatticeBasis, subspace_basis: &[RatVec]) -> Result<LatticeBasis> {
    let d = lattice.ambient_dim();
    if let Some(v) = subspace_basis.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "subspace vector has length {} but ambient dimension is {d}",
            v.len()
        )));
    }
    // y ∈ span(S) iff y·n = 0 for every n in the annihilator of S.
    let s = RatMat::from_rows(d, subspace_basis.to_vec())?;
    let annihilator = s.nullspace();
    let b = lattice.rational_matrix();
    let k = lattice.rank();
    // Integer matrix K = B·N (columns scaled to clear denominators).
    let mut kmat: Vec<Vec<BigInt>> = vec![Vec::with_capacity(annihilator.len()); k];
    for n in &annihilator {
        let col = b.mul_vec(n);
        let ints = primitive_integer(&col);
        for (row, x) in kmat.iter_mut().zip(ints) {
            row.push(x);
        }
    }
    let (_, u, rank) = integer_echelon(&kmat, annihilator.len());
    let kernel: Vec<Vec<BigInt>> = u[rank..].to_vec();
    let rows: Vec<Vec<BigInt>> = kernel
        .iter()
        .map(|c| {
            let coeffs: Vec<Rat> = c.iter().cloned().map(Rat::from_bigint).collect();
            lattice.combine(&coeffs).iter().map(|x| x.numer()).collect()
        })
        .collect();
    LatticeBasis::new(d, hermite_rows(&rows, d))
}

/// Writes `v = length · primitive` with `primitive` primitive in the lattice
/// and `length > 0`.
pub fn primitive_and_length(v: &[Rat], lattice: &LatticeBasis) -> Result<(RatVec, Rat)> {
    if v.iter().all(Rat::is_zero) {
        return Err(Error::Domain("zero vector has no primitive direction".into()));
    }
    let c = lattice
        .coordinates(v)
        .ok_or_else(|| Error::Domain(format!("vector {:?} lies outside the span of the lattice", RatVec(v.to_vec()))))?;
    let l = lcm_of_denoms(&c);
    let ints: Vec<BigInt> = c.iter().map(|x| (x.numer() * &l) / x.denom()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let prim: Vec<Rat> = ints.iter().map(|x| Rat::from_bigint(x / &g)).collect();
    let length = Rat::from_parts(g, l)?;
    Ok((lattice.combine(&prim), length))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn rv(xs: &[&str]) -> RatVec {
        xs.iter().map(|s| r(s)).collect()
    }

    #[test]
    fn machine_word_fast_path_agrees_with_bigrational() {
        let edge = [i64::MIN, i64::MIN + 1, -3, -1, 0, 1, 2, 7, i64::MAX - 1, i64::MAX];
        let big = |x: &Rat| BigRational::new(x.numer(), x.denom());
        let mut vals = Vec::new();
        for &n in &edge {
            for &d in &[1, 2, 3, i64::MAX] {
                vals.push(Rat::new(n, d));
            }
        }
        vals.push(r("123456789012345678901234567890/7"));
        for x in &vals {
            assert_eq!(x.floor(), big(x).floor().to_integer());
            assert_eq!(x.ceil(), big(x).ceil().to_integer());
            assert_eq!(big(&-x), -big(x));
            for y in &vals {
                assert_eq!(big(&(x + y)), big(x) + big(y));
                assert_eq!(big(&(x - y)), big(x) - big(y));
                assert_eq!(big(&(x * y)), big(x) * big(y));
                if !y.is_zero() {
                    assert_eq!(big(&(x / y)), big(x) / big(y));
                }
                assert_eq!(x.cmp(y), big(x).cmp(&big(y)));
                // Canonical form: equal values compare equal structurally.
                assert_eq!(&(x + y) - y, *x);
            }
        }
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(r("-3/6").to_string(), "-1/2");
        assert_eq!(r("4/2").to_string(), "2");
        assert_eq!(r("0/5").to_string(), "0");
        assert_eq!(r("-7").to_string(), "-7");
        assert!("1/0".parse::<Rat>().is_err());
        assert!("1.5".parse::<Rat>().is_err());
        assert!("3/-4".parse::<Rat>().is_err());
        assert!(" 3".parse::<Rat>().is_err());
        assert!("".parse::<Rat>().is_err());
        assert!("--1".parse::<Rat>().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let v = rv(&["1/3", "-2", "0"]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["1/3","-2","0"]"#);
        let back: RatVec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Rat>("1.5").is_err());
    }

    #[test]
    fn square_solve() {
        let a = RatMat::from_int_rows(2, &[vec![1, -1], vec![2, 1]]).unwrap();
        let x = solve_square(&a, &rv(&["-3", "3"])).unwrap().unwrap();
        assert_eq!(x, rv(&["0", "3"]));
        let sing = RatMat::from_int_rows(2, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(solve_square(&sing, &rv(&["1", "2"])).unwrap(), None);
        assert!(solve_square(&RatMat::zeros(2, 3), &rv(&["0", "0"])).is_err());
        assert!(RatMat::from_rows(2, vec![rv(&["1"])]).is_err());
    }

    #[test]
    fn kernel_and_rank() {
        let a = RatMat::from_int_rows(3, &[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        assert_eq!(a.rank(), 1);
        let ker = a.nullspace();
        assert_eq!(ker.len(), 2);
        for k in &ker {
            assert!(a.mul_vec(k).is_zero());
        }
    }

    #[test]
    fn primitive_lengths() {
        let m = LatticeBasis::from_i64(2, &[vec![1, 2]]).unwrap();
        let (p, l) = primitive_and_length(&rv(&["4", "8"]), &m).unwrap();
        assert_eq!(p, rv(&["1", "2"]));
        assert_eq!(l, r("4"));
        let (p, l) = primitive_and_length(&rv(&["-1/2", "-1"]), &m).unwrap();
        assert_eq!(p, rv(&["-1", "-2"]));
        assert_eq!(l, r("1/2"));
        assert!(primitive_and_length(&rv(&["1", "0"]), &m).is_err());
        let z2 = LatticeBasis::standard(2);
        let (p, l) = primitive_and_length(&rv(&["6", "-4"]), &z2).unwrap();
        assert_eq!(p, rv(&["3", "-2"]));
        assert_eq!(l, r("2"));
    }

    #[test]
    fn lattice_meets_subspace() {
        let z2 = LatticeBasis::standard(2);
        let l = lattice_intersect_subspace(&z2, &[rv(&["1", "1"])]).unwrap();
        assert_eq!(l.rank(), 1);
        assert_eq!(l.row_rat(0), rv(&["1", "1"]));
        let l = lattice_intersect_subspace(&z2, &[rv(&["1/2", "3/4"])]).unwrap();
        assert_eq!(l.row_rat(0), rv(&["2", "3"]));
        let l = lattice_intersect_subspace(&z2, &[]).unwrap();
        assert_eq!(l.rank(), 0);
        let l = lattice_intersect_subspace(&z2, &[rv(&["1", "0"]), rv(&["1", "1"])]).unwrap();
        assert_eq!(l.rank(), 2);
        // Sublattice 2ℤ × ℤ meets the diagonal in ℤ(2,2).
        let m = LatticeBasis::from_i64(2, &[vec![2, 0], vec![0, 1]]).unwrap();
        let l = lattice_intersect_subspace(&m, &[rv(&["1", "1"])]).unwrap();
        assert_eq!(l.row_rat(0), rv(&["2", "2"]));
        // Non-orthogonal basis.
        let m = LatticeBasis::from_i64(2, &[vec![1, 2], vec![0, 3]]).unwrap();
        let l = lattice_intersect_subspace(&m, &[rv(&["0", "1"])]).unwrap();
        assert_eq!(l.row_rat(0), rv(&["0", "3"]));
    }

    #[test]
    fn hermite_is_canonical() {
        let a = hermite_rows(&[vec![BigInt::from(3), BigInt::from(5)], vec![BigInt::from(1), BigInt::from(2)]], 2);
        assert_eq!(a, vec![vec![BigInt::from(1), BigInt::from(0)], vec![BigInt::from(0), BigInt::from(1)]]);
    }
}
