//! Exact truncated series in `w = e^{−ρ}` for the formal expanding soliton and
//! the formal flow near a conical end.
//!
//! Only radial potentials are considered, so a term of scaling weight `2j` is a
//! multiple of `w^j`; odd weights never occur. In the reduction the cone has
//! `ω₀ = (e^ρ, e^ρ)` and `Ric(ω₀) = ((λ−n), 0)`. For a potential `u = Σ u_j w^j`,
//!
//! ```text
//! φ/e^ρ = 1 − τ·(λ−n)·w − Σ j·u_j·w^{j+1},    ψ/e^ρ = 1 + Σ j²·u_j·w^{j+1},
//! ```
//!
//! with `τ = 1` for the soliton and `τ = t` for the flow. The soliton solves
//! `m·log(φ/e^ρ) + log(ψ/e^ρ) = Σ (j+1)·u_j·w^j` and the flow solves
//! `∂_t u = m·log(φ/e^ρ) + log(ψ/e^ρ)`. Both are triangular: the `w^j`
//! coefficient of the left side only involves `u_1, …, u_{j−1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses `p/q`, an integer, or a finite decimal such as `-2.75` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational number: `{text}`"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (int_part, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.trim_start_matches(['-', '+']).is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac}").parse().map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-shift) as usize))
    })
}

/// The decimal `x` prints as, read back exactly: `0.1` gives `1/10`.
pub fn rational_from_decimal(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("not a finite number: {x}")));
    }
    parse_rational(&format!("{x}"))
}

/// Coefficient ring for [`Series`].
pub trait Coefficient: Clone + PartialEq + fmt::Debug {
    fn zero_coeff() -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, q: &Rational) -> Self;
}

impl Coefficient for Rational {
    fn zero_coeff() -> Self {
        Zero::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, q: &Rational) -> Self {
        self * q
    }
}

/// Polynomial in `t` with exact rational coefficients; index = power.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TimePoly(Vec<Rational>);

impl TimePoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|v| v.is_zero()) {
            c.pop();
        }
        TimePoly(c)
    }

    pub fn zero() -> Self {
        TimePoly(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constant(q: Rational) -> Self {
        Self::new(vec![q])
    }

    pub fn monomial(q: Rational, power: usize) -> Self {
        let mut c = vec![Rational::zero(); power + 1];
        c[power] = q;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn coeff(&self, power: usize) -> Rational {
        self.0.get(power).cloned().unwrap_or_else(Rational::zero)
    }

    /// `∫_0^t`.
    pub fn integrate(&self) -> Self {
        let mut c = vec![Rational::zero()];
        for (d, v) in self.0.iter().enumerate() {
            c.push(v / int(d as i64 + 1));
        }
        Self::new(c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, v)| v * int(d as i64))
                .collect(),
        )
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for v in self.0.iter().rev() {
            acc = acc * t + v;
        }
        acc
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, v| acc * t + v.to_f64().unwrap_or(f64::NAN))
    }

    /// Keeps only the `t^power` term.
    pub fn keep_power(&self, power: usize) -> Self {
        Self::monomial(self.coeff(power), power)
    }
}

impl Coefficient for TimePoly {
    fn zero_coeff() -> Self {
        Self::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new((0..n).map(|d| self.coeff(d) + other.coeff(d)).collect())
    }
    fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::zero();
        }
        let mut c = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }
    fn scale(&self, q: &Rational) -> Self {
        Self::new(self.0.iter().map(|v| v * q).collect())
    }
}

impl fmt::Debug for TimePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimePoly[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Power series in `w` truncated after `w^order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<C: Coefficient> {
    c: Vec<C>,
}

impl<C: Coefficient> Series<C> {
    pub fn zero(order: usize) -> Self {
        Series { c: vec![C::zero_coeff(); order + 1] }
    }

    pub fn from_coeffs(order: usize, mut c: Vec<C>) -> Self {
        c.resize(order + 1, C::zero_coeff());
        c.truncate(order + 1);
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c
    }

    pub fn get(&self, j: usize) -> C {
        self.c.get(j).cloned().unwrap_or_else(C::zero_coeff)
    }

    pub fn set(&mut self, j: usize, v: C) {
        if j < self.c.len() {
            self.c[j] = v;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Series { c: (0..=k).map(|j| self.c[j].add(&other.c[j])).collect() }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Series { c: self.c.iter().map(|v| v.scale(q)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut c = vec![C::zero_coeff(); k + 1];
        for i in 0..=k {
            if self.c[i].is_zero_coeff() {
                continue;
            }
            for j in 0..=k - i {
                if other.c[j].is_zero_coeff() {
                    continue;
                }
                c[i + j] = c[i + j].add(&self.c[i].mul(&other.c[j]));
            }
        }
        Series { c }
    }

    fn check_no_constant(&self) -> Result<()> {
        if self.c[0].is_zero_coeff() {
            Ok(())
        } else {
            Err(Error::InvalidExpansion("series argument must have zero constant term".into()))
        }
    }

    /// `log(1 + x)` for `x` without constant term.
    pub fn log1p(&self) -> Result<Self> {
        self.check_no_constant()?;
        let k = self.order();
        let mut out = Self::zero(k);
        let mut power = self.clone();
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1 } else { -1 };
            out = out.add(&power.scale(&rat(sign, i as i64)));
            power = power.mul(self);
        }
        Ok(out)
    }

    /// `exp(x)` for `x` without constant term; the constant term of the result is `one`.
    pub fn exp(&self, one: C) -> Result<Self> {
        self.check_no_constant()?;
        let k = self.order();
        let mut out = Self::zero(k);
        out.c[0] = one;
        let mut power = self.clone();
        let mut fact = Rational::one();
        for i in 1..=k {
            fact *= int(i as i64);
            out = out.add(&power.scale(&(Rational::one() / &fact)));
            power = power.mul(self);
        }
        Ok(out)
    }

    /// `(1 + x)^e` for integer `e`.
    pub fn pow1p(&self, e: i64, one: C) -> Result<Self> {
        self.log1p()?.scale(&int(e)).exp(one)
    }

    /// `w·d/dw`, i.e. `−d/dρ`.
    pub fn euler(&self) -> Self {
        Series { c: self.c.iter().enumerate().map(|(j, v)| v.scale(&int(j as i64))).collect() }
    }
}

/// Finite series in `w` whose coefficients are exact polynomials in `t`.
///
/// Slot `j` holds the coefficient of `w^j`; an optional `cone` term carries a
/// multiple of `w^{−1} = e^ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedExpansion {
    order: usize,
    coeffs: Vec<TimePoly>,
    n: usize,
    lambda: Rational,
    cone: Rational,
}

impl TruncatedExpansion {
    pub fn new(n: usize, lambda: Rational, coeffs: Vec<TimePoly>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidExpansion("expansion needs at least the w^0 slot".into()));
        }
        if n < 2 {
            return Err(Error::InvalidExpansion(format!("need n >= 2, got {n}")));
        }
        Ok(TruncatedExpansion { order: coeffs.len() - 1, coeffs, n, lambda, cone: Rational::zero() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn coeffs(&self) -> &[TimePoly] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> &TimePoly {
        &self.coeffs[j]
    }

    /// Coefficient of `e^ρ`.
    pub fn cone(&self) -> &Rational {
        &self.cone
    }

    pub fn is_zero(&self) -> bool {
        self.cone.is_zero() && self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Slot values at time `t`.
    pub fn at_time(&self, t: &Rational) -> Vec<Rational> {
        self.coeffs.iter().map(|c| c.eval(t)).collect()
    }

    /// Constant-in-time slot values (the soliton coefficients `a_j`).
    pub fn constants(&self) -> Vec<Rational> {
        self.coeffs.iter().map(|c| c.coeff(0)).collect()
    }

    pub fn eval(&self, rho: f64, t: f64) -> f64 {
        let w = (-rho).exp();
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c.eval_f64(t);
        }
        acc + self.cone.to_f64().unwrap_or(f64::NAN) * rho.exp()
    }

    fn m(&self) -> Rational {
        int(self.n as i64 - 1)
    }

    fn excess(&self) -> Rational {
        &self.lambda - int(self.n as i64)
    }

    /// Table rows `(j, power, numerator, denominator)`, with `j = −1` for the cone term.
    pub fn rows(&self) -> Vec<(i64, usize, BigInt, BigInt)> {
        let mut out = Vec::new();
        if !self.cone.is_zero() {
            out.push((-1, 0, self.cone.numer().clone(), self.cone.denom().clone()));
        }
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                out.push((j as i64, 0, BigInt::zero(), BigInt::one()));
            }
            for (d, v) in c.coeffs().iter().enumerate() {
                if !v.is_zero() {
                    out.push((j as i64, d, v.numer().clone(), v.denom().clone()));
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "coeff_t_power", "numerator", "denominator"])?;
        for (j, d, num, den) in self.rows() {
            wr.write_record([j.to_string(), d.to_string(), num.to_string(), den.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Human-readable form, e.g. `u = 1/2 t^2 w - 1/6 t^3 w^2 + O(w^3)`.
    pub fn pretty(&self, name: &str) -> String {
        let mut terms: Vec<(bool, String)> = Vec::new();
        if !self.cone.is_zero() {
            terms.push(monomial_text(&self.cone, 0, "e^rho"));
        }
        for (j, c) in self.coeffs.iter().enumerate() {
            let wpart = match j {
                0 => String::new(),
                1 => "w".to_string(),
                _ => format!("w^{j}"),
            };
            for (d, v) in c.coeffs().iter().enumerate().rev() {
                if !v.is_zero() {
                    terms.push(monomial_text(v, d, &wpart));
                }
            }
        }
        let mut s = format!("{name} =");
        if terms.is_empty() {
            s.push_str(" 0");
        }
        for (i, (neg, body)) in terms.iter().enumerate() {
            match (i, neg) {
                (0, true) => s.push_str(&format!(" -{body}")),
                (0, false) => s.push_str(&format!(" {body}")),
                (_, true) => s.push_str(&format!(" - {body}")),
                (_, false) => s.push_str(&format!(" + {body}")),
            }
        }
        let next = self.order + 1;
        if next == 1 {
            s.push_str(" + O(w)");
        } else {
            s.push_str(&format!(" + O(w^{next})"));
        }
        s
    }
}

fn monomial_text(v: &Rational, power: usize, wpart: &str) -> (bool, String) {
    let neg = v.is_negative();
    let a = v.abs();
    let mut parts: Vec<String> = Vec::new();
    let bare = power > 0 || !wpart.is_empty();
    if !(a.is_one() && bare) {
        parts.push(a.to_string());
    }
    match power {
        0 => {}
        1 => parts.push("t".into()),
        d => parts.push(format!("t^{d}")),
    }
    if !wpart.is_empty() {
        parts.push(wpart.to_string());
    }
    (neg, parts.join(" "))
}

impl fmt::Display for TruncatedExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty("u"))
    }
}

/// `m·log(φ/e^ρ) + log(ψ/e^ρ)` for the potential `u`, through `w^order`.
fn log_volume_series(
    m: &Rational,
    excess_term: &TimePoly,
    u: &[TimePoly],
    order: usize,
) -> Result<Series<TimePoly>> {
    let mut x = Series::<TimePoly>::zero(order);
    let mut y = Series::<TimePoly>::zero(order);
    if order >= 1 {
        x.set(1, excess_term.scale(&int(-1)));
    }
    for (j, uj) in u.iter().enumerate().skip(1) {
        if j + 1 > order {
            break;
        }
        let jj = int(j as i64);
        x.set(j + 1, x.get(j + 1).add(&uj.scale(&-jj.clone())));
        y.set(j + 1, y.get(j + 1).add(&uj.scale(&(&jj * &jj))));
    }
    Ok(x.log1p()?.scale(m).add(&y.log1p()?))
}

/// Formal expanding soliton `u = Σ a_j w^j` through `w^order`.
pub fn soliton_expand(n: usize, lambda: &Rational, order: usize) -> Result<TruncatedExpansion> {
    if order < 1 {
        return Err(Error::InvalidExpansion("order must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidExpansion(format!("need n >= 2, got {n}")));
    }
    let m = int(n as i64 - 1);
    let excess = TimePoly::constant(lambda - int(n as i64));
    let mut a: Vec<TimePoly> = vec![TimePoly::zero(); order + 1];
    for j in 1..=order {
        let lhs = log_volume_series(&m, &excess, &a[..j], j)?;
        a[j] = lhs.get(j).scale(&rat(1, j as i64 + 1));
    }
    TruncatedExpansion::new(n, lambda.clone(), a)
}

/// Gradient potential `F = −e^ρ + Σ j·a_j·w^j` of a formal soliton.
pub fn gradient_potential(expansion: &TruncatedExpansion) -> TruncatedExpansion {
    let coeffs = expansion
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c.scale(&int(j as i64)))
        .collect();
    TruncatedExpansion { coeffs, cone: int(-1), ..expansion.clone() }
}

/// Fiber coefficient `ψ` of the soliton metric `ω₀ − Ric(ω₀) + √−1∂∂̄u`, as
/// `(e^ρ part, series part)`.
pub fn soliton_fiber(expansion: &TruncatedExpansion) -> (Rational, Vec<Rational>) {
    let a = expansion.constants();
    let mut series = vec![Rational::zero(); expansion.order + 1];
    for (j, aj) in a.iter().enumerate().skip(1) {
        // e^ρ·j²·a_j·w^{j+1} = j²·a_j·w^j
        series[j] = aj * int((j * j) as i64);
    }
    (Rational::one(), series)
}

/// Coefficients of `∂_ρF + ψ` through the expansion's order; identically zero
/// for a gradient soliton.
pub fn gradient_identity_residual(potential: &TruncatedExpansion, soliton: &TruncatedExpansion) -> Vec<Rational> {
    let (cone_psi, psi) = soliton_fiber(soliton);
    // ∂_ρ(c·e^ρ) = c·e^ρ and ∂_ρ(w^j) = −j·w^j
    let mut out = vec![potential.cone() + cone_psi];
    for j in 0..=potential.order.min(soliton.order) {
        let df = -potential.coeffs[j].coeff(0) * int(j as i64);
        out.push(df + &psi[j]);
    }
    out
}

/// Formal flow `u(w, t)` from the cone with free constants `c_k` given by
/// scaling weight `k` (slot `k/2`). Constants beyond the order are ignored.
pub fn flow_expand(
    n: usize,
    lambda: &Rational,
    order: usize,
    constants: &BTreeMap<usize, Rational>,
) -> Result<TruncatedExpansion> {
    if order < 1 {
        return Err(Error::InvalidExpansion("order must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidExpansion(format!("need n >= 2, got {n}")));
    }
    for (&k, v) in constants {
        if k % 2 == 1 && !v.is_zero() {
            return Err(Error::OddWeightConstant { weight: k });
        }
    }
    let c = |j: usize| constants.get(&(2 * j)).cloned().unwrap_or_else(Rational::zero);
    let m = int(n as i64 - 1);
    let excess = TimePoly::monomial(lambda - int(n as i64), 1);
    let mut u: Vec<TimePoly> = vec![TimePoly::zero(); order + 1];
    u[0] = TimePoly::constant(c(0));
    for j in 1..=order {
        let rhs = log_volume_series(&m, &excess, &u[..j], j)?;
        u[j] = rhs.get(j).integrate().add(&TimePoly::constant(c(j)));
    }
    TruncatedExpansion::new(n, lambda.clone(), u)
}

/// Right side of the cascade, `[w^j](m·log(φ/e^ρ) + log(ψ/e^ρ))`, for a given
/// time-dependent potential.
pub fn flow_rhs(expansion: &TruncatedExpansion) -> Result<Vec<TimePoly>> {
    let excess = TimePoly::monomial(expansion.excess(), 1);
    let s = log_volume_series(&expansion.m(), &excess, &expansion.coeffs, expansion.order)?;
    Ok(s.coeffs().to_vec())
}

/// Keeps only the top-degree term `t^{j+1}` in each slot `w^j`.
pub fn blowdown(expansion: &TruncatedExpansion) -> TruncatedExpansion {
    let coeffs = expansion
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| if j == 0 { TimePoly::zero() } else { c.keep_power(j + 1) })
        .collect();
    TruncatedExpansion { coeffs, ..expansion.clone() }
}

/// Parabolic rescaling `u_s(ŵ, t̂) = s^{−2}·u(ŵ/s², s²·t̂)`.
pub fn rescale(expansion: &TruncatedExpansion, s: &Rational) -> Result<TruncatedExpansion> {
    if !s.is_positive() {
        return Err(Error::InvalidExpansion("scale must be positive".into()));
    }
    let s2 = s * s;
    let pow = |e: i64| -> Rational {
        if e >= 0 {
            num_traits::pow(s2.clone(), e as usize)
        } else {
            Rational::one() / num_traits::pow(s2.clone(), (-e) as usize)
        }
    };
    let coeffs = expansion
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            TimePoly::new(
                c.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(d, v)| v * pow(d as i64 - j as i64 - 1))
                    .collect(),
            )
        })
        .collect();
    Ok(TruncatedExpansion { coeffs, ..expansion.clone() })
}

/// `log(1 + x)` of an exact rational with `|x| < 1/2`, summed until the terms
/// drop below `10^{-40}`.
fn log1p_exact(x: &Rational) -> Rational {
    let tol = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 40));
    let mut out = Rational::zero();
    let mut power = x.clone();
    let mut k = 1i64;
    loop {
        let term = &power / int(k);
        let small = term.abs() < tol;
        out += if k % 2 == 1 { term } else { -term };
        if small || k > 400 {
            break;
        }
        power *= x;
        k += 1;
    }
    out
}

/// Residual of the soliton equation for the truncated potential at `ρ`,
/// `m·log(φ/e^ρ) + log(ψ/e^ρ) − Σ (j+1)·a_j·w^j`, evaluated in exact
/// arithmetic at `w = e^{−ρ}` rounded to the nearest double.
pub fn soliton_residual_at(expansion: &TruncatedExpansion, rho: f64) -> Result<f64> {
    let w = Rational::from_float((-rho).exp())
        .ok_or_else(|| Error::InvalidExpansion(format!("cannot evaluate at rho = {rho}")))?;
    if w >= rat(1, 4) {
        return Err(Error::InvalidExpansion(format!("rho = {rho} too small for the series")));
    }
    let a = expansion.constants();
    let m = expansion.m();
    let mut x = -expansion.excess() * &w;
    let mut y = Rational::zero();
    let mut rhs = Rational::zero();
    let mut wj = Rational::one();
    for (j, aj) in a.iter().enumerate() {
        let jj = int(j as i64);
        let wj1 = &wj * &w;
        x -= &jj * aj * &wj1;
        y += &jj * &jj * aj * &wj1;
        rhs += (&jj + int(1)) * aj * &wj;
        wj = wj1;
    }
    if x.abs() >= rat(1, 2) || y.abs() >= rat(1, 2) {
        return Err(Error::InvalidExpansion(format!("rho = {rho} too small for the series")));
    }
    let r = m * log1p_exact(&x) + log1p_exact(&y) - rhs;
    Ok(r.to_f64().unwrap_or(f64::NAN))
}
