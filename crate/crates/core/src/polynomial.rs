//! Sparse multivariate polynomials in Gaussian variables.
//!
//! Expectations are exact: a monomial `Π z_i^{α_i}` has Gaussian mean
//! `Π (α_i − 1)!!` over even exponents, computed in integer arithmetic.
//!
//! Polynomials parse from strings such as `"z1 + 2*He2(z1)*z2 - z2^2/3"`.
//! Variables are 1-based (`z1`, `z2`, …); juxtaposition multiplies, so
//! `2z1z2` is accepted too.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::hermite::{gaussian_moment, he_monomial_coeffs, monomial_hermite_moment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultivariatePolynomial {
    num_vars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultivariatePolynomial {
    pub fn zero(num_vars: usize) -> Self {
        MultivariatePolynomial { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    /// The coordinate `z_i` (0-based index).
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(exponents: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// `Σ_m c_m z_i^m`.
    pub fn univariate(num_vars: usize, i: usize, coeffs: &[f64]) -> Self {
        let mut p = Self::zero(num_vars);
        for (m, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; num_vars];
            e[i] = m as u32;
            p.add_term(e, c);
        }
        p
    }

    /// `He_k(z_i)`.
    pub fn hermite(num_vars: usize, i: usize, k: u32) -> Self {
        Self::univariate(num_vars, i, &he_monomial_coeffs(k))
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: f64) {
        assert_eq!(exponents.len(), self.num_vars, "exponent length must equal num_vars");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents);
        match entry {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Indices of variables that appear with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&i| self.terms.keys().any(|e| e[i] > 0)).collect()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert!(z.len() >= self.num_vars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = *c;
                for (x, &k) in z.iter().zip(e) {
                    if k > 0 {
                        m *= x.powi(k as i32);
                    }
                }
                m
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Drops terms whose magnitude is at most `tol` times the largest one.
    pub fn pruned(&self, tol: f64) -> Self {
        let max = self.terms.values().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if c.abs() > tol * max {
                out.add_term(e.clone(), *c);
            }
        }
        out
    }

    /// `∂/∂z_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * e[i] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.num_vars).map(|i| self.partial(i)).collect()
    }

    /// Substitutes `z_i = Σ_j m[i][j] y_j`, giving a polynomial in
    /// `new_vars` variables `y`.
    pub fn substitute_linear(&self, m: &[Vec<f64>], new_vars: usize) -> Self {
        assert_eq!(m.len(), self.num_vars);
        let forms: Vec<Self> = m
            .iter()
            .map(|row| {
                let mut p = Self::zero(new_vars);
                for (j, &c) in row.iter().enumerate() {
                    let mut e = vec![0; new_vars];
                    e[j] = 1;
                    p.add_term(e, c);
                }
                p
            })
            .collect();
        // Cache powers of each linear form.
        let max_deg = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0);
        let powers: Vec<Vec<Self>> = forms
            .iter()
            .map(|f| {
                let mut v = vec![Self::constant(new_vars, 1.0)];
                for k in 1..=max_deg as usize {
                    let next = &v[k - 1] * f;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(new_vars);
        for (e, c) in &self.terms {
            let mut t = Self::constant(new_vars, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[i][k as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Exact `E[p(z)]` for `z ~ N(0, I)`.
    pub fn expectation(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().map(|&k| gaussian_moment(k)).product::<f64>())
            .sum()
    }

    /// Averages out the variables flagged in `mask` (each `N(0, 1)`), leaving a
    /// polynomial in the remaining variables, re-indexed in order.
    pub fn partial_expectation(&self, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), self.num_vars);
        let keep: Vec<usize> = (0..self.num_vars).filter(|&i| !mask[i]).collect();
        let mut out = Self::zero(keep.len());
        for (e, c) in &self.terms {
            let w: f64 = (0..self.num_vars).filter(|&i| mask[i]).map(|i| gaussian_moment(e[i])).product();
            if w != 0.0 {
                out.add_term(keep.iter().map(|&i| e[i]).collect(), c * w);
            }
        }
        out
    }

    /// Exact `E[p(z) Π_i He_{j_i}(z_i)]`.
    pub fn hermite_projection(&self, j: &[u32]) -> f64 {
        assert_eq!(j.len(), self.num_vars);
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(j).map(|(&m, &k)| monomial_hermite_moment(m, k)).product::<f64>())
            .sum()
    }

    /// Embeds into a space with more variables (new ones appended).
    pub fn with_num_vars(&self, num_vars: usize) -> Self {
        assert!(num_vars >= self.num_vars);
        let mut out = Self::zero(num_vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.resize(num_vars, 0);
            out.add_term(e2, *c);
        }
        out
    }

    /// Parses with an explicit variable count (must cover every index used).
    pub fn parse_with_vars(s: &str, num_vars: usize) -> Result<Self> {
        let p: Self = s.parse()?;
        if p.num_vars > num_vars {
            return Err(Error::InvalidArgument(alloc::format!(
                "expression uses z{} but only {num_vars} variables were declared",
                p.num_vars
            )));
        }
        Ok(p.with_num_vars(num_vars))
    }
}

fn binary(a: &MultivariatePolynomial, b: &MultivariatePolynomial, sign: f64) -> MultivariatePolynomial {
    let n = a.num_vars.max(b.num_vars);
    let mut out = a.with_num_vars(n);
    for (e, c) in &b.terms {
        let mut e2 = e.clone();
        e2.resize(n, 0);
        out.add_term(e2, sign * c);
    }
    out
}

impl Add for &MultivariatePolynomial {
    type Output = MultivariatePolynomial;
    fn add(self, rhs: Self) -> MultivariatePolynomial {
        binary(self, rhs, 1.0)
    }
}

impl Sub for &MultivariatePolynomial {
    type Output = MultivariatePolynomial;
    fn sub(self, rhs: Self) -> MultivariatePolynomial {
        binary(self, rhs, -1.0)
    }
}

impl Neg for &MultivariatePolynomial {
    type Output = MultivariatePolynomial;
    fn neg(self) -> MultivariatePolynomial {
        self.scale(-1.0)
    }
}

impl Mul for &MultivariatePolynomial {
    type Output = MultivariatePolynomial;
    // Multiplying monomials adds their exponents.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> MultivariatePolynomial {
        let n = self.num_vars.max(rhs.num_vars);
        let mut out = MultivariatePolynomial::zero(n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = (0..n)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for MultivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Highest degree first reads naturally.
        let mut terms: Vec<(&Vec<u32>, &f64)> = self.terms.iter().collect();
        terms.sort_by_key(|(e, _)| e.iter().sum::<u32>());
        for (e, &c) in terms {
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { alloc::format!("z{}", i + 1) } else { alloc::format!("z{}^{}", i + 1, k) })
                .collect();
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for MultivariatePolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0, max_var: 0 };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        let n = p.max_var.max(expr.num_vars);
        Ok(expr.with_num_vars(n))
    }
}

/// Recursive-descent parser over
///
/// ```text
/// expr   := ['+'|'-'] term (('+'|'-') term)*
/// term   := factor (['*'|'/'] factor | factor)*
/// factor := atom ['^' int]
/// atom   := number | 'z' int | 'He' int '(' expr ')' | '(' expr ')'
/// ```
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    max_var: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MultivariatePolynomial> {
        let mut sign = 1.0;
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                sign = -1.0;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        let mut acc = self.term()?.scale(sign);
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultivariatePolynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    if f.degree() != 0 || f.is_zero() {
                        return Err(self.err("division is only allowed by a nonzero constant"));
                    }
                    let c = f.expectation();
                    acc = acc.scale(1.0 / c);
                }
                Some(c) if c.is_ascii_digit() || c == b'.' || c == b'z' || c == b'H' || c == b'(' => {
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<MultivariatePolynomial> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.integer()?;
            return Ok(base.pow(k as u32));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        core::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("integer out of range"))
    }

    fn atom(&mut self) -> Result<MultivariatePolynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'z') => {
                self.pos += 1;
                let i = self.integer()?;
                if i == 0 {
                    return Err(self.err("variables are numbered from z1"));
                }
                self.max_var = self.max_var.max(i);
                Ok(MultivariatePolynomial::var(i, i - 1))
            }
            Some(b'H') => {
                if self.src.get(self.pos + 1) != Some(&b'e') {
                    return Err(self.err("expected 'He<k>(...)'"));
                }
                self.pos += 2;
                let k = self.integer()?;
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after Hermite order"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                // He_k(arg) by expanding the monomial coefficients.
                let c = he_monomial_coeffs(k as u32);
                let n = arg.num_vars;
                let mut acc = MultivariatePolynomial::zero(n);
                let mut pw = MultivariatePolynomial::constant(n, 1.0);
                for (m, &cm) in c.iter().enumerate() {
                    if m > 0 {
                        pw = &pw * &arg;
                    }
                    acc = &acc + &pw.scale(cm);
                }
                Ok(acc)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let b = self.src[self.pos];
                    let exp_sign = (b == b'-' || b == b'+')
                        && self.pos > start
                        && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = core::str::from_utf8(&self.src[start..self.pos]).map_err(|_| self.err("bad number"))?;
                let v: f64 = text.parse().map_err(|_| self.err("malformed number"))?;
                Ok(MultivariatePolynomial::constant(0, v))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(s: &str) -> MultivariatePolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn parses_mixed_hermite_expressions() {
        let g = p("z1/3 + 2*He2(z1)*z2 + z1*z3");
        assert_eq!(g.num_vars(), 3);
        assert_relative_eq!(g.coefficient(&[1, 0, 0]), 1.0 / 3.0);
        assert_relative_eq!(g.coefficient(&[2, 1, 0]), 2.0);
        assert_relative_eq!(g.coefficient(&[0, 1, 0]), -2.0);
        assert_relative_eq!(g.coefficient(&[1, 0, 1]), 1.0);
        assert_eq!(g.num_terms(), 4);

        let h = p("2z1z2/3 - (z1 - z2)^2");
        assert_relative_eq!(h.coefficient(&[1, 1]), 2.0 / 3.0 + 2.0);
        assert_relative_eq!(h.coefficient(&[2, 0]), -1.0);
        assert_eq!(p("-z1 + 1e-1").coefficient(&[0]), 0.1);
    }

    #[test]
    fn parse_errors_carry_positions() {
        for bad in ["z0", "z1 +", "He(z1)", "z1/z2", "z1 ) ", "2 $ z1"] {
            assert!(matches!(bad.parse::<MultivariatePolynomial>(), Err(Error::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn display_roundtrips() {
        let g = p("z1 + 2*z1*z2 - 0.5*z2^3 + 4");
        let back: MultivariatePolynomial = g.to_string().parse().unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn wick_expectations() {
        assert_eq!(p("z1^4*z2^2").expectation(), 3.0);
        assert_eq!(p("z1*z2").expectation(), 0.0);
        assert_eq!(p("He4(z1)").expectation(), 0.0);
        assert_eq!(p("(z1 + z2)^2").expectation(), 2.0);
    }

    #[test]
    fn hermite_projections_of_products() {
        assert_eq!(p("z1*z2").hermite_projection(&[1, 1]), 1.0);
        assert_eq!(p("z1*z2").hermite_projection(&[2, 0]), 0.0);
        assert_eq!(p("z1^2 + z2^2").hermite_projection(&[2, 0]), 2.0);
    }

    #[test]
    fn partial_expectation_keeps_remaining_variables() {
        let g = p("z1 + z1*z2^2 + z2*z3");
        let e = g.partial_expectation(&[false, true, true]);
        assert_eq!(e.num_vars(), 1);
        assert_relative_eq!(e.coefficient(&[1]), 2.0);
        assert_eq!(e.num_terms(), 1);
    }

    #[test]
    fn substitution_by_rotation_preserves_expectation_of_squares() {
        let g = p("z1 + z1*z2 + He3(z2)");
        let c = core::f64::consts::FRAC_1_SQRT_2;
        let rot = vec![vec![c, -c], vec![c, c]];
        let h = g.substitute_linear(&rot, 2);
        for x in [[0.3, -1.2], [2.0, 0.5]] {
            let y = [c * x[0] - c * x[1], c * x[0] + c * x[1]];
            assert_relative_eq!(h.eval(&x), g.eval(&y), epsilon = 1e-12);
        }
        assert_relative_eq!((&h * &h).expectation(), (&g * &g).expectation(), epsilon = 1e-10);
    }

    #[test]
    fn derivatives() {
        let g = p("z1^3*z2 + z2");
        assert_eq!(g.partial(0), p("3*z1^2*z2"));
        assert_eq!(g.partial(1), p("z1^3 + 1").with_num_vars(2));
        assert_eq!(g.degree(), 4);
        assert_eq!(g.support(), vec![0, 1]);
    }
}
