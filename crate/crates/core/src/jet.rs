//! Truncated Taylor series through order 4, used to carry exact derivatives
//! through compositions of elementary functions.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const LEN: usize = ORDER + 1;

/// Taylor coefficients `c[j] = f^{(j)}(x0) / j!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Self { c }
    }

    /// The independent variable at `x0`.
    pub fn var(x0: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn from_derivs(d: [f64; LEN]) -> Self {
        let mut c = d;
        let mut fact = 1.0;
        for (j, cj) in c.iter_mut().enumerate().skip(1) {
            fact *= j as f64;
            *cj /= fact;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// j-th derivative.
    pub fn d(&self, j: usize) -> f64 {
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        self.c[j] * fact
    }

    /// Jet of the derivative; the top coefficient is lost.
    pub fn derivative(&self) -> Self {
        let mut c = [0.0; LEN];
        for j in 0..ORDER {
            c[j] = (j + 1) as f64 * self.c[j + 1];
        }
        Self { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { c: self.c.map(|v| v * s) }
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0) / *self
    }

    /// x^p for x0 > 0, via the recurrence for y = x^p: x y' = p x' y.
    pub fn powf(&self, p: f64) -> Self {
        let x = &self.c;
        let mut y = [0.0; LEN];
        y[0] = x[0].powf(p);
        for k in 1..LEN {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((p + 1.0) * j as f64 - k as f64) * x[j] * y[k - j];
            }
            y[k] = s / (k as f64 * x[0]);
        }
        Self { c: y }
    }

    pub fn exp(&self) -> Self {
        let x = &self.c;
        let mut y = [0.0; LEN];
        y[0] = x[0].exp();
        for k in 1..LEN {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * x[j] * y[k - j];
            }
            y[k] = s / k as f64;
        }
        Self { c: y }
    }

    pub fn ln(&self) -> Self {
        let x = &self.c;
        let mut y = [0.0; LEN];
        y[0] = x[0].ln();
        for k in 1..LEN {
            let mut s = k as f64 * x[k];
            for j in 1..k {
                s -= j as f64 * y[j] * x[k - j];
            }
            y[k] = s / (k as f64 * x[0]);
        }
        Self { c: y }
    }

    /// f(g(x)) where `self` holds the Taylor coefficients of f at g(x0).
    pub fn compose(&self, g: &Jet) -> Self {
        let mut dg = *g;
        dg.c[0] = 0.0;
        let mut out = Jet::constant(self.c[0]);
        let mut pw = Jet::constant(1.0);
        for j in 1..LEN {
            pw = pw * dg;
            out = out + pw.scale(self.c[j]);
        }
        out
    }

    /// (u'' + (n-1)/r u' - lam/r^2 u) as a jet at r, from a jet of u at r.
    /// Only the first `ORDER - 2` coefficients are meaningful.
    pub fn radial_laplacian(&self, r: f64, n: f64, lam: f64) -> Self {
        let du = self.derivative();
        let d2u = du.derivative();
        let inv = Jet::var(r).recip();
        d2u + du * inv.scale(n - 1.0) - *self * (inv * inv).scale(lam)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            for j in 0..=k {
                c[k] += self.c[j] * o.c[k - j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= o.c[j] * c[k - j];
            }
            c[k] = s / o.c[0];
        }
        Jet { c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(v)
    }
}
