//! The change of variables r = s^q between the weighted problem in dimension N
//! and the unweighted one in effective dimension M.

use crate::error::Result;
use crate::jet::Jet;
use crate::params::Params;
use crate::radial::{RadialFunction, RadialGrid};
use serde::Serialize;

/// v(s) = u(s^q).
pub struct SobolevSide<'a> {
    pub q: f64,
    pub u: &'a dyn RadialFunction,
}

/// u(r) = v(r^{1/q}).
pub struct WeightedSide<'a> {
    pub q: f64,
    pub v: &'a dyn RadialFunction,
}

pub fn to_sobolev<'a>(p: &Params, u: &'a dyn RadialFunction) -> SobolevSide<'a> {
    SobolevSide { q: p.q, u }
}

pub fn from_sobolev<'a>(p: &Params, v: &'a dyn RadialFunction) -> WeightedSide<'a> {
    WeightedSide { q: p.q, v }
}

fn power_map(x: f64, e: f64, f: &dyn RadialFunction) -> Jet {
    let inner = Jet::var(x).powf(e);
    f.jet(inner.value()).compose(&inner)
}

impl RadialFunction for SobolevSide<'_> {
    fn jet(&self, s: f64) -> Jet {
        power_map(s, self.q, self.u)
    }
    fn value(&self, s: f64) -> f64 {
        self.u.value(s.powf(self.q))
    }
}

impl RadialFunction for WeightedSide<'_> {
    fn jet(&self, r: f64) -> Jet {
        power_map(r, 1.0 / self.q, self.v)
    }
    fn value(&self, r: f64) -> f64 {
        self.v.value(r.powf(1.0 / self.q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, rel_err: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()) }
    }
}

/// int_0^inf F(s) ds evaluated on the s-grid induced by s = r^{1/q}.
fn integrate_s(grid: &RadialGrid, q: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let e = 1.0 / q;
    Ok(grid.integrate(|r| f(r.powf(e)) * e * r.powf(e - 1.0))?.value)
}

/// int r^alpha (u'' + (N-1)u'/r)^2 r^{N-1} dr against
/// q^{-3} int (v'' + (M-1)v'/s)^2 s^{M-1} ds, both through jets.
pub fn norm_identity_check(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<IdentityCheck> {
    let (al, nf, m) = (p.alpha, p.nf(), p.m);
    let lhs = grid
        .integrate(|r| {
            let l = u.jet(r).radial_laplacian(r, nf, 0.0).value();
            r.powf(al + nf - 1.0) * l * l
        })?
        .value;
    let v = to_sobolev(p, u);
    let rhs = integrate_s(grid, p.q, |s| {
        let l = v.jet(s).radial_laplacian(s, m, 0.0).value();
        s.powf(m - 1.0) * l * l
    })? / p.q.powi(3);
    Ok(IdentityCheck::new(lhs, rhs))
}

/// int r^{-alpha} |u|^{p*} r^{N-1} dr against q int |v|^{2M/(M-4)} s^{M-1} ds.
pub fn star_identity_check(p: &Params, u: &dyn RadialFunction, grid: &RadialGrid) -> Result<IdentityCheck> {
    let (al, nf, m) = (p.alpha, p.nf(), p.m);
    let lhs = grid.integrate(|r| r.powf(nf - 1.0 - al) * u.value(r).abs().powf(p.pstar))?.value;
    let v = to_sobolev(p, u);
    let expo = 2.0 * m / (m - 4.0);
    let rhs = p.q * integrate_s(grid, p.q, |s| s.powf(m - 1.0) * v.value(s).abs().powf(expo))?;
    Ok(IdentityCheck::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::normalization_constant;
    use crate::profiles::{extremal_u, log_space};
    use crate::radial::JetFn;
    use approx::assert_relative_eq;

    const SETS: [(usize, f64); 5] = [(5, 1.0), (5, 0.5), (6, -1.0), (3, 1.5), (7, -2.0)];

    #[test]
    fn bubble_on_sobolev_side() {
        for (n, al) in SETS {
            let p = Params::new(n, al).unwrap();
            let u = extremal_u(&p, 1.0).unwrap();
            let v = to_sobolev(&p, &u);
            let c = normalization_constant(&p);
            for s in log_space(1e-2, 1e2, 30) {
                assert_relative_eq!(v.value(s), c * (1.0 + s * s).powf(-(p.m - 4.0) / 2.0), max_relative = 1e-12);
                let direct = JetFn(|x: Jet| (x * x + 1.0).powf(-(p.m - 4.0) / 2.0).scale(c)).jet(s);
                assert_relative_eq!(v.jet(s).d(2), direct.d(2), max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_and_identity_at_alpha_zero() {
        let p = Params::new(6, -1.0).unwrap();
        let u = extremal_u(&p, 1.3).unwrap();
        let v = to_sobolev(&p, &u);
        let back = from_sobolev(&p, &v);
        for r in log_space(1e-3, 1e3, 100) {
            assert_relative_eq!(back.value(r), u.value(r), max_relative = 1e-12);
            assert_relative_eq!(back.jet(r).d(1), u.jet(r).d(1), max_relative = 1e-9, epsilon = 1e-14);
        }
        let p0 = Params::new(6, 0.0).unwrap();
        let u0 = extremal_u(&p0, 1.0).unwrap();
        let v0 = to_sobolev(&p0, &u0);
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(v0.value(r), u0.value(r));
        }
        let g = RadialGrid::for_params(&p0);
        let chk = norm_identity_check(&p0, &u0, &g).unwrap();
        assert!(chk.rel_err < 1e-13);
    }

    #[test]
    fn identities_for_extremal_and_gaussian() {
        for (n, al) in SETS {
            let p = Params::new(n, al).unwrap();
            let g = RadialGrid::for_params(&p);
            let u = extremal_u(&p, 1.0).unwrap();
            let gauss = JetFn(|r: Jet| (-(r * r)).exp());
            for f in [&u as &dyn RadialFunction, &gauss] {
                let a = norm_identity_check(&p, f, &g).unwrap();
                let b = star_identity_check(&p, f, &g).unwrap();
                assert!(a.rel_err < 1e-9, "({n},{al}) norm {a:?}");
                assert!(b.rel_err < 1e-9, "({n},{al}) star {b:?}");
            }
        }
    }
}
