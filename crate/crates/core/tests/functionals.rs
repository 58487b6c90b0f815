use approx::assert_relative_eq;
use ckn_core::jet::Jet;
use ckn_core::params::{best_constant_radial, Params};
use ckn_core::profiles::{dilation_tangent, extremal_u};
use ckn_core::radial::{
    energy_j, inner_alpha, rayleigh_quotient, weighted_h, weighted_hessian_norm_sq, weighted_star_power, Combination,
    GridSpec, JetFn, RadialFunction, RadialGrid,
};
use rand::{Rng, SeedableRng};

const SETS: [(usize, f64); 5] = [(5, 1.0), (5, 0.5), (6, -1.0), (3, 1.5), (7, -2.0)];

// ||U||^2 = ||U||_*^{p*} = S^{p*/(p*-2)}, 40-digit values
const NORMS: [f64; 5] = [2707.091492870224, 783.2860297637935, 713.2674148956982, 1.539059796194237, 1183.822637298697];

#[test]
fn extremal_norms_match_frozen_values() {
    for ((n, al), norm) in SETS.into_iter().zip(NORMS) {
        let p = Params::new(n, al).unwrap();
        let g = RadialGrid::for_params(&p);
        let s = best_constant_radial(&p);
        assert_relative_eq!(s.powf(p.pstar / (p.pstar - 2.0)), norm, max_relative = 1e-12);
        for lambda in [1.0, 0.5, 4.0] {
            let u = extremal_u(&p, lambda).unwrap();
            let h = weighted_hessian_norm_sq(&p, &u, &g).unwrap();
            let st = weighted_star_power(&p, &u, &g).unwrap();
            assert_relative_eq!(h.value, norm, max_relative = 1e-10);
            assert_relative_eq!(st.value, norm, max_relative = 1e-10);
            assert_relative_eq!(rayleigh_quotient(&p, &u, &g).unwrap(), s, max_relative = 1e-10);
        }
    }
}

#[test]
fn quadrature_converges_under_doubling() {
    for (n, al) in SETS {
        let p = Params::new(n, al).unwrap();
        let spec = GridSpec::for_params(&p);
        let g1 = RadialGrid::new(spec).unwrap();
        let g2 = RadialGrid::new(spec.with_nodes(2 * spec.n)).unwrap();
        let u = extremal_u(&p, 1.0).unwrap();
        let a = weighted_hessian_norm_sq(&p, &u, &g1).unwrap().value;
        let b = weighted_hessian_norm_sq(&p, &u, &g2).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a, "({n},{al}) {a} {b}");
    }
}

#[test]
fn homogeneity_and_invariance() {
    let p = Params::new(6, -1.0).unwrap();
    let g = RadialGrid::for_params(&p);
    let u = extremal_u(&p, 1.0).unwrap();
    let base = weighted_hessian_norm_sq(&p, &u, &g).unwrap().value;
    let u3 = u.scaled(3.0);
    assert_relative_eq!(weighted_hessian_norm_sq(&p, &u3, &g).unwrap().value, 9.0 * base, max_relative = 1e-13);
    let st = weighted_star_power(&p, &u, &g).unwrap().value;
    assert_relative_eq!(weighted_star_power(&p, &u3, &g).unwrap().value, 3f64.powf(p.pstar) * st, max_relative = 1e-12);
    let gauss = JetFn(|r: Jet| (-(r * r)).exp());
    let q = rayleigh_quotient(&p, &gauss, &g).unwrap();
    assert!(q > best_constant_radial(&p));
    let scaled = JetFn(|r: Jet| (-(r * r * 4.0)).exp().scale(2f64.powf(0.5 * p.a()) * 5.0));
    assert_relative_eq!(rayleigh_quotient(&p, &scaled, &g).unwrap(), q, max_relative = 1e-9);
}

#[test]
fn tangent_orthogonal_to_extremal() {
    for (n, al) in SETS {
        let p = Params::new(n, al).unwrap();
        let g = RadialGrid::for_params(&p);
        for lambda in [0.5, 1.0, 2.0] {
            let u = extremal_u(&p, lambda).unwrap();
            let t = dilation_tangent(&p, lambda).unwrap();
            let ip = inner_alpha(&p, &u, &t, &g).unwrap().value;
            let nu = weighted_hessian_norm_sq(&p, &u, &g).unwrap().value;
            let nt = weighted_hessian_norm_sq(&p, &t, &g).unwrap().value;
            assert!(ip.abs() < 1e-8 * nu, "({n},{al}) lambda={lambda} ip={ip}");
            assert!(ip.abs() < 1e-10 * (nu * nt).sqrt());
        }
    }
}

#[test]
fn inner_product_against_independent_quadrature() {
    // <U_1, U_2> through the exact Sobolev-side Laplacian vs plain jets on an algebraic map
    let p = Params::new(5, 0.5).unwrap();
    let g = RadialGrid::for_params(&p);
    let u = extremal_u(&p, 1.0).unwrap();
    let z = extremal_u(&p, 2.0).unwrap();
    let a = inner_alpha(&p, &u, &z, &g).unwrap().value;
    let alg = RadialGrid::new(GridSpec { r_min: 0.05, r_max: 20.0, n: 4000, map: ckn_core::radial::MapKind::AlgebraicMap }).unwrap();
    let nf = p.nf();
    let b = p.omega()
        * alg
            .integrate(|r| {
                let lu = u.jet(r).radial_laplacian(r, nf, 0.0).value();
                let lz = z.jet(r).radial_laplacian(r, nf, 0.0).value();
                r.powf(p.alpha + nf - 1.0) * lu * lz
            })
            .unwrap()
            .value;
    assert_relative_eq!(a, b, max_relative = 1e-6);
}

#[test]
fn random_profiles_respect_the_inequality() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for (n, al) in SETS {
        let p = Params::new(n, al).unwrap();
        let g = RadialGrid::for_params(&p);
        let s = best_constant_radial(&p);
        for _ in 0..50 {
            let beta: f64 = rng.gen_range(0.3..3.0);
            let coef: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = JetFn(move |r: Jet| {
                if beta * r.value() * r.value() > 700.0 {
                    return Jet::constant(0.0);
                }
                let r2 = r * r;
                let mut poly = Jet::constant(1.0);
                let mut pw = Jet::constant(1.0);
                for c in &coef {
                    pw = pw * r2;
                    poly = poly + pw.scale(*c);
                }
                poly * (r2 * -beta).exp()
            });
            let q = rayleigh_quotient(&p, &f, &g).unwrap();
            assert!(q >= s - 1e-8, "({n},{al}) q={q} S={s}");
        }
    }
}

#[test]
fn cauchy_schwarz_on_random_pairs() {
    let p = Params::new(5, 1.0).unwrap();
    let g = RadialGrid::for_params(&p);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (b1, b2): (f64, f64) = (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0));
        let (c1, c2): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let f1 = JetFn(move |r: Jet| (r * r * -b1).exp() * (r * r * c1 + 1.0));
        let f2 = JetFn(move |r: Jet| (r * r * -b2).exp() * (r * c2 + 1.0));
        let ip = inner_alpha(&p, &f1, &f2, &g).unwrap().value;
        let n1 = weighted_hessian_norm_sq(&p, &f1, &g).unwrap().value;
        let n2 = weighted_hessian_norm_sq(&p, &f2, &g).unwrap().value;
        assert!(ip * ip <= n1 * n2 * (1.0 + 1e-12));
    }
}

#[test]
fn energies() {
    let p = Params::new(5, 1.0).unwrap();
    let g = RadialGrid::for_params(&p);
    let u = extremal_u(&p, 1.0).unwrap();
    let norm = best_constant_radial(&p).powf(p.pstar / (p.pstar - 2.0));
    let h = |r: f64| (-r).exp() * r * r / (1.0 + r * r);
    let zero = |_: f64| 0.0;
    let j0 = energy_j(&p, 0.0, &h, &u, &g).unwrap();
    assert_relative_eq!(j0, (0.5 - 1.0 / p.pstar) * norm, max_relative = 1e-10);
    assert_eq!(energy_j(&p, 0.3, &zero, &u, &g).unwrap(), j0);
    let neg = u.scaled(-1.0);
    assert_eq!(weighted_h(&p, &h, &neg, &g).unwrap(), 0.0);
    let hval = weighted_h(&p, &h, &u, &g).unwrap();
    assert_relative_eq!(energy_j(&p, 1e-2, &h, &u, &g).unwrap(), j0 - 1e-2 * hval, max_relative = 1e-12);
    let both = Combination::new(vec![(1.0, &u as &dyn RadialFunction), (-1.0, &u)]);
    assert!(matches!(rayleigh_quotient(&p, &both, &g), Err(ckn_core::CknError::ZeroFunction)));
}
