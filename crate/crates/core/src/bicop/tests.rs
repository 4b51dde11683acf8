use super::*;
use crate::numerics::StudentT;

fn settings() -> Vec<BivCopula> {
    let mut v = vec![BivCopula::Product];
    for r in [-0.9, -0.4, 0.0, 0.3, 0.8] {
        v.push(BivCopula::normal(r).unwrap());
    }
    for (r, nu) in [(-0.7, 2.0), (0.0, 1.0), (0.3, 4.5), (0.6, 12.0), (0.9, 30.0)] {
        v.push(BivCopula::student_t(r, nu).unwrap());
    }
    for t in [0.1, 0.7, 2.0, 5.0, 15.0] {
        v.push(BivCopula::clayton(t).unwrap());
        v.push(BivCopula::rot_clayton(-t).unwrap());
    }
    for t in [1.0, 1.3, 2.0, 4.0, 10.0] {
        v.push(BivCopula::gumbel(t).unwrap());
        v.push(BivCopula::rot_gumbel(-t).unwrap());
    }
    v
}

fn grid(n: usize) -> Vec<f64> {
    (1..n).map(|k| k as f64 / n as f64).collect()
}

/// Gauss–Legendre nodes and weights on (0, 1) by Newton on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[test]
fn cdf_examples() {
    assert!((BivCopula::Product.cdf(0.3, 0.5) - 0.15).abs() < 1e-15);
    let n = BivCopula::normal(0.0).unwrap();
    for &(u, v) in &[(0.2, 0.7), (0.5, 0.5), (0.95, 0.01)] {
        assert!((n.cdf(u, v) - u * v).abs() < 1e-10);
    }
    let c = BivCopula::clayton(2.0).unwrap();
    assert!((c.cdf(0.5, 0.5) - 7f64.powf(-0.5)).abs() < 1e-12);
}

#[test]
fn frechet_bounds_and_grounding() {
    let g: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    for c in settings() {
        for &u in &g {
            assert!((c.cdf(u, 0.0)).abs() < 1e-15);
            assert!((c.cdf(u, 1.0) - u).abs() < 1e-15);
            assert!((c.cdf(0.0, u)).abs() < 1e-15);
            assert!((c.cdf(1.0, u) - u).abs() < 1e-15);
            for &v in &g {
                let x = c.cdf(u, v);
                assert!(x >= (u + v - 1.0).max(0.0) - 1e-14 && x <= u.min(v) + 1e-14, "{c:?} {u} {v} {x}");
            }
        }
    }
}

#[test]
fn rotations_match_base_families() {
    for t in [0.5, 3.0] {
        let base = BivCopula::clayton(t).unwrap();
        let rot = BivCopula::rot_clayton(-t).unwrap();
        let gb = BivCopula::gumbel(t + 1.0).unwrap();
        let gr = BivCopula::rot_gumbel(-t - 1.0).unwrap();
        for &u in &grid(10) {
            for &v in &grid(10) {
                assert!((rot.cdf(u, v) - (u - base.cdf(u, 1.0 - v))).abs() < 1e-14);
                assert!((gr.cdf(u, v) - (u - gb.cdf(u, 1.0 - v))).abs() < 1e-14);
                assert!((rot.pdf(u, v) - base.pdf(u, 1.0 - v)).abs() < 1e-12 * base.pdf(u, 1.0 - v).max(1.0));
            }
        }
    }
}

/// Closed-form Clayton and Gumbel expressions in plain powers, valid for
/// moderate arguments.
#[test]
fn archimedean_log_forms_match_direct_formulas() {
    for &t in &[0.3, 2.0, 6.0] {
        let c = BivCopula::clayton(t).unwrap();
        for &u in &grid(8) {
            for &v in &grid(8) {
                let s: f64 = u.powf(-t) + v.powf(-t) - 1.0;
                let cdf = s.powf(-1.0 / t);
                let h = v.powf(-t - 1.0) * s.powf(-1.0 - 1.0 / t);
                let pdf = (1.0 + t) * (u * v).powf(-t - 1.0) * s.powf(-1.0 / t - 2.0);
                assert!((c.cdf(u, v) - cdf).abs() < 1e-13);
                assert!((c.h(u, v) - h).abs() < 1e-12);
                assert!((c.pdf(u, v) - pdf).abs() < 1e-10 * pdf.max(1.0));
                let hi = ((u * v.powf(t + 1.0)).powf(-t / (t + 1.0)) + 1.0 - v.powf(-t)).powf(-1.0 / t);
                assert!((c.h_inv(u, v) - hi).abs() < 1e-12);
            }
        }
    }
    for &t in &[1.0, 1.7, 5.0] {
        let g = BivCopula::gumbel(t).unwrap();
        for &u in &grid(8) {
            for &v in &grid(8) {
                let (x, y) = (-u.ln(), -v.ln());
                let a: f64 = x.powf(t) + y.powf(t);
                let cdf = (-a.powf(1.0 / t)).exp();
                let pdf = cdf * (x * y).powf(t - 1.0) / (u * v) * a.powf(1.0 / t - 2.0) * (a.powf(1.0 / t) + t - 1.0);
                assert!((g.cdf(u, v) - cdf).abs() < 1e-13);
                assert!((g.pdf(u, v) - pdf).abs() < 1e-10 * pdf.max(1.0));
            }
        }
    }
}

fn mixed_difference(c: &BivCopula, u: f64, v: f64, d: f64) -> f64 {
    (c.cdf(u + d, v + d) - c.cdf(u + d, v - d) - c.cdf(u - d, v + d) + c.cdf(u - d, v - d)) / (4.0 * d * d)
}

#[test]
fn pdf_matches_mixed_second_difference() {
    let pts = [0.15, 0.35, 0.5, 0.7, 0.85];
    for c in settings() {
        for &u in &pts {
            for &v in &pts {
                // one Richardson step removes the O(d^2) term
                let fd = (4.0 * mixed_difference(&c, u, v, 1e-3) - mixed_difference(&c, u, v, 2e-3)) / 3.0;
                let p = c.pdf(u, v);
                assert!((fd - p).abs() < 1e-4 * p.max(1.0), "{c:?} ({u},{v}): {fd} vs {p}");
            }
        }
    }
    let n = BivCopula::normal(0.5).unwrap();
    assert!((mixed_difference(&n, 0.5, 0.5, 1e-3) - n.pdf(0.5, 0.5)).abs() < 1e-4);
}

/// Strong tail dependence concentrates mass in corners a single 64-point
/// rule cannot resolve.
fn corner_heavy(c: &BivCopula) -> bool {
    match c {
        BivCopula::Clayton { theta } | BivCopula::RotClayton { theta } => theta.abs() > 4.0,
        BivCopula::Gumbel { theta } | BivCopula::RotGumbel { theta } => theta.abs() > 3.0,
        BivCopula::Normal { rho } => rho.abs() > 0.85,
        BivCopula::StudentT(t) => t.rho().abs() > 0.85 || t.nu() < 1.5,
        _ => false,
    }
}

#[test]
fn pdf_integrates_to_one() {
    let gl = gauss_legendre(64);
    // panels graded toward both edges
    let cuts = [0.0, 1e-8, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 0.999, 0.9999, 1.0 - 1e-6, 1.0 - 1e-8, 1.0];
    let composite: Vec<(f64, f64)> = cuts
        .windows(2)
        .flat_map(|w| gl.iter().map(move |&(x, wt)| (w[0] + (w[1] - w[0]) * x, (w[1] - w[0]) * wt)))
        .collect();
    for c in settings() {
        let rule = if corner_heavy(&c) { &composite } else { &gl };
        let mut s = 0.0;
        for &(u, wu) in rule {
            for &(v, wv) in rule {
                s += wu * wv * c.pdf(u, v);
            }
        }
        assert!((s - 1.0).abs() < 1e-3, "{c:?}: {s}");
    }
}

#[test]
fn h_is_derivative_of_cdf() {
    let d = 1e-4;
    for c in settings() {
        for &x in &grid(10) {
            for &v in &[0.1, 0.3, 0.5, 0.77, 0.9] {
                let fd = (c.cdf(x, v + d) - c.cdf(x, v - d)) / (2.0 * d);
                assert!((fd - c.h(x, v)).abs() < 1e-5, "{c:?} ({x},{v}): {fd} vs {}", c.h(x, v));
                let fd1 = (c.cdf(v + d, x) - c.cdf(v - d, x)) / (2.0 * d);
                assert!((fd1 - c.h_given_first(v, x)).abs() < 1e-5, "{c:?} first ({v},{x})");
            }
        }
    }
}

#[test]
fn h_is_a_distribution_in_its_first_argument() {
    let g = grid(200);
    for c in settings() {
        for &v in &[0.01, 0.2, 0.5, 0.8, 0.99] {
            let mut prev = 0.0;
            for &x in &g {
                let h = c.h(x, v);
                assert!(h >= prev - 1e-15, "{c:?} v={v} x={x}");
                prev = h;
            }
            assert!(c.h(1e-12, v) < 1e-3 && c.h(1.0 - 1e-12, v) > 1.0 - 1e-3, "{c:?} v={v}");
        }
    }
}

#[test]
fn h_inverse_round_trips() {
    let mut g = grid(20);
    g.extend([1e-6, 1e-3, 0.999, 1.0 - 1e-6]);
    for c in settings() {
        for &u in &g {
            for &v in &g {
                let x = c.h_inv(u, v);
                assert!((c.h(x, v) - u).abs() < 1e-7, "{c:?} h(h_inv({u},{v}))");
                let w = c.h_given_first_inv(u, v);
                assert!((c.h_given_first(v, w) - u).abs() < 1e-7, "{c:?} first ({u},{v})");
            }
        }
        for &x in &grid(20) {
            for &v in &grid(20) {
                let h = c.h(x, v);
                if h > 1e-9 && h < 1.0 - 1e-9 {
                    assert!((c.h_inv(h, v) - x).abs() < 1e-7, "{c:?} h_inv(h({x},{v}))");
                }
            }
        }
    }
}

#[test]
fn closed_forms_for_simple_families() {
    let n = BivCopula::normal(0.0).unwrap();
    for &x in &grid(9) {
        for &v in &grid(9) {
            assert_eq!(BivCopula::Product.h(x, v), x);
            assert_eq!(BivCopula::Product.h_inv(x, v), x);
            assert!((n.h(x, v) - x).abs() < 1e-14);
        }
    }
    let n = BivCopula::normal(0.6).unwrap();
    for &u in &grid(9) {
        for &v in &grid(9) {
            let direct = std_normal_cdf(
                std_normal_quantile_unchecked(u) * (1.0f64 - 0.36).sqrt() + 0.6 * std_normal_quantile_unchecked(v),
            );
            assert!((n.h_inv(u, v) - direct).abs() < 1e-15);
            assert!((n.h(n.h_inv(u, v), v) - u).abs() < 1e-9);
        }
    }
    let gm = BivCopula::gumbel(2.0).unwrap();
    for &u in &grid(10) {
        for &v in &grid(10) {
            assert!((gm.h(gm.h_inv(u, v), v) - u).abs() < 1e-7);
        }
    }
}

/// `C(u, v) = int_0^v h(u, w) dw` by composite Simpson in a variable that
/// flattens the endpoint behaviour.
fn cdf_by_quadrature(c: &BivCopula, u: f64, v: f64) -> f64 {
    // w = v * s^3 clusters nodes near 0 where h varies fastest for small w
    let n = 20_000;
    let f = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let w = v * s * s * s;
        c.h(u, w) * 3.0 * v * s * s
    };
    let hstep = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * hstep);
    }
    acc * hstep / 3.0
}

#[test]
fn t_cdf_matches_integrated_h() {
    for &(rho, nu) in &[(0.5, 1.0), (-0.7, 1.7), (0.9, 4.0), (0.3, 10.0), (-0.2, 30.0)] {
        let c = BivCopula::student_t(rho, nu).unwrap();
        for &(u, v) in &[(0.3, 0.6), (0.05, 0.02), (0.9, 0.2), (0.999, 0.99), (0.5, 0.5)] {
            let want = cdf_by_quadrature(&c, u, v);
            let got = c.cdf(u, v);
            assert!((got - want).abs() < 1e-8, "rho {rho} nu {nu} ({u},{v}): {got} vs {want}");
        }
    }
}

#[test]
fn t_cdf_at_the_median_is_closed_form() {
    // elliptical copulas: C(1/2, 1/2) = 1/4 + asin(rho) / (2 pi)
    for &(rho, nu) in &[(0.5, 1.0), (-0.3, 3.0), (0.95, 25.0)] {
        let c = BivCopula::student_t(rho, nu).unwrap();
        let want = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        assert!((c.cdf(0.5, 0.5) - want).abs() < 1e-10);
    }
}

#[test]
fn fit_by_tau_examples() {
    let tau = |t: f64| TauEstimate::new(t).unwrap();
    match fit_by_tau(Family::Normal, tau(0.5)).unwrap() {
        BivCopula::Normal { rho } => assert!((rho - FRAC_PI_2.sin() * 0.0 - (0.25 * std::f64::consts::PI).sin()).abs() < 1e-12),
        c => panic!("{c:?}"),
    }
    assert_eq!(fit_by_tau(Family::Clayton, tau(0.5)).unwrap(), BivCopula::Clayton { theta: 2.0 });
    match fit_by_tau(Family::Gumbel, tau(0.0)).unwrap() {
        BivCopula::Gumbel { theta } => assert!((theta - 1.0).abs() < 1e-5),
        c => panic!("{c:?}"),
    }
    match fit_by_tau(Family::RotGumbel, tau(-0.5)).unwrap() {
        BivCopula::RotGumbel { theta } => assert!((theta + 2.0).abs() < 1e-12),
        c => panic!("{c:?}"),
    }
    match fit_by_tau(Family::RotClayton, tau(-0.5)).unwrap() {
        BivCopula::RotClayton { theta } => assert!((theta + 2.0).abs() < 1e-12),
        c => panic!("{c:?}"),
    }
    match fit_by_tau(Family::Normal, tau(1.0)).unwrap() {
        BivCopula::Normal { rho } => assert_eq!(rho, RHO_CLAMP),
        c => panic!("{c:?}"),
    }
    match fit_by_tau(Family::Clayton, tau(0.99)).unwrap() {
        BivCopula::Clayton { theta } => assert_eq!(theta, THETA_MAX),
        c => panic!("{c:?}"),
    }
    assert!(matches!(fit_by_tau(Family::Clayton, tau(-0.1)), Err(Error::IncompatibleTau { .. })));
    assert!(matches!(fit_by_tau(Family::RotGumbel, tau(0.1)), Err(Error::IncompatibleTau { .. })));
    for f in Family::ALL {
        if f != Family::Product {
            let c = fit_by_tau(f, tau(if f.admits_tau(0.4) { 0.4 } else { -0.4 })).unwrap();
            assert!((c.kendall_tau().abs() - 0.4).abs() < 1e-12, "{f}");
        }
    }
}

#[test]
fn constructors_validate_ranges() {
    assert!(BivCopula::normal(1.0).is_err());
    assert!(BivCopula::student_t(0.5, 0.5).is_err());
    assert!(BivCopula::student_t(0.5, 31.0).is_err());
    assert!(BivCopula::clayton(0.0).is_err());
    assert!(BivCopula::rot_clayton(0.5).is_err());
    assert!(BivCopula::gumbel(0.9).is_err());
    assert!(BivCopula::rot_gumbel(-0.5).is_err());
}

#[test]
fn profile_likelihood_matches_pointwise_density() {
    let sample = PseudoSample::from_pairs(&BivCopula::student_t(0.4, 5.0).unwrap().simulate(300, 3)).unwrap();
    for nu in [1.0, 3.3, 30.0] {
        let c = BivCopula::student_t(0.4, nu).unwrap();
        let direct: f64 = sample.pairs().map(|(u, v)| c.ln_pdf(u, v)).sum();
        let prof = t_profile_loglik(&sample, 0.4, nu).unwrap();
        assert!((direct - prof).abs() < 1e-8 * direct.abs().max(1.0), "{nu}: {direct} vs {prof}");
    }
}

#[test]
fn t_density_matches_direct_formula() {
    let (rho, nu) = (0.35, 3.5);
    let c = BivCopula::student_t(rho, nu).unwrap();
    let t = StudentT::new(nu).unwrap();
    for &(u, v) in &[(0.2, 0.9), (0.5, 0.5), (0.01, 0.03)] {
        let (x, y) = (t.quantile(u).unwrap(), t.quantile(v).unwrap());
        let r2: f64 = 1.0 - rho * rho;
        let f2 = ln_gamma((nu + 2.0) / 2.0) - ln_gamma(nu / 2.0) - (nu * std::f64::consts::PI).ln() - 0.5 * r2.ln()
            - (nu + 2.0) / 2.0 * (1.0 + (x * x - 2.0 * rho * x * y + y * y) / (nu * r2)).ln();
        let want = f2 - t.ln_pdf(x) - t.ln_pdf(y);
        assert!((c.ln_pdf(u, v) - want).abs() < 1e-10);
    }
}

use crate::numerics::ln_gamma;

#[test]
fn t_cvm_matches_pointwise_cdf() {
    for n in [11, 300, 301] {
        let sample = PseudoSample::from_pairs(&BivCopula::student_t(-0.5, 3.0).unwrap().simulate(n, 5)).unwrap();
        for nu in [1.0, 4.2, 30.0] {
            let c = BivCopula::student_t(-0.3, nu).unwrap();
            let direct = cvm_statistic_with(&sample, |u, v| c.cdf(u, v));
            let tabled = cvm_statistic(&sample, &c).statistic;
            assert!((direct - tabled).abs() < 1e-12 * direct.max(1.0), "{n} {nu}: {direct} vs {tabled}");
        }
    }
}
