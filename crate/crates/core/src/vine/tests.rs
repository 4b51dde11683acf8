use super::*;
use crate::margins::NormalMargin;

fn std_margins(n: usize) -> Vec<Margin> {
    (0..n).map(|_| Margin::Normal(NormalMargin::new(0.0, 1.0).unwrap())).collect()
}

fn normal(r: f64) -> BivCopula {
    BivCopula::normal(r).unwrap()
}

fn model(kind: VineKind, trees: Vec<Vec<BivCopula>>) -> VineModel {
    let n = trees.len() + 1;
    VineModel {
        structure: VineStructure { kind, order: (0..n).collect() },
        trees,
        truncation_level: n - 1,
        margins: std_margins(n),
    }
}

/// Multivariate normal log density with correlation `r`.
fn mvn_ln_pdf(r: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let l = nalgebra::Cholesky::new(r.clone()).unwrap();
    let xv = nalgebra::DVector::from_column_slice(x);
    let z = l.solve(&xv);
    let quad = xv.dot(&z);
    let ln_det = 2.0 * (0..n).map(|i| l.l()[(i, i)].ln()).sum::<f64>();
    -0.5 * quad - 0.5 * ln_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn corr3(r01: f64, r02: f64, r12: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, r01, r02, r01, 1.0, r12, r02, r12, 1.0])
}

fn points(k: usize) -> Vec<[f64; 3]> {
    let mut rng = seed::rng(99);
    (0..k).map(|_| [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)]).collect()
}

#[test]
fn c_vine_density_is_trivariate_normal() {
    let (r01, r02, p12): (f64, f64, f64) = (0.6, -0.4, 0.3);
    let r12 = p12 * ((1.0 - r01 * r01) * (1.0 - r02 * r02)).sqrt() + r01 * r02;
    let m = model(VineKind::C, vec![vec![normal(r01), normal(r02)], vec![normal(p12)]]);
    let r = corr3(r01, r02, r12);
    for x in points(100) {
        let got = m.log_density(&x).unwrap().exp();
        let want = mvn_ln_pdf(&r, &x).exp();
        assert!((got - want).abs() < 1e-6, "{x:?}: {got} vs {want}");
    }
}

#[test]
fn d_vine_density_is_trivariate_normal() {
    let (r01, r12, p02): (f64, f64, f64) = (0.5, 0.7, -0.2);
    let r02 = p02 * ((1.0 - r01 * r01) * (1.0 - r12 * r12)).sqrt() + r01 * r12;
    let m = model(VineKind::D, vec![vec![normal(r01), normal(r12)], vec![normal(p02)]]);
    let r = corr3(r01, r02, r12);
    for x in points(100) {
        let got = m.log_density(&x).unwrap().exp();
        let want = mvn_ln_pdf(&r, &x).exp();
        assert!((got - want).abs() < 1e-6, "{x:?}: {got} vs {want}");
    }
}

#[test]
fn product_vine_density_is_sum_of_margins() {
    let m = model(VineKind::D, vec![vec![BivCopula::Product; 3], vec![BivCopula::Product; 2], vec![BivCopula::Product]]);
    let x = [0.3, -1.2, 2.0, 0.0];
    let want: f64 = x.iter().map(|&v| -0.5 * v * v - 0.5 * (2.0 * std::f64::consts::PI).ln()).sum();
    assert!((m.log_density(&x).unwrap() - want).abs() < 1e-12);
}

#[test]
fn density_integrates_to_one() {
    let m = model(
        VineKind::C,
        vec![vec![BivCopula::clayton(1.5).unwrap(), BivCopula::gumbel(1.8).unwrap()], vec![normal(0.3)]],
    );
    // trapezoid on [-7, 7]^3
    let k = 57;
    let h = 14.0 / (k - 1) as f64;
    let mut s = 0.0;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let x = [-7.0 + a as f64 * h, -7.0 + b as f64 * h, -7.0 + c as f64 * h];
                s += m.log_density(&x).unwrap().exp();
            }
        }
    }
    s *= h * h * h;
    assert!((s - 1.0).abs() < 1e-2, "{s}");
}

#[test]
fn product_vine_sampling_is_identity_on_uniforms() {
    for kind in [VineKind::C, VineKind::D] {
        let m = model(kind, vec![vec![BivCopula::Product; 2], vec![BivCopula::Product]]);
        let w = [0.1, 0.7, 0.42];
        assert_eq!(m.invert(&w), w.to_vec());
    }
}

#[test]
fn invert_is_the_inverse_of_the_rosenblatt_transform() {
    // forward: F(x_k | x_0..x_{k-1}) computed from the density cascade
    for kind in [VineKind::C, VineKind::D] {
        let m = model(
            kind,
            vec![
                vec![BivCopula::clayton(2.0).unwrap(), BivCopula::rot_gumbel(-1.5).unwrap(), normal(0.4)],
                vec![BivCopula::student_t(0.3, 5.0).unwrap(), BivCopula::gumbel(1.4).unwrap()],
                vec![BivCopula::rot_clayton(-0.8).unwrap()],
            ],
        );
        let w = [0.2, 0.9, 0.35, 0.6];
        let x = m.invert(&w);
        // check x_1 given x_0 through the first-tree copula directly
        let c01 = &m.trees[0][0];
        let f1 = match kind {
            VineKind::C => c01.h(x[1], x[0]),
            VineKind::D => c01.h_given_first(x[0], x[1]),
        };
        assert!((f1 - w[1]).abs() < 1e-9);
        assert!((x[0] - w[0]).abs() < 1e-15);
        // last variable: numerical conditional CDF from the density
        let cond = |t: f64| {
            let mut y = x.clone();
            y[3] = t;
            let z: Vec<f64> = y.iter().map(|&p| crate::numerics::std_normal_quantile_unchecked(p)).collect();
            let dens = m.log_density(&z).unwrap().exp();
            // back to the copula scale
            dens / z.iter().map(|&v| crate::numerics::std_normal_pdf(v)).product::<f64>()
        };
        let n = 4000;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| cond(clamp_prob(t.max(1e-9).min(1.0 - 1e-9)))).collect();
        let total: f64 = vals.windows(2).map(|p| 0.5 * (p[0] + p[1]) / n as f64).sum();
        let upto: f64 = grid
            .windows(2)
            .zip(vals.windows(2))
            .filter(|(g, _)| g[1] <= x[3])
            .map(|(_, p)| 0.5 * (p[0] + p[1]) / n as f64)
            .sum();
        assert!((upto / total - w[3]).abs() < 2e-3, "{kind:?}: {} vs {}", upto / total, w[3]);
    }
}

#[test]
fn criterion_examples() {
    let m = model(VineKind::C, vec![vec![normal(0.5)]]);
    let data = DMatrix::from_fn(100, 2, |i, j| ((i * 37 + j * 11) % 100) as f64 / 10.0 - 5.0);
    let aic = information_criterion(&m, &data, Criterion::Aic, 1).unwrap();
    let bic = information_criterion(&m, &data, Criterion::Bic, 1).unwrap();
    assert!((bic - aic - (100f64.ln() - 2.0)).abs() < 1e-9);

    let p = model(VineKind::D, vec![vec![BivCopula::Product; 2], vec![BivCopula::Product]]);
    let d3 = DMatrix::from_fn(50, 3, |i, j| (i as f64 * (j + 1) as f64).sin());
    assert_eq!(information_criterion(&p, &d3, Criterion::Aic, 1).unwrap(), 0.0);

    let q = model(VineKind::D, vec![vec![normal(0.3), normal(-0.2)], vec![BivCopula::Product]]);
    for mode in [Criterion::Aic, Criterion::Bic] {
        assert_eq!(
            information_criterion(&q, &d3, mode, 1).unwrap(),
            information_criterion(&q, &d3, mode, 2).unwrap()
        );
    }
    assert!(information_criterion(&q, &d3, Criterion::Aic, 3).is_err());
}

#[test]
fn select_structure_examples() {
    // columns built so the pairwise |tau| ordering is (0,1) > (0,2) > (1,2)
    let n = 60;
    let base: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let c1: Vec<f64> = (0..n).map(|i| i as f64 + if i % 10 == 0 { 30.0 } else { 0.0 }).collect();
    let c2: Vec<f64> = (0..n).map(|i| i as f64 + ((i * 7) % 13) as f64 * 3.0).collect();
    let data = DMatrix::from_fn(n, 3, |i, j| [base[i], c1[i], c2[i]][j]);
    let s = select_structure(VineKind::C, &data, StructureMode::Greedy).unwrap();
    assert_eq!(s.order[0], 0);
    let r = select_structure(VineKind::D, &data, StructureMode::Random(7)).unwrap();
    assert_eq!(r, select_structure(VineKind::D, &data, StructureMode::Random(7)).unwrap());
}

#[test]
fn fixed_truncation_is_validated() {
    let data = DMatrix::from_fn(30, 3, |i, j| ((i * (j + 3)) % 17) as f64);
    let cfg = |k| FitConfig { truncation: Truncation::Fixed(k), ..FitConfig::default() };
    assert!(fit(&data, VineKind::C, &cfg(0), 1).is_err());
    assert!(fit(&data, VineKind::C, &cfg(3), 1).is_err());
    assert!(fit(&data, VineKind::C, &cfg(2), 1).is_ok());
}
