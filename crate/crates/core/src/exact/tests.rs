use super::*;
use crate::quad::GaussLegendre;
use num_rational::BigRational;

/// Term-by-term alternating sum, written independently of the library path.
fn roman_oracle(n: u64, k: u32) -> BigRational {
    let mut acc = BigRational::from_integer(0.into());
    for j in 1..=n {
        let mut c = BigInt::from(1);
        for i in 0..j {
            c = c * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        let t = BigRational::new(c, BigInt::from(j).pow(k));
        if j % 2 == 1 {
            acc += t;
        } else {
            acc -= t;
        }
    }
    acc
}

fn rat(n: i64, d: i64) -> ExactRational {
    ExactRational::new(n, d)
}

const GRID_A: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

#[test]
fn roman_examples() {
    assert_eq!(roman_harmonic(5, 0).unwrap(), ExactRational::one());
    assert_eq!(roman_harmonic(3, 1).unwrap(), rat(11, 6));
    let oracle = roman_oracle(4, 2);
    assert_eq!(roman_harmonic(4, 2).unwrap().as_big_rational(), &oracle);
    assert_eq!(oracle, BigRational::new(415.into(), 144.into()));
    assert!(roman_harmonic(0, 1).is_err());
}

#[test]
fn roman_recurrence_matches_definition() {
    for n in 1..=25usize {
        for k in 0..=6u32 {
            let direct = roman_harmonic_direct(n, k);
            assert_eq!(direct, roman_harmonic_recurrence(n, k), "n={n} k={k}");
            assert_eq!(direct.as_big_rational(), &roman_oracle(n as u64, k));
        }
    }
}

#[test]
fn roman_large_n_uses_recurrence_and_agrees() {
    for n in [31usize, 40, 60] {
        assert_eq!(roman_harmonic(n, 3).unwrap(), roman_harmonic_direct(n, 3));
    }
    // k = 1 gives the ordinary harmonic number.
    let h100: ExactRational = (1..=100).fold(ExactRational::zero(), |acc, j| acc + rat(1, j));
    assert_eq!(roman_harmonic(100, 1).unwrap(), h100);
}

#[test]
fn p_star_examples() {
    for d in 1..=6 {
        assert_eq!(p_star_exact(1, d).unwrap(), ExactRational::one());
        assert_eq!(p_star(1, d).unwrap(), 1.0);
    }
    assert_eq!(p_star_exact(2, 3).unwrap(), rat(7, 8));
    assert_eq!(p_star(2, 3).unwrap(), 0.875);
    // (1/3) * H_3 = 11/18, via the rational oracle.
    let oracle = roman_oracle(3, 1) / BigRational::from_integer(3.into());
    assert_eq!(p_star_exact(3, 2).unwrap().as_big_rational(), &oracle);
    assert_eq!(oracle, BigRational::new(11.into(), 18.into()));
    for n in 1..=40 {
        assert_eq!(p_star_exact(n, 1).unwrap(), rat(1, n as i64));
    }
    assert!(p_star(0, 2).is_err());
    assert!(p_star(2, 0).is_err());
}

#[test]
fn p_star_float_matches_exact() {
    for n in (1..=200).step_by(7).chain([200]) {
        for d in 1..=6 {
            let exact = p_star_exact(n, d).unwrap().to_f64();
            let float = p_star(n, d).unwrap();
            assert!(((float - exact) / exact).abs() <= 1e-12, "n={n} d={d}: {float} vs {exact}");
        }
    }
}

#[test]
fn p_star_monotone_in_n_and_d() {
    for d in 1..=8 {
        for n in 1..50 {
            let (a, b) = (p_star_exact(n, d).unwrap(), p_star_exact(n + 1, d).unwrap());
            assert!(b < a, "not decreasing in n at n={n} d={d}");
        }
    }
    for n in 2..=50 {
        for d in 1..8 {
            assert!(p_star_exact(n, d + 1).unwrap() > p_star_exact(n, d).unwrap(), "n={n} d={d}");
        }
    }
}

#[test]
fn beta_moment_examples() {
    assert_eq!(beta_power_moment(2.5, 3.0, 0.0).unwrap(), 1.0);
    // Oracle: Gauss-Legendre on the polynomial integrands (exact for these degrees).
    let g = GaussLegendre::new(16);
    let m1 = g.integrate(0.0, 1.0, |z| z * 2.0 * (1.0 - z));
    let m2 = g.integrate(0.0, 1.0, |z| z * z * 2.0 * (1.0 - z));
    assert!((m1 - 1.0 / 3.0).abs() < 1e-15 && (m2 - 1.0 / 6.0).abs() < 1e-15);
    assert!((beta_power_moment(1.0, 2.0, 1.0).unwrap() - m1).abs() < 1e-15);
    assert!((beta_power_moment(1.0, 2.0, 2.0).unwrap() - m2).abs() < 1e-15);
}

#[test]
fn beta_moment_non_integer_d() {
    // Oracle: quadrature of z^s against the Beta(a, d) density, split at 1/2,
    // with u = z^a on the left and v = (1 - z)^d on the right so that neither
    // endpoint singularity is seen by the rule.
    let g = GaussLegendre::new(200);
    for (a, d, s) in [(0.5, 2.5, 1.3), (3.0, 1.5, 0.7), (1.2, 3.7, 4.0), (0.3, 0.4, 2.0)] {
        let norm = (-ln_beta(a, d)).exp();
        let left = g.integrate_composite(0.0, 0.5f64.powf(a), 8, |u: f64| {
            let z = u.powf(1.0 / a);
            z.powf(s) * (1.0 - z).powf(d - 1.0) / a
        });
        let right = g.integrate_composite(0.0, 0.5f64.powf(d), 8, |v: f64| {
            let z = 1.0 - v.powf(1.0 / d);
            z.powf(s + a - 1.0) / d
        });
        let oracle = norm * (left + right);
        let m = beta_power_moment(a, d, s).unwrap();
        assert!((m - oracle).abs() < 1e-8, "a={a} d={d} s={s}: {m} vs {oracle}");
    }
}

#[test]
fn beta_moment_monotone_and_validated() {
    let mut prev = 1.0;
    for i in 1..100 {
        let m = beta_power_moment(0.7, 3.0, i as f64 * 0.25).unwrap();
        assert!(m <= prev && m > 0.0);
        prev = m;
    }
    assert!(beta_power_moment(0.0, 2.0, 1.0).is_err());
    assert!(beta_power_moment(1.0, -2.0, 1.0).is_err());
    assert!(beta_power_moment(1.0, 2.0, -1.0).is_err());
}

#[test]
fn p_dir_pa_small_examples() {
    // Oracles: 1 - E[Z^2] and 1 - E[Z] for Z ~ Beta(1, 2) by direct integration.
    let g = GaussLegendre::new(16);
    let dir_oracle = g.integrate(0.0, 1.0, |z| (1.0 - z * z) * 2.0 * (1.0 - z));
    let pa_oracle = g.integrate(0.0, 1.0, |z| (1.0 - z) * 2.0 * (1.0 - z));
    assert!((dir_oracle - 5.0 / 6.0).abs() < 1e-15);
    assert!((pa_oracle - 2.0 / 3.0).abs() < 1e-15);
    let quad = EvalMethod::GaussQuadrature { nodes: 128 };
    for m in [EvalMethod::AlternatingSumExact, EvalMethod::AlternatingSumFloat, quad] {
        assert!((p_dir(2, 2, 1.0, m).unwrap() - dir_oracle).abs() < 1e-12, "{m:?}");
        assert!((p_pa(2, 2, 1.0, m).unwrap() - pa_oracle).abs() < 1e-12, "{m:?}");
    }
    assert_eq!(alternating_exact(Family::Dir, 2, 2, 1.0).unwrap(), rat(5, 6));
    assert_eq!(alternating_exact(Family::Pa, 2, 2, 1.0).unwrap(), rat(2, 3));
}

#[test]
fn p_dir_pa_limits() {
    let star = p_star(5, 2).unwrap();
    let dir_big = p_family_auto(Family::Dir, 5, 2, 1000.0).unwrap();
    assert!((dir_big - star).abs() < 1e-3, "{dir_big} vs {star}");
    let pa_small = p_family_auto(Family::Pa, 4, 3, 1e-3).unwrap();
    assert!((pa_small - 0.25).abs() < 2e-2, "{pa_small}");
}

#[test]
fn argument_validation() {
    let m = EvalMethod::AlternatingSumFloat;
    assert!(p_dir(0, 2, 1.0, m).is_err());
    assert!(p_dir(3, 1, 1.0, m).is_err());
    assert!(p_pa(3, 2, 0.0, m).is_err());
    assert!(p_pa(3, 2, 1.0, EvalMethod::GaussQuadrature { nodes: 7 }).is_err());
    assert_eq!(p_pa(1, 2, 1.0, m).unwrap(), 1.0);
}

#[test]
fn monotone_in_a_and_sandwiched() {
    for n in 2..=10 {
        for d in 2..=4 {
            let star = p_star(n, d).unwrap();
            let dir: Vec<f64> = GRID_A.iter().map(|&a| p_family_auto(Family::Dir, n, d, a).unwrap()).collect();
            let pa: Vec<f64> = GRID_A.iter().map(|&a| p_family_auto(Family::Pa, n, d, a).unwrap()).collect();
            for w in dir.windows(2) {
                assert!(w[1] < w[0], "p_dir not decreasing n={n} d={d}: {dir:?}");
            }
            for w in pa.windows(2) {
                assert!(w[1] > w[0], "p_pa not increasing n={n} d={d}: {pa:?}");
            }
            for (&pd, &pp) in dir.iter().zip(&pa) {
                assert!(1.0 / n as f64 <= pp && pp <= star && star <= pd && pd <= 1.0);
            }
        }
    }
}

#[test]
fn methods_agree() {
    let quad = EvalMethod::GaussQuadrature { nodes: DEFAULT_QUADRATURE_NODES };
    for family in [Family::Dir, Family::Pa] {
        for n in [2usize, 3, 5, 10, 20, 30, 40, 50] {
            for d in 2..=4 {
                for &a in GRID_A.iter().chain(&[1e-3, 200.0, 1000.0]) {
                    let exact = p_family(family, n, d, a, EvalMethod::AlternatingSumExact).unwrap();
                    let q = p_family(family, n, d, a, quad).unwrap();
                    assert!((q - exact).abs() < 1e-9, "{family:?} n={n} d={d} a={a}: quad {q} exact {exact}");
                    let auto = p_family_auto(family, n, d, a).unwrap();
                    assert!((auto - exact).abs() < 1e-9, "{family:?} n={n} d={d} a={a}: auto {auto}");
                    match p_family(family, n, d, a, EvalMethod::AlternatingSumFloat) {
                        Ok(f) => assert!(
                            (f - exact).abs() < 1e-9,
                            "{family:?} n={n} d={d} a={a}: float {f} exact {exact}"
                        ),
                        // Rejection is allowed; silent inaccuracy is not.
                        Err(Error::PrecisionLoss { ratio }) => assert!(ratio > PRECISION_LOSS_RATIO),
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn precision_loss_is_reported() {
    match p_family(Family::Pa, 200, 2, 50.0, EvalMethod::AlternatingSumFloat) {
        Err(Error::PrecisionLoss { ratio }) => assert!(ratio > PRECISION_LOSS_RATIO),
        other => panic!("expected precision loss, got {other:?}"),
    }
    // The default path falls back to quadrature.
    let v = p_family_auto(Family::Pa, 200, 2, 50.0).unwrap();
    assert!(v > 0.0 && v < p_star(200, 2).unwrap());
}

#[test]
fn survival_examples() {
    let md = DistributionSpec::marginal_dirichlet(2, 1.0);
    assert!((survival(&md, &[0.25, 0.25]).unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(survival(&md, &[0.6, 0.5]).unwrap(), 0.0);
    let pa = DistributionSpec::pa_scale_mixture(2, 2.0);
    assert!((survival(&pa, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
    let iid = DistributionSpec::iid_exponential(3);
    assert!((survival(&iid, &[0.5, 1.0, 0.5]).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    let co = DistributionSpec::comonotone(3);
    assert!((survival(&co, &[0.5, 2.0, 0.1]).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    for spec in [md, pa, iid, co] {
        let zero = vec![0.0; spec.dimension()];
        assert_eq!(survival(&spec, &zero).unwrap(), 1.0);
    }
    let dirichlet = DistributionSpec::dirichlet(vec![1.0, 1.0]);
    assert!(matches!(survival(&dirichlet, &[0.1, 0.1]), Err(Error::Unsupported(_))));
    assert!(matches!(
        survival(&DistributionSpec::iid_exponential(2), &[0.1]),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn density_examples() {
    // c = (d + a - 1) B(a, d) = 2 * 1/2 = 1, and (0.25^{-1/2} - 1) = 1.
    let g = density_w(Family::Dir, 1.0, 2, 0.25).unwrap();
    assert!((g - 1.0).abs() < 1e-14, "{g}");
    let near_one = density_w(Family::Pa, 1.0, 2, 1.0 - 1e-12).unwrap();
    assert!(near_one < 1e-10);
    assert!(density_w(Family::Pa, 1.0, 2, 0.0).is_err());
    assert!(density_w(Family::Pa, 1.0, 2, 1.0).is_err());
}

#[test]
fn density_matches_finite_difference_of_cdf() {
    // Oracle: P(Z^s <= w) = I_{w^{1/s}}(a, d), differentiated numerically.
    use statrs::function::beta::beta_reg;
    for family in [Family::Dir, Family::Pa] {
        for (a, d) in [(0.5, 2usize), (1.0, 3), (4.0, 2)] {
            let s = family.exponent(a, d);
            let cdf = |w: f64| beta_reg(a, d as f64, w.powf(1.0 / s));
            for w in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let h = 1e-5;
                let fd = (cdf(w + h) - cdf(w - h)) / (2.0 * h);
                let g = density_w(family, a, d, w).unwrap();
                assert!(((g - fd) / g).abs() < 1e-6, "{family:?} a={a} d={d} w={w}: {g} vs {fd}");
            }
        }
    }
}

#[test]
fn density_normalized() {
    // Substituting w = exp(-exp(x)) removes both endpoint singularities.
    let rule = GaussLegendre::new(64);
    for family in [Family::Dir, Family::Pa] {
        for &a in &[0.1, 0.5, 1.0, 5.0, 50.0] {
            for d in 2..=4 {
                let total = rule.integrate_composite(-45.0, 8.0, 40, |x: f64| {
                    let t = x.exp();
                    let w = (-t).exp();
                    if w <= 0.0 || w >= 1.0 {
                        return 0.0;
                    }
                    density_w(family, a, d, w).unwrap() * w * t
                });
                assert!((total - 1.0).abs() < 1e-8, "{family:?} a={a} d={d}: {total}");
            }
        }
    }
}

#[test]
fn p_infinity_examples() {
    let md = DistributionSpec::marginal_dirichlet(3, 2.0);
    let dir = DistributionSpec::dirichlet(vec![1.0, 1.0, 1.0]);
    for q in [0.0, 0.3, 1.0] {
        let spec = DistributionSpec::mixture(q, md.clone(), dir.clone());
        assert_eq!(p_infinity(&spec).unwrap(), q);
        let flipped = DistributionSpec::mixture(1.0 - q, dir.clone(), md.clone());
        assert!((p_infinity(&flipped).unwrap() - q).abs() < 1e-15);
    }
    assert!(matches!(p_infinity(&md), Err(Error::Unsupported(_))));
}
