//! Special functions and exponential-family helpers against values computed
//! in 60-digit arithmetic by `oracles/special_values.py`.

use proptest::prelude::*;
use svi_core::expfam::{
    beta_expect_logs, digamma, dirichlet_expect_log, dirichlet_log_normalizer, ln_gamma, normalize_exp, trigamma,
    BetaParams, DirichletParams, LogWeights,
};

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got:e}, want {want:e} (tolerance {tol:e})");
}

fn close_rel(got: f64, want: f64, rel: f64) {
    assert!(
        (got - want).abs() <= rel * want.abs(),
        "got {got:e}, want {want:e} (relative tolerance {rel:e})"
    );
}

#[test]
fn digamma_reference_values() {
    close(digamma(1.0).unwrap(), -0.577_215_664_901_532_860_6, 1e-14);
    close(digamma(0.5).unwrap(), -1.963_510_026_021_423_479, 1e-14);
    close(digamma(3.7).unwrap(), 1.167_153_539_361_511_386, 1e-14);
    close(digamma(250.125).unwrap(), 5.519_960_460_405_277_078, 1e-13);
    // a value near -1e6 has an ulp of about 1e-10, so only relative accuracy is meaningful
    close_rel(digamma(1e-6).unwrap(), -1_000_000.577_214_019_969, 1e-15);
}

#[test]
fn digamma_recurrence_holds_to_rounding() {
    close(digamma(2.0).unwrap() - digamma(1.0).unwrap(), 1.0, 1e-14);
}

#[test]
fn trigamma_and_log_gamma_reference_values() {
    close(trigamma(1.0).unwrap(), 1.644_934_066_848_226_436, 1e-14);
    close(trigamma(2.0).unwrap(), 0.644_934_066_848_226_436_5, 1e-14);
    close(trigamma(0.3).unwrap(), 12.245_364_546_107_730_465_5, 1e-12);
    close(trigamma(7.25).unwrap(), 0.147_879_233_158_932_169_7, 1e-14);
    close(ln_gamma(0.3).unwrap(), 1.095_797_994_818_075_522, 1e-14);
    close(ln_gamma(7.25).unwrap(), 7.052_185_450_738_539_445, 1e-13);
    close(ln_gamma(123.5).unwrap(), 469.817_275_491_930_604_9, 1e-11);
}

#[test]
fn dirichlet_and_beta_reference_values() {
    let e = dirichlet_expect_log(&DirichletParams::new(vec![0.5, 1.5]).unwrap());
    close(e[0], -2.386_294_361_119_890_619, 1e-13);
    close(e[1], -0.386_294_361_119_890_618_8, 1e-13);

    let (a, b) = beta_expect_logs(BetaParams::new(2.5, 3.5).unwrap());
    close(a, -1.002_961_027_786_557_286, 1e-13);
    close(b, -0.602_961_027_786_557_285_5, 1e-13);

    let (a, b) = beta_expect_logs(BetaParams::new(1.0, 1.0).unwrap());
    close(a, -1.0, 1e-12);
    close(b, -1.0, 1e-12);
    for (x, want) in [(1.0, -1.0), (2.0, -5.0 / 6.0)] {
        for e in dirichlet_expect_log(&DirichletParams::symmetric(2, x).unwrap()) {
            close(e, want, 1e-12);
        }
    }
}

#[test]
fn normalize_exp_reference_values() {
    let p = normalize_exp(&LogWeights::new(vec![-1.0, -2.0, -4.0]).unwrap()).unwrap();
    close(p[0], 0.705_384_512_698_241_158_3, 1e-15);
    close(p[1], 0.259_496_460_342_419_117_5, 1e-15);
    close(p[2], 0.035_119_026_959_339_724_19, 1e-15);
}

#[test]
fn log_normalizer_examples() {
    close(dirichlet_log_normalizer(&DirichletParams::new(vec![1.0, 1.0, 1.0]).unwrap()), 0.5f64.ln(), 1e-13);
    close(dirichlet_log_normalizer(&DirichletParams::new(vec![2.0, 3.0]).unwrap()), (1.0f64 / 12.0).ln(), 1e-13);
}

proptest! {
    #[test]
    fn digamma_recurrence(x in 1e-3f64..100.0) {
        let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        prop_assert!((lhs - 1.0 / x).abs() <= 1e-12, "error {:e}", (lhs - 1.0 / x).abs());
    }

    #[test]
    fn expected_logs_are_negative(c in prop::collection::vec(1e-3f64..1e3, 2..12)) {
        for e in dirichlet_expect_log(&DirichletParams::new(c).unwrap()) {
            prop_assert!(e.is_finite() && e < 0.0);
        }
    }

    #[test]
    fn log_normalizer_gradient_is_expected_log(c in prop::collection::vec(0.2f64..20.0, 2..8)) {
        let h = 1e-5;
        let expected = dirichlet_expect_log(&DirichletParams::new(c.clone()).unwrap());
        for i in 0..c.len() {
            let mut up = c.clone();
            let mut down = c.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (dirichlet_log_normalizer(&DirichletParams::new(up).unwrap())
                - dirichlet_log_normalizer(&DirichletParams::new(down).unwrap()))
                / (2.0 * h);
            // the log normalizer is Σ lnΓ(c_i) − lnΓ(Σ c), whose gradient is the expected log
            prop_assert!((fd - expected[i]).abs() < 1e-6, "{} vs {}", fd, expected[i]);
        }
    }

    #[test]
    fn normalize_exp_is_shift_invariant(
        w in prop::collection::vec(-300.0f64..300.0, 1..10),
        shift in -400.0f64..400.0,
    ) {
        let a = normalize_exp(&LogWeights::new(w.clone()).unwrap()).unwrap();
        let b = normalize_exp(&LogWeights::new(w.iter().map(|x| x + shift).collect()).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        prop_assert_eq!(argmax(&a), argmax(&w));
    }
}
