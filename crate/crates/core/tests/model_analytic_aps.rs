use approx::assert_abs_diff_eq;
use gtlab::analytic::{
    c_chi_double_integral, euler_factor_compare, fourier_profile, phi_at, small_prime_product, zeta, zeta_pole_check,
    Complex64,
};
use gtlab::cutoff::{c_chi, smooth_bump_cutoff, tent_cutoff, DEFAULT_PLATEAU};
use gtlab::dense_model::{find_dense_model, mean_preservation_check, witness_value, ModelSearchConfig, StopReason};
use gtlab::forms::{kap_forms, LinearForm, LinearFormsSystem};
use gtlab::majorant::{build_majorant, restrict_to_window, MajorantParams};
use gtlab::norms::cutnorm_sum_exact;
use gtlab::primes_ap::{count_prime_aps, prime_ap_sweep, two_squares_ap_demo, weighted_ap_density};
use gtlab::sieve::{is_prime_trial, primorial, small_primes, SieveTables};
use gtlab::CyclicFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_majorant(n: usize) -> CyclicFunction {
    let p = MajorantParams::desk_scale(n, 3, 3, smooth_bump_cutoff(DEFAULT_PLATEAU).unwrap()).unwrap();
    let t = SieveTables::build(6 * n + 1).unwrap();
    build_majorant(&p, &t).unwrap()
}

#[test]
fn bounded_input_is_its_own_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = CyclicFunction::from_fn(13, |_| rng.random_range(0.0..1.0));
    let m = find_dense_model(&f, &ModelSearchConfig::default()).unwrap();
    assert_eq!(m.ftilde, f);
    assert_eq!(m.achieved_gap, 0.0);
    assert_eq!(m.rounds, 1);
    assert!(m.converged && m.stop_reason == StopReason::Tolerance);
    let rep = mean_preservation_check(&f, &m.ftilde, m.achieved_gap).unwrap();
    assert_eq!(rep.mean_gap, 0.0);
    assert!(rep.holds);
}

#[test]
fn majorant_models() {
    let n = 23;
    let nu = small_majorant(n);
    let ones = CyclicFunction::constant(n, 1.0);
    let competitor = cutnorm_sum_exact(&nu.sub(&ones).unwrap()).unwrap().value;
    let m = find_dense_model(&nu, &ModelSearchConfig::default()).unwrap();
    assert!(m.exact_gap);
    assert!(m.achieved_gap <= competitor + 1e-12, "{} vs {competitor}", m.achieved_gap);
    assert!(m.ftilde.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    for w in m.trace.windows(2) {
        assert!(w[1].gap <= w[0].gap);
    }
    for c in &m.certificate {
        assert_abs_diff_eq!(witness_value(&nu, &m.ftilde, &c.a, &c.b).unwrap(), c.violation, epsilon = 1e-12);
    }
    assert!(mean_preservation_check(&nu, &m.ftilde, m.achieved_gap).unwrap().holds);
    // f̃ ≡ 1 against f = ν: the means differ by at most the cut-norm gap
    assert!(mean_preservation_check(&nu, &ones, competitor).unwrap().holds);

    // f = ν·1_A beats the feasible point 1_A
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    let ind = CyclicFunction::indicator(n, &a);
    let f = nu.zip_with(&ind, |p, q| p * q).unwrap();
    let feasible = cutnorm_sum_exact(&f.sub(&ind).unwrap()).unwrap().value;
    let m = find_dense_model(&f, &ModelSearchConfig::default()).unwrap();
    assert!(m.achieved_gap <= feasible + 1e-12, "{} vs {feasible}", m.achieved_gap);
}

#[test]
fn model_search_rejects_bad_config() {
    let f = CyclicFunction::constant(5, 0.5);
    let cfg = ModelSearchConfig {
        max_rounds: 0,
        ..Default::default()
    };
    assert!(find_dense_model(&f, &cfg).is_err());
}

#[test]
fn fourier_profile_properties() {
    let chi = smooth_bump_cutoff(DEFAULT_PLATEAU).unwrap();
    let coarse = fourier_profile(&chi, 30.0, 601).unwrap();
    let fine = fourier_profile(&chi, 90.0, 1801).unwrap();
    assert!(fine.conjugate_symmetry_error() < 1e-12);
    let (e1, e2) = ((coarse.inversion(0.0).re - 1.0).abs(), (fine.inversion(0.0).re - 1.0).abs());
    assert!(e2 < e1 && e2 < 1e-3, "{e1} then {e2}");
    for i in 0..=9 {
        let x = i as f64 * 0.1;
        assert!((fine.derivative_reconstruction(x).re + chi.deriv(x)).abs() < 1e-3, "x = {x}");
    }
    // φ(0) = (1/2π)∫ eˣχ(x) dx
    let direct: f64 = {
        let h = 1e-4;
        (0..20_000).map(|i| -1.0 + (i as f64 + 0.5) * h).map(|x| x.exp() * chi.eval(x)).sum::<f64>() * h
    } / std::f64::consts::TAU;
    assert_abs_diff_eq!(phi_at(&chi, 0.0).unwrap().re, direct, epsilon = 1e-7);
    assert!(fourier_profile(&chi, 10.0, 100).is_err());

    // the tent's transform decays like ξ^{−2}; the bump's much faster
    let tent = fourier_profile(&tent_cutoff(), 90.0, 1801).unwrap();
    assert!((tent.decay_exponent() + 2.0).abs() < 0.2, "{}", tent.decay_exponent());
    assert!(fine.decay_exponent() < tent.decay_exponent() - 2.0);
    // and the fitted exponent keeps growing as the window moves out
    assert!(fine.decay_exponent() < coarse.decay_exponent());
}

#[test]
fn c_chi_two_routes() {
    let chi = smooth_bump_cutoff(DEFAULT_PLATEAU).unwrap();
    let c = c_chi(&chi).unwrap();
    let e_coarse = (c_chi_double_integral(&fourier_profile(&chi, 60.0, 1201).unwrap()) - c).norm();
    let prof = fourier_profile(&chi, 120.0, 2401).unwrap();
    let v = c_chi_double_integral(&prof);
    assert!((v.re - c).abs() < 1e-3 && v.im.abs() < 1e-6, "{v} vs {c}");
    assert!((v - c).norm() < e_coarse);
}

#[test]
fn zeta_near_the_pole() {
    let (z2, _) = zeta(Complex64::new(2.0, 0.0), 10_000).unwrap();
    assert_abs_diff_eq!(z2.re, std::f64::consts::PI.powi(2) / 6.0, epsilon = 1e-8);
    let s: Vec<f64> = [1e2f64, 1e4, 1e6].iter().map(|r| 1.0 + 1.0 / r.ln()).collect();
    let pts = zeta_pole_check(&s).unwrap();
    let errs: Vec<f64> = pts.iter().map(|p| (p.residue_product - 1.0).abs()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(pts.iter().all(|p| p.regular_part <= 1.0));
    for i in 1..=100 {
        let s = 1.0 + i as f64 / 100.0;
        let (z, _) = zeta(Complex64::new(s, 0.0), 5000).unwrap();
        assert!((z.re - 1.0 / (s - 1.0)).abs() <= 1.0, "s = {s}");
    }
    assert!(zeta(Complex64::new(1.0, 0.0), 100).is_err());
    assert!(zeta(Complex64::new(-0.5, 0.0), 100).is_err());
}

#[test]
fn euler_factors() {
    let wt = primorial(3).unwrap();
    let log_r = 1e4f64.ln();
    // one form θ = Wx + 1, ξ = 0: two-divisor oracle
    let one = LinearFormsSystem::new(1, vec![LinearForm::new(vec![1]).unwrap()]).unwrap().w_shifted(wt.modulus);
    for p in [5u64, 101, 997] {
        let e = euler_factor_compare(&one, p, &[0.0, 0.0], log_r).unwrap();
        let pf = p as f64;
        let oracle = 1.0 - 2.0 / pf * pf.powf(-1.0 / log_r) + pf.powf(-2.0 / log_r) / pf;
        assert_abs_diff_eq!(e.e_p.re, oracle, epsilon = 1e-14);
        assert!(e.e_p.im.abs() < 1e-15);
    }
    let sys = kap_forms(3).unwrap().w_shifted(wt.modulus);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = log_r.sqrt();
    let xi: Vec<f64> = (0..6).map(|_| rng.random_range(-h..h)).collect();
    for p in small_primes(1000) {
        let e = euler_factor_compare(&sys, p, &xi, log_r).unwrap();
        if p <= 3 {
            assert_eq!(e.e_p, Complex64::new(1.0, 0.0));
        } else {
            assert!((e.ratio - 1.0).norm() * (p * p) as f64 <= 10.0, "p = {p}");
        }
    }
    assert!(euler_factor_compare(&sys, 5, &xi[..4], log_r).is_err());
    let (prod, dens) = small_prime_product(&wt, 3, 1e12);
    assert!((prod / dens - 1.0).abs() < 1e-9);
}

#[test]
fn prime_progression_counts() {
    let t = SieveTables::build(20_000).unwrap();
    assert_eq!(count_prime_aps(&t, 10, 3).unwrap(), 1);
    let rows = prime_ap_sweep(&t, &[1000, 5000, 20_000], 3).unwrap();
    assert!(rows.windows(2).all(|w| w[1].count >= w[0].count));
    assert!(rows.iter().all(|r| r.ratio > 0.0));
    assert!(count_prime_aps(&t, 20_001, 3).is_err());

    for ap in two_squares_ap_demo(&t, 5000, 4, 10).unwrap() {
        let d = ap.terms[1] - ap.terms[0];
        for (j, (&p, &(a, b))) in ap.terms.iter().zip(&ap.squares).enumerate() {
            assert_eq!(p, ap.terms[0] + j as u64 * d);
            assert!(p % 4 == 1 && is_prime_trial(p) && a * a + b * b == p);
        }
    }
}

#[test]
fn windowed_weight_has_progressions() {
    let n = 2001;
    let p = MajorantParams::desk_scale(n, 3, 3, smooth_bump_cutoff(DEFAULT_PLATEAU).unwrap()).unwrap();
    let wt = p.w_trick().unwrap();
    let t = SieveTables::build(6 * n + 1).unwrap();
    let nu = build_majorant(&p, &t).unwrap();
    let f = restrict_to_window(&nu, &p, &t).unwrap();
    let rep = weighted_ap_density(&f, 3, &wt, 3).unwrap();
    assert!(rep.positive && rep.nontrivial_count > 0);
    assert_eq!(rep.wraparound_violations, 0);
    assert_eq!(rep.unwound_failures, 0);
    assert_abs_diff_eq!(rep.density, rep.trivial_contribution + rep.nontrivial_contribution, epsilon = 1e-15);
    for ex in &rep.examples {
        assert!(ex.iter().all(|&q| is_prime_trial(q)));
        assert_eq!(ex[2] - ex[1], ex[1] - ex[0]);
    }
}
