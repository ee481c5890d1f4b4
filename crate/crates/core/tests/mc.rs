//! Simulation against closed forms, and reproducibility of the simulator.

use drawdown_cds::mc_oracle::{
    simulate_classic_exit, simulate_drawdown_functionals, switch_contract_value_mc,
};
use drawdown_cds::stopping::{total_value, OptimalSwitch};
use drawdown_cds::{
    classic_two_sided_exit, CdsTerms, DrawdownProblem, DrawdownSimulator, JumpDiffusionModel, PathConfig,
    ScaleEvaluator, SwitchTerms,
};

const R: f64 = 0.1;

fn b() -> f64 {
    5f64.ln()
}

fn model(sigma: f64) -> JumpDiffusionModel {
    JumpDiffusionModel::new(0.075, sigma, 0.5, 9.0).unwrap()
}

fn config(n_paths: usize, antithetic: bool) -> PathConfig {
    PathConfig {
        n_paths,
        antithetic,
        ..PathConfig::default()
    }
}

fn terms() -> CdsTerms {
    CdsTerms::new(0.025, 5.0, b(), R).unwrap()
}

fn switch() -> SwitchTerms {
    SwitchTerms::new(-0.025, -5.0, -1.0).unwrap()
}

#[test]
fn antithetic_pairs_agree_and_do_not_inflate_error() {
    let y = 0.75 * b();
    let eval = ScaleEvaluator::new(model(0.2), R).unwrap();
    let exact = DrawdownProblem::new(&eval, b(), y).unwrap();
    let mut errors = Vec::new();
    for antithetic in [false, true] {
        let sim = DrawdownSimulator::new(model(0.2), R, b(), config(20_000, antithetic)).unwrap();
        let est = simulate_drawdown_functionals(&sim, y, None, None).unwrap();
        assert!(est.exit_up.agrees_with(exact.exit_up_transform(), 3.0), "{est:?}");
        assert!(est.max_increase.agrees_with(exact.discounted_max_increase(), 3.0), "{est:?}");
        errors.push(est.max_increase.std_error);
    }
    // pairs share their jumps, so the gain is modest but the error must not grow
    assert!(errors[1] <= errors[0] * 1.05, "{errors:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let sim = DrawdownSimulator::new(model(0.2), R, b(), config(3000, false)).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_drawdown_functionals(&sim, 0.8, Some(0.4), None).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.exit_up.mean.to_bits(), three.exit_up.mean.to_bits());
    assert_eq!(one.exit_up.std_error.to_bits(), three.exit_up.std_error.to_bits());
    assert_eq!(one.max_increase.mean.to_bits(), three.max_increase.mean.to_bits());
    assert_eq!(
        one.two_sided_down.unwrap().mean.to_bits(),
        three.two_sided_down.unwrap().mean.to_bits()
    );
}

#[test]
fn classic_exit_matches_scale_ratio() {
    for sigma in [0.0, 0.2] {
        let eval = ScaleEvaluator::new(model(sigma), R).unwrap();
        let (x0, level) = (0.5, 1.5);
        let est = simulate_classic_exit(&model(sigma), R, x0, level, &config(20_000, false)).unwrap();
        let exact = classic_two_sided_exit(&eval, x0, level).unwrap();
        assert!(est.agrees_with(exact, 3.0), "sigma {sigma}: {est:?} vs {exact}");
    }
}

#[test]
fn switching_at_boundary_prices_the_contract() {
    let eval = ScaleEvaluator::new(model(0.0), R).unwrap();
    let h_star = OptimalSwitch::solve(&eval, switch(), b()).unwrap().h_star();
    let sim = DrawdownSimulator::new(model(0.0), R, b(), config(100_000, false)).unwrap();
    let y = 0.75 * b();
    let exact = total_value(&eval, &terms(), &switch(), y).unwrap().total;

    let at_star = switch_contract_value_mc(&sim, &terms(), &switch(), h_star, y).unwrap();
    assert!(at_star.value.agrees_with(exact, 3.0), "{at_star:?} vs {exact}");
    for h in [h_star - 0.2, h_star + 0.2] {
        let other = switch_contract_value_mc(&sim, &terms(), &switch(), h, y).unwrap();
        assert!(
            other.value.mean <= exact + 3.0 * other.value.std_error,
            "h {h}: {:?} above {exact}",
            other.value
        );
    }
}

#[test]
fn switch_fee_enters_linearly() {
    let eval = ScaleEvaluator::new(model(0.0), R).unwrap();
    let h_star = OptimalSwitch::solve(&eval, switch(), b()).unwrap().h_star();
    let sim = DrawdownSimulator::new(model(0.0), R, b(), config(5_000, false)).unwrap();
    let y = 0.75 * b();
    let cheap = SwitchTerms::new(-0.025, -5.0, -0.5).unwrap();
    let a = switch_contract_value_mc(&sim, &terms(), &switch(), h_star, y).unwrap();
    let c = switch_contract_value_mc(&sim, &terms(), &cheap, h_star, y).unwrap();
    let shift = c.value.mean - a.value.mean;
    let want = (switch().gamma - cheap.gamma) * a.exercise_discount.mean;
    assert!((shift - want).abs() <= 1e-12, "{shift} vs {want}");
    assert_eq!(a.exercise_discount, c.exercise_discount);
}
