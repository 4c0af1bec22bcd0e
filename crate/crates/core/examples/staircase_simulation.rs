// Runs the acuity and contrast staircases against simulated observers and
// prints each estimate next to the observer's true threshold.
//
//     cargo run -p visbench --example staircase_simulation

use visbench::observer::{Observer, ObserverModel};
use visbench::staircase::{StaircaseConfig, StaircaseState};

fn run(config: StaircaseConfig, model: ObserverModel, seed: u64) -> StaircaseState {
    let mut observer = Observer::new(model, seed).unwrap();
    let mut state = StaircaseState::start(config).unwrap();
    while !state.is_terminated() {
        let correct = observer.respond(state.current_level());
        state = state.submit_response(correct).unwrap();
    }
    state
}

fn main() {
    println!("acuity (logMAR), 8 correct answers per level");
    for truth in [-0.1, 0.0, 0.3, 0.55] {
        let s = run(StaircaseConfig::acuity(), ObserverModel::step(truth), 1);
        println!(
            "  step {truth:>5.2}: estimate {:>7.4} after {:>3} trials",
            s.threshold_estimate().unwrap(),
            s.trial_count()
        );
    }
    for seed in 0..3 {
        let s = run(StaircaseConfig::acuity(), ObserverModel::logistic(0.3, 20.0).with_guess(0.25), seed);
        println!(
            "  logistic 0.30 (seed {seed}): estimate {:>7.4} after {:>3} trials",
            s.threshold_estimate().unwrap(),
            s.trial_count()
        );
    }

    println!("contrast (letter darkness), one correct answer per level");
    for truth in [0.02, 0.05, 0.2] {
        let s = run(StaircaseConfig::contrast(), ObserverModel::step(truth), 1);
        println!(
            "  step {truth:>5.2}: estimate {:>7.4} after {:>3} trials",
            s.threshold_estimate().unwrap(),
            s.trial_count()
        );
    }
}
