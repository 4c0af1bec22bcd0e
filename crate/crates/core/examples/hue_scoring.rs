// Scores a sorted, a shuffled and an observer-arranged 85-cap board.
//
//     cargo run -p visbench --example hue_scoring

use visbench::hue::{score, shuffle_arrangement, CapSet};
use visbench::metrics::classify_tes;
use visbench::observer::HueObserver;

fn main() {
    let caps = CapSet::standard();
    let boards = [
        ("sorted", caps.identity_arrangement()),
        ("shuffled", shuffle_arrangement(&caps, 42)),
        ("observer sd 1.0", HueObserver::new(1.0, 42).unwrap().arrange(&caps)),
        ("observer sd 4.0", HueObserver::new(4.0, 42).unwrap().arrange(&caps)),
    ];
    for (name, board) in boards {
        let report = score(&board);
        println!(
            "{name:<16} TES {:>4}  groups {:?}  {}",
            report.total,
            report.per_group_tes,
            classify_tes(report.total as f64).unwrap().label()
        );
    }

    // Swapping two neighbours costs 4 error points.
    let swapped = caps.identity_arrangement().move_cap(1, 5, 6).unwrap();
    println!("one adjacent swap  TES {}", score(&swapped).total);
}
