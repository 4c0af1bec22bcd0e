// Simulates the default 24-participant benchmark and prints the Friedman
// table and the pairwise comparisons for the worst device.
//
//     cargo run -p visbench --example benchmark_analysis

use visbench::calibration::CalibrationProfile;
use visbench::simulation::{simulate, SimulationConfig};
use visbench::stats::{analyze_benchmark, AnalysisConfig};

fn main() {
    let out = simulate(&SimulationConfig::default_benchmark(2024), &CalibrationProfile::reference()).unwrap();
    let (report, _plots) = analyze_benchmark(&out.results, &AnalysisConfig::default()).unwrap();

    println!("Friedman tests");
    for r in &report.friedman {
        println!(
            "  {:<7} {:<7} chi2 {:>6.2}  p {:.2e}",
            r.light_level,
            r.metric,
            r.chi_square.unwrap_or(f64::NAN),
            r.p_value.unwrap_or(f64::NAN)
        );
    }
    println!("worst-headset against the rest (Bonferroni family {})", report.bonferroni_family);
    for r in report.pairwise.iter().filter(|r| r.condition_b == "worst-headset" || r.condition_a == "worst-headset") {
        println!(
            "  {:<7} {:<7} {:>11} vs {:<13} p_adj {:.4} {}",
            r.light_level,
            r.metric,
            r.condition_a,
            r.condition_b,
            r.p_adjusted.unwrap_or(f64::NAN),
            r.stars
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
}
