// Converts a few acuity and contrast thresholds between notations and
// prints the perception band for each.
//
//     cargo run -p visbench --example acuity_metrics

use visbench::metrics::{
    acuity_from_gap_angle, classify_acuity, classify_cs, contrast_result_from_threshold, visual_angle, AcuityResult,
    VisualAngle,
};

fn main() {
    println!("{:>8} {:>8} {:>8} {:>8}  band", "logMAR", "MAR'", "decimal", "Snellen");
    for logmar in [-0.2, 0.0, 0.1, std::f64::consts::LOG10_2, 0.5, 1.0] {
        let a = AcuityResult::from_logmar(logmar).unwrap();
        let band = classify_acuity(a.logmar).unwrap();
        println!(
            "{:>8.3} {:>8.3} {:>8.3} {:>8}  {}",
            a.logmar,
            a.mar_arcmin,
            a.decimal,
            a.snellen(),
            band.label()
        );
    }

    // A 1.454 mm gap seen from 5 m subtends one arcminute.
    let gap = visual_angle(1.454, 5000.0).unwrap();
    let a = acuity_from_gap_angle(gap).unwrap();
    println!("\n1.454 mm gap at 5 m: {:.3} arcmin, {}", gap.arcmin(), a.snellen());
    let two = acuity_from_gap_angle(VisualAngle::from_arcmin(2.0).unwrap()).unwrap();
    println!("2 arcmin gap: decimal {:.2}, {}", two.decimal, two.snellen());

    println!("\n{:>10} {:>6}  band", "threshold", "logCS");
    for threshold in [0.005, 0.01, 0.0316, 0.1, 0.5] {
        let c = contrast_result_from_threshold(threshold).unwrap();
        println!("{:>9.2}% {:>6.2}  {}", c.percent_threshold, c.log_cs, classify_cs(c.log_cs).unwrap().label());
    }
}
