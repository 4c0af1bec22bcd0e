// Fits a luminance curve to meter readings, then prints Weber contrast per
// grayscale and optotype pixel heights for the reference display.
//
//     cargo run -p visbench --example display_calibration

use visbench::calibration::{
    fit_luminance_curve, grayscale_to_weber, optotype_pixel_height, parse_luminance_samples, CalibrationProfile,
    GrayscaleScale,
};

const READINGS: &str = "\
# grayscale (0-255)  luminance (cd/m2)
0     0.45
32    5.9
64    23.1
96    53.8
128   98.7
160   157.9
192   232.6
224   320.4
255   419.2
";

fn main() {
    let samples = parse_luminance_samples(READINGS, GrayscaleScale::Auto).unwrap();
    let curve = fit_luminance_curve(&samples, 3).unwrap();
    println!("coefficients {:?}", curve.coefficients);
    println!("residual rms {:.3} cd/m2", curve.residual_rms_cd_m2);
    for g in [0.0, 0.5, 0.9, 0.99, 1.0] {
        println!("  grayscale {g:.2}: L = {:>7.2}, Weber {:+.4}", curve.evaluate(g), grayscale_to_weber(g, &curve).unwrap());
    }

    let profile = CalibrationProfile::reference();
    println!("\nreference display floor {} logMAR", profile.min_renderable_logmar());
    for logmar in [1.0, 0.5, 0.0, -0.3, -0.62] {
        let px = optotype_pixel_height(logmar, &profile.geometry).unwrap();
        println!("  logMAR {logmar:>5.2}: {px:>7.1} px tall");
    }
}
