//! Image rejection of an imbalanced quadrature mixer.
//!
//! The impaired carrier is `k1 e^{jwt} + k2 e^{-jwt}`; `|k2/k1|^2` is the
//! power that leaks into the mirror band.

use fidac::channel::mixer_constants;

fn main() {
    println!("{:>6} {:>6} {:>10} {:>14}", "delta", "phi", "|k1|^2+|k2|^2", "image (dB)");
    for delta in [0.0, 0.05, 0.1, 0.25] {
        for phi_deg in [0.0f64, 5.0, 22.0] {
            let (k1, k2) = mixer_constants(delta, phi_deg.to_radians(), 1);
            let image = if k2.norm() == 0.0 {
                f64::NEG_INFINITY
            } else {
                20.0 * (k2.norm() / k1.norm()).log10()
            };
            println!("{delta:>6.2} {phi_deg:>6.1} {:>10.4} {image:>14.2}", k1.norm_sqr() + k2.norm_sqr());
        }
    }
}
