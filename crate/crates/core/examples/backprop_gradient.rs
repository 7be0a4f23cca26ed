//! The equalizer gradient obtained by passing the output error back through
//! the remodulator and the channel estimate, checked against finite
//! differences of the squared error.

use fidac::compensation::{ie_gradient, ie_loss};
use fidac::mimo::MimoFir;
use fidac::{MultiStream, SampledSignal};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_fir(rng: &mut ChaCha8Rng, len: usize, delay: i64) -> MimoFir {
    let mut f = MimoFir::zeros(4, 4, len, delay);
    for u in 0..4 {
        for v in 0..4 {
            for t in f.entry_mut(u, v) {
                *t = rng.random_range(-1.0..1.0);
            }
        }
    }
    f
}

fn main() -> fidac::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let omega0 = std::f64::consts::FRAC_PI_4;
    let h = random_fir(&mut rng, 4, 1);
    let f = random_fir(&mut rng, 4, 2);
    let r = MultiStream::new((0..4).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(), 1.0, 0)?;
    let x = SampledSignal::new((0..64).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(), 1.0)?;

    let g = ie_gradient(&h, &f, &r, &x, omega0)?;
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for u in 0..4 {
        for v in 0..4 {
            for i in 0..h.len() {
                let mut hp = h.clone();
                hp.entry_mut(u, v)[i] += eps;
                let mut hm = h.clone();
                hm.entry_mut(u, v)[i] -= eps;
                let fd = (ie_loss(&hp, &f, &r, &x, omega0)? - ie_loss(&hm, &f, &r, &x, omega0)?) / (2.0 * eps);
                worst = worst.max((g.entry(u, v)[i] - fd).abs() / fd.abs().max(1.0));
            }
        }
    }
    println!("loss {:.4}", ie_loss(&h, &f, &r, &x, omega0)?);
    println!("largest relative gradient error over {} taps: {worst:.2e}", 16 * h.len());
    Ok(())
}
