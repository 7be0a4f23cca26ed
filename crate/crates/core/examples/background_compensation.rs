//! Calibrate on the nominal channel, then let the background loop remove a
//! 0.25 gain imbalance in the band-1 mixer. The adapted equalizer is saved
//! as JSON and reloaded as a warm start.

use fidac::channel::ImpairmentChannelSpec;
use fidac::compensation::{calibrate, run_adaptation, AdaptConfig, ImpairmentEqualizer};
use fidac::splitter::TxParams;

fn main() -> fidac::Result<()> {
    let tx = TxParams::default();
    let nominal = ImpairmentChannelSpec::nominal();
    let cal = calibrate(&AdaptConfig::calibration(), &tx, &nominal, 1)?;
    println!("calibration:");
    for p in cal.trace.iter().step_by(8) {
        println!("  {:>8}  error {:7.2} dB", p.samples, p.physical_mse_db);
    }

    let mut spec = nominal.clone();
    spec.delta1 = 0.25;
    let out = run_adaptation(&AdaptConfig::default(), &tx, &spec, cal.ie.clone(), cal.est.clone(), 2)?;
    println!("delta1 = 0.25:");
    for p in &out.trace {
        println!("  {:>8}  error {:7.2} dB  model {:7.2} dB  feedback {:7.2} dB", p.samples, p.physical_mse_db, p.model_mse_db, p.ce_mse_db);
    }
    println!("converged: {}, DAC clips: {}", out.converged, out.dac_saturations);

    let path = std::env::temp_dir().join("fidac_equalizer.json");
    std::fs::write(&path, serde_json::to_string(&out.ie)?)?;
    let back: ImpairmentEqualizer = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    assert_eq!(back, out.ie);
    println!("equalizer saved to {}", path.display());
    Ok(())
}
