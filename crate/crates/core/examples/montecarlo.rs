//! A handful of random analog channels: BER with the calibrated equalizer
//! frozen and after adaptation, at the SNR where the unimpaired system has
//! BER 2e-4.

use fidac::channel::ImpairmentChannelSpec;
use fidac::compensation::{calibrate, AdaptConfig};
use fidac::link::{Link, LinkConfig};
use fidac::metrics::{montecarlo, MonteCarloConfig};
use fidac::splitter::TxParams;

fn main() -> fidac::Result<()> {
    let tx = TxParams::default();
    let nominal = ImpairmentChannelSpec::nominal();
    let link = Link::new(&tx, &LinkConfig { symbols: 50_000, ..LinkConfig::default() }, 1)?;
    let cal = calibrate(&AdaptConfig::calibration(), &tx, &nominal, 1)?;
    let cfg = MonteCarloConfig { channels: 6, ..MonteCarloConfig::default() };
    let res = montecarlo(&link, &nominal, &cal, &AdaptConfig::default(), &cfg, 42)?;

    println!("Es/N0 {:.2} dB, reference BER {:.2e}", res.esn0_db, res.reference.ber);
    for t in &res.trials {
        println!(
            "{}  delta ({:+.2}, {:+.2})  phi ({:+5.1}, {:+5.1})  frozen {:.2e}  adapted {:.2e}",
            t.uncompensated.channel_id, t.spec.delta1, t.spec.delta2, t.spec.phi1_deg, t.spec.phi2_deg, t.uncompensated.ber, t.compensated.ber
        );
    }
    Ok(())
}
