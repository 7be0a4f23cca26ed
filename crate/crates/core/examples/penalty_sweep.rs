//! SNR penalty at BER 1e-3 against mixer phase imbalance, with the
//! calibrated equalizer frozen and after background adaptation.

use fidac::compensation::{calibrate, run_adaptation, AdaptConfig};
use fidac::experiment::{impaired_spec, ExperimentKind};
use fidac::link::{Link, LinkConfig};
use fidac::metrics::SnrSearch;
use fidac::channel::ImpairmentChannelSpec;
use fidac::splitter::TxParams;

fn main() -> fidac::Result<()> {
    let tx = TxParams::default();
    let nominal = ImpairmentChannelSpec::nominal();
    let link = Link::new(&tx, &LinkConfig { symbols: 50_000, ..LinkConfig::default() }, 1)?;
    let search = SnrSearch::default();
    let reference = link.required_snr(link.reference_signal(), &search, 9)?.esn0_db;
    println!("ideal transmitter needs Es/N0 = {reference:.2} dB");

    let cal = calibrate(&AdaptConfig::calibration(), &tx, &nominal, 1)?;
    println!("{:>8} {:>14} {:>14}", "phi deg", "frozen dB", "adapted dB");
    for phi in [0.0, 8.0, 16.0, 22.0] {
        let spec = impaired_spec(ExperimentKind::SweepPhase, &nominal, phi);
        let frozen = link.required_snr(&link.transmit(&cal.ie.h, &spec)?, &search, 9)?.esn0_db;
        let adapted = run_adaptation(&AdaptConfig::default(), &tx, &spec, cal.ie.clone(), cal.est.clone(), 3)?;
        let comp = link.required_snr(&link.transmit(&adapted.ie.h, &spec)?, &search, 9)?.esn0_db;
        println!("{phi:>8.1} {:>14.2} {:>14.2}", frozen - reference, comp - reference);
    }
    Ok(())
}
