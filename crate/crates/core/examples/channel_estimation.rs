//! Estimating the 4x4 analog channel from a feedback ADC running at 1/128
//! of the DAC rate.

use fidac::channel::{build_equivalent_mimo, ImpairmentChannelSpec, ImpairmentRanges, F_LEAD, F_TAPS};
use fidac::compensation::{train_estimator_white, ChannelEstimate};
use fidac::mimo::MimoFir;
use fidac::splitter::TxParams;

fn main() -> fidac::Result<()> {
    let omega0 = TxParams::default().omega0();
    let mut base = ImpairmentChannelSpec::nominal();
    base.alpha = 1;
    base.dac_bits = None;
    let spec = ImpairmentChannelSpec::random(&base, &ImpairmentRanges::default(), 7);
    let truth = build_equivalent_mimo(&spec, omega0, F_TAPS, F_LEAD)?;

    let mut est = ChannelEstimate::new(MimoFir::zeros(4, 4, F_TAPS, F_LEAD), 0.5, 128)?;
    let trace = train_estimator_white(&spec, omega0, &mut est, &truth, 1_000_000, 0.3, 100_000, 1)?;
    for p in &trace {
        println!("{:>9} samples  ({:>5} feedback)  NMSE {:8.2} dB", p.samples, p.samples / 128, p.nmse_db);
    }
    Ok(())
}
