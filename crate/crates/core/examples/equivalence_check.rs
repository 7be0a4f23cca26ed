//! The physical channel (DAC paths, mixers, MZM driver paths) against its
//! 4x4 real MIMO equivalent, at one DAC sample per output sample.

use fidac::channel::{build_equivalent_mimo, equivalence_nmse_db, ImpairmentChannelSpec, ImpairmentRanges, F_LEAD, F_TAPS};
use fidac::splitter::TxParams;

fn main() -> fidac::Result<()> {
    let omega0 = TxParams::default().omega0();
    let mut base = ImpairmentChannelSpec::nominal();
    base.alpha = 1;
    base.dac_bits = None;

    for seed in 0..8 {
        let spec = ImpairmentChannelSpec::random(&base, &ImpairmentRanges::default(), seed);
        let nmse = equivalence_nmse_db(&spec, omega0, 8192, seed)?;
        println!(
            "seed {seed}: delta ({:+.3}, {:+.3}) phi ({:+5.1}, {:+5.1}) deg -> NMSE {nmse:.1} dB",
            spec.delta1, spec.delta2, spec.phi1_deg, spec.phi2_deg
        );
    }

    let mut skewed = base.clone();
    skewed.delta1 = 0.25;
    let f = build_equivalent_mimo(&skewed, omega0, F_TAPS, F_LEAD)?;
    println!("\ndelta1 = 0.25, energy of each F entry (row = output stream):");
    for u in 0..4 {
        let row: Vec<String> = (0..4).map(|v| format!("{:8.4}", f.entry(u, v).iter().map(|t| t * t).sum::<f64>())).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
