//! Split a 128 GBd 16-QAM signal into two half-bandwidth bands and put it
//! back together.

use fidac::splitter::{generate_frame, pulse_shape, remodulate, split_bands, ConstellationMap, TxParams};

fn main() -> fidac::Result<()> {
    let tx = TxParams::default();
    let map = ConstellationMap::qam16();
    let frame = generate_frame(1, 4096, &map)?;
    let x = pulse_shape(&frame.symbols, &tx.rrc()?, tx.sps, tx.rate_hz())?;
    let split = tx.split_config()?;
    let r = split_bands(&x, &split)?;
    let (b1, b2) = r.to_bands()?;

    println!("input power      {:.4}", x.mean_power());
    println!("band 1 power     {:.4}", b1.mean_power());
    println!("band 2 power     {:.4}", b2.mean_power());

    let back = remodulate(&b1, &b2, tx.omega0())?;
    let err: f64 = (x.origin()..x.end()).map(|t| (back.at(t) - x.at(t)).norm_sqr()).sum();
    println!("recombination error {:.1} dB", 10.0 * (err / x.energy()).log10());

    // each band filter passes its own half of the spectrum
    for f in [-48e9, -16e9, 0.0, 16e9, 48e9] {
        let g1 = split.band1_filter().response((f - 32e9) / tx.rate_hz()).norm();
        let g2 = split.band2_filter().response((f + 32e9) / tx.rate_hz()).norm();
        println!("{:>6.0} GHz  band1 {:6.3}  band2 {:6.3}", f / 1e9, g1, g2);
    }
    Ok(())
}
