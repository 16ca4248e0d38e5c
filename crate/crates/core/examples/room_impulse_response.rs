//! Image-source impulse responses and convolution with them.

use convsim::acoustics::{convolve, image_method_rir, RoomSpec};

fn main() -> convsim::Result<()> {
    let (src, mic) = ([2.0, 5.0, 5.0], [5.43, 5.0, 5.0]);
    let direct = image_method_rir(&RoomSpec::new([10.0, 10.0, 10.0], 0.5, 0)?, src, mic, 16000)?;
    println!("direct path only: {} taps, peak at {}", direct.taps.len(), direct.taps.len() - 1);

    for absorption in [0.2, 0.5, 0.8] {
        let room = RoomSpec::new([6.0, 5.0, 3.0], absorption, 6)?;
        let rir = image_method_rir(&room, [1.5, 2.0, 1.4], [4.2, 3.1, 1.6], 16000)?;
        println!(
            "absorption {absorption}: {} taps ({:.0} ms), energy {:.5}",
            rir.taps.len(),
            rir.taps.len() as f64 / 16.0,
            rir.energy()
        );
    }

    let room = RoomSpec::new([6.0, 5.0, 3.0], 0.4, 6)?;
    let rir = image_method_rir(&room, [1.5, 2.0, 1.4], [4.2, 3.1, 1.6], 16000)?;
    let click: Vec<f64> = (0..1600).map(|i| if i % 400 == 0 { 1.0 } else { 0.0 }).collect();
    let wet = convolve(&click, 16000, &rir)?;
    println!("click train {} -> {} samples", click.len(), wet.len());
    Ok(())
}
