//! Scattered samples onto the pixel grid: weights `c` and averages `h`.

use merr::{bin_samples, GridSpec, Sample, SampleSet};

fn main() -> merr::Result<()> {
    let grid = GridSpec::square(4)?;
    let samples = vec![
        Sample { x: 1.0, y: 1.0, value: 0.8 },
        Sample { x: 1.3, y: 0.8, value: 0.6 },
        Sample { x: 2.6, y: 3.1, value: 0.2 },
    ];
    let data = bin_samples(&SampleSet::new(samples, grid)?)?;
    for y in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|x| format!("c={:.3} h={:.3}", data.c.get(x, y), data.h.get(x, y)))
            .collect();
        println!("{}", row.join(" | "));
    }
    Ok(())
}
