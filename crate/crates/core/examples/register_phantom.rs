//! Recovers random rigid motions of a smooth 64³ head phantom.
//!
//! cargo run --release --example register_phantom [TRIALS] [SEED]

use lesionstat::phantom::HeadPhantom;
use lesionstat::registration::{register_rigid, similarity, RegistrationParams, RigidTransform};
use lesionstat::volume::Grid;

/// Small deterministic generator so the example needs no extra crates.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn uniform(&mut self, r: f64) -> f64 {
        (2.0 * self.next_f64() - 1.0) * r
    }
}

fn main() -> lesionstat::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut rng = SplitMix(args.next().and_then(|s| s.parse().ok()).unwrap_or(7));

    let grid = Grid::new([64, 64, 64], [1.0; 3])?;
    let head = HeadPhantom::new(&grid);
    let fixed = head.sample(&grid, None)?;
    let params = RegistrationParams::default();

    for trial in 0..trials {
        let truth = RigidTransform::new(
            std::array::from_fn(|_| rng.uniform(10.0)),
            std::array::from_fn(|_| rng.uniform(10.0)),
            grid.center_mm(),
        )?;
        let moving = head.sample(&grid, Some(&truth))?;
        let started = std::time::Instant::now();
        let out = register_rigid(&fixed, &moving, &params)?;
        let dr = (0..3)
            .map(|a| (out.transform.rotation_deg[a] - truth.rotation_deg[a]).abs())
            .fold(0.0, f64::max);
        let dt = (0..3)
            .map(|a| (out.transform.translation_mm[a] - truth.translation_mm[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        let truth_ncc = similarity(&fixed, &moving, &truth)?;
        println!(
            "trial {trial:>2}: rotation error {dr:.3} deg, translation error {dt:.3} mm, ncc {:.6} (truth {truth_ncc:.6}), {:.1}s",
            out.final_ncc,
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
