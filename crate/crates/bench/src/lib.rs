//! Inputs shared by the kernel benchmarks.

use fptas_core::io::load_instance;
use fptas_core::model::DpInstance;
use fptas_core::randvar::RandVar;
use fptas_core::rat::{int, ratio};
use fptas_core::{Interval, PwlConvex};
use std::path::PathBuf;

/// A bundled instance from the workspace `fixtures` directory.
pub fn fixture(name: &str) -> DpInstance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    load_instance(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// `n` independent variables, each uniform over `atoms` consecutive integers.
pub fn uniform_vars(n: usize, atoms: u64) -> Vec<RandVar> {
    (0..n)
        .map(|i| RandVar::grid(int(i as i64), int(1), atoms).expect("valid grid"))
        .collect()
}

/// `|x| + 1` on `[-w, w]` with a kink at every integer.
pub fn kinked(w: i64) -> PwlConvex {
    let pts = (-w..=w)
        .map(|x| (int(x), int(x.abs() + 1) + ratio(x * x, 8 * w)))
        .collect();
    PwlConvex::new(pts).expect("convex points")
}

pub fn domain(w: i64) -> Interval {
    Interval::new(int(-w), int(w)).expect("interval")
}
