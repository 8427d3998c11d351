//! Numerical kernel for surface geometry in isotropic space I³: the metric
//! lives on top views only, surfaces are graphs `z = f(u,v)`, and curvature
//! theory becomes linear algebra of Hessians. The crate provides curvature
//! evaluation, the metric dualities δ and ν, Minkowski sums and offsets,
//! isometry tests with the classical isometric families, the six-surface
//! Darboux wreath of an infinitesimal isometry, the paratactic map, and
//! discrete Q-net/Kœnigs/Voss-net machinery with finite flexing.

pub mod curvature;
pub mod discrete;
pub mod duality;
pub mod expr;
pub mod fields;
pub mod geom;
pub mod isometry;
pub mod jet;
pub mod minkowski;
pub mod verify;
pub mod wreath;

pub use fields::{Grid2, HeightField, ParamSurface, ScalarField, SupportField};
pub use jet::{Jet2, Jet3};

use std::sync::OnceLock;

/// Shared rayon pool for grid sweeps. Thread count is capped by the
/// `ISOWREATH_THREADS` environment variable when set.
pub fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("ISOWREATH_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to build worker thread pool")
    })
}
