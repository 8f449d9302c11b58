//! Fixtures shared by the benchmarks.

use abjm_vortex::{ModelParams, TorusGrid, VortexConfiguration};

/// Three species with four vortices on a `4 x 4` torus.
pub fn torus_case(nodes: usize) -> (VortexConfiguration, ModelParams, TorusGrid) {
    let cfg = VortexConfiguration::new(vec![vec![[0.7, 0.9]], vec![[2.9, 1.3], [1.6, 3.1]], vec![[3.3, 3.4]]])
        .expect("finite points");
    let params = ModelParams::new(3, 1.0, 4.0).expect("valid parameters");
    let grid = TorusGrid::new(4.0, 4.0, nodes, nodes).expect("valid grid");
    (cfg, params, grid)
}
