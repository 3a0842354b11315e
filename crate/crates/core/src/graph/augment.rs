use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::seed;

/// DropEdge: removes each undirected edge independently with probability
/// `rate`. Both orientations of an edge go together.
pub fn drop_edge(g: &Graph, rate: f64, seed: u64) -> Result<Graph> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Validation(format!("drop rate {rate} outside [0, 1)")));
    }
    if rate == 0.0 {
        return Ok(g.clone());
    }
    let mut rng = seed::rng(seed);
    let kept: Vec<_> = g.edges().filter(|_| rng.random::<f64>() >= rate).collect();
    g.with_edges(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm, SbmParams};

    fn dense_graph() -> Graph {
        let p = SbmParams {
            block_sizes: vec![50, 50],
            p_intra: 0.35,
            p_inter: 0.1,
            class_means: vec![vec![0.0], vec![1.0]],
            noise_std: 0.1,
            degree_spread: 0.0,
        };
        generate_sbm(&p, 2).unwrap()
    }

    #[test]
    fn rate_zero_is_identity() {
        let g = dense_graph();
        assert_eq!(drop_edge(&g, 0.0, 9).unwrap(), g);
    }

    #[test]
    fn survival_within_binomial_band() {
        let g = dense_graph();
        let m = g.num_edges() as f64;
        assert!(m >= 1000.0, "need at least 1000 edges, got {m}");
        let kept = drop_edge(&g, 0.5, 4).unwrap().num_edges() as f64;
        let sd = (m * 0.25).sqrt();
        assert!((kept - 0.5 * m).abs() <= 3.0 * sd, "kept {kept} of {m}");
    }

    #[test]
    fn mirror_edges_dropped_together_and_payload_kept() {
        let g = dense_graph();
        let d = drop_edge(&g, 0.3, 1).unwrap();
        for u in 0..d.num_nodes() {
            for &v in d.neighbors(u) {
                assert!(d.neighbors(v).contains(&u));
                assert!(g.neighbors(u).contains(&v));
            }
        }
        assert_eq!(d.features(), g.features());
        assert_eq!(d.labels(), g.labels());
        assert_eq!(d, drop_edge(&g, 0.3, 1).unwrap());
    }

    #[test]
    fn invalid_rate() {
        assert!(drop_edge(&dense_graph(), 1.0, 0).is_err());
    }
}
