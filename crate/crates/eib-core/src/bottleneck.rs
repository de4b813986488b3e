//! The Gaussian bottleneck: diagonal-covariance posteriors over the
//! compressed code, their KL against the standard normal prior, and
//! reparameterized sampling.

use crate::graph::Graph;
use crate::tensor::Tensor;
use crate::{sc, Scalar};
use rand::Rng;
use rand_distr::StandardNormal;

/// Log standard deviations are clamped into this range everywhere they are
/// produced, keeping `exp` and the KL finite for any parameter values.
pub const LOG_STD_MIN: f64 = -8.0;
pub const LOG_STD_MAX: f64 = 8.0;

/// Posterior parameters: one diagonal Gaussian per bottleneck row. Both
/// matrices are `n x k`; log-stds are already clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBottleneck<F> {
    pub means: Tensor<F>,
    pub log_stds: Tensor<F>,
}

impl<F: Scalar> GaussianBottleneck<F> {
    pub fn new(means: Tensor<F>, log_stds: Tensor<F>) -> Self {
        assert_eq!(means.shape(), log_stds.shape(), "bottleneck shape mismatch");
        let log_stds = log_stds.map(|v| v.max(sc(LOG_STD_MIN)).min(sc(LOG_STD_MAX)));
        Self { means, log_stds }
    }

    pub fn n(&self) -> usize {
        self.means.rows()
    }

    pub fn k(&self) -> usize {
        self.means.cols()
    }
}

/// Monte-Carlo draws from a bottleneck, tagged with the seed that produced
/// them so downstream losses are reproducible.
#[derive(Debug, Clone)]
pub struct BottleneckSamples<F> {
    pub samples: Vec<Tensor<F>>,
    pub seed: u64,
}

/// KL divergence from the posterior to the standard normal prior, summed
/// over all `n x k` coordinates, in nats. Non-negative by construction.
pub fn compression_loss<F: Scalar>(b: &GaussianBottleneck<F>) -> F {
    let mut g = Graph::new();
    let m = g.leaf(b.means.clone());
    let s = g.leaf(b.log_stds.clone());
    let kl = g.gaussian_kl(m, s);
    g.value(kl).item()
}

/// Draws `m` reparameterized samples `mu + exp(log_std) * eps` with noise
/// from the seeded stream. The same `(b, m, seed)` always yields the same
/// samples; draw order is sample-major then row-major.
pub fn sample_bottleneck<F: Scalar>(
    b: &GaussianBottleneck<F>,
    m: usize,
    seed: u64,
) -> BottleneckSamples<F> {
    let eps = draw_eps::<F>(seed, m, b.n(), b.k());
    let samples = eps
        .into_iter()
        .map(|e| {
            let mut out = b.means.clone();
            for ((o, &ls), &ev) in out
                .data_mut()
                .iter_mut()
                .zip(b.log_stds.data())
                .zip(e.data())
            {
                *o = *o + ls.exp() * ev;
            }
            out
        })
        .collect();
    BottleneckSamples { samples, seed }
}

/// The shared noise stream: `m` standard-normal tensors of shape
/// `rows x cols`. Training builds its reparameterization nodes from the same
/// draws, so the value-level and graph-level sampling paths agree exactly.
pub fn draw_eps<F: Scalar>(seed: u64, m: usize, rows: usize, cols: usize) -> Vec<Tensor<F>> {
    let mut rng = crate::seed::stream_rng(seed, "bottleneck-eps", 0);
    (0..m)
        .map(|_| {
            let data = (0..rows * cols)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    sc(z)
                })
                .collect();
            Tensor::new(rows, cols, data)
        })
        .collect()
}
