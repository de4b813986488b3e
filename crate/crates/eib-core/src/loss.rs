//! The loss breakdown reported per epoch and surfaced in training logs and
//! checkpoints.

use crate::graph::Graph;
use crate::model::RecordLossVars;
use crate::Scalar;
use serde::{Deserialize, Serialize};

/// All loss terms for a batch (or epoch), in nats, averaged per record.
///
/// `total` is always `beta * compression + preservation_conditional_nll +
/// generation_nll + aux_unconditional_nll`. The unconditional NLL appears
/// twice on purpose: once detached inside `preservation_gain` (reporting how
/// much the code helps), and once as `aux_unconditional_nll`, the auxiliary
/// language-model term that actually carries gradient to the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub compression: f64,
    pub preservation_conditional_nll: f64,
    pub preservation_unconditional_nll: f64,
    pub preservation_gain: f64,
    pub generation_nll: f64,
    pub aux_unconditional_nll: f64,
    pub beta: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [
            self.compression,
            self.preservation_conditional_nll,
            self.preservation_unconditional_nll,
            self.generation_nll,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Running average over records; `finish` recomputes the scalarization from
/// the averaged components so the breakdown invariant holds exactly.
pub struct BreakdownAccumulator {
    beta: f64,
    n: usize,
    compression: f64,
    conditional: f64,
    unconditional: f64,
    generation: f64,
}

impl BreakdownAccumulator {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            n: 0,
            compression: 0.0,
            conditional: 0.0,
            unconditional: 0.0,
            generation: 0.0,
        }
    }

    pub fn add<F: Scalar>(&mut self, g: &Graph<F>, vars: &RecordLossVars) {
        let v = |var| {
            g.value(var)
                .item()
                .to_f64()
                .expect("loss value representable as f64")
        };
        self.n += 1;
        self.compression += v(vars.compression);
        self.conditional += v(vars.conditional);
        self.unconditional += v(vars.unconditional);
        self.generation += v(vars.generation);
    }

    pub fn add_values(&mut self, compression: f64, conditional: f64, unconditional: f64, generation: f64) {
        self.n += 1;
        self.compression += compression;
        self.conditional += conditional;
        self.unconditional += unconditional;
        self.generation += generation;
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(&self) -> LossBreakdown {
        assert!(self.n > 0, "finish() on an empty accumulator");
        let n = self.n as f64;
        let compression = self.compression / n;
        let conditional = self.conditional / n;
        let unconditional = self.unconditional / n;
        let generation = self.generation / n;
        LossBreakdown {
            compression,
            preservation_conditional_nll: conditional,
            preservation_unconditional_nll: unconditional,
            preservation_gain: unconditional - conditional,
            generation_nll: generation,
            aux_unconditional_nll: unconditional,
            beta: self.beta,
            total: self.beta * compression + conditional + generation + unconditional,
        }
    }
}
