//! Named parameter storage shared by all model components, plus the Adam
//! optimizer that updates it.

use crate::tensor::Tensor;
use crate::{sc, Scalar};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamId(u32);

pub struct ParamEntry<F> {
    pub name: String,
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
    pub trainable: bool,
    adam_m: Tensor<F>,
    adam_v: Tensor<F>,
}

/// All parameters of a model, in registration order. Names are unique and
/// dot-separated by component (`encoder.block0.attn.wq`, `bneck.mean.w`),
/// which checkpointing and the parameter-count report rely on.
pub struct ParamSet<F> {
    entries: Vec<ParamEntry<F>>,
    by_name: BTreeMap<String, ParamId>,
}

impl<F: Scalar> Default for ParamSet<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> ParamSet<F> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, value: Tensor<F>, trainable: bool) -> ParamId {
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter name {name}"
        );
        let id = ParamId(u32::try_from(self.entries.len()).expect("too many parameters"));
        let (r, c) = value.shape();
        self.entries.push(ParamEntry {
            name: name.to_string(),
            value,
            grad: Tensor::zeros(r, c),
            trainable,
            adam_m: Tensor::zeros(r, c),
            adam_v: Tensor::zeros(r, c),
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn value(&self, id: ParamId) -> &Tensor<F> {
        &self.entries[id.0 as usize].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.entries[id.0 as usize].value
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.entries[id.0 as usize].grad
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id.0 as usize].trainable
    }

    pub fn entries(&self) -> impl Iterator<Item = &ParamEntry<F>> {
        self.entries.iter()
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.fill(F::zero());
        }
    }

    /// Total element count, optionally restricted to trainable parameters.
    pub fn count(&self, trainable_only: bool) -> usize {
        self.entries
            .iter()
            .filter(|e| !trainable_only || e.trainable)
            .map(|e| e.value.len())
            .sum()
    }

    /// Element counts grouped by the leading name component.
    pub fn count_by_component(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let head = e.name.split('.').next().unwrap_or("").to_string();
            *out.entry(head).or_insert(0) += e.value.len();
        }
        out
    }

    /// Snapshot of all values, for best-epoch bookkeeping during training.
    pub fn snapshot(&self) -> Vec<Tensor<F>> {
        self.entries.iter().map(|e| e.value.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor<F>]) {
        assert_eq!(snapshot.len(), self.entries.len(), "snapshot size mismatch");
        for (e, s) in self.entries.iter_mut().zip(snapshot) {
            assert_eq!(e.value.shape(), s.shape());
            e.value = s.clone();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.value.all_finite())
    }
}

/// First-order adaptive-moment optimizer with bias correction. Frozen
/// parameters are skipped entirely; their moment buffers stay zero.
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    steps: u64,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
        }
    }

    pub fn step<F: Scalar>(&mut self, params: &mut ParamSet<F>) {
        self.steps += 1;
        let b1 = sc::<F>(self.beta1);
        let b2 = sc::<F>(self.beta2);
        let lr = sc::<F>(self.learning_rate);
        let eps = sc::<F>(self.eps);
        let one = F::one();
        let corr1 = sc::<F>(1.0 - self.beta1.powi(self.steps as i32));
        let corr2 = sc::<F>(1.0 - self.beta2.powi(self.steps as i32));
        for e in &mut params.entries {
            if !e.trainable {
                continue;
            }
            for i in 0..e.value.len() {
                let g = e.grad.data()[i];
                let m = b1 * e.adam_m.data()[i] + (one - b1) * g;
                let v = b2 * e.adam_v.data()[i] + (one - b2) * g * g;
                e.adam_m.data_mut()[i] = m;
                e.adam_v.data_mut()[i] = v;
                let m_hat = m / corr1;
                let v_hat = v / corr2;
                e.value.data_mut()[i] = e.value.data()[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
