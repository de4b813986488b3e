//! Decoder-only transformer built on the autodiff graph: pre-norm blocks,
//! causal multi-head attention, GELU feed-forward, learned position
//! embeddings, and a tied-nothing output head.
//!
//! All three language models in the system (the frozen encoder, the
//! preservation scorer, the generator) share this implementation and differ
//! only in shape, trainability, and how their input rows are assembled.

use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParamSet};
use crate::tensor::Tensor;
use crate::{sc, Scalar};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmShape {
    pub layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    /// Feed-forward width as a multiple of `d_model`.
    pub ff_mult: usize,
    pub max_seq_len: usize,
}

impl LmShape {
    pub fn validate(&self) -> crate::error::Result<()> {
        if self.layers == 0 || self.d_model == 0 || self.n_heads == 0 || self.ff_mult == 0 {
            return Err(crate::CoreError::Config(
                "language model shape fields must be positive".into(),
            ));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(crate::CoreError::Config(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

struct BlockIds {
    ln1_g: ParamId,
    ln1_b: ParamId,
    wq: ParamId,
    bq: ParamId,
    wk: ParamId,
    bk: ParamId,
    wv: ParamId,
    bv: ParamId,
    wo: ParamId,
    bo: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

/// Handle to one transformer's parameters inside a shared [`ParamSet`].
pub struct LmParams {
    pub shape: LmShape,
    wte: ParamId,
    wpe: ParamId,
    blocks: Vec<BlockIds>,
    lnf_g: ParamId,
    lnf_b: ParamId,
    head_w: ParamId,
    head_b: ParamId,
}

/// Everything a forward pass exposes: the residual stream after every block
/// (the encoder pools these) and the vocabulary logits.
pub struct LmActivations {
    pub layer_states: Vec<Var>,
    pub logits: Var,
}

const INIT_STD: f64 = 0.08;

fn normal_tensor<F: Scalar>(rng: &mut ChaCha12Rng, rows: usize, cols: usize, std: f64) -> Tensor<F> {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sc(z * std)
        })
        .collect();
    Tensor::new(rows, cols, data)
}

/// Registers a fresh transformer under `name.` in the parameter set.
///
/// Weights are seeded-normal, layer norms identity, biases zero. When
/// `trainable` is false every tensor is frozen, which is how the encoder
/// stands in for a fixed pretrained model at this scale.
pub fn init_lm<F: Scalar>(
    params: &mut ParamSet<F>,
    name: &str,
    shape: &LmShape,
    vocab_size: usize,
    rng: &mut ChaCha12Rng,
    trainable: bool,
) -> LmParams {
    let d = shape.d_model;
    let ff = shape.ff_mult * d;
    let mut mat = |params: &mut ParamSet<F>, n: &str, r: usize, c: usize| {
        let t = normal_tensor(rng, r, c, INIT_STD);
        params.add(&format!("{name}.{n}"), t, trainable)
    };
    let zeros =
        |params: &mut ParamSet<F>, n: &str, r: usize, c: usize| {
            params.add(&format!("{name}.{n}"), Tensor::zeros(r, c), trainable)
        };
    let ones = |params: &mut ParamSet<F>, n: &str, c: usize| {
        params.add(&format!("{name}.{n}"), Tensor::full(1, c, F::one()), trainable)
    };

    let wte = mat(params, "wte", vocab_size, d);
    let wpe = mat(params, "wpe", shape.max_seq_len, d);
    let mut blocks = Vec::with_capacity(shape.layers);
    for l in 0..shape.layers {
        let b = |s: &str| format!("block{l}.{s}");
        blocks.push(BlockIds {
            ln1_g: ones(params, &b("ln1.g"), d),
            ln1_b: zeros(params, &b("ln1.b"), 1, d),
            wq: mat(params, &b("attn.wq"), d, d),
            bq: zeros(params, &b("attn.bq"), 1, d),
            wk: mat(params, &b("attn.wk"), d, d),
            bk: zeros(params, &b("attn.bk"), 1, d),
            wv: mat(params, &b("attn.wv"), d, d),
            bv: zeros(params, &b("attn.bv"), 1, d),
            wo: mat(params, &b("attn.wo"), d, d),
            bo: zeros(params, &b("attn.bo"), 1, d),
            ln2_g: ones(params, &b("ln2.g"), d),
            ln2_b: zeros(params, &b("ln2.b"), 1, d),
            w1: mat(params, &b("mlp.w1"), d, ff),
            b1: zeros(params, &b("mlp.b1"), 1, ff),
            w2: mat(params, &b("mlp.w2"), ff, d),
            b2: zeros(params, &b("mlp.b2"), 1, d),
        });
    }
    let lnf_g = ones(params, "lnf.g", d);
    let lnf_b = zeros(params, "lnf.b", 1, d);
    let head_w = mat(params, "head.w", d, vocab_size);
    let head_b = zeros(params, "head.b", 1, vocab_size);

    LmParams {
        shape: shape.clone(),
        wte,
        wpe,
        blocks,
        lnf_g,
        lnf_b,
        head_w,
        head_b,
    }
}

impl LmParams {
    /// Token embedding rows for `ids` (no positions yet).
    pub fn embed_tokens<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        params: &ParamSet<F>,
        ids: &[u32],
    ) -> Var {
        let wte = g.param(params, self.wte);
        g.gather_rows(wte, &ids.iter().map(|&i| i as usize).collect::<Vec<_>>())
    }

    /// Full forward from pre-assembled input rows (token embeddings, possibly
    /// with projected prefix states stacked in front). Adds position
    /// embeddings for positions `0..rows`.
    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        params: &ParamSet<F>,
        input_rows: Var,
    ) -> LmActivations {
        let t = g.value(input_rows).rows();
        assert!(
            t <= self.shape.max_seq_len,
            "sequence length {t} exceeds max_seq_len {}",
            self.shape.max_seq_len
        );
        let wpe = g.param(params, self.wpe);
        let pos = g.gather_rows(wpe, &(0..t).collect::<Vec<_>>());
        let mut x = g.add(input_rows, pos);

        let mut layer_states = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            x = self.block_forward(g, params, block, x);
            layer_states.push(x);
        }

        let lnf_g = g.param(params, self.lnf_g);
        let lnf_b = g.param(params, self.lnf_b);
        let normed = g.layer_norm_rows(x);
        let normed = g.mul_row(normed, lnf_g);
        let normed = g.add_row(normed, lnf_b);
        let head_w = g.param(params, self.head_w);
        let head_b = g.param(params, self.head_b);
        let logits = g.matmul(normed, head_w);
        let logits = g.add_row(logits, head_b);

        LmActivations {
            layer_states,
            logits,
        }
    }

    fn block_forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        params: &ParamSet<F>,
        ids: &BlockIds,
        x: Var,
    ) -> Var {
        let d = self.shape.d_model;
        let dh = self.shape.head_dim();
        let scale = sc::<F>(1.0 / (dh as f64).sqrt());

        let ln1_g = g.param(params, ids.ln1_g);
        let ln1_b = g.param(params, ids.ln1_b);
        let a = g.layer_norm_rows(x);
        let a = g.mul_row(a, ln1_g);
        let a = g.add_row(a, ln1_b);

        let project = |g: &mut Graph<F>, w, b| {
            let wv = g.param(params, w);
            let bv = g.param(params, b);
            let p = g.matmul(a, wv);
            g.add_row(p, bv)
        };
        let q = project(g, ids.wq, ids.bq);
        let k = project(g, ids.wk, ids.bk);
        let v = project(g, ids.wv, ids.bv);

        let mut head_outputs = Vec::with_capacity(self.shape.n_heads);
        for h in 0..self.shape.n_heads {
            let qh = g.slice_cols(q, h * dh, dh);
            let kh = g.slice_cols(k, h * dh, dh);
            let vh = g.slice_cols(v, h * dh, dh);
            let kt = g.transpose(kh);
            let scores = g.matmul(qh, kt);
            let scores = g.scale(scores, scale);
            let weights = g.causal_softmax(scores);
            head_outputs.push(g.matmul(weights, vh));
        }
        let attn = g.concat_cols(&head_outputs);
        let wo = g.param(params, ids.wo);
        let bo = g.param(params, ids.bo);
        let attn = g.matmul(attn, wo);
        let attn = g.add_row(attn, bo);
        let x = g.add(x, attn);

        let ln2_g = g.param(params, ids.ln2_g);
        let ln2_b = g.param(params, ids.ln2_b);
        let m = g.layer_norm_rows(x);
        let m = g.mul_row(m, ln2_g);
        let m = g.add_row(m, ln2_b);
        let w1 = g.param(params, ids.w1);
        let b1 = g.param(params, ids.b1);
        let m = g.matmul(m, w1);
        let m = g.add_row(m, b1);
        let m = g.gelu(m);
        let w2 = g.param(params, ids.w2);
        let b2 = g.param(params, ids.b2);
        let m = g.matmul(m, w2);
        let m = g.add_row(m, b2);
        debug_assert_eq!(g.value(m).cols(), d);
        g.add(x, m)
    }

    /// Zeroes the output head, turning the model into a uniform next-token
    /// predictor. Test hook for closed-form loss values.
    pub fn zero_head<F: Scalar>(&self, params: &mut ParamSet<F>) {
        params.value_mut(self.head_w).fill(F::zero());
        params.value_mut(self.head_b).fill(F::zero());
    }
}
