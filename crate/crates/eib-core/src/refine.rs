//! Inference: compress a candidate explanation and decode the refined one.

use crate::decode::{pick_next, DecodeConfig};
use crate::error::{CoreError, Result};
use crate::graph::Graph;
use crate::model::{EibModel, LmKind};
use crate::tensor::Tensor;
use crate::text::{ExplanationText, TaskSample};
use crate::Scalar;

/// Autoregressive decoding from `[prefix] + <bos> + ctx`, emitting until
/// end-of-sequence or `cfg.max_len`. Recomputes the forward pass per step;
/// sequences here are short enough that a KV cache would be noise.
pub fn decode_tokens<F: Scalar>(
    model: &EibModel<F>,
    kind: LmKind,
    prefix: Option<&Tensor<F>>,
    ctx: &[u32],
    cfg: &DecodeConfig,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Vec<u32> {
    let lm = match kind {
        LmKind::Preservation => &model.preservation,
        LmKind::Generator => &model.generator,
    };
    let prefix_rows = prefix.map_or(0, Tensor::rows);
    let mut emitted: Vec<u32> = Vec::new();
    for _ in 0..cfg.max_len {
        let len = prefix_rows + 1 + ctx.len() + emitted.len();
        if len >= lm.shape.max_seq_len {
            break;
        }
        let mut g = Graph::new();
        let mut input = Vec::with_capacity(1 + ctx.len() + emitted.len());
        input.push(model.vocab.bos_id());
        input.extend_from_slice(ctx);
        input.extend_from_slice(&emitted);
        let tok_rows = lm.embed_tokens(&mut g, &model.params, &input);
        let rows = match prefix {
            Some(p) => {
                let pv = g.leaf(p.clone());
                g.concat_rows(&[pv, tok_rows])
            }
            None => tok_rows,
        };
        let acts = lm.forward(&mut g, &model.params, rows);
        let logits = g.value(acts.logits);
        let last = logits.row(logits.rows() - 1);
        let next = pick_next(last, cfg.strategy, cfg.top_p, rng) as u32;
        if next == model.vocab.eos_id() {
            break;
        }
        emitted.push(next);
    }
    emitted
}

/// Refines a candidate explanation for sample `z`.
///
/// The candidate is encoded and compressed; decoding conditions on the
/// posterior mean (no sampling at inference) projected into generator prefix
/// states, followed by the serialized `(z, candidate)` context. Greedy by
/// default; the strategy and budget come from `cfg`.
pub fn refine<F: Scalar>(
    model: &EibModel<F>,
    candidate: &ExplanationText,
    z: &TaskSample,
    cfg: &DecodeConfig,
) -> Result<ExplanationText> {
    cfg.validate()?;
    z.validate()?;
    let outcome = model.encode_layers(candidate)?;
    let posterior = model.bottleneck_params(&outcome.pooled);

    let mut g = Graph::new();
    let t = g.leaf(posterior.means.clone());
    let prefix_var = model.prefix_graph(&mut g, t, LmKind::Generator);
    let prefix = g.value(prefix_var).clone();
    if !prefix.all_finite() {
        return Err(CoreError::NonFinite("generator prefix states".into()));
    }

    let ctx = model.generator_ctx_ids(z, candidate.text(), cfg.max_len + 1);
    let mut rng = crate::seed::stream_rng(cfg.seed, "refine", 0);
    let ids = decode_tokens(model, LmKind::Generator, Some(&prefix), &ctx, cfg, &mut rng);
    let text = model.vocab.decode(&ids)?;
    if crate::text::normalize_ws(&text).is_empty() {
        return Err(CoreError::EmptyText(
            "refiner emitted no tokens before end-of-sequence".into(),
        ));
    }
    ExplanationText::new(&text)
}
