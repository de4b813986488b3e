//! Assembly of the full model: a frozen encoder with trainable per-layer
//! pooling, the bottleneck MLP, and the two prefix-conditioned language
//! models (preservation scorer and generator).
//!
//! The bottleneck length `n` is not a free knob: it equals the encoder layer
//! count, because the compressed code has one row per pooled encoder layer.

use crate::bottleneck::{
    draw_eps, BottleneckSamples, GaussianBottleneck, LOG_STD_MAX, LOG_STD_MIN,
};
use crate::error::{CoreError, Result};
use crate::graph::{Graph, Var};
use crate::lm::{init_lm, LmParams, LmShape};
use crate::params::{ParamId, ParamSet};
use crate::tensor::Tensor;
use crate::text::{ExplanationText, TaskSample};
use crate::tokenizer::Vocab;
use crate::train::TrainConfig;
use crate::{sc, Scalar};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Serialization patterns that linearize a sample (and optionally a
/// candidate) into model input text. `{z_c}`, `{z_o}` and `{x}` are replaced
/// verbatim; no case adjustment happens here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerializeTemplates {
    pub preservation: String,
    pub generator: String,
}

impl Default for SerializeTemplates {
    fn default() -> Self {
        Self {
            preservation: "context: {z_c} output: {z_o}".into(),
            generator: "context: {z_c} output: {z_o} candidate: {x} refined:".into(),
        }
    }
}

pub fn render_template(template: &str, z: &TaskSample, x: Option<&str>) -> String {
    let mut out = template
        .replace("{z_c}", &z.context)
        .replace("{z_o}", &z.output);
    if let Some(x) = x {
        out = out.replace("{x}", x);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: LmShape,
    pub preservation: LmShape,
    pub generator: LmShape,
    /// Width of each bottleneck row.
    pub bottleneck_k: usize,
    /// Hidden width of the bottleneck MLP.
    pub bottleneck_hidden: usize,
    /// Explanations are truncated to this many tokens before encoding.
    pub encoder_max_len: usize,
    #[serde(default)]
    pub templates: SerializeTemplates,
}

impl ModelConfig {
    /// Bottleneck length: one row per encoder layer.
    pub fn bottleneck_n(&self) -> usize {
        self.encoder.layers
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.preservation.validate()?;
        self.generator.validate()?;
        if self.bottleneck_k == 0 || self.bottleneck_hidden == 0 {
            return Err(CoreError::Config("bottleneck widths must be positive".into()));
        }
        if self.encoder_max_len == 0 {
            return Err(CoreError::Config("encoder_max_len must be positive".into()));
        }
        for (name, t, needs_x) in [
            ("preservation", &self.templates.preservation, false),
            ("generator", &self.templates.generator, true),
        ] {
            for ph in ["{z_c}", "{z_o}"] {
                if t.matches(ph).count() != 1 {
                    return Err(CoreError::Config(format!(
                        "{name} template must contain {ph} exactly once"
                    )));
                }
            }
            if needs_x && t.matches("{x}").count() != 1 {
                return Err(CoreError::Config(
                    "generator template must contain {x} exactly once".into(),
                ));
            }
        }
        Ok(())
    }

    /// A small config for tests and toy runs: 2 encoder layers (so n = 2),
    /// d = 32, k = 16.
    pub fn tiny() -> Self {
        let lm = LmShape {
            layers: 2,
            d_model: 32,
            n_heads: 2,
            ff_mult: 2,
            max_seq_len: 128,
        };
        Self {
            encoder: lm.clone(),
            preservation: lm.clone(),
            generator: lm,
            bottleneck_k: 16,
            bottleneck_hidden: 32,
            encoder_max_len: 64,
            templates: SerializeTemplates::default(),
        }
    }
}

/// Pooled per-layer encoder representations: row `i` is the attention-pooled
/// summary of layer `i`'s hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPooledMatrix<F> {
    pub n: usize,
    pub d: usize,
    pub values: Tensor<F>,
}

/// Result of encoding, with the number of tokens dropped to fit the encoder
/// window (zero for in-budget inputs).
#[derive(Debug, Clone)]
pub struct EncodeOutcome<F> {
    pub pooled: LayerPooledMatrix<F>,
    pub truncated_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreservationScores<F> {
    pub conditional_nll: F,
    pub unconditional_nll: F,
    /// `unconditional - conditional`: how many nats the compressed code saves.
    pub gain: F,
}

/// One training record: the sample, a corrupted candidate explanation, and
/// the gold explanation the generator should reconstruct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub sample: TaskSample,
    pub synthetic: ExplanationText,
    pub gold: ExplanationText,
}

struct BottleneckIds {
    w1: ParamId,
    b1: ParamId,
    mean_w: ParamId,
    mean_b: ParamId,
    std_w: ParamId,
    std_b: ParamId,
}

struct PrefixIds {
    w: ParamId,
    b: ParamId,
}

/// The complete model over one shared parameter set.
pub struct EibModel<F> {
    pub cfg: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamSet<F>,
    pub encoder: LmParams,
    pub preservation: LmParams,
    pub generator: LmParams,
    pool_queries: Vec<ParamId>,
    bneck: BottleneckIds,
    pres_prefix: PrefixIds,
    gen_prefix: PrefixIds,
}

#[derive(Clone, Copy)]
pub enum LmKind {
    Preservation,
    Generator,
}

impl<F: Scalar> EibModel<F> {
    /// Builds a freshly initialized model. The encoder is frozen at its
    /// seeded initialization (standing in for a pretrained model at this
    /// scale); pooling queries, the bottleneck MLP, both prefix projections,
    /// and both downstream LMs are trainable. The bottleneck heads start at
    /// zero, so the initial posterior is exactly the standard normal prior.
    pub fn new(cfg: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut params = ParamSet::new();
        let mut rng = crate::seed::stream_rng(seed, "model-init", 0);
        let v = vocab.len();

        let encoder = init_lm(&mut params, "encoder", &cfg.encoder, v, &mut rng, false);
        let pool_queries = (0..cfg.encoder.layers)
            .map(|l| {
                params.add(
                    &format!("pool.q{l}"),
                    Tensor::zeros(1, cfg.encoder.d_model),
                    true,
                )
            })
            .collect();

        let d_enc = cfg.encoder.d_model;
        let hidden = cfg.bottleneck_hidden;
        let k = cfg.bottleneck_k;
        let normal = |rng: &mut ChaCha12Rng, r: usize, c: usize| {
            Tensor::new(
                r,
                c,
                (0..r * c)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        sc(z * 0.08)
                    })
                    .collect(),
            )
        };
        let bneck = BottleneckIds {
            w1: params.add("bneck.w1", normal(&mut rng, d_enc, hidden), true),
            b1: params.add("bneck.b1", Tensor::zeros(1, hidden), true),
            mean_w: params.add("bneck.mean.w", Tensor::zeros(hidden, k), true),
            mean_b: params.add("bneck.mean.b", Tensor::zeros(1, k), true),
            std_w: params.add("bneck.std.w", Tensor::zeros(hidden, k), true),
            std_b: params.add("bneck.std.b", Tensor::zeros(1, k), true),
        };

        let preservation = init_lm(&mut params, "pres", &cfg.preservation, v, &mut rng, true);
        let pres_prefix = PrefixIds {
            w: params.add(
                "pres_prefix.w",
                normal(&mut rng, k, cfg.preservation.d_model),
                true,
            ),
            b: params.add("pres_prefix.b", Tensor::zeros(1, cfg.preservation.d_model), true),
        };
        let generator = init_lm(&mut params, "gen", &cfg.generator, v, &mut rng, true);
        let gen_prefix = PrefixIds {
            w: params.add("gen_prefix.w", normal(&mut rng, k, cfg.generator.d_model), true),
            b: params.add("gen_prefix.b", Tensor::zeros(1, cfg.generator.d_model), true),
        };

        Ok(Self {
            cfg,
            vocab,
            params,
            encoder,
            preservation,
            generator,
            pool_queries,
            bneck,
            pres_prefix,
            gen_prefix,
        })
    }

    // ----- graph-level pieces (training, gradient checks) -----

    /// Encoder forward plus per-layer attention pooling: returns the
    /// `n x d_enc` pooled matrix as a graph node.
    pub fn encode_graph(&self, g: &mut Graph<F>, token_ids: &[u32]) -> Var {
        assert!(!token_ids.is_empty(), "encode_graph on empty token sequence");
        let x = self.encoder.embed_tokens(g, &self.params, token_ids);
        let acts = self.encoder.forward(g, &self.params, x);
        let mut pooled_rows = Vec::with_capacity(acts.layer_states.len());
        for (state, &q) in acts.layer_states.iter().zip(&self.pool_queries) {
            let qv = g.param(&self.params, q);
            let qt = g.transpose(qv);
            let scores = g.matmul(*state, qt);
            let scores_t = g.transpose(scores);
            let weights = g.row_softmax(scores_t);
            pooled_rows.push(g.matmul(weights, *state));
        }
        g.concat_rows(&pooled_rows)
    }

    /// Bottleneck MLP applied per row: shared hidden layer, then mean and
    /// log-std heads, the latter clamped into the safe range.
    pub fn bottleneck_graph(&self, g: &mut Graph<F>, x: Var) -> (Var, Var) {
        let w1 = g.param(&self.params, self.bneck.w1);
        let b1 = g.param(&self.params, self.bneck.b1);
        let h = g.matmul(x, w1);
        let h = g.add_row(h, b1);
        let h = g.tanh(h);

        let mean_w = g.param(&self.params, self.bneck.mean_w);
        let mean_b = g.param(&self.params, self.bneck.mean_b);
        let means = g.matmul(h, mean_w);
        let means = g.add_row(means, mean_b);

        let std_w = g.param(&self.params, self.bneck.std_w);
        let std_b = g.param(&self.params, self.bneck.std_b);
        let log_stds = g.matmul(h, std_w);
        let log_stds = g.add_row(log_stds, std_b);
        let log_stds = g.clamp(log_stds, sc(LOG_STD_MIN), sc(LOG_STD_MAX));
        (means, log_stds)
    }

    /// Projects a bottleneck sample (`n x k`) into prefix states (`n x d`)
    /// for the given language model.
    pub fn prefix_graph(&self, g: &mut Graph<F>, sample: Var, kind: LmKind) -> Var {
        let ids = match kind {
            LmKind::Preservation => &self.pres_prefix,
            LmKind::Generator => &self.gen_prefix,
        };
        let w = g.param(&self.params, ids.w);
        let b = g.param(&self.params, ids.b);
        let p = g.matmul(sample, w);
        g.add_row(p, b)
    }

    /// Teacher-forced NLL of `target` (plus end-of-sequence) given optional
    /// prefix states and a tokenized context. Returns the summed-nats node
    /// and the number of scored positions (`target.len() + 1`).
    pub fn nll_graph(
        &self,
        g: &mut Graph<F>,
        kind: LmKind,
        prefix: Option<Var>,
        ctx: &[u32],
        target: &[u32],
    ) -> (Var, usize) {
        let lm = match kind {
            LmKind::Preservation => &self.preservation,
            LmKind::Generator => &self.generator,
        };
        let mut input = Vec::with_capacity(1 + ctx.len() + target.len());
        input.push(self.vocab.bos_id());
        input.extend_from_slice(ctx);
        input.extend_from_slice(target);

        let tok_rows = lm.embed_tokens(g, &self.params, &input);
        let (rows, p_len) = match prefix {
            Some(p) => (g.concat_rows(&[p, tok_rows]), g.value(p).rows()),
            None => (tok_rows, 0),
        };
        let acts = lm.forward(g, &self.params, rows);

        // Position i of the token stream predicts the next token; the last
        // position predicts end-of-sequence. Only target positions score.
        let mut next: Vec<u32> = Vec::with_capacity(ctx.len() + target.len() + 1);
        next.extend_from_slice(ctx);
        next.extend_from_slice(target);
        next.push(self.vocab.eos_id());
        let targets: Vec<(usize, u32)> = (ctx.len()..next.len())
            .map(|i| (p_len + i, next[i]))
            .collect();
        let count = targets.len();
        (g.cross_entropy_sum(acts.logits, &targets), count)
    }

    /// Serialized preservation target for `z`, truncated (context before
    /// output) to fit the preservation window alongside the prefix.
    pub fn preservation_target_ids(&self, z: &TaskSample) -> Vec<u32> {
        let budget = self
            .cfg
            .preservation
            .max_seq_len
            .saturating_sub(self.cfg.bottleneck_n() + 1);
        self.fitted_ids(&self.cfg.templates.preservation, z, None, budget)
    }

    /// Serialized generator context for `(z, x)`, truncated (candidate
    /// first, then sample) so context plus gold fits the generator window.
    pub fn generator_ctx_ids(&self, z: &TaskSample, x: &str, reserved: usize) -> Vec<u32> {
        let budget = self
            .cfg
            .generator
            .max_seq_len
            .saturating_sub(self.cfg.bottleneck_n() + 1 + reserved);
        self.fitted_ids(&self.cfg.templates.generator, z, Some(x), budget)
    }

    fn fitted_ids(
        &self,
        template: &str,
        z: &TaskSample,
        x: Option<&str>,
        budget: usize,
    ) -> Vec<u32> {
        use crate::tokenizer::{detokenize, word_tokenize};
        let render = |zc: &str, zo: &str, xs: Option<&str>| {
            let fitted = TaskSample {
                context: zc.to_string(),
                output: zo.to_string(),
                ..z.clone()
            };
            render_template(template, &fitted, xs)
        };
        let full = render(&z.context, &z.output, x);
        let ids = self.vocab.encode(&full);
        if ids.len() <= budget {
            return ids;
        }
        // Over budget: shed candidate tokens first, then context, then
        // output, re-rendering each time. Word-level tokens survive the
        // detokenize/tokenize round trip, so lengths shrink monotonically.
        let mut x_toks = x.map(|s| word_tokenize(s)).unwrap_or_default();
        let mut c_toks = word_tokenize(&z.context);
        let mut o_toks = word_tokenize(&z.output);
        loop {
            let rendered = render(
                &detokenize(&c_toks),
                &detokenize(&o_toks),
                x.map(|_| detokenize(&x_toks)).as_deref(),
            );
            let ids = self.vocab.encode(&rendered);
            if ids.len() <= budget {
                return ids;
            }
            if !x_toks.is_empty() {
                x_toks.pop();
            } else if c_toks.len() > 1 {
                c_toks.pop();
            } else if o_toks.len() > 1 {
                o_toks.pop();
            } else {
                // Nothing left to shed; return the floor and let the caller's
                // length assertion fire if the window is truly impossible.
                return ids;
            }
        }
    }

    /// Candidate-explanation token ids for the encoder, truncated to the
    /// encoder window. Returns the ids and how many tokens were dropped.
    pub fn encoder_input_ids(&self, e: &ExplanationText) -> (Vec<u32>, usize) {
        let mut ids = self.vocab.encode(e.text());
        let dropped = ids.len().saturating_sub(self.cfg.encoder_max_len);
        ids.truncate(self.cfg.encoder_max_len);
        (ids, dropped)
    }

    /// Full per-record loss graph. Returns nodes for the four loss terms;
    /// the scalarized total is `beta * compression + conditional + generation
    /// + unconditional`, with the unconditional term doubling as the
    /// auxiliary language-model loss.
    pub fn record_loss_graph(
        &self,
        g: &mut Graph<F>,
        record: &TrainRecord,
        cfg: &TrainConfig,
        mc_seed: u64,
    ) -> RecordLossVars {
        let (enc_ids, _) = self.encoder_input_ids(&record.synthetic);
        let x = self.encode_graph(g, &enc_ids);
        let (means, log_stds) = self.bottleneck_graph(g, x);
        let compression = g.gaussian_kl(means, log_stds);

        let n = self.cfg.bottleneck_n();
        let k = self.cfg.bottleneck_k;
        let eps = draw_eps::<F>(mc_seed, cfg.mc_samples, n, k);

        let pres_target = self.preservation_target_ids(&record.sample);
        let gold_ids = self.vocab.encode(record.gold.text());
        let gen_ctx =
            self.generator_ctx_ids(&record.sample, record.synthetic.text(), gold_ids.len() + 1);

        let m_inv = F::one() / sc::<F>(cfg.mc_samples as f64);
        let mut cond_terms = Vec::with_capacity(cfg.mc_samples);
        let mut gen_terms = Vec::with_capacity(cfg.mc_samples);
        let mut gen_tokens = 0;
        for e in eps {
            let sample = g.reparam_sample(means, log_stds, e);
            let pres_prefix = self.prefix_graph(g, sample, LmKind::Preservation);
            let (cond, _) =
                self.nll_graph(g, LmKind::Preservation, Some(pres_prefix), &[], &pres_target);
            cond_terms.push((cond, m_inv));

            let gen_prefix = self.prefix_graph(g, sample, LmKind::Generator);
            let (gen, count) =
                self.nll_graph(g, LmKind::Generator, Some(gen_prefix), &gen_ctx, &gold_ids);
            gen_tokens = count;
            gen_terms.push((gen, m_inv));
        }
        let conditional = g.weighted_sum(&cond_terms);
        let generation = g.weighted_sum(&gen_terms);
        let (unconditional, _) =
            self.nll_graph(g, LmKind::Preservation, None, &[], &pres_target);

        let total = g.weighted_sum(&[
            (compression, sc(cfg.beta)),
            (conditional, F::one()),
            (generation, F::one()),
            (unconditional, F::one()),
        ]);

        RecordLossVars {
            compression,
            conditional,
            unconditional,
            generation,
            total,
            generation_tokens: gen_tokens,
            preservation_tokens: pres_target.len() + 1,
        }
    }

    // ----- value-level operations -----

    /// Encodes an explanation into the pooled per-layer matrix.
    pub fn encode_layers(&self, e: &ExplanationText) -> Result<EncodeOutcome<F>> {
        let (ids, truncated_tokens) = self.encoder_input_ids(e);
        if ids.is_empty() {
            return Err(CoreError::EmptyText("explanation for encoding".into()));
        }
        let mut g = Graph::new();
        let x = self.encode_graph(&mut g, &ids);
        let values = g.value(x).clone();
        if !values.all_finite() {
            return Err(CoreError::NonFinite("pooled encoder output".into()));
        }
        Ok(EncodeOutcome {
            pooled: LayerPooledMatrix {
                n: values.rows(),
                d: values.cols(),
                values,
            },
            truncated_tokens,
        })
    }

    /// Maps pooled representations to posterior parameters.
    pub fn bottleneck_params(&self, x: &LayerPooledMatrix<F>) -> GaussianBottleneck<F> {
        let mut g = Graph::new();
        let xv = g.leaf(x.values.clone());
        let (means, log_stds) = self.bottleneck_graph(&mut g, xv);
        GaussianBottleneck::new(g.value(means).clone(), g.value(log_stds).clone())
    }

    /// Conditional and unconditional NLLs of the serialized sample under the
    /// preservation model, averaged over the provided bottleneck samples.
    pub fn preservation_scores(
        &self,
        t: &BottleneckSamples<F>,
        z: &TaskSample,
    ) -> PreservationScores<F> {
        assert!(!t.samples.is_empty(), "preservation_scores needs samples");
        let target = self.preservation_target_ids(z);
        let mut g = Graph::new();
        let m_inv = F::one() / sc::<F>(t.samples.len() as f64);
        let mut terms = Vec::new();
        for s in &t.samples {
            let sv = g.leaf(s.clone());
            let prefix = self.prefix_graph(&mut g, sv, LmKind::Preservation);
            let (nll, _) =
                self.nll_graph(&mut g, LmKind::Preservation, Some(prefix), &[], &target);
            terms.push((nll, m_inv));
        }
        let cond = g.weighted_sum(&terms);
        let (unc, _) = self.nll_graph(&mut g, LmKind::Preservation, None, &[], &target);
        let conditional_nll = g.value(cond).item();
        let unconditional_nll = g.value(unc).item();
        PreservationScores {
            conditional_nll,
            unconditional_nll,
            gain: unconditional_nll - conditional_nll,
        }
    }

    /// Teacher-forced NLL (nats per sequence, end-of-sequence included) of
    /// the gold explanation given prefix states and the serialized `(z, x)`
    /// context, averaged over the bottleneck samples.
    pub fn generation_loss(
        &self,
        t: &BottleneckSamples<F>,
        z: &TaskSample,
        x: &ExplanationText,
        gold: &ExplanationText,
    ) -> F {
        assert!(!t.samples.is_empty(), "generation_loss needs samples");
        let gold_ids = self.vocab.encode(gold.text());
        let ctx = self.generator_ctx_ids(z, x.text(), gold_ids.len() + 1);
        let mut g = Graph::new();
        let m_inv = F::one() / sc::<F>(t.samples.len() as f64);
        let mut terms = Vec::new();
        for s in &t.samples {
            let sv = g.leaf(s.clone());
            let prefix = self.prefix_graph(&mut g, sv, LmKind::Generator);
            let (nll, _) =
                self.nll_graph(&mut g, LmKind::Generator, Some(prefix), &ctx, &gold_ids);
            terms.push((nll, m_inv));
        }
        let avg = g.weighted_sum(&terms);
        g.value(avg).item()
    }

    /// Batch-averaged loss breakdown; per-record Monte-Carlo seeds derive
    /// from `seed_base` and the record's position.
    pub fn total_loss(
        &self,
        batch: &[TrainRecord],
        cfg: &TrainConfig,
        seed_base: u64,
    ) -> Result<crate::loss::LossBreakdown> {
        if batch.is_empty() {
            return Err(CoreError::Config("total_loss on empty batch".into()));
        }
        let mut acc = crate::loss::BreakdownAccumulator::new(cfg.beta);
        for (i, r) in batch.iter().enumerate() {
            let mut g = Graph::new();
            let vars =
                self.record_loss_graph(&mut g, r, cfg, crate::seed::derive_seed(seed_base, "mc", i as u64));
            acc.add(&g, &vars);
        }
        Ok(acc.finish())
    }
}

/// Graph nodes for one record's loss terms plus scored-token counts for
/// per-token reporting.
pub struct RecordLossVars {
    pub compression: Var,
    pub conditional: Var,
    pub unconditional: Var,
    pub generation: Var,
    pub total: Var,
    pub generation_tokens: usize,
    pub preservation_tokens: usize,
}
