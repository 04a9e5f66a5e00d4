//! Shared bidirectional-LSTM encoder and attention/copy decoder with a
//! K x 4d domain head.
//!
//! A single encoder and a single decoder serve every domain. The domain
//! matrix `W_T` maps each decoder step's `[s_j, c_j]` (and the encoder
//! boundary state) to scores over the K domains; training penalizes the
//! squared distance between those score softmaxes and the one-hot gold
//! domain on top of the token negative log-likelihood. Token distributions
//! run over the vocabulary plus one copy event per source position, scored
//! by the attention logits.

mod checkpoint;
mod graph;

pub use checkpoint::{load_checkpoint, save_checkpoint};

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    grad_with_loss, AutodiffError, Layout, LossFn, NodeId, ParamVector, Tape,
};
use crate::data::{Example, TaskId, Vocab};
use crate::scalar::Scalar;

use graph::{
    decode_step_graph, decoder_init, encode_graph, encoder_domain_logits, gold_event_indices,
    Blocks, EncGraph,
};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch} on example `{example_id}`")]
    NonFiniteLoss { epoch: usize, example_id: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which decoder-side domain probabilities feed the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecRegMode {
    /// Mean of the per-step domain softmaxes.
    #[default]
    MeanSteps,
    /// Only the final step's softmax.
    FinalStep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Encoder hidden size per direction (`d`).
    pub hidden_dim: usize,
    pub embed_dim: usize,
    /// Number of registered domains (`K`).
    pub num_domains: usize,
    pub vocab: Vocab,
    pub max_decode_len: usize,
    /// Weights are initialized i.i.d. uniform on `[-init_range, init_range]`.
    pub init_range: f64,
    /// Multiplier on both 0.5*||.||^2 domain penalties.
    pub reg_weight: f64,
    pub dec_reg: DecRegMode,
}

impl ModelConfig {
    pub fn new(vocab: Vocab, num_domains: usize) -> Self {
        ModelConfig {
            hidden_dim: 200,
            embed_dim: 100,
            num_domains,
            vocab,
            max_decode_len: 100,
            init_range: 1.0,
            reg_weight: 1.0,
            dec_reg: DecRegMode::MeanSteps,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_dim == 0 || self.embed_dim == 0 || self.num_domains == 0 {
            return Err(ModelError::Argument(
                "hidden_dim, embed_dim and num_domains must be positive".into(),
            ));
        }
        if self.max_decode_len < 1 {
            return Err(ModelError::Argument("max_decode_len must be >= 1".into()));
        }
        Ok(())
    }

    /// Segment table for this configuration.
    pub fn layout(&self) -> Arc<Layout> {
        let d = self.hidden_dim;
        let e = self.embed_dim;
        let v = self.vocab.size();
        let k = self.num_domains;
        let mut b = Layout::builder();
        b.push("embed", v, e);
        for (prefix, hid, input) in
            [("enc_f", d, e), ("enc_b", d, e), ("dec", 2 * d, e)]
        {
            b.push(&format!("{prefix}.w_xu"), hid, input);
            b.push(&format!("{prefix}.w_hu"), hid, hid);
            b.push(&format!("{prefix}.b_u"), hid, 1);
            b.push(&format!("{prefix}.w_xi"), hid, input);
            b.push(&format!("{prefix}.w_hi"), hid, hid);
            b.push(&format!("{prefix}.b_i"), hid, 1);
            b.push(&format!("{prefix}.w_xo"), hid, input);
            b.push(&format!("{prefix}.w_ho"), hid, hid);
            b.push(&format!("{prefix}.b_o"), hid, 1);
        }
        b.push("attn.w", 2 * d, 2 * d);
        b.push("out.u_w", v, 4 * d);
        b.push("domain.w_t", k, 4 * d);
        b.push("dec_init.w_s", 2 * d, 2 * d);
        b.build()
    }
}

/// Per-position encoder states plus the direction finals.
#[derive(Debug, Clone)]
pub struct EncoderStates {
    /// `n` vectors of length `2d` (forward || backward).
    pub states: Vec<Vec<f64>>,
    pub fwd_final: Vec<f64>,
    pub bwd_final: Vec<f64>,
    /// Vocabulary id of each source token (unknowns mapped to `<unk>`).
    pub src_ids: Vec<usize>,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Raw and softmaxed domain scores for one state.
#[derive(Debug, Clone)]
pub struct DomainScores {
    pub raw: Vec<f64>,
    pub probs: Vec<f64>,
}

/// One decoder step. `init_decoder` fills only `state` (the init projection)
/// and a zero `cell`; the attention/output fields are populated by
/// `decode_step`.
#[derive(Debug, Clone)]
pub struct DecoderStep {
    pub state: Vec<f64>,
    pub cell: Vec<f64>,
    pub context: Vec<f64>,
    /// Attention scores `e_{j,i}`, one per source position.
    pub attention: Vec<f64>,
    /// Distribution over `V + n` events (vocabulary then copy positions).
    pub token_dist: Vec<f64>,
    pub domain: DomainScores,
}

fn source_ids(vocab: &Vocab, source: &[String]) -> Vec<usize> {
    source.iter().map(|t| vocab.lookup(t)).collect()
}

/// Draws every weight i.i.d. uniform on `[-init_range, init_range]`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParamVector<f64>, ModelError> {
    config.validate()?;
    let layout = config.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = config.init_range;
    let values: Vec<f64> = (0..layout.total_len()).map(|_| rng.gen_range(-r..=r)).collect();
    Ok(ParamVector::new(layout, values).expect("layout length matches generated values"))
}

/// Exact parameter counts for the architecture family, keyed by method name.
///
/// Only `z-shot` is instantiated by this crate; the others are the closed
/// forms documented in the README. Shared pieces: `lstm(in, hid) =
/// 3 (hid*in + hid^2 + hid)`, `enc = 2 lstm(e, d)`, `dec = lstm(e, 2d)`,
/// `attn = w_s = 4d^2`, `u_w = 4dV`, `w_t = 4dK`, `embed = Ve`.
pub fn count_params(config: &ModelConfig) -> BTreeMap<String, u64> {
    let d = config.hidden_dim as u64;
    let e = config.embed_dim as u64;
    let v = config.vocab.size() as u64;
    let k = config.num_domains as u64;

    let lstm = |input: u64, hidden: u64| 3 * (hidden * input + hidden * hidden + hidden);
    let embed = v * e;
    let enc = 2 * lstm(e, d);
    let dec = lstm(e, 2 * d);
    let attn = 4 * d * d;
    let w_s = 4 * d * d;
    let u_w = 4 * d * v;
    let w_t = 4 * d * k;

    let o2o = embed + enc + dec + attn + u_w + w_s;
    let zshot = o2o + w_t;
    // One-hot domain vector appended to the decoder input (not learned):
    // each decoder gate's input matrix grows by 2d x K.
    let e2d = o2o + 3 * (2 * d) * k;
    // Shared encoder, one decoder stack per domain.
    let o2m = embed + enc + k * (dec + attn + u_w + w_s);
    // Per-domain encoders plus one shared encoder, one decoder stack per domain.
    let m2m = embed + (k + 1) * enc + k * (dec + attn + u_w + w_s);

    let mut out = BTreeMap::new();
    out.insert("o2o".to_string(), o2o);
    out.insert("o2m".to_string(), o2m);
    out.insert("m2m".to_string(), m2m);
    out.insert("e2d".to_string(), e2d);
    out.insert("z-shot".to_string(), zshot);
    out
}

/// Runs the bidirectional recurrences over one source sequence.
pub fn encode(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    example: &Example,
) -> Result<EncoderStates, ModelError> {
    let n = example.source.len();
    if n == 0 || n > config.vocab.max_source_len() {
        return Err(ModelError::Argument(format!(
            "source length {n} outside [1, {}]",
            config.vocab.max_source_len()
        )));
    }
    let blocks = Blocks::from_layout(params.layout(), config.embed_dim);
    let mut tape = Tape::new(params.values().to_vec());
    let ids = source_ids(&config.vocab, &example.source);
    let enc = encode_graph(&mut tape, &blocks, &ids);
    Ok(EncoderStates {
        states: enc.states.iter().map(|&s| values_f64(&tape, s)).collect(),
        fwd_final: values_f64(&tape, enc.fwd_final),
        bwd_final: values_f64(&tape, enc.bwd_final),
        src_ids: ids,
    })
}

fn values_f64(tape: &Tape<f64>, id: NodeId) -> Vec<f64> {
    tape.value(id).to_vec()
}

/// Initial decoder state `s_1 = tanh(W_s [fwd_final, bwd_final])`.
pub fn init_decoder(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    enc: &EncoderStates,
) -> DecoderStep {
    let blocks = Blocks::from_layout(params.layout(), config.embed_dim);
    let mut tape: Tape<f64> = Tape::new(params.values().to_vec());
    let finals = {
        let mut v = enc.fwd_final.clone();
        v.extend_from_slice(&enc.bwd_final);
        tape.constant(v)
    };
    let w_s = params.layout().segment("dec_init.w_s").expect("model layout");
    let w_s_node = tape.param(w_s.offset, w_s.len());
    let proj = tape.matvec(w_s_node, finals);
    let s1 = tape.tanh(proj);
    let dim = tape.value(s1).len();
    let _ = blocks;
    DecoderStep {
        state: values_f64(&tape, s1),
        cell: vec![0.0; dim],
        context: Vec::new(),
        attention: Vec::new(),
        token_dist: Vec::new(),
        domain: DomainScores { raw: Vec::new(), probs: Vec::new() },
    }
}

/// Advances the decoder one step on `prev_token` (a vocabulary index or a
/// copy index `V + i`, which embeds the source token at position `i`).
pub fn decode_step(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    prev: &DecoderStep,
    prev_token: usize,
    enc: &EncoderStates,
) -> Result<DecoderStep, ModelError> {
    let v = config.vocab.size();
    let n = enc.len();
    if prev_token >= v + n {
        return Err(ModelError::Argument(format!(
            "prev_token {prev_token} outside vocabulary ({v}) + copy range ({n})"
        )));
    }
    let embed_id = if prev_token >= v { enc.src_ids[prev_token - v] } else { prev_token };

    let blocks = Blocks::from_layout(params.layout(), config.embed_dim);
    let mut tape: Tape<f64> = Tape::new(params.values().to_vec());
    let state_nodes: Vec<NodeId> =
        enc.states.iter().map(|s| tape.constant(s.clone())).collect();
    let matrix = tape.stack_rows(&state_nodes);
    let enc_graph = EncGraph {
        states: state_nodes,
        matrix,
        fwd_final: 0,
        bwd_final: 0,
        finals: 0,
        src_ids: enc.src_ids.clone(),
    };
    let prev_state = tape.constant(prev.state.clone());
    let prev_cell =
        if prev.cell.iter().all(|&c| c == 0.0) { None } else { Some(tape.constant(prev.cell.clone())) };
    let step = decode_step_graph(&mut tape, &blocks, &enc_graph, prev_state, prev_cell, embed_id);
    let dist = tape.softmax(step.full_logits);
    let dom_probs = tape.softmax(step.domain_logits);
    Ok(DecoderStep {
        state: values_f64(&tape, step.state),
        cell: values_f64(&tape, step.cell),
        context: values_f64(&tape, step.context),
        attention: values_f64(&tape, step.scores),
        token_dist: values_f64(&tape, dist),
        domain: DomainScores {
            raw: values_f64(&tape, step.domain_logits),
            probs: values_f64(&tape, dom_probs),
        },
    })
}

/// Teacher-forced loss for one example:
/// `-sum_j log p(y_j) + w/2 ||e(t_k) - q_dec||^2 + w/2 ||e(t_k) - q_enc||^2`.
///
/// The copy-aware gold event sums probability over the vocabulary index and
/// every source position holding the gold token.
pub struct ModelLoss {
    config: ModelConfig,
    blocks: Blocks,
}

impl ModelLoss {
    pub fn new(config: &ModelConfig) -> Self {
        let layout = config.layout();
        ModelLoss {
            config: config.clone(),
            blocks: Blocks::from_layout(&layout, config.embed_dim),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn build_loss<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        example: &Example,
    ) -> Result<NodeId, AutodiffError> {
        let cfg = &self.config;
        let vocab = &cfg.vocab;
        if example.target.is_empty() {
            return Err(AutodiffError::Argument(format!(
                "example `{}` has an empty target",
                example.id
            )));
        }
        let ids = source_ids(vocab, &example.source);
        let enc = encode_graph(tape, &self.blocks, &ids);
        let s1 = decoder_init(tape, &self.blocks, &enc);

        // Encoder-side domain prediction at the source boundary.
        let enc_dom_logits = encoder_domain_logits(tape, &self.blocks, &enc, s1);
        let q_enc = tape.softmax(enc_dom_logits);

        let mut state = s1;
        let mut cell: Option<NodeId> = None;
        let mut nll: Option<NodeId> = None;
        let mut dec_prob_sum: Option<NodeId> = None;
        let mut dec_prob_last: Option<NodeId> = None;
        let m = example.target.len();

        for j in 0..m {
            let prev_vocab_id = if j == 0 {
                Vocab::EOS
            } else {
                vocab.lookup(&example.target[j - 1])
            };
            let step = decode_step_graph(tape, &self.blocks, &enc, state, cell, prev_vocab_id);
            state = step.state;
            cell = Some(step.cell);

            let gold = &example.target[j];
            if !vocab.contains(gold) && !example.source.iter().any(|s| s == gold) {
                log::warn!(
                    "coverage: token `{gold}` of example `{}` is neither in the vocabulary nor the source",
                    example.id
                );
            }
            let event = gold_event_indices(vocab, gold, &example.source);
            let lse_all = tape.logsumexp(step.full_logits);
            let lse_event = tape.logsumexp_subset(step.full_logits, &event);
            let step_nll = tape.sub(lse_all, lse_event);
            nll = Some(match nll {
                Some(acc) => tape.add(acc, step_nll),
                None => step_nll,
            });

            let probs = tape.softmax(step.domain_logits);
            dec_prob_sum = Some(match dec_prob_sum {
                Some(acc) => tape.add(acc, probs),
                None => probs,
            });
            dec_prob_last = Some(probs);
        }

        let q_dec = match cfg.dec_reg {
            DecRegMode::MeanSteps => {
                tape.scale(dec_prob_sum.expect("m >= 1"), 1.0 / m as f64)
            }
            DecRegMode::FinalStep => dec_prob_last.expect("m >= 1"),
        };

        let mut one_hot = vec![S::zero(); cfg.num_domains];
        one_hot[example.domain.index()] = S::one();
        let gold_node = tape.constant(one_hot);

        let reg = |tape: &mut Tape<S>, q: NodeId| -> NodeId {
            let diff = tape.sub(gold_node, q);
            let sq = tape.dot(diff, diff);
            tape.scale(sq, 0.5 * cfg.reg_weight)
        };
        let reg_dec = reg(tape, q_dec);
        let reg_enc = reg(tape, q_enc);

        let with_dec = tape.add(nll.expect("m >= 1"), reg_dec);
        Ok(tape.add(with_dec, reg_enc))
    }
}

impl<S: Scalar> LossFn<S> for ModelLoss {
    fn example_loss(&self, tape: &mut Tape<S>, example: &Example) -> Result<NodeId, AutodiffError> {
        self.build_loss(tape, example)
    }
}

/// Loss value for one example at the given parameters.
pub fn sequence_loss(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    example: &Example,
) -> Result<f64, ModelError> {
    let loss = ModelLoss::new(config);
    let mut tape = Tape::new(params.values().to_vec());
    let node = LossFn::<f64>::example_loss(&loss, &mut tape, example)?;
    Ok(tape.scalar_value(node))
}

/// Summed raw domain scores over the decoder steps (teacher-forced when the
/// example has a target, greedy otherwise).
pub fn task_scores(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    example: &Example,
) -> Result<Vec<f64>, ModelError> {
    let blocks = Blocks::from_layout(params.layout(), config.embed_dim);
    let mut tape: Tape<f64> = Tape::new(params.values().to_vec());
    let ids = source_ids(&config.vocab, &example.source);
    if ids.is_empty() || ids.len() > config.vocab.max_source_len() {
        return Err(ModelError::Argument("source length out of range".into()));
    }
    let enc = encode_graph(&mut tape, &blocks, &ids);
    let s1 = decoder_init(&mut tape, &blocks, &enc);

    let mut total = vec![0.0; config.num_domains];
    let mut state = s1;
    let mut cell: Option<NodeId> = None;

    if example.target.is_empty() {
        // Greedy prefix: follow argmax tokens, collecting scores at each
        // executed step (including the halting one).
        let mut prev = Vocab::EOS;
        for _ in 0..config.max_decode_len {
            let step = decode_step_graph(&mut tape, &blocks, &enc, state, cell, prev);
            state = step.state;
            cell = Some(step.cell);
            for (t, &s) in total.iter_mut().zip(tape.value(step.domain_logits)) {
                *t += s;
            }
            let choice = argmax_skipping_pad(tape.value(step.full_logits));
            if choice == Vocab::EOS {
                break;
            }
            prev = if choice >= config.vocab.size() {
                enc.src_ids[choice - config.vocab.size()]
            } else {
                choice
            };
        }
    } else {
        for j in 0..example.target.len() {
            let prev = if j == 0 {
                Vocab::EOS
            } else {
                config.vocab.lookup(&example.target[j - 1])
            };
            let step = decode_step_graph(&mut tape, &blocks, &enc, state, cell, prev);
            state = step.state;
            cell = Some(step.cell);
            for (t, &s) in total.iter_mut().zip(tape.value(step.domain_logits)) {
                *t += s;
            }
        }
    }
    Ok(total)
}

/// `argmax_k` of the summed per-step domain scores; ties break to the lowest
/// index.
pub fn predict_task(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    example: &Example,
) -> Result<TaskId, ModelError> {
    let scores = task_scores(params, config, example)?;
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    Ok(TaskId(best))
}

fn argmax_skipping_pad(logits: &[f64]) -> usize {
    let mut best = usize::MAX;
    for (i, &x) in logits.iter().enumerate() {
        if i == Vocab::PAD {
            continue;
        }
        if best == usize::MAX || x > logits[best] {
            best = i;
        }
    }
    best
}

/// Greedy decoding: argmax event per step, copy events resolve to the source
/// token at that position; stops at `<eos>` or `max_decode_len`. The padding
/// token is never emitted.
pub fn greedy_decode(
    params: &ParamVector<f64>,
    config: &ModelConfig,
    source: &[String],
) -> Result<Vec<String>, ModelError> {
    if source.is_empty() {
        return Err(ModelError::Argument("source must be non-empty".into()));
    }
    if source.len() > config.vocab.max_source_len() {
        return Err(ModelError::Argument(format!(
            "source length {} exceeds copy block {}",
            source.len(),
            config.vocab.max_source_len()
        )));
    }
    let blocks = Blocks::from_layout(params.layout(), config.embed_dim);
    let mut tape: Tape<f64> = Tape::new(params.values().to_vec());
    let ids = source_ids(&config.vocab, source);
    let enc = encode_graph(&mut tape, &blocks, &ids);
    let s1 = decoder_init(&mut tape, &blocks, &enc);

    let mut out = Vec::new();
    let mut state = s1;
    let mut cell: Option<NodeId> = None;
    let mut prev = Vocab::EOS;
    for _ in 0..config.max_decode_len {
        let step = decode_step_graph(&mut tape, &blocks, &enc, state, cell, prev);
        state = step.state;
        cell = Some(step.cell);
        let choice = argmax_skipping_pad(tape.value(step.full_logits));
        if choice == Vocab::EOS {
            break;
        }
        if choice >= config.vocab.size() {
            let pos = choice - config.vocab.size();
            out.push(source[pos].clone());
            prev = enc.src_ids[pos];
        } else {
            out.push(config.vocab.token(choice).to_string());
            prev = choice;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Initial learning rate; epoch `e` uses `lr0 * 2^-e`.
    pub lr0: f64,
    /// Per-example gradient-norm clip.
    pub clip_norm: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { epochs: 15, lr0: 0.5, clip_norm: 5.0 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamVector<f64>,
    /// Mean per-example loss seen in each epoch (measured before each update).
    pub epoch_losses: Vec<f64>,
}

/// Plain per-example SGD in a seeded shuffled order per epoch, learning rate
/// halving each epoch, gradient-norm clipping.
pub fn train(
    params: ParamVector<f64>,
    train_set: &[Example],
    config: &ModelConfig,
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainOutcome, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::Model(ModelError::Argument("empty training set".into())));
    }
    let loss_fn = ModelLoss::new(config);
    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epoch_losses = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        let lr = opts.lr0 * 0.5f64.powi(epoch as i32);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let example = &train_set[i];
            let (mut g, loss) =
                grad_with_loss(&loss_fn, &params, std::slice::from_ref(example)).map_err(
                    |e| match e {
                        AutodiffError::NumericOverflow { example_id } => {
                            TrainError::NonFiniteLoss { epoch, example_id }
                        }
                        other => TrainError::Model(ModelError::Autodiff(other)),
                    },
                )?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, example_id: example.id.clone() });
            }
            loss_sum += loss;
            let norm = g.norm();
            if norm > opts.clip_norm {
                crate::autodiff::vecmath::scale(opts.clip_norm / norm, g.values_mut());
            }
            crate::autodiff::vecmath::axpy(-lr, g.values(), params.values_mut());
        }
        epoch_losses.push(loss_sum / train_set.len() as f64);
    }
    Ok(TrainOutcome { params, epoch_losses })
}
