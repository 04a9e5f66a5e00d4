//! Tape-level graph construction for the shared encoder/decoder.
//!
//! All builders are generic over the scalar so the identical recurrences
//! serve plain evaluation, gradients and dual-number HVPs. The recurrences
//! follow the gate equations used throughout this crate:
//!
//! ```text
//! u_t = tanh(W_xu x_t + W_hu h_{t-1} + b_u)
//! i_t = sigma(W_xi x_t + W_hi h_{t-1} + b_i)
//! o_t = sigma(W_xo x_t + W_ho h_{t-1} + b_o)
//! c_t = i_t (.) u_t + c_{t-1}
//! h_t = o_t (.) tanh(c_t)
//! ```
//!
//! Note the cell update has no forget gate: the cell accumulates.

use crate::autodiff::{Layout, NodeId, Tape};
use crate::data::Vocab;
use crate::scalar::Scalar;

/// Resolved `(offset, rows, cols)` for one block.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LstmBlocks {
    pub w_xu: Block,
    pub w_hu: Block,
    pub b_u: Block,
    pub w_xi: Block,
    pub w_hi: Block,
    pub b_i: Block,
    pub w_xo: Block,
    pub w_ho: Block,
    pub b_o: Block,
}

/// Offsets of every weight block, resolved once per model.
#[derive(Debug, Clone)]
pub(crate) struct Blocks {
    pub embed: Block,
    pub enc_f: LstmBlocks,
    pub enc_b: LstmBlocks,
    pub dec: LstmBlocks,
    pub attn: Block,
    pub u_w: Block,
    pub w_t: Block,
    pub w_s: Block,
    pub embed_dim: usize,
    pub total_len: usize,
}

fn resolve(layout: &Layout, name: &str) -> Block {
    let seg = layout
        .segment(name)
        .unwrap_or_else(|| panic!("model layout is missing segment `{name}`"));
    Block { offset: seg.offset, rows: seg.rows, cols: seg.cols }
}

fn resolve_lstm(layout: &Layout, prefix: &str) -> LstmBlocks {
    LstmBlocks {
        w_xu: resolve(layout, &format!("{prefix}.w_xu")),
        w_hu: resolve(layout, &format!("{prefix}.w_hu")),
        b_u: resolve(layout, &format!("{prefix}.b_u")),
        w_xi: resolve(layout, &format!("{prefix}.w_xi")),
        w_hi: resolve(layout, &format!("{prefix}.w_hi")),
        b_i: resolve(layout, &format!("{prefix}.b_i")),
        w_xo: resolve(layout, &format!("{prefix}.w_xo")),
        w_ho: resolve(layout, &format!("{prefix}.w_ho")),
        b_o: resolve(layout, &format!("{prefix}.b_o")),
    }
}

impl Blocks {
    pub fn from_layout(layout: &Layout, embed_dim: usize) -> Self {
        Blocks {
            embed: resolve(layout, "embed"),
            enc_f: resolve_lstm(layout, "enc_f"),
            enc_b: resolve_lstm(layout, "enc_b"),
            dec: resolve_lstm(layout, "dec"),
            attn: resolve(layout, "attn.w"),
            u_w: resolve(layout, "out.u_w"),
            w_t: resolve(layout, "domain.w_t"),
            w_s: resolve(layout, "dec_init.w_s"),
            embed_dim,
            total_len: layout.total_len(),
        }
    }

    fn param<S: Scalar>(&self, tape: &mut Tape<S>, b: Block) -> NodeId {
        tape.param(b.offset, b.len())
    }

    /// Embedding row for a vocabulary index.
    pub fn embedding<S: Scalar>(&self, tape: &mut Tape<S>, vocab_index: usize) -> NodeId {
        debug_assert!(vocab_index < self.embed.rows);
        tape.param(self.embed.offset + vocab_index * self.embed_dim, self.embed_dim)
    }

    /// One LSTM cell step. `h_prev`/`c_prev` are `None` for an implicit zero
    /// state (t=0); the decoder's first step has a live `h_prev` (the init
    /// projection) with a zero cell.
    pub fn lstm_step<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        blocks: &LstmBlocks,
        x: NodeId,
        h_prev: Option<NodeId>,
        c_prev: Option<NodeId>,
    ) -> (NodeId, NodeId) {
        let gate = |tape: &mut Tape<S>, wx: Block, wh: Block, b: Block| -> NodeId {
            let wx_node = tape.param(wx.offset, wx.len());
            let mut pre = tape.matvec(wx_node, x);
            if let Some(h) = h_prev {
                let wh_node = tape.param(wh.offset, wh.len());
                let rec = tape.matvec(wh_node, h);
                pre = tape.add(pre, rec);
            }
            let b_node = tape.param(b.offset, b.len());
            tape.add(pre, b_node)
        };
        let u_pre = gate(tape, blocks.w_xu, blocks.w_hu, blocks.b_u);
        let u = tape.tanh(u_pre);
        let i_pre = gate(tape, blocks.w_xi, blocks.w_hi, blocks.b_i);
        let i = tape.sigmoid(i_pre);
        let o_pre = gate(tape, blocks.w_xo, blocks.w_ho, blocks.b_o);
        let o = tape.sigmoid(o_pre);
        let iu = tape.mul(i, u);
        let c = match c_prev {
            Some(c_prev) => tape.add(iu, c_prev),
            None => iu,
        };
        let tc = tape.tanh(c);
        let h = tape.mul(o, tc);
        (h, c)
    }
}

/// Encoder nodes for one source sequence.
pub(crate) struct EncGraph {
    /// Per-position bidirectional states, each `2d`.
    pub states: Vec<NodeId>,
    /// `n x 2d` matrix of the states.
    pub matrix: NodeId,
    /// Final forward state (`d`).
    pub fwd_final: NodeId,
    /// Final backward state (`d`).
    pub bwd_final: NodeId,
    /// `[fwd_final, bwd_final]` (`2d`).
    pub finals: NodeId,
    pub src_ids: Vec<usize>,
}

impl EncGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }
}

/// Runs the forward and backward recurrences over the source ids.
pub(crate) fn encode_graph<S: Scalar>(
    tape: &mut Tape<S>,
    blocks: &Blocks,
    src_ids: &[usize],
) -> EncGraph {
    let n = src_ids.len();
    assert!(n >= 1, "encode needs a non-empty source");
    let embeds: Vec<NodeId> = src_ids.iter().map(|&t| blocks.embedding(tape, t)).collect();

    let mut fwd = Vec::with_capacity(n);
    let mut state: Option<(NodeId, NodeId)> = None;
    for &x in &embeds {
        let (h, c) = blocks.lstm_step(tape, &blocks.enc_f, x, state.map(|s| s.0), state.map(|s| s.1));
        fwd.push(h);
        state = Some((h, c));
    }
    let mut bwd = vec![0; n];
    let mut state: Option<(NodeId, NodeId)> = None;
    for t in (0..n).rev() {
        let (h, c) =
            blocks.lstm_step(tape, &blocks.enc_b, embeds[t], state.map(|s| s.0), state.map(|s| s.1));
        bwd[t] = h;
        state = Some((h, c));
    }

    let states: Vec<NodeId> = (0..n).map(|t| tape.concat2(fwd[t], bwd[t])).collect();
    let matrix = tape.stack_rows(&states);
    let finals = tape.concat2(fwd[n - 1], bwd[0]);
    EncGraph { states, matrix, fwd_final: fwd[n - 1], bwd_final: bwd[0], finals, src_ids: src_ids.to_vec() }
}

/// Initial decoder state `s_1 = tanh(W_s [fwd_final, bwd_final])`.
pub(crate) fn decoder_init<S: Scalar>(tape: &mut Tape<S>, blocks: &Blocks, enc: &EncGraph) -> NodeId {
    let w_s = tape.param(blocks.w_s.offset, blocks.w_s.len());
    let proj = tape.matvec(w_s, enc.finals);
    tape.tanh(proj)
}

/// Bilinear attention of `state` over the encoder matrix.
///
/// Scores `e_i = s^T W_a h_i`; context is the score-softmax mixture of the
/// `h_i`.
pub(crate) fn attention<S: Scalar>(
    tape: &mut Tape<S>,
    blocks: &Blocks,
    enc: &EncGraph,
    state: NodeId,
) -> (NodeId, NodeId, NodeId) {
    let w_a = tape.param(blocks.attn.offset, blocks.attn.len());
    let query = tape.mat_t_vec(w_a, state); // W_a^T s
    let scores = tape.matvec(enc.matrix, query); // h_i . query
    let alpha = tape.softmax(scores);
    let context = tape.mat_t_vec(enc.matrix, alpha); // sum_i alpha_i h_i
    (scores, alpha, context)
}

/// One decoder step's nodes.
pub(crate) struct StepGraph {
    pub state: NodeId,
    pub cell: NodeId,
    pub scores: NodeId,
    pub alpha: NodeId,
    pub context: NodeId,
    /// `V + n` logits: vocabulary block then copy block.
    pub full_logits: NodeId,
    pub domain_logits: NodeId,
}

/// Advances the decoder LSTM on the previous token's embedding, then attends
/// and scores. `prev_cell = None` for the first step (cell starts at zero).
pub(crate) fn decode_step_graph<S: Scalar>(
    tape: &mut Tape<S>,
    blocks: &Blocks,
    enc: &EncGraph,
    prev_state: NodeId,
    prev_cell: Option<NodeId>,
    prev_token_vocab_id: usize,
) -> StepGraph {
    let x = blocks.embedding(tape, prev_token_vocab_id);
    let (state, cell) = blocks.lstm_step(tape, &blocks.dec, x, Some(prev_state), prev_cell);

    let (scores, alpha, context) = attention(tape, blocks, enc, state);
    let sc = tape.concat2(state, context);
    let u_w = tape.param(blocks.u_w.offset, blocks.u_w.len());
    let vocab_logits = tape.matvec(u_w, sc);
    let full_logits = tape.concat2(vocab_logits, scores);
    let w_t = tape.param(blocks.w_t.offset, blocks.w_t.len());
    let domain_logits = tape.matvec(w_t, sc);
    StepGraph { state, cell, scores, alpha, context, full_logits, domain_logits }
}

/// Domain logits at the encoder boundary: `W_T [b_n, c_n]` with `b_n` the
/// concatenated final states and `c_n` the attention context queried by the
/// decoder-init state.
pub(crate) fn encoder_domain_logits<S: Scalar>(
    tape: &mut Tape<S>,
    blocks: &Blocks,
    enc: &EncGraph,
    s1: NodeId,
) -> NodeId {
    let (_, _, c_n) = attention(tape, blocks, enc, s1);
    let bc = tape.concat2(enc.finals, c_n);
    let w_t = tape.param(blocks.w_t.offset, blocks.w_t.len());
    tape.matvec(w_t, bc)
}

/// Indices of the gold event in the `V + n` distribution for `token`.
///
/// In-vocabulary tokens take their vocabulary index plus every copy position
/// holding the same token. Out-of-vocabulary tokens that appear in the
/// source are scored purely through the copy block; tokens absent from both
/// fall back to `<unk>` (the caller logs coverage).
pub(crate) fn gold_event_indices(vocab: &Vocab, token: &str, source: &[String]) -> Vec<usize> {
    let copy_positions: Vec<usize> = source
        .iter()
        .enumerate()
        .filter(|(_, s)| s.as_str() == token)
        .map(|(i, _)| vocab.size() + i)
        .collect();
    if vocab.contains(token) {
        let mut event = vec![vocab.lookup(token)];
        event.extend(copy_positions);
        event
    } else if !copy_positions.is_empty() {
        copy_positions
    } else {
        vec![Vocab::UNK]
    }
}
