use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::log_softmax_into;
use super::lstm::Network;
use super::matrix::{gemm, View};
use super::scalar::{sigmoid, Real};
use super::NnError;

/// A time-major batch of symbol sequences. Position `t * batch + b` holds
/// the input symbol of sequence `b` at step `t`, the symbol it should
/// predict, and whether that prediction counts toward the loss (padding
/// positions are masked out).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceBatch {
    steps: usize,
    batch: usize,
    inputs: Vec<usize>,
    targets: Vec<usize>,
    mask: Vec<bool>,
}

impl SequenceBatch {
    pub fn new(
        steps: usize,
        batch: usize,
        inputs: Vec<usize>,
        targets: Vec<usize>,
        mask: Vec<bool>,
    ) -> Result<Self, NnError> {
        let n = steps * batch;
        for (what, len) in [("inputs", inputs.len()), ("targets", targets.len()), ("mask", mask.len())] {
            if len != n {
                return Err(NnError::ShapeMismatch { what, expected: n, found: len });
            }
        }
        Ok(SequenceBatch { steps, batch, inputs, targets, mask })
    }

    /// Builds a padded batch from `(inputs, targets)` pairs of equal length
    /// within each pair. Shorter sequences are padded with symbol 0 and
    /// masked.
    pub fn from_sequences(sequences: &[(Vec<usize>, Vec<usize>)]) -> Result<Self, NnError> {
        let batch = sequences.len();
        let steps = sequences.iter().map(|(x, _)| x.len()).max().unwrap_or(0);
        let n = steps * batch;
        let mut inputs = vec![0; n];
        let mut targets = vec![0; n];
        let mut mask = vec![false; n];
        for (b, (x, y)) in sequences.iter().enumerate() {
            if x.len() != y.len() {
                return Err(NnError::LengthMismatch { left: x.len(), right: y.len() });
            }
            for t in 0..x.len() {
                inputs[t * batch + b] = x[t];
                targets[t * batch + b] = y[t];
                mask[t * batch + b] = true;
            }
        }
        Ok(SequenceBatch { steps, batch, inputs, targets, mask })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Inverted dropout applied to the output of every LSTM layer (the input
/// of the next layer or of the output projection). Recurrent connections
/// are left untouched.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dropout {
    pub rate: f64,
    pub seed: u64,
}

struct LayerCache<T> {
    /// Activated gates `[i, f, g, o]`, `N x 4H`.
    gates: Vec<T>,
    cells: Vec<T>,
    hidden: Vec<T>,
    /// Scale factors applied to `hidden` to form the layer output.
    drop_scale: Option<Vec<T>>,
    output: Vec<T>,
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    /// Log-probabilities, `N x K`.
    log_probs: Vec<T>,
    width: usize,
    loss_sum: f64,
    valid: usize,
}

impl<T: Real> ForwardCache<T> {
    /// Mean loss in nats over unmasked positions (0 for an all-masked batch).
    pub fn loss(&self) -> f64 {
        if self.valid == 0 {
            0.0
        } else {
            self.loss_sum / self.valid as f64
        }
    }

    pub fn loss_sum(&self) -> f64 {
        self.loss_sum
    }

    pub fn valid_count(&self) -> usize {
        self.valid
    }

    /// Log-probability row for position `t * batch + b`.
    pub fn log_probs(&self, position: usize) -> &[T] {
        &self.log_probs[position * self.width..(position + 1) * self.width]
    }
}

fn check_batch<T: Real>(net: &Network<T>, batch: &SequenceBatch) -> Result<(), NnError> {
    let k_in = net.layers[0].input_size();
    let k_out = net.output.bias.len();
    for &s in &batch.inputs {
        if s >= k_in {
            return Err(NnError::IndexOutOfRange { index: s, len: k_in });
        }
    }
    for (&s, &m) in batch.targets.iter().zip(&batch.mask) {
        if m && s >= k_out {
            return Err(NnError::IndexOutOfRange { index: s, len: k_out });
        }
    }
    Ok(())
}

/// Runs the network over the whole batch from a zero state, caching the
/// activations needed by [`backward`].
pub fn forward<T: Real>(
    net: &Network<T>,
    batch: &SequenceBatch,
    dropout: Option<Dropout>,
) -> Result<ForwardCache<T>, NnError> {
    check_batch(net, batch)?;
    let (steps, bsz) = (batch.steps, batch.batch);
    let n = steps * bsz;
    let mut rng = dropout.map(|d| ChaCha8Rng::seed_from_u64(d.seed));
    let mut caches: Vec<LayerCache<T>> = Vec::with_capacity(net.layers.len());

    for (l, layer) in net.layers.iter().enumerate() {
        let h = layer.hidden();
        let g4 = 4 * h;
        let mut gates = vec![T::zero(); n * g4];
        for row in gates.chunks_exact_mut(g4) {
            row.copy_from_slice(&layer.bias);
        }
        if l == 0 {
            // One-hot input: each row picks one column of the input weights.
            let kin = layer.input_size();
            let mut columns = vec![T::zero(); kin * g4];
            for r in 0..g4 {
                for (sym, &w) in layer.w_input.row(r).iter().enumerate() {
                    columns[sym * g4 + r] = w;
                }
            }
            for (row, &sym) in gates.chunks_exact_mut(g4).zip(&batch.inputs) {
                for (g, &w) in row.iter_mut().zip(&columns[sym * g4..(sym + 1) * g4]) {
                    *g += w;
                }
            }
        } else {
            let below = &caches[l - 1].output;
            let d = layer.input_size();
            gemm(
                T::one(),
                View::new(below, n, d),
                layer.w_input.view().t(),
                T::one(),
                &mut gates,
            );
        }

        let mut cells = vec![T::zero(); n * h];
        let mut hidden = vec![T::zero(); n * h];
        for t in 0..steps {
            let rows = t * bsz..(t + 1) * bsz;
            if t > 0 {
                let (prev, _) = hidden.split_at(t * bsz * h);
                let prev = &prev[(t - 1) * bsz * h..];
                gemm(
                    T::one(),
                    View::new(prev, bsz, h),
                    layer.w_recurrent.view().t(),
                    T::one(),
                    &mut gates[rows.start * g4..rows.end * g4],
                );
            }
            for r in rows {
                let gate = &mut gates[r * g4..(r + 1) * g4];
                for j in 0..h {
                    let i = sigmoid(gate[j]);
                    let f = sigmoid(gate[h + j]);
                    let g = gate[2 * h + j].tanh();
                    let o = sigmoid(gate[3 * h + j]);
                    gate[j] = i;
                    gate[h + j] = f;
                    gate[2 * h + j] = g;
                    gate[3 * h + j] = o;
                    let c_prev = if t > 0 { cells[(r - bsz) * h + j] } else { T::zero() };
                    let c = f * c_prev + i * g;
                    cells[r * h + j] = c;
                    hidden[r * h + j] = o * c.tanh();
                }
            }
        }

        let (drop_scale, output) = match (dropout, rng.as_mut()) {
            (Some(d), Some(rng)) if d.rate > 0.0 => {
                let keep = T::from_f64_lossy(1.0 / (1.0 - d.rate));
                let scale: Vec<T> = (0..n * h)
                    .map(|_| if rng.gen::<f64>() < d.rate { T::zero() } else { keep })
                    .collect();
                let out = hidden.iter().zip(&scale).map(|(&v, &s)| v * s).collect();
                (Some(scale), out)
            }
            _ => (None, hidden.clone()),
        };
        caches.push(LayerCache { gates, cells, hidden, drop_scale, output });
    }

    let k = net.output.bias.len();
    let top = caches.last().expect("layers");
    let h = net.layers.last().expect("layers").hidden();
    let mut logits = vec![T::zero(); n * k];
    for row in logits.chunks_exact_mut(k) {
        row.copy_from_slice(&net.output.bias);
    }
    gemm(
        T::one(),
        View::new(&top.output, n, h),
        net.output.weight.view().t(),
        T::one(),
        &mut logits,
    );
    let mut log_probs = vec![T::zero(); n * k];
    let mut loss_sum = 0.0;
    for p in 0..n {
        let row = &mut log_probs[p * k..(p + 1) * k];
        log_softmax_into(&logits[p * k..(p + 1) * k], row);
        if batch.mask[p] {
            loss_sum -= row[batch.targets[p]].as_f64();
        }
    }
    if !loss_sum.is_finite() {
        return Err(NnError::NonFiniteLoss);
    }
    Ok(ForwardCache {
        layers: caches,
        log_probs,
        width: k,
        loss_sum,
        valid: batch.valid_count(),
    })
}

/// Gradient of the mean masked loss with respect to every parameter.
pub fn backward<T: Real>(net: &Network<T>, batch: &SequenceBatch, cache: &ForwardCache<T>) -> Network<T> {
    let (steps, bsz) = (batch.steps, batch.batch);
    let n = steps * bsz;
    let k = net.output.bias.len();
    let mut grads = net.zeros_like();
    if cache.valid == 0 || n == 0 {
        return grads;
    }
    let inv = T::from_f64_lossy(1.0 / cache.valid as f64);

    // d loss / d logits = (softmax - onehot) / valid on unmasked rows.
    let mut dlogits = vec![T::zero(); n * k];
    for p in 0..n {
        if !batch.mask[p] {
            continue;
        }
        let lp = &cache.log_probs[p * k..(p + 1) * k];
        let dl = &mut dlogits[p * k..(p + 1) * k];
        for (d, &v) in dl.iter_mut().zip(lp) {
            *d = v.exp() * inv;
        }
        dl[batch.targets[p]] -= inv;
    }

    let top_h = net.layers.last().expect("layers").hidden();
    let top = cache.layers.last().expect("layers");
    gemm(
        T::one(),
        View::new(&dlogits, n, k).t(),
        View::new(&top.output, n, top_h),
        T::zero(),
        grads.output.weight.as_mut_slice(),
    );
    for row in dlogits.chunks_exact(k) {
        for (b, &d) in grads.output.bias.iter_mut().zip(row) {
            *b += d;
        }
    }
    // Gradient flowing into the current layer's output.
    let mut d_out = vec![T::zero(); n * top_h];
    gemm(
        T::one(),
        View::new(&dlogits, n, k),
        net.output.weight.view(),
        T::zero(),
        &mut d_out,
    );
    drop(dlogits);

    for l in (0..net.layers.len()).rev() {
        let layer = &net.layers[l];
        let lc = &cache.layers[l];
        let h = layer.hidden();
        let g4 = 4 * h;
        if let Some(scale) = &lc.drop_scale {
            for (d, &s) in d_out.iter_mut().zip(scale) {
                *d *= s;
            }
        }
        let mut d_gates = vec![T::zero(); n * g4];
        let mut dh_next = vec![T::zero(); bsz * h];
        let mut dc_next = vec![T::zero(); bsz * h];
        let one = T::one();
        for t in (0..steps).rev() {
            for b in 0..bsz {
                let r = t * bsz + b;
                let gate = &lc.gates[r * g4..(r + 1) * g4];
                let dg_row = &mut d_gates[r * g4..(r + 1) * g4];
                for j in 0..h {
                    let (i, f, g, o) = (gate[j], gate[h + j], gate[2 * h + j], gate[3 * h + j]);
                    let c = lc.cells[r * h + j];
                    let c_prev = if t > 0 { lc.cells[(r - bsz) * h + j] } else { T::zero() };
                    let tc = c.tanh();
                    let dh = d_out[r * h + j] + dh_next[b * h + j];
                    let dc = dc_next[b * h + j] + dh * o * (one - tc * tc);
                    dg_row[j] = dc * g * i * (one - i);
                    dg_row[h + j] = dc * c_prev * f * (one - f);
                    dg_row[2 * h + j] = dc * i * (one - g * g);
                    dg_row[3 * h + j] = dh * tc * o * (one - o);
                    dc_next[b * h + j] = dc * f;
                }
            }
            if t > 0 {
                gemm(
                    T::one(),
                    View::new(&d_gates[t * bsz * g4..(t + 1) * bsz * g4], bsz, g4),
                    layer.w_recurrent.view(),
                    T::zero(),
                    &mut dh_next,
                );
            }
        }

        let gl = &mut grads.layers[l];
        if steps > 1 {
            gemm(
                T::one(),
                View::new(&d_gates[bsz * g4..], n - bsz, g4).t(),
                View::new(&lc.hidden, n - bsz, h),
                T::zero(),
                gl.w_recurrent.as_mut_slice(),
            );
        }
        for row in d_gates.chunks_exact(g4) {
            for (b, &d) in gl.bias.iter_mut().zip(row) {
                *b += d;
            }
        }
        if l == 0 {
            // One-hot input: scatter each gate gradient row into the column
            // of its input symbol, accumulated in a transposed buffer.
            let kin = layer.input_size();
            let mut acc = vec![T::zero(); kin * g4];
            for (row, &sym) in d_gates.chunks_exact(g4).zip(&batch.inputs) {
                for (a, &d) in acc[sym * g4..(sym + 1) * g4].iter_mut().zip(row) {
                    *a += d;
                }
            }
            for sym in 0..kin {
                for r in 0..g4 {
                    gl.w_input.set(r, sym, acc[sym * g4 + r]);
                }
            }
        } else {
            let d = layer.input_size();
            let below = &cache.layers[l - 1].output;
            gemm(
                T::one(),
                View::new(&d_gates, n, g4).t(),
                View::new(below, n, d),
                T::zero(),
                gl.w_input.as_mut_slice(),
            );
            let mut d_below = vec![T::zero(); n * d];
            gemm(
                T::one(),
                View::new(&d_gates, n, g4),
                layer.w_input.view(),
                T::zero(),
                &mut d_below,
            );
            d_out = d_below;
        }
    }
    grads
}

/// Mean masked loss and its gradient.
pub fn bptt_gradients<T: Real>(
    net: &Network<T>,
    batch: &SequenceBatch,
    dropout: Option<Dropout>,
) -> Result<(f64, Network<T>), NnError> {
    let cache = forward(net, batch, dropout)?;
    let grads = backward(net, batch, &cache);
    Ok((cache.loss(), grads))
}

/// Mean masked loss in nats without dropout.
pub fn sequence_loss<T: Real>(net: &Network<T>, batch: &SequenceBatch) -> Result<f64, NnError> {
    Ok(forward(net, batch, None)?.loss())
}
