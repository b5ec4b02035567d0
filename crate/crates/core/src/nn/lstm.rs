use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::scalar::{dot, sigmoid, Real};
use super::NnError;

/// Half-width of the uniform weight initialisation interval.
pub const INIT_RANGE: f64 = 0.08;
/// Initial value of the forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

/// Sizes of a stacked LSTM with a dense output projection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_size: usize,
    pub hidden: Vec<usize>,
    pub output_size: usize,
}

impl Architecture {
    pub fn new(input_size: usize, hidden: Vec<usize>, output_size: usize) -> Self {
        Architecture {
            input_size,
            hidden,
            output_size,
        }
    }

    pub fn layer_input_size(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_size
        } else {
            self.hidden[layer - 1]
        }
    }

    pub fn top_hidden(&self) -> usize {
        *self.hidden.last().expect("at least one layer")
    }

    pub fn parameter_count(&self) -> usize {
        let mut total = 0;
        for (l, &h) in self.hidden.iter().enumerate() {
            total += 4 * h * (self.layer_input_size(l) + h + 1);
        }
        total + self.output_size * (self.top_hidden() + 1)
    }
}

/// One LSTM layer. Gate blocks are stacked as input, forget, cell, output,
/// each `hidden` rows tall.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams<T> {
    /// `4H x D`
    pub w_input: Matrix<T>,
    /// `4H x H`
    pub w_recurrent: Matrix<T>,
    /// `4H`
    pub bias: Vec<T>,
}

impl<T: Real> LstmLayerParams<T> {
    pub fn hidden(&self) -> usize {
        self.bias.len() / 4
    }

    pub fn input_size(&self) -> usize {
        self.w_input.cols()
    }
}

/// Dense projection from the top hidden state to the output logits.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputLayer<T> {
    /// `K x H`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

/// Per-layer hidden and cell vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnState<T> {
    pub h: Vec<Vec<T>>,
    pub c: Vec<Vec<T>>,
}

/// Stacked LSTM parameters. The same type doubles as the gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    pub layers: Vec<LstmLayerParams<T>>,
    pub output: OutputLayer<T>,
}

impl<T: Real> Network<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        assert!(!arch.hidden.is_empty(), "at least one LSTM layer");
        let layers = arch
            .hidden
            .iter()
            .enumerate()
            .map(|(l, &h)| LstmLayerParams {
                w_input: Matrix::zeros(4 * h, arch.layer_input_size(l)),
                w_recurrent: Matrix::zeros(4 * h, h),
                bias: vec![T::zero(); 4 * h],
            })
            .collect();
        Network {
            layers,
            output: OutputLayer {
                weight: Matrix::zeros(arch.output_size, arch.top_hidden()),
                bias: vec![T::zero(); arch.output_size],
            },
        }
    }

    /// Uniform initialisation in `[-0.08, 0.08]`, forget-gate bias 1, other
    /// biases 0.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(arch);
        let mut fill = |m: &mut Matrix<T>| {
            for v in m.as_mut_slice() {
                *v = T::from_f64_lossy(rng.gen_range(-INIT_RANGE..INIT_RANGE));
            }
        };
        for layer in &mut net.layers {
            fill(&mut layer.w_input);
            fill(&mut layer.w_recurrent);
            let h = layer.hidden();
            layer.bias[h..2 * h].iter_mut().for_each(|b| *b = T::from_f64_lossy(FORGET_BIAS));
        }
        fill(&mut net.output.weight);
        net
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.architecture())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_size: self.layers[0].input_size(),
            hidden: self.layers.iter().map(|l| l.hidden()).collect(),
            output_size: self.output.bias.len(),
        }
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..self.layers.len() {
            names.push(format!("lstm.{l}.w_input"));
            names.push(format!("lstm.{l}.w_recurrent"));
            names.push(format!("lstm.{l}.bias"));
        }
        names.push("output.weight".into());
        names.push("output.bias".into());
        names
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for layer in &self.layers {
            let (r, c) = layer.w_input.shape();
            shapes.push(vec![r, c]);
            let (r, c) = layer.w_recurrent.shape();
            shapes.push(vec![r, c]);
            shapes.push(vec![layer.bias.len()]);
        }
        let (r, c) = self.output.weight.shape();
        shapes.push(vec![r, c]);
        shapes.push(vec![self.output.bias.len()]);
        shapes
    }

    /// Parameter tensors in declaration order (matching `tensor_names`).
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for layer in &self.layers {
            out.push(layer.w_input.as_slice());
            out.push(layer.w_recurrent.as_slice());
            out.push(&layer.bias);
        }
        out.push(self.output.weight.as_slice());
        out.push(&self.output.bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w_input.as_mut_slice());
            out.push(layer.w_recurrent.as_mut_slice());
            out.push(&mut layer.bias);
        }
        out.push(self.output.weight.as_mut_slice());
        out.push(&mut self.output.bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Global L2 norm over every tensor.
    pub fn global_norm(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    pub fn convert<U: Real>(&self) -> Network<U> {
        let mut out = Network::<U>::zeros(&self.architecture());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = U::from_f64_lossy(s.as_f64());
            }
        }
        out
    }

    pub fn initial_state(&self) -> RnnState<T> {
        RnnState {
            h: self.layers.iter().map(|l| vec![T::zero(); l.hidden()]).collect(),
            c: self.layers.iter().map(|l| vec![T::zero(); l.hidden()]).collect(),
        }
    }

    /// One recursion step on a dense input vector: returns the new state
    /// and the output logits of the top layer.
    pub fn lstm_forward(&self, state: &RnnState<T>, x: &[T]) -> Result<(RnnState<T>, Vec<T>), NnError> {
        self.check_state(state)?;
        if x.len() != self.layers[0].input_size() {
            return Err(NnError::ShapeMismatch {
                what: "input vector",
                expected: self.layers[0].input_size(),
                found: x.len(),
            });
        }
        let mut next = state.clone();
        let mut gates = Vec::new();
        let mut input = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            gates.clear();
            gates.extend_from_slice(&layer.bias);
            for (r, g) in gates.iter_mut().enumerate() {
                *g += dot(layer.w_input.row(r), &input);
            }
            cell_update(layer, &mut gates, &mut next.h[l], &mut next.c[l]);
            input.clone_from(&next.h[l]);
        }
        let logits = self.project(&input);
        Ok((next, logits))
    }

    /// Same as [`lstm_forward`](Self::lstm_forward) for a one-hot input,
    /// updating the state in place.
    pub fn step_symbol(&self, state: &mut RnnState<T>, symbol: usize) -> Result<Vec<T>, NnError> {
        let k = self.layers[0].input_size();
        if symbol >= k {
            return Err(NnError::IndexOutOfRange { index: symbol, len: k });
        }
        let mut gates = Vec::new();
        for l in 0..self.layers.len() {
            let layer = &self.layers[l];
            gates.clear();
            gates.extend_from_slice(&layer.bias);
            if l == 0 {
                for (r, g) in gates.iter_mut().enumerate() {
                    *g += layer.w_input.get(r, symbol);
                }
            } else {
                let below = &state.h[l - 1];
                for (r, g) in gates.iter_mut().enumerate() {
                    *g += dot(layer.w_input.row(r), below);
                }
            }
            cell_update(layer, &mut gates, &mut state.h[l], &mut state.c[l]);
        }
        Ok(self.project(state.h.last().expect("layers")))
    }

    fn project(&self, top: &[T]) -> Vec<T> {
        self.output
            .bias
            .iter()
            .enumerate()
            .map(|(k, &b)| b + dot(self.output.weight.row(k), top))
            .collect()
    }

    fn check_state(&self, state: &RnnState<T>) -> Result<(), NnError> {
        if state.h.len() != self.layers.len() || state.c.len() != self.layers.len() {
            return Err(NnError::ShapeMismatch {
                what: "state layer count",
                expected: self.layers.len(),
                found: state.h.len(),
            });
        }
        for (l, layer) in self.layers.iter().enumerate() {
            for v in [&state.h[l], &state.c[l]] {
                if v.len() != layer.hidden() {
                    return Err(NnError::ShapeMismatch {
                        what: "state vector",
                        expected: layer.hidden(),
                        found: v.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Adds the recurrent term to the pre-activations in `gates`, then applies
/// the gate nonlinearities and updates `h` and `c` in place.
fn cell_update<T: Real>(layer: &LstmLayerParams<T>, gates: &mut [T], h: &mut [T], c: &mut [T]) {
    let hidden = layer.hidden();
    for (r, g) in gates.iter_mut().enumerate() {
        *g += dot(layer.w_recurrent.row(r), h);
    }
    for j in 0..hidden {
        let i = sigmoid(gates[j]);
        let f = sigmoid(gates[hidden + j]);
        let g = gates[2 * hidden + j].tanh();
        let o = sigmoid(gates[3 * hidden + j]);
        c[j] = f * c[j] + i * g;
        h[j] = o * c[j].tanh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_keep_zero_state() {
        let arch = Architecture::new(3, vec![4, 4], 3);
        let net = Network::<f64>::zeros(&arch);
        let mut state = net.initial_state();
        for x in [[1.0, 0.0, 0.0], [0.3, -2.0, 5.0]] {
            let (next, y) = net.lstm_forward(&state, &x).unwrap();
            assert!(next.h.iter().flatten().all(|v| *v == 0.0));
            assert!(next.c.iter().flatten().all(|v| *v == 0.0));
            assert!(y.iter().all(|v| *v == 0.0));
            state = next;
        }
    }

    /// Scalar one-unit LSTM, written out gate by gate.
    #[test]
    fn one_unit_matches_hand_computation() {
        let arch = Architecture::new(1, vec![1], 1);
        let mut net = Network::<f64>::zeros(&arch);
        let (wi, wf, wg, wo) = (0.5, -0.3, 0.8, 0.2);
        let (ui, uf, ug, uo) = (0.1, 0.4, -0.6, 0.7);
        let (bi, bf, bg, bo) = (0.0, 1.0, 0.1, -0.2);
        let layer = &mut net.layers[0];
        layer.w_input = Matrix::from_vec(4, 1, vec![wi, wf, wg, wo]);
        layer.w_recurrent = Matrix::from_vec(4, 1, vec![ui, uf, ug, uo]);
        layer.bias = vec![bi, bf, bg, bo];
        net.output.weight = Matrix::from_vec(1, 1, vec![2.0]);
        net.output.bias = vec![0.5];

        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        let mut state = net.initial_state();
        for _ in 0..5 {
            let x = 1.0;
            let i = s(wi * x + ui * h + bi);
            let f = s(wf * x + uf * h + bf);
            let g = (wg * x + ug * h + bg).tanh();
            let o = s(wo * x + uo * h + bo);
            c = f * c + i * g;
            h = o * c.tanh();
            let (next, y) = net.lstm_forward(&state, &[x]).unwrap();
            assert!((next.h[0][0] - h).abs() < 1e-14);
            assert!((next.c[0][0] - c).abs() < 1e-14);
            assert!((y[0] - (2.0 * h + 0.5)).abs() < 1e-14);
            state = next;
        }
    }

    #[test]
    fn symbol_step_matches_dense_one_hot() {
        let arch = Architecture::new(5, vec![6, 7], 5);
        let net = Network::<f64>::init(&arch, 3);
        let mut dense = net.initial_state();
        let mut fast = net.initial_state();
        for &k in &[0usize, 3, 3, 1, 4] {
            let mut x = vec![0.0; 5];
            x[k] = 1.0;
            let (next, y) = net.lstm_forward(&dense, &x).unwrap();
            dense = next;
            let y2 = net.step_symbol(&mut fast, k).unwrap();
            assert_eq!(dense, fast);
            assert_eq!(y, y2);
        }
        assert!(net.step_symbol(&mut fast, 5).is_err());
    }

    #[test]
    fn init_ranges_and_forget_bias() {
        let arch = Architecture::new(4, vec![3], 4);
        let net = Network::<f32>::init(&arch, 1);
        let layer = &net.layers[0];
        assert!(layer.w_input.as_slice().iter().all(|v| v.abs() <= 0.08));
        assert_eq!(&layer.bias[3..6], &[1.0, 1.0, 1.0]);
        assert!(layer.bias[..3].iter().chain(&layer.bias[6..]).all(|v| *v == 0.0));
        assert_eq!(net.parameter_count(), arch.parameter_count());
        assert_eq!(net.tensor_names().len(), net.tensor_shapes().len());
    }

    #[test]
    fn shape_errors() {
        let arch = Architecture::new(3, vec![2], 3);
        let net = Network::<f64>::zeros(&arch);
        let state = net.initial_state();
        assert!(matches!(
            net.lstm_forward(&state, &[1.0, 0.0]),
            Err(NnError::ShapeMismatch { .. })
        ));
        let bad = RnnState { h: vec![vec![0.0; 3]], c: vec![vec![0.0; 3]] };
        assert!(net.lstm_forward(&bad, &[1.0, 0.0, 0.0]).is_err());
    }
}
