use ndarray::linalg::general_mat_vec_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::Uniform;

use crate::error::{Error, Result};

/// One gated recurrent layer. Gate blocks are stacked in the order update (z),
/// reset (r), candidate (n): rows `[0, H)`, `[H, 2H)` and `[2H, 3H)`.
///
/// ```text
/// z  = sigmoid(Wz x + Uz h + bz)
/// r  = sigmoid(Wr x + Ur h + br)
/// n  = tanh(Wn x + r * (Un h) + bn)
/// h' = (1 - z) * n + z * h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    w_input: Array2<f64>,
    w_rec: Array2<f64>,
    bias: Array1<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct GruTrace {
    pub outputs: Array2<f64>,
    h0: Array1<f64>,
    /// `[z, r, n]` per frame.
    gates: Array2<f64>,
    /// `Un h` per frame (before the reset gate is applied).
    un: Array2<f64>,
}

/// Row-major copy unless `a` already is.
pub(crate) fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl GruLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Array2::zeros((3 * hidden, input)),
            w_rec: Array2::zeros((3 * hidden, hidden)),
            bias: Array1::zeros(3 * hidden),
        }
    }

    /// Uniform in `[-k, k]`, `k = 1/sqrt(fan_in)`; biases use the hidden size.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut draw = |shape: (usize, usize), fan_in: usize| {
            let k = 1.0 / (fan_in.max(1) as f64).sqrt();
            let dist = Uniform::new_inclusive(-k, k).expect("finite bound");
            Array2::from_shape_simple_fn(shape, || rng.sample(dist))
        };
        let w_input = draw((3 * hidden, input), input);
        let w_rec = draw((3 * hidden, hidden), hidden);
        let bias = draw((1, 3 * hidden), hidden).remove_axis(Axis(0));
        Self { w_input, w_rec, bias }
    }

    pub fn from_parts(w_input: Array2<f64>, w_rec: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        let h3 = w_rec.nrows();
        if !h3.is_multiple_of(3) || w_rec.ncols() * 3 != h3 || w_input.nrows() != h3 || bias.len() != h3 {
            return Err(Error::Config(format!(
                "inconsistent layer shapes: input {:?}, recurrent {:?}, bias {}",
                w_input.dim(),
                w_rec.dim(),
                bias.len()
            )));
        }
        Ok(Self {
            w_input: standard(w_input),
            w_rec: standard(w_rec),
            bias,
        })
    }

    pub fn input_size(&self) -> usize {
        self.w_input.ncols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_rec.ncols()
    }

    pub fn w_input(&self) -> &Array2<f64> {
        &self.w_input
    }

    pub fn w_rec(&self) -> &Array2<f64> {
        &self.w_rec
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.w_input.len() + self.w_rec.len() + self.bias.len()
    }

    pub(crate) fn slices(&self) -> [&[f64]; 3] {
        [
            self.w_input.as_slice().expect("standard layout"),
            self.w_rec.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.w_input.as_slice_mut().expect("standard layout"),
            self.w_rec.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Runs the layer over `inputs` (frames x input), returning frames x hidden.
    pub fn forward(&self, inputs: ArrayView2<f64>, h0: Option<ArrayView1<f64>>) -> Result<Array2<f64>> {
        Ok(self.forward_trace(inputs, h0)?.outputs)
    }

    pub(crate) fn forward_trace(&self, inputs: ArrayView2<f64>, h0: Option<ArrayView1<f64>>) -> Result<GruTrace> {
        let hidden = self.hidden_size();
        if inputs.ncols() != self.input_size() {
            return Err(Error::Config(format!(
                "layer expects {} inputs per frame, got {}",
                self.input_size(),
                inputs.ncols()
            )));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("recurrent layer input"));
        }
        let h0 = match h0 {
            Some(h) if h.len() != hidden => return Err(Error::LengthMismatch(hidden, h.len())),
            Some(h) if h.iter().any(|v| !v.is_finite()) => return Err(Error::NonFinite("initial state")),
            Some(h) => h.to_owned(),
            None => Array1::zeros(hidden),
        };
        let frames = inputs.nrows();
        let pre = standard(inputs.dot(&self.w_input.t()) + &self.bias);
        let mut outputs = Array2::zeros((frames, hidden));
        let mut gates = Array2::zeros((frames, 3 * hidden));
        let mut un = Array2::zeros((frames, hidden));
        let mut h = h0.clone();
        let mut uh = Array1::zeros(3 * hidden);
        for t in 0..frames {
            general_mat_vec_mul(1.0, &self.w_rec, &h, 0.0, &mut uh);
            let a = pre.row(t);
            let mut g = gates.row_mut(t);
            let g = g.as_slice_mut().expect("row");
            let a = a.as_slice().expect("row");
            let uh = uh.as_slice().expect("contiguous");
            let h_s = h.as_slice_mut().expect("contiguous");
            let un_row = un.row_mut(t).into_slice().expect("row");
            for j in 0..hidden {
                let z = sigmoid(a[j] + uh[j]);
                let r = sigmoid(a[hidden + j] + uh[hidden + j]);
                let u = uh[2 * hidden + j];
                let n = (a[2 * hidden + j] + r * u).tanh();
                g[j] = z;
                g[hidden + j] = r;
                g[2 * hidden + j] = n;
                un_row[j] = u;
                h_s[j] = (1.0 - z) * n + z * h_s[j];
            }
            outputs.row_mut(t).assign(&h);
        }
        Ok(GruTrace { outputs, h0, gates, un })
    }

    /// One recurrence step for streaming use. `x` is a single input frame;
    /// `scratch` must hold `6 * hidden` values.
    pub(crate) fn step(&self, x: ArrayView1<f64>, h: &mut Array1<f64>, scratch: &mut Array1<f64>) {
        let hidden = self.hidden_size();
        let (mut pre, mut uh) = scratch.view_mut().split_at(Axis(0), 3 * hidden);
        pre.assign(&self.bias);
        general_mat_vec_mul(1.0, &self.w_input, &x, 1.0, &mut pre);
        general_mat_vec_mul(1.0, &self.w_rec, &*h, 0.0, &mut uh);
        for j in 0..hidden {
            let z = sigmoid(pre[j] + uh[j]);
            let r = sigmoid(pre[hidden + j] + uh[hidden + j]);
            let n = (pre[2 * hidden + j] + r * uh[2 * hidden + j]).tanh();
            h[j] = (1.0 - z) * n + z * h[j];
        }
    }

    /// Backpropagation through time. `d_out` is dLoss/dOutputs (frames x hidden).
    /// Returns the parameter gradients as a layer plus dLoss/dInputs.
    pub(crate) fn backward(
        &self,
        inputs: ArrayView2<f64>,
        trace: &GruTrace,
        d_out: ArrayView2<f64>,
    ) -> (GruLayer, Array2<f64>) {
        let hidden = self.hidden_size();
        let frames = inputs.nrows();
        // Contiguous transpose keeps the sequential U^T products row-major.
        let w_rec_t = self.w_rec.t().as_standard_layout().into_owned();
        let mut d_pre = Array2::zeros((frames, 3 * hidden));
        let mut d_upre = Array2::zeros((frames, 3 * hidden));
        let mut carry = Array1::<f64>::zeros(hidden);
        let mut back = Array1::<f64>::zeros(hidden);
        for t in (0..frames).rev() {
            let h_prev = if t == 0 {
                trace.h0.view()
            } else {
                trace.outputs.row(t - 1)
            };
            let g = trace.gates.row(t);
            let un = trace.un.row(t);
            let d_o = d_out.row(t);
            {
                let mut da = d_pre.row_mut(t);
                let mut du = d_upre.row_mut(t);
                for j in 0..hidden {
                    let (z, r, n) = (g[j], g[hidden + j], g[2 * hidden + j]);
                    let dh = d_o[j] + carry[j];
                    let dn = dh * (1.0 - z);
                    let dz = dh * (h_prev[j] - n);
                    let dan = dn * (1.0 - n * n);
                    let dr = dan * un[j];
                    let daz = dz * z * (1.0 - z);
                    let dar = dr * r * (1.0 - r);
                    da[j] = daz;
                    da[hidden + j] = dar;
                    da[2 * hidden + j] = dan;
                    du[j] = daz;
                    du[hidden + j] = dar;
                    du[2 * hidden + j] = dan * r;
                    carry[j] = dh * z;
                }
            }
            general_mat_vec_mul(1.0, &w_rec_t, &d_upre.row(t), 0.0, &mut back);
            carry += &back;
        }
        let mut h_prev_all = Array2::zeros((frames, hidden));
        if frames > 0 {
            h_prev_all.row_mut(0).assign(&trace.h0);
            h_prev_all
                .slice_mut(s![1.., ..])
                .assign(&trace.outputs.slice(s![..frames - 1, ..]));
        }
        let grads = GruLayer {
            w_input: standard(d_pre.t().dot(&inputs)),
            w_rec: standard(d_upre.t().dot(&h_prev_all)),
            bias: d_pre.sum_axis(Axis(0)),
        };
        let d_inputs = d_pre.dot(&self.w_input);
        (grads, d_inputs)
    }
}
