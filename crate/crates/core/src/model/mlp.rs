use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Fully connected layer; `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Layer {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output(&self) -> usize {
        self.weights.nrows()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }
}

/// Frame-wise perceptron: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Hidden activations kept from a forward pass for backpropagation.
pub(crate) struct MlpTrace {
    /// Post-ReLU output of every hidden layer, `T x width`.
    hidden: Vec<Array2<f64>>,
    pub(crate) output: Vec<f64>,
}

impl Mlp {
    pub fn zeros(widths: &[usize]) -> Self {
        Mlp {
            layers: widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// One output per row of `x`.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.forward_traced(x).output
    }

    pub(crate) fn forward_traced(&self, x: ArrayView2<'_, f64>) -> MlpTrace {
        let (last, hidden_layers) = self.layers.split_last().expect("MLP without layers");
        let mut hidden = Vec::with_capacity(hidden_layers.len());
        for layer in hidden_layers {
            let input = hidden.last().map_or(x, |h: &Array2<f64>| h.view());
            let mut h = layer.apply(input);
            h.mapv_inplace(|v| v.max(0.0));
            hidden.push(h);
        }
        let input = hidden.last().map_or(x, |h| h.view());
        let out = last.apply(input);
        MlpTrace {
            hidden,
            output: out.column(0).to_vec(),
        }
    }

    /// Accumulates into `grad` the gradient of `sum_t d_out[t] * output[t]`
    /// with respect to every layer, given the trace of the same input.
    pub(crate) fn backward(&self, x: ArrayView2<'_, f64>, trace: &MlpTrace, d_out: &[f64], grad: &mut Mlp) {
        let mut g = Array2::from_shape_vec((d_out.len(), 1), d_out.to_vec()).unwrap();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = if i == 0 { x } else { trace.hidden[i - 1].view() };
            let gl = &mut grad.layers[i];
            gl.weights += &g.t().dot(&input);
            gl.bias += &g.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = g.dot(&layer.weights);
                prev.zip_mut_with(&trace.hidden[i - 1], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                g = prev;
            }
        }
    }
}
