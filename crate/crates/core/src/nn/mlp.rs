use crate::error::{CoreError, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Parameter initialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Weights `U(-c/√fan_in, c/√fan_in)`, biases zero. The last layer's
    /// bound is additionally multiplied by `output_scale`.
    UniformFanIn { c: f64, output_scale: f64 },
}

impl Default for Init {
    fn default() -> Self {
        Init::UniformFanIn {
            c: 1.0,
            output_scale: 1.0,
        }
    }
}

/// Multilayer perceptron, tanh on hidden layers and identity on the output.
///
/// All parameters live in one flat vector. Layer `l` stores its weight
/// matrix (`out × in`, row-major) followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    sizes: Vec<usize>,
    params: Vec<S>,
    offsets: Vec<usize>,
}

/// Activations recorded by [`Mlp::forward_cached`] for a backward pass.
#[derive(Debug, Clone)]
pub struct Tape<S> {
    /// `acts[0]` is the input, `acts[l+1]` the output of layer `l`.
    acts: Vec<Vec<S>>,
}

impl<S: Scalar> Tape<S> {
    pub fn output(&self) -> &[S] {
        self.acts.last().expect("tape has an input")
    }
}

impl<S: Scalar> Mlp<S> {
    pub fn new(sizes: &[usize], init: Init, rng: &mut SeededRng) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(CoreError::InvalidInput(format!(
                "layer sizes {sizes:?} need ≥ 2 non-zero entries"
            )));
        }
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut n = 0;
        for w in sizes.windows(2) {
            offsets.push(n);
            n += w[0] * w[1] + w[1];
        }
        let mut params = vec![S::zero(); n];
        if let Init::UniformFanIn { c, output_scale } = init {
            let last = sizes.len() - 2;
            for (l, w) in sizes.windows(2).enumerate() {
                let mut bound = c / (w[0] as f64).sqrt();
                if l == last {
                    bound *= output_scale;
                }
                let off = offsets[l];
                for p in &mut params[off..off + w[0] * w[1]] {
                    *p = S::c(rng.uniform_range(-bound, bound));
                }
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            offsets,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::new(sizes, Init::Zeros, &mut SeededRng::new(0))
    }

    /// Rebuilds a network from a flat parameter vector.
    pub fn from_params(sizes: &[usize], params: Vec<S>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(CoreError::ShapeMismatch {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(CoreError::NonFinite("network parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn zero_grads(&self) -> Vec<S> {
        vec![S::zero(); self.params.len()]
    }

    fn layer(&self, l: usize) -> (usize, usize, &[S], &[S]) {
        let (fi, fo) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offsets[l];
        let w = &self.params[off..off + fi * fo];
        let b = &self.params[off + fi * fo..off + fi * fo + fo];
        (fi, fo, w, b)
    }

    fn affine(&self, l: usize, x: &[S]) -> Vec<S> {
        let (fi, fo, w, b) = self.layer(l);
        let mut z = b.to_vec();
        for (j, zj) in z.iter_mut().enumerate().take(fo) {
            let row = &w[j * fi..(j + 1) * fi];
            let mut s = *zj;
            for (wi, xi) in row.iter().zip(x) {
                s += *wi * *xi;
            }
            *zj = s;
        }
        z
    }

    fn check_input(&self, x: &[S]) -> Result<()> {
        if x.len() != self.sizes[0] {
            return Err(CoreError::ShapeMismatch {
                expected: self.sizes[0],
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_input(x)?;
        let last = self.n_layers() - 1;
        let mut h = x.to_vec();
        for l in 0..self.n_layers() {
            let mut z = self.affine(l, &h);
            if l != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            h = z;
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &[S]) -> Result<Tape<S>> {
        self.check_input(x)?;
        let last = self.n_layers() - 1;
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        for l in 0..self.n_layers() {
            let mut z = self.affine(l, &acts[l]);
            if l != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        Ok(Tape { acts })
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂output`; returns `∂L/∂input`.
    pub fn backward(&self, tape: &Tape<S>, d_out: &[S], grads: &mut [S]) -> Vec<S> {
        debug_assert_eq!(d_out.len(), self.output_dim());
        debug_assert_eq!(grads.len(), self.params.len());
        let last = self.n_layers() - 1;
        let mut delta = d_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            if l != last {
                // tanh'(z) = 1 - tanh(z)²
                for (d, a) in delta.iter_mut().zip(&tape.acts[l + 1]) {
                    *d *= S::one() - *a * *a;
                }
            }
            let (fi, fo, w, _) = self.layer(l);
            let off = self.offsets[l];
            let input = &tape.acts[l];
            for j in 0..fo {
                let dj = delta[j];
                if dj == S::zero() {
                    continue;
                }
                let gw = &mut grads[off + j * fi..off + (j + 1) * fi];
                for (g, xi) in gw.iter_mut().zip(input) {
                    *g += dj * *xi;
                }
                grads[off + fi * fo + j] += dj;
            }
            let mut prev = vec![S::zero(); fi];
            for j in 0..fo {
                let dj = delta[j];
                if dj == S::zero() {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[j * fi..(j + 1) * fi]) {
                    *p += dj * *wi;
                }
            }
            delta = prev;
        }
        delta
    }
}

/// Mean squared error `1/N Σ ‖f(x) − y‖²` and its parameter gradient.
pub fn mse_loss_grad<S: Scalar>(net: &Mlp<S>, xs: &[Vec<S>], ys: &[Vec<S>]) -> Result<(S, Vec<S>)> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(CoreError::InvalidInput(format!(
            "batch of {} inputs and {} targets",
            xs.len(),
            ys.len()
        )));
    }
    let n = S::of_usize(xs.len());
    let mut grads = net.zero_grads();
    let mut loss = S::zero();
    for (x, y) in xs.iter().zip(ys) {
        let tape = net.forward_cached(x)?;
        let d: Vec<S> = tape
            .output()
            .iter()
            .zip(y)
            .map(|(o, t)| {
                let e = *o - *t;
                loss += e * e;
                S::c(2.0) * e / n
            })
            .collect();
        net.backward(&tape, &d, &mut grads);
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(CoreError::NonFinite(format!("loss {loss}")));
    }
    Ok((loss, grads))
}
