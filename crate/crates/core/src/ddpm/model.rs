//! A small dilated-convolution epsilon predictor with a hand-written
//! backward pass.
//!
//! Per layer `l` with dilation `d`:
//! `z = W_l * h (3 taps at -d, 0, +d) + b_l + P_l g + Q_l mel(frame(n))`,
//! `a = tanh(z)`, `h <- (h + R_l a + r_l) / sqrt(2)`, `skip += S_l a`.
//! The input is lifted by `h = SiLU(w_in y + b_in)`, the output is
//! `w_out . SiLU(skip) + b_out`, and `g = SiLU(W_e emb(level) + b_e)` plus a
//! learned label row.

use std::collections::BTreeMap;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{Conditioner, Denoise};
use crate::{Error, RandomStream, Real, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn new(name: impl Into<String>, shape: &[usize]) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Named tensors stored back to back in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    specs: Vec<TensorSpec>,
    offsets: BTreeMap<String, usize>,
    values: Vec<T>,
}

impl<T: Real> ParamStore<T> {
    pub fn zeros(specs: Vec<TensorSpec>) -> Self {
        let mut offsets = BTreeMap::new();
        let mut total = 0;
        for spec in &specs {
            offsets.insert(spec.name.clone(), total);
            total += spec.numel();
        }
        Self {
            specs,
            offsets,
            values: vec![T::zero(); total],
        }
    }

    pub fn from_values(specs: Vec<TensorSpec>, values: Vec<T>) -> Result<Self> {
        let mut store = Self::zeros(specs);
        if values.len() != store.values.len() {
            return Err(Error::ShapeMismatch {
                expected: store.values.len(),
                actual: values.len(),
            });
        }
        store.values = values;
        Ok(store)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            specs: self.specs.clone(),
            offsets: self.offsets.clone(),
            values: vec![T::zero(); self.values.len()],
        }
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn range(&self, name: &str) -> (usize, usize, &TensorSpec) {
        let off = *self.offsets.get(name).unwrap_or_else(|| panic!("no tensor {name}"));
        let spec = self.specs.iter().find(|s| s.name == name).expect("spec for offset");
        (off, off + spec.numel(), spec)
    }

    pub fn tensor(&self, name: &str) -> &[T] {
        let (a, b, _) = self.range(name);
        &self.values[a..b]
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [T] {
        let (a, b, _) = self.range(name);
        &mut self.values[a..b]
    }

    /// Row-major view; 1-D tensors become a single column.
    pub fn matrix(&self, name: &str) -> ArrayView2<'_, T> {
        let (a, b, spec) = self.range(name);
        let rows = spec.shape[0];
        ArrayView2::from_shape((rows, (b - a) / rows.max(1)), &self.values[a..b]).expect("contiguous tensor")
    }

    fn matrix_mut(&mut self, name: &str) -> ndarray::ArrayViewMut2<'_, T> {
        let (a, b, spec) = self.range(name);
        let rows = spec.shape[0];
        ndarray::ArrayViewMut2::from_shape((rows, (b - a) / rows.max(1)), &mut self.values[a..b])
            .expect("contiguous tensor")
    }

    fn vector(&self, name: &str) -> ArrayView1<'_, T> {
        ArrayView1::from(self.tensor(name))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    pub channels: usize,
    pub dilations: Vec<usize>,
    pub embedding_dim: usize,
    pub n_mels: usize,
    pub labels: usize,
    /// Multiplies `sqrt(alpha_bar)` before the sinusoidal embedding.
    pub level_scale: f64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            channels: 32,
            dilations: vec![1, 2, 4, 8],
            embedding_dim: 32,
            n_mels: 80,
            labels: 3,
            level_scale: 1000.0,
        }
    }
}

impl DenoiserConfig {
    fn specs(&self) -> Vec<TensorSpec> {
        let (c, e, m) = (self.channels, self.embedding_dim, self.n_mels);
        let mut specs = vec![
            TensorSpec::new("input.w", &[c]),
            TensorSpec::new("input.b", &[c]),
            TensorSpec::new("level.w", &[c, e]),
            TensorSpec::new("level.b", &[c]),
            TensorSpec::new("label", &[self.labels, c]),
        ];
        for l in 0..self.dilations.len() {
            for k in 0..3 {
                specs.push(TensorSpec::new(format!("layer{l}.conv{k}"), &[c, c]));
            }
            specs.push(TensorSpec::new(format!("layer{l}.conv_b"), &[c]));
            specs.push(TensorSpec::new(format!("layer{l}.global"), &[c, c]));
            specs.push(TensorSpec::new(format!("layer{l}.mel"), &[c, m]));
            specs.push(TensorSpec::new(format!("layer{l}.res"), &[c, c]));
            specs.push(TensorSpec::new(format!("layer{l}.res_b"), &[c]));
            specs.push(TensorSpec::new(format!("layer{l}.skip"), &[c, c]));
        }
        specs.push(TensorSpec::new("output.w", &[c]));
        specs.push(TensorSpec::new("output.b", &[1]));
        specs
    }

    fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.dilations.is_empty() || self.dilations.contains(&0) {
            return Err(Error::Config("denoiser needs channels > 0 and positive dilations".into()));
        }
        if self.embedding_dim < 4 || !self.embedding_dim.is_multiple_of(2) {
            return Err(Error::Config("embedding_dim must be even and at least 4".into()));
        }
        Ok(())
    }
}

/// Sinusoidal embedding of `scale * level`; frequencies span `1` to `1e-4`.
pub fn level_embedding<T: Real>(level: T, dim: usize, scale: f64) -> Array1<T> {
    let half = dim / 2;
    let x = scale * level.as_f64();
    let mut out = Array1::zeros(dim);
    for k in 0..half {
        let freq = 10f64.powf(-4.0 * k as f64 / (half - 1).max(1) as f64);
        out[k] = T::lit((x * freq).sin());
        out[k + half] = T::lit((x * freq).cos());
    }
    out
}

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn silu<T: Real>(x: T) -> T {
    x * sigmoid(x)
}

fn silu_grad<T: Real>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::one() + x * (T::one() - s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyDenoiser<T> {
    config: DenoiserConfig,
    params: ParamStore<T>,
}

struct LayerCache<T> {
    h_in: Array2<T>,
    a: Array2<T>,
}

/// Activations kept for [`ToyDenoiser::backward`].
pub struct ForwardPass<T> {
    y: Vec<T>,
    a0: Array2<T>,
    e: Array1<T>,
    ge: Array1<T>,
    g: Array1<T>,
    layers: Vec<LayerCache<T>>,
    skip: Array2<T>,
    frames: Vec<usize>,
}

impl<T: Real> ToyDenoiser<T> {
    /// Random initialisation: weights `N(0, 1/fan_in)`, biases zero.
    pub fn new(config: DenoiserConfig, rng: &mut RandomStream) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::zeros(config.specs());
        let specs = params.specs.clone();
        for spec in &specs {
            let fan_in = match spec.name.as_str() {
                "input.w" | "output.b" => 1,
                "label" => 100,
                n if n.ends_with(".b") || n.ends_with("_b") => continue,
                _ => *spec.shape.last().expect("non-scalar weight"),
            };
            let std = 1.0 / (fan_in as f64).sqrt();
            for v in params.tensor_mut(&spec.name) {
                *v = T::lit(std * rng.normal());
            }
        }
        Ok(Self { config, params })
    }

    pub fn from_params(config: DenoiserConfig, params: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        if params.specs() != config.specs().as_slice() {
            return Err(Error::Checkpoint("tensor layout does not match the denoiser config".into()));
        }
        Ok(Self { config, params })
    }

    /// Zeroes the output projection so the initial prediction is exactly 0.
    pub fn zero_output(mut self) -> Self {
        for name in ["output.w", "output.b"] {
            self.params.tensor_mut(name).fill(T::zero());
        }
        self
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    fn check_cond(&self, cond: &Conditioner<T>) {
        assert_eq!(
            cond.mel.ncols(),
            self.config.n_mels,
            "conditioner has {} mel bands, denoiser expects {}",
            cond.mel.ncols(),
            self.config.n_mels
        );
        assert!(cond.mel.nrows() > 0 && cond.hop > 0, "empty conditioner");
    }

    pub fn forward_pass(&self, y: &[T], cond: &Conditioner<T>, level: T) -> (Vec<T>, ForwardPass<T>) {
        self.check_cond(cond);
        let p = &self.params;
        let c = self.config.channels;
        let len = y.len();
        let kappa = T::lit(std::f64::consts::FRAC_1_SQRT_2);

        let (w_in, b_in) = (p.vector("input.w"), p.vector("input.b"));
        let a0 = Array2::from_shape_fn((c, len), |(i, n)| w_in[i] * y[n] + b_in[i]);
        let mut h = a0.mapv(silu);

        let e = level_embedding(level, self.config.embedding_dim, self.config.level_scale);
        let ge = p.matrix("level.w").dot(&e) + p.vector("level.b");
        let mut g = ge.mapv(silu);
        if let Some(label) = cond.label {
            g = g + p.matrix("label").row(label);
        }

        let frames: Vec<usize> = (0..len).map(|n| cond.frame_of(n)).collect();
        let mut skip = Array2::<T>::zeros((c, len));
        let mut layers = Vec::with_capacity(self.config.dilations.len());
        for (l, &d) in self.config.dilations.iter().enumerate() {
            let mut z = p.matrix(&format!("layer{l}.conv1")).dot(&h);
            if d < len {
                let w0 = p.matrix(&format!("layer{l}.conv0"));
                let w2 = p.matrix(&format!("layer{l}.conv2"));
                general_mat_mul(T::one(), &w0, &h.slice(s![.., ..len - d]), T::one(), &mut z.slice_mut(s![.., d..]));
                general_mat_mul(T::one(), &w2, &h.slice(s![.., d..]), T::one(), &mut z.slice_mut(s![.., ..len - d]));
            }
            let bias = p.matrix(&format!("layer{l}.global")).dot(&g) + p.vector(&format!("layer{l}.conv_b"));
            let qm = p.matrix(&format!("layer{l}.mel")).dot(&cond.mel.t());
            for (n, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
                let q = qm.column(frames[n]);
                for i in 0..c {
                    col[i] = col[i] + bias[i] + q[i];
                }
            }
            let a = z.mapv(|v| v.tanh());
            general_mat_mul(T::one(), &p.matrix(&format!("layer{l}.skip")), &a, T::one(), &mut skip);
            let mut h_next = h.clone();
            general_mat_mul(T::one(), &p.matrix(&format!("layer{l}.res")), &a, T::one(), &mut h_next);
            let rb = p.vector(&format!("layer{l}.res_b"));
            for (mut row, &b) in h_next.axis_iter_mut(Axis(0)).zip(rb.iter()) {
                row.mapv_inplace(|v| (v + b) * kappa);
            }
            layers.push(LayerCache { h_in: h, a });
            h = h_next;
        }

        let s_act = skip.mapv(silu);
        let out_b = p.tensor("output.b")[0];
        let out = p.vector("output.w").dot(&s_act).mapv(|v| v + out_b).to_vec();
        (
            out,
            ForwardPass {
                y: y.to_vec(),
                a0,
                e,
                ge,
                g,
                layers,
                skip,
                frames,
            },
        )
    }

    /// Accumulates `d loss / d params` into `grads` given `dout = d loss / d output`.
    pub fn backward(&self, pass: &ForwardPass<T>, cond: &Conditioner<T>, dout: &[T], grads: &mut ParamStore<T>) {
        let p = &self.params;
        let c = self.config.channels;
        let len = pass.y.len();
        assert_eq!(dout.len(), len, "gradient length");
        let kappa = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let dout = ArrayView1::from(dout);

        let s_act = pass.skip.mapv(silu);
        let db = dout.sum();
        let ob = &mut grads.tensor_mut("output.b")[0];
        *ob = *ob + db;
        {
            let dw = s_act.dot(&dout);
            for (g, v) in grads.tensor_mut("output.w").iter_mut().zip(dw.iter()) {
                *g = *g + *v;
            }
        }
        let w_out = p.vector("output.w");
        let dskip = Array2::from_shape_fn((c, len), |(i, n)| w_out[i] * dout[n] * silu_grad(pass.skip[[i, n]]));

        let mut dh = Array2::<T>::zeros((c, len));
        let mut dg = Array1::<T>::zeros(c);
        for (l, &d) in self.config.dilations.iter().enumerate().rev() {
            let cache = &pass.layers[l];
            let name = |t: &str| format!("layer{l}.{t}");
            // dh holds d loss / d h_next here
            let dh_next = dh.mapv(|v| v * kappa);
            general_mat_mul(T::one(), &dh_next, &cache.a.t(), T::one(), &mut grads.matrix_mut(&name("res")));
            let drb = dh_next.sum_axis(Axis(1));
            for (g, v) in grads.tensor_mut(&name("res_b")).iter_mut().zip(drb.iter()) {
                *g = *g + *v;
            }
            general_mat_mul(T::one(), &dskip, &cache.a.t(), T::one(), &mut grads.matrix_mut(&name("skip")));
            let mut da = p.matrix(&name("skip")).t().dot(&dskip);
            general_mat_mul(T::one(), &p.matrix(&name("res")).t(), &dh_next, T::one(), &mut da);
            let dz = Array2::from_shape_fn((c, len), |(i, n)| {
                let a = cache.a[[i, n]];
                da[[i, n]] * (T::one() - a * a)
            });

            let sdz = dz.sum_axis(Axis(1));
            for (g, v) in grads.tensor_mut(&name("conv_b")).iter_mut().zip(sdz.iter()) {
                *g = *g + *v;
            }
            {
                let mut dp = grads.matrix_mut(&name("global"));
                for i in 0..c {
                    for j in 0..c {
                        dp[[i, j]] = dp[[i, j]] + sdz[i] * pass.g[j];
                    }
                }
            }
            dg = dg + p.matrix(&name("global")).t().dot(&sdz);

            let mut dqm = Array2::<T>::zeros((c, cond.mel.nrows()));
            for (n, col) in dz.axis_iter(Axis(1)).enumerate() {
                let mut target = dqm.column_mut(pass.frames[n]);
                target.zip_mut_with(&col, |t, &v| *t = *t + v);
            }
            general_mat_mul(T::one(), &dqm, &cond.mel, T::one(), &mut grads.matrix_mut(&name("mel")));

            let h = &cache.h_in;
            general_mat_mul(T::one(), &dz, &h.t(), T::one(), &mut grads.matrix_mut(&name("conv1")));
            let mut dh_in = dh_next;
            general_mat_mul(T::one(), &p.matrix(&name("conv1")).t(), &dz, T::one(), &mut dh_in);
            if d < len {
                let dz_late = dz.slice(s![.., d..]);
                let dz_early = dz.slice(s![.., ..len - d]);
                general_mat_mul(T::one(), &dz_late, &h.slice(s![.., ..len - d]).t(), T::one(), &mut grads.matrix_mut(&name("conv0")));
                general_mat_mul(T::one(), &dz_early, &h.slice(s![.., d..]).t(), T::one(), &mut grads.matrix_mut(&name("conv2")));
                general_mat_mul(T::one(), &p.matrix(&name("conv0")).t(), &dz_late, T::one(), &mut dh_in.slice_mut(s![.., ..len - d]));
                general_mat_mul(T::one(), &p.matrix(&name("conv2")).t(), &dz_early, T::one(), &mut dh_in.slice_mut(s![.., d..]));
            }
            dh = dh_in;
        }

        let da0 = Array2::from_shape_fn((c, len), |(i, n)| dh[[i, n]] * silu_grad(pass.a0[[i, n]]));
        let y = ArrayView1::from(&pass.y[..]);
        let dw_in = da0.dot(&y);
        let db_in = da0.sum_axis(Axis(1));
        for (g, v) in grads.tensor_mut("input.w").iter_mut().zip(dw_in.iter()) {
            *g = *g + *v;
        }
        for (g, v) in grads.tensor_mut("input.b").iter_mut().zip(db_in.iter()) {
            *g = *g + *v;
        }

        if let Some(label) = cond.label {
            let mut row = grads.matrix_mut("label");
            let mut row = row.row_mut(label);
            row.zip_mut_with(&dg, |t, &v| *t = *t + v);
        }
        let dge = Array1::from_shape_fn(c, |i| dg[i] * silu_grad(pass.ge[i]));
        {
            let mut dw = grads.matrix_mut("level.w");
            for i in 0..c {
                for k in 0..pass.e.len() {
                    dw[[i, k]] = dw[[i, k]] + dge[i] * pass.e[k];
                }
            }
        }
        for (g, v) in grads.tensor_mut("level.b").iter_mut().zip(dge.iter()) {
            *g = *g + *v;
        }
    }
}

impl<T: Real> Denoise<T> for ToyDenoiser<T> {
    fn predict(&self, y: &[T], cond: &Conditioner<T>, level: T) -> Vec<T> {
        self.forward_pass(y, cond, level).0
    }
}
