use rand::Rng;

use super::linalg::gemm;
use super::{init_uniform, Mode, NnRng, Param, Tensor};
use crate::error::{Error, Result};

fn image_dims(t: &Tensor, what: &str) -> Result<(usize, usize, usize, usize)> {
    match t.shape[..] {
        [n, h, w, c] => Ok((n, h, w, c)),
        _ => Err(Error::Shape(format!("{what} expects N x H x W x C, got {:?}", t.shape))),
    }
}

/// Valid (unpadded) stride-1 cross-correlation:
/// `Y[i,j,k] = sum_{a,b,c} W[a,b,c,k] * X[i+a, j+b, c] + bias[k]`.
///
/// Weights are stored as a `(kh * kw * in_channels) x out_channels` matrix so
/// that the forward pass is one GEMM over unfolded input patches.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<ConvCache>,
}

#[derive(Debug, Clone)]
struct ConvCache {
    cols: Vec<f64>,
    input_shape: [usize; 4],
}

impl Conv2d {
    pub fn new(name: &str, kernel_h: usize, kernel_w: usize, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kernel_h,
            kernel_w,
            in_channels,
            out_channels,
            weight: Param::zeros(
                format!("{name}.weight"),
                vec![kernel_h, kernel_w, in_channels, out_channels],
            ),
            bias: Param::zeros(format!("{name}.bias"), vec![out_channels]),
            cache: None,
        }
    }

    pub fn init(&mut self, rng: &mut NnRng) {
        let fan_in = self.patch_len();
        init_uniform(&mut self.weight.value, fan_in, rng);
        self.bias.value.iter_mut().for_each(|b| *b = 0.0);
    }

    fn patch_len(&self) -> usize {
        self.kernel_h * self.kernel_w * self.in_channels
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if h < self.kernel_h || w < self.kernel_w {
            return Err(Error::Shape(format!(
                "input {h}x{w} smaller than {}x{} kernel",
                self.kernel_h, self.kernel_w
            )));
        }
        Ok((h - self.kernel_h + 1, w - self.kernel_w + 1))
    }

    fn unfold(&self, input: &Tensor, oh: usize, ow: usize) -> Vec<f64> {
        let (n, h, w, c) = (input.shape[0], input.shape[1], input.shape[2], input.shape[3]);
        let plen = self.patch_len();
        let mut cols = vec![0.0; n * oh * ow * plen];
        let run = self.kernel_w * c;
        for s in 0..n {
            let img = &input.data[s * h * w * c..(s + 1) * h * w * c];
            for i in 0..oh {
                for j in 0..ow {
                    let dst = ((s * oh + i) * ow + j) * plen;
                    for a in 0..self.kernel_h {
                        let src = ((i + a) * w + j) * c;
                        cols[dst + a * run..dst + (a + 1) * run].copy_from_slice(&img[src..src + run]);
                    }
                }
            }
        }
        cols
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let (n, h, w, c) = image_dims(input, "conv2d")?;
        if c != self.in_channels {
            return Err(Error::Shape(format!("conv2d expects {} channels, got {c}", self.in_channels)));
        }
        let (oh, ow) = self.output_hw(h, w)?;
        let cols = self.unfold(input, oh, ow);
        let rows = n * oh * ow;
        let k = self.out_channels;
        let mut out = Vec::with_capacity(rows * k);
        for _ in 0..rows {
            out.extend_from_slice(&self.bias.value);
        }
        gemm(rows, self.patch_len(), k, &cols, false, &self.weight.value, false, &mut out, 1.0);
        self.cache = match mode {
            Mode::Train => Some(ConvCache {
                cols,
                input_shape: [n, h, w, c],
            }),
            Mode::Eval => None,
        };
        Tensor::new(vec![n, oh, ow, k], out)
    }

    /// Accumulates weight/bias gradients; returns the input gradient when
    /// `need_input_grad` is set.
    pub fn backward(&mut self, grad_out: &Tensor, need_input_grad: bool) -> Result<Option<Tensor>> {
        let cache = self.cache.take().ok_or(Error::GraphReuse("conv2d"))?;
        let [n, h, w, c] = cache.input_shape;
        let (oh, ow) = self.output_hw(h, w)?;
        let rows = n * oh * ow;
        let k = self.out_channels;
        let plen = self.patch_len();
        if grad_out.len() != rows * k {
            return Err(Error::Shape("conv2d gradient does not match output".into()));
        }
        gemm(plen, rows, k, &cache.cols, true, &grad_out.data, false, &mut self.weight.grad, 1.0);
        for r in 0..rows {
            for (g, d) in self.bias.grad.iter_mut().zip(&grad_out.data[r * k..(r + 1) * k]) {
                *g += d;
            }
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut dcols = vec![0.0; rows * plen];
        gemm(rows, k, plen, &grad_out.data, false, &self.weight.value, true, &mut dcols, 0.0);
        let mut dx = vec![0.0; n * h * w * c];
        let run = self.kernel_w * c;
        for s in 0..n {
            let img = &mut dx[s * h * w * c..(s + 1) * h * w * c];
            for i in 0..oh {
                for j in 0..ow {
                    let src = ((s * oh + i) * ow + j) * plen;
                    for a in 0..self.kernel_h {
                        let dst = ((i + a) * w + j) * c;
                        for (d, v) in img[dst..dst + run].iter_mut().zip(&dcols[src + a * run..src + (a + 1) * run]) {
                            *d += v;
                        }
                    }
                }
            }
        }
        Ok(Some(Tensor::new(vec![n, h, w, c], dx)?))
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}

/// Non-overlapping max pooling; trailing rows/columns that do not fill a
/// window are dropped.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub pool_h: usize,
    pub pool_w: usize,
    cache: Option<(Vec<usize>, [usize; 4])>,
}

impl MaxPool2d {
    pub fn new(pool_h: usize, pool_w: usize) -> Self {
        Self {
            pool_h,
            pool_w,
            cache: None,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (oh, ow) = (h / self.pool_h, w / self.pool_w);
        if oh == 0 || ow == 0 {
            return Err(Error::Shape(format!("input {h}x{w} smaller than the pooling window")));
        }
        Ok((oh, ow))
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let (n, h, w, c) = image_dims(input, "maxpool")?;
        let (oh, ow) = self.output_hw(h, w)?;
        let mut out = Vec::with_capacity(n * oh * ow * c);
        let mut argmax = Vec::with_capacity(n * oh * ow * c);
        for s in 0..n {
            for i in 0..oh {
                for j in 0..ow {
                    for ch in 0..c {
                        let mut best_idx = ((s * h + i * self.pool_h) * w + j * self.pool_w) * c + ch;
                        let mut best = input.data[best_idx];
                        for a in 0..self.pool_h {
                            for b in 0..self.pool_w {
                                let idx = ((s * h + i * self.pool_h + a) * w + j * self.pool_w + b) * c + ch;
                                if input.data[idx] > best {
                                    best = input.data[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out.push(best);
                        argmax.push(best_idx);
                    }
                }
            }
        }
        self.cache = (mode == Mode::Train).then_some((argmax, [n, h, w, c]));
        Tensor::new(vec![n, oh, ow, c], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (argmax, shape) = self.cache.take().ok_or(Error::GraphReuse("maxpool"))?;
        let mut dx = Tensor::zeros(shape.to_vec());
        for (idx, g) in argmax.iter().zip(&grad_out.data) {
            dx.data[*idx] += g;
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    cache: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Tensor {
        let data: Vec<f64> = input.data.iter().map(|v| v.max(0.0)).collect();
        self.cache = (mode == Mode::Train).then(|| input.data.iter().map(|v| *v > 0.0).collect());
        Tensor {
            shape: input.shape.clone(),
            data,
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mask = self.cache.take().ok_or(Error::GraphReuse("relu"))?;
        Ok(Tensor {
            shape: grad_out.shape.clone(),
            data: grad_out
                .data
                .iter()
                .zip(&mask)
                .map(|(g, m)| if *m { *g } else { 0.0 })
                .collect(),
        })
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` in training,
/// evaluation is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    cache: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        Self { rate, cache: None }
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut NnRng) -> Tensor {
        if mode == Mode::Eval {
            self.cache = None;
            return input.clone();
        }
        let keep = 1.0 - self.rate;
        let mask: Vec<f64> = input
            .data
            .iter()
            .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let data = input.data.iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.cache = Some(mask);
        Tensor {
            shape: input.shape.clone(),
            data,
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mask = self.cache.take().ok_or(Error::GraphReuse("dropout"))?;
        Ok(Tensor {
            shape: grad_out.shape.clone(),
            data: grad_out.data.iter().zip(&mask).map(|(g, m)| g * m).collect(),
        })
    }
}

/// Affine map `Y = X W + b` on `N x in` inputs.
#[derive(Debug, Clone)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: Param::zeros(format!("{name}.weight"), vec![inputs, outputs]),
            bias: Param::zeros(format!("{name}.bias"), vec![outputs]),
            cache: None,
        }
    }

    pub fn init(&mut self, rng: &mut NnRng) {
        init_uniform(&mut self.weight.value, self.inputs, rng);
        self.bias.value.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        if input.row_len() != self.inputs {
            return Err(Error::Shape(format!(
                "dense expects {} inputs, got {}",
                self.inputs,
                input.row_len()
            )));
        }
        let n = input.rows();
        let mut out = Vec::with_capacity(n * self.outputs);
        for _ in 0..n {
            out.extend_from_slice(&self.bias.value);
        }
        gemm(n, self.inputs, self.outputs, &input.data, false, &self.weight.value, false, &mut out, 1.0);
        self.cache = (mode == Mode::Train).then(|| input.clone());
        Tensor::new(vec![n, self.outputs], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self.cache.take().ok_or(Error::GraphReuse("dense"))?;
        let n = input.rows();
        if grad_out.len() != n * self.outputs {
            return Err(Error::Shape("dense gradient does not match output".into()));
        }
        gemm(self.inputs, n, self.outputs, &input.data, true, &grad_out.data, false, &mut self.weight.grad, 1.0);
        for r in 0..n {
            for (g, d) in self.bias.grad.iter_mut().zip(grad_out.row(r)) {
                *g += d;
            }
        }
        let mut dx = vec![0.0; n * self.inputs];
        gemm(n, self.outputs, self.inputs, &grad_out.data, false, &self.weight.value, true, &mut dx, 0.0);
        Tensor::new(input.shape.clone(), dx)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}

/// `R` identical timesteps of `v`.
pub fn repeat_sequence(v: &Tensor, repeats: usize) -> Result<Vec<Tensor>> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeat count must be >= 1".into()));
    }
    Ok(vec![v.clone(); repeats])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> NnRng {
        NnRng::seed_from_u64(7)
    }

    #[test]
    fn one_by_one_identity_kernel() {
        let mut conv = Conv2d::new("c", 1, 1, 1, 1);
        conv.weight.value[0] = 1.0;
        let x = Tensor::new(vec![1, 2, 3, 1], (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(conv.forward(&x, Mode::Eval).unwrap().data, x.data);
    }

    #[test]
    fn ones_kernel_sums() {
        let mut conv = Conv2d::new("c", 2, 2, 1, 1);
        conv.weight.value.iter_mut().for_each(|w| *w = 1.0);
        let x = Tensor::new(vec![1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape, vec![1, 1, 1, 1]);
        assert_eq!(y.data, vec![10.0]);
    }

    #[test]
    fn conv_matches_quadruple_loop() {
        let mut r = rng();
        let mut conv = Conv2d::new("c", 3, 3, 2, 4);
        conv.init(&mut r);
        conv.bias.value.iter_mut().enumerate().for_each(|(i, b)| *b = i as f64 * 0.1);
        let x = Tensor::new(vec![1, 5, 5, 2], (0..50).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let y = conv.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape, vec![1, 3, 3, 4]);
        let wv = |a: usize, b: usize, c: usize, k: usize| conv.weight.value[((a * 3 + b) * 2 + c) * 4 + k];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..4 {
                    let mut s = conv.bias.value[k];
                    for a in 0..3 {
                        for b in 0..3 {
                            for c in 0..2 {
                                s += wv(a, b, c, k) * x.data[((i + a) * 5 + (j + b)) * 2 + c];
                            }
                        }
                    }
                    assert!((y.data[(i * 3 + j) * 4 + k] - s).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn conv_rejects_small_input() {
        let mut conv = Conv2d::new("c", 3, 3, 1, 1);
        assert!(conv.forward(&Tensor::zeros(vec![1, 2, 5, 1]), Mode::Eval).is_err());
        assert!(conv.forward(&Tensor::zeros(vec![1, 5, 5, 2]), Mode::Eval).is_err());
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut dense = Dense::new("d", 2, 2);
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let y = dense.forward(&x, Mode::Train).unwrap();
        dense.backward(&y).unwrap();
        assert!(matches!(dense.backward(&y), Err(Error::GraphReuse(_))));
        let mut relu = Relu::new();
        relu.forward(&x, Mode::Eval);
        assert!(relu.backward(&x).is_err());
    }

    #[test]
    fn dense_identity() {
        let mut dense = Dense::new("d", 3, 3);
        for i in 0..3 {
            dense.weight.value[i * 3 + i] = 1.0;
        }
        let x = Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap();
        assert_eq!(dense.forward(&x, Mode::Eval).unwrap().data, x.data);
    }

    #[test]
    fn pool_picks_maxima() {
        let mut pool = MaxPool2d::new(2, 2);
        let x = Tensor::new(vec![1, 3, 3, 1], vec![1.0, 5.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 9.0]).unwrap();
        let y = pool.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.data, vec![5.0]);
        let g = pool.backward(&Tensor::new(vec![1, 1, 1, 1], vec![2.0]).unwrap()).unwrap();
        assert_eq!(g.data[1], 2.0);
        assert_eq!(g.data.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut d = Dropout::new(0.2);
        let mut r = rng();
        let x = Tensor::new(vec![1, 100_000], vec![1.0; 100_000]).unwrap();
        let y = d.forward(&x, Mode::Train, &mut r);
        let mean = y.data.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        assert_eq!(d.forward(&x, Mode::Eval, &mut r).data, x.data);
    }

    #[test]
    fn repeat_sequence_contract() {
        let v = Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let seq = repeat_sequence(&v, 4).unwrap();
        assert_eq!(seq.len(), 4);
        assert!(seq.iter().all(|t| *t == v));
        assert_eq!(repeat_sequence(&v, 1).unwrap(), vec![v.clone()]);
        assert!(repeat_sequence(&v, 0).is_err());
    }
}
