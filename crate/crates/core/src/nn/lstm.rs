use super::linalg::gemm;
use super::{init_uniform, Mode, NnRng, Param, Tensor};
use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden and cell state for a batch, each `N x hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Tensor,
    pub cell: Tensor,
}

#[derive(Debug, Clone)]
enum StepInputs {
    Sequence(Vec<Tensor>),
    Repeated(Tensor, usize),
}

#[derive(Debug, Clone)]
struct StepCache {
    /// Activated gates `[i, f, g, o]`, `N x 4H`.
    gates: Vec<f64>,
    cell_prev: Vec<f64>,
    cell_tanh: Vec<f64>,
    hidden_prev: Vec<f64>,
}

/// Single LSTM layer with gate order input, forget, candidate, output.
///
/// `z = x Wx + h_prev Wh + b`, `c = f * c_prev + i * g`, `h = o * tanh(c)`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub inputs: usize,
    pub hidden: usize,
    pub w_input: Param,
    pub w_hidden: Param,
    pub bias: Param,
    cache: Option<(StepInputs, Vec<StepCache>)>,
}

/// Gradient with respect to the layer input, matching how it was fed.
#[derive(Debug, Clone, PartialEq)]
pub enum LstmInputGrad {
    Sequence(Vec<Tensor>),
    Repeated(Tensor),
}

impl Lstm {
    pub fn new(name: &str, inputs: usize, hidden: usize) -> Self {
        Self {
            inputs,
            hidden,
            w_input: Param::zeros(format!("{name}.w_input"), vec![inputs, 4 * hidden]),
            w_hidden: Param::zeros(format!("{name}.w_hidden"), vec![hidden, 4 * hidden]),
            bias: Param::zeros(format!("{name}.bias"), vec![4 * hidden]),
            cache: None,
        }
    }

    /// Fan-in scaled weights; forget-gate bias starts at 1.
    pub fn init(&mut self, rng: &mut NnRng) {
        init_uniform(&mut self.w_input.value, self.inputs + self.hidden, rng);
        init_uniform(&mut self.w_hidden.value, self.inputs + self.hidden, rng);
        let h = self.hidden;
        for (j, b) in self.bias.value.iter_mut().enumerate() {
            *b = if (h..2 * h).contains(&j) { 1.0 } else { 0.0 };
        }
    }

    fn project(&self, x: &Tensor) -> Result<Vec<f64>> {
        if x.row_len() != self.inputs {
            return Err(Error::Shape(format!("lstm expects {} inputs, got {}", self.inputs, x.row_len())));
        }
        let n = x.rows();
        let width = 4 * self.hidden;
        let mut z = Vec::with_capacity(n * width);
        for _ in 0..n {
            z.extend_from_slice(&self.bias.value);
        }
        gemm(n, self.inputs, width, &x.data, false, &self.w_input.value, false, &mut z, 1.0);
        Ok(z)
    }

    fn step(&self, projected: &[f64], state: &LstmState) -> (LstmState, StepCache) {
        let n = state.hidden.rows();
        let h = self.hidden;
        let mut z = projected.to_vec();
        gemm(n, h, 4 * h, &state.hidden.data, false, &self.w_hidden.value, false, &mut z, 1.0);
        let mut cell = vec![0.0; n * h];
        let mut hidden = vec![0.0; n * h];
        let mut cell_tanh = vec![0.0; n * h];
        for s in 0..n {
            let zs = &mut z[s * 4 * h..(s + 1) * 4 * h];
            for j in 0..h {
                zs[j] = sigmoid(zs[j]);
                zs[h + j] = sigmoid(zs[h + j]);
                zs[2 * h + j] = zs[2 * h + j].tanh();
                zs[3 * h + j] = sigmoid(zs[3 * h + j]);
                let idx = s * h + j;
                let c = zs[h + j] * state.cell.data[idx] + zs[j] * zs[2 * h + j];
                cell[idx] = c;
                cell_tanh[idx] = c.tanh();
                hidden[idx] = zs[3 * h + j] * cell_tanh[idx];
            }
        }
        let cache = StepCache {
            gates: z,
            cell_prev: state.cell.data.clone(),
            cell_tanh,
            hidden_prev: state.hidden.data.clone(),
        };
        (
            LstmState {
                hidden: Tensor { shape: vec![n, h], data: hidden },
                cell: Tensor { shape: vec![n, h], data: cell },
            },
            cache,
        )
    }

    fn zero_state(&self, n: usize) -> LstmState {
        LstmState {
            hidden: Tensor::zeros(vec![n, self.hidden]),
            cell: Tensor::zeros(vec![n, self.hidden]),
        }
    }

    fn run(&mut self, inputs: StepInputs, mode: Mode) -> Result<Vec<LstmState>> {
        let (n, steps) = match &inputs {
            StepInputs::Sequence(xs) => (xs.first().map_or(0, Tensor::rows), xs.len()),
            StepInputs::Repeated(x, r) => (x.rows(), *r),
        };
        if steps == 0 {
            return Err(Error::Shape("lstm needs at least one timestep".into()));
        }
        let shared = match &inputs {
            StepInputs::Repeated(x, _) => Some(self.project(x)?),
            StepInputs::Sequence(_) => None,
        };
        let mut state = self.zero_state(n);
        let mut states = Vec::with_capacity(steps);
        let mut caches = Vec::with_capacity(steps);
        for t in 0..steps {
            let projected = match (&inputs, &shared) {
                (_, Some(p)) => self.step(p, &state),
                (StepInputs::Sequence(xs), None) => {
                    if xs[t].rows() != n {
                        return Err(Error::Shape("lstm timesteps have different batch sizes".into()));
                    }
                    self.step(&self.project(&xs[t])?, &state)
                }
                (StepInputs::Repeated(..), None) => unreachable!(),
            };
            let (next, cache) = projected;
            states.push(next.clone());
            caches.push(cache);
            state = next;
        }
        self.cache = (mode == Mode::Train).then_some((inputs, caches));
        Ok(states)
    }

    /// Runs the recurrence from a zero state over `xs` (each `N x inputs`)
    /// and returns the state after every step.
    pub fn forward_sequence(&mut self, xs: Vec<Tensor>, mode: Mode) -> Result<Vec<LstmState>> {
        self.run(StepInputs::Sequence(xs), mode)
    }

    /// Same as feeding `repeats` copies of `x`, but projects the input once.
    pub fn forward_repeated(&mut self, x: Tensor, repeats: usize, mode: Mode) -> Result<Vec<LstmState>> {
        if repeats == 0 {
            return Err(Error::InvalidConfig("repeat count must be >= 1".into()));
        }
        self.run(StepInputs::Repeated(x, repeats), mode)
    }

    /// `grad_hidden[t]` is the loss gradient arriving at the hidden output of
    /// step `t` from outside the recurrence (`None` for no gradient).
    pub fn backward(&mut self, grad_hidden: &[Option<Tensor>]) -> Result<LstmInputGrad> {
        let (inputs, caches) = self.cache.take().ok_or(Error::GraphReuse("lstm"))?;
        let steps = caches.len();
        if grad_hidden.len() != steps {
            return Err(Error::Shape(format!("expected {steps} hidden gradients, got {}", grad_hidden.len())));
        }
        let h = self.hidden;
        let n = caches[0].cell_prev.len() / h;
        let mut dh_next = vec![0.0; n * h];
        let mut dc_next = vec![0.0; n * h];
        let mut dz_steps: Vec<Vec<f64>> = vec![Vec::new(); steps];
        for t in (0..steps).rev() {
            let cache = &caches[t];
            let mut dz = vec![0.0; n * 4 * h];
            for s in 0..n {
                let g = &cache.gates[s * 4 * h..(s + 1) * 4 * h];
                let dzs = &mut dz[s * 4 * h..(s + 1) * 4 * h];
                for j in 0..h {
                    let idx = s * h + j;
                    let ext = grad_hidden[t].as_ref().map_or(0.0, |gh| gh.data[idx]);
                    let dh = dh_next[idx] + ext;
                    let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                    let tc = cache.cell_tanh[idx];
                    let dc = dc_next[idx] + dh * o * (1.0 - tc * tc);
                    dzs[j] = dc * cand * i * (1.0 - i);
                    dzs[h + j] = dc * cache.cell_prev[idx] * f * (1.0 - f);
                    dzs[2 * h + j] = dc * i * (1.0 - cand * cand);
                    dzs[3 * h + j] = dh * tc * o * (1.0 - o);
                    dc_next[idx] = dc * f;
                }
            }
            gemm(h, n, 4 * h, &cache.hidden_prev, true, &dz, false, &mut self.w_hidden.grad, 1.0);
            for s in 0..n {
                for (b, d) in self.bias.grad.iter_mut().zip(&dz[s * 4 * h..(s + 1) * 4 * h]) {
                    *b += d;
                }
            }
            gemm(n, 4 * h, h, &dz, false, &self.w_hidden.value, true, &mut dh_next, 0.0);
            dz_steps[t] = dz;
        }
        let width = 4 * h;
        match inputs {
            StepInputs::Repeated(x, _) => {
                let mut total = vec![0.0; n * width];
                for dz in &dz_steps {
                    total.iter_mut().zip(dz).for_each(|(a, b)| *a += b);
                }
                gemm(self.inputs, n, width, &x.data, true, &total, false, &mut self.w_input.grad, 1.0);
                let mut dx = vec![0.0; n * self.inputs];
                gemm(n, width, self.inputs, &total, false, &self.w_input.value, true, &mut dx, 0.0);
                Ok(LstmInputGrad::Repeated(Tensor::new(x.shape.clone(), dx)?))
            }
            StepInputs::Sequence(xs) => {
                let mut grads = Vec::with_capacity(steps);
                for (x, dz) in xs.iter().zip(&dz_steps) {
                    gemm(self.inputs, n, width, &x.data, true, dz, false, &mut self.w_input.grad, 1.0);
                    let mut dx = vec![0.0; n * self.inputs];
                    gemm(n, width, self.inputs, dz, false, &self.w_input.value, true, &mut dx, 0.0);
                    grads.push(Tensor::new(x.shape.clone(), dx)?);
                }
                Ok(LstmInputGrad::Sequence(grads))
            }
        }
    }

    pub fn params_mut(&mut self) -> [&mut Param; 3] {
        [&mut self.w_input, &mut self.w_hidden, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 3] {
        [&self.w_input, &self.w_hidden, &self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_weights_keep_hidden_zero() {
        let mut lstm = Lstm::new("l", 3, 2);
        let xs = vec![Tensor::zeros(vec![1, 3]); 4];
        let states = lstm.forward_sequence(xs, Mode::Eval).unwrap();
        assert!(states.iter().all(|s| s.hidden.data.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn saturated_forget_gate_holds_cell() {
        // forget gate -> 1, input gate -> 0: the cell never changes from zero
        // initial state, and with a nonzero initial cell it would be carried.
        let mut lstm = Lstm::new("l", 1, 1);
        lstm.bias.value = vec![-1e3, 1e3, 0.0, 0.0];
        lstm.w_input.value = vec![0.0, 0.0, 5.0, 1.0];
        let xs: Vec<Tensor> = (0..5).map(|t| Tensor::new(vec![1, 1], vec![t as f64]).unwrap()).collect();
        let states = lstm.forward_sequence(xs, Mode::Eval).unwrap();
        let c0 = states[0].cell.data[0];
        assert!(states.iter().all(|s| s.cell.data[0] == c0));
    }

    #[test]
    fn repeated_matches_explicit_sequence() {
        let mut rng = NnRng::seed_from_u64(3);
        let mut lstm = Lstm::new("l", 4, 3);
        lstm.init(&mut rng);
        let x = Tensor::new(vec![2, 4], vec![0.1, -0.3, 0.5, 0.2, 1.0, 0.0, -1.0, 0.4]).unwrap();
        let mut twin = lstm.clone();
        let a = lstm.forward_repeated(x.clone(), 4, Mode::Train).unwrap();
        let b = twin.forward_sequence(vec![x.clone(); 4], Mode::Train).unwrap();
        assert_eq!(a, b);
        let g: Vec<Option<Tensor>> = (0..4).map(|t| (t == 3).then(|| Tensor::new(vec![2, 3], vec![1.0; 6]).unwrap())).collect();
        let ga = lstm.backward(&g).unwrap();
        let gb = twin.backward(&g).unwrap();
        let (LstmInputGrad::Repeated(ga), LstmInputGrad::Sequence(gb)) = (ga, gb) else {
            panic!("unexpected gradient kinds");
        };
        let summed: Vec<f64> = (0..8).map(|i| gb.iter().map(|t| t.data[i]).sum()).collect();
        for (x, y) in ga.data.iter().zip(&summed) {
            assert!((x - y).abs() < 1e-12);
        }
        for (p, q) in lstm.params().iter().zip(twin.params()) {
            for (x, y) in p.grad.iter().zip(&q.grad) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
