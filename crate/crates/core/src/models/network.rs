use super::{ArchConfig, ModelKind};
use crate::error::{Error, Result};
use crate::lattice::CUBOID_COUNT;
use crate::nn::{
    softmax, softmax_cross_entropy, Conv2d, Dense, Dropout, Lstm, LstmInputGrad, MaxPool2d, Mode, NnRng, Param,
    Relu, Tensor,
};

/// One mini-batch: scaled images (`N x H x W x C`), branch inputs, class
/// labels and (for Model-3) cuboid labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub images: Tensor,
    pub phi: Option<Tensor>,
    pub labels: Vec<usize>,
    pub cuboids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetOutput {
    pub logits: Tensor,
    /// Model-3 only: the 27 cuboid logits.
    pub lattice_logits: Option<Tensor>,
}

/// Loss of one batch split into its parts; `total = ce_class + lambda * ce_lattice`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub ce_class: f64,
    pub ce_lattice: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone)]
struct FuzzyBranch {
    dense1: Dense,
    relu: Relu,
    dropout: Dropout,
    dense2: Dense,
    /// Model-3: the branch output passes through a softmax before fusion.
    lattice: bool,
    probs: Option<Tensor>,
}

/// The fusion network for one [`ModelKind`].
#[derive(Debug, Clone)]
pub struct FusionNet {
    pub kind: ModelKind,
    pub classes: usize,
    pub input_shape: [usize; 3],
    pooled: [usize; 3],
    repeats: usize,
    conv1: Conv2d,
    relu1: Relu,
    pool1: MaxPool2d,
    drop1: Dropout,
    conv2: Conv2d,
    relu2: Relu,
    pool2: MaxPool2d,
    drop2: Dropout,
    lstm1: Lstm,
    lstm2: Lstm,
    branch: Option<FuzzyBranch>,
    head: Dense,
}

impl FusionNet {
    pub fn new(
        kind: ModelKind,
        arch: &ArchConfig,
        classes: usize,
        input_shape: [usize; 3],
        dropout_rate: f64,
        repeats: usize,
    ) -> Result<Self> {
        kind.validate()?;
        arch.validate()?;
        if repeats == 0 {
            return Err(Error::InvalidConfig("repeat count must be >= 1".into()));
        }
        let [h, w, c] = input_shape;
        let [.., (ph, pw)] = arch.stage_shapes(h, w)?;
        let flat = ph * pw * arch.conv2_filters;
        let fout = kind.fuzzy_output_width(arch);
        let branch = kind.has_branch().then(|| FuzzyBranch {
            dense1: Dense::new("fuzzy.dense1", kind.fuzzy_input_width(), arch.fuzzy_hidden),
            relu: Relu::new(),
            dropout: Dropout::new(dropout_rate),
            dense2: Dense::new("fuzzy.dense2", arch.fuzzy_hidden, fout),
            lattice: kind.lambda().is_some(),
            probs: None,
        });
        Ok(Self {
            kind,
            classes,
            input_shape,
            pooled: [ph, pw, arch.conv2_filters],
            repeats,
            conv1: Conv2d::new("conv1", arch.kernel, arch.kernel, c, arch.conv1_filters),
            relu1: Relu::new(),
            pool1: MaxPool2d::new(arch.pool, arch.pool),
            drop1: Dropout::new(dropout_rate),
            conv2: Conv2d::new("conv2", arch.kernel, arch.kernel, arch.conv1_filters, arch.conv2_filters),
            relu2: Relu::new(),
            pool2: MaxPool2d::new(arch.pool, arch.pool),
            drop2: Dropout::new(dropout_rate),
            lstm1: Lstm::new("lstm1", flat, arch.lstm1_units),
            lstm2: Lstm::new("lstm2", arch.lstm1_units, arch.lstm2_units),
            branch,
            head: Dense::new("head", arch.lstm2_units + fout, classes),
        })
    }

    pub fn init(&mut self, rng: &mut NnRng) {
        self.conv1.init(rng);
        self.conv2.init(rng);
        self.lstm1.init(rng);
        self.lstm2.init(rng);
        if let Some(b) = &mut self.branch {
            b.dense1.init(rng);
            b.dense2.init(rng);
        }
        self.head.init(rng);
    }

    /// Flattened size of the spatial module's output.
    pub fn flat_size(&self) -> usize {
        self.pooled.iter().product()
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = Vec::new();
        out.extend(self.conv1.params());
        out.extend(self.conv2.params());
        out.extend(self.lstm1.params());
        out.extend(self.lstm2.params());
        if let Some(b) = &self.branch {
            out.extend(b.dense1.params());
            out.extend(b.dense2.params());
        }
        out.extend(self.head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = Vec::new();
        out.extend(self.conv1.params_mut());
        out.extend(self.conv2.params_mut());
        out.extend(self.lstm1.params_mut());
        out.extend(self.lstm2.params_mut());
        if let Some(b) = &mut self.branch {
            out.extend(b.dense1.params_mut());
            out.extend(b.dense2.params_mut());
        }
        out.extend(self.head.params_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Spatial module: two conv/ReLU/pool/dropout stages, flattened.
    pub fn spatial_forward(&mut self, images: &Tensor, mode: Mode, rng: &mut NnRng) -> Result<Tensor> {
        let [h, w, c] = self.input_shape;
        if images.shape.len() != 4 || images.shape[1..] != [h, w, c] {
            return Err(Error::Shape(format!(
                "spatial module expects N x {h} x {w} x {c}, got {:?}",
                images.shape
            )));
        }
        let x = self.conv1.forward(images, mode)?;
        let x = self.relu1.forward(&x, mode);
        let x = self.pool1.forward(&x, mode)?;
        let x = self.drop1.forward(&x, mode, rng);
        let x = self.conv2.forward(&x, mode)?;
        let x = self.relu2.forward(&x, mode);
        let x = self.pool2.forward(&x, mode)?;
        let x = self.drop2.forward(&x, mode, rng);
        Ok(x.flatten())
    }

    pub fn forward(&mut self, images: &Tensor, phi: Option<&Tensor>, mode: Mode, rng: &mut NnRng) -> Result<NetOutput> {
        let n = images.rows();
        let flat = self.spatial_forward(images, mode, rng)?;
        let states1 = self.lstm1.forward_repeated(flat, self.repeats, mode)?;
        let hidden1: Vec<Tensor> = states1.into_iter().map(|s| s.hidden).collect();
        let states2 = self.lstm2.forward_sequence(hidden1, mode)?;
        let temporal = states2.into_iter().next_back().expect("at least one step").hidden;

        let (fused, lattice_logits) = match (&mut self.branch, phi) {
            (None, None) => (temporal, None),
            (None, Some(_)) => return Err(Error::Shape(format!("{} takes no fuzzy input", self.kind))),
            (Some(_), None) => return Err(Error::Shape(format!("{} needs a fuzzy input", self.kind))),
            (Some(b), Some(phi)) => {
                if phi.rows() != n {
                    return Err(Error::Shape(format!("{} fuzzy rows for {n} images", phi.rows())));
                }
                let z = b.dense1.forward(phi, mode)?;
                let z = b.relu.forward(&z, mode);
                let z = b.dropout.forward(&z, mode, rng);
                let z = b.dense2.forward(&z, mode)?;
                if b.lattice {
                    let p = softmax(&z);
                    let fused = Tensor::concat_cols(&temporal, &p)?;
                    b.probs = (mode == Mode::Train).then_some(p);
                    (fused, Some(z))
                } else {
                    (Tensor::concat_cols(&temporal, &z)?, None)
                }
            }
        };
        let logits = self.head.forward(&fused, mode)?;
        Ok(NetOutput { logits, lattice_logits })
    }

    /// Propagates loss gradients with respect to the class logits and, for
    /// Model-3, the cuboid logits, accumulating parameter gradients.
    pub fn backward(&mut self, grad_logits: &Tensor, grad_lattice: Option<&Tensor>) -> Result<()> {
        let g = self.head.backward(grad_logits)?;
        let temporal_width = self.lstm2.hidden;
        let (g_temporal, g_fuzzy) = g.split_cols(temporal_width);

        match &mut self.branch {
            Some(b) => {
                let mut gz = g_fuzzy;
                if b.lattice {
                    let p = b.probs.take().ok_or(Error::GraphReuse("lattice softmax"))?;
                    let k = p.row_len();
                    for r in 0..p.rows() {
                        let (pr, gr) = (&p.data[r * k..(r + 1) * k], &mut gz.data[r * k..(r + 1) * k]);
                        let dot: f64 = pr.iter().zip(gr.iter()).map(|(a, b)| a * b).sum();
                        for (gv, pv) in gr.iter_mut().zip(pr) {
                            *gv = pv * (*gv - dot);
                        }
                    }
                    if let Some(extra) = grad_lattice {
                        if extra.shape != gz.shape {
                            return Err(Error::Shape("lattice gradient shape mismatch".into()));
                        }
                        gz.data.iter_mut().zip(&extra.data).for_each(|(a, b)| *a += b);
                    }
                } else if grad_lattice.is_some() {
                    return Err(Error::Shape(format!("{} has no lattice output", self.kind)));
                }
                let gz = b.dense2.backward(&gz)?;
                let gz = b.dropout.backward(&gz)?;
                let gz = b.relu.backward(&gz)?;
                b.dense1.backward(&gz)?;
            }
            None if grad_lattice.is_some() => {
                return Err(Error::Shape(format!("{} has no lattice output", self.kind)));
            }
            None => {}
        }

        let mut grads2: Vec<Option<Tensor>> = vec![None; self.repeats];
        grads2[self.repeats - 1] = Some(g_temporal);
        let LstmInputGrad::Sequence(g_hidden1) = self.lstm2.backward(&grads2)? else {
            unreachable!("lstm2 is fed a sequence");
        };
        let grads1: Vec<Option<Tensor>> = g_hidden1.into_iter().map(Some).collect();
        let LstmInputGrad::Repeated(g_flat) = self.lstm1.backward(&grads1)? else {
            unreachable!("lstm1 is fed a repeated input");
        };
        let [ph, pw, pc] = self.pooled;
        let n = g_flat.rows();
        let g = g_flat.reshape(vec![n, ph, pw, pc])?;
        let g = self.drop2.backward(&g)?;
        let g = self.pool2.backward(&g)?;
        let g = self.relu2.backward(&g)?;
        let g = self.conv2.backward(&g, true)?.expect("input gradient requested");
        let g = self.drop1.backward(&g)?;
        let g = self.pool1.backward(&g)?;
        let g = self.relu1.backward(&g)?;
        self.conv1.backward(&g, false)?;
        Ok(())
    }

    /// Training-mode forward, loss and backward for one batch. Gradients are
    /// accumulated; call [`FusionNet::zero_grad`] first.
    pub fn forward_backward(&mut self, batch: &Batch, rng: &mut NnRng) -> Result<LossParts> {
        let out = self.forward(&batch.images, batch.phi.as_ref(), Mode::Train, rng)?;
        let parts = self.loss(&out, batch)?;
        let ce = softmax_cross_entropy(&out.logits, &batch.labels)?;
        let lattice_grad = match (self.kind.lambda(), &out.lattice_logits) {
            (Some(lambda), Some(z)) => {
                let mut g = softmax_cross_entropy(z, &batch.cuboids)?.grad_logits;
                g.data.iter_mut().for_each(|v| *v *= lambda);
                Some(g)
            }
            _ => None,
        };
        self.backward(&ce.grad_logits, lattice_grad.as_ref())?;
        Ok(parts)
    }

    /// Loss of an already computed forward pass.
    pub fn loss(&self, out: &NetOutput, batch: &Batch) -> Result<LossParts> {
        let ce_class = softmax_cross_entropy(&out.logits, &batch.labels)?.loss;
        match (self.kind.lambda(), &out.lattice_logits) {
            (Some(lambda), Some(z)) => {
                if batch.cuboids.len() != batch.labels.len() || z.row_len() != CUBOID_COUNT {
                    return Err(Error::Shape("model3 needs one cuboid label per sample".into()));
                }
                let ce_lattice = softmax_cross_entropy(z, &batch.cuboids)?.loss;
                Ok(LossParts {
                    ce_class,
                    ce_lattice: Some(ce_lattice),
                    total: ce_class + lambda * ce_lattice,
                })
            }
            _ => Ok(LossParts {
                ce_class,
                ce_lattice: None,
                total: ce_class,
            }),
        }
    }
}
