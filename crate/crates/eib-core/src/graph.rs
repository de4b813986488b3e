//! Tape-based reverse-mode autodiff over [`Tensor`].
//!
//! A [`Graph`] is created per forward pass. Op methods compute values
//! eagerly and push a node recording the inputs; [`Graph::backward`] walks
//! the tape in reverse. Nodes are addressed by the copyable [`Var`] handle.
//! The op set is exactly what the models need, with the loss-bearing pieces
//! (cross entropy, the Gaussian KL, reparameterized sampling) fused into
//! single nodes so their forward values are the closed forms the rest of the
//! system quotes.

use crate::params::{ParamId, ParamSet};
use crate::tensor::Tensor;
use crate::{sc, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(u32);

impl Var {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

const LN_EPS: f64 = 1e-5;

enum Op<F> {
    Leaf,
    Add(Var, Var),
    /// (r x c) + row vector (1 x c), broadcast down the rows.
    AddRow(Var, Var),
    Mul(Var, Var),
    /// (r x c) * row vector (1 x c), broadcast down the rows.
    MulRow(Var, Var),
    Scale(Var, F),
    Matmul(Var, Var),
    Transpose(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    RowSoftmax(Var),
    CausalSoftmax(Var),
    LayerNormRows(Var),
    Gelu(Var),
    Tanh(Var),
    Clamp(Var, F, F),
    SumAll(Var),
    CrossEntropySum {
        logits: Var,
        targets: Vec<(usize, u32)>,
    },
    GaussianKl {
        mean: Var,
        log_std: Var,
    },
    Reparam {
        mean: Var,
        log_std: Var,
        eps: Tensor<F>,
    },
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    param: Option<ParamId>,
}

pub struct Graph<F> {
    nodes: Vec<Node<F>>,
}

/// Per-node gradients produced by a backward pass.
pub struct Grads<F> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Scalar> Grads<F> {
    pub fn get(&self, v: Var) -> Option<&Tensor<F>> {
        self.grads[v.idx()].as_ref()
    }
}

impl<F: Scalar> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Graph<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.idx()].value
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>) -> Var {
        self.push_tagged(value, op, None)
    }

    fn push_tagged(&mut self, value: Tensor<F>, op: Op<F>, param: Option<ParamId>) -> Var {
        let id = u32::try_from(self.nodes.len()).expect("graph too large");
        self.nodes.push(Node { value, op, param });
        Var(id)
    }

    pub fn leaf(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Injects a parameter as a leaf, remembering its identity so gradients
    /// can be scattered back into the [`ParamSet`] after backward.
    pub fn param(&mut self, params: &ParamSet<F>, id: ParamId) -> Var {
        self.push_tagged(params.value(id).clone(), Op::Leaf, Some(id))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (r, c) = self.value(a).shape();
        assert_eq!(self.value(row).shape(), (1, c), "add_row shape mismatch");
        let mut out = self.value(a).clone();
        for i in 0..r {
            let rv = self.nodes[row.idx()].value.row(0).to_vec();
            for (o, b) in out.row_mut(i).iter_mut().zip(rv) {
                *o += b;
            }
        }
        self.push(out, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let (r, c) = self.value(a).shape();
        assert_eq!(self.value(row).shape(), (1, c), "mul_row shape mismatch");
        let mut out = self.value(a).clone();
        for i in 0..r {
            let rv = self.nodes[row.idx()].value.row(0).to_vec();
            for (o, b) in out.row_mut(i).iter_mut().zip(rv) {
                *o *= b;
            }
        }
        self.push(out, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::Matmul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), cols, "concat_rows column mismatch");
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::new(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Tensor::zeros(rows, total);
        let mut at = 0;
        for &p in parts {
            let t = &self.nodes[p.idx()].value;
            assert_eq!(t.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                out.row_mut(r)[at..at + t.cols()].copy_from_slice(t.row(r));
            }
            at += t.cols();
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let t = self.value(a);
        assert!(start + width <= t.cols(), "slice_cols out of range");
        let mut out = Tensor::zeros(t.rows(), width);
        for r in 0..t.rows() {
            out.row_mut(r)
                .copy_from_slice(&self.nodes[a.idx()].value.row(r)[start..start + width]);
        }
        self.push(out, Op::SliceCols(a, start))
    }

    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Var {
        let t = self.value(table);
        let mut rows = Vec::with_capacity(indices.len());
        for &i in indices {
            assert!(i < t.rows(), "gather_rows index out of range");
            rows.push(t.row(i).to_vec());
        }
        self.push(
            Tensor::from_rows(&rows),
            Op::GatherRows(table, indices.to_vec()),
        )
    }

    pub fn row_softmax(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut out = t.clone();
        for r in 0..t.rows() {
            softmax_in_place(out.row_mut(r));
        }
        self.push(out, Op::RowSoftmax(a))
    }

    /// Softmax where row `i` is taken over columns `0..=i` and the rest are
    /// zero, i.e. causal self-attention weights on a square score matrix.
    pub fn causal_softmax(&mut self, a: Var) -> Var {
        let t = self.value(a);
        assert_eq!(t.rows(), t.cols(), "causal_softmax expects square scores");
        let mut out = Tensor::zeros(t.rows(), t.cols());
        for r in 0..t.rows() {
            let mut row = t.row(r)[..=r].to_vec();
            softmax_in_place(&mut row);
            out.row_mut(r)[..=r].copy_from_slice(&row);
        }
        self.push(out, Op::CausalSoftmax(a))
    }

    /// Row-wise standardization to zero mean and unit variance. Affine gain
    /// and bias are composed from `mul_row`/`add_row` by the caller.
    pub fn layer_norm_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut out = t.clone();
        for r in 0..t.rows() {
            let row = out.row_mut(r);
            let (mean, inv_std) = row_moments(row);
            for v in row.iter_mut() {
                *v = (*v - mean) * inv_std;
            }
        }
        self.push(out, Op::LayerNormRows(a))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(gelu_forward);
        self.push(v, Op::Gelu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.tanh());
        self.push(v, Op::Tanh(a))
    }

    pub fn clamp(&mut self, a: Var, lo: F, hi: F) -> Var {
        let v = self.value(a).map(|x| x.max(lo).min(hi));
        self.push(v, Op::Clamp(a, lo, hi))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::SumAll(a))
    }

    /// Sum of `-log softmax(logits[row])[class]` over the targets, computed
    /// with the shifted log-sum-exp. Each target names a row of `logits` and
    /// the class expected there; rows without targets contribute nothing.
    pub fn cross_entropy_sum(&mut self, logits: Var, targets: &[(usize, u32)]) -> Var {
        let t = self.value(logits);
        let mut nll = F::zero();
        for &(row, class) in targets {
            assert!(row < t.rows() && (class as usize) < t.cols());
            nll += row_nll(t.row(row), class as usize);
        }
        self.push(
            Tensor::scalar(nll),
            Op::CrossEntropySum {
                logits,
                targets: targets.to_vec(),
            },
        )
    }

    /// KL divergence of `N(mean, exp(log_std)^2)` from the standard normal,
    /// summed over all coordinates, in nats:
    /// `sum 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma)`.
    pub fn gaussian_kl(&mut self, mean: Var, log_std: Var) -> Var {
        let m = self.value(mean);
        let s = self.value(log_std);
        assert_eq!(m.shape(), s.shape(), "gaussian_kl shape mismatch");
        let half = sc::<F>(0.5);
        let mut kl = F::zero();
        for (&mu, &ls) in m.data().iter().zip(s.data()) {
            let var = (ls + ls).exp();
            kl += half * (mu * mu + var - F::one() - (ls + ls));
        }
        self.push(Tensor::scalar(kl), Op::GaussianKl { mean, log_std })
    }

    /// Reparameterized Gaussian sample `mean + exp(log_std) * eps` with the
    /// noise fixed at construction, so gradients flow to mean and log-std.
    pub fn reparam_sample(&mut self, mean: Var, log_std: Var, eps: Tensor<F>) -> Var {
        let m = self.value(mean);
        let s = self.value(log_std);
        assert_eq!(m.shape(), s.shape());
        assert_eq!(m.shape(), eps.shape());
        let mut out = m.clone();
        for ((o, &ls), &e) in out.data_mut().iter_mut().zip(s.data()).zip(eps.data()) {
            *o = *o + ls.exp() * e;
        }
        self.push(out, Op::Reparam { mean, log_std, eps })
    }

    /// Convenience: `sum(a * a) * 0.5` is not needed anywhere, but mean over
    /// all elements is.
    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.value(a).len();
        let s = self.sum_all(a);
        self.scale(s, F::one() / sc::<F>(n as f64))
    }

    /// Weighted sum of 1x1 vars: the loss scalarization.
    pub fn weighted_sum(&mut self, terms: &[(Var, F)]) -> Var {
        assert!(!terms.is_empty());
        let mut acc = self.scale(terms[0].0, terms[0].1);
        for &(v, w) in &terms[1..] {
            let t = self.scale(v, w);
            acc = self.add(acc, t);
        }
        acc
    }

    /// Reverse-mode sweep from `root` (a 1x1 tensor) with upstream gradient
    /// `seed_grad`. Construction order is already topological, so a single
    /// reverse walk suffices.
    pub fn backward(&self, root: Var, seed_grad: F) -> Grads<F> {
        assert_eq!(
            self.value(root).shape(),
            (1, 1),
            "backward expects a scalar root"
        );
        let mut grads: Vec<Option<Tensor<F>>> = vec![None; self.nodes.len()];
        grads[root.idx()] = Some(Tensor::scalar(seed_grad));

        for i in (0..self.nodes.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.push_back(Var(i as u32), &g, &mut grads);
            grads[i] = Some(g);
        }
        Grads { grads }
    }

    /// Adds `scale * grad` for every parameter-tagged leaf into the set.
    pub fn scatter_grads(&self, grads: &Grads<F>, params: &mut ParamSet<F>, scale: F) {
        for (i, node) in self.nodes.iter().enumerate() {
            let (Some(id), Some(g)) = (node.param, grads.grads[i].as_ref()) else {
                continue;
            };
            if params.is_trainable(id) {
                params.grad_mut(id).add_scaled(g, scale);
            }
        }
    }

    fn push_back(&self, at: Var, g: &Tensor<F>, grads: &mut Vec<Option<Tensor<F>>>) {
        let node = &self.nodes[at.idx()];
        let mut send = |v: Var, contrib: Tensor<F>| {
            match &mut grads[v.idx()] {
                Some(acc) => acc.add_scaled(&contrib, F::one()),
                slot => *slot = Some(contrib),
            };
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::AddRow(a, row) => {
                send(*a, g.clone());
                let mut rg = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (acc, &v) in rg.row_mut(0).iter_mut().zip(g.row(r)) {
                        *acc += v;
                    }
                }
                send(*row, rg);
            }
            Op::Mul(a, b) => {
                send(*a, g.zip_map(self.value(*b), |gv, bv| gv * bv));
                send(*b, g.zip_map(self.value(*a), |gv, av| gv * av));
            }
            Op::MulRow(a, row) => {
                let rv = self.value(*row);
                let mut ga = g.clone();
                for r in 0..ga.rows() {
                    for (v, &b) in ga.row_mut(r).iter_mut().zip(rv.row(0)) {
                        *v *= b;
                    }
                }
                send(*a, ga);
                let av = self.value(*a);
                let mut rg = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        let cur = rg.get(0, c);
                        rg.set(0, c, cur + g.get(r, c) * av.get(r, c));
                    }
                }
                send(*row, rg);
            }
            Op::Scale(a, s) => send(*a, g.map(|v| v * *s)),
            Op::Matmul(a, b) => {
                let bt = self.value(*b).transpose();
                send(*a, g.matmul(&bt));
                let at = self.value(*a).transpose();
                send(*b, at.matmul(g));
            }
            Op::Transpose(a) => send(*a, g.transpose()),
            Op::ConcatRows(parts) => {
                let mut at = 0;
                for &p in parts {
                    let rows = self.value(p).rows();
                    let mut pg = Tensor::zeros(rows, g.cols());
                    for r in 0..rows {
                        pg.row_mut(r).copy_from_slice(g.row(at + r));
                    }
                    send(p, pg);
                    at += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for &p in parts {
                    let cols = self.value(p).cols();
                    let mut pg = Tensor::zeros(g.rows(), cols);
                    for r in 0..g.rows() {
                        pg.row_mut(r).copy_from_slice(&g.row(r)[at..at + cols]);
                    }
                    send(p, pg);
                    at += cols;
                }
            }
            Op::SliceCols(a, start) => {
                let src = self.value(*a);
                let mut ag = Tensor::zeros(src.rows(), src.cols());
                for r in 0..g.rows() {
                    ag.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                send(*a, ag);
            }
            Op::GatherRows(table, indices) => {
                let src = self.value(*table);
                let mut tg = Tensor::zeros(src.rows(), src.cols());
                for (r, &i) in indices.iter().enumerate() {
                    for (acc, &v) in tg.row_mut(i).iter_mut().zip(g.row(r)) {
                        *acc += v;
                    }
                }
                send(*table, tg);
            }
            Op::RowSoftmax(a) => {
                let y = &node.value;
                let mut ag = g.clone();
                for r in 0..y.rows() {
                    softmax_backward_row(ag.row_mut(r), y.row(r));
                }
                send(*a, ag);
            }
            Op::CausalSoftmax(a) => {
                // y is zero outside the causal window, so the dense softmax
                // Jacobian formula already routes nothing there.
                let y = &node.value;
                let mut ag = g.clone();
                for r in 0..y.rows() {
                    softmax_backward_row(ag.row_mut(r), y.row(r));
                }
                send(*a, ag);
            }
            Op::LayerNormRows(a) => {
                let x = self.value(*a);
                let mut ag = Tensor::zeros(x.rows(), x.cols());
                let n = sc::<F>(x.cols() as f64);
                for r in 0..x.rows() {
                    let (mean, inv_std) = row_moments(x.row(r));
                    let xhat: Vec<F> =
                        x.row(r).iter().map(|&v| (v - mean) * inv_std).collect();
                    let gr = g.row(r);
                    let g_mean = gr.iter().copied().sum::<F>() / n;
                    let gx_mean = gr
                        .iter()
                        .zip(&xhat)
                        .map(|(&gv, &xv)| gv * xv)
                        .sum::<F>()
                        / n;
                    for (c, out) in ag.row_mut(r).iter_mut().enumerate() {
                        *out = inv_std * (gr[c] - g_mean - xhat[c] * gx_mean);
                    }
                }
                send(*a, ag);
            }
            Op::Gelu(a) => {
                send(*a, g.zip_map(self.value(*a), |gv, x| gv * gelu_derivative(x)));
            }
            Op::Tanh(a) => {
                send(*a, g.zip_map(&node.value, |gv, y| gv * (F::one() - y * y)));
            }
            Op::Clamp(a, lo, hi) => {
                send(
                    *a,
                    g.zip_map(self.value(*a), |gv, x| {
                        if x >= *lo && x <= *hi {
                            gv
                        } else {
                            F::zero()
                        }
                    }),
                );
            }
            Op::SumAll(a) => {
                let (r, c) = self.value(*a).shape();
                send(*a, Tensor::full(r, c, g.item()));
            }
            Op::CrossEntropySum { logits, targets } => {
                let t = self.value(*logits);
                let seed = g.item();
                let mut lg = Tensor::zeros(t.rows(), t.cols());
                for &(row, class) in targets {
                    let mut sm = t.row(row).to_vec();
                    softmax_in_place(&mut sm);
                    sm[class as usize] -= F::one();
                    for (acc, &v) in lg.row_mut(row).iter_mut().zip(&sm) {
                        *acc += seed * v;
                    }
                }
                send(*logits, lg);
            }
            Op::GaussianKl { mean, log_std } => {
                let seed = g.item();
                send(*mean, self.value(*mean).map(|mu| seed * mu));
                send(
                    *log_std,
                    self.value(*log_std).map(|ls| seed * ((ls + ls).exp() - F::one())),
                );
            }
            Op::Reparam { mean, log_std, eps } => {
                send(*mean, g.clone());
                let s = self.value(*log_std);
                let mut sg = g.clone();
                for ((v, &ls), &e) in sg.data_mut().iter_mut().zip(s.data()).zip(eps.data()) {
                    *v = *v * ls.exp() * e;
                }
                send(*log_std, sg);
            }
        }
    }
}

fn softmax_in_place<F: Scalar>(row: &mut [F]) {
    let max = row.iter().copied().fold(F::neg_infinity(), F::max);
    let mut sum = F::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// In-place `g <- y * (g - <g, y>)`, the softmax vector-Jacobian product.
fn softmax_backward_row<F: Scalar>(g: &mut [F], y: &[F]) {
    let dot = g.iter().zip(y).map(|(&gv, &yv)| gv * yv).sum::<F>();
    for (gv, &yv) in g.iter_mut().zip(y) {
        *gv = yv * (*gv - dot);
    }
}

fn row_moments<F: Scalar>(row: &[F]) -> (F, F) {
    let n = sc::<F>(row.len() as f64);
    let mean = row.iter().copied().sum::<F>() / n;
    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
    (mean, F::one() / (var + sc::<F>(LN_EPS)).sqrt())
}

fn row_nll<F: Scalar>(logits: &[F], class: usize) -> F {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let lse = logits
        .iter()
        .map(|&v| (v - max).exp())
        .sum::<F>()
        .ln()
        + max;
    lse - logits[class]
}

/// Tanh approximation of GELU; smooth, so finite differences agree with the
/// analytic derivative to high order.
fn gelu_forward<F: Scalar>(x: F) -> F {
    let c = sc::<F>(0.797_884_560_802_865_4); // sqrt(2/pi)
    let k = sc::<F>(0.044715);
    let half = sc::<F>(0.5);
    half * x * (F::one() + (c * (x + k * x * x * x)).tanh())
}

fn gelu_derivative<F: Scalar>(x: F) -> F {
    let c = sc::<F>(0.797_884_560_802_865_4);
    let k = sc::<F>(0.044715);
    let half = sc::<F>(0.5);
    let three = sc::<F>(3.0);
    let u = c * (x + k * x * x * x);
    let t = u.tanh();
    let du = c * (F::one() + three * k * x * x);
    half * (F::one() + t) + half * x * (F::one() - t * t) * du
}
