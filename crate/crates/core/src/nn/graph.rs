use super::{NnError, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Softmax(Var),
    MeanAxis1(Var),
    Reshape(Var),
    Mix(Var, Var),
    Sum(Var),
    /// Cached softmax probabilities.
    CrossEntropy(Var, Vec<usize>, Vec<f64>),
    Hinge(Var, Vec<usize>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::MeanAxis1(_) => "mean_axis1",
            Op::Reshape(_) => "reshape",
            Op::Mix(..) => "mix",
            Op::Sum(_) => "sum",
            Op::CrossEntropy(..) => "cross_entropy",
            Op::Hinge(..) => "multiclass_hinge",
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep visits every node after all of its consumers.
///
/// Debug builds check every op output for non-finite values; the first
/// offending op makes [`Graph::backward`] fail.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    non_finite: Option<&'static str>,
}

/// `a (m×k) · b (k×n)`.
fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += x * bv;
            }
        }
    }
    out
}

fn shape_err(op: &'static str, left: &Tensor, right: &Tensor) -> NnError {
    NnError::Shape { op, left: left.shape().to_vec(), right: right.shape().to_vec() }
}

fn softmax_rows(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (src, dst) in x.chunks(cols).zip(out.chunks_mut(cols)) {
        let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = (s - max).exp();
            total += *d;
        }
        dst.iter_mut().for_each(|d| *d /= total);
    }
    out
}

fn check_labels(labels: &[usize], batch: usize, classes: usize) -> Result<(), NnError> {
    if labels.len() != batch {
        return Err(NnError::Data(format!("{} labels for a batch of {batch}", labels.len())));
    }
    if let Some(&label) = labels.iter().find(|&&y| y >= classes) {
        return Err(NnError::Label { label, classes });
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        if cfg!(debug_assertions) && self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(op.name());
        }
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    /// Input or parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient after [`Self::backward`]; zeros for nodes the loss does not reach.
    pub fn grad(&self, v: Var) -> Tensor {
        let value = &self.nodes[v.0].value;
        match &self.grads[v.0] {
            Some(g) => Tensor::new(value.shape().to_vec(), g.clone()).expect("gradient matches value"),
            None => Tensor::zeros(value.shape()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = Tensor::new(vec![m, n], mm(ta.data(), tb.data(), m, k, n))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `x (m×n) + bias (n)` broadcast over rows.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, NnError> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let n = *tx.shape().last().unwrap_or(&0);
        if tx.shape().len() != 2 || tb.shape() != [n] {
            return Err(shape_err("add_bias", tx, tb));
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(n) {
            row.iter_mut().zip(tb.data()).for_each(|(v, b)| *v += b);
        }
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: fn(f64, f64) -> f64) -> Result<Tensor, NnError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let out = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let out = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let out = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v.max(0.0)).collect()).unwrap();
        self.push(out, Op::Relu(x))
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let cols = *t.shape().last().unwrap_or(&1);
        let out = Tensor::new(t.shape().to_vec(), softmax_rows(t.data(), cols.max(1))).unwrap();
        self.push(out, Op::Softmax(x))
    }

    /// Mean over the middle axis: `b×c×h → b×h`.
    pub fn mean_axis1(&mut self, x: Var) -> Result<Var, NnError> {
        let t = self.value(x);
        let &[b, c, h] = t.shape() else {
            return Err(NnError::Shape { op: "mean_axis1", left: t.shape().to_vec(), right: vec![] });
        };
        let mut data = vec![0.0; b * h];
        for (i, block) in t.data().chunks(c * h).enumerate() {
            let dst = &mut data[i * h..(i + 1) * h];
            for row in block.chunks(h) {
                dst.iter_mut().zip(row).for_each(|(d, v)| *d += v);
            }
            dst.iter_mut().for_each(|d| *d /= c as f64);
        }
        let out = Tensor::new(vec![b, h], data)?;
        Ok(self.push(out, Op::MeanAxis1(x)))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, NnError> {
        let t = self.value(x);
        if shape.iter().product::<usize>() != t.len() {
            return Err(NnError::Shape { op: "reshape", left: t.shape().to_vec(), right: shape.to_vec() });
        }
        let out = Tensor::new(shape.to_vec(), t.data().to_vec())?;
        Ok(self.push(out, Op::Reshape(x)))
    }

    /// Channel mixing `out[b] = adj · x[b]` for `adj: c×c`, `x: b×c×h`.
    pub fn mix(&mut self, adj: Var, x: Var) -> Result<Var, NnError> {
        let (ta, tx) = (self.value(adj), self.value(x));
        let (sa, sx) = (ta.shape(), tx.shape());
        if sa.len() != 2 || sx.len() != 3 || sa[0] != sa[1] || sa[1] != sx[1] {
            return Err(shape_err("mix", ta, tx));
        }
        let (c, h) = (sx[1], sx[2]);
        let mut data = Vec::with_capacity(tx.len());
        for block in tx.data().chunks(c * h) {
            data.extend(mm(ta.data(), block, c, c, h));
        }
        let out = Tensor::new(sx.to_vec(), data)?;
        Ok(self.push(out, Op::Mix(adj, x)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(x))
    }

    /// Mean over the batch of `-ln softmax(logits)[label]`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var, NnError> {
        let t = self.value(logits);
        let &[batch, classes] = t.shape() else {
            return Err(NnError::Shape { op: "cross_entropy", left: t.shape().to_vec(), right: vec![] });
        };
        check_labels(labels, batch, classes)?;
        let probs = softmax_rows(t.data(), classes);
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            // log-sum-exp form keeps saturated logits finite
            let row = t.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[y];
        }
        let out = Tensor::scalar(loss / batch as f64);
        Ok(self.push(out, Op::CrossEntropy(logits, labels.to_vec(), probs)))
    }

    /// Mean over the batch of `sum_{k != y} max(0, 1 + logit_k - logit_y)`.
    pub fn multiclass_hinge(&mut self, logits: Var, labels: &[usize]) -> Result<Var, NnError> {
        let t = self.value(logits);
        let &[batch, classes] = t.shape() else {
            return Err(NnError::Shape { op: "multiclass_hinge", left: t.shape().to_vec(), right: vec![] });
        };
        check_labels(labels, batch, classes)?;
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let row = t.row(i);
            loss += (0..classes).filter(|&k| k != y).map(|k| (1.0 + row[k] - row[y]).max(0.0)).sum::<f64>();
        }
        let out = Tensor::scalar(loss / batch as f64);
        Ok(self.push(out, Op::Hinge(logits, labels.to_vec())))
    }

    fn accumulate(&mut self, v: Var, delta: impl IntoIterator<Item = f64>) {
        let len = self.nodes[v.0].value.len();
        let g = self.grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        g.iter_mut().zip(delta).for_each(|(a, d)| *a += d);
    }

    /// Populates gradients of every node with respect to the scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<(), NnError> {
        let shape = self.value(loss).shape().to_vec();
        if self.value(loss).len() != 1 {
            return Err(NnError::NonScalar(shape));
        }
        if let Some(op) = self.non_finite {
            return Err(NnError::NonFinite(op));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(dy) = self.grads[i].take() else { continue };
            self.propagate(i, &dy);
            self.grads[i] = Some(dy);
        }
        Ok(())
    }

    fn propagate(&mut self, i: usize, dy: &[f64]) {
        // Take the op out temporarily so inputs can be borrowed mutably.
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                let (sa, sb) = (self.value(a).shape().to_vec(), self.value(b).shape().to_vec());
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                let bt = transpose(self.value(b).data(), k, n);
                let at = transpose(self.value(a).data(), m, k);
                let da = mm(dy, &bt, m, n, k);
                let db = mm(&at, dy, k, m, n);
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            &Op::AddBias(x, bias) => {
                let n = self.value(bias).len();
                let mut db = vec![0.0; n];
                for row in dy.chunks(n) {
                    db.iter_mut().zip(row).for_each(|(d, g)| *d += g);
                }
                self.accumulate(x, dy.iter().copied());
                self.accumulate(bias, db);
            }
            &Op::Add(a, b) => {
                self.accumulate(a, dy.iter().copied());
                self.accumulate(b, dy.iter().copied());
            }
            &Op::Sub(a, b) => {
                self.accumulate(a, dy.iter().copied());
                self.accumulate(b, dy.iter().map(|g| -g));
            }
            &Op::Mul(a, b) => {
                let da: Vec<f64> = dy.iter().zip(self.value(b).data()).map(|(g, y)| g * y).collect();
                let db: Vec<f64> = dy.iter().zip(self.value(a).data()).map(|(g, x)| g * x).collect();
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            &Op::Relu(x) => {
                let dx: Vec<f64> =
                    dy.iter().zip(self.value(x).data()).map(|(g, v)| if *v > 0.0 { *g } else { 0.0 }).collect();
                self.accumulate(x, dx);
            }
            &Op::Softmax(x) => {
                let y = &self.nodes[i].value;
                let cols = *y.shape().last().unwrap_or(&1);
                let mut dx = vec![0.0; dy.len()];
                for ((yr, gr), dr) in y.data().chunks(cols).zip(dy.chunks(cols)).zip(dx.chunks_mut(cols)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((d, yv), g) in dr.iter_mut().zip(yr).zip(gr) {
                        *d = yv * (g - dot);
                    }
                }
                self.accumulate(x, dx);
            }
            &Op::MeanAxis1(x) => {
                let s = self.value(x).shape().to_vec();
                let (c, h) = (s[1], s[2]);
                let mut dx = Vec::with_capacity(self.value(x).len());
                for row in dy.chunks(h) {
                    for _ in 0..c {
                        dx.extend(row.iter().map(|g| g / c as f64));
                    }
                }
                self.accumulate(x, dx);
            }
            &Op::Reshape(x) => self.accumulate(x, dy.iter().copied()),
            &Op::Mix(adj, x) => {
                let s = self.value(x).shape().to_vec();
                let (c, h) = (s[1], s[2]);
                let at = transpose(self.value(adj).data(), c, c);
                let mut dadj = vec![0.0; c * c];
                let mut dx = Vec::with_capacity(dy.len());
                for (gb, xb) in dy.chunks(c * h).zip(self.value(x).data().chunks(c * h)) {
                    // dA += dY · Xᵀ, dX = Aᵀ · dY
                    let xt = transpose(xb, c, h);
                    for (d, v) in dadj.iter_mut().zip(mm(gb, &xt, c, h, c)) {
                        *d += v;
                    }
                    dx.extend(mm(&at, gb, c, c, h));
                }
                self.accumulate(adj, dadj);
                self.accumulate(x, dx);
            }
            &Op::Sum(x) => {
                let n = self.value(x).len();
                self.accumulate(x, std::iter::repeat_n(dy[0], n));
            }
            Op::CrossEntropy(logits, labels, probs) => {
                let classes = self.value(*logits).shape()[1];
                let scale = dy[0] / labels.len() as f64;
                let mut dx: Vec<f64> = probs.iter().map(|p| p * scale).collect();
                for (r, &y) in labels.iter().enumerate() {
                    dx[r * classes + y] -= scale;
                }
                self.accumulate(*logits, dx);
            }
            Op::Hinge(logits, labels) => {
                let t = self.value(*logits);
                let classes = t.shape()[1];
                let scale = dy[0] / labels.len() as f64;
                let mut dx = vec![0.0; t.len()];
                for (r, &y) in labels.iter().enumerate() {
                    let row = t.row(r);
                    for k in (0..classes).filter(|&k| k != y) {
                        if 1.0 + row[k] - row[y] > 0.0 {
                            dx[r * classes + k] += scale;
                            dx[r * classes + y] -= scale;
                        }
                    }
                }
                self.accumulate(*logits, dx);
            }
        }
        self.nodes[i].op = op;
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}
