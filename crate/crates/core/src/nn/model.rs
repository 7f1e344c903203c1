use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, NnError, Tensor, Var};
use crate::seed::rng_for;

/// Architecture family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    /// Flattened linear map trained with a multiclass hinge loss, standing in
    /// for the SVM baseline.
    LinearHinge,
    Mlp,
    #[serde(rename = "graphconv", alias = "graph_conv")]
    GraphConv,
}

impl ModelTag {
    pub const ALL: [ModelTag; 3] = [Self::LinearHinge, Self::Mlp, Self::GraphConv];

    pub fn name(self) -> &'static str {
        match self {
            Self::LinearHinge => "linear_hinge",
            Self::Mlp => "mlp",
            Self::GraphConv => "graphconv",
        }
    }

    pub fn default_loss(self) -> LossKind {
        match self {
            Self::LinearHinge => LossKind::MulticlassHinge,
            _ => LossKind::CrossEntropy,
        }
    }

    pub fn default_hidden(self) -> Vec<usize> {
        match self {
            Self::LinearHinge => vec![],
            Self::Mlp => vec![64],
            Self::GraphConv => vec![16],
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelTag {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "linear_hinge" | "linear" | "svm" => Ok(Self::LinearHinge),
            "mlp" | "dnn" => Ok(Self::Mlp),
            "graphconv" | "graph_conv" | "gcn" => Ok(Self::GraphConv),
            _ => Err(NnError::UnknownTag(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    MulticlassHinge,
}

impl LossKind {
    pub fn apply(self, g: &mut Graph, logits: Var, labels: &[usize]) -> Result<Var, NnError> {
        match self {
            Self::CrossEntropy => g.cross_entropy(logits, labels),
            Self::MulticlassHinge => g.multiclass_hinge(logits, labels),
        }
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_entropy" | "ce" => Ok(Self::CrossEntropy),
            "multiclass_hinge" | "hinge" => Ok(Self::MulticlassHinge),
            other => Err(format!("unknown loss `{other}` (cross_entropy, multiclass_hinge)")),
        }
    }
}

/// Architecture hyperparameters. `hidden` lists layer widths: fully connected
/// layers for `mlp`, graph convolution layers for `graphconv`; ignored by
/// `linear_hinge`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
}

impl Hyperparams {
    pub fn hidden(widths: &[usize]) -> Self {
        Self { hidden: Some(widths.to_vec()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
}

/// A parameterized classifier mapping `batch × c × d` inputs to
/// `batch × classes` logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    pub tag: ModelTag,
    pub channels: usize,
    pub feature_dim: usize,
    pub classes: usize,
    pub hidden: Vec<usize>,
    pub params: Vec<Parameter>,
}

fn uniform(rng: &mut impl Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = (1.0 / fan_in as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-bound..=bound));
    t
}

/// Builds a model with parameters drawn deterministically from `seed`.
///
/// Weights and biases are uniform in `±sqrt(1 / fan_in)`; the graphconv
/// adjacency logits start at zero, i.e. uniform channel mixing.
pub fn build_model(
    tag: ModelTag,
    channels: usize,
    feature_dim: usize,
    classes: usize,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ModelGraph, NnError> {
    let hidden = hyper.hidden.clone().unwrap_or_else(|| tag.default_hidden());
    if channels == 0 || feature_dim == 0 || classes < 2 || hidden.contains(&0) {
        return Err(NnError::Data(format!(
            "model needs positive sizes, got c={channels} d={feature_dim} classes={classes} hidden={hidden:?}"
        )));
    }
    let mut rng = rng_for(seed, &format!("init/{}", tag.name()));
    let mut params = Vec::new();
    let dense = |params: &mut Vec<Parameter>, prefix: &str, fan_in: usize, fan_out: usize, rng: &mut _| {
        params.push(Parameter { name: format!("{prefix}.weight"), value: uniform(rng, &[fan_in, fan_out], fan_in) });
        params.push(Parameter { name: format!("{prefix}.bias"), value: uniform(rng, &[fan_out], fan_in) });
    };
    let hidden = match tag {
        ModelTag::LinearHinge => {
            dense(&mut params, "linear", channels * feature_dim, classes, &mut rng);
            vec![]
        }
        ModelTag::Mlp => {
            let mut width = channels * feature_dim;
            for (i, &h) in hidden.iter().enumerate() {
                dense(&mut params, &format!("fc{i}"), width, h, &mut rng);
                width = h;
            }
            dense(&mut params, "head", width, classes, &mut rng);
            hidden
        }
        ModelTag::GraphConv => {
            params.push(Parameter { name: "adjacency".into(), value: Tensor::zeros(&[channels, channels]) });
            let mut width = feature_dim;
            for (i, &h) in hidden.iter().enumerate() {
                dense(&mut params, &format!("gc{i}"), width, h, &mut rng);
                width = h;
            }
            dense(&mut params, "head", width, classes, &mut rng);
            hidden
        }
    };
    Ok(ModelGraph { tag, channels, feature_dim, classes, hidden, params })
}

impl ModelGraph {
    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.iter_mut().find(|p| p.name == name).map(|p| &mut p.value)
    }

    /// Places every parameter on `g` as a leaf, in declaration order.
    pub fn bind(&self, g: &mut Graph) -> Vec<Var> {
        self.params.iter().map(|p| g.leaf(p.value.clone())).collect()
    }

    /// Logits for input `x` (`batch × c × d`) given bound parameters.
    pub fn forward(&self, g: &mut Graph, params: &[Var], x: Var) -> Result<Var, NnError> {
        let shape = g.value(x).shape().to_vec();
        if shape.len() != 3 || shape[1] != self.channels || shape[2] != self.feature_dim {
            return Err(NnError::Shape {
                op: "model input",
                left: shape,
                right: vec![0, self.channels, self.feature_dim],
            });
        }
        let batch = shape[0];
        let dense = |g: &mut Graph, h: Var, i: usize| -> Result<Var, NnError> {
            let z = g.matmul(h, params[i])?;
            g.add_bias(z, params[i + 1])
        };
        match self.tag {
            ModelTag::LinearHinge | ModelTag::Mlp => {
                let mut h = g.reshape(x, &[batch, self.channels * self.feature_dim])?;
                let layers = params.len() / 2;
                for l in 0..layers {
                    h = dense(g, h, 2 * l)?;
                    if l + 1 < layers {
                        h = g.relu(h);
                    }
                }
                Ok(h)
            }
            ModelTag::GraphConv => {
                let adj = g.softmax(params[0]);
                let mut h = x;
                let mut width = self.feature_dim;
                for (l, &out) in self.hidden.iter().enumerate() {
                    let mixed = g.mix(adj, h)?;
                    let flat = g.reshape(mixed, &[batch * self.channels, width])?;
                    let z = dense(g, flat, 1 + 2 * l)?;
                    let z = g.relu(z);
                    h = g.reshape(z, &[batch, self.channels, out])?;
                    width = out;
                }
                let pooled = g.mean_axis1(h)?;
                dense(g, pooled, 1 + 2 * self.hidden.len())
            }
        }
    }

    /// Logits without recording gradients beyond this call.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor, NnError> {
        let mut g = Graph::new();
        let params = self.bind(&mut g);
        let input = g.leaf(x.clone());
        let logits = self.forward(&mut g, &params, input)?;
        Ok(g.value(logits).clone())
    }

    /// Loss value and one gradient per parameter, in declaration order.
    pub fn loss_and_grads(&self, x: &Tensor, labels: &[usize], loss: LossKind) -> Result<(f64, Vec<Tensor>), NnError> {
        let mut g = Graph::new();
        let params = self.bind(&mut g);
        let input = g.leaf(x.clone());
        let logits = self.forward(&mut g, &params, input)?;
        let l = loss.apply(&mut g, logits, labels)?;
        g.backward(l)?;
        let value = g.value(l).item().expect("scalar loss");
        Ok((value, params.iter().map(|&p| g.grad(p)).collect()))
    }

    /// Effective channel-mixing matrix of a graphconv model.
    pub fn effective_adjacency(&self) -> Option<Tensor> {
        let a = self.param("adjacency")?;
        let mut g = Graph::new();
        let v = g.leaf(a.clone());
        let s = g.softmax(v);
        Some(g.value(s).clone())
    }
}

/// `p <- p - lr * (g + weight_decay * p)` for every parameter.
pub fn sgd_step(model: &mut ModelGraph, grads: &[Tensor], lr: f64, weight_decay: f64) -> Result<(), NnError> {
    if grads.len() != model.params.len() {
        return Err(NnError::Data(format!("{} gradients for {} parameters", grads.len(), model.params.len())));
    }
    for (p, g) in model.params.iter_mut().zip(grads) {
        if p.value.shape() != g.shape() {
            return Err(NnError::Shape { op: "sgd_step", left: p.value.shape().to_vec(), right: g.shape().to_vec() });
        }
        for (w, d) in p.value.data_mut().iter_mut().zip(g.data()) {
            *w -= lr * (d + weight_decay * *w);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(shape);
        t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        t
    }

    #[test]
    fn mlp_parameter_count() {
        let m = build_model(ModelTag::Mlp, 62, 5, 3, &Hyperparams::hidden(&[64]), 2024).unwrap();
        assert_eq!(m.num_params(), 62 * 5 * 64 + 64 + 64 * 3 + 3);
        assert_eq!(m.num_params(), 20_099);
    }

    #[test]
    fn initialization_is_seeded_and_bounded() {
        let a = build_model(ModelTag::GraphConv, 4, 5, 3, &Hyperparams::default(), 9).unwrap();
        let b = build_model(ModelTag::GraphConv, 4, 5, 3, &Hyperparams::default(), 9).unwrap();
        let c = build_model(ModelTag::GraphConv, 4, 5, 3, &Hyperparams::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.param("adjacency").unwrap().data().iter().all(|&v| v == 0.0));
        let w = a.param("gc0.weight").unwrap();
        let bound = (1.0f64 / 5.0).sqrt();
        assert!(w.data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn unknown_tag() {
        assert!(matches!("transformer".parse::<ModelTag>(), Err(NnError::UnknownTag(_))));
        assert_eq!("svm".parse::<ModelTag>().unwrap(), ModelTag::LinearHinge);
    }

    #[test]
    fn forward_shapes_for_every_tag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_input(&mut rng, &[7, 4, 5]);
        for tag in ModelTag::ALL {
            let m = build_model(tag, 4, 5, 3, &Hyperparams::default(), 1).unwrap();
            assert_eq!(m.predict(&x).unwrap().shape(), [7, 3]);
            let wrong = Tensor::zeros(&[7, 5, 4]);
            assert!(m.predict(&wrong).is_err());
        }
    }

    #[test]
    fn identity_graphconv_pools_activated_input() {
        let (c, d) = (3, 4);
        let mut m = build_model(ModelTag::GraphConv, c, d, d, &Hyperparams::hidden(&[d]), 0).unwrap();
        let mut adj = Tensor::zeros(&[c, c]);
        for i in 0..c {
            adj.data_mut()[i * c + i] = 50.0;
        }
        *m.param_mut("adjacency").unwrap() = adj;
        *m.param_mut("gc0.weight").unwrap() = Tensor::identity(d);
        *m.param_mut("gc0.bias").unwrap() = Tensor::zeros(&[d]);
        *m.param_mut("head.weight").unwrap() = Tensor::identity(d);
        *m.param_mut("head.bias").unwrap() = Tensor::zeros(&[d]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_input(&mut rng, &[2, c, d]);
        let out = m.predict(&x).unwrap();
        for b in 0..2 {
            for k in 0..d {
                let expected = (0..c).map(|ch| x.data()[b * c * d + ch * d + k].max(0.0)).sum::<f64>() / c as f64;
                assert_relative_eq!(out.data()[b * d + k], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn effective_adjacency_rows_sum_to_one() {
        let mut m = build_model(ModelTag::GraphConv, 5, 2, 2, &Hyperparams::default(), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        *m.param_mut("adjacency").unwrap() = random_input(&mut rng, &[5, 5]);
        let a = m.effective_adjacency().unwrap();
        for r in 0..5 {
            assert_relative_eq!(a.row(r).iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn batch_permutation_permutes_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_input(&mut rng, &[4, 3, 2]);
        let perm = [2usize, 0, 3, 1];
        let mut px = Tensor::zeros(&[4, 3, 2]);
        for (dst, &src) in perm.iter().enumerate() {
            px.data_mut()[dst * 6..(dst + 1) * 6].copy_from_slice(&x.data()[src * 6..(src + 1) * 6]);
        }
        for tag in ModelTag::ALL {
            let m = build_model(tag, 3, 2, 3, &Hyperparams::default(), 4).unwrap();
            let (y, py) = (m.predict(&x).unwrap(), m.predict(&px).unwrap());
            for (dst, &src) in perm.iter().enumerate() {
                assert_eq!(py.row(dst), y.row(src));
            }
        }
    }

    #[test]
    fn sgd_arithmetic() {
        let mut m = build_model(ModelTag::LinearHinge, 1, 1, 2, &Hyperparams::default(), 0).unwrap();
        m.params[0].value = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        let grads = vec![Tensor::new(vec![1, 2], vec![2.0, 0.0]).unwrap(), Tensor::zeros(&[2])];
        let bias = m.params[1].value.clone();
        sgd_step(&mut m, &grads, 0.1, 0.0).unwrap();
        assert_relative_eq!(m.params[0].value.data()[0], 0.8, epsilon = 1e-15);
        assert_eq!(m.params[0].value.data()[1], 1.0);
        assert_eq!(m.params[1].value, bias);
    }

    #[test]
    fn quadratic_bowl_descends_monotonically() {
        // loss = sum((w - t)^2) driven through the tape
        let target = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let mut w = Tensor::zeros(&[3]);
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let mut g = Graph::new();
            let wv = g.leaf(w.clone());
            let tv = g.leaf(target.clone());
            let diff = g.sub(wv, tv).unwrap();
            let sq = g.mul(diff, diff).unwrap();
            let loss = g.sum(sq);
            g.backward(loss).unwrap();
            let value = g.value(loss).item().unwrap();
            assert!(value <= last);
            last = value;
            let grad = g.grad(wv);
            for (p, d) in w.data_mut().iter_mut().zip(grad.data()) {
                *p -= 0.1 * d;
            }
        }
        assert!(last < 1e-12);
    }

    /// Central differences, h = 1e-3, over every parameter coordinate.
    fn max_relative_error(m: &ModelGraph, x: &Tensor, labels: &[usize], loss: LossKind) -> f64 {
        let (_, grads) = m.loss_and_grads(x, labels, loss).unwrap();
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for (pi, grad) in grads.iter().enumerate() {
            for j in 0..grad.len() {
                let mut plus = m.clone();
                plus.params[pi].value.data_mut()[j] += h;
                let mut minus = m.clone();
                minus.params[pi].value.data_mut()[j] -= h;
                let fp = plus.loss_and_grads(x, labels, loss).unwrap().0;
                let fm = minus.loss_and_grads(x, labels, loss).unwrap().0;
                let numeric = (fp - fm) / (2.0 * h);
                let analytic = grad.data()[j];
                let scale = analytic.abs().max(numeric.abs());
                if scale > 1e-10 {
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            }
        }
        worst
    }

    #[test]
    fn gradcheck_small_mlp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = build_model(ModelTag::Mlp, 2, 3, 3, &Hyperparams::hidden(&[8, 5]), 2).unwrap();
        let x = random_input(&mut rng, &[4, 2, 3]);
        let err = max_relative_error(&m, &x, &[0, 1, 2, 1], LossKind::CrossEntropy);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn gradcheck_graphconv_with_random_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = build_model(ModelTag::GraphConv, 3, 2, 2, &Hyperparams::hidden(&[4]), 8).unwrap();
        *m.param_mut("adjacency").unwrap() = random_input(&mut rng, &[3, 3]);
        let x = random_input(&mut rng, &[3, 3, 2]);
        let err = max_relative_error(&m, &x, &[1, 0, 1], LossKind::CrossEntropy);
        assert!(err < 1e-4, "relative error {err}");
    }
}
