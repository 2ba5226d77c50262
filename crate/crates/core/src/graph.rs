//! Minimal reverse-mode computation graph.
//!
//! Nodes are appended in order and may only reference earlier nodes, so
//! insertion order is a topological order. Projector nodes use each other
//! as gradients: the gradient of a forward projection is the back
//! projection of the upstream gradient under the same geometry, and vice
//! versa. Because the projector pair is unmatched, that gradient is an
//! approximation of the true adjoint; all other node kinds have exact
//! gradients.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::filtering::{filter_rows, filter_weight_gradient};
use crate::geometry::Geometry;
use crate::image::{Image, Sinogram};

/// Dense row-major array. A scalar has an empty shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::shape(&shape, &[data.len()]));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![v],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }
}

impl From<Image> for Tensor {
    fn from(img: Image) -> Self {
        Tensor {
            shape: img.shape().to_vec(),
            data: img.data,
        }
    }
}

impl From<Sinogram> for Tensor {
    fn from(s: Sinogram) -> Self {
        Tensor {
            shape: s.shape().to_vec(),
            data: s.data,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub enum Op {
    Input,
    Parameter { trainable: bool },
    ForwardProject(Arc<Geometry>),
    Backproject(Arc<Geometry>),
    /// `x ⊙ w`, with `w` either of `x`'s shape or broadcast over axis 0.
    MultiplyWeights,
    /// Row-wise Fourier filtering of `x` (last axis) by per-bin weights.
    FourierFilter,
    Add,
    Scale(f64),
    /// `Σ (a − b)²`.
    L2Loss,
    /// Anisotropic total variation `Σ_axes Σ |x[i+1] − x[i]|`.
    TvLoss,
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    name: String,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<NodeId, Tensor>,
}

/// Values of every node after a forward pass.
#[derive(Clone, Debug)]
pub struct Values(Vec<Tensor>);

impl Values {
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.0[id.0]
    }
}

/// Gradients of a scalar loss with respect to every node it depends on.
#[derive(Clone, Debug)]
pub struct Gradients(Vec<Option<Tensor>>);

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.0.get(id.0).and_then(Option::as_ref)
    }
}

pub type Feeds = HashMap<NodeId, Tensor>;

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, inputs: &[NodeId], name: &str) -> NodeId {
        for i in inputs {
            assert!(i.0 < self.nodes.len(), "node {i:?} does not belong to this graph");
        }
        self.nodes.push(Node {
            op,
            inputs: inputs.to_vec(),
            name: name.to_string(),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn input(&mut self, name: &str) -> NodeId {
        self.push(Op::Input, &[], name)
    }

    pub fn parameter(&mut self, name: &str, value: Tensor, trainable: bool) -> NodeId {
        let id = self.push(Op::Parameter { trainable }, &[], name);
        self.params.insert(id, value);
        id
    }

    /// Non-trainable parameter.
    pub fn constant(&mut self, name: &str, value: Tensor) -> NodeId {
        self.parameter(name, value, false)
    }

    pub fn forward_project(&mut self, x: NodeId, geometry: Arc<Geometry>) -> NodeId {
        self.push(Op::ForwardProject(geometry), &[x], "forward_project")
    }

    pub fn backproject(&mut self, p: NodeId, geometry: Arc<Geometry>) -> NodeId {
        self.push(Op::Backproject(geometry), &[p], "backproject")
    }

    pub fn multiply_weights(&mut self, x: NodeId, weights: NodeId) -> NodeId {
        self.push(Op::MultiplyWeights, &[x, weights], "multiply_weights")
    }

    pub fn fourier_filter(&mut self, x: NodeId, filter: NodeId) -> NodeId {
        self.push(Op::FourierFilter, &[x, filter], "fourier_filter")
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add, &[a, b], "add")
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(factor), &[a], "scale")
    }

    pub fn l2_loss(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::L2Loss, &[a, b], "l2_loss")
    }

    pub fn tv_loss(&mut self, x: NodeId) -> NodeId {
        self.push(Op::TvLoss, &[x], "tv_loss")
    }

    pub fn param(&self, id: NodeId) -> Option<&Tensor> {
        self.params.get(&id)
    }

    pub fn set_param(&mut self, id: NodeId, value: Tensor) -> Result<()> {
        let cur = self
            .params
            .get_mut(&id)
            .ok_or_else(|| Error::Graph(format!("node {} is not a parameter", id.0)))?;
        if cur.shape != value.shape {
            return Err(Error::shape(&cur.shape, &value.shape));
        }
        *cur = value;
        Ok(())
    }

    pub fn is_trainable(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].op, Op::Parameter { trainable: true })
    }

    /// Evaluates every node in topological order.
    pub fn forward(&self, feeds: &Feeds) -> Result<Values> {
        for id in feeds.keys() {
            if !matches!(self.nodes.get(id.0).map(|n| &n.op), Some(Op::Input)) {
                return Err(Error::Graph(format!("feed for non-input node {}", id.0)));
            }
        }
        let mut values: Vec<Tensor> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            let arg = |k: usize| &values[node.inputs[k].0];
            let v = match &node.op {
                Op::Input => feeds
                    .get(&id)
                    .cloned()
                    .ok_or_else(|| Error::Graph(format!("missing feed for input `{}`", node.name)))?,
                Op::Parameter { .. } => self.params[&id].clone(),
                Op::ForwardProject(g) => {
                    let img = Image::from_data(g.volume(), arg(0).data.clone())
                        .map_err(|e| node_err(node, e))?;
                    g.forward_project(&img).map_err(|e| node_err(node, e))?.into()
                }
                Op::Backproject(g) => {
                    let s = to_sinogram(arg(0), g).map_err(|e| node_err(node, e))?;
                    g.backproject(&s).map_err(|e| node_err(node, e))?.into()
                }
                Op::MultiplyWeights => {
                    let (x, w) = (arg(0), arg(1));
                    let we = broadcast(w, &x.shape).map_err(|e| node_err(node, e))?;
                    Tensor {
                        shape: x.shape.clone(),
                        data: x.data.iter().zip(we.iter()).map(|(a, b)| a * b).collect(),
                    }
                }
                Op::FourierFilter => {
                    let (x, k) = (arg(0), arg(1));
                    let row = *x.shape.last().unwrap_or(&0);
                    Tensor {
                        shape: x.shape.clone(),
                        data: filter_rows(&x.data, row, &k.data).map_err(|e| node_err(node, e))?,
                    }
                }
                Op::Add => {
                    let (a, b) = (arg(0), arg(1));
                    same_shape(a, b).map_err(|e| node_err(node, e))?;
                    Tensor {
                        shape: a.shape.clone(),
                        data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
                    }
                }
                Op::Scale(c) => {
                    let a = arg(0);
                    Tensor {
                        shape: a.shape.clone(),
                        data: a.data.iter().map(|x| c * x).collect(),
                    }
                }
                Op::L2Loss => {
                    let (a, b) = (arg(0), arg(1));
                    same_shape(a, b).map_err(|e| node_err(node, e))?;
                    Tensor::scalar(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum())
                }
                Op::TvLoss => {
                    let a = arg(0);
                    Tensor::scalar(tv_loss(&a.data, &a.shape))
                }
            };
            values.push(v);
        }
        Ok(Values(values))
    }

    /// Reverse-mode accumulation from a scalar `loss` node.
    pub fn backward(&self, values: &Values, loss: NodeId) -> Result<Gradients> {
        if values.0.len() != self.nodes.len() {
            return Err(Error::Graph("values do not belong to this graph".into()));
        }
        if values.get(loss).len() != 1 {
            return Err(Error::Graph(format!(
                "loss node `{}` is not scalar (shape {:?})",
                self.nodes[loss.0].name,
                values.get(loss).shape
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor {
            shape: values.get(loss).shape.clone(),
            data: vec![1.0],
        });
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if g.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of node {i} (`{}`)",
                    self.nodes[i].name
                )));
            }
            let node = &self.nodes[i];
            let arg = |k: usize| values.get(node.inputs[k]);
            let contributions: Vec<Tensor> = match &node.op {
                Op::Input | Op::Parameter { .. } => Vec::new(),
                Op::ForwardProject(geo) => {
                    let s = to_sinogram(&g, geo)?;
                    vec![geo.backproject(&s)?.into()]
                }
                Op::Backproject(geo) => {
                    let img = Image::from_data(geo.volume(), g.data.clone())?;
                    vec![geo.forward_project(&img)?.into()]
                }
                Op::MultiplyWeights => {
                    let (x, w) = (arg(0), arg(1));
                    let we = broadcast(w, &x.shape)?;
                    let gx: Vec<f64> = g.data.iter().zip(we.iter()).map(|(a, b)| a * b).collect();
                    let prod: Vec<f64> = g.data.iter().zip(&x.data).map(|(a, b)| a * b).collect();
                    vec![
                        Tensor::new(x.shape.clone(), gx)?,
                        Tensor::new(w.shape.clone(), reduce_broadcast(&prod, w.len()))?,
                    ]
                }
                Op::FourierFilter => {
                    let (x, k) = (arg(0), arg(1));
                    let row = *x.shape.last().unwrap();
                    let n = k.len();
                    // adjoint of a real circulant filter: mirrored weights
                    let mirrored: Vec<f64> = (0..n).map(|j| k.data[(n - j) % n]).collect();
                    vec![
                        Tensor::new(x.shape.clone(), filter_rows(&g.data, row, &mirrored)?)?,
                        Tensor::new(k.shape.clone(), filter_weight_gradient(&x.data, &g.data, row, n)?)?,
                    ]
                }
                Op::Add => vec![g.clone(), g.clone()],
                Op::Scale(c) => vec![Tensor {
                    shape: g.shape.clone(),
                    data: g.data.iter().map(|v| c * v).collect(),
                }],
                Op::L2Loss => {
                    let (a, b) = (arg(0), arg(1));
                    let s = g.data[0];
                    let ga: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| 2.0 * s * (x - y)).collect();
                    let gb: Vec<f64> = ga.iter().map(|v| -v).collect();
                    vec![Tensor::new(a.shape.clone(), ga)?, Tensor::new(b.shape.clone(), gb)?]
                }
                Op::TvLoss => {
                    let a = arg(0);
                    let s = g.data[0];
                    let mut ga = tv_gradient(&a.data, &a.shape);
                    ga.iter_mut().for_each(|v| *v *= s);
                    vec![Tensor::new(a.shape.clone(), ga)?]
                }
            };
            for (input, c) in node.inputs.iter().zip(contributions) {
                match &mut grads[input.0] {
                    Some(acc) => acc.data.iter_mut().zip(&c.data).for_each(|(a, b)| *a += b),
                    slot => *slot = Some(c),
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients(grads))
    }

    /// `p ← p − lr·g` for every trainable parameter that received a gradient.
    pub fn gradient_descent_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        let ids: Vec<NodeId> = self.params.keys().copied().collect();
        for id in ids {
            if !self.is_trainable(id) {
                continue;
            }
            if let Some(g) = grads.get(id) {
                let p = self.params.get_mut(&id).unwrap();
                if p.shape != g.shape {
                    return Err(Error::shape(&p.shape, &g.shape));
                }
                gradient_descent_step(&mut p.data, &g.data, learning_rate)?;
            }
        }
        Ok(())
    }
}

fn node_err(node: &Node, e: Error) -> Error {
    Error::Graph(format!("node `{}`: {e}", node.name))
}

fn to_sinogram(t: &Tensor, g: &Geometry) -> Result<Sinogram> {
    Sinogram::from_data(&t.shape, g.detector().spacing(), t.data.clone())
}

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::shape(&a.shape, &b.shape));
    }
    Ok(())
}

/// `w` expanded to `shape` (identical, or repeated along axis 0).
fn broadcast<'a>(w: &'a Tensor, shape: &[usize]) -> Result<std::borrow::Cow<'a, [f64]>> {
    if w.shape == shape {
        Ok(std::borrow::Cow::Borrowed(&w.data))
    } else if shape.len() == w.shape.len() + 1 && shape[1..] == w.shape[..] {
        Ok(std::borrow::Cow::Owned(w.data.repeat(shape[0])))
    } else {
        Err(Error::shape(shape, &w.shape))
    }
}

/// Sums a broadcast gradient back to `len` elements.
fn reduce_broadcast(full: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for chunk in full.chunks(len) {
        out.iter_mut().zip(chunk).for_each(|(o, v)| *o += v);
    }
    out
}

/// Plain gradient descent on a flat parameter vector.
pub fn gradient_descent_step(params: &mut [f64], grads: &[f64], learning_rate: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(&[params.len()], &[grads.len()]));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be > 0, got {learning_rate}"
        )));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= learning_rate * g;
    }
    Ok(())
}

/// Visits every pair of neighbours `(i, i + stride)` along every axis.
fn for_each_neighbour(shape: &[usize], mut f: impl FnMut(usize, usize)) {
    let total: usize = shape.iter().product();
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let block = stride * n;
        for i in 0..total {
            if (i % block) / stride + 1 < n {
                f(i, i + stride);
            }
        }
        stride = block;
    }
}

/// Anisotropic total variation.
pub fn tv_loss(data: &[f64], shape: &[usize]) -> f64 {
    let mut acc = 0.0;
    for_each_neighbour(shape, |a, b| acc += (data[b] - data[a]).abs());
    acc
}

/// Subgradient of [`tv_loss`], taking `sign(0) = 0`.
pub fn tv_gradient(data: &[f64], shape: &[usize]) -> Vec<f64> {
    let mut g = vec![0.0; data.len()];
    for_each_neighbour(shape, |a, b| {
        let d = data[b] - data[a];
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        g[b] += s;
        g[a] -= s;
    });
    g
}
