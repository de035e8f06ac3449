//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! Every node holds a 2-D array. Binary elementwise ops broadcast their right
//! operand along any axis of length one; the gradient is summed back.

use std::borrow::Cow;

use ndarray::{Array2, Axis, Zip};

use super::PolicyError;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    Minimum(Var, Var),
    SumCols(Var),
    Sum(Var),
    Mean(Var),
    LogSumExpCols(Var),
    Pick(Var, Vec<usize>),
}

struct Node<'a> {
    value: Cow<'a, Array2<f64>>,
    op: Op,
}

/// Records operations for a single backward pass.
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
}

impl Default for Graph<'_> {
    fn default() -> Self {
        Self::new()
    }
}

fn broadcast_to(b: &Array2<f64>, shape: (usize, usize)) -> Result<ndarray::ArrayView2<'_, f64>, PolicyError> {
    b.broadcast(shape).ok_or(PolicyError::Shape {
        op: "broadcast",
        left: shape,
        right: b.dim(),
    })
}

/// Sums `g` down to `shape` along the broadcast axes.
fn reduce_to(g: Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut g = g;
    if shape.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Constant)
    }

    /// A borrowed trainable leaf; its gradient is reported under `id`.
    pub fn param(&mut self, id: usize, value: &'a Array2<f64>) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(value),
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, PolicyError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.ncols() != y.nrows() {
            return Err(PolicyError::Shape {
                op: "matmul",
                left: x.dim(),
                right: y.dim(),
            });
        }
        let v = x.dot(y);
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, PolicyError> {
        let x = self.value(a);
        let y = broadcast_to(self.value(b), x.dim())?;
        let mut out = x.clone();
        Zip::from(&mut out).and(&y).for_each(|o, &q| *o = f(*o, q));
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, PolicyError> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, PolicyError> {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, PolicyError> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise minimum; ties send the gradient to `a`.
    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var, PolicyError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dim() != y.dim() {
            return Err(PolicyError::Shape {
                op: "minimum",
                left: x.dim(),
                right: y.dim(),
            });
        }
        let mut out = x.clone();
        Zip::from(&mut out).and(y).for_each(|o, &q| *o = o.min(q));
        Ok(self.push(out, Op::Minimum(a, b)))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out = self.value(a).mapv(f);
        self.push(out, op)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x + c, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Log(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    /// Gradient passes only where `lo < x < hi`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, |x| x.clamp(lo, hi), Op::Clamp(a, lo, hi))
    }

    /// Row sums: (n, m) → (n, 1).
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let out = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        self.push(out, Op::SumCols(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Array2::from_elem((1, 1), s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let m = x.sum() / x.len() as f64;
        self.push(Array2::from_elem((1, 1), m), Op::Mean(a))
    }

    /// Stable per-row log-sum-exp: (n, m) → (n, 1).
    pub fn logsumexp_cols(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| {
            let row = x.row(i);
            let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            m + row.fold(0.0, |s, &v| s + (v - m).exp()).ln()
        });
        self.push(out, Op::LogSumExpCols(a))
    }

    /// Selects column `indices[i]` of row `i`: (n, m) → (n, 1).
    pub fn pick(&mut self, a: Var, indices: &[usize]) -> Result<Var, PolicyError> {
        let x = self.value(a);
        if indices.len() != x.nrows() || indices.iter().any(|&j| j >= x.ncols()) {
            return Err(PolicyError::Shape {
                op: "pick",
                left: x.dim(),
                right: (indices.len(), 1),
            });
        }
        let out = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| x[[i, indices[i]]]);
        Ok(self.push(out, Op::Pick(a, indices.to_vec())))
    }

    /// Reverse sweep from a 1×1 root. Returns the gradient of every `param`
    /// leaf as `(id, grad)`; parameters unreachable from the root get zeros.
    pub fn backward(&self, root: Var) -> Result<Vec<(usize, Array2<f64>)>, PolicyError> {
        let shape = self.value(root).dim();
        if shape != (1, 1) {
            return Err(PolicyError::NonScalarRoot(shape));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Array2::ones((1, 1)));
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let val = |v: Var| &*self.nodes[v.0].value;
            match &node.op {
                Op::Constant => {}
                Op::Param(_) => grads[i] = Some(g),
                Op::MatMul(a, b) => {
                    let ga = g.dot(&val(*b).t());
                    let gb = val(*a).t().dot(&g);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    let sb = val(*b).dim();
                    accumulate(&mut grads[b.0], reduce_to(g.clone(), sb));
                    accumulate(&mut grads[a.0], g);
                }
                Op::Sub(a, b) => {
                    let sb = val(*b).dim();
                    accumulate(&mut grads[b.0], reduce_to(-&g, sb));
                    accumulate(&mut grads[a.0], g);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (val(*a), val(*b));
                    let yb = broadcast_to(y, x.dim())?;
                    let ga = &g * &yb;
                    let gb = reduce_to(&g * x, y.dim());
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::Scale(a, c) => accumulate(&mut grads[a.0], g * *c),
                Op::AddScalar(a) => accumulate(&mut grads[a.0], g),
                Op::Relu(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(val(*a)).for_each(|d, &x| {
                        if x <= 0.0 {
                            *d = 0.0
                        }
                    });
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Tanh(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(&*node.value).for_each(|d, &y| *d *= 1.0 - y * y);
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Exp(a) => accumulate(&mut grads[a.0], g * &*node.value),
                Op::Log(a) => accumulate(&mut grads[a.0], g / val(*a)),
                Op::Square(a) => accumulate(&mut grads[a.0], g * val(*a) * 2.0),
                Op::Clamp(a, lo, hi) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(val(*a)).for_each(|d, &x| {
                        if x <= *lo || x >= *hi {
                            *d = 0.0
                        }
                    });
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Minimum(a, b) => {
                    let (x, y) = (val(*a), val(*b));
                    let mut ga = g.clone();
                    let mut gb = g;
                    Zip::from(&mut ga).and(&mut gb).and(x).and(y).for_each(|da, db, &p, &q| {
                        if p <= q {
                            *db = 0.0
                        } else {
                            *da = 0.0
                        }
                    });
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::SumCols(a) => {
                    let ga = broadcast_to(&g, val(*a).dim())?.to_owned();
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Sum(a) => accumulate(&mut grads[a.0], Array2::from_elem(val(*a).dim(), g[[0, 0]])),
                Op::Mean(a) => {
                    let x = val(*a);
                    accumulate(&mut grads[a.0], Array2::from_elem(x.dim(), g[[0, 0]] / x.len() as f64));
                }
                Op::LogSumExpCols(a) => {
                    let x = val(*a);
                    let mut ga = x.clone();
                    for (mut row, (gi, lse)) in ga.rows_mut().into_iter().zip(g.iter().zip(node.value.iter())) {
                        row.mapv_inplace(|v| gi * (v - lse).exp());
                    }
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Pick(a, idx) => {
                    let mut ga = Array2::zeros(val(*a).dim());
                    for (i, &j) in idx.iter().enumerate() {
                        ga[[i, j]] = g[[i, 0]];
                    }
                    accumulate(&mut grads[a.0], ga);
                }
            }
        }
        let mut out = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Param(id) = node.op {
                let g = grads
                    .get_mut(i)
                    .and_then(Option::take)
                    .unwrap_or_else(|| Array2::zeros(node.value.dim()));
                out.push((id, g));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn quadratic_gradient_is_two_w() {
        let w = array![[1.5]];
        let mut g = Graph::new();
        let v = g.param(0, &w);
        let sq = g.square(v);
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads, vec![(0, array![[3.0]])]);
    }

    #[test]
    fn non_scalar_root_rejected() {
        let w = array![[1.0, 2.0]];
        let mut g = Graph::new();
        let v = g.param(0, &w);
        assert!(matches!(g.backward(v), Err(PolicyError::NonScalarRoot((1, 2)))));
    }

    #[test]
    fn unreachable_param_gets_zero() {
        let (a, b) = (array![[1.0]], array![[2.0, 3.0]]);
        let mut g = Graph::new();
        let va = g.param(0, &a);
        let _vb = g.param(1, &b);
        let loss = g.mean(va);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads[1], (1, Array2::zeros((1, 2))));
    }

    #[test]
    fn row_broadcast_add_sums_gradient() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let b = array![[0.5, -0.5]];
        let mut g = Graph::new();
        let vx = g.constant(x);
        let vb = g.param(0, &b);
        let y = g.add(vx, vb).unwrap();
        let y = g.square(y);
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        // d/db Σ (x+b)² = 2 Σ_rows (x+b)
        assert_eq!(grads[0].1, array![[2.0 * (1.5 + 3.5 + 5.5), 2.0 * (1.5 + 3.5 + 5.5)]]);
    }

    #[test]
    fn logsumexp_matches_direct_and_is_stable() {
        let x = array![[1000.0, 1000.0], [0.0, 2.0_f64.ln()]];
        let mut g = Graph::new();
        let v = g.constant(x);
        let l = g.logsumexp_cols(v);
        assert_relative_eq!(g.value(l)[[0, 0]], 1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(g.value(l)[[1, 0]], 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let (a, b) = (Array2::zeros((2, 3)), Array2::zeros((2, 3)));
        let mut g = Graph::new();
        let (va, vb) = (g.constant(a), g.constant(b));
        assert!(g.matmul(va, vb).is_err());
    }
}
