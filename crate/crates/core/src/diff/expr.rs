//! Frozen expression and its evaluation kernels.
//!
//! An `Expression` is a topologically ordered opcode list produced by
//! `Graph::compile`. Three kernels run over it:
//!
//! * `evaluate`        - plain forward values,
//! * `input_derivatives` - forward pass carrying exact first (and optionally
//!   second diagonal) derivatives with respect to the inputs,
//! * `param_gradient`  - reverse sweep for the parameter gradient of a scalar
//!   loss, averaged over a batch of input rows.
//!
//! All kernels are pure: they write only into the caller's `Workspace` (or a
//! fresh local one), so repeated calls on identical data are bitwise
//! reproducible. Accumulation inside a kernel is sequential in node order,
//! which fixes the floating-point reduction order regardless of how callers
//! schedule batches.

use std::sync::atomic::{AtomicU64, Ordering};

use super::builder::{check_len, Inner, OpK};
use super::scalar::Bundle;
use super::{sigmoid, softplus};
use crate::error::{CoreError, Result};

/// Exact point derivatives of one expression output with respect to the
/// expression inputs: value, gradient, and the diagonal of the Hessian.
pub type DerivativeBundle = Bundle<f64>;

static NEXT_EXPR_ID: AtomicU64 = AtomicU64::new(1);

/// Immutable, dead-code-pruned computation graph.
#[derive(Clone)]
pub struct Expression {
    id: u64,
    ops: Vec<OpK>,
    pairs: Vec<(u32, u32)>,
    n_inputs: usize,
    n_params: usize,
    outputs: Vec<u32>,
    consts: Vec<(u32, f64)>,
    input_nodes: Vec<(u32, u32)>,
    param_nodes: Vec<(u32, u32)>,
}

/// Reusable scratch buffers for one `Expression`.
///
/// Binding a workspace to a different expression re-initializes it. Values
/// persist between calls, so parameters are reloaded only when they change.
#[derive(Default)]
pub struct Workspace {
    expr_id: u64,
    vals: Vec<f64>,
    adj: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Expression {
    pub(crate) fn from_graph(b: &Inner, out_ids: &[u32]) -> Result<Expression> {
        assert!(!out_ids.is_empty(), "expression needs at least one output");
        // Liveness: keep only nodes reachable from the outputs.
        let mut live = vec![false; b.ops.len()];
        let mut stack: Vec<u32> = out_ids.to_vec();
        while let Some(id) = stack.pop() {
            if live[id as usize] {
                continue;
            }
            live[id as usize] = true;
            match b.ops[id as usize] {
                OpK::Const(_) | OpK::Input(_) | OpK::Param(_) => {}
                OpK::Add(x, y) | OpK::Sub(x, y) | OpK::Mul(x, y) => {
                    stack.push(x);
                    stack.push(y);
                }
                OpK::Neg(x)
                | OpK::Tanh(x)
                | OpK::Sin(x)
                | OpK::Cos(x)
                | OpK::Exp(x)
                | OpK::Powi(x, _)
                | OpK::Abs(x)
                | OpK::Sign(x)
                | OpK::AbsPow(x, _)
                | OpK::Softplus(x)
                | OpK::Sigmoid(x) => stack.push(x),
                OpK::Dot { start, len } => {
                    for &(x, y) in &b.pairs[start as usize..(start + len) as usize] {
                        stack.push(x);
                        stack.push(y);
                    }
                }
            }
        }
        // Renumber live nodes, preserving (topological) insertion order.
        let mut remap = vec![u32::MAX; b.ops.len()];
        let mut next = 0u32;
        for (i, &l) in live.iter().enumerate() {
            if l {
                remap[i] = next;
                next += 1;
            }
        }
        let r = |i: u32| remap[i as usize];
        let mut ops = Vec::with_capacity(next as usize);
        let mut pairs = Vec::new();
        let mut consts = Vec::new();
        let mut input_nodes = Vec::new();
        let mut param_nodes = Vec::new();
        for (i, &l) in live.iter().enumerate() {
            if !l {
                continue;
            }
            let new_id = remap[i];
            let op = match b.ops[i] {
                OpK::Const(v) => {
                    consts.push((new_id, v));
                    OpK::Const(v)
                }
                OpK::Input(s) => {
                    input_nodes.push((new_id, s));
                    OpK::Input(s)
                }
                OpK::Param(s) => {
                    param_nodes.push((new_id, s));
                    OpK::Param(s)
                }
                OpK::Add(x, y) => OpK::Add(r(x), r(y)),
                OpK::Sub(x, y) => OpK::Sub(r(x), r(y)),
                OpK::Mul(x, y) => OpK::Mul(r(x), r(y)),
                OpK::Neg(x) => OpK::Neg(r(x)),
                OpK::Tanh(x) => OpK::Tanh(r(x)),
                OpK::Sin(x) => OpK::Sin(r(x)),
                OpK::Cos(x) => OpK::Cos(r(x)),
                OpK::Exp(x) => OpK::Exp(r(x)),
                OpK::Powi(x, n) => OpK::Powi(r(x), n),
                OpK::Abs(x) => OpK::Abs(r(x)),
                OpK::Sign(x) => OpK::Sign(r(x)),
                OpK::AbsPow(x, p) => OpK::AbsPow(r(x), p),
                OpK::Softplus(x) => OpK::Softplus(r(x)),
                OpK::Sigmoid(x) => OpK::Sigmoid(r(x)),
                OpK::Dot { start, len } => {
                    let new_start = pairs.len() as u32;
                    for &(x, y) in &b.pairs[start as usize..(start + len) as usize] {
                        pairs.push((r(x), r(y)));
                    }
                    OpK::Dot {
                        start: new_start,
                        len,
                    }
                }
            };
            ops.push(op);
        }
        Ok(Expression {
            id: NEXT_EXPR_ID.fetch_add(1, Ordering::Relaxed),
            ops,
            pairs,
            n_inputs: b.n_inputs as usize,
            n_params: b.n_params as usize,
            outputs: out_ids.iter().map(|&o| r(o)).collect(),
            consts,
            input_nodes,
            param_nodes,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.ops.len()
    }

    /// Size the workspace for this expression and bake the constants in.
    pub fn bind(&self, ws: &mut Workspace) {
        if ws.expr_id == self.id {
            return;
        }
        ws.expr_id = self.id;
        ws.vals.clear();
        ws.vals.resize(self.ops.len(), 0.0);
        ws.adj.clear();
        ws.adj.resize(self.ops.len(), 0.0);
        for &(id, v) in &self.consts {
            ws.vals[id as usize] = v;
        }
    }

    /// Write the parameter values into their node slots.
    pub fn load_params(&self, ws: &mut Workspace, params: &[f64]) -> Result<()> {
        check_len("parameter vector", self.n_params, params.len())?;
        self.bind(ws);
        for &(id, slot) in &self.param_nodes {
            ws.vals[id as usize] = params[slot as usize];
        }
        Ok(())
    }

    /// Write one input row into its node slots. `bind`/`load_params` first.
    #[inline]
    pub fn load_inputs(&self, ws: &mut Workspace, inputs: &[f64]) -> Result<()> {
        check_len("input vector", self.n_inputs, inputs.len())?;
        for &(id, slot) in &self.input_nodes {
            ws.vals[id as usize] = inputs[slot as usize];
        }
        Ok(())
    }

    /// Forward value sweep. Inputs and parameters must already be loaded.
    pub fn forward(&self, ws: &mut Workspace) {
        let vals = &mut ws.vals;
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                OpK::Const(_) | OpK::Input(_) | OpK::Param(_) => continue,
                OpK::Add(a, b) => vals[a as usize] + vals[b as usize],
                OpK::Sub(a, b) => vals[a as usize] - vals[b as usize],
                OpK::Mul(a, b) => vals[a as usize] * vals[b as usize],
                OpK::Neg(a) => -vals[a as usize],
                OpK::Tanh(a) => vals[a as usize].tanh(),
                OpK::Sin(a) => vals[a as usize].sin(),
                OpK::Cos(a) => vals[a as usize].cos(),
                OpK::Exp(a) => vals[a as usize].exp(),
                OpK::Powi(a, n) => vals[a as usize].powi(n),
                OpK::Abs(a) => vals[a as usize].abs(),
                OpK::Sign(a) => sgn(vals[a as usize]),
                OpK::AbsPow(a, p) => vals[a as usize].abs().powf(p),
                OpK::Softplus(a) => softplus(vals[a as usize]),
                OpK::Sigmoid(a) => sigmoid(vals[a as usize]),
                OpK::Dot { start, len } => {
                    let mut acc = 0.0;
                    for &(a, b) in &self.pairs[start as usize..(start + len) as usize] {
                        acc += vals[a as usize] * vals[b as usize];
                    }
                    acc
                }
            };
            vals[i] = v;
        }
    }

    /// Value of output `k` after a forward sweep.
    #[inline]
    pub fn output(&self, ws: &Workspace, k: usize) -> f64 {
        ws.vals[self.outputs[k] as usize]
    }

    /// Reverse sweep from output `k`, seeded with `seed`. Parameter adjoints
    /// are accumulated into `grad` (not cleared here), so batched calls sum.
    pub fn backward_into(
        &self,
        ws: &mut Workspace,
        k: usize,
        seed: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        check_len("gradient vector", self.n_params, grad.len())?;
        let adj = &mut ws.adj;
        let vals = &ws.vals;
        adj.iter_mut().for_each(|a| *a = 0.0);
        adj[self.outputs[k] as usize] = seed;
        for (i, op) in self.ops.iter().enumerate().rev() {
            let go = adj[i];
            if go == 0.0 {
                continue;
            }
            match *op {
                OpK::Const(_) | OpK::Input(_) | OpK::Sign(_) => {}
                OpK::Param(slot) => grad[slot as usize] += go,
                OpK::Add(a, b) => {
                    adj[a as usize] += go;
                    adj[b as usize] += go;
                }
                OpK::Sub(a, b) => {
                    adj[a as usize] += go;
                    adj[b as usize] -= go;
                }
                OpK::Mul(a, b) => {
                    adj[a as usize] += go * vals[b as usize];
                    adj[b as usize] += go * vals[a as usize];
                }
                OpK::Neg(a) => adj[a as usize] -= go,
                OpK::Tanh(a) => {
                    let y = vals[i];
                    adj[a as usize] += go * (1.0 - y * y);
                }
                OpK::Sin(a) => adj[a as usize] += go * vals[a as usize].cos(),
                OpK::Cos(a) => adj[a as usize] -= go * vals[a as usize].sin(),
                OpK::Exp(a) => adj[a as usize] += go * vals[i],
                OpK::Powi(a, n) => {
                    adj[a as usize] += go * n as f64 * vals[a as usize].powi(n - 1);
                }
                OpK::Abs(a) => adj[a as usize] += go * sgn(vals[a as usize]),
                OpK::AbsPow(a, p) => {
                    let x = vals[a as usize];
                    adj[a as usize] += go * p * sgn(x) * x.abs().powf(p - 1.0);
                }
                OpK::Softplus(a) => adj[a as usize] += go * sigmoid(vals[a as usize]),
                OpK::Sigmoid(a) => {
                    let s = vals[i];
                    adj[a as usize] += go * s * (1.0 - s);
                }
                OpK::Dot { start, len } => {
                    for &(a, b) in &self.pairs[start as usize..(start + len) as usize] {
                        adj[a as usize] += go * vals[b as usize];
                        adj[b as usize] += go * vals[a as usize];
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluate all outputs at one input point.
    pub fn evaluate(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::new();
        self.load_params(&mut ws, params)?;
        self.evaluate_with(&mut ws, inputs)
    }

    /// Evaluate reusing a bound workspace whose parameters are loaded.
    pub fn evaluate_with(&self, ws: &mut Workspace, inputs: &[f64]) -> Result<Vec<f64>> {
        self.load_inputs(ws, inputs)?;
        self.forward(ws);
        Ok(self.outputs.iter().map(|&o| ws.vals[o as usize]).collect())
    }

    /// Exact derivatives of every output with respect to the inputs at one
    /// point, by a forward sweep carrying (value, gradient, Hessian diagonal)
    /// triples. `order` is 1 or 2; order 1 leaves `second_diag` empty.
    ///
    /// A second-order query through |z| (or |z|^p with p < 2) at exactly
    /// z = 0 fails with `SingularDerivative` naming the offending node.
    pub fn input_derivatives(
        &self,
        inputs: &[f64],
        params: &[f64],
        order: u8,
    ) -> Result<Vec<DerivativeBundle>> {
        if order != 1 && order != 2 {
            return Err(CoreError::InvalidConfig(format!(
                "derivative order must be 1 or 2, got {order}"
            )));
        }
        check_len("input vector", self.n_inputs, inputs.len())?;
        check_len("parameter vector", self.n_params, params.len())?;
        let n = self.n_inputs;
        let m = self.ops.len();
        let second = order == 2;
        let mut vals = vec![0.0; m];
        let mut d1 = vec![0.0; m * n];
        let mut d2 = if second { vec![0.0; m * n] } else { Vec::new() };
        for (i, op) in self.ops.iter().enumerate() {
            let row = i * n;
            match *op {
                OpK::Const(c) => vals[i] = c,
                OpK::Param(slot) => vals[i] = params[slot as usize],
                OpK::Input(slot) => {
                    vals[i] = inputs[slot as usize];
                    d1[row + slot as usize] = 1.0;
                }
                OpK::Add(a, b) => {
                    let (ra, rb) = (a as usize * n, b as usize * n);
                    vals[i] = vals[a as usize] + vals[b as usize];
                    for k in 0..n {
                        d1[row + k] = d1[ra + k] + d1[rb + k];
                    }
                    if second {
                        for k in 0..n {
                            d2[row + k] = d2[ra + k] + d2[rb + k];
                        }
                    }
                }
                OpK::Sub(a, b) => {
                    let (ra, rb) = (a as usize * n, b as usize * n);
                    vals[i] = vals[a as usize] - vals[b as usize];
                    for k in 0..n {
                        d1[row + k] = d1[ra + k] - d1[rb + k];
                    }
                    if second {
                        for k in 0..n {
                            d2[row + k] = d2[ra + k] - d2[rb + k];
                        }
                    }
                }
                OpK::Mul(a, b) => {
                    let (ra, rb) = (a as usize * n, b as usize * n);
                    let (va, vb) = (vals[a as usize], vals[b as usize]);
                    vals[i] = va * vb;
                    if second {
                        for k in 0..n {
                            d2[row + k] =
                                d2[ra + k] * vb + 2.0 * d1[ra + k] * d1[rb + k] + va * d2[rb + k];
                        }
                    }
                    for k in 0..n {
                        d1[row + k] = d1[ra + k] * vb + va * d1[rb + k];
                    }
                }
                OpK::Neg(a) => {
                    let ra = a as usize * n;
                    vals[i] = -vals[a as usize];
                    for k in 0..n {
                        d1[row + k] = -d1[ra + k];
                    }
                    if second {
                        for k in 0..n {
                            d2[row + k] = -d2[ra + k];
                        }
                    }
                }
                OpK::Dot { start, len } => {
                    let span = &self.pairs[start as usize..(start + len) as usize];
                    let mut v = 0.0;
                    for &(a, b) in span {
                        v += vals[a as usize] * vals[b as usize];
                    }
                    vals[i] = v;
                    for k in 0..n {
                        let mut g = 0.0;
                        for &(a, b) in span {
                            g += d1[a as usize * n + k] * vals[b as usize]
                                + vals[a as usize] * d1[b as usize * n + k];
                        }
                        d1[row + k] = g;
                    }
                    if second {
                        for k in 0..n {
                            let mut h = 0.0;
                            for &(a, b) in span {
                                let (ra, rb) = (a as usize * n, b as usize * n);
                                h += d2[ra + k] * vals[b as usize]
                                    + 2.0 * d1[ra + k] * d1[rb + k]
                                    + vals[a as usize] * d2[rb + k];
                            }
                            d2[row + k] = h;
                        }
                    }
                }
                // Unary smooth ops: chain rule with f', f''.
                _ => {
                    let a = match *op {
                        OpK::Tanh(a)
                        | OpK::Sin(a)
                        | OpK::Cos(a)
                        | OpK::Exp(a)
                        | OpK::Powi(a, _)
                        | OpK::Abs(a)
                        | OpK::Sign(a)
                        | OpK::AbsPow(a, _)
                        | OpK::Softplus(a)
                        | OpK::Sigmoid(a) => a,
                        _ => unreachable!(),
                    };
                    let x = vals[a as usize];
                    let (v, f1, f2) = match *op {
                        OpK::Tanh(_) => {
                            let t = x.tanh();
                            let s = 1.0 - t * t;
                            (t, s, -2.0 * t * s)
                        }
                        OpK::Sin(_) => (x.sin(), x.cos(), -x.sin()),
                        OpK::Cos(_) => (x.cos(), -x.sin(), -x.cos()),
                        OpK::Exp(_) => {
                            let e = x.exp();
                            (e, e, e)
                        }
                        OpK::Powi(_, p) => {
                            let f2 = if second && p >= 2 {
                                (p * (p - 1)) as f64 * x.powi(p - 2)
                            } else {
                                0.0
                            };
                            (x.powi(p), p as f64 * x.powi(p - 1), f2)
                        }
                        OpK::Abs(_) => {
                            if second && x == 0.0 {
                                return Err(CoreError::SingularDerivative { node: i, op: "|z|" });
                            }
                            (x.abs(), sgn(x), 0.0)
                        }
                        OpK::Sign(_) => (sgn(x), 0.0, 0.0),
                        OpK::AbsPow(_, p) => {
                            if x == 0.0 {
                                if second && p < 2.0 {
                                    return Err(CoreError::SingularDerivative {
                                        node: i,
                                        op: "|z|^p",
                                    });
                                }
                                (0.0, 0.0, if p == 2.0 { 2.0 } else { 0.0 })
                            } else {
                                let ax = x.abs();
                                (
                                    ax.powf(p),
                                    p * sgn(x) * ax.powf(p - 1.0),
                                    p * (p - 1.0) * ax.powf(p - 2.0),
                                )
                            }
                        }
                        OpK::Softplus(_) => {
                            let s = sigmoid(x);
                            (softplus(x), s, s * (1.0 - s))
                        }
                        OpK::Sigmoid(_) => {
                            let s = sigmoid(x);
                            (s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s))
                        }
                        _ => unreachable!(),
                    };
                    let ra = a as usize * n;
                    vals[i] = v;
                    if second {
                        for k in 0..n {
                            d2[row + k] = f2 * d1[ra + k] * d1[ra + k] + f1 * d2[ra + k];
                        }
                    }
                    for k in 0..n {
                        d1[row + k] = f1 * d1[ra + k];
                    }
                }
            }
        }
        Ok(self
            .outputs
            .iter()
            .map(|&o| {
                let row = o as usize * n;
                Bundle {
                    value: vals[o as usize],
                    first: d1[row..row + n].to_vec(),
                    second_diag: if second {
                        d2[row..row + n].to_vec()
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect())
    }

    /// Gradient of a scalar loss with respect to the parameters, averaged
    /// over a batch of input rows (`inputs_batch` is row-major with
    /// `n_inputs` columns). Parameters never touched by the loss get 0.
    pub fn param_gradient(&self, inputs_batch: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        if self.outputs.len() != 1 {
            return Err(CoreError::NonScalarLoss(self.outputs.len()));
        }
        if self.n_inputs == 0 {
            check_len("input batch", 0, inputs_batch.len())?;
        } else if inputs_batch.len() % self.n_inputs != 0 {
            return Err(CoreError::ShapeMismatch {
                context: "input batch (must be rows of n_inputs)",
                expected: self.n_inputs,
                got: inputs_batch.len(),
            });
        }
        let rows = if self.n_inputs == 0 {
            1
        } else {
            inputs_batch.len() / self.n_inputs
        };
        if rows == 0 {
            return Err(CoreError::ShapeMismatch {
                context: "input batch (empty)",
                expected: self.n_inputs,
                got: 0,
            });
        }
        let mut ws = Workspace::new();
        self.load_params(&mut ws, params)?;
        let mut grad = vec![0.0; self.n_params];
        let seed = 1.0 / rows as f64;
        for r in 0..rows {
            let row = if self.n_inputs == 0 {
                &[][..]
            } else {
                &inputs_batch[r * self.n_inputs..(r + 1) * self.n_inputs]
            };
            self.load_inputs(&mut ws, row)?;
            self.forward(&mut ws);
            self.backward_into(&mut ws, 0, seed, &mut grad)?;
        }
        Ok(grad)
    }
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use crate::diff::Graph;

    #[test]
    fn evaluate_simple_products() {
        // f = (x + 2) * p0, at x = 3, p0 = 4 -> 20.
        let g = Graph::new();
        let x = g.input(0);
        let p = g.param(0);
        let f = (x + 2.0) * p;
        let e = g.compile(&[f]).unwrap();
        assert_eq!(e.evaluate(&[3.0], &[4.0]).unwrap(), vec![20.0]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Graph::new();
        let x = g.input(0);
        let e = g.compile(&[x]).unwrap();
        assert!(e.evaluate(&[1.0, 2.0], &[]).is_err());
    }

    #[test]
    fn bundle_of_product_hand_checked() {
        // f = x^2 * t: f_x = 2xt, f_t = x^2, f_xx = 2t, f_tt = 0.
        let g = Graph::new();
        let x = g.input(0);
        let t = g.input(1);
        let f = x.clone() * x * t;
        let e = g.compile(&[f]).unwrap();
        let b = &e.input_derivatives(&[3.0, 5.0], &[], 2).unwrap()[0];
        assert_eq!(b.value, 45.0);
        assert_eq!(b.first, vec![30.0, 9.0]);
        assert_eq!(b.second_diag, vec![10.0, 0.0]);
    }

    #[test]
    fn order_one_leaves_second_empty() {
        let g = Graph::new();
        let x = g.input(0);
        let f = x.sin();
        let e = g.compile(&[f]).unwrap();
        let b = &e.input_derivatives(&[0.3], &[], 1).unwrap()[0];
        assert!(b.second_diag.is_empty());
        assert!((b.first[0] - 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn second_order_through_abs_at_zero_fails() {
        let g = Graph::new();
        let x = g.input(0);
        let f = x.abs();
        let e = g.compile(&[f]).unwrap();
        let err = e.input_derivatives(&[0.0], &[], 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("singular"), "unexpected message: {msg}");
        // Order 1 at the kink takes the subgradient 0 instead.
        let b = &e.input_derivatives(&[0.0], &[], 1).unwrap()[0];
        assert_eq!(b.first[0], 0.0);
    }

    #[test]
    fn param_gradient_of_squared_param() {
        // loss = w^2 with w = 3 -> d loss / dw = 6.
        let g = Graph::new();
        let w = g.param(0);
        let loss = w.sq();
        let e = g.compile(&[loss]).unwrap();
        assert_eq!(e.param_gradient(&[], &[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn unreachable_param_gets_zero_gradient() {
        let g = Graph::new();
        let w = g.param(0);
        let dead = g.param(1);
        let loss = w.sq();
        let e = g.compile(&[loss]).unwrap();
        assert_eq!(e.n_params(), 2);
        assert_eq!(e.param_gradient(&[], &[3.0, 7.0]).unwrap(), vec![6.0, 0.0]);
        let _ = dead;
    }

    #[test]
    fn batch_gradient_is_mean() {
        // loss = w * x over rows x in {1, 3}: grad = mean(x) = 2.
        let g = Graph::new();
        let x = g.input(0);
        let w = g.param(0);
        let loss = w * x;
        let e = g.compile(&[loss]).unwrap();
        assert_eq!(e.param_gradient(&[1.0, 3.0], &[5.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let g = Graph::new();
        let x = g.input(0);
        let y = x.clone() + 1.0;
        let e = g.compile(&[x, y]).unwrap();
        assert!(e.param_gradient(&[1.0], &[]).is_err());
    }

    #[test]
    fn evaluation_is_bitwise_repeatable() {
        let g = Graph::new();
        let x = g.input(0);
        let p = g.param(0);
        let f = (x.clone() * p.clone()).tanh() + (x * 0.5).sin() * p.softplus();
        let e = g.compile(&[f]).unwrap();
        let a = e.evaluate(&[0.37], &[1.21]).unwrap();
        let b = e.evaluate(&[0.37], &[1.21]).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn dead_code_is_pruned() {
        let g = Graph::new();
        let x = g.input(0);
        let used = x.clone().tanh();
        let _unused = x.clone().exp().sin().abs();
        let e = g.compile(&[used]).unwrap();
        // input + tanh only.
        assert_eq!(e.n_nodes(), 2);
    }
}
