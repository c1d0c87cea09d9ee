//! Expression-graph builder with symbolic input differentiation.
//!
//! A `Graph` owns a flat, append-only list of nodes. `Nd` handles wrap node
//! indices and overload the arithmetic operators, so residual and trial
//! formulas read like plain math. `Graph::diff` expands the exact derivative
//! of a node with respect to one input as new graph nodes, which keeps the
//! downstream parameter gradient a purely first-order reverse sweep even when
//! the loss contains second spatial derivatives.
//!
//! All build methods hash-cons: structurally identical nodes are created once,
//! and constants fold eagerly. Node indices are insertion-ordered, so any
//! prefix of the node list is topologically sorted.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{CoreError, Result};

/// Node opcode. Operands are indices of earlier nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum OpK {
    Const(f64),
    Input(u32),
    Param(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Tanh(u32),
    Sin(u32),
    Cos(u32),
    Exp(u32),
    /// Integer power, exponent >= 2 after folding.
    Powi(u32, i32),
    Abs(u32),
    /// sign(z) with sign(0) = 0; derivative treated as 0 everywhere.
    Sign(u32),
    /// |z|^p with p >= 1; p = 1 folds to Abs, p = 0 folds to 1.
    AbsPow(u32, f64),
    Softplus(u32),
    Sigmoid(u32),
    /// Fused inner product: sum of vals[a]*vals[b] over a pair span.
    /// One Dot node per neuron keeps graphs small and evaluation tight.
    Dot {
        start: u32,
        len: u32,
    },
}

/// Hash-consing key. Commutative ops are normalized before lookup.
#[derive(Clone, PartialEq, Eq, Hash)]
enum ConsKey {
    Const(u64),
    Input(u32),
    Param(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Tanh(u32),
    Sin(u32),
    Cos(u32),
    Exp(u32),
    Powi(u32, i32),
    Abs(u32),
    Sign(u32),
    AbsPow(u32, u64),
    Softplus(u32),
    Sigmoid(u32),
}

pub(crate) struct Inner {
    pub(crate) ops: Vec<OpK>,
    pub(crate) pairs: Vec<(u32, u32)>,
    pub(crate) n_inputs: u32,
    pub(crate) n_params: u32,
    cons: HashMap<ConsKey, u32>,
    diff_memo: HashMap<(u32, u32), u32>,
}

/// Shared, growable expression graph. Cloning is cheap (reference count).
#[derive(Clone)]
pub struct Graph {
    inner: Rc<RefCell<Inner>>,
}

/// Handle to one node of a `Graph`.
#[derive(Clone)]
pub struct Nd {
    g: Graph,
    pub(crate) id: u32,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            inner: Rc::new(RefCell::new(Inner {
                ops: Vec::new(),
                pairs: Vec::new(),
                n_inputs: 0,
                n_params: 0,
                cons: HashMap::new(),
                diff_memo: HashMap::new(),
            })),
        }
    }

    fn nd(&self, id: u32) -> Nd {
        Nd {
            g: self.clone(),
            id,
        }
    }

    pub(crate) fn same_graph(&self, other: &Graph) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn n_inputs(&self) -> usize {
        self.inner.borrow().n_inputs as usize
    }

    pub fn n_params(&self) -> usize {
        self.inner.borrow().n_params as usize
    }

    pub fn n_nodes(&self) -> usize {
        self.inner.borrow().ops.len()
    }

    /// Input slot `i`. Grows the declared input count to `i + 1`.
    pub fn input(&self, i: usize) -> Nd {
        let id = {
            let mut b = self.inner.borrow_mut();
            b.n_inputs = b.n_inputs.max(i as u32 + 1);
            b.intern(ConsKey::Input(i as u32), OpK::Input(i as u32))
        };
        self.nd(id)
    }

    /// Trainable parameter slot `j`. Grows the declared parameter count.
    pub fn param(&self, j: usize) -> Nd {
        let id = {
            let mut b = self.inner.borrow_mut();
            b.n_params = b.n_params.max(j as u32 + 1);
            b.intern(ConsKey::Param(j as u32), OpK::Param(j as u32))
        };
        self.nd(id)
    }

    pub fn constant(&self, v: f64) -> Nd {
        let id = self.inner.borrow_mut().constant(v);
        self.nd(id)
    }

    /// Fused inner product of node pairs: `sum(a_k * b_k)`.
    pub fn dot(&self, terms: &[(Nd, Nd)]) -> Nd {
        for (a, b) in terms {
            assert!(
                self.same_graph(&a.g) && self.same_graph(&b.g),
                "dot operands must come from the same graph"
            );
        }
        let ids: Vec<(u32, u32)> = terms.iter().map(|(a, b)| (a.id, b.id)).collect();
        let id = self.inner.borrow_mut().dot(&ids);
        self.nd(id)
    }

    /// Exact derivative of `f` with respect to input slot `input`, expanded
    /// as graph nodes. Results are memoized, so repeated and higher-order
    /// queries share structure. |z| contributes sign(z) (zero at z = 0); a
    /// later order-2 point query through the kink reports the singularity.
    pub fn diff(&self, f: &Nd, input: usize) -> Nd {
        assert!(self.same_graph(&f.g), "node belongs to a different graph");
        let id = self.inner.borrow_mut().diff(f.id, input as u32);
        self.nd(id)
    }

    /// Freeze the nodes reachable from `outputs` into an immutable,
    /// dead-code-pruned `Expression`. The graph stays usable afterwards.
    pub fn compile(&self, outputs: &[Nd]) -> Result<super::Expression> {
        for o in outputs {
            assert!(self.same_graph(&o.g), "output from a different graph");
        }
        let out_ids: Vec<u32> = outputs.iter().map(|o| o.id).collect();
        let b = self.inner.borrow();
        super::Expression::from_graph(&b, &out_ids)
    }
}

impl Inner {
    fn intern(&mut self, key: ConsKey, op: OpK) -> u32 {
        if let Some(&id) = self.cons.get(&key) {
            return id;
        }
        let id = self.ops.len() as u32;
        self.ops.push(op);
        self.cons.insert(key, id);
        id
    }

    fn constant(&mut self, v: f64) -> u32 {
        self.intern(ConsKey::Const(v.to_bits()), OpK::Const(v))
    }

    fn const_val(&self, id: u32) -> Option<f64> {
        match self.ops[id as usize] {
            OpK::Const(v) => Some(v),
            _ => None,
        }
    }

    fn is_const(&self, id: u32, v: f64) -> bool {
        self.const_val(id) == Some(v)
    }

    pub(crate) fn add(&mut self, a: u32, b: u32) -> u32 {
        if let (Some(x), Some(y)) = (self.const_val(a), self.const_val(b)) {
            return self.constant(x + y);
        }
        if self.is_const(a, 0.0) {
            return b;
        }
        if self.is_const(b, 0.0) {
            return a;
        }
        let (a, b) = (a.min(b), a.max(b));
        self.intern(ConsKey::Add(a, b), OpK::Add(a, b))
    }

    pub(crate) fn sub(&mut self, a: u32, b: u32) -> u32 {
        if a == b {
            return self.constant(0.0);
        }
        if let (Some(x), Some(y)) = (self.const_val(a), self.const_val(b)) {
            return self.constant(x - y);
        }
        if self.is_const(b, 0.0) {
            return a;
        }
        if self.is_const(a, 0.0) {
            return self.neg(b);
        }
        self.intern(ConsKey::Sub(a, b), OpK::Sub(a, b))
    }

    pub(crate) fn mul(&mut self, a: u32, b: u32) -> u32 {
        if let (Some(x), Some(y)) = (self.const_val(a), self.const_val(b)) {
            return self.constant(x * y);
        }
        if self.is_const(a, 0.0) || self.is_const(b, 0.0) {
            return self.constant(0.0);
        }
        if self.is_const(a, 1.0) {
            return b;
        }
        if self.is_const(b, 1.0) {
            return a;
        }
        let (a, b) = (a.min(b), a.max(b));
        self.intern(ConsKey::Mul(a, b), OpK::Mul(a, b))
    }

    pub(crate) fn neg(&mut self, a: u32) -> u32 {
        if let Some(x) = self.const_val(a) {
            return self.constant(-x);
        }
        if let OpK::Neg(inner) = self.ops[a as usize] {
            return inner;
        }
        self.intern(ConsKey::Neg(a), OpK::Neg(a))
    }

    fn unary(&mut self, a: u32, f: impl Fn(f64) -> f64, key: ConsKey, op: OpK) -> u32 {
        if let Some(x) = self.const_val(a) {
            return self.constant(f(x));
        }
        self.intern(key, op)
    }

    pub(crate) fn tanh(&mut self, a: u32) -> u32 {
        self.unary(a, f64::tanh, ConsKey::Tanh(a), OpK::Tanh(a))
    }

    pub(crate) fn sin(&mut self, a: u32) -> u32 {
        self.unary(a, f64::sin, ConsKey::Sin(a), OpK::Sin(a))
    }

    pub(crate) fn cos(&mut self, a: u32) -> u32 {
        self.unary(a, f64::cos, ConsKey::Cos(a), OpK::Cos(a))
    }

    pub(crate) fn exp(&mut self, a: u32) -> u32 {
        self.unary(a, f64::exp, ConsKey::Exp(a), OpK::Exp(a))
    }

    pub(crate) fn powi(&mut self, a: u32, n: i32) -> u32 {
        assert!(n >= 0, "negative integer powers are not supported");
        match n {
            0 => self.constant(1.0),
            1 => a,
            _ => self.unary(a, |x| x.powi(n), ConsKey::Powi(a, n), OpK::Powi(a, n)),
        }
    }

    pub(crate) fn abs(&mut self, a: u32) -> u32 {
        self.unary(a, f64::abs, ConsKey::Abs(a), OpK::Abs(a))
    }

    pub(crate) fn sign(&mut self, a: u32) -> u32 {
        let f = |x: f64| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        self.unary(a, f, ConsKey::Sign(a), OpK::Sign(a))
    }

    pub(crate) fn abs_pow(&mut self, a: u32, p: f64) -> u32 {
        assert!(p >= 1.0 || p == 0.0, "|z|^p requires p >= 1 (or p = 0)");
        if p == 0.0 {
            return self.constant(1.0);
        }
        if p == 1.0 {
            return self.abs(a);
        }
        self.unary(
            a,
            |x| x.abs().powf(p),
            ConsKey::AbsPow(a, p.to_bits()),
            OpK::AbsPow(a, p),
        )
    }

    pub(crate) fn softplus(&mut self, a: u32) -> u32 {
        self.unary(
            a,
            crate::diff::softplus,
            ConsKey::Softplus(a),
            OpK::Softplus(a),
        )
    }

    pub(crate) fn sigmoid(&mut self, a: u32) -> u32 {
        self.unary(
            a,
            crate::diff::sigmoid,
            ConsKey::Sigmoid(a),
            OpK::Sigmoid(a),
        )
    }

    pub(crate) fn dot(&mut self, terms: &[(u32, u32)]) -> u32 {
        // Drop terms with a hard-zero side; they cannot contribute.
        let mut kept: Vec<(u32, u32)> = Vec::with_capacity(terms.len());
        let mut const_acc = 0.0;
        for &(a, b) in terms {
            if self.is_const(a, 0.0) || self.is_const(b, 0.0) {
                continue;
            }
            if let (Some(x), Some(y)) = (self.const_val(a), self.const_val(b)) {
                const_acc += x * y;
                continue;
            }
            kept.push((a, b));
        }
        let body = match kept.len() {
            0 => self.constant(0.0),
            1 => self.mul(kept[0].0, kept[0].1),
            _ => {
                let start = self.pairs.len() as u32;
                self.pairs.extend_from_slice(&kept);
                let id = self.ops.len() as u32;
                self.ops.push(OpK::Dot {
                    start,
                    len: kept.len() as u32,
                });
                id
            }
        };
        if const_acc != 0.0 {
            let c = self.constant(const_acc);
            self.add(body, c)
        } else {
            body
        }
    }

    /// Symbolic derivative of node `id` with respect to input `k`.
    pub(crate) fn diff(&mut self, id: u32, k: u32) -> u32 {
        if let Some(&d) = self.diff_memo.get(&(id, k)) {
            return d;
        }
        let op = self.ops[id as usize];
        let d = match op {
            OpK::Const(_) | OpK::Param(_) | OpK::Sign(_) => self.constant(0.0),
            OpK::Input(i) => self.constant(if i == k { 1.0 } else { 0.0 }),
            OpK::Add(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                self.add(da, db)
            }
            OpK::Sub(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                self.sub(da, db)
            }
            OpK::Mul(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                let t1 = self.mul(da, b);
                let t2 = self.mul(a, db);
                self.add(t1, t2)
            }
            OpK::Neg(a) => {
                let da = self.diff(a, k);
                self.neg(da)
            }
            OpK::Tanh(a) => {
                // d tanh = (1 - tanh^2); reuses this tanh node itself.
                let da = self.diff(a, k);
                let one = self.constant(1.0);
                let t2 = self.mul(id, id);
                let h = self.sub(one, t2);
                self.mul(h, da)
            }
            OpK::Sin(a) => {
                let da = self.diff(a, k);
                let c = self.cos(a);
                self.mul(c, da)
            }
            OpK::Cos(a) => {
                let da = self.diff(a, k);
                let s = self.sin(a);
                let t = self.mul(s, da);
                self.neg(t)
            }
            OpK::Exp(a) => {
                let da = self.diff(a, k);
                self.mul(id, da)
            }
            OpK::Powi(a, n) => {
                let da = self.diff(a, k);
                let c = self.constant(n as f64);
                let p = self.powi(a, n - 1);
                let h = self.mul(c, p);
                self.mul(h, da)
            }
            OpK::Abs(a) => {
                let da = self.diff(a, k);
                let s = self.sign(a);
                self.mul(s, da)
            }
            OpK::AbsPow(a, p) => {
                // d|z|^p = p sign(z) |z|^(p-1).
                let da = self.diff(a, k);
                let c = self.constant(p);
                let s = self.sign(a);
                let q = self.abs_pow(a, p - 1.0);
                let h1 = self.mul(c, s);
                let h = self.mul(h1, q);
                self.mul(h, da)
            }
            OpK::Softplus(a) => {
                let da = self.diff(a, k);
                let s = self.sigmoid(a);
                self.mul(s, da)
            }
            OpK::Sigmoid(a) => {
                let da = self.diff(a, k);
                let one = self.constant(1.0);
                let m = self.sub(one, id);
                let h = self.mul(id, m);
                self.mul(h, da)
            }
            OpK::Dot { start, len } => {
                let span: Vec<(u32, u32)> =
                    self.pairs[start as usize..(start + len) as usize].to_vec();
                let mut terms: Vec<(u32, u32)> = Vec::with_capacity(2 * span.len());
                for (a, b) in span {
                    let da = self.diff(a, k);
                    terms.push((da, b));
                    let db = self.diff(b, k);
                    terms.push((a, db));
                }
                self.dot(&terms)
            }
        };
        self.diff_memo.insert((id, k), d);
        d
    }
}

impl Nd {
    pub fn graph(&self) -> &Graph {
        &self.g
    }

    fn unary(&self, f: impl FnOnce(&mut Inner, u32) -> u32) -> Nd {
        let id = f(&mut self.g.inner.borrow_mut(), self.id);
        self.g.nd(id)
    }

    pub fn tanh(&self) -> Nd {
        self.unary(|b, a| b.tanh(a))
    }

    pub fn sin(&self) -> Nd {
        self.unary(|b, a| b.sin(a))
    }

    pub fn cos(&self) -> Nd {
        self.unary(|b, a| b.cos(a))
    }

    pub fn exp(&self) -> Nd {
        self.unary(|b, a| b.exp(a))
    }

    pub fn powi(&self, n: i32) -> Nd {
        self.unary(|b, a| b.powi(a, n))
    }

    pub fn abs(&self) -> Nd {
        self.unary(|b, a| b.abs(a))
    }

    pub fn sign(&self) -> Nd {
        self.unary(|b, a| b.sign(a))
    }

    pub fn abs_pow(&self, p: f64) -> Nd {
        self.unary(|b, a| b.abs_pow(a, p))
    }

    pub fn softplus(&self) -> Nd {
        self.unary(|b, a| b.softplus(a))
    }

    pub fn sigmoid(&self) -> Nd {
        self.unary(|b, a| b.sigmoid(a))
    }

    pub fn sq(&self) -> Nd {
        self.clone() * self.clone()
    }
}

fn binary(a: &Nd, b: &Nd, f: impl FnOnce(&mut Inner, u32, u32) -> u32) -> Nd {
    assert!(
        a.g.same_graph(&b.g),
        "cannot combine nodes from different graphs"
    );
    let id = f(&mut a.g.inner.borrow_mut(), a.id, b.id);
    Nd { g: a.g.clone(), id }
}

impl std::ops::Add for Nd {
    type Output = Nd;
    fn add(self, rhs: Nd) -> Nd {
        binary(&self, &rhs, |b, x, y| b.add(x, y))
    }
}

impl std::ops::Sub for Nd {
    type Output = Nd;
    fn sub(self, rhs: Nd) -> Nd {
        binary(&self, &rhs, |b, x, y| b.sub(x, y))
    }
}

impl std::ops::Mul for Nd {
    type Output = Nd;
    fn mul(self, rhs: Nd) -> Nd {
        binary(&self, &rhs, |b, x, y| b.mul(x, y))
    }
}

impl std::ops::Neg for Nd {
    type Output = Nd;
    fn neg(self) -> Nd {
        self.unary(|b, a| b.neg(a))
    }
}

impl std::ops::Add<f64> for Nd {
    type Output = Nd;
    fn add(self, rhs: f64) -> Nd {
        let c = self.g.constant(rhs);
        self + c
    }
}

impl std::ops::Sub<f64> for Nd {
    type Output = Nd;
    fn sub(self, rhs: f64) -> Nd {
        let c = self.g.constant(rhs);
        self - c
    }
}

impl std::ops::Mul<f64> for Nd {
    type Output = Nd;
    fn mul(self, rhs: f64) -> Nd {
        let c = self.g.constant(rhs);
        self * c
    }
}

impl std::ops::Add<Nd> for f64 {
    type Output = Nd;
    fn add(self, rhs: Nd) -> Nd {
        rhs + self
    }
}

impl std::ops::Sub<Nd> for f64 {
    type Output = Nd;
    fn sub(self, rhs: Nd) -> Nd {
        let c = rhs.g.constant(self);
        c - rhs
    }
}

impl std::ops::Mul<Nd> for f64 {
    type Output = Nd;
    fn mul(self, rhs: Nd) -> Nd {
        rhs * self
    }
}

/// Validation helper shared by the evaluation entry points.
pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CoreError::ShapeMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_fold_and_intern() {
        let g = Graph::new();
        let a = g.constant(2.0);
        let b = g.constant(3.0);
        let c = a.clone() * b;
        // 2 * 3 folds to the constant 6 with no Mul node.
        let e = g.compile(&[c]).unwrap();
        assert_eq!(e.evaluate(&[], &[]).unwrap(), vec![6.0]);
        let a2 = g.constant(2.0);
        assert_eq!(a.id, a2.id);
    }

    #[test]
    fn identical_subexpressions_share_nodes() {
        let g = Graph::new();
        let x = g.input(0);
        let s1 = x.clone().tanh();
        let s2 = x.clone().tanh();
        assert_eq!(s1.id, s2.id);
        // Commutative normalization: x * tanh(x) == tanh(x) * x.
        let m1 = x.clone() * s1;
        let m2 = s2 * x;
        assert_eq!(m1.id, m2.id);
    }

    #[test]
    fn diff_of_polynomial() {
        // f = x^2 + 3x, df/dx at x = 2 is 2*2 + 3 = 7.
        let g = Graph::new();
        let x = g.input(0);
        let f = x.clone().powi(2) + x.clone() * 3.0;
        let df = g.diff(&f, 0);
        let e = g.compile(&[df]).unwrap();
        assert_eq!(e.evaluate(&[2.0], &[]).unwrap(), vec![7.0]);
    }

    #[test]
    fn second_diff_via_repeated_expansion() {
        // f = sin(x): f'' = -sin(x).
        let g = Graph::new();
        let x = g.input(0);
        let f = x.sin();
        let d1 = g.diff(&f, 0);
        let d2 = g.diff(&d1, 0);
        let e = g.compile(&[d2]).unwrap();
        let v = e.evaluate(&[0.7], &[]).unwrap()[0];
        assert!((v + 0.7f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn diff_with_respect_to_absent_input_is_zero() {
        let g = Graph::new();
        let x = g.input(0);
        let t = g.input(1);
        let f = x.clone() * x;
        let df = g.diff(&f, 1);
        let e = g.compile(&[df]).unwrap();
        assert_eq!(e.evaluate(&[3.0, 9.0], &[]).unwrap(), vec![0.0]);
        let _ = t;
    }

    #[test]
    fn dot_matches_expanded_sum() {
        let g = Graph::new();
        let x = g.input(0);
        let y = g.input(1);
        let p0 = g.param(0);
        let p1 = g.param(1);
        let one = g.constant(1.0);
        let b = g.param(2);
        let d = g.dot(&[
            (p0.clone(), x.clone()),
            (p1.clone(), y.clone()),
            (b.clone(), one),
        ]);
        let manual = p0 * x + p1 * y + b;
        let e = g.compile(&[d, manual]).unwrap();
        let v = e.evaluate(&[2.0, -1.5], &[0.5, 4.0, 0.25]).unwrap();
        assert_eq!(v[0], v[1]);
    }

    #[test]
    fn abs_derivative_uses_sign() {
        let g = Graph::new();
        let x = g.input(0);
        let f = x.abs();
        let df = g.diff(&f, 0);
        let e = g.compile(&[df]).unwrap();
        assert_eq!(e.evaluate(&[-3.0], &[]).unwrap(), vec![-1.0]);
        assert_eq!(e.evaluate(&[2.0], &[]).unwrap(), vec![1.0]);
        // Subgradient convention at the kink.
        assert_eq!(e.evaluate(&[0.0], &[]).unwrap(), vec![0.0]);
    }

    #[test]
    fn abs_pow_derivative_value() {
        // d|z|^2.5 / dz at z = -2 is 2.5 * sign(-2) * 2^1.5.
        let g = Graph::new();
        let z = g.input(0);
        let f = z.abs_pow(2.5);
        let df = g.diff(&f, 0);
        let e = g.compile(&[df]).unwrap();
        let got = e.evaluate(&[-2.0], &[]).unwrap()[0];
        let want = -2.5 * 2.0f64.powf(1.5);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    #[should_panic(expected = "different graphs")]
    fn mixing_graphs_panics() {
        let g1 = Graph::new();
        let g2 = Graph::new();
        let _ = g1.input(0) + g2.input(0);
    }
}
