//! The Gaussian policy: a tanh MLP with an identity output head.
//!
//! The network emits the mean of a diagonal Gaussian over candidate solution
//! values; actions are taken deterministically at the mean. The standard
//! deviation only enters the training loss through the likelihood weight
//! `w = prod_k 1 / (sqrt(2 pi) sigma_k)`, which is applied as a detached
//! multiplier. It is either fixed or a trainable softplus-mapped vector.

use std::cell::OnceCell;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{softplus, Expression, Graph, Nd};
use crate::error::{CoreError, Result};

const CKPT_MAGIC: [u8; 4] = *b"RSPN";
const CKPT_VERSION: u32 = 1;

/// How the Gaussian standard deviation is represented.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaMode {
    /// One shared constant sigma for every output.
    Fixed(f64),
    /// Per-output sigma_k = softplus(s_k) + floor, with s_k trainable and
    /// appended to the parameter vector.
    Trainable { init: f64, floor: f64 },
}

/// Multilayer perceptron policy with tanh hidden activations.
pub struct MlpPolicy {
    input_dim: usize,
    hidden: Vec<usize>,
    output_dim: usize,
    sigma_mode: SigmaMode,
    /// Optional per-input affine map `(offset, scale)` applied before the
    /// first layer, used to normalize narrow physical domains to O(1).
    input_map: Option<Vec<(f64, f64)>>,
    params: Vec<f64>,
    forward_expr: OnceCell<Expression>,
}

impl Clone for MlpPolicy {
    fn clone(&self) -> Self {
        MlpPolicy {
            input_dim: self.input_dim,
            hidden: self.hidden.clone(),
            output_dim: self.output_dim,
            sigma_mode: self.sigma_mode,
            input_map: self.input_map.clone(),
            params: self.params.clone(),
            forward_expr: OnceCell::new(),
        }
    }
}

/// Weights + biases for the affine layers, plus the sigma head if trainable.
pub fn param_count(
    input_dim: usize,
    hidden: &[usize],
    output_dim: usize,
    sigma_mode: SigmaMode,
) -> usize {
    let mut n = 0;
    let mut prev = input_dim;
    for &h in hidden.iter().chain(std::iter::once(&output_dim)) {
        n += prev * h + h;
        prev = h;
    }
    if let SigmaMode::Trainable { .. } = sigma_mode {
        n += output_dim;
    }
    n
}

impl MlpPolicy {
    /// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero
    /// biases, drawn from a counter-based generator so initialization is
    /// reproducible across platforms for a given seed.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        sigma_mode: SigmaMode,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(CoreError::InvalidConfig(
                "network dimensions must be positive".into(),
            ));
        }
        match sigma_mode {
            SigmaMode::Fixed(s) if s <= 0.0 => return Err(CoreError::NonPositiveSigma(s)),
            SigmaMode::Trainable { init, floor } if init <= floor || floor <= 0.0 => {
                return Err(CoreError::NonPositiveSigma(init - floor));
            }
            _ => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(input_dim, hidden, output_dim, sigma_mode));
        let mut prev = input_dim;
        for &h in hidden.iter().chain(std::iter::once(&output_dim)) {
            let limit = (6.0 / (prev + h) as f64).sqrt();
            for _ in 0..prev * h {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(h));
            prev = h;
        }
        if let SigmaMode::Trainable { init, floor } = sigma_mode {
            // Inverse softplus of (init - floor).
            let s0 = (init - floor).exp_m1().ln();
            params.extend(std::iter::repeat(s0).take(output_dim));
        }
        Ok(MlpPolicy {
            input_dim,
            hidden: hidden.to_vec(),
            output_dim,
            sigma_mode,
            input_map: None,
            params,
            forward_expr: OnceCell::new(),
        })
    }

    /// Install a per-input affine normalization `(x - offset) * scale`.
    pub fn with_input_map(mut self, map: Vec<(f64, f64)>) -> Result<Self> {
        if map.len() != self.input_dim {
            return Err(CoreError::ShapeMismatch {
                context: "input map",
                expected: self.input_dim,
                got: map.len(),
            });
        }
        self.input_map = Some(map);
        self.forward_expr = OnceCell::new();
        Ok(self)
    }

    /// Affine map that sends `[lo, hi]` per input dimension onto `[-1, 1]`.
    pub fn with_input_ranges(self, ranges: &[(f64, f64)]) -> Result<Self> {
        let map = ranges
            .iter()
            .map(|&(lo, hi)| (0.5 * (lo + hi), 2.0 / (hi - lo)))
            .collect();
        self.with_input_map(map)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn sigma_mode(&self) -> SigmaMode {
        self.sigma_mode
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(CoreError::ShapeMismatch {
                context: "parameter vector",
                expected: self.params.len(),
                got: p.len(),
            });
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    /// Append this network's computation to `g`, reading its parameters from
    /// slots `param_base..`. Returns the mean outputs. The parameter layout
    /// matches `self.params`, so the same vector drives every emitted copy.
    pub fn emit(&self, g: &Graph, inputs: &[Nd], param_base: usize) -> Vec<Nd> {
        assert_eq!(inputs.len(), self.input_dim, "wrong policy input arity");
        let one = g.constant(1.0);
        let mut acts: Vec<Nd> = match &self.input_map {
            Some(map) => inputs
                .iter()
                .zip(map)
                .map(|(x, &(off, sc))| (x.clone() - off) * sc)
                .collect(),
            None => inputs.to_vec(),
        };
        let mut base = param_base;
        let n_layers = self.hidden.len() + 1;
        let mut prev = self.input_dim;
        for (l, &h) in self
            .hidden
            .iter()
            .chain(std::iter::once(&self.output_dim))
            .enumerate()
        {
            let w_base = base;
            let b_base = base + prev * h;
            let mut next = Vec::with_capacity(h);
            for o in 0..h {
                let mut terms: Vec<(Nd, Nd)> = Vec::with_capacity(prev + 1);
                for (i, a) in acts.iter().enumerate() {
                    terms.push((g.param(w_base + o * prev + i), a.clone()));
                }
                terms.push((g.param(b_base + o), one.clone()));
                let z = g.dot(&terms);
                next.push(if l + 1 < n_layers { z.tanh() } else { z });
            }
            acts = next;
            base = b_base + h;
            prev = h;
        }
        acts
    }

    fn forward_expr(&self) -> &Expression {
        self.forward_expr.get_or_init(|| {
            let g = Graph::new();
            let inputs: Vec<Nd> = (0..self.input_dim).map(|i| g.input(i)).collect();
            let mu = self.emit(&g, &inputs, 0);
            // Anchor the full parameter count even if pruning drops nothing.
            let _ = g.param(self.params.len() - 1);
            g.compile(&mu).expect("policy forward graph")
        })
    }

    /// Mean and standard deviation of the Gaussian at `input`.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mu = self.forward_expr().evaluate(input, &self.params)?;
        Ok((mu, self.sigmas()))
    }

    /// Deterministic action: the Gaussian mean.
    pub fn act(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Current standard deviations (state-independent).
    pub fn sigmas(&self) -> Vec<f64> {
        match self.sigma_mode {
            SigmaMode::Fixed(s) => vec![s; self.output_dim],
            SigmaMode::Trainable { floor, .. } => {
                let base = self.params.len() - self.output_dim;
                self.params[base..]
                    .iter()
                    .map(|&s| softplus(s) + floor)
                    .collect()
            }
        }
    }

    /// Likelihood weight of the mean action,
    /// `w = prod_k 1 / (sqrt(2 pi) sigma_k)`. Applied to the reward as a
    /// detached constant; it never contributes a gradient path of its own.
    pub fn likelihood_weight(&self) -> Result<f64> {
        let mut w = 1.0;
        for s in self.sigmas() {
            if s <= 0.0 {
                return Err(CoreError::NonPositiveSigma(s));
            }
            w /= (2.0 * std::f64::consts::PI).sqrt() * s;
        }
        Ok(w)
    }

    /// Serialize architecture + parameters. Parameters are written verbatim
    /// as little-endian doubles, so a round trip is bit-exact.
    pub fn save_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&CKPT_MAGIC)?;
        w.write_all(&CKPT_VERSION.to_le_bytes())?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        w.write_all(&(self.output_dim as u32).to_le_bytes())?;
        w.write_all(&(self.hidden.len() as u32).to_le_bytes())?;
        for &h in &self.hidden {
            w.write_all(&(h as u32).to_le_bytes())?;
        }
        match self.sigma_mode {
            SigmaMode::Fixed(s) => {
                w.write_all(&[0u8])?;
                w.write_all(&s.to_le_bytes())?;
                w.write_all(&0f64.to_le_bytes())?;
            }
            SigmaMode::Trainable { init, floor } => {
                w.write_all(&[1u8])?;
                w.write_all(&init.to_le_bytes())?;
                w.write_all(&floor.to_le_bytes())?;
            }
        }
        match &self.input_map {
            None => w.write_all(&[0u8])?,
            Some(map) => {
                w.write_all(&[1u8])?;
                for &(off, sc) in map {
                    w.write_all(&off.to_le_bytes())?;
                    w.write_all(&sc.to_le_bytes())?;
                }
            }
        }
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for &p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        fn bad(msg: &str) -> CoreError {
            CoreError::Checkpoint(msg.to_string())
        }
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| bad("file too short for header"))?;
        if magic != CKPT_MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let version = read_u32(&mut r)?;
        if version != CKPT_VERSION {
            return Err(CoreError::Checkpoint(format!(
                "unsupported version {version}"
            )));
        }
        let input_dim = read_u32(&mut r)? as usize;
        let output_dim = read_u32(&mut r)? as usize;
        let n_hidden = read_u32(&mut r)? as usize;
        if n_hidden > 64 {
            return Err(bad("implausible hidden layer count"));
        }
        let mut hidden = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden.push(read_u32(&mut r)? as usize);
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| bad("truncated"))?;
        let (a, b) = (read_f64(&mut r)?, read_f64(&mut r)?);
        let sigma_mode = match tag[0] {
            0 => SigmaMode::Fixed(a),
            1 => SigmaMode::Trainable { init: a, floor: b },
            _ => return Err(bad("unknown sigma mode tag")),
        };
        r.read_exact(&mut tag).map_err(|_| bad("truncated"))?;
        let input_map = match tag[0] {
            0 => None,
            1 => {
                let mut map = Vec::with_capacity(input_dim);
                for _ in 0..input_dim {
                    map.push((read_f64(&mut r)?, read_f64(&mut r)?));
                }
                Some(map)
            }
            _ => return Err(bad("unknown input map tag")),
        };
        let mut nbytes = [0u8; 8];
        r.read_exact(&mut nbytes).map_err(|_| bad("truncated"))?;
        let n = u64::from_le_bytes(nbytes) as usize;
        let expected = param_count(input_dim, &hidden, output_dim, sigma_mode);
        if n != expected {
            return Err(CoreError::Checkpoint(format!(
                "parameter count {n} does not match architecture ({expected})"
            )));
        }
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            params.push(read_f64(&mut r)?);
        }
        Ok(MlpPolicy {
            input_dim,
            hidden,
            output_dim,
            sigma_mode,
            input_map,
            params,
            forward_expr: OnceCell::new(),
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| CoreError::Checkpoint("truncated".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| CoreError::Checkpoint("truncated".into()))?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_closed_form() {
        // 1 -> [32, 32, 32] -> 2: (32+32) + 2*(1024+32) + (64+2) = 2242.
        assert_eq!(
            param_count(1, &[32, 32, 32], 2, SigmaMode::Fixed(0.1)),
            2242
        );
        // Wide 7-hidden-layer stack used for field problems.
        assert_eq!(
            param_count(2, &[32, 64, 64, 64, 64, 64, 32], 2, SigmaMode::Fixed(0.1)),
            20994
        );
        // Trainable sigma appends one slot per output.
        assert_eq!(
            param_count(
                1,
                &[4],
                3,
                SigmaMode::Trainable {
                    init: 0.1,
                    floor: 1e-3
                }
            ),
            param_count(1, &[4], 3, SigmaMode::Fixed(0.1)) + 3
        );
    }

    #[test]
    fn init_is_seed_deterministic_with_zero_biases() {
        let a = MlpPolicy::init(2, &[8, 8], 2, SigmaMode::Fixed(0.1), 42).unwrap();
        let b = MlpPolicy::init(2, &[8, 8], 2, SigmaMode::Fixed(0.1), 42).unwrap();
        assert_eq!(a.params(), b.params());
        let c = MlpPolicy::init(2, &[8, 8], 2, SigmaMode::Fixed(0.1), 43).unwrap();
        assert_ne!(a.params(), c.params());
        // First-layer biases sit right after the 2*8 weights.
        assert!(a.params()[16..24].iter().all(|&x| x == 0.0));
        // Glorot limit for the first layer.
        let lim = (6.0f64 / 10.0).sqrt();
        assert!(a.params()[..16].iter().all(|&w| w.abs() < lim));
    }

    #[test]
    fn forward_matches_hand_computation() {
        // 1 input, one hidden neuron, 1 output: mu = w2 * tanh(w1 x + b1) + b2.
        let mut p = MlpPolicy::init(1, &[1], 1, SigmaMode::Fixed(0.1), 0).unwrap();
        p.set_params(&[0.5, 0.25, -2.0, 0.125]).unwrap();
        let (mu, sigma) = p.forward(&[0.8]).unwrap();
        let want = -2.0 * (0.5f64 * 0.8 + 0.25).tanh() + 0.125;
        assert!((mu[0] - want).abs() < 1e-15);
        assert_eq!(sigma, vec![0.1]);
        assert_eq!(p.act(&[0.8]).unwrap(), mu);
    }

    #[test]
    fn input_map_matches_manual_transform() {
        let base = MlpPolicy::init(1, &[6], 1, SigmaMode::Fixed(0.1), 9).unwrap();
        let mapped = base.clone().with_input_ranges(&[(-0.005, 0.005)]).unwrap();
        let y = 0.0037;
        let got = mapped.act(&[y]).unwrap()[0];
        let want = base.act(&[(y - 0.0) * (2.0 / 0.01)]).unwrap()[0];
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn likelihood_weight_of_fixed_sigma() {
        // Two outputs at sigma = 0.1: w = (2 pi * 0.01)^-1.
        let p = MlpPolicy::init(1, &[4], 2, SigmaMode::Fixed(0.1), 1).unwrap();
        let w = p.likelihood_weight().unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 0.01);
        assert!((w - want).abs() < 1e-12);
    }

    #[test]
    fn trainable_sigma_starts_at_init() {
        let p = MlpPolicy::init(
            1,
            &[4],
            2,
            SigmaMode::Trainable {
                init: 0.1,
                floor: 1e-3,
            },
            1,
        )
        .unwrap();
        for s in p.sigmas() {
            assert!((s - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_sigma() {
        assert!(MlpPolicy::init(1, &[4], 1, SigmaMode::Fixed(0.0), 1).is_err());
        assert!(MlpPolicy::init(1, &[4], 1, SigmaMode::Fixed(-0.1), 1).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let p = MlpPolicy::init(2, &[8, 8], 3, SigmaMode::Fixed(0.1), 77)
            .unwrap()
            .with_input_ranges(&[(-1.0, 1.0), (0.0, 2.0)])
            .unwrap();
        let mut buf = Vec::new();
        p.save_checkpoint(&mut buf).unwrap();
        let q = MlpPolicy::load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(p.params().len(), q.params().len());
        for (a, b) in p.params().iter().zip(q.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(p.hidden(), q.hidden());
        assert_eq!(p.sigma_mode(), q.sigma_mode());
        let x = [0.3, 1.4];
        assert_eq!(p.act(&x).unwrap(), q.act(&x).unwrap());
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let p = MlpPolicy::init(1, &[4], 1, SigmaMode::Fixed(0.1), 5).unwrap();
        let mut buf = Vec::new();
        p.save_checkpoint(&mut buf).unwrap();
        // Truncated payload.
        assert!(MlpPolicy::load_checkpoint(&buf[..buf.len() - 3]).is_err());
        // Wrong magic.
        let mut bad = buf.clone();
        bad[0] ^= 0xFF;
        assert!(MlpPolicy::load_checkpoint(bad.as_slice()).is_err());
        // Unsupported version.
        let mut badv = buf.clone();
        badv[4] = 99;
        assert!(MlpPolicy::load_checkpoint(badv.as_slice()).is_err());
    }

    #[test]
    fn emit_agrees_with_forward() {
        use crate::diff::Graph;
        let p = MlpPolicy::init(2, &[5, 4], 3, SigmaMode::Fixed(0.1), 11).unwrap();
        let g = Graph::new();
        let inputs = vec![g.input(0), g.input(1)];
        let mu = p.emit(&g, &inputs, 0);
        let e = g.compile(&mu).unwrap();
        let x = [0.4, -1.2];
        let via_graph = e.evaluate(&x, p.params()).unwrap();
        let direct = p.act(&x).unwrap();
        for (a, b) in via_graph.iter().zip(&direct) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
