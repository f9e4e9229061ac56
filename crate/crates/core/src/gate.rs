//! The sixteen two-input boolean functions and their real-valued relaxation.
//!
//! A gate is identified by its truth table read as a 4-bit integer: the output
//! for inputs `(a, b)` is bit `2a + b` of the id. Under this encoding gate 0 is
//! constant false, 15 constant true, 8 is AND, 6 is XOR, 14 is OR, 7 is NAND.
//!
//! The relaxation of gate `i` is the multilinear extension of its truth table,
//! i.e. the probability that the gate outputs 1 when its inputs are independent
//! Bernoulli variables with means `a` and `b`:
//!
//! ```text
//! f_i(a, b) = sum over x, y in {0,1} of truth_i(x, y) * (x ? a : 1-a) * (y ? b : 1-b)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One of the sixteen two-input boolean functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GateId(u8);

impl GateId {
    pub const FALSE: GateId = GateId(0);
    pub const NOR: GateId = GateId(1);
    pub const NOT_A_AND_B: GateId = GateId(2);
    pub const NOT_A: GateId = GateId(3);
    pub const A_AND_NOT_B: GateId = GateId(4);
    pub const NOT_B: GateId = GateId(5);
    pub const XOR: GateId = GateId(6);
    pub const NAND: GateId = GateId(7);
    pub const AND: GateId = GateId(8);
    pub const XNOR: GateId = GateId(9);
    pub const B: GateId = GateId(10);
    pub const NOT_A_OR_B: GateId = GateId(11);
    pub const A: GateId = GateId(12);
    pub const A_OR_NOT_B: GateId = GateId(13);
    pub const OR: GateId = GateId(14);
    pub const TRUE: GateId = GateId(15);

    pub const COUNT: usize = 16;

    pub fn new(id: u8) -> Result<Self> {
        if id < 16 {
            Ok(GateId(id))
        } else {
            Err(Error::domain(format!("gate id {id} is outside [0, 15]")))
        }
    }

    pub fn all() -> impl Iterator<Item = GateId> {
        (0..16u8).map(GateId)
    }

    #[inline]
    pub fn id(self) -> u8 {
        self.0
    }

    /// Boolean evaluation.
    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        (self.0 >> (2 * a as u8 + b as u8)) & 1 == 1
    }

    /// Evaluates 64 independent lanes at once.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        let lane = |bit: u8| 0u64.wrapping_sub(((self.0 >> bit) & 1) as u64);
        (lane(0) & !a & !b) | (lane(1) & !a & b) | (lane(2) & a & !b) | (lane(3) & a & b)
    }

    /// The gate with the complemented truth table.
    pub fn complement(self) -> GateId {
        GateId(15 - self.0)
    }

    /// The gate computing `f(b, a)`.
    pub fn swapped(self) -> GateId {
        let t = self.0;
        // bits: 0 -> (0,0), 1 -> (0,1), 2 -> (1,0), 3 -> (1,1); swapping exchanges bits 1 and 2
        GateId((t & 0b1001) | ((t & 0b0010) << 1) | ((t & 0b0100) >> 1))
    }

    /// The gate computing `f(!a, b)`.
    pub fn with_a_inverted(self) -> GateId {
        let t = self.0;
        GateId(((t & 0b0011) << 2) | ((t >> 2) & 0b0011))
    }

    /// The gate computing `f(a, !b)`.
    pub fn with_b_inverted(self) -> GateId {
        let t = self.0;
        GateId(((t & 0b0101) << 1) | ((t >> 1) & 0b0101))
    }

    pub fn is_constant(self) -> bool {
        self.0 == 0 || self.0 == 15
    }

    /// Whether the output depends on input `a`.
    pub fn depends_on_a(self) -> bool {
        let t = self.0;
        (t & 0b0011) != ((t >> 2) & 0b0011)
    }

    /// Whether the output depends on input `b`.
    pub fn depends_on_b(self) -> bool {
        let t = self.0;
        (t & 0b0101) != ((t >> 1) & 0b0101)
    }

    /// Coefficients `(k0, ka, kb, kab)` of `k0 + ka*a + kb*b + kab*a*b`.
    #[inline]
    pub fn coefficients<T: Scalar>(self) -> [T; 4] {
        let bit = |i: u8| if (self.0 >> i) & 1 == 1 { T::one() } else { T::zero() };
        let (t00, t01, t10, t11) = (bit(0), bit(1), bit(2), bit(3));
        [t00, t10 - t00, t01 - t00, t11 - t10 - t01 + t00]
    }

    /// Relaxed evaluation on `[0, 1]^2`.
    pub fn soft<T: Scalar>(self, a: T, b: T) -> Result<T> {
        check_unit(a, "a")?;
        check_unit(b, "b")?;
        Ok(self.soft_unchecked(a, b))
    }

    #[inline]
    pub fn soft_unchecked<T: Scalar>(self, a: T, b: T) -> T {
        let [k0, ka, kb, kab] = self.coefficients::<T>();
        k0 + ka * a + kb * b + kab * a * b
    }

    /// Partial derivatives `(df/da, df/db)` of the relaxation.
    pub fn soft_grad<T: Scalar>(self, a: T, b: T) -> Result<(T, T)> {
        check_unit(a, "a")?;
        check_unit(b, "b")?;
        let [_, ka, kb, kab] = self.coefficients::<T>();
        Ok((ka + kab * b, kb + kab * a))
    }
}

impl TryFrom<u8> for GateId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        GateId::new(v)
    }
}

impl From<GateId> for u8 {
    fn from(g: GateId) -> u8 {
        g.0
    }
}

impl std::fmt::Display for GateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        const NAMES: [&str; 16] = [
            "false", "nor", "!a&b", "!a", "a&!b", "!b", "xor", "nand", "and", "xnor", "b",
            "!a|b", "a", "a|!b", "or", "true",
        ];
        f.write_str(NAMES[self.0 as usize])
    }
}

fn check_unit<T: Scalar>(v: T, name: &str) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("input {name} = {v} is outside [0, 1]")))
    }
}

/// Boolean truth table lookup with a checked id.
pub fn gate_truth(id: u8, a: bool, b: bool) -> Result<bool> {
    Ok(GateId::new(id)?.eval(a, b))
}

/// Unnormalized logits over the sixteen gates of one neuron.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateWeights<T>(pub [T; 16]);

impl<T: Scalar> GateWeights<T> {
    pub fn uniform() -> Self {
        GateWeights([T::zero(); 16])
    }

    /// Logits with `+big` on gate `g` and zero elsewhere.
    pub fn one_hot(g: GateId, big: T) -> Self {
        let mut w = [T::zero(); 16];
        w[g.id() as usize] = big;
        GateWeights(w)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Max-subtracted softmax.
    pub fn softmax(&self) -> [T; 16] {
        let max = self.0.iter().copied().fold(T::neg_infinity(), T::max);
        let mut p = [T::zero(); 16];
        let mut total = T::zero();
        for (pi, &w) in p.iter_mut().zip(self.0.iter()) {
            *pi = (w - max).exp();
            total += *pi;
        }
        for pi in p.iter_mut() {
            *pi = *pi / total;
        }
        p
    }

    /// Gate with the largest logit, ties resolved to the lowest id.
    pub fn argmax(&self) -> GateId {
        let mut best = 0usize;
        for (i, &w) in self.0.iter().enumerate().skip(1) {
            if w > self.0[best] {
                best = i;
            }
        }
        GateId(best as u8)
    }

    /// Expected output of the gate mixture.
    pub fn mixture_forward(&self, a: T, b: T) -> Result<T> {
        if !self.is_finite() {
            return Err(Error::domain("gate weights contain non-finite values"));
        }
        check_unit(a, "a")?;
        check_unit(b, "b")?;
        let [k0, ka, kb, kab] = MixtureCoefficients::from_probabilities(&self.softmax()).0;
        Ok(k0 + ka * a + kb * b + kab * a * b)
    }
}

/// A gate mixture collapsed to `k0 + ka*a + kb*b + kab*a*b`.
///
/// Every convex combination of multilinear gates is again multilinear, so a
/// neuron costs four multiply-adds per sample regardless of the mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureCoefficients<T>(pub [T; 4]);

impl<T: Scalar> MixtureCoefficients<T> {
    pub fn from_probabilities(p: &[T; 16]) -> Self {
        // corner values c_xy = sum_j p_j * truth_j(x, y)
        let mut c = [T::zero(); 4];
        for (j, &pj) in p.iter().enumerate() {
            for (bit, cb) in c.iter_mut().enumerate() {
                if (j >> bit) & 1 == 1 {
                    *cb += pj;
                }
            }
        }
        let (c00, c01, c10, c11) = (c[0], c[1], c[2], c[3]);
        MixtureCoefficients([c00, c10 - c00, c01 - c00, c11 - c10 - c01 + c00])
    }

    #[inline]
    pub fn eval(&self, a: T, b: T) -> T {
        let [k0, ka, kb, kab] = self.0;
        k0 + ka * a + kb * b + kab * a * b
    }

    /// Maps gradients w.r.t. `(k0, ka, kb, kab)` to gradients w.r.t. the
    /// sixteen gate probabilities.
    #[inline]
    pub fn probability_grad(g: [T; 4]) -> [T; 16] {
        let [g0, ga, gb, gab] = g;
        // d k / d c_xy, then d c_xy / d p_j = truth_j(x, y)
        let gc = [
            g0 - ga - gb + gab, // c00
            gb - gab,           // c01
            ga - gab,           // c10
            gab,                // c11
        ];
        let mut out = [T::zero(); 16];
        for (j, o) in out.iter_mut().enumerate() {
            for (bit, &gcb) in gc.iter().enumerate() {
                if (j >> bit) & 1 == 1 {
                    *o += gcb;
                }
            }
        }
        out
    }
}

/// Backpropagates through the softmax: `dL/dw_j = p_j (g_j - sum_k p_k g_k)`.
pub fn softmax_backward<T: Scalar>(p: &[T; 16], g: &[T; 16]) -> [T; 16] {
    let dot: T = p.iter().zip(g.iter()).map(|(&a, &b)| a * b).sum();
    let mut out = [T::zero(); 16];
    for j in 0..16 {
        out[j] = p[j] * (g[j] - dot);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_gates_follow_the_encoding() {
        assert!(GateId::AND.eval(true, true));
        assert!(!GateId::AND.eval(false, true));
        assert!(GateId::XOR.eval(true, false));
        assert!(!GateId::XOR.eval(true, true));
        assert!(GateId::NAND.eval(false, false) && !GateId::NAND.eval(true, true));
        assert!(GateId::OR.eval(false, true) && !GateId::OR.eval(false, false));
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            assert!(!GateId::FALSE.eval(a, b));
            assert!(GateId::TRUE.eval(a, b));
            assert_eq!(GateId::A.eval(a, b), a);
            assert_eq!(GateId::B.eval(a, b), b);
        }
    }

    #[test]
    fn truth_rejects_out_of_range_ids() {
        assert_eq!(gate_truth(8, true, true).unwrap(), true);
        assert_eq!(gate_truth(8, false, true).unwrap(), false);
        assert!(matches!(gate_truth(16, true, true), Err(Error::Domain(_))));
    }

    #[test]
    fn soft_values() {
        assert_eq!(GateId::AND.soft(0.5f64, 0.5).unwrap(), 0.25);
        assert_eq!(GateId::XOR.soft(0.5f64, 0.5).unwrap(), 0.5);
        assert!(GateId::AND.soft(1.5f64, 0.5).is_err());
        assert!(GateId::AND.soft(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn soft_grad_of_and_and_constant() {
        assert_eq!(GateId::AND.soft_grad(0.3f64, 0.7).unwrap(), (0.7, 0.3));
        assert_eq!(GateId::FALSE.soft_grad(0.3f64, 0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn word_eval_matches_scalar_eval() {
        let a = 0b1100u64;
        let b = 0b1010u64;
        for g in GateId::all() {
            let w = g.eval_word(a, b);
            for lane in 0..4 {
                let expect = g.eval((a >> lane) & 1 == 1, (b >> lane) & 1 == 1);
                assert_eq!((w >> lane) & 1 == 1, expect, "gate {g}");
            }
        }
    }

    #[test]
    fn swap_and_dependency() {
        assert_eq!(GateId::A.swapped(), GateId::B);
        assert_eq!(GateId::A_AND_NOT_B.swapped(), GateId::NOT_A_AND_B);
        assert!(GateId::A.depends_on_a() && !GateId::A.depends_on_b());
        assert!(!GateId::NOT_B.depends_on_a() && GateId::NOT_B.depends_on_b());
        assert!(GateId::XOR.depends_on_a() && GateId::XOR.depends_on_b());
        assert!(!GateId::TRUE.depends_on_a() && !GateId::TRUE.depends_on_b());
    }

    #[test]
    fn mixture_degenerate_cases() {
        let w = GateWeights::<f64>::one_hot(GateId::XOR, 1e6);
        assert!((w.mixture_forward(0.3, 0.9).unwrap() - GateId::XOR.soft(0.3, 0.9).unwrap()).abs() < 1e-12);
        let w = GateWeights::<f64>::uniform();
        assert!((w.mixture_forward(0.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        let w = GateWeights::<f64>::one_hot(GateId::TRUE, 1e6);
        assert!((w.mixture_forward(0.2, 0.4).unwrap() - 1.0).abs() < 1e-12);
        let mut w = GateWeights::<f64>::uniform();
        w.0[3] = f64::INFINITY;
        assert!(w.mixture_forward(0.2, 0.4).is_err());
    }

    #[test]
    fn softmax_normalizes_and_argmax_breaks_ties_low() {
        let w = GateWeights([3.0f64, -1.0, 800.0, 799.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s: f64 = w.softmax().iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(w.argmax(), GateId::NOT_A_AND_B);
        assert_eq!(GateWeights::<f32>::uniform().argmax(), GateId::FALSE);
    }
}
