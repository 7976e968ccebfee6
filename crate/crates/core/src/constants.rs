//! Evaluators for the explicit constant chains: level thresholds, isoperimetric
//! constants, filling parameters, doubling after filling and Ahlfors constants.
//!
//! Rational formulas are exact. Powers with non-integer exponents are carried
//! as rational brackets around the floating-point value.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{pow_q, qi, to_f64, Q};

/// A constant, exact when possible, otherwise bracketed by `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstValue {
    #[serde(with = "crate::rational::qser")]
    pub lo: Q,
    #[serde(with = "crate::rational::qser")]
    pub hi: Q,
    pub approx: f64,
    pub exact: bool,
}

impl ConstValue {
    pub fn exact(v: Q) -> Self {
        ConstValue {
            approx: to_f64(&v),
            lo: v.clone(),
            hi: v,
            exact: true,
        }
    }

    /// Rational bracket of a positive floating value, widened by `rel`.
    fn bracket(v: f64, rel: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Domain(format!("value {v} is not a positive finite number")));
        }
        let lo = Q::from_float(v * (1.0 - rel)).ok_or_else(|| Error::Domain("bad float".into()))?;
        let hi = Q::from_float(v * (1.0 + rel)).ok_or_else(|| Error::Domain("bad float".into()))?;
        Ok(ConstValue {
            lo,
            hi,
            approx: v,
            exact: false,
        })
    }

    pub fn value(&self) -> Option<&Q> {
        self.exact.then_some(&self.lo)
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }
}

/// One named constant with the formula that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub symbol: String,
    pub anchor: String,
    pub value: ConstValue,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantBundle {
    pub constants: Vec<Constant>,
}

impl ConstantBundle {
    fn push(&mut self, symbol: &str, anchor: &str, value: ConstValue) {
        self.constants.push(Constant {
            symbol: symbol.into(),
            anchor: anchor.into(),
            value,
        });
    }

    pub fn get(&self, symbol: &str) -> Option<&ConstValue> {
        self.constants.iter().find(|c| c.symbol == symbol).map(|c| &c.value)
    }
}

const REL: f64 = 1e-12;

fn positive(name: &str, v: &Q) -> Result<()> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// `base^exp` for positive rational `base` and rational `exp`: exact when
/// `exp` is an integer, bracketed otherwise.
pub fn pow_rational(base: &Q, exp: &Q) -> Result<ConstValue> {
    positive("base", base)?;
    if exp.is_integer() {
        let e = exp.to_integer();
        let mag: u32 = e
            .abs()
            .try_into()
            .map_err(|_| Error::Resource(format!("exponent {e} too large")))?;
        let v = pow_q(base, mag);
        return Ok(ConstValue::exact(if e.is_negative() { v.recip() } else { v }));
    }
    if base.is_one() {
        return Ok(ConstValue::exact(Q::one()));
    }
    ConstValue::bracket(to_f64(base).powf(to_f64(exp)), REL)
}

/// `tau_0 = min{1, (delta / (2 Delta))^{pq/(q-p)}}`.
pub fn tau_threshold(p: &Q, q: &Q, delta: &Q, big_delta: &Q) -> Result<ConstValue> {
    if p < &Q::one() {
        return Err(Error::Domain(format!("p must be >= 1, got {p}")));
    }
    if q <= p {
        return Err(Error::Domain(format!("q = {q} must exceed p = {p}")));
    }
    positive("delta", delta)?;
    positive("Delta", big_delta)?;
    let base = delta / (qi(2) * big_delta);
    if base >= Q::one() {
        return Ok(ConstValue::exact(Q::one()));
    }
    pow_rational(&base, &(p * q / (q - p)))
}

/// `(C_S, Lambda) = (2 D^{4 + 2 log2 Lambda_B} C_B, 2 Lambda_B)`.
pub fn isoperimetric_constants(d: &Q, c_b: &Q, lambda_b: &Q) -> Result<(ConstValue, Q)> {
    if d < &qi(2) {
        return Err(Error::Domain(format!("doubling constant must be >= 2, got {d}")));
    }
    if lambda_b < &Q::one() {
        return Err(Error::Domain(format!("Lambda_B must be >= 1, got {lambda_b}")));
    }
    positive("C_B", c_b)?;
    let lambda = qi(2) * lambda_b;
    // D^{2 log2 Lambda_B} is exact when Lambda_B is a power of two.
    let log2 = exact_log2(lambda_b);
    let c_s = match log2 {
        Some(j) => ConstValue::exact(qi(2) * pow_q(d, (4 + 2 * j) as u32) * c_b),
        None => {
            let e = 4.0 + 2.0 * to_f64(lambda_b).log2();
            let v = 2.0 * to_f64(d).powf(e) * to_f64(c_b);
            ConstValue::bracket(v, REL)?
        }
    };
    Ok((c_s, lambda))
}

fn exact_log2(v: &Q) -> Option<i64> {
    if !v.is_integer() {
        return None;
    }
    let n = v.to_integer();
    let bits = n.bits();
    (n == BigInt::one() << (bits - 1)).then(|| bits as i64 - 1)
}

/// `D' = D / (1 - eps)`.
pub fn doubling_after_filling(d: &Q, eps: &Q) -> Result<Q> {
    if eps.is_negative() || eps >= &Q::one() {
        return Err(Error::Domain(format!("eps must lie in [0, 1), got {eps}")));
    }
    positive("D", d)?;
    Ok(d / (Q::one() - eps))
}

/// `(4A)^Q C_AR`.
pub fn uniform_ahlfors_constant(a: &Q, big_q: &Q, c_ar: &Q) -> Result<ConstValue> {
    if a < &Q::one() {
        return Err(Error::Domain(format!("A must be >= 1, got {a}")));
    }
    positive("Q", big_q)?;
    positive("C_AR", c_ar)?;
    let p = pow_rational(&(qi(4) * a), big_q)?;
    Ok(if p.exact {
        ConstValue::exact(&p.lo * c_ar)
    } else {
        ConstValue {
            lo: &p.lo * c_ar,
            hi: &p.hi * c_ar,
            approx: p.approx * to_f64(c_ar),
            exact: false,
        }
    })
}

/// Smallest `m` with `C_0 + 1 < 2^m`; when `C_0 + 1` is a power of two this is
/// the larger of the two candidates, keeping the right inequality strict.
pub fn choose_m(c0: &Q) -> u32 {
    let target = c0 + Q::one();
    let mut m = 0u32;
    while Q::from_integer(BigInt::one() << m) <= target {
        m += 1;
    }
    m
}

/// Inputs of [`filling_parameters`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillingInputs {
    #[serde(with = "crate::rational::qser")]
    pub p: Q,
    #[serde(with = "crate::rational::qser")]
    pub q: Q,
    /// Doubling constant `D`.
    #[serde(with = "crate::rational::qser")]
    pub d: Q,
    #[serde(with = "crate::rational::qser")]
    pub c0: Q,
    #[serde(with = "crate::rational::qser")]
    pub lambda: Q,
    #[serde(with = "crate::rational::qser")]
    pub delta: Q,
    #[serde(with = "crate::rational::qser")]
    pub eps0: Q,
    /// `Delta` of the level threshold.
    #[serde(with = "crate::rational::qser")]
    pub big_delta: Q,
}

pub const ANCHOR_DELTA1: &str = "Lambda (6 (2D)^{4/q} + 2) delta' < delta";
pub const ANCHOR_DELTA2: &str = "(2 Lambda + 2 C_0 + 4 Lambda (2D)^{4/q}) delta' <= C_0";
pub const ANCHOR_TAU0: &str = "tau_0 = min{1, (delta'/(2 Delta))^{pq/(q-p)}}";
pub const ANCHOR_TAU: &str = "(2D)^4 tau <= tau_0 / 2";
pub const ANCHOR_M: &str = "2^{m-1} < C_0 + 1 < 2^m";
pub const ANCHOR_N: &str = "(1/2) delta' tau^{1/p} <= 2^{-n} < delta' tau^{1/p}";
pub const ANCHOR_EPS1: &str = "eps_1 = min{(1/4) D^{-(5+n+m)} tau, eps_0}";

/// The dependency chain `delta', tau_0, tau, m, n, eps_1`, each value with the
/// inequality or formula that defines it. `delta'` sits at half the binding
/// bound; `tau` at half the largest admissible value.
pub fn filling_parameters(inp: &FillingInputs) -> Result<ConstantBundle> {
    if inp.q <= inp.p {
        return Err(Error::Domain(format!("q = {} must exceed p = {}", inp.q, inp.p)));
    }
    if inp.p < Q::one() {
        return Err(Error::Domain(format!("p must be >= 1, got {}", inp.p)));
    }
    for (name, v) in [
        ("D", &inp.d),
        ("Lambda", &inp.lambda),
        ("delta", &inp.delta),
        ("eps_0", &inp.eps0),
        ("Delta", &inp.big_delta),
    ] {
        positive(name, v)?;
    }
    if inp.c0 < Q::one() {
        return Err(Error::Domain(format!("C_0 must be >= 1, got {}", inp.c0)));
    }
    let two = qi(2);
    let half = Q::new(1.into(), 2.into());
    // Rational upper bound on (2D)^{4/q}.
    let k = pow_rational(&(&two * &inp.d), &(qi(4) / &inp.q))?.hi;
    let bound1 = &inp.delta / (&inp.lambda * (qi(6) * &k + &two));
    let bound2 = &inp.c0 / (&two * &inp.lambda + &two * &inp.c0 + qi(4) * &inp.lambda * &k);
    let delta_p = &half * bound1.min(bound2);
    let tau0 = tau_threshold(&inp.p, &inp.q, &delta_p, &inp.big_delta)?;
    let tau = &tau0.lo / (&two * pow_q(&(&two * &inp.d), 4));
    let m = choose_m(&inp.c0);
    // x = delta' tau^{1/p}; n is the least integer with 2^{-n} < x.
    let root = pow_rational(&tau, &inp.p.recip())?;
    let x_lo = &delta_p * &root.lo;
    let mut n = 0u32;
    while Q::new(BigInt::one(), BigInt::one() << n) >= x_lo {
        n += 1;
    }
    let eps_a = Q::new(1.into(), 4.into()) * pow_q(&inp.d, 5 + n + m).recip() * &tau;
    let eps1 = eps_a.min(inp.eps0.clone());
    let mut b = ConstantBundle::default();
    b.push("delta'", &format!("{ANCHOR_DELTA1}; {ANCHOR_DELTA2}"), ConstValue::exact(delta_p));
    b.push("tau_0", ANCHOR_TAU0, tau0);
    b.push("tau", ANCHOR_TAU, ConstValue::exact(tau));
    b.push("m", ANCHOR_M, ConstValue::exact(Q::from_integer(m.into())));
    b.push("n", ANCHOR_N, ConstValue::exact(Q::from_integer(n.into())));
    b.push("eps_1", ANCHOR_EPS1, ConstValue::exact(eps1));
    Ok(b)
}

/// One substituted inequality of [`verify_filling`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub anchor: String,
    pub holds: bool,
}

/// Substitutes every emitted value back into its defining relation, using
/// the unfavorable end of each bracket.
pub fn verify_filling(inp: &FillingInputs, b: &ConstantBundle) -> Result<Vec<RoundTrip>> {
    let get = |s: &str| b.get(s).ok_or_else(|| Error::Argument(format!("bundle lacks {s}")));
    let dp = get("delta'")?.lo.clone();
    let tau0 = get("tau_0")?;
    let tau = get("tau")?.lo.clone();
    let m: u32 = get("m")?.lo.to_integer().try_into().map_err(|_| Error::Argument("m".into()))?;
    let n: u32 = get("n")?.lo.to_integer().try_into().map_err(|_| Error::Argument("n".into()))?;
    let eps1 = get("eps_1")?.lo.clone();
    let two = qi(2);
    let k_hi = pow_rational(&(&two * &inp.d), &(qi(4) / &inp.q))?.hi;
    let root = pow_rational(&tau, &inp.p.recip())?;
    let root_q = pow_rational(&tau, &inp.q.recip())?;
    let pow2n = Q::new(BigInt::one(), BigInt::one() << n);
    let c1 = Q::one() + &inp.c0;
    let eps_a = Q::new(1.into(), 4.into()) * pow_q(&inp.d, 5 + n + m).recip() * &tau;
    let checks = [
        (ANCHOR_DELTA1, &inp.lambda * (qi(6) * &k_hi + &two) * &dp < inp.delta),
        (
            ANCHOR_DELTA2,
            (&two * &inp.lambda + &two * &inp.c0 + qi(4) * &inp.lambda * &k_hi) * &dp <= inp.c0,
        ),
        ("0 < delta' < 1", dp.is_positive() && dp < Q::one()),
        (ANCHOR_TAU, pow_q(&(&two * &inp.d), 4) * &tau * &two <= tau0.lo),
        ("0 < tau < 1", tau.is_positive() && tau < Q::one()),
        (
            ANCHOR_M,
            Q::from_integer(BigInt::one() << (m.max(1) - 1)) <= c1 && c1 < Q::from_integer(BigInt::one() << m),
        ),
        (
            ANCHOR_N,
            Q::new(1.into(), 2.into()) * &dp * &root.hi <= pow2n && pow2n < &dp * &root.lo,
        ),
        ("2^{-n} < delta' tau^{1/q}", pow2n < &dp * &root_q.lo),
        (ANCHOR_EPS1, eps1 == eps_a.clone().min(inp.eps0.clone()) && eps1 <= inp.eps0),
        ("eps_1 < 1/2", eps1 < Q::new(1.into(), 2.into())),
    ];
    Ok(checks
        .into_iter()
        .map(|(a, h)| RoundTrip { anchor: a.to_string(), holds: h })
        .collect())
}

impl Default for FillingInputs {
    fn default() -> Self {
        FillingInputs {
            p: qi(1),
            q: qi(2),
            d: qi(2),
            c0: qi(3),
            lambda: qi(2),
            delta: Q::new(1.into(), 2.into()),
            eps0: Q::new(1.into(), 10.into()),
            big_delta: qi(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    #[test]
    fn tau_threshold_examples() {
        let t = tau_threshold(&qi(1), &qi(2), &q(1, 2), &qi(1)).unwrap();
        assert_eq!(t.value(), Some(&q(1, 16)));
        let clamp = tau_threshold(&qi(1), &qi(2), &qi(3), &qi(1)).unwrap();
        assert_eq!(clamp.value(), Some(&qi(1)));
        assert!(matches!(tau_threshold(&qi(2), &qi(2), &q(1, 2), &qi(1)), Err(Error::Domain(_))));
        let mut prev = 1.0;
        for qq in [q(3, 1), q(2, 1), q(3, 2), q(11, 10), q(101, 100)] {
            let v = tau_threshold(&qi(1), &qq, &q(1, 2), &qi(1)).unwrap();
            assert!(v.approx < prev);
            prev = v.approx;
        }
        assert!(prev < 1e-50);
        let irr = tau_threshold(&qi(1), &qi(3), &q(1, 2), &qi(1)).unwrap();
        assert!(!irr.exact && irr.lo < irr.hi);
        assert!((irr.approx - 0.25f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn isoperimetric_examples() {
        let (cs, l) = isoperimetric_constants(&qi(2), &qi(1), &qi(1)).unwrap();
        assert_eq!((cs.value().cloned(), l), (Some(qi(32)), qi(2)));
        let (cs, l) = isoperimetric_constants(&qi(2), &qi(1), &qi(2)).unwrap();
        assert_eq!((cs.value().cloned(), l), (Some(qi(128)), qi(4)));
        let (cs3, _) = isoperimetric_constants(&qi(2), &qi(3), &qi(2)).unwrap();
        assert_eq!(cs3.value(), Some(&qi(384)));
        let (odd, _) = isoperimetric_constants(&qi(3), &qi(1), &qi(3)).unwrap();
        assert!(!odd.exact && (odd.approx - 2.0 * 3f64.powf(4.0 + 2.0 * 3f64.log2())).abs() < 1e-6 * odd.approx);
        assert!(isoperimetric_constants(&q(3, 2), &qi(1), &qi(1)).is_err());
    }

    #[test]
    fn doubling_and_ahlfors_examples() {
        assert_eq!(doubling_after_filling(&qi(2), &qi(0)).unwrap(), qi(2));
        assert_eq!(doubling_after_filling(&qi(2), &q(1, 2)).unwrap(), qi(4));
        assert!(doubling_after_filling(&qi(2), &qi(1)).is_err());
        assert!(doubling_after_filling(&qi(2), &q(1, 3)).unwrap() < doubling_after_filling(&qi(2), &q(1, 2)).unwrap());
        assert_eq!(uniform_ahlfors_constant(&qi(1), &qi(2), &qi(1)).unwrap().value(), Some(&qi(16)));
        assert_eq!(uniform_ahlfors_constant(&qi(1), &qi(1), &qi(1)).unwrap().value(), Some(&qi(4)));
        assert_eq!(uniform_ahlfors_constant(&qi(1), &qi(2), &qi(3)).unwrap().value(), Some(&qi(48)));
        assert!(uniform_ahlfors_constant(&q(1, 2), &qi(2), &qi(1)).is_err());
    }

    #[test]
    fn m_tie_policy() {
        assert_eq!(choose_m(&qi(3)), 3);
        assert_eq!(choose_m(&qi(2)), 2);
        assert_eq!(choose_m(&qi(1)), 2);
        assert_eq!(choose_m(&q(5, 2)), 2);
    }

    #[test]
    fn filling_round_trip() {
        let inp = FillingInputs::default();
        let b = filling_parameters(&inp).unwrap();
        assert_eq!(b.constants.len(), 6);
        assert_eq!(b.get("m").unwrap().value(), Some(&qi(3)));
        for c in verify_filling(&inp, &b).unwrap() {
            assert!(c.holds, "{}", c.anchor);
        }
        let mut bad = inp.clone();
        bad.delta = qi(0);
        assert!(matches!(filling_parameters(&bad), Err(Error::Domain(_))));
        bad = inp.clone();
        bad.q = qi(1);
        assert!(filling_parameters(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn filling_chain_round_trips(p in 1i64..3, dq in 1i64..4, d in 2i64..6, c0 in 1i64..20,
                                     lam in 1i64..6, delta in 1i64..10, eps in 1i64..10, big in 1i64..4) {
            let inp = FillingInputs {
                p: qi(p),
                q: qi(p) + q(dq, 2),
                d: qi(d),
                c0: qi(c0),
                lambda: qi(lam),
                delta: q(delta, 10),
                eps0: q(eps, 20),
                big_delta: qi(big),
            };
            let b = filling_parameters(&inp).unwrap();
            for c in verify_filling(&inp, &b).unwrap() {
                prop_assert!(c.holds, "{}", c.anchor);
            }
            let mut more = inp.clone();
            more.c0 = qi(c0 * 2 + 1);
            let b2 = filling_parameters(&more).unwrap();
            // With delta' fixed by the first inequality, C_0 acts only through m.
            if b2.get("delta'") == b.get("delta'") {
                prop_assert!(b2.get("eps_1").unwrap().lo <= b.get("eps_1").unwrap().lo);
            }
        }

        #[test]
        fn c_s_linear_in_c_b(c in 1i64..100, j in 0u32..4) {
            let lb = qi(1 << j);
            let (one, _) = isoperimetric_constants(&qi(3), &qi(1), &lb).unwrap();
            let (many, _) = isoperimetric_constants(&qi(3), &qi(c), &lb).unwrap();
            prop_assert_eq!(many.lo, one.lo * qi(c));
        }
    }
}
