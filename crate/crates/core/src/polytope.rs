//! Points of the momentum polytope in exact rational coordinates, the two
//! shipped membership catalogs, and grid enumeration of sweep candidates.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::momentum::momentum;
use crate::system::{ParticleKind, SystemDescriptor};
use crate::{Error, PureState, Result};

/// Ordered spectra `(P_1, …, P_L)` of the shifted reduced densities `ρ_k − I/N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpectrumPoint {
    parts: Vec<Vec<Rational64>>,
}

pub fn rational_to_string(r: &Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::Malformed { field: "rational".into(), reason: format!("`{s}` is not p/q") };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().map_err(|_| bad())?, d.trim().parse::<i64>().map_err(|_| bad())?),
        None => (s.parse::<i64>().map_err(|_| bad())?, 1),
    };
    if den == 0 {
        return Err(bad());
    }
    Ok(Rational64::new(num, den))
}

impl Serialize for SpectrumPoint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let strings: Vec<Vec<String>> = self.parts.iter().map(|p| p.iter().map(rational_to_string).collect()).collect();
        strings.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpectrumPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let strings: Vec<Vec<String>> = Vec::deserialize(deserializer)?;
        let parts = strings
            .iter()
            .map(|p| p.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(SpectrumPoint { parts })
    }
}

impl fmt::Display for SpectrumPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| format!("({})", p.iter().map(rational_to_string).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl SpectrumPoint {
    /// Validates ordering, zero sums and the entry range.
    pub fn new(parts: Vec<Vec<Rational64>>) -> Result<Self> {
        let p = SpectrumPoint { parts };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(descriptor: SystemDescriptor) -> Self {
        SpectrumPoint { parts: vec![vec![Rational64::zero(); descriptor.local_dim()]; descriptor.num_components()] }
    }

    /// Parses `p/q,...` per part, parts separated by `;`.
    pub fn parse(descriptor: SystemDescriptor, text: &str) -> Result<Self> {
        let parts = text
            .split(';')
            .map(|part| part.split(',').map(parse_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let point = SpectrumPoint::new(parts)?;
        point.check_shape(descriptor)?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, part) in self.parts.iter().enumerate() {
            let n = part.len() as i64;
            if n < 2 {
                return Err(Error::Shape(format!("part {k} has fewer than two entries")));
            }
            if part.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::Shape(format!("part {k} is not non-increasing")));
            }
            if part.iter().copied().sum::<Rational64>() != Rational64::zero() {
                return Err(Error::Shape(format!("part {k} does not sum to zero")));
            }
            let lo = Rational64::new(-1, n);
            let hi = Rational64::new(n - 1, n);
            if part.iter().any(|x| *x < lo || *x > hi) {
                return Err(Error::Shape(format!("part {k} has entries outside [-1/N, (N-1)/N]")));
            }
        }
        Ok(())
    }

    pub fn check_shape(&self, descriptor: SystemDescriptor) -> Result<()> {
        let ok = self.parts.len() == descriptor.num_components()
            && self.parts.iter().all(|p| p.len() == descriptor.local_dim());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("spectrum point {self} does not fit {descriptor}")))
        }
    }

    pub fn parts(&self) -> &[Vec<Rational64>] {
        &self.parts
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().flatten().all(|x| x.is_zero())
    }

    /// `Σ_k Σ_i P_k[i]²`, i.e. the squared norm of the diagonal momentum.
    pub fn norm_sq(&self) -> Rational64 {
        self.parts.iter().flatten().map(|x| x * x).sum()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.parts.iter().map(|p| p.iter().map(|x| *x.numer() as f64 / *x.denom() as f64).collect()).collect()
    }
}

/// A rounded spectrum point together with the raw floating-point spectra.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    pub point: SpectrumPoint,
    pub float_spectra: Vec<Vec<f64>>,
    /// Largest change any eigenvalue underwent while rounding.
    pub max_shift: f64,
    /// `max_shift` exceeded half a grid step: the state is not near a lattice point.
    pub off_lattice: bool,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    Integer::div_ceil(&a, &b)
}

fn round_part(values: &[f64], denominator: i64) -> Vec<i64> {
    let n = values.len() as i64;
    let lo = ceil_div(-denominator, n);
    let hi = Integer::div_floor(&(denominator * (n - 1)), &n);
    let scaled: Vec<f64> = values.iter().map(|v| v * denominator as f64).collect();
    let mut k: Vec<i64> = scaled.iter().map(|x| (x.round() as i64).clamp(lo, hi)).collect();
    let mut excess: i64 = k.iter().sum();
    while excess != 0 {
        let dir = excess.signum();
        // move the entry whose rounding error points furthest in the excess direction
        let pick = (0..k.len())
            .filter(|&i| if dir > 0 { k[i] > lo } else { k[i] < hi })
            .max_by(|&a, &b| {
                let ea = (k[a] as f64 - scaled[a]) * dir as f64;
                let eb = (k[b] as f64 - scaled[b]) * dir as f64;
                ea.total_cmp(&eb)
            })
            .expect("a movable entry exists when the bounds bracket zero");
        k[pick] -= dir;
        excess -= dir;
    }
    k.sort_unstable_by(|a, b| b.cmp(a));
    k
}

/// Eigenvalues of every momentum component, sorted non-increasing and rounded
/// to multiples of `1/denominator`, re-centered to sum exactly to zero.
pub fn spectrum_point(psi: &PureState, denominator: i64) -> Result<SpectrumEstimate> {
    if denominator < 1 {
        return Err(Error::Malformed { field: "denominator".into(), reason: "must be positive".into() });
    }
    let float_spectra = momentum(psi).spectra();
    let mut max_shift: f64 = 0.0;
    let parts = float_spectra
        .iter()
        .map(|values| {
            let k = round_part(values, denominator);
            for (ki, v) in k.iter().zip(values) {
                max_shift = max_shift.max((*ki as f64 / denominator as f64 - v).abs());
            }
            k.into_iter().map(|ki| Rational64::new(ki, denominator)).collect()
        })
        .collect();
    let point = SpectrumPoint::new(parts)?;
    let off_lattice = max_shift > 0.5 / denominator as f64;
    Ok(SpectrumEstimate { point, float_spectra, max_shift, off_lattice })
}

fn three_qubit_shape(p: &SpectrumPoint) -> Result<()> {
    if p.parts.len() == 3 && p.parts.iter().all(|x| x.len() == 2) {
        Ok(())
    } else {
        Err(Error::Shape(format!("{p} is not a three-qubit spectrum point")))
    }
}

/// Polygon inequalities on the smallest local eigenvalues `m_k`:
/// `m_k ≤ m_j + m_l` for every `k`, and `0 ≤ m_k ≤ 1/2`.
pub fn membership_three_qubit(p: &SpectrumPoint) -> Result<bool> {
    three_qubit_shape(p)?;
    let half = Rational64::new(1, 2);
    let m: Vec<Rational64> = p.parts.iter().map(|part| half + part[1]).collect();
    let in_range = m.iter().all(|x| !x.is_negative() && *x <= half);
    let polygon = (0..3).all(|k| m[k] <= m[(k + 1) % 3] + m[(k + 2) % 3]);
    Ok(in_range && polygon)
}

/// Critical-spectrum conditions for three fermions in five orbitals on the
/// trace-one spectrum `λ = P + 1/5`: all `λ ≤ 1/3`, `λ_max = 1/3`, and every
/// value below `λ_max` appears at least twice.
pub fn critical_spectrum_constraints_wedge35(p: &SpectrumPoint) -> Result<bool> {
    if p.parts.len() != 1 || p.parts[0].len() != 5 {
        return Err(Error::Shape(format!("{p} is not a wedge-3-5 spectrum point")));
    }
    let third = Rational64::new(1, 3);
    let lambda: Vec<Rational64> = p.parts[0].iter().map(|x| x + Rational64::new(1, 5)).collect();
    if lambda.iter().any(|x| *x > third) || lambda[0] != third {
        return Ok(false);
    }
    let mut counts: HashMap<Rational64, usize> = HashMap::new();
    for x in &lambda {
        *counts.entry(*x).or_default() += 1;
    }
    Ok(counts.iter().all(|(value, &count)| *value == third || count >= 2))
}

pub type MembershipPredicate = Arc<dyn Fn(&SpectrumPoint) -> bool + Send + Sync>;

fn registry() -> &'static RwLock<HashMap<SystemDescriptor, MembershipPredicate>> {
    static REGISTRY: OnceLock<RwLock<HashMap<SystemDescriptor, MembershipPredicate>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map: HashMap<SystemDescriptor, MembershipPredicate> = HashMap::new();
        map.insert(
            SystemDescriptor::distinguishable(2, 3).expect("valid"),
            Arc::new(|p: &SpectrumPoint| membership_three_qubit(p).unwrap_or(false)),
        );
        map.insert(
            SystemDescriptor::fermionic(5, 3).expect("valid"),
            Arc::new(|p: &SpectrumPoint| critical_spectrum_constraints_wedge35(p).unwrap_or(false)),
        );
        RwLock::new(map)
    })
}

/// Registers (or replaces) an inequality catalog for a system.
pub fn register_predicate(descriptor: SystemDescriptor, predicate: MembershipPredicate) {
    registry().write().expect("registry poisoned").insert(descriptor, predicate);
}

pub fn registered_predicate(descriptor: SystemDescriptor) -> Option<MembershipPredicate> {
    registry().read().expect("registry poisoned").get(&descriptor).cloned()
}

pub fn default_denominator(local_dim: usize) -> i64 {
    (2 * local_dim as i64).lcm(&6)
}

/// Non-increasing integer tuples of length `n` summing to zero within `[lo, hi]`.
fn integer_parts(n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, lo: i64, cap: i64, remaining: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let left = (n - cur.len()) as i64;
        if left == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // remaining entries are each in [lo, x] with x the next value
        for x in (lo..=cap).rev() {
            if x * left < remaining {
                break;
            }
            if x + lo * (left - 1) > remaining {
                continue;
            }
            cur.push(x);
            rec(n, lo, x, remaining - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, lo, hi, 0, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All nonzero grid points (multiples of `1/denominator`) satisfying the
/// spectrum invariants and the system's membership predicate, in
/// lexicographic order. `custom` overrides the registry.
pub fn enumerate_candidates(
    descriptor: SystemDescriptor,
    denominator: i64,
    custom: Option<MembershipPredicate>,
) -> Result<Vec<SpectrumPoint>> {
    if denominator < 1 {
        return Err(Error::Malformed { field: "denominator".into(), reason: "must be positive".into() });
    }
    let predicate = custom
        .or_else(|| registered_predicate(descriptor))
        .ok_or_else(|| Error::NoPredicate(descriptor.to_string()))?;
    let n = descriptor.local_dim() as i64;
    let lo = ceil_div(-denominator, n);
    let hi = Integer::div_floor(&(denominator * (n - 1)), &n);
    let parts: Vec<Vec<Rational64>> = integer_parts(descriptor.local_dim(), lo, hi)
        .into_iter()
        .map(|p| p.into_iter().map(|k| Rational64::new(k, denominator)).collect())
        .collect();
    let mut points: Vec<SpectrumPoint> = Vec::new();
    let slots = descriptor.num_components();
    let mut choice = vec![0usize; slots];
    'outer: loop {
        let point = SpectrumPoint { parts: choice.iter().map(|&i| parts[i].clone()).collect() };
        if !point.is_zero() && predicate(&point) {
            points.push(point);
        }
        for slot in (0..slots).rev() {
            choice[slot] += 1;
            if choice[slot] < parts.len() {
                continue 'outer;
            }
            choice[slot] = 0;
        }
        break;
    }
    points.sort();
    Ok(points)
}

impl SpectrumPoint {
    /// Builds a point from per-part numerators over a common denominator.
    pub fn from_numerators(numerators: &[&[i64]], denominator: i64) -> Result<Self> {
        SpectrumPoint::new(
            numerators.iter().map(|p| p.iter().map(|&k| Rational64::new(k, denominator)).collect()).collect(),
        )
    }
}

/// Kind-specific registry check used by invariants.
pub fn has_catalog(descriptor: SystemDescriptor) -> bool {
    matches!(descriptor.kind(), ParticleKind::Distinguishable | ParticleKind::Fermionic)
        && registered_predicate(descriptor).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{catalog, random_state};

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn qubit_point(m: [Rational64; 3]) -> SpectrumPoint {
        let half = r(1, 2);
        SpectrumPoint::new(m.iter().map(|mk| vec![half - mk, mk - half]).collect()).unwrap()
    }

    #[test]
    fn spectrum_points_of_examples() {
        let ghz = spectrum_point(&catalog::ghz(), 6).unwrap();
        assert!(ghz.point.is_zero() && !ghz.off_lattice);
        let w = spectrum_point(&catalog::w(), 6).unwrap();
        assert_eq!(w.point, SpectrumPoint::from_numerators(&[&[1, -1], &[1, -1], &[1, -1]], 6).unwrap());
        let psi1 = spectrum_point(&catalog::wedge_psi1(), 30).unwrap();
        assert_eq!(psi1.point.parts()[0], vec![r(2, 15), r(2, 15), r(2, 15), r(-1, 5), r(-1, 5)]);
        let psi2 = spectrum_point(&catalog::wedge_psi2(), 30).unwrap();
        assert_eq!(psi2.point.parts()[0], vec![r(2, 15), r(-1, 30), r(-1, 30), r(-1, 30), r(-1, 30)]);
    }

    #[test]
    fn rounding_flags_off_lattice_states() {
        // qutrit spectrum (0.16, 0.16, -0.32) at denominator 3 needs re-centering
        let desc = SystemDescriptor::distinguishable(3, 2).unwrap();
        let p: [f64; 3] = [1.0 / 3.0 + 0.16, 1.0 / 3.0 + 0.16, 1.0 / 3.0 - 0.32];
        let terms: Vec<(Vec<usize>, f64)> = (0..3).map(|i| (vec![i + 1, i + 1], p[i].sqrt())).collect();
        let terms: Vec<(&[usize], crate::Complex64)> =
            terms.iter().map(|(l, a)| (l.as_slice(), crate::Complex64::new(*a, 0.0))).collect();
        let psi = PureState::from_terms(desc, &terms).unwrap();
        let est = spectrum_point(&psi, 3).unwrap();
        assert!(est.point.validate().is_ok());
        assert!(est.off_lattice);
        assert_eq!(est.point.parts()[0], vec![r(1, 3), r(0, 1), r(-1, 3)]);
        assert!(!spectrum_point(&catalog::w(), 6).unwrap().off_lattice);
    }

    #[test]
    fn three_qubit_membership() {
        let half = r(1, 2);
        assert!(membership_three_qubit(&qubit_point([half, half, half])).unwrap());
        assert!(membership_three_qubit(&qubit_point([half, half, r(0, 1)])).unwrap());
        assert!(!membership_three_qubit(&qubit_point([half, r(0, 1), r(0, 1)])).unwrap());
        let wedge = SpectrumPoint::zero(catalog::wedge35());
        assert!(membership_three_qubit(&wedge).is_err());
    }

    #[test]
    fn wedge_constraints() {
        let from_lambda = |l: [Rational64; 5]| {
            SpectrumPoint::new(vec![l.iter().map(|x| x - r(1, 5)).collect()]).unwrap()
        };
        let (third, sixth, fifth) = (r(1, 3), r(1, 6), r(1, 5));
        let z = r(0, 1);
        assert!(critical_spectrum_constraints_wedge35(&from_lambda([third, third, third, z, z])).unwrap());
        assert!(critical_spectrum_constraints_wedge35(&from_lambda([third, sixth, sixth, sixth, sixth])).unwrap());
        assert!(!critical_spectrum_constraints_wedge35(&from_lambda([fifth; 5])).unwrap());
        assert!(!critical_spectrum_constraints_wedge35(&from_lambda([third, r(1, 4), r(1, 6), r(1, 6), r(1, 12)])).unwrap());
        assert!(critical_spectrum_constraints_wedge35(&SpectrumPoint::zero(catalog::qubits3())).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(SpectrumPoint::new(vec![vec![r(-1, 6), r(1, 6)]]).is_err());
        assert!(SpectrumPoint::new(vec![vec![r(1, 6), r(1, 6)]]).is_err());
        assert!(SpectrumPoint::new(vec![vec![r(1, 1), r(-1, 1)]]).is_err());
        let p = SpectrumPoint::parse(catalog::qubits3(), "1/6,-1/6;1/2,-1/2;0,0").unwrap();
        assert_eq!(p.to_string(), "(1/6,-1/6) (1/2,-1/2) (0,0)");
        assert!(SpectrumPoint::parse(catalog::wedge35(), "1/6,-1/6").is_err());
    }

    #[test]
    fn serde_uses_rational_strings() {
        let p = SpectrumPoint::from_numerators(&[&[4, -1, -1, -1, -1]], 30).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"[["2/15","-1/30","-1/30","-1/30","-1/30"]]"#);
        let back: SpectrumPoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn three_qubit_candidates() {
        let d = catalog::qubits3();
        let c2 = enumerate_candidates(d, 2, None).unwrap();
        let sep = SpectrumPoint::from_numerators(&[&[1, -1], &[1, -1], &[1, -1]], 2).unwrap();
        assert!(c2.contains(&sep));
        assert!(c2.iter().all(|p| !p.is_zero()));
        let c6 = enumerate_candidates(d, 6, None).unwrap();
        let w = SpectrumPoint::from_numerators(&[&[1, -1], &[1, -1], &[1, -1]], 6).unwrap();
        assert!(c6.contains(&w));
        assert!(c6.windows(2).all(|x| x[0] < x[1]));
        for p in &c6 {
            p.validate().unwrap();
            assert!(membership_three_qubit(p).unwrap());
        }
    }

    #[test]
    fn wedge_candidates() {
        let c30 = enumerate_candidates(catalog::wedge35(), 30, None).unwrap();
        let psi1 = SpectrumPoint::from_numerators(&[&[4, 4, 4, -6, -6]], 30).unwrap();
        let psi2 = SpectrumPoint::from_numerators(&[&[4, -1, -1, -1, -1]], 30).unwrap();
        assert!(c30.contains(&psi1) && c30.contains(&psi2));
        // λ = (1/3, a, a, 1/3 - a, 1/3 - a) with a ∈ {5/30, …, 10/30}
        assert_eq!(c30.len(), 6);
    }

    #[test]
    fn missing_predicate_is_an_error() {
        let d = SystemDescriptor::distinguishable(3, 2).unwrap();
        assert!(matches!(enumerate_candidates(d, 6, None), Err(Error::NoPredicate(_))));
        let any: MembershipPredicate = Arc::new(|_| true);
        let pts = enumerate_candidates(d, 6, Some(any)).unwrap();
        assert!(!pts.is_empty());
    }

    #[test]
    fn random_states_lie_in_the_polytope() {
        for seed in 0..100 {
            let q = spectrum_point(&random_state(catalog::qubits3(), seed), 1_000_000).unwrap();
            assert!(membership_three_qubit(&q.point).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn membership_scales_towards_separable_corner() {
        // scaling every m_k by a common factor in (0, 1] keeps the polygon inequalities
        for p in enumerate_candidates(catalog::qubits3(), 12, None).unwrap() {
            let m: Vec<Rational64> = p.parts().iter().map(|x| r(1, 2) + x[1]).collect();
            for t in [r(1, 2), r(1, 3), r(3, 4)] {
                let scaled = qubit_point([m[0] * t, m[1] * t, m[2] * t]);
                assert!(membership_three_qubit(&scaled).unwrap());
            }
        }
    }
}
