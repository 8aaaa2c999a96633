//! System descriptors and canonical basis bookkeeping.
//!
//! Basis states are ordered lexicographically in their orbital labels. Labels
//! are stored 0-based; every external interface speaks 1-based labels.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleKind {
    Distinguishable,
    Bosonic,
    Fermionic,
}

impl ParticleKind {
    pub fn is_indistinguishable(self) -> bool {
        !matches!(self, ParticleKind::Distinguishable)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParticleKind::Distinguishable => "distinguishable",
            ParticleKind::Bosonic => "bosonic",
            ParticleKind::Fermionic => "fermionic",
        }
    }
}

impl FromStr for ParticleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "distinguishable" | "d" | "qudits" => Ok(ParticleKind::Distinguishable),
            "bosonic" | "b" | "bosons" => Ok(ParticleKind::Bosonic),
            "fermionic" | "f" | "fermions" => Ok(ParticleKind::Fermionic),
            other => Err(Error::InvalidSystem(format!("unknown particle kind `{other}`"))),
        }
    }
}

/// `L` particles with an `N`-dimensional single-particle space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct SystemDescriptor {
    kind: ParticleKind,
    local_dim: usize,
    num_particles: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDescriptor {
    kind: ParticleKind,
    local_dim: usize,
    num_particles: usize,
}

impl TryFrom<RawDescriptor> for SystemDescriptor {
    type Error = Error;

    fn try_from(raw: RawDescriptor) -> Result<Self> {
        SystemDescriptor::new(raw.kind, raw.local_dim, raw.num_particles)
    }
}

impl From<SystemDescriptor> for RawDescriptor {
    fn from(d: SystemDescriptor) -> Self {
        RawDescriptor { kind: d.kind, local_dim: d.local_dim, num_particles: d.num_particles }
    }
}

impl SystemDescriptor {
    pub fn new(kind: ParticleKind, local_dim: usize, num_particles: usize) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::InvalidSystem(format!("local dimension {local_dim} < 2")));
        }
        if num_particles < 1 {
            return Err(Error::InvalidSystem("at least one particle required".into()));
        }
        if kind == ParticleKind::Fermionic && num_particles > local_dim {
            return Err(Error::InvalidSystem(format!(
                "{num_particles} fermions do not fit in {local_dim} orbitals"
            )));
        }
        Ok(SystemDescriptor { kind, local_dim, num_particles })
    }

    pub fn distinguishable(local_dim: usize, num_particles: usize) -> Result<Self> {
        Self::new(ParticleKind::Distinguishable, local_dim, num_particles)
    }

    pub fn bosonic(local_dim: usize, num_particles: usize) -> Result<Self> {
        Self::new(ParticleKind::Bosonic, local_dim, num_particles)
    }

    pub fn fermionic(local_dim: usize, num_particles: usize) -> Result<Self> {
        Self::new(ParticleKind::Fermionic, local_dim, num_particles)
    }

    pub fn kind(&self) -> ParticleKind {
        self.kind
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    /// Number of independent momentum components: `L` for distinguishable
    /// particles, one otherwise.
    pub fn num_components(&self) -> usize {
        if self.kind.is_indistinguishable() {
            1
        } else {
            self.num_particles
        }
    }

    /// Ratio between the lifted-generator expectation values and the
    /// trace-one reduced density: `<dΓ(X)> = weight · tr(ρ X)`.
    pub fn expectation_weight(&self) -> f64 {
        if self.kind.is_indistinguishable() {
            self.num_particles as f64
        } else {
            1.0
        }
    }

    /// Hilbert-space dimension.
    pub fn dimension(&self) -> usize {
        let (n, l) = (self.local_dim, self.num_particles);
        match self.kind {
            ParticleKind::Distinguishable => n.pow(l as u32),
            ParticleKind::Bosonic => binomial(n + l - 1, l),
            ParticleKind::Fermionic => binomial(n, l),
        }
    }

    /// Shared, cached canonical basis for this system.
    pub fn basis(&self) -> Arc<Basis> {
        static CACHE: OnceLock<Mutex<HashMap<SystemDescriptor, Arc<Basis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(self) {
            return Arc::clone(b);
        }
        let built = Arc::new(Basis::build(*self));
        let mut guard = cache.lock().expect("basis cache poisoned");
        Arc::clone(guard.entry(*self).or_insert(built))
    }
}

impl fmt::Display for SystemDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.kind.name(), self.local_dim, self.num_particles)
    }
}

/// Parses `kind,N,L`, e.g. `fermionic,5,3`.
impl FromStr for SystemDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidSystem(format!("expected `kind,N,L`, got `{s}`")));
        }
        let kind: ParticleKind = parts[0].parse()?;
        let parse = |p: &str, what: &str| {
            p.trim().parse::<usize>().map_err(|_| Error::InvalidSystem(format!("bad {what} `{p}`")))
        };
        SystemDescriptor::new(kind, parse(parts[1], "N")?, parse(parts[2], "L")?)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Orbital labels of one basis vector, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex(Vec<usize>);

impl BasisIndex {
    pub fn new(orbitals: Vec<usize>) -> Self {
        BasisIndex(orbitals)
    }

    /// Builds an index from 1-based labels, validating the kind's ordering rule.
    pub fn from_labels(desc: &SystemDescriptor, labels: &[usize]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidIndex { index: labels.to_vec(), reason: reason.into() };
        if labels.len() != desc.num_particles() {
            return Err(bad(&format!("expected {} labels", desc.num_particles())));
        }
        if labels.iter().any(|&l| l == 0 || l > desc.local_dim()) {
            return Err(bad(&format!("labels must lie in 1..={}", desc.local_dim())));
        }
        match desc.kind() {
            ParticleKind::Fermionic if labels.windows(2).any(|w| w[0] >= w[1]) => {
                return Err(bad("index not strictly increasing"));
            }
            ParticleKind::Bosonic if labels.windows(2).any(|w| w[0] > w[1]) => {
                return Err(bad("index not non-decreasing"));
            }
            _ => {}
        }
        Ok(BasisIndex(labels.iter().map(|l| l - 1).collect()))
    }

    pub fn orbitals(&self) -> &[usize] {
        &self.0
    }

    /// 1-based labels.
    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().map(|o| o + 1).collect()
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.labels().iter().map(|l| l.to_string()).collect();
        write!(f, "|{}>", labels.join(","))
    }
}

/// `a†_create a_annihilate |source> = coeff |target>`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hop {
    pub create: usize,
    pub annihilate: usize,
    pub target: usize,
    pub coeff: f64,
}

/// Enumerated basis with the position lookup and, for identical particles,
/// the table of all nonzero one-body hops.
#[derive(Debug)]
pub struct Basis {
    descriptor: SystemDescriptor,
    indices: Vec<BasisIndex>,
    lookup: HashMap<BasisIndex, usize>,
    hops: Vec<Vec<Hop>>,
    pub(crate) casimir: OnceLock<f64>,
}

impl Basis {
    fn build(descriptor: SystemDescriptor) -> Self {
        let (n, l) = (descriptor.local_dim(), descriptor.num_particles());
        let mut indices = Vec::with_capacity(descriptor.dimension());
        let mut current = Vec::with_capacity(l);
        enumerate_rec(descriptor.kind(), n, l, &mut current, &mut indices);
        debug_assert_eq!(indices.len(), descriptor.dimension());
        let lookup: HashMap<BasisIndex, usize> =
            indices.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let hops = match descriptor.kind() {
            ParticleKind::Distinguishable => Vec::new(),
            kind => indices.iter().map(|b| one_body_hops(kind, n, b, &lookup)).collect(),
        };
        Basis { descriptor, indices, lookup, hops, casimir: OnceLock::new() }
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        self.descriptor
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn index(&self, position: usize) -> &BasisIndex {
        &self.indices[position]
    }

    pub fn position(&self, index: &BasisIndex) -> Option<usize> {
        self.lookup.get(index).copied()
    }

    /// Position of a basis vector given 1-based labels.
    pub fn position_of_labels(&self, labels: &[usize]) -> Result<usize> {
        let idx = BasisIndex::from_labels(&self.descriptor, labels)?;
        self.position(&idx).ok_or_else(|| Error::InvalidIndex { index: labels.to_vec(), reason: "not in basis".into() })
    }

    pub(crate) fn hops(&self, position: usize) -> &[Hop] {
        &self.hops[position]
    }

    /// Stride of `site` in the row-major distinguishable layout.
    pub(crate) fn stride(&self, site: usize) -> usize {
        let d = self.descriptor;
        d.local_dim().pow((d.num_particles() - 1 - site) as u32)
    }
}

/// Canonical basis in lexicographic order.
pub fn basis_enumerate(descriptor: &SystemDescriptor) -> Vec<BasisIndex> {
    descriptor.basis().indices().to_vec()
}

fn enumerate_rec(kind: ParticleKind, n: usize, l: usize, current: &mut Vec<usize>, out: &mut Vec<BasisIndex>) {
    if current.len() == l {
        out.push(BasisIndex(current.clone()));
        return;
    }
    let start = match (kind, current.last()) {
        (ParticleKind::Distinguishable, _) | (_, None) => 0,
        (ParticleKind::Bosonic, Some(&last)) => last,
        (ParticleKind::Fermionic, Some(&last)) => last + 1,
    };
    for o in start..n {
        current.push(o);
        enumerate_rec(kind, n, l, current, out);
        current.pop();
    }
}

fn one_body_hops(kind: ParticleKind, n: usize, source: &BasisIndex, lookup: &HashMap<BasisIndex, usize>) -> Vec<Hop> {
    let orbs = source.orbitals();
    let mut hops = Vec::new();
    let mut occupied: Vec<usize> = orbs.to_vec();
    occupied.dedup();
    for &q in &occupied {
        for p in 0..n {
            let result = match kind {
                ParticleKind::Fermionic => fermionic_hop(orbs, p, q),
                ParticleKind::Bosonic => bosonic_hop(orbs, p, q),
                ParticleKind::Distinguishable => unreachable!(),
            };
            if let Some((target, coeff)) = result {
                let target = lookup[&BasisIndex(target)];
                hops.push(Hop { create: p, annihilate: q, target, coeff });
            }
        }
    }
    hops
}

fn fermionic_hop(orbs: &[usize], p: usize, q: usize) -> Option<(Vec<usize>, f64)> {
    let pos_q = orbs.iter().position(|&o| o == q)?;
    let mut rest: Vec<usize> = orbs.to_vec();
    rest.remove(pos_q);
    if rest.contains(&p) {
        return None;
    }
    let below_p = rest.iter().filter(|&&o| o < p).count();
    let sign = if (pos_q + below_p) % 2 == 0 { 1.0 } else { -1.0 };
    rest.insert(below_p, p);
    Some((rest, sign))
}

fn bosonic_hop(orbs: &[usize], p: usize, q: usize) -> Option<(Vec<usize>, f64)> {
    let n_q = orbs.iter().filter(|&&o| o == q).count();
    if n_q == 0 {
        return None;
    }
    let mut rest: Vec<usize> = orbs.to_vec();
    let pos_q = rest.iter().position(|&o| o == q)?;
    rest.remove(pos_q);
    let n_p = rest.iter().filter(|&&o| o == p).count();
    let coeff = ((n_q * (n_p + 1)) as f64).sqrt();
    let at = rest.iter().filter(|&&o| o <= p).count();
    rest.insert(at, p);
    Some((rest, coeff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(desc: &SystemDescriptor) -> Vec<Vec<usize>> {
        basis_enumerate(desc).iter().map(|b| b.labels()).collect()
    }

    #[test]
    fn dimensions() {
        assert_eq!(SystemDescriptor::distinguishable(2, 3).unwrap().dimension(), 8);
        assert_eq!(SystemDescriptor::fermionic(5, 3).unwrap().dimension(), 10);
        assert_eq!(SystemDescriptor::bosonic(2, 2).unwrap().dimension(), 3);
    }

    #[test]
    fn fermionic_dimension_matches_brute_count() {
        let brute = (1..=5)
            .flat_map(|a| (1..=5).flat_map(move |b| (1..=5).map(move |c| (a, b, c))))
            .filter(|&(a, b, c)| a < b && b < c)
            .count();
        assert_eq!(brute, 10);
    }

    #[test]
    fn enumeration_orders() {
        let d = SystemDescriptor::distinguishable(2, 2).unwrap();
        assert_eq!(labels(&d), vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let b = SystemDescriptor::bosonic(2, 3).unwrap();
        assert_eq!(labels(&b), vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 2], vec![2, 2, 2]]);
        let f = labels(&SystemDescriptor::fermionic(5, 3).unwrap());
        assert_eq!(f.len(), 10);
        assert_eq!(&f[..4], &[vec![1, 2, 3], vec![1, 2, 4], vec![1, 2, 5], vec![1, 3, 4]]);
        assert_eq!(f[9], vec![3, 4, 5]);
        assert!(f.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn descriptor_invariants() {
        assert!(SystemDescriptor::distinguishable(1, 3).is_err());
        assert!(SystemDescriptor::bosonic(3, 0).is_err());
        assert!(SystemDescriptor::fermionic(3, 4).is_err());
        assert!(SystemDescriptor::fermionic(3, 3).is_ok());
    }

    #[test]
    fn descriptor_parses() {
        let d: SystemDescriptor = "fermionic,5,3".parse().unwrap();
        assert_eq!(d, SystemDescriptor::fermionic(5, 3).unwrap());
        assert_eq!(d.to_string(), "fermionic,5,3");
        assert!("fermionic,5".parse::<SystemDescriptor>().is_err());
        assert!("spinor,2,2".parse::<SystemDescriptor>().is_err());
    }

    #[test]
    fn label_validation() {
        let f = SystemDescriptor::fermionic(5, 3).unwrap();
        let err = BasisIndex::from_labels(&f, &[2, 1, 3]).unwrap_err();
        assert!(err.to_string().contains("index not strictly increasing"));
        assert!(BasisIndex::from_labels(&f, &[1, 2, 6]).is_err());
        let b = SystemDescriptor::bosonic(3, 3).unwrap();
        assert!(BasisIndex::from_labels(&b, &[1, 1, 3]).is_ok());
        assert!(BasisIndex::from_labels(&b, &[2, 1, 3]).is_err());
    }

    #[test]
    fn fermionic_hop_signs() {
        // a†_3 a_0 on (0,1,2): remove 0 (no sign), insert 3 after two orbitals.
        assert_eq!(fermionic_hop(&[0, 1, 2], 3, 0), Some((vec![1, 2, 3], 1.0)));
        // a†_0 a_2 on (1,2,3): remove at slot 1 (sign -1), insert at front.
        assert_eq!(fermionic_hop(&[1, 2, 3], 0, 2), Some((vec![0, 1, 3], -1.0)));
        assert_eq!(fermionic_hop(&[0, 1, 2], 1, 0), None);
    }
}
