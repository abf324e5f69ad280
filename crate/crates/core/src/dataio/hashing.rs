use std::fmt;

use crate::error::{L2sError, Result};

pub const DEFAULT_BITS: u8 = 18;
pub const MIN_BITS: u8 = 8;
pub const MAX_BITS: u8 = 31;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const NAMESPACE_SEPARATOR: u8 = 0x1f;

/// Plain 64-bit FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Hashes `namespace 0x1F name` with FNV-1a-64 and keeps the low `bits` bits.
///
/// `bits` must lie in `[8, 31]`; this is checked in debug builds only since
/// every caller validates it once when the feature space is configured.
pub fn hash_feature(namespace: &str, name: &str, bits: u8) -> u32 {
    debug_assert!((MIN_BITS..=MAX_BITS).contains(&bits));
    let mut h = FNV_OFFSET;
    for &b in namespace
        .as_bytes()
        .iter()
        .chain(std::iter::once(&NAMESPACE_SEPARATOR))
        .chain(name.as_bytes())
    {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    (h & ((1u64 << bits) - 1)) as u32
}

pub(crate) fn check_bits(bits: u8) -> Result<()> {
    if (MIN_BITS..=MAX_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(L2sError::config(format!(
            "bits must be in [{MIN_BITS}, {MAX_BITS}], got {bits}"
        )))
    }
}

/// A short ASCII namespace identifier such as `w` (words) or `p` (POS tags).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Namespace(String);

impl Namespace {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || !id.is_ascii() || id.bytes().any(|b| b.is_ascii_whitespace()) {
            return Err(L2sError::config(format!("invalid namespace {id:?}")));
        }
        Ok(Namespace(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamespaceGroup {
    pub namespace: String,
    pub entries: Vec<(u32, f64)>,
}

/// Sparse hashed features grouped by namespace.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    bits: u8,
    groups: Vec<NamespaceGroup>,
}

impl FeatureVector {
    pub fn new(bits: u8) -> Self {
        debug_assert!((MIN_BITS..=MAX_BITS).contains(&bits));
        FeatureVector {
            bits,
            groups: Vec::new(),
        }
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    fn group_mut(&mut self, namespace: &str) -> &mut Vec<(u32, f64)> {
        let pos = match self.groups.iter().position(|g| g.namespace == namespace) {
            Some(pos) => pos,
            None => {
                self.groups.push(NamespaceGroup {
                    namespace: namespace.to_string(),
                    entries: Vec::new(),
                });
                self.groups.len() - 1
            }
        };
        &mut self.groups[pos].entries
    }

    /// Adds the binary feature `name` in `namespace`.
    pub fn add(&mut self, namespace: &str, name: &str) {
        let index = hash_feature(namespace, name, self.bits);
        self.group_mut(namespace).push((index, 1.0));
    }

    /// Adds a feature with an explicit index, masked into the index space.
    pub fn add_indexed(&mut self, namespace: &str, index: u32, value: f64) {
        debug_assert!(value.is_finite());
        let mask = ((1u64 << self.bits) - 1) as u32;
        self.group_mut(namespace).push((index & mask, value));
    }

    pub fn groups(&self) -> &[NamespaceGroup] {
        &self.groups
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.groups.iter().flat_map(|g| g.entries.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends every entry of `other`, keeping its namespace grouping.
    pub fn extend_from(&mut self, other: &FeatureVector) {
        debug_assert_eq!(self.bits, other.bits);
        for g in &other.groups {
            self.group_mut(&g.namespace).extend_from_slice(&g.entries);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    // Byte-at-a-time reference written straight from the FNV-1a definition.
    fn reference_fnv(ns: &str, name: &str) -> u64 {
        let mut bytes = ns.as_bytes().to_vec();
        bytes.push(0x1f);
        bytes.extend_from_slice(name.as_bytes());
        let mut hash: u64 = 14695981039346656037;
        for byte in bytes {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(1099511628211);
        }
        hash
    }

    #[test]
    fn fnv_known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn hash_is_deterministic_and_masked() {
        let a = hash_feature("w", "the", 18);
        assert_eq!(a, hash_feature("w", "the", 18));
        assert!(a < 262_144);
        assert_eq!(u64::from(a), reference_fnv("w", "the") & 0x3ffff);
        // frozen from the reference above
        assert_eq!(reference_fnv("w", "the"), 0xec03_28e7_0412_b18e);
        assert_eq!(a, 176_526);
    }

    #[test]
    fn separator_distinguishes_namespace_boundary() {
        assert_ne!(hash_feature("wa", "b", 31), hash_feature("w", "ab", 31));
    }

    #[test]
    fn collision_rate_at_18_bits() {
        let n = 10_000;
        let distinct: HashSet<u32> = (0..n)
            .map(|i| hash_feature("w", &format!("name{i}"), 18))
            .collect();
        let collisions = n - distinct.len();
        assert!((collisions as f64) / (n as f64) < 0.05, "{collisions} collisions");
    }

    #[test]
    fn namespace_validation() {
        assert!(Namespace::new("w").is_ok());
        assert!(Namespace::new("").is_err());
        assert!(Namespace::new("a b").is_err());
    }

    #[test]
    fn grouping_and_iteration() {
        let mut fv = FeatureVector::new(12);
        fv.add("w", "x");
        fv.add("p", "NN");
        fv.add("w", "y");
        assert_eq!(fv.groups().len(), 2);
        assert_eq!(fv.len(), 3);
        assert!(fv.iter().all(|(i, v)| i < 4096 && v == 1.0));
    }
}
