use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::order::transitive_close;

/// The three distinguished index sets of a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralSet {
    Weakening,
    Exchange,
    Contraction,
}

impl fmt::Display for StructuralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructuralSet::Weakening => write!(f, "W"),
            StructuralSet::Exchange => write!(f, "E"),
            StructuralSet::Contraction => write!(f, "C"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignatureError {
    DuplicateIndex(String),
    UnknownIndex { name: String, context: &'static str },
    /// Strict validation only: the supplied relation is not already
    /// reflexive-transitively closed.
    NotPreorder { missing: (String, String) },
    NotUpwardClosed { set: StructuralSet, member: String, above: String },
    WCNotInE { index: String },
}

impl fmt::Display for SignatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureError::DuplicateIndex(name) => write!(f, "duplicate index '{name}'"),
            SignatureError::UnknownIndex { name, context } => {
                write!(f, "unknown index '{name}' in {context}")
            }
            SignatureError::NotPreorder { missing: (a, b) } => {
                write!(f, "relation is not a preorder: missing pair ({a}, {b})")
            }
            SignatureError::NotUpwardClosed { set, member, above } => {
                write!(f, "{set} is not upward closed: '{member}' is in but '{above}' above it is not")
            }
            SignatureError::WCNotInE { index } => {
                write!(f, "'{index}' is in both W and C but not in E")
            }
        }
    }
}

/// Unvalidated signature data, as it arrives from a file or a test.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawSignature {
    pub indices: Vec<String>,
    pub preceq: Vec<(String, String)>,
    pub w: Vec<String>,
    pub e: Vec<String>,
    pub c: Vec<String>,
}

/// A validated subexponential signature: a preordered finite index set with
/// upward-closed subsets `W`, `E`, `C` such that `W n C <= E`.
///
/// The preorder is stored reflexive-transitively closed; [`SubexpSignature::validate`]
/// closes the input relation itself and records which pairs the closure
/// added.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubexpSignature {
    indices: Vec<String>,
    preceq: Vec<bool>,
    w: Vec<bool>,
    e: Vec<bool>,
    c: Vec<bool>,
    closure_added: Vec<(usize, usize)>,
}

impl SubexpSignature {
    /// Validates `raw`, reflexive-transitively closing the supplied relation.
    pub fn validate(raw: &RawSignature) -> Result<Self, SignatureError> {
        Self::build(raw, false)
    }

    /// Like [`validate`](Self::validate) but rejects relations that are not
    /// already preorders instead of closing them.
    pub fn validate_strict(raw: &RawSignature) -> Result<Self, SignatureError> {
        Self::build(raw, true)
    }

    fn build(raw: &RawSignature, strict: bool) -> Result<Self, SignatureError> {
        let n = raw.indices.len();
        for (k, name) in raw.indices.iter().enumerate() {
            if raw.indices[..k].contains(name) {
                return Err(SignatureError::DuplicateIndex(name.clone()));
            }
        }
        let find = |name: &String, context: &'static str| {
            raw.indices
                .iter()
                .position(|x| x == name)
                .ok_or(SignatureError::UnknownIndex { name: name.clone(), context })
        };

        let mut preceq = vec![false; n * n];
        for i in 0..n {
            preceq[i * n + i] = true;
        }
        for (a, b) in &raw.preceq {
            let ia = find(a, "preceq")?;
            let ib = find(b, "preceq")?;
            preceq[ia * n + ib] = true;
        }
        let supplied = preceq.clone();
        transitive_close(n, &mut preceq);
        let mut closure_added = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if preceq[i * n + j] && !supplied[i * n + j] {
                    closure_added.push((i, j));
                }
            }
        }
        if strict {
            if let Some(&(i, j)) = closure_added.first() {
                return Err(SignatureError::NotPreorder {
                    missing: (raw.indices[i].clone(), raw.indices[j].clone()),
                });
            }
        }

        let mark = |names: &[String], context: &'static str| -> Result<Vec<bool>, SignatureError> {
            let mut v = vec![false; n];
            for name in names {
                v[find(name, context)?] = true;
            }
            Ok(v)
        };
        let w = mark(&raw.w, "W")?;
        let e = mark(&raw.e, "E")?;
        let c = mark(&raw.c, "C")?;

        for (set, v) in [
            (StructuralSet::Weakening, &w),
            (StructuralSet::Exchange, &e),
            (StructuralSet::Contraction, &c),
        ] {
            for i in 0..n {
                if !v[i] {
                    continue;
                }
                for j in 0..n {
                    if preceq[i * n + j] && !v[j] {
                        return Err(SignatureError::NotUpwardClosed {
                            set,
                            member: raw.indices[i].clone(),
                            above: raw.indices[j].clone(),
                        });
                    }
                }
            }
        }
        for i in 0..n {
            if w[i] && c[i] && !e[i] {
                return Err(SignatureError::WCNotInE { index: raw.indices[i].clone() });
            }
        }

        Ok(SubexpSignature { indices: raw.indices.clone(), preceq, w, e, c, closure_added })
    }

    /// The empty signature (the plain distributive full Lambek fragment).
    pub fn empty() -> Self {
        SubexpSignature {
            indices: Vec::new(),
            preceq: Vec::new(),
            w: Vec::new(),
            e: Vec::new(),
            c: Vec::new(),
            closure_added: Vec::new(),
        }
    }

    /// One index, discrete order, no structural sets.
    pub fn trivial(name: &str) -> Self {
        SubexpSignature::validate(&RawSignature {
            indices: vec![name.to_string()],
            ..RawSignature::default()
        })
        .expect("one-point signature is valid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_names(&self) -> &[String] {
        &self.indices
    }

    pub fn name(&self, i: usize) -> &str {
        &self.indices[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.indices.iter().position(|x| x == name)
    }

    #[inline]
    pub fn le(&self, i: usize, j: usize) -> bool {
        self.preceq[i * self.len() + j]
    }

    pub fn le_names(&self, a: &str, b: &str) -> Option<bool> {
        Some(self.le(self.index_of(a)?, self.index_of(b)?))
    }

    #[inline]
    pub fn in_w(&self, i: usize) -> bool {
        self.w[i]
    }

    #[inline]
    pub fn in_e(&self, i: usize) -> bool {
        self.e[i]
    }

    #[inline]
    pub fn in_c(&self, i: usize) -> bool {
        self.c[i]
    }

    /// Pairs the reflexive-transitive closure added to the supplied relation.
    pub fn closure_added(&self) -> &[(usize, usize)] {
        &self.closure_added
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn raw(
        indices: &[&str],
        preceq: &[(&str, &str)],
        w: &[&str],
        e: &[&str],
        c: &[&str],
    ) -> RawSignature {
        RawSignature {
            indices: indices.iter().map(|s| s.to_string()).collect(),
            preceq: preceq.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            w: w.iter().map(|s| s.to_string()).collect(),
            e: e.iter().map(|s| s.to_string()).collect(),
            c: c.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn one_point_signature_is_valid() {
        let sig = SubexpSignature::validate(&raw(&["a"], &[("a", "a")], &[], &[], &[])).unwrap();
        assert_eq!(sig.len(), 1);
        assert!(sig.le(0, 0));
        assert!(sig.closure_added().is_empty());
    }

    #[test]
    fn upward_closure_violation_is_reported() {
        let err = SubexpSignature::validate(&raw(&["a", "b"], &[("a", "b")], &["a"], &[], &[]))
            .unwrap_err();
        assert_eq!(
            err,
            SignatureError::NotUpwardClosed {
                set: StructuralSet::Weakening,
                member: "a".to_string(),
                above: "b".to_string(),
            }
        );
    }

    #[test]
    fn w_and_c_must_lie_in_e() {
        let err =
            SubexpSignature::validate(&raw(&["a"], &[], &["a"], &[], &["a"])).unwrap_err();
        assert_eq!(err, SignatureError::WCNotInE { index: "a".to_string() });
    }

    #[test]
    fn closure_is_computed_and_reported() {
        let sig = SubexpSignature::validate(&raw(
            &["a", "b", "c"],
            &[("a", "b"), ("b", "c")],
            &[],
            &[],
            &[],
        ))
        .unwrap();
        assert!(sig.le(0, 2), "transitive closure adds a preceq c");
        assert_eq!(sig.closure_added(), &[(0, 2)]);

        let err = SubexpSignature::validate_strict(&raw(
            &["a", "b", "c"],
            &[("a", "b"), ("b", "c")],
            &[],
            &[],
            &[],
        ))
        .unwrap_err();
        assert_eq!(err, SignatureError::NotPreorder { missing: ("a".to_string(), "c".to_string()) });
    }

    #[test]
    fn upward_closing_inputs_always_validates() {
        // Closing W, E, C upward and adding W n C to E repairs any raw choice
        // of subsets.
        let indices = ["a", "b", "c"];
        let pre = [("a", "b")];
        for wbits in 0..8u8 {
            for ebits in 0..8u8 {
                for cbits in 0..8u8 {
                    let pick = |bits: u8| -> Vec<&str> {
                        indices.iter().enumerate().filter(|(k, _)| bits & (1 << k) != 0).map(|(_, s)| *s).collect()
                    };
                    let up = |mut xs: Vec<&'static str>| -> Vec<&'static str> {
                        if xs.contains(&"a") && !xs.contains(&"b") {
                            xs.push("b");
                        }
                        xs
                    };
                    let w = up(pick(wbits));
                    let c = up(pick(cbits));
                    let mut e = up(pick(ebits));
                    for x in &w {
                        if c.contains(x) && !e.contains(x) {
                            e.push(x);
                        }
                    }
                    let r = raw(&indices, &pre, &w, &e, &c);
                    assert!(SubexpSignature::validate(&r).is_ok(), "{r:?}");
                }
            }
        }
    }

    #[test]
    fn unknown_and_duplicate_indices_are_rejected() {
        assert!(matches!(
            SubexpSignature::validate(&raw(&["a"], &[("a", "z")], &[], &[], &[])),
            Err(SignatureError::UnknownIndex { .. })
        ));
        assert!(matches!(
            SubexpSignature::validate(&raw(&["a", "a"], &[], &[], &[], &[])),
            Err(SignatureError::DuplicateIndex(_))
        ));
    }
}
