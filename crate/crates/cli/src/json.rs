//! On-disk document types and their conversions to the core structures.
//!
//! Documents are plain serde mirrors of the JSON formats; conversion into
//! core types is where validation happens, so a loaded file is always
//! checked by the same code paths the library uses.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use dsmalc_core::calculus::{Derivation, Instantiation, RuleId};
use dsmalc_core::frames::{Model, SigmaFrame, TernaryFrame};
use dsmalc_core::order::{lattice_from_poset, FiniteDistributiveLattice, FinitePoset};
use dsmalc_core::syntax::{parse_formula, parse_sequent, RawSignature, SubexpSignature};
use dsmalc_core::FiniteSigmaAlgebra;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigDoc {
    pub indices: Vec<String>,
    #[serde(default)]
    pub preceq: Vec<(String, String)>,
    #[serde(default, rename = "W")]
    pub w: Vec<String>,
    #[serde(default, rename = "E")]
    pub e: Vec<String>,
    #[serde(default, rename = "C")]
    pub c: Vec<String>,
}

impl SigDoc {
    pub fn to_raw(&self) -> RawSignature {
        RawSignature {
            indices: self.indices.clone(),
            preceq: self.preceq.clone(),
            w: self.w.clone(),
            e: self.e.clone(),
            c: self.c.clone(),
        }
    }

    pub fn to_core(&self) -> Result<SubexpSignature> {
        SubexpSignature::validate(&self.to_raw()).map_err(|e| anyhow!("invalid signature: {e}"))
    }

    pub fn from_core(sig: &SubexpSignature) -> SigDoc {
        let names = sig.index_names();
        let mut preceq = Vec::new();
        for i in 0..sig.len() {
            for j in 0..sig.len() {
                if i != j && sig.le(i, j) {
                    preceq.push((names[i].clone(), names[j].clone()));
                }
            }
        }
        let pick = |f: &dyn Fn(usize) -> bool| -> Vec<String> {
            (0..sig.len()).filter(|&i| f(i)).map(|i| names[i].clone()).collect()
        };
        SigDoc {
            indices: names.to_vec(),
            preceq,
            w: pick(&|i| sig.in_w(i)),
            e: pick(&|i| sig.in_e(i)),
            c: pick(&|i| sig.in_c(i)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosetDoc {
    pub n: usize,
    pub leq: Vec<Vec<bool>>,
}

impl PosetDoc {
    pub fn to_core(&self) -> Result<FinitePoset> {
        if self.leq.len() != self.n || self.leq.iter().any(|row| row.len() != self.n) {
            bail!("poset matrix must be {0} x {0}", self.n);
        }
        let flat: Vec<bool> = self.leq.iter().flatten().copied().collect();
        FinitePoset::new(self.n, flat).map_err(|e| anyhow!("invalid poset: {e}"))
    }

    pub fn to_lattice(&self) -> Result<FiniteDistributiveLattice> {
        lattice_from_poset(&self.to_core()?).map_err(|e| anyhow!("invalid lattice: {e}"))
    }

    pub fn from_core(p: &FinitePoset) -> PosetDoc {
        let n = p.len();
        PosetDoc {
            n,
            leq: (0..n).map(|x| (0..n).map(|y| p.le(x, y)).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub lattice: PosetDoc,
    pub prod: Vec<Vec<usize>>,
    pub unit: usize,
    pub bang: BTreeMap<String, Vec<usize>>,
    pub sig: SigDoc,
}

impl AlgebraDoc {
    pub fn to_core(&self) -> Result<FiniteSigmaAlgebra> {
        let lattice = self.lattice.to_lattice()?;
        let n = lattice.len();
        if self.prod.len() != n || self.prod.iter().any(|row| row.len() != n) {
            bail!("product table must be {n} x {n}");
        }
        let sig = self.sig.to_core()?;
        let mut bang = Vec::with_capacity(sig.len());
        for name in sig.index_names() {
            let table = self
                .bang
                .get(name)
                .with_context(|| format!("missing operator table for index '{name}'"))?;
            bang.push(table.clone());
        }
        for key in self.bang.keys() {
            if sig.index_of(key).is_none() {
                bail!("operator table for unknown index '{key}'");
            }
        }
        let prod: Vec<usize> = self.prod.iter().flatten().copied().collect();
        FiniteSigmaAlgebra::assemble(lattice, prod, self.unit, bang, sig)
            .map_err(|e| anyhow!("invalid algebra: {e}"))
    }

    pub fn from_core(a: &FiniteSigmaAlgebra) -> AlgebraDoc {
        let n = a.len();
        AlgebraDoc {
            lattice: PosetDoc::from_core(a.lattice().poset()),
            prod: (0..n).map(|x| (0..n).map(|y| a.prod(x, y)).collect()).collect(),
            unit: a.unit(),
            bang: a
                .sig()
                .index_names()
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), a.bang_table(i).to_vec()))
                .collect(),
            sig: SigDoc::from_core(a.sig()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameDoc {
    pub poset: PosetDoc,
    #[serde(rename = "R")]
    pub r: Vec<[usize; 3]>,
    #[serde(rename = "O")]
    pub o: Vec<usize>,
    #[serde(default, rename = "Ri")]
    pub ri: BTreeMap<String, Vec<[usize; 2]>>,
    pub sig: SigDoc,
}

impl FrameDoc {
    pub fn to_core(&self) -> Result<SigmaFrame> {
        let poset = self.poset.to_core()?;
        let n = poset.len();
        let sig = self.sig.to_core()?;
        let mut r = vec![false; n * n * n];
        for &[u, v, w] in &self.r {
            if u >= n || v >= n || w >= n {
                bail!("R triple ({u}, {v}, {w}) out of range");
            }
            r[(u * n + v) * n + w] = true;
        }
        let mut o = 0u64;
        for &w in &self.o {
            if w >= n {
                bail!("O world {w} out of range");
            }
            o |= 1 << w;
        }
        let mut ri = Vec::with_capacity(sig.len());
        for name in sig.index_names() {
            let pairs = self
                .ri
                .get(name)
                .with_context(|| format!("missing relation for index '{name}'"))?;
            let mut rel = vec![false; n * n];
            for &[u, w] in pairs {
                if u >= n || w >= n {
                    bail!("R[{name}] pair ({u}, {w}) out of range");
                }
                rel[u * n + w] = true;
            }
            ri.push(rel);
        }
        for key in self.ri.keys() {
            if sig.index_of(key).is_none() {
                bail!("relation for unknown index '{key}'");
            }
        }
        Ok(SigmaFrame { base: TernaryFrame { poset, r, o }, ri, sig })
    }

    pub fn from_core(f: &SigmaFrame) -> FrameDoc {
        let n = f.len();
        let mut r = Vec::new();
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    if f.base.r(u, v, w) {
                        r.push([u, v, w]);
                    }
                }
            }
        }
        let o: Vec<usize> = (0..n).filter(|&w| f.base.o & (1 << w) != 0).collect();
        let ri = f
            .sig
            .index_names()
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut pairs = Vec::new();
                for u in 0..n {
                    for w in 0..n {
                        if f.ri(i, u, w) {
                            pairs.push([u, w]);
                        }
                    }
                }
                (name.clone(), pairs)
            })
            .collect();
        FrameDoc {
            poset: PosetDoc::from_core(&f.base.poset),
            r,
            o,
            ri,
            sig: SigDoc::from_core(&f.sig),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub frame: FrameDoc,
    pub valuation: BTreeMap<String, Vec<usize>>,
}

impl ModelDoc {
    pub fn to_core(&self) -> Result<Model> {
        let frame = self.frame.to_core()?;
        let n = frame.len();
        let mut valuation = BTreeMap::new();
        for (var, worlds) in &self.valuation {
            let mut mask = 0u64;
            for &w in worlds {
                if w >= n {
                    bail!("valuation of '{var}' mentions world {w} out of range");
                }
                mask |= 1 << w;
            }
            valuation.insert(var.clone(), mask);
        }
        Model::new(frame, valuation).map_err(|e| anyhow!("invalid model: {e}"))
    }

    pub fn from_core(m: &Model) -> ModelDoc {
        let n = m.frame.len();
        ModelDoc {
            frame: FrameDoc::from_core(&m.frame),
            valuation: m
                .valuation
                .iter()
                .map(|(var, &mask)| {
                    (var.clone(), (0..n).filter(|&w| mask & (1 << w) != 0).collect())
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivationDoc {
    pub rule: String,
    pub conclusion: String,
    #[serde(default)]
    pub inst: BTreeMap<String, String>,
    #[serde(default)]
    pub premises: Vec<DerivationDoc>,
}

impl DerivationDoc {
    pub fn to_core(&self, sig: &SubexpSignature) -> Result<Derivation> {
        let rule = RuleId::from_name(&self.rule)
            .with_context(|| format!("unknown rule '{}'", self.rule))?;
        let conclusion = parse_sequent(&self.conclusion, sig)
            .map_err(|e| anyhow!("in conclusion '{}': {e}", self.conclusion))?;
        let mut inst = Instantiation::default();
        for (key, value) in &self.inst {
            match key.as_str() {
                "i" | "j" | "k" => {
                    inst.indices.insert(key.clone(), value.clone());
                }
                "var" => inst.subst_var = Some(value.clone()),
                "theta" => {
                    inst.subst_with = Some(
                        parse_formula(value, sig)
                            .map_err(|e| anyhow!("in theta '{value}': {e}"))?,
                    )
                }
                _ => {
                    inst.formulas.insert(
                        key.clone(),
                        parse_formula(value, sig)
                            .map_err(|e| anyhow!("in inst['{key}'] = '{value}': {e}"))?,
                    );
                }
            }
        }
        let premises = self
            .premises
            .iter()
            .map(|p| p.to_core(sig))
            .collect::<Result<Vec<_>>>()?;
        Ok(Derivation { conclusion, rule, inst, premises })
    }

    pub fn from_core(d: &Derivation) -> DerivationDoc {
        let mut inst = BTreeMap::new();
        for (k, v) in &d.inst.formulas {
            inst.insert(k.clone(), v.to_string());
        }
        for (k, v) in &d.inst.indices {
            inst.insert(k.clone(), v.clone());
        }
        if let Some(var) = &d.inst.subst_var {
            inst.insert("var".into(), var.clone());
        }
        if let Some(theta) = &d.inst.subst_with {
            inst.insert("theta".into(), theta.to_string());
        }
        DerivationDoc {
            rule: d.rule.name().to_string(),
            conclusion: d.conclusion.to_string(),
            inst,
            premises: d.premises.iter().map(DerivationDoc::from_core).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountermodelDoc {
    pub model: ModelDoc,
    pub sequent: String,
    pub witness_world: usize,
}

impl CountermodelDoc {
    pub fn from_core(cm: &dsmalc_core::search::Countermodel) -> CountermodelDoc {
        CountermodelDoc {
            model: ModelDoc::from_core(&cm.model),
            sequent: cm.sequent.to_string(),
            witness_world: cm.witness_world,
        }
    }
}
