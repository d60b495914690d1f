use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freealg::{monomial_basis, FreePoly, Signature, Word};

use super::{Generator, ModuleDescription, Reduction, ReductionMode};

/// Gram block `Σ_{ij} G_ij w_i* g w_j` for one positive generator (or for the
/// sums of squares when `generator` is `None`). Rows are indexed by
/// `(word, pencil row)` as `word_index * size + row`.
#[derive(Clone, Debug)]
pub struct PlannedBlock {
    pub generator: Option<usize>,
    pub words: Vec<Word>,
    pub size: usize,
}

impl PlannedBlock {
    pub fn dim(&self) -> usize {
        self.words.len() * self.size
    }
}

/// Free multipliers `y_uv` for `y·u r v + conj(y)·(u r v)*`.
#[derive(Clone, Debug)]
pub struct PlannedIdeal {
    pub generator: usize,
    /// Relation after reduction.
    pub relation: FreePoly,
    pub words: Vec<Word>,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct TruncationPlan {
    pub d: usize,
    pub reduction: Reduction,
    pub blocks: Vec<PlannedBlock>,
    pub ideals: Vec<PlannedIdeal>,
    /// Relations that vanish under the reduction or exceed degree `d`.
    pub dropped_relations: Vec<usize>,
}

impl TruncationPlan {
    pub fn gram_dim(&self) -> usize {
        self.blocks.iter().map(PlannedBlock::dim).sum()
    }

    pub fn num_ideal_pairs(&self) -> usize {
        self.ideals.iter().map(|i| i.pairs.len()).sum()
    }
}

fn reduced_words(sig: &Signature, red: Reduction, k: usize) -> Vec<Word> {
    let set: BTreeSet<Word> = monomial_basis(sig, k).iter().map(|w| red.reduce_word(sig, w)).collect();
    set.into_iter().collect()
}

/// Plans the degree-`d` truncation `Q_d` of a module.
pub fn truncate(module: &ModuleDescription, d: usize, mode: ReductionMode) -> Result<TruncationPlan> {
    let need = module.max_generator_degree();
    if d < need {
        return Err(Error::DegreeTooSmall { d, need });
    }
    let sig = &module.sig;
    let red = module.reduction_for(mode);
    let mut blocks = vec![PlannedBlock { generator: None, words: reduced_words(sig, red, d / 2), size: 1 }];
    let mut ideals = Vec::new();
    let mut dropped = Vec::new();

    for (gi, g) in module.generators.iter().enumerate() {
        let e = g.degree();
        match g {
            Generator::Scalar(_) | Generator::Pencil(_) => {
                let words = reduced_words(sig, red, (d - e) / 2);
                blocks.push(PlannedBlock { generator: Some(gi), words, size: g.size() });
            }
            Generator::Ideal(r) => {
                let r = red.reduce(r);
                if r.is_zero() || e > d {
                    dropped.push(gi);
                    continue;
                }
                ideals.push(plan_ideal(sig, red, gi, r, d - e));
            }
        }
    }
    Ok(TruncationPlan { d, reduction: red, blocks, ideals, dropped_relations: dropped })
}

fn plan_ideal(sig: &Signature, red: Reduction, gi: usize, r: FreePoly, k: usize) -> PlannedIdeal {
    let raw = monomial_basis(sig, k);
    let mut index: HashMap<Word, usize> = HashMap::new();
    let mut words: Vec<Word> = Vec::new();
    let mut id = |w: Word| -> usize {
        *index.entry(w.clone()).or_insert_with(|| {
            words.push(w);
            words.len() - 1
        })
    };
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut keyed: Vec<((Word, Word), (usize, usize))> = Vec::new();
    for u in &raw {
        for v in raw.iter().take_while(|v| v.degree() + u.degree() <= k) {
            let ru = red.reduce_word(sig, u);
            let rv = red.reduce_word(sig, v);
            let p = (id(ru.clone()), id(rv.clone()));
            if pairs.insert(p) {
                keyed.push(((ru, rv), p));
            }
        }
    }
    // For hermitian r the pair (v*, u*) yields the same hermitian part as
    // (u, v), so only one of them is kept.
    let mut kept = Vec::with_capacity(keyed.len());
    if r.is_hermitian(super::GENERATOR_HERM_TOL) {
        let mut seen: BTreeSet<(Word, Word)> = BTreeSet::new();
        for ((u, v), p) in keyed {
            let mirror = (red.reduce_word(sig, &v.adjoint(sig)), red.reduce_word(sig, &u.adjoint(sig)));
            if seen.contains(&mirror) {
                continue;
            }
            seen.insert((u, v));
            kept.push(p);
        }
    } else {
        kept = keyed.into_iter().map(|(_, p)| p).collect();
    }
    PlannedIdeal { generator: gi, relation: r, words, pairs: kept }
}

/// Nonzero contributions `(row, col, word, coeff)` of the localizing block
/// `[reduce(w_i* L_ab w_j)]`; the same `(row, col, word)` may appear more
/// than once and callers should sum.
pub fn localizing_block(
    module: &ModuleDescription,
    block: &PlannedBlock,
    reduction: Reduction,
) -> Vec<(usize, usize, Word, Complex64)> {
    let sig = &module.sig;
    let s = block.size;
    let unit = FreePoly::one(sig);
    let entry = |a: usize, b: usize| -> &FreePoly {
        match block.generator.map(|g| &module.generators[g]) {
            None => &unit,
            Some(Generator::Scalar(p)) => p,
            Some(Generator::Pencil(m)) => m.get(a, b),
            Some(Generator::Ideal(_)) => unreachable!("ideal generators have no Gram block"),
        }
    };
    let adj: Vec<Word> = block.words.iter().map(|w| w.adjoint(sig)).collect();
    let mut out = Vec::new();
    for (i, wi) in adj.iter().enumerate() {
        for a in 0..s {
            for (j, wj) in block.words.iter().enumerate() {
                for b in 0..s {
                    for (u, &c) in entry(a, b).terms() {
                        let w = reduction.reduce_word(sig, &Word::concat3(wi, u, wj));
                        out.push((i * s + a, j * s + b, w, c));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::Signature;
    use crate::qmodule::{ball_module, cube_module, group_module, sos_module, BallKind, GroupPreset};

    #[test]
    fn sos_block_sizes() {
        let m = sos_module(Signature::hermitian(2));
        let p = truncate(&m, 4, ReductionMode::Exact).unwrap();
        assert_eq!(p.blocks.len(), 1);
        assert_eq!(p.gram_dim(), 7);
        let p3 = truncate(&m, 3, ReductionMode::Exact).unwrap();
        assert_eq!(p3.gram_dim(), 3);
    }

    #[test]
    fn generator_blocks_shrink_with_degree() {
        let m = ball_module(BallKind::RowBall { n: 1, hermitian: false }).unwrap();
        let p = truncate(&m, 4, ReductionMode::Exact).unwrap();
        assert_eq!(p.blocks[0].words.len(), 7);
        assert_eq!(p.blocks[1].words.len(), 3);
        assert!(matches!(truncate(&m, 1, ReductionMode::Exact), Err(Error::DegreeTooSmall { d: 1, need: 2 })));
    }

    #[test]
    fn pencil_block_has_row_multiplicity() {
        let m = cube_module(2).unwrap();
        let p = truncate(&m, 2, ReductionMode::Exact).unwrap();
        assert_eq!(p.blocks[1].size, 4);
        assert_eq!(p.blocks[1].dim(), 4);
        let e = localizing_block(&m, &p.blocks[1], p.reduction);
        // diag(1 - z1, 1 + z1, 1 - z2, 1 + z2): 4 constants plus 4 linear terms.
        assert_eq!(e.len(), 8);
    }

    #[test]
    fn exact_mode_drops_vanishing_relations() {
        let m = group_module(GroupPreset::FreeGroup(2)).unwrap();
        let p = truncate(&m, 2, ReductionMode::Exact).unwrap();
        assert!(p.ideals.is_empty());
        assert_eq!(p.dropped_relations.len(), 4);
        // Reduced words of length <= 1: 1, z1, z2, z1*, z2*.
        assert_eq!(p.blocks[0].words.len(), 5);
        let q = truncate(&m, 2, ReductionMode::IdealPairs).unwrap();
        assert_eq!(q.ideals.len(), 4);
        assert!(q.ideals.iter().all(|i| i.pairs == vec![(0, 0)]));
    }

    #[test]
    fn heisenberg_words_are_normal_forms() {
        let m = group_module(GroupPreset::Heisenberg).unwrap();
        let p = truncate(&m, 4, ReductionMode::Exact).unwrap();
        assert!(p.ideals.is_empty());
        for w in &p.blocks[0].words {
            assert_eq!(&crate::heisenberg::reduce_word(w), w);
        }
        assert_eq!(p.blocks[0].words.len(), 29);
    }

    #[test]
    fn hermitian_relation_pairs_are_not_doubled() {
        let m = crate::qmodule::isometry_module(1).unwrap();
        let p = truncate(&m, 3, ReductionMode::Exact).unwrap();
        // Pairs (u, v) with deg u + deg v <= 1, modulo (u, v) ~ (v*, u*):
        // (1,1), (1,z), (1,z*), and (z,1) ~ (1,z*), (z*,1) ~ (1,z).
        assert_eq!(p.ideals[0].pairs.len(), 3);
    }
}
