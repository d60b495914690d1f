//! The discrete Heisenberg group `<a, b, c | c = aba⁻¹b⁻¹, ca = ac, cb = bc>`
//! and its group algebra.
//!
//! Group elements have the normal form `a^i b^j c^k`. Pushing `b` past `a`
//! costs a central factor: `ba = ab c⁻¹`, so
//! `(i, j, k)(i', j', k') = (i + i', j + j', k + k' - j i')`.

mod harper;
mod roots;

use std::sync::Arc;

use num_complex::Complex64;

pub use harper::{
    butterfly, butterfly_csv, farey_fractions, harper_edges, harper_matrix, harper_norm,
    harper_norm_chambers, irrep, ButterflyRecord, HarperEdges, HarperParams,
};
pub(crate) use harper::{gcd, sig12};
pub use roots::{root_projection, root_rep, roots_hull, HullVertex};

use crate::freealg::{FreePoly, MatrixTuple, Signature, Word};
use crate::linalg::{self, CMat};

/// Generators and their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HLetter {
    A,
    AInv,
    B,
    BInv,
    C,
    CInv,
}

impl HLetter {
    pub const ALL: [HLetter; 6] =
        [HLetter::A, HLetter::AInv, HLetter::B, HLetter::BInv, HLetter::C, HLetter::CInv];

    pub fn inverse(self) -> HLetter {
        match self {
            HLetter::A => HLetter::AInv,
            HLetter::AInv => HLetter::A,
            HLetter::B => HLetter::BInv,
            HLetter::BInv => HLetter::B,
            HLetter::C => HLetter::CInv,
            HLetter::CInv => HLetter::C,
        }
    }

    fn element(self) -> HeisenbergWord {
        let (i, j, k) = match self {
            HLetter::A => (1, 0, 0),
            HLetter::AInv => (-1, 0, 0),
            HLetter::B => (0, 1, 0),
            HLetter::BInv => (0, -1, 0),
            HLetter::C => (0, 0, 1),
            HLetter::CInv => (0, 0, -1),
        };
        HeisenbergWord::new(i, j, k)
    }

    /// Letter of the `a, b, c` signature; inverses are the starred letters
    /// since the generators are unitary.
    pub fn free_letter(self) -> u32 {
        match self {
            HLetter::A => 0,
            HLetter::B => 1,
            HLetter::C => 2,
            HLetter::AInv => 3,
            HLetter::BInv => 4,
            HLetter::CInv => 5,
        }
    }

    pub fn from_free_letter(l: u32) -> Option<HLetter> {
        Some(match l {
            0 => HLetter::A,
            1 => HLetter::B,
            2 => HLetter::C,
            3 => HLetter::AInv,
            4 => HLetter::BInv,
            5 => HLetter::CInv,
            _ => return None,
        })
    }
}

/// Normal form `phase · a^i b^j c^k`. Over the group the phase is 1; it only
/// picks up values when words are pushed through a representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergWord {
    pub i: i64,
    pub j: i64,
    pub k: i64,
    pub phase: Complex64,
}

impl HeisenbergWord {
    pub fn new(i: i64, j: i64, k: i64) -> Self {
        HeisenbergWord { i, j, k, phase: linalg::ONE }
    }

    pub fn identity() -> Self {
        Self::new(0, 0, 0)
    }

    pub fn exponents(&self) -> (i64, i64, i64) {
        (self.i, self.j, self.k)
    }

    pub fn mul(&self, o: &HeisenbergWord) -> HeisenbergWord {
        HeisenbergWord {
            i: self.i + o.i,
            j: self.j + o.j,
            k: self.k + o.k - self.j * o.i,
            phase: self.phase * o.phase,
        }
    }

    pub fn inverse(&self) -> HeisenbergWord {
        HeisenbergWord {
            i: -self.i,
            j: -self.j,
            k: -self.k - self.i * self.j,
            phase: self.phase.conj() / self.phase.norm_sqr(),
        }
    }

    /// Canonical letter sequence `a^i b^j c^k` in the `a, b, c` signature.
    pub fn to_free_word(&self) -> Word {
        let mut v = Vec::with_capacity((self.i.abs() + self.j.abs() + self.k.abs()) as usize);
        let push = |v: &mut Vec<u32>, e: i64, pos: HLetter| {
            let l = if e >= 0 { pos.free_letter() } else { pos.inverse().free_letter() };
            v.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
        };
        push(&mut v, self.i, HLetter::A);
        push(&mut v, self.j, HLetter::B);
        push(&mut v, self.k, HLetter::C);
        Word(v)
    }

    /// Image under a representation given by the matrices of `a, b, c`.
    pub fn evaluate(&self, rep: &MatrixTuple) -> CMat {
        let pow = |m: &CMat, e: i64| -> CMat {
            let base = if e >= 0 { m.clone() } else { m.adjoint() };
            let mut acc = linalg::identity(m.nrows());
            for _ in 0..e.unsigned_abs() {
                acc *= &base;
            }
            acc
        };
        pow(rep.get(0), self.i) * pow(rep.get(1), self.j) * pow(rep.get(2), self.k) * self.phase
    }
}

/// Reduces a word in the generators and their inverses to normal form.
pub fn normal_form(letters: &[HLetter]) -> HeisenbergWord {
    letters.iter().fold(HeisenbergWord::identity(), |acc, l| acc.mul(&l.element()))
}

/// Normal form of a word in the `a, b, c` signature (starred letters are
/// inverses).
pub fn normal_form_free(w: &Word) -> HeisenbergWord {
    let letters: Vec<HLetter> = w
        .letters()
        .iter()
        .map(|&l| HLetter::from_free_letter(l).expect("letter of the a, b, c signature"))
        .collect();
    normal_form(&letters)
}

/// Canonical representative of a word modulo the group relations.
pub fn reduce_word(w: &Word) -> Word {
    normal_form_free(w).to_free_word()
}

/// The signature `a, b, c` with all three letters non-hermitian.
pub fn signature() -> Arc<Signature> {
    Signature::named(&["a", "b", "c"], false)
}

/// `a + a* + b + b*` in the group algebra.
pub fn harper_element(sig: &Arc<Signature>) -> FreePoly {
    let mut p = FreePoly::zero(sig);
    for v in 0..2 {
        p = &(&p + &FreePoly::var(sig, v)) + &FreePoly::var_star(sig, v);
    }
    p
}

/// Hermitian coordinates `(c + c*)/2` and `(c - c*)/(2i)` of the center.
pub fn center_coordinates(sig: &Arc<Signature>) -> [FreePoly; 2] {
    let c = FreePoly::var(sig, 2);
    let cs = FreePoly::var_star(sig, 2);
    let half = Complex64::new(0.5, 0.0);
    [(&c + &cs).scale(half), (&c - &cs).scale(Complex64::new(0.0, -0.5))]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_letters(rng: &mut ChaCha8Rng, len: usize) -> Vec<HLetter> {
        (0..len).map(|_| HLetter::ALL[rng.random_range(0..6)]).collect()
    }

    #[test]
    fn defining_relation() {
        use HLetter::*;
        // ab (ba)^{-1} = a b a^{-1} b^{-1} = c
        assert_eq!(normal_form(&[A, B, AInv, BInv]), HeisenbergWord::new(0, 0, 1));
    }

    #[test]
    fn one_rewrite_step() {
        use HLetter::*;
        assert_eq!(normal_form(&[A, B]).exponents(), (1, 1, 0));
        assert_eq!(normal_form(&[B, A]).exponents(), (1, 1, -1));
    }

    #[test]
    fn center_commutes() {
        use HLetter::*;
        assert_eq!(normal_form(&[C, A, B]), normal_form(&[A, B, C]));
        assert_eq!(normal_form(&[C, BInv]), normal_form(&[BInv, C]));
    }

    #[test]
    fn normal_form_is_confluent_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let lu = rng.random_range(0..9);
            let lv = rng.random_range(0..9);
            let u = random_letters(&mut rng, lu);
            let v = random_letters(&mut rng, lv);
            let uv: Vec<HLetter> = u.iter().chain(v.iter()).copied().collect();
            assert_eq!(normal_form(&uv), normal_form(&u).mul(&normal_form(&v)));
        }
    }

    #[test]
    fn inverse_and_free_word_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let u = random_letters(&mut rng, 7);
            let g = normal_form(&u);
            assert_eq!(g.mul(&g.inverse()), HeisenbergWord::identity());
            assert_eq!(normal_form_free(&g.to_free_word()), g);
        }
    }

    #[test]
    fn exact_normal_forms_agree_with_letter_evaluation() {
        // c as the derived commutator (exact mode) and as its own letter
        // (ideal-relation mode) give the same matrices in an irrep.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sig = signature();
        let rep = irrep(2, 5, 0.3, 1.1).unwrap();
        for _ in 0..50 {
            let u = random_letters(&mut rng, 6);
            let w = Word(u.iter().map(|l| l.free_letter()).collect());
            let direct = FreePoly::monomial(&sig, w, linalg::ONE).evaluate(&rep).unwrap();
            let nf = normal_form(&u).evaluate(&rep);
            assert!(linalg::max_abs_diff(&direct, &nf) < 1e-12);
        }
    }
}
