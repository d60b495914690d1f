//! Plain-text problem dump for cross-checking against other solvers.
//!
//! One record per line, whitespace separated, `#` starts a comment:
//!
//! ```text
//! blocks <n_1> ... <n_r>          Hermitian block sizes
//! free <n_f>                      number of free real variables
//! objective                       present only for optimization problems
//! o <block> <i> <j> <re> <im>     objective entry C[i, j], i <= j
//! of <j> <value>                  objective coefficient of free variable j
//! c <k> <rhs>                     constraint k, in order 0, 1, ...
//! a <k> <block> <i> <j> <re> <im> entry A_k[i, j], i <= j
//! f <k> <j> <value>               coefficient of free variable j in constraint k
//! ```
//!
//! Entries below the diagonal are implied by Hermitian symmetry. Constraint
//! `k` reads `tr(A_k G) + Σ_j f_kj x_j = rhs_k`; numbers use Rust's
//! shortest round-trip formatting.

use std::fmt::Write;

use num_complex::Complex64;

use super::{Constraint, HermEntry, Objective, SdpProblem};
use crate::error::{Error, Result};

pub fn write_dump(p: &SdpProblem) -> String {
    let mut s = String::new();
    let dims: Vec<String> = p.blocks.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "blocks {}", dims.join(" "));
    let _ = writeln!(s, "free {}", p.num_free);
    if let Some(o) = &p.objective {
        let _ = writeln!(s, "objective");
        for e in &o.c.entries {
            let _ = writeln!(s, "o {} {} {} {} {}", e.block, e.row, e.col, e.value.re, e.value.im);
        }
        for &(j, v) in &o.free {
            let _ = writeln!(s, "of {j} {v}");
        }
    }
    for (k, c) in p.constraints.iter().enumerate() {
        let _ = writeln!(s, "c {k} {}", c.rhs);
        for e in &c.a.entries {
            let _ = writeln!(s, "a {k} {} {} {} {} {}", e.block, e.row, e.col, e.value.re, e.value.im);
        }
        for &(j, v) in &c.free {
            let _ = writeln!(s, "f {k} {j} {v}");
        }
    }
    s
}

pub fn read_dump(text: &str) -> Result<SdpProblem> {
    let mut p = SdpProblem::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { pos: ln + 1, msg: format!("{msg}: `{line}`") };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let int = |i: usize| -> Result<usize> {
            toks.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| err("expected an integer"))
        };
        let num = |i: usize| -> Result<f64> {
            toks.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| err("expected a number"))
        };
        let entry = |o: usize| -> Result<HermEntry> {
            Ok(HermEntry { block: int(o)?, row: int(o + 1)?, col: int(o + 2)?, value: Complex64::new(num(o + 3)?, num(o + 4)?) })
        };
        match toks[0] {
            "blocks" => p.blocks = (1..toks.len()).map(int).collect::<Result<_>>()?,
            "free" => p.num_free = int(1)?,
            "objective" => p.objective = Some(Objective::default()),
            "o" => p.objective.as_mut().ok_or_else(|| err("objective entry before `objective`"))?.c.entries.push(entry(1)?),
            "of" => {
                let o = p.objective.as_mut().ok_or_else(|| err("objective entry before `objective`"))?;
                o.free.push((int(1)?, num(2)?));
            }
            "c" => {
                if int(1)? != p.constraints.len() {
                    return Err(err("constraints must be numbered in order"));
                }
                p.constraints.push(Constraint::new(num(2)?));
            }
            "a" | "f" => {
                let k = int(1)?;
                let c = p.constraints.get_mut(k).ok_or_else(|| err("unknown constraint"))?;
                if toks[0] == "a" {
                    c.a.entries.push(entry(2)?);
                } else {
                    c.free.push((int(2)?, num(3)?));
                }
            }
            _ => return Err(err("unknown record")),
        }
    }
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = Constraint::new(0.1 + 0.2);
        c.a.add_functional(1, 2, 0, Complex64::new(1.0 / 3.0, -2.5e-7));
        c.a.push(0, 0, 0, Complex64::new(1.0, 0.0));
        c.free.push((0, -1.0));
        let mut o = Objective::default();
        o.c.push(1, 1, 1, Complex64::new(2.0, 0.0));
        o.free.push((0, 0.5));
        let p = SdpProblem { blocks: vec![1, 3], constraints: vec![c], num_free: 1, objective: Some(o) };
        let text = write_dump(&p);
        assert_eq!(read_dump(&text).unwrap(), p);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_dump("blocks 2\nc 1 0\n").is_err());
        assert!(read_dump("blocks 2\nzz\n").is_err());
    }
}
