use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freealg::{parse_poly, FreePoly, Signature, Word};
use crate::linalg::{self, CMat};

use super::{Generator, ModuleDescription, ModuleKind, PolyMatrix, Reduction};

/// JSON form of a module.
///
/// ```json
/// {
///   "name": "disc",
///   "signature": { "names": ["z"], "hermitian": [false] },
///   "generators": [{ "kind": "scalar", "poly": "1 - z^* * z" }],
///   "relations": [],
///   "reduction": "none",
///   "archimedean_bound": 1.0
/// }
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModuleFile {
    #[serde(default)]
    pub name: Option<String>,
    pub signature: SignatureSpec,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub relations: Vec<String>,
    #[serde(default)]
    pub reduction: Option<String>,
    #[serde(default)]
    pub archimedean_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    pub names: Vec<String>,
    pub hermitian: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Scalar { poly: String },
    Pencil { matrix: Vec<Vec<String>> },
}

impl ModuleFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("module file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("module file serializes")
    }

    pub fn into_description(self) -> Result<ModuleDescription> {
        if self.signature.names.len() != self.signature.hermitian.len() {
            return Err(Error::InvalidInput("signature names and hermitian flags differ in length".into()));
        }
        let sig = Signature::new(self.signature.names.clone(), self.signature.hermitian.clone())?;
        let mut gens = Vec::new();
        for g in &self.generators {
            gens.push(match g {
                GeneratorSpec::Scalar { poly } => Generator::Scalar(parse_poly(&sig, poly)?),
                GeneratorSpec::Pencil { matrix } => {
                    let s = matrix.len();
                    let mut entries = Vec::with_capacity(s * s);
                    for row in matrix {
                        if row.len() != s {
                            return Err(Error::DimensionMismatch("pencil matrix is not square".into()));
                        }
                        for e in row {
                            entries.push(parse_poly(&sig, e)?);
                        }
                    }
                    Generator::Pencil(PolyMatrix::new(s, entries)?)
                }
            });
        }
        for r in &self.relations {
            gens.push(Generator::Ideal(parse_poly(&sig, r)?));
        }
        let reduction = match &self.reduction {
            Some(r) => Reduction::from_name(r)?,
            None => Reduction::None,
        };
        let mut m = ModuleDescription::new(
            self.name.clone().unwrap_or_else(|| "custom".into()),
            sig,
            gens,
            reduction,
            self.archimedean_bound,
        )?;
        if let Some(mats) = monic_linear_pencil(&m) {
            m.kind = ModuleKind::Pencil(mats);
            m.rfd = true;
        }
        Ok(m)
    }

    pub fn from_description(m: &ModuleDescription) -> Self {
        let mut generators = Vec::new();
        let mut relations = Vec::new();
        for g in &m.generators {
            match g {
                Generator::Scalar(p) => generators.push(GeneratorSpec::Scalar { poly: p.to_string() }),
                Generator::Pencil(l) => generators.push(GeneratorSpec::Pencil {
                    matrix: (0..l.size())
                        .map(|a| (0..l.size()).map(|b| l.get(a, b).to_string()).collect())
                        .collect(),
                }),
                Generator::Ideal(r) => relations.push(r.to_string()),
            }
        }
        ModuleFile {
            name: Some(m.name.clone()),
            signature: SignatureSpec {
                names: m.sig.names().to_vec(),
                hermitian: m.sig.hermitian_flags().to_vec(),
            },
            generators,
            relations,
            reduction: Some(m.reduction.name().to_string()),
            archimedean_bound: m.archimedean_bound,
        }
    }
}

/// Recognizes a single generator of the form `I + Σ M_i z_i` over hermitian
/// variables, so custom pencils get the pencil sampler.
fn monic_linear_pencil(m: &ModuleDescription) -> Option<Vec<CMat>> {
    let [Generator::Pencil(l)] = m.generators.as_slice() else { return None };
    if !m.sig.hermitian_flags().iter().all(|&h| h) || l.degree() > 1 {
        return None;
    }
    let s = l.size();
    let mut mats = vec![CMat::zeros(s, s); m.sig.nvars()];
    for a in 0..s {
        for b in 0..s {
            let p: &FreePoly = l.get(a, b);
            let c = p.coeff(&Word::unit());
            let want = if a == b { linalg::ONE } else { linalg::ZERO };
            if (c - want).norm() > super::GENERATOR_HERM_TOL {
                return None;
            }
            for (i, mat) in mats.iter_mut().enumerate() {
                mat[(a, b)] = p.coeff(&Word::letter(i as u32));
            }
        }
    }
    Some(mats)
}
