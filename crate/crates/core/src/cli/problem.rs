//! Problem files: one query with its module, target and parameters.
//!
//! ```json
//! {
//!   "query": "norm",
//!   "module": { "preset": "free_group:2" },
//!   "poly": "z1 + z1^* + z2 + z2^*",
//!   "params": { "d": 2, "n": 1 }
//! }
//! ```
//!
//! Results echo the same structure with every parameter filled in, so an
//! emitted `config` can be fed back as a problem file.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::{CertifyOptions, NormMode};
use crate::error::{Error, Result};
use crate::qmodule::{preset_by_name, ModuleDescription, ModuleFile, ReductionMode};
use crate::repsearch::SearchConfig;
use crate::sdp::{SolverOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    Norm,
    Member,
    Ucp,
    Hull,
    Search,
    Dilate,
    Butterfly,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Query::Norm => "norm",
            Query::Member => "member",
            Query::Ucp => "ucp",
            Query::Hull => "hull",
            Query::Search => "search",
            Query::Dilate => "dilate",
            Query::Butterfly => "butterfly",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModuleSource {
    Preset(String),
    Inline(ModuleFile),
}

impl ModuleSource {
    pub fn describe(&self) -> Result<ModuleDescription> {
        match self {
            ModuleSource::Preset(name) => preset_by_name(name),
            ModuleSource::Inline(file) => file.clone().into_description(),
        }
    }
}

/// `ρ(element) = image`; image rows are separated by `;`, entries by
/// whitespace or commas, each entry real or `re+imi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub element: String,
    pub image: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<NormMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_non_archimedean: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extract: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qmax: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

pub const DEFAULT_D: usize = 2;
pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_QMAX: i64 = 12;

impl Params {
    /// Overwrites every field that `other` sets.
    pub fn merge(&mut self, other: &Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            d, eps, mode, reduction_mode, allow_non_archimedean, extract, tol, max_iter, n, restarts, iterations,
            step, seed, grid, qmax, radius, scan, jobs
        );
    }

    /// Fills the fields a query reads with their defaults.
    pub fn resolve(&self, query: Query) -> Params {
        let search = SearchConfig::default();
        let mut p = self.clone();
        let sdp = matches!(query, Query::Norm | Query::Member | Query::Ucp | Query::Hull);
        let searches = matches!(query, Query::Norm | Query::Search);
        if sdp {
            p.d.get_or_insert(DEFAULT_D);
            p.reduction_mode.get_or_insert_with(|| "exact".into());
            p.allow_non_archimedean.get_or_insert(false);
            p.tol.get_or_insert(DEFAULT_TOL);
            p.max_iter.get_or_insert(DEFAULT_MAX_ITER);
        }
        if query == Query::Norm {
            p.mode.get_or_insert(NormMode::Auto);
        }
        if query == Query::Member {
            p.eps.get_or_insert(DEFAULT_EPS);
            p.extract.get_or_insert(true);
        }
        if query == Query::Hull && p.scan.is_some() {
            p.radius.get_or_insert(1.0);
        }
        if searches {
            p.n.get_or_insert(search.n);
            p.restarts.get_or_insert(search.restarts);
            p.iterations.get_or_insert(search.iterations);
            p.step.get_or_insert(search.step);
        }
        if query == Query::Butterfly {
            p.qmax.get_or_insert(DEFAULT_QMAX);
            p.grid.get_or_insert(DEFAULT_GRID);
        }
        // Seeds are echoed for every query, stochastic or not.
        p.seed.get_or_insert(search.seed);
        p.jobs.get_or_insert(0);
        p
    }

    pub fn certify_options(&self) -> Result<CertifyOptions> {
        let mode = match self.reduction_mode.as_deref().unwrap_or("exact") {
            "exact" => ReductionMode::Exact,
            "ideal_pairs" => ReductionMode::IdealPairs,
            other => {
                return Err(Error::InvalidInput(format!(
                    "params.reduction_mode: expected `exact` or `ideal_pairs`, got `{other}`"
                )))
            }
        };
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidInput(format!("params.tol: must lie in (0, 1), got {tol}")));
        }
        Ok(CertifyOptions {
            sdp: SolverOptions {
                tol,
                max_iter: self.max_iter.unwrap_or(DEFAULT_MAX_ITER),
                ..SolverOptions::default()
            },
            mode,
            allow_non_archimedean: self.allow_non_archimedean.unwrap_or(false),
        })
    }

    pub fn search_config(&self) -> SearchConfig {
        let dflt = SearchConfig::default();
        SearchConfig {
            n: self.n.unwrap_or(dflt.n),
            restarts: self.restarts.unwrap_or(dflt.restarts),
            iterations: self.iterations.unwrap_or(dflt.iterations),
            step: self.step.unwrap_or(dflt.step),
            seed: self.seed.unwrap_or(dflt.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub query: Query,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<ModuleSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<String>,
    /// u.c.p. map; `1 ↦ I` and `b* ↦ ρ(b)*` are added when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub map: Vec<MapEntry>,
    /// Hermitian coordinates for hull queries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub basis: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Contraction to dilate, in the same text form as map images.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default)]
    pub params: Params,
}

impl ProblemFile {
    pub fn new(query: Query) -> Self {
        ProblemFile {
            query,
            module: None,
            poly: None,
            map: Vec::new(),
            basis: Vec::new(),
            point: None,
            matrix: None,
            params: Params::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("problem file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn module(&self) -> Result<ModuleDescription> {
        self.module
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("module: required for `{}`", self.query)))?
            .describe()
    }

    pub fn poly_text(&self) -> Result<&str> {
        self.poly
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("poly: required for `{}`", self.query)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_named() {
        let err = ProblemFile::from_json(r#"{"query": "norm", "params": {"degree": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("degree"), "{err}");
        let err = ProblemFile::from_json(r#"{"query": "norm", "target": "z"}"#).unwrap_err();
        assert!(err.to_string().contains("target"), "{err}");
    }

    #[test]
    fn resolved_file_round_trips() {
        let mut p = ProblemFile::new(Query::Norm);
        p.module = Some(ModuleSource::Preset("free_group:1".into()));
        p.poly = Some("z + z^*".into());
        p.params = p.params.resolve(Query::Norm);
        let back = ProblemFile::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.params.resolve(Query::Norm), p.params);
    }

    #[test]
    fn bad_reduction_mode_is_rejected() {
        let p = Params { reduction_mode: Some("quotient".into()), ..Params::default() };
        let err = p.certify_options().unwrap_err();
        assert!(err.to_string().contains("reduction_mode"));
    }
}
