//! Job configuration: a single JSON document describing the root datum, the
//! triple, the form selection and the run options. Root indices are 1-based
//! in the file and converted to 0-based internally.

use std::collections::BTreeMap;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use serde::Deserialize;

use qtwist_core::bdstruct::{solve_compatible, validate_triple, BDTriple, SignConvention};
use qtwist_core::rootdata::{Lattice, RootDatum};
use qtwist_core::{CompatibleForm, Q};

#[derive(Debug, Clone, Deserialize)]
pub struct RootSpec {
    #[serde(rename = "type")]
    pub letter: char,
    pub rank: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TripleSpec {
    #[serde(default)]
    pub pi1: Vec<usize>,
    #[serde(default)]
    pub pi2: Vec<usize>,
    #[serde(default)]
    pub tau: BTreeMap<String, usize>,
}

/// A rational in the config: an integer, or a string like `"-2/3"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RatSpec {
    Int(i64),
    Text(String),
}

impl RatSpec {
    pub fn to_q(&self) -> Result<Q> {
        match self {
            RatSpec::Int(n) => Ok(Q::from(BigInt::from(*n))),
            RatSpec::Text(s) => {
                let s = s.trim();
                if let Some((n, d)) = s.split_once('/') {
                    let n = BigInt::from_str(n.trim()).context("numerator")?;
                    let d = BigInt::from_str(d.trim()).context("denominator")?;
                    if d == BigInt::from(0) {
                        bail!("zero denominator in rational {s:?}");
                    }
                    Ok(Q::new(n, d))
                } else {
                    Ok(Q::from(BigInt::from_str(s).context("integer")?))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    /// The particular solution of the compatibility equations.
    Solve,
    /// The zero form (validated against the compatibility equations).
    Zero,
    /// An explicit antisymmetric matrix (validated against the equations).
    Explicit(Vec<Vec<RatSpec>>),
    /// The solution with the given free-parameter coordinates.
    SolveWith(Vec<RatSpec>),
}

fn default_form() -> FormSpec {
    FormSpec::Solve
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OmegaChoice {
    Root,
    #[default]
    Weight,
}

fn default_height_cap() -> usize {
    qtwist_core::borel::DEFAULT_HEIGHT_CAP
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct JobConfig {
    #[serde(default)]
    #[allow(dead_code)]
    pub schema_version: Option<u32>,
    pub root: RootSpec,
    #[serde(default)]
    pub triple: Option<TripleSpec>,
    #[serde(default = "default_form")]
    pub form: FormSpec,
    #[serde(default)]
    pub omega: OmegaChoice,
    #[serde(default)]
    pub sign: SignConvention,
    #[serde(default = "default_height_cap")]
    pub height_cap: usize,
    #[serde(default = "default_true")]
    pub with_r_matrix: bool,
    #[serde(default)]
    pub with_associativity: bool,
}

impl JobConfig {
    pub fn load(path: &std::path::Path) -> Result<JobConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: JobConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn root_datum(&self) -> Result<RootDatum> {
        RootDatum::build(self.root.letter, self.root.rank)
            .map_err(|e| anyhow!("invalid root datum: {e}"))
    }

    pub fn bd_triple(&self, rd: &RootDatum) -> Result<BDTriple> {
        let Some(spec) = &self.triple else {
            return Ok(BDTriple::empty());
        };
        let fix = |xs: &[usize]| -> Result<Vec<usize>> {
            xs.iter()
                .map(|&x| {
                    if x == 0 || x > rd.rank {
                        bail!("root index {x} out of range 1..={}", rd.rank)
                    } else {
                        Ok(x - 1)
                    }
                })
                .collect()
        };
        let pi1 = fix(&spec.pi1)?;
        let pi2 = fix(&spec.pi2)?;
        let mut tau = BTreeMap::new();
        for (k, &v) in &spec.tau {
            let k: usize = k.parse().context("tau key")?;
            if k == 0 || k > rd.rank || v == 0 || v > rd.rank {
                bail!("tau entry {k} -> {v} out of range");
            }
            tau.insert(k - 1, v - 1);
        }
        let t = BDTriple::new(pi1, pi2, tau);
        let violations = validate_triple(rd, &t);
        if !violations.is_empty() {
            bail!("invalid triple: {violations:?}");
        }
        Ok(t)
    }

    /// Resolve the form selection into a compatible form, rejecting any
    /// inconsistency with a precise diagnostic.
    pub fn form(&self, rd: &RootDatum, t: &BDTriple) -> Result<CompatibleForm> {
        let sol = solve_compatible(rd, t, self.sign)
            .ok_or_else(|| anyhow!("compatibility equations are inconsistent"))?;
        let u = match &self.form {
            FormSpec::Solve => sol.particular.clone(),
            FormSpec::SolveWith(params) => {
                if params.len() != sol.dim {
                    bail!(
                        "solve_with needs exactly {} parameters (solution space dimension), got {}",
                        sol.dim,
                        params.len()
                    );
                }
                let qs: Result<Vec<Q>> = params.iter().map(|p| p.to_q()).collect();
                sol.member(&qs?)
            }
            FormSpec::Zero => {
                let zero = vec![vec![Q::from(BigInt::from(0)); rd.rank]; rd.rank];
                if !sol.contains(&zero) {
                    bail!("the zero form is not compatible with this triple");
                }
                zero
            }
            FormSpec::Explicit(rows) => {
                if rows.len() != rd.rank || rows.iter().any(|r| r.len() != rd.rank) {
                    bail!("explicit u must be a {0} x {0} matrix", rd.rank);
                }
                let mut u = vec![vec![Q::from(BigInt::from(0)); rd.rank]; rd.rank];
                for (i, row) in rows.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        u[i][j] = v.to_q()?;
                    }
                }
                if !sol.contains(&u) {
                    bail!("explicit u is not in the compatible solution space");
                }
                u
            }
        };
        CompatibleForm::new(rd.clone(), t.clone(), u).map_err(|e| anyhow!("bad form: {e}"))
    }

    pub fn omega_lattice(&self, rd: &RootDatum) -> Lattice {
        match self.omega {
            OmegaChoice::Root => rd.root_lattice(),
            OmegaChoice::Weight => rd.weight_lattice(),
        }
    }
}
