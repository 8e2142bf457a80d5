//! JSON descriptions of combinations and transition functions.

use crate::error::{Error, Result};
use crate::models::{self, DodgingParams};
use crate::poly::{MPoly, Monomial};
use crate::slowfast::{Builtin, Combination, Term};
use crate::transition::{build_phi_k, PhiKSpec, TransitionFunction};
use serde::{Deserialize, Serialize};

/// Version of every JSON document read or written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// One A_i or B_j entry: a monomial table or a named builtin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermSpec {
    Monomials(Vec<Monomial>),
    Builtin(Builtin),
}

impl TermSpec {
    fn build(&self) -> Result<Term> {
        Ok(match self {
            TermSpec::Monomials(m) if m.is_empty() => Term::Zero,
            TermSpec::Monomials(m) => Term::Poly(MPoly::from_monomials(m)?),
            TermSpec::Builtin(b) => Term::Builtin(*b),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Center,
    Ii2 {
        m: u32,
        n: u32,
    },
    Dodging {
        #[serde(default)]
        params: DodgingParams,
    },
    /// Up to four entries each; missing entries are zero.
    Custom {
        #[serde(default)]
        a: Vec<TermSpec>,
        #[serde(default)]
        b: Vec<TermSpec>,
    },
}

/// A system file: the combination plus the value of α used for the
/// piecewise-smooth analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub alpha: f64,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: SystemSpec = serde_json::from_str(text).map_err(|e| Error::Input(format!("system JSON: {e}")))?;
        check_version(s.schema_version)?;
        Ok(s)
    }

    pub fn combination(&self) -> Result<Combination> {
        let mut c = match &self.model {
            ModelSpec::Center => models::center_combination(),
            ModelSpec::Ii2 { m, n } => {
                if *m < 4 || *n < 2 {
                    return Err(Error::Input(format!("II2 needs m >= 4 and n >= 2, got m = {m}, n = {n}")));
                }
                models::ii2_combination(*m, *n)
            }
            ModelSpec::Dodging { params } => models::dodging_combination(params),
            ModelSpec::Custom { a, b } => {
                if a.len() > 4 || b.len() > 4 {
                    return Err(Error::Input("custom combination takes at most four A and four B entries".into()));
                }
                let mut c = Combination::new("custom");
                for (i, t) in a.iter().enumerate() {
                    c.a[i] = t.build()?;
                }
                for (j, t) in b.iter().enumerate() {
                    c.b[j] = t.build()?;
                }
                c
            }
        };
        if let Some(n) = &self.name {
            c.name = n.clone();
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    Psi,
    PhiK(PhiKSpec),
}

impl PhiSpec {
    pub fn build(&self) -> Result<TransitionFunction> {
        match self {
            PhiSpec::Psi => Ok(TransitionFunction::Psi),
            PhiSpec::PhiK(s) => build_phi_k(s),
        }
    }
}

pub fn check_version(v: u32) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Input(format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ii2_custom_equals_builtin() {
        let text = r#"{
            "schema_version": 1,
            "model": "custom",
            "a": [
                [{"coef": "-1/2", "pow": [0, 0, 0, 1]}, {"coef": "-1/2", "pow": [1, 0, 0, 1]}],
                [{"coef": "1/2", "pow": [1, 0, 0, 0]}, {"coef": "-1/2", "pow": [2, 0, 0, 0]}]
            ],
            "b": [[], [{"coef": "-1", "pow": [1, 0, 0, 0]}]]
        }"#;
        let c = SystemSpec::from_json(text).unwrap().combination().unwrap();
        let r = models::ii2_combination(4, 2);
        for &(l, x, y, a) in &[(0.3, 0.1, 0.5, 0.2), (-0.8, -0.4, 1.2, -0.1)] {
            assert_eq!(c.eval(l, x, y, a), r.eval(l, x, y, a));
        }
    }

    #[test]
    fn builtin_terms_and_models() {
        let text = r#"{"schema_version": 1, "model": "custom",
            "a": [{"kind": "capped_parabola", "h_minus": 0.018, "h_plus": 0.03, "l1": 0.5, "p": 4}]}"#;
        let c = SystemSpec::from_json(text).unwrap().combination().unwrap();
        let (yx, yy) = c.tangency_heights(0.0);
        assert!((yx - 0.03).abs() < 1e-6 && (yy - 0.018).abs() < 1e-6);
        let d = SystemSpec::from_json(r#"{"schema_version": 1, "model": "dodging"}"#).unwrap();
        assert_eq!(d.model, ModelSpec::Dodging { params: DodgingParams::default() });
        let s = SystemSpec::from_json(r#"{"schema_version": 1, "model": "ii2", "m": 4, "n": 2, "alpha": 0.1}"#).unwrap();
        assert_eq!(s.alpha, 0.1);
        assert!(s.combination().is_ok());
    }

    #[test]
    fn bad_documents() {
        assert!(matches!(SystemSpec::from_json("{"), Err(Error::Input(_))));
        assert!(SystemSpec::from_json(r#"{"schema_version": 2, "model": "center"}"#).is_err());
        assert!(SystemSpec::from_json(r#"{"schema_version": 1, "model": "torus"}"#).is_err());
        let s = SystemSpec::from_json(r#"{"schema_version": 1, "model": "ii2", "m": 3, "n": 2}"#).unwrap();
        assert!(s.combination().is_err());
        let s = SystemSpec::from_json(r#"{"schema_version": 1, "model": "custom", "a": [[{"coef": "1/0"}]]}"#).unwrap();
        assert!(s.combination().is_err());
    }

    #[test]
    fn phi_specs() {
        let p: PhiSpec = serde_json::from_str(r#"{"kind": "phi_k", "zeros": [0.06], "delta": 138.9, "nu": 0.066}"#).unwrap();
        assert_eq!(p, PhiSpec::PhiK(models::desk_phi_spec()));
        assert!(p.build().is_ok());
        let p: PhiSpec = serde_json::from_str(r#"{"kind": "psi"}"#).unwrap();
        assert!(matches!(p.build().unwrap(), TransitionFunction::Psi));
    }
}
