//! JSON problem files and serialized implicit RCISs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariance::{ImplicitRcis, LassoSpec};
use crate::numlin::{serde_mat, Matrix};
use crate::polytope::HPolytope;
use crate::system::LinearSystem;

pub const SCHEMA_VERSION: u32 = 1;

/// `{"A","B","E"?,"W"?,"Sxu"}`; a missing `E`/`W` pair means no disturbance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(rename = "A", with = "serde_mat")]
    pub a: Matrix,
    #[serde(rename = "B", with = "serde_mat")]
    pub b: Matrix,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none", with = "serde_mat::option")]
    pub e: Option<Matrix>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<HPolytope>,
    #[serde(rename = "Sxu")]
    pub sxu: HPolytope,
}

impl SystemFile {
    pub fn build(&self) -> Result<(LinearSystem, HPolytope)> {
        let sys = match (&self.e, &self.w) {
            (None, None) => LinearSystem::nominal(self.a.clone(), self.b.clone())?,
            (Some(e), Some(w)) => LinearSystem::new(self.a.clone(), self.b.clone(), e.clone(), w.clone())?,
            _ => return Err(Error::Parse("\"E\" and \"W\" must be given together".into())),
        };
        if self.sxu.dim() != sys.n() + sys.m() {
            return Err(Error::Parse(format!("\"Sxu\" lives in R^{} but n+m = {}", self.sxu.dim(), sys.n() + sys.m())));
        }
        Ok((sys, self.sxu.clone()))
    }

    pub fn from_parts(sys: &LinearSystem, sxu: &HPolytope) -> Self {
        let disturbed = sys.has_disturbance();
        Self {
            a: sys.a().clone(),
            b: sys.b().clone(),
            e: disturbed.then(|| sys.e().clone()),
            w: disturbed.then(|| sys.w().clone()),
            sxu: sxu.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecBlock {
    Custom {
        #[serde(rename = "P", with = "serde_mat")]
        p: Matrix,
        #[serde(rename = "H", with = "serde_mat")]
        h: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<usize>,
    },
    Lasso {
        tau: usize,
        lambda: usize,
    },
    Level {
        q: usize,
    },
}

impl SpecBlock {
    /// The single generator this block names; `Level` has none.
    pub fn lasso(&self, m: usize) -> Result<Option<LassoSpec>> {
        match self {
            SpecBlock::Lasso { tau, lambda } => Ok(Some(LassoSpec::lasso(*tau, *lambda, m)?)),
            SpecBlock::Custom { p, h, tau, lambda } => {
                let period = match (tau, lambda) {
                    (Some(t), Some(l)) => Some((*t, *l)),
                    (None, None) => None,
                    _ => return Err(Error::Parse("\"tau\" and \"lambda\" must be given together".into())),
                };
                Ok(Some(LassoSpec::custom(p.clone(), h.clone(), period)?))
            }
            SpecBlock::Level { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_feas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// Safe set in force from time `t` on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduledSafeSet {
    pub t: u64,
    #[serde(rename = "Sxu")]
    pub sxu: HPolytope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: u32,
    pub system: SystemFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecBlock>,
    #[serde(default)]
    pub options: Options,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub safe_schedule: Vec<ScheduledSafeSet>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text)?;
        if p.version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {}", p.version)));
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Safe set in force at `t`: the latest scheduled entry not after `t`,
    /// or the system's own safe set.
    pub fn safe_set_at(&self, t: u64) -> &HPolytope {
        self.safe_schedule.iter().filter(|s| s.t <= t).max_by_key(|s| s.t).map_or(&self.system.sxu, |s| &s.sxu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitRcisFile {
    pub polytope: HPolytope,
    pub tau: usize,
    pub lambda: usize,
    pub nu: usize,
    #[serde(rename = "H", with = "serde_mat")]
    pub h: Matrix,
    #[serde(rename = "P", with = "serde_mat")]
    pub p: Matrix,
    pub n: usize,
    pub m: usize,
    pub fingerprint: String,
    pub empty: bool,
}

impl From<&ImplicitRcis> for ImplicitRcisFile {
    fn from(ir: &ImplicitRcis) -> Self {
        Self {
            polytope: ir.polytope.clone(),
            tau: ir.spec.tau(),
            lambda: ir.spec.lambda(),
            nu: ir.nu,
            h: ir.spec.h().clone(),
            p: ir.spec.p().clone(),
            n: ir.n,
            m: ir.m,
            fingerprint: ir.fingerprint.clone(),
            empty: ir.empty,
        }
    }
}

impl TryFrom<ImplicitRcisFile> for ImplicitRcis {
    type Error = Error;

    fn try_from(f: ImplicitRcisFile) -> Result<Self> {
        let spec = LassoSpec::custom(f.p, f.h, Some((f.tau, f.lambda)))?;
        if f.polytope.dim() != f.n + spec.dim_v() || spec.m() != f.m {
            return Err(Error::Parse("implicit RCIS dimensions disagree".into()));
        }
        Ok(ImplicitRcis { polytope: f.polytope, spec, nu: f.nu, n: f.n, m: f.m, fingerprint: f.fingerprint, empty: f.empty })
    }
}

pub fn rcis_to_json(ir: &ImplicitRcis) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ImplicitRcisFile::from(ir))?)
}

pub fn rcis_from_json(text: &str) -> Result<ImplicitRcis> {
    let f: ImplicitRcisFile = serde_json::from_str(text)?;
    f.try_into()
}
