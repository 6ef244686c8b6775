//! Online use of implicit RCISs: admissible-input encodings, minimally
//! intrusive supervision and filtering under growing safe sets.

use crate::error::{Error, Result};
use crate::invariance::{implicit_rcis, ImplicitRcis, LassoSpec};
use crate::numlin::{solve_lp, solve_qp, LpOutcome, LpProblem, Matrix, QpOutcome, QpProblem, Vector};
use crate::polytope::HPolytope;
use crate::system::LinearSystem;

pub const VERTEX_LIMIT: usize = 4096;
const V_REGULARIZATION: f64 = 1e-8;
const PASS_TOL: f64 = 1e-6;
pub const MAX_UNION_BOXES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// `(u, v₁, …, v_N)`: one generator state per vertex of `W`.
    U1,
    /// `v`: the slice of `C_xv` at `x`, with `u = Hv`.
    U2,
    /// `(u, v)`: one generator state shared by all vertices.
    #[default]
    U3,
}

/// Admissible inputs at a fixed state as a polytope over the encoding's
/// variables; the input is the first `m` coordinates except for `U2`.
#[derive(Debug, Clone)]
pub struct AdmissibleEncoding {
    pub variant: Encoding,
    pub polytope: HPolytope,
    pub m: usize,
    h: Matrix,
    pub vertices: Vec<Vector>,
}

impl AdmissibleEncoding {
    pub fn is_empty(&self) -> Result<bool> {
        self.polytope.is_empty()
    }

    /// Linear map from the encoding's variables to `u`.
    pub fn input_map(&self) -> Matrix {
        match self.variant {
            Encoding::U2 => self.h.clone(),
            _ => {
                let mut s = Matrix::zeros(self.m, self.polytope.dim());
                s.view_mut((0, 0), (self.m, self.m)).fill_with_identity();
                s
            }
        }
    }

    /// `u ∈ π_m(U)` (or `u ∈ H·U₂`), by one LP.
    pub fn admits(&self, u: &Vector, slack: f64) -> Result<bool> {
        let map = self.input_map();
        let g = crate::numlin::vstack(&crate::numlin::vstack(self.polytope.g(), &map), &(-&map));
        let f =
            crate::numlin::vcat(&self.polytope.f().add_scalar(slack), &crate::numlin::vcat(&u.add_scalar(slack), &(-u).add_scalar(slack)));
        let lp = LpProblem::minimize(Vector::zeros(self.polytope.dim()), g, f)?;
        Ok(matches!(solve_lp(&lp)?, LpOutcome::Optimal { .. }))
    }
}

fn disturbance_vertices(sys: &LinearSystem) -> Result<Vec<Vector>> {
    if !sys.has_disturbance() {
        return Ok(vec![Vector::zeros(sys.w().dim())]);
    }
    sys.w().vertices(VERTEX_LIMIT)
}

/// Builds `U1`, `U2` or `U3` at `x` for a system in the coordinates of `ir`.
pub fn admissible(sys: &LinearSystem, sxu: &HPolytope, ir: &ImplicitRcis, x: &Vector, variant: Encoding) -> Result<AdmissibleEncoding> {
    let (n, m, d) = (sys.n(), sys.m(), ir.dim_v());
    if x.len() != n || sxu.dim() != n + m || ir.n != n || ir.m != m {
        return Err(Error::DimensionMismatch("admissible-input encoding dimensions".into()));
    }
    let vertices = disturbance_vertices(sys)?;
    let c = &ir.polytope;
    let cx = c.g().columns(0, n).into_owned();
    let cv = c.g().columns(n, d).into_owned();
    let su = sxu.g().columns(n, m).into_owned();
    let s_rhs = sxu.f() - sxu.g().columns(0, n) * x;
    let ax = sys.a() * x;
    let cxb = &cx * sys.b();
    let h = ir.spec.h().clone();

    let (g, f) = match variant {
        Encoding::U2 => (cv.clone(), c.f() - &cx * x),
        Encoding::U1 | Encoding::U3 => {
            let copies = if variant == Encoding::U1 { vertices.len() } else { 1 };
            let dim = m + copies * d;
            let rows = sxu.nrows() + vertices.len() * c.nrows();
            let mut g = Matrix::zeros(rows, dim);
            let mut f = Vector::zeros(rows);
            g.view_mut((0, 0), (sxu.nrows(), m)).copy_from(&su);
            f.rows_mut(0, sxu.nrows()).copy_from(&s_rhs);
            for (i, w) in vertices.iter().enumerate() {
                let r0 = sxu.nrows() + i * c.nrows();
                let slot = if variant == Encoding::U1 { i } else { 0 };
                g.view_mut((r0, 0), (c.nrows(), m)).copy_from(&cxb);
                g.view_mut((r0, m + slot * d), (c.nrows(), d)).copy_from(&cv);
                let next = &ax + sys.e() * w;
                f.rows_mut(r0, c.nrows()).copy_from(&(c.f() - &cx * next));
            }
            (g, f)
        }
    };
    Ok(AdmissibleEncoding { variant, polytope: HPolytope::new(g, f)?, m, h, vertices })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Supervision {
    /// The nominal input, returned unchanged.
    Pass(Vector),
    Corrected(Vector),
    Infeasible,
}

impl Supervision {
    pub fn input(&self) -> Option<&Vector> {
        match self {
            Supervision::Pass(u) | Supervision::Corrected(u) => Some(u),
            Supervision::Infeasible => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Supervision::Pass(_) => "pass",
            Supervision::Corrected(_) => "corrected",
            Supervision::Infeasible => "infeasible",
        }
    }
}

/// `min ‖u − ũ‖² + ε‖v‖²` over the chosen encoding.
pub fn supervise(
    sys: &LinearSystem,
    sxu: &HPolytope,
    ir: &ImplicitRcis,
    x: &Vector,
    nominal: &Vector,
    variant: Encoding,
) -> Result<Supervision> {
    if nominal.len() != sys.m() {
        return Err(Error::DimensionMismatch("nominal input dimension".into()));
    }
    crate::numlin::ensure_finite_vector(nominal, "nominal input")?;
    let enc = admissible(sys, sxu, ir, x, variant)?;
    let map = enc.input_map();
    let dim = enc.polytope.dim();
    let mut q = map.tr_mul(&map) * 2.0;
    for i in 0..dim {
        let is_input = variant != Encoding::U2 && i < enc.m;
        if !is_input {
            q[(i, i)] += 2.0 * V_REGULARIZATION;
        }
    }
    let c = map.tr_mul(nominal) * -2.0;
    let qp = QpProblem::new(q, c, enc.polytope.g().clone(), enc.polytope.f().clone())?.with_offset(nominal.norm_squared());
    match solve_qp(&qp)? {
        QpOutcome::Infeasible => Ok(Supervision::Infeasible),
        QpOutcome::Optimal { point, .. } => {
            let u = &map * point;
            if (&u - nominal).norm() <= PASS_TOL {
                Ok(Supervision::Pass(nominal.clone()))
            } else {
                Ok(Supervision::Corrected(u))
            }
        }
    }
}

/// The plant together with the deadbeat pre-feedback `u = Kx + u′` that
/// makes its dynamics nilpotent.
#[derive(Debug, Clone)]
pub struct Plant {
    pub original: LinearSystem,
    pub nilpotent: LinearSystem,
    pub gain: Matrix,
}

impl Plant {
    pub fn new(sys: &LinearSystem) -> Result<Self> {
        let nil = sys.nilpotentize(&HPolytope::universe(sys.n() + sys.m()))?;
        Ok(Self { original: sys.clone(), nilpotent: nil.system, gain: nil.gain })
    }

    /// `{(x,u′) | (x, Kx+u′) ∈ S_xu}`.
    pub fn shifted_safe_set(&self, sxu: &HPolytope) -> Result<HPolytope> {
        let (n, m) = (self.original.n(), self.original.m());
        let mut map = Matrix::identity(n + m, n + m);
        map.view_mut((n, 0), (m, n)).copy_from(&self.gain);
        sxu.affine_preimage(&map, &Vector::zeros(n + m))
    }

    pub fn to_shifted(&self, x: &Vector, u: &Vector) -> Vector {
        u - &self.gain * x
    }

    pub fn from_shifted(&self, x: &Vector, u: &Vector) -> Vector {
        &self.gain * x + u
    }
}

/// Implicit RCIS for a fixed safe set, supervising in plant coordinates.
#[derive(Debug, Clone)]
pub struct Supervisor {
    pub plant: Plant,
    pub safe_set: HPolytope,
    pub rcis: ImplicitRcis,
    pub encoding: Encoding,
}

impl Supervisor {
    pub fn new(sys: &LinearSystem, sxu: &HPolytope, spec: &LassoSpec) -> Result<Self> {
        Self::for_plant(Plant::new(sys)?, sxu, spec)
    }

    pub fn for_plant(plant: Plant, sxu: &HPolytope, spec: &LassoSpec) -> Result<Self> {
        let safe_set = plant.shifted_safe_set(sxu)?;
        let rcis = implicit_rcis(&plant.nilpotent, &safe_set, spec)?;
        Ok(Self { plant, safe_set, rcis, encoding: Encoding::default() })
    }

    pub fn with_encoding(mut self, e: Encoding) -> Self {
        self.encoding = e;
        self
    }

    pub fn supervise(&self, x: &Vector, nominal: &Vector) -> Result<Supervision> {
        self.supervise_against(&self.safe_set, x, nominal)
    }

    /// Supervision with this RCIS inside a (larger) current safe set.
    fn supervise_against(&self, safe_set: &HPolytope, x: &Vector, nominal: &Vector) -> Result<Supervision> {
        let shifted = self.plant.to_shifted(x, nominal);
        Ok(match supervise(&self.plant.nilpotent, safe_set, &self.rcis, x, &shifted, self.encoding)? {
            Supervision::Pass(_) => Supervision::Pass(nominal.clone()),
            Supervision::Corrected(u) => Supervision::Corrected(self.plant.from_shifted(x, &u)),
            Supervision::Infeasible => Supervision::Infeasible,
        })
    }
}

/// Best supervision over a union of (at most ten) convex safe sets.
///
/// Returns the index of the component used.
pub fn supervise_union(components: &[Supervisor], x: &Vector, nominal: &Vector) -> Result<(Supervision, Option<usize>)> {
    if components.len() > MAX_UNION_BOXES {
        return Err(Error::DimensionMismatch(format!("{} union components, at most {MAX_UNION_BOXES} supported", components.len())));
    }
    let mut best: Option<(f64, Supervision, usize)> = None;
    for (i, s) in components.iter().enumerate() {
        let out = s.supervise(x, nominal)?;
        let Some(u) = out.input() else { continue };
        let cost = (u - nominal).norm_squared();
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            best = Some((cost, out.clone(), i));
        }
    }
    Ok(match best {
        Some((_, s, i)) => (s, Some(i)),
        None => (Supervision::Infeasible, None),
    })
}

/// Supervision state for time-varying, growing safe sets.
#[derive(Debug, Clone)]
pub struct FilterState {
    plant: Plant,
    spec: LassoSpec,
    encoding: Encoding,
    /// RCIS built at `t*`, the latest instant whose program was feasible.
    stored: Option<(u64, Supervisor)>,
    last_safe: Option<HPolytope>,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub input: Vector,
    pub passed: bool,
    pub t_star: u64,
}

impl FilterState {
    pub fn new(sys: &LinearSystem, spec: &LassoSpec) -> Result<Self> {
        Ok(Self {
            plant: Plant::new(sys)?,
            spec: spec.clone(),
            encoding: Encoding::default(),
            stored: None,
            last_safe: None,
            history: Vec::new(),
        })
    }

    pub fn with_encoding(mut self, e: Encoding) -> Self {
        self.encoding = e;
        self
    }

    pub fn t_star(&self) -> Option<u64> {
        self.stored.as_ref().map(|(t, _)| *t)
    }

    /// One step of the filter: try the RCIS of the current safe set, fall
    /// back to the one from `t*`.
    pub fn step(&mut self, t: u64, sxu: &HPolytope, x: &Vector, nominal: &Vector) -> Result<FilterOutput> {
        if let Some(prev) = &self.last_safe {
            if !sxu.contains(prev)? {
                return Err(Error::SafeSetShrank(t));
            }
        }
        let fresh = Supervisor::for_plant(self.plant.clone(), sxu, &self.spec)?.with_encoding(self.encoding);
        self.history.push(fresh.rcis.fingerprint.clone());
        self.last_safe = Some(sxu.clone());
        let out = fresh.supervise(x, nominal)?;
        if let Some(u) = out.input() {
            let output = FilterOutput { input: u.clone(), passed: matches!(out, Supervision::Pass(_)), t_star: t };
            self.stored = Some((t, fresh));
            return Ok(output);
        }
        let Some((ts, old)) = &self.stored else {
            return Err(Error::InitiallyInfeasible);
        };
        let current = fresh.safe_set;
        match old.supervise_against(&current, x, nominal)? {
            Supervision::Infeasible => Err(Error::RecursiveFeasibilityLost(t)),
            s => Ok(FilterOutput {
                input: s.input().expect("feasible outcome").clone(),
                passed: matches!(s, Supervision::Pass(_)),
                t_star: *ts,
            }),
        }
    }
}

/// Functional form of [`FilterState::step`].
pub fn filter_step(mut fs: FilterState, t: u64, sxu: &HPolytope, x: &Vector, nominal: &Vector) -> Result<(FilterOutput, FilterState)> {
    let out = fs.step(t, sxu, x, nominal)?;
    Ok((out, fs))
}
