/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Constraint satisfaction of LP/QP points.
    pub feas: f64,
    /// Objective agreement for LP optima.
    pub obj: f64,
    /// KKT residual accepted from the QP solver.
    pub kkt: f64,
    /// Pivot magnitude below which a tableau entry counts as zero.
    pub pivot: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_pivots: usize,
    /// Relative rank tolerance for controllability decisions.
    pub rank: f64,
    /// `‖A^k‖_∞ / (1+‖A‖_∞)^k` below which a power counts as zero.
    pub nilpotent: f64,
    /// Eventual periodicity check `‖P^τ − P^{τ+λ}‖_∞`.
    pub periodic: f64,
    /// Slack for containment queries.
    pub contain: f64,
    /// Rows within this slack of redundancy are dropped.
    pub redundant: f64,
    /// Row cap for Fourier–Motzkin intermediates.
    pub fm_row_cap: usize,
    /// Regularization weight on the input-sequence block of the supervision QP.
    pub qp_reg: f64,
    /// Distance below which the supervisor reports a pass.
    pub pass: f64,
    /// Minimum eigenvalue accepted for a PSD cost matrix.
    pub psd_floor: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        feas: 1e-8,
        obj: 1e-8,
        kkt: 1e-6,
        pivot: 1e-9,
        degenerate_pivots: 50,
        rank: 1e-8,
        nilpotent: 1e-9,
        periodic: 1e-9,
        contain: 1e-7,
        redundant: 1e-9,
        fm_row_cap: 20_000,
        qp_reg: 1e-8,
        pass: 1e-6,
        psd_floor: -1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
