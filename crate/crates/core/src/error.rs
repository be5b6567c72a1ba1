use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoseError {
    #[error("eps = {eps} violates eps < eps_h^2/(16*c1*rho) = {bound}")]
    EpsilonTooLarge { eps: f64, bound: f64 },

    #[error("stochastic mode requires eps <= eps_h^(3/2) = {bound}, got eps = {eps}")]
    StochasticEpsilonTooLarge { eps: f64, bound: f64 },

    #[error("constant `{name}` = {value} is outside its admissible range ({expected})")]
    NonPositiveConstant {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("escape coefficient c_h = {c_h} lies outside the admissible window ({lo}, {hi})")]
    StepWindow { c_h: f64, lo: f64, hi: f64 },

    #[error("finite-difference direction has zero norm")]
    ZeroDirection,

    #[error("operator failed the symmetry probe: |u'Hw - w'Hu| = {defect} exceeds {tolerance}")]
    AsymmetricOperator { defect: f64, tolerance: f64 },

    #[error("negative-curvature budget must allow at least one matrix-vector product")]
    BudgetZero,

    #[error("oracle does not provide stochastic samples")]
    NotStochastic,

    #[error("oracle is not a finite sum")]
    NotFiniteSum,

    #[error("geometric parameter p = {0} must lie in (0, 1)")]
    InvalidP(f64),

    #[error("stochastic mode needs a variance bound h_star or a pilot estimate")]
    MissingVarianceBound,

    #[error("dense certification limited to d <= {max}, got d = {d}")]
    DimensionTooLarge { d: usize, max: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("gradient norm became non-finite at outer iteration {iter}; the objective may be unbounded below")]
    Diverged { iter: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T, E = GoseError> = std::result::Result<T, E>;
