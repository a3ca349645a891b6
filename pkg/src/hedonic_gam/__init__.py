"""Hedonic house-price models: P-spline additive models fitted by
backfitting, an OLS benchmark, per-factor significance, leave-one-out
contribution analysis and correlation-based redundancy screening.
"""

__version__ = "0.1.0"

from .analysis import (
    CorrelationMatrix,
    FactorContribution,
    Recommendation,
    RedundancyFinding,
    StrengthLabel,
    classify_strength,
    correlation_matrix,
    delta_r2_analysis,
    pearson_matrix,
    recommend,
    redundancy_report,
)
from .data_model import (
    DEFAULT_ROSTER,
    Dataset,
    FactorCategory,
    FactorKind,
    FactorSpec,
    NormalizationStats,
    default_roster,
    log_price,
)
from .errors import (
    ConfigError,
    ConstantColumnError,
    DataError,
    DomainError,
    EmptyInputError,
    HedonicError,
    LambdaRangeError,
    NotPositiveDefiniteError,
    NumericalError,
    RankDeficiencyError,
    SchemaError,
    SingularSystemError,
)
from .gam import GamConfig, GamModel, TermFit, fit_gam, partial_effect, predict
from .glm import GlmModel, fit_glm, predict_glm
from .inference import TermTest, gam_term_significance, glm_term_significance, nested_f_test, stars
from .ingest import FilterConfig, RawRecord, apply_filters, dedupe, ingest, load_csv, prepare_dataset
from .serialize import load_model, save_model
from .smoothing import (
    BSplineBasis,
    PenaltyMatrix,
    SmoothFit,
    difference_penalty,
    edf_for_lambda,
    evaluate_basis,
    fit_penalized,
    make_basis,
    solve_lambda_for_edf,
)
from .special import betainc, f_sf, t_sf
from .synthetic import SyntheticSpec, generate, city_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
