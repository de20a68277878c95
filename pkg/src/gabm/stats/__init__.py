from .special import betainc, gammainc, gammaincc
from .tests import (
    StatResult,
    anova_oneway,
    chi_square_2x2,
    linear_trend,
    ols_simple,
    p_from_distribution,
    paired_f,
    t_test_ind,
)

__all__ = [
    "StatResult",
    "anova_oneway",
    "betainc",
    "chi_square_2x2",
    "gammainc",
    "gammaincc",
    "linear_trend",
    "ols_simple",
    "p_from_distribution",
    "paired_f",
    "t_test_ind",
]
