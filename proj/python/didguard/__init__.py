"""Pre-trend severity tests and conditionally valid confidence intervals
for difference-in-differences designs.

The heavy lifting lives in the compiled extension ``_didguard``; this
package re-exports its public surface.
"""

from ._didguard import (
    analyze_csv,
    confidence_interval,
    critical_value,
    kappa,
    kappa_lin,
    normal_quantile,
    pretest,
    severity,
    simulate_rejection_curve,
    worst_case_post_violations,
)

__all__ = [
    "analyze_csv",
    "confidence_interval",
    "critical_value",
    "kappa",
    "kappa_lin",
    "normal_quantile",
    "pretest",
    "severity",
    "simulate_rejection_curve",
    "worst_case_post_violations",
]
