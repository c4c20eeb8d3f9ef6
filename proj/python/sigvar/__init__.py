"""Sigmoidal value-at-risk approximation of chance-constrained programs."""

import json
import pkgutil

# In-tree builds keep the compiled module under <build>/python/sigvar.
__path__ = pkgutil.extend_path(__path__, __name__)

from ._core import (  # noqa: E402
    ContinuationError,
    ScenarioIoError,
    analytic_closed_forms,
    bar_mu,
    conditional_value_at_risk,
    entropic_value_at_risk,
    error_bound,
    generate_scenarios,
    load_scenarios,
    map_cvar_to_sigvar,
    sigmoidal_value_at_risk,
    sigvar_kernel,
    ss_kernel,
    value_at_risk,
)
from ._core import run_case_json as _run_case_json  # noqa: E402

__all__ = [
    "ContinuationError",
    "ScenarioIoError",
    "analytic_closed_forms",
    "bar_mu",
    "conditional_value_at_risk",
    "entropic_value_at_risk",
    "error_bound",
    "generate_scenarios",
    "load_scenarios",
    "map_cvar_to_sigvar",
    "run_case",
    "sigmoidal_value_at_risk",
    "sigvar_kernel",
    "ss_kernel",
    "value_at_risk",
]


def run_case(problem, scenarios=None, count=None, seed=None, alpha=None, mu_target=None, ss_sweep=False):
    """Run a case study and return its report as a dict.

    `scenarios` is a scenario CSV path; without it the scenarios are generated
    from the case's distribution with `count` and `seed` (case defaults when
    omitted).
    """
    text = _run_case_json(
        problem,
        scenarios=None if scenarios is None else str(scenarios),
        count=count,
        seed=seed,
        alpha=alpha,
        mu_target=mu_target,
        ss_sweep=ss_sweep,
    )
    return json.loads(text)
