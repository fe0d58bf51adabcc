"""Python bindings for the ensopon analysis core."""

import json as _json

from ._core import (  # noqa: F401
    EnsoponError,
    __version__,
    anomaly,
    anova,
    classify_phase,
    detrend,
    lagged_cc,
    max_cc,
    preprocess,
    report_json,
    run,
    running_mean3,
    studentized_range_cdf,
    studentized_range_quantile,
    synth,
    tukey_hsd,
    validate,
)


def report(out):
    """Summary of an artifact directory as a dict (also written to summary.json)."""
    return _json.loads(report_json(out))
