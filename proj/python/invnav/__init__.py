"""Planar unicycle navigation with position fixes: SE(2) tools, simulator,
EKF and invariant EKF, convergence analysis and Gauss-Newton smoothing."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import ScenarioConfig as _ScenarioConfig


def scenario(**overrides):
    """ScenarioConfig from keyword overrides, using the JSON scenario keys."""
    return _ScenarioConfig(_json.dumps(overrides))
