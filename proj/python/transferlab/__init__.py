"""Boundary-traversal adversarial attacks and transferability measurement.

Thin wrapper over the compiled extension; everything lives in
``transferlab._core``.
"""

from transferlab._core import *  # noqa: F401,F403
from transferlab._core import __doc__  # noqa: F401
