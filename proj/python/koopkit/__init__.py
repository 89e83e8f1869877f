"""Koopman operator model fitting, spectral analysis and lifted MPC."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
