"""Finite-scale Oseledets, large-deviation and continuity experiments."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, load_config_file  # noqa: F401
