"""Proximal point imitation learning on tabular and linear MDPs."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
