"""Batched shortcut smoothing with a learned clearance field."""

from ._rtsmooth import *  # noqa: F401,F403
from ._rtsmooth import __doc__  # noqa: F401
