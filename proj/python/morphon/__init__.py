"""Minimum-compliance topology optimization with online neural synthetic gradients."""

from ._morphon import *  # noqa: F401,F403
from ._morphon import __doc__  # noqa: F401
