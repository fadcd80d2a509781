"""Simulator and analysis toolkit for variable-strength weak measurements
on a coupled electron-nuclear spin pair."""

from . import montecarlo, protocols, qmath, spinsys  # noqa: F401

__version__ = "0.1.0"
