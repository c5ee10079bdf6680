"""Neighbour-choice percolation: exact formulas, samplers, cluster statistics and event calculus."""

from .errors import DvpError
from .graph import GraphWindow, build_window, catalog_entry
from .prob import ProbVector, make_prob_vector

__all__ = ["DvpError", "GraphWindow", "ProbVector", "build_window", "catalog_entry", "make_prob_vector"]
__version__ = "0.1.0"
