"""Perron roots and vectors of matrices over Puiseux series."""

from .driver import PFData, DriverTranscript, SingularityReport, run
from .eigen import EigenQuadruple, eigen_series, residual_valuation
from .errors import PerronError
from .parsing import format_series, parse_document, parse_entry
from .series import INF, PuiseuxMatrix, PuiseuxSeries
from .wdigraph import WeightedDigraph, adjacency_graph, flat_slanted_form, gently_slanted_form

__all__ = [
    "INF",
    "DriverTranscript",
    "EigenQuadruple",
    "PFData",
    "PerronError",
    "PuiseuxMatrix",
    "PuiseuxSeries",
    "SingularityReport",
    "WeightedDigraph",
    "adjacency_graph",
    "eigen_series",
    "flat_slanted_form",
    "format_series",
    "gently_slanted_form",
    "parse_document",
    "parse_entry",
    "residual_valuation",
    "run",
]
