"""Skew-aware natural joins over binary relations."""
from .executor import ExecutionReport, IntermediateTable, check_agm, evaluate
from .query import QueryGraph, RelSchema, build_query_graph, catalog_query, load_query, parse_query
from .relation import Relation, build_summary, load_edge_list
from .split import SplitSet, choose_split_set, enumerate_split_sets, split_phase
from .threshold import SplitConstants, choose_threshold

__all__ = [
    "ExecutionReport",
    "IntermediateTable",
    "QueryGraph",
    "RelSchema",
    "Relation",
    "SplitConstants",
    "SplitSet",
    "build_query_graph",
    "build_summary",
    "catalog_query",
    "check_agm",
    "choose_split_set",
    "choose_threshold",
    "enumerate_split_sets",
    "evaluate",
    "load_edge_list",
    "load_query",
    "parse_query",
    "split_phase",
]
