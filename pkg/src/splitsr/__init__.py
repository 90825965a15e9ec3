"""Symbolic regression and classification with decision splits inside expression trees."""

from .clinical import generate_dataset
from .config import SearchConfig, profile
from .data import Dataset, SplitSpec, add_target_noise, load_csv, split
from .errors import (ConfigError, DocumentError, InfeasibleSplitError, InputError,
                     SplitSRError, StructureError)
from .optimize import LMSettings, find_greedy_split, find_split_threshold, fit_program, lm_fit
from .search import SearchResult, run
from .serialize import dumps, from_document, loads, to_document, to_infix, to_pseudocode
from .simplify import build_index, simplify_program
from .tree import Node, Program, evaluate, linear_complexity

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Dataset", "DocumentError", "InfeasibleSplitError", "InputError",
    "LMSettings", "Node", "Program", "SearchConfig", "SearchResult", "SplitSRError",
    "SplitSpec", "StructureError", "add_target_noise", "build_index", "dumps", "evaluate",
    "find_greedy_split", "find_split_threshold", "fit_program", "from_document",
    "generate_dataset",
    "linear_complexity", "lm_fit", "load_csv", "loads", "profile", "run", "simplify_program",
    "split", "to_document", "to_infix", "to_pseudocode",
]
