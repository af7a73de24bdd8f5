"""Classical cellular automata, their pair diagrams, and the linearized
(quantized) evolution on finite configurations."""

from .core import EMPTY, Alphabet, Config, Rule, canonicalize, parse_config, parse_rule, shift_config, step
from .debruijn import build_pair_graph, classify, inverse_neighborhood, preimages, pump_witness
from .errors import QCAError

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "Alphabet",
    "Config",
    "Rule",
    "QCAError",
    "build_pair_graph",
    "canonicalize",
    "classify",
    "inverse_neighborhood",
    "parse_config",
    "parse_rule",
    "preimages",
    "pump_witness",
    "shift_config",
    "step",
    "__version__",
]
