"""clickpath: client-side clickstream modeling and pattern mining.

The pipeline runs from raw browser event logs to behavior classification
and next-action prediction: JSONL session logs are linearized into action
paths (dwell-aware, branching- and backtracking-preserving), URLs get
skip-gram embeddings, and a duration-gated recurrent encoder-decoder
classifies browsing behavior and greedily predicts future page visits.
A graph miner extracts five characteristic browsing patterns.
"""

from .errors import ClickpathError
from .events import Behavior, EventKind, SessionEvent, Transition, ingest_events, normalize_url
from .paths import ActionPath, linearize, linearize_visits
from .vocab import Vocabulary, build_vocabulary

__version__ = "0.1.0"

__all__ = [
    "ActionPath",
    "Behavior",
    "ClickpathError",
    "EventKind",
    "SessionEvent",
    "Transition",
    "Vocabulary",
    "build_vocabulary",
    "ingest_events",
    "linearize",
    "linearize_visits",
    "normalize_url",
    "__version__",
]
