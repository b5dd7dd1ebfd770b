"""labelprob-adapter: serve deterministic next-token label log-probabilities
from a local transformer checkpoint over the label-logprob HTTP protocol.
"""

from .config import AdapterConfig
from .scoring import LabelScorer, PromptTooLongError, ScoringError, UnknownLabelError, load_model
from .service import create_app, create_app_from_config
from .tiny import build_tiny_checkpoint

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "LabelScorer",
    "PromptTooLongError",
    "ScoringError",
    "UnknownLabelError",
    "build_tiny_checkpoint",
    "create_app",
    "create_app_from_config",
    "load_model",
]
