"""Training, evaluation, checkpoints and the command-line front end."""
from .checkpoint import Checkpoint
from .config import TrainConfig, WindowSet
from .evaluation import EvalReport, evaluate, evaluate_baseline
from .training import train

__all__ = ["Checkpoint", "TrainConfig", "WindowSet", "EvalReport", "evaluate", "evaluate_baseline", "train"]
