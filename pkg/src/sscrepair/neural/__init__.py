from .hyper import Hyperparams
from .model import EncodedSnippet, Model
from .train import TrainingDiverged, sgd_step, train
from .checkpoint_io import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "Hyperparams", "EncodedSnippet", "Model", "TrainingDiverged", "sgd_step",
    "train", "CheckpointError", "load_checkpoint", "save_checkpoint",
]
