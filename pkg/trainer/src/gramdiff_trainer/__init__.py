"""Training side of the Gram-guided diffusion channel estimator."""

__version__ = "0.1.0"

from .formats import load_dataset, read_goldens, read_weights, schedule_hash, write_goldens, write_weights
from .model import NoisePredictor, time_embedding
from .train import TrainResult, TrainSpec, export_goldens, make_alpha_bar, train
