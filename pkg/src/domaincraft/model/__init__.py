"""Compact encoder-decoder translation model, objectives and training loop."""

from domaincraft.model.bpe import SubwordModel, train_bpe
from domaincraft.model.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from domaincraft.model.decoding import translate, translate_batch
from domaincraft.model.network import ModelConfig, Seq2Seq
from domaincraft.model.noising import NoiseConfig, noise
from domaincraft.model.objectives import NumericError, loss
from domaincraft.model.training import TrainConfig, TrainingDiverged, new_model, train_stage

__all__ = [
    "CheckpointError", "ModelConfig", "NoiseConfig", "NumericError", "Seq2Seq", "SubwordModel",
    "TrainConfig", "TrainingDiverged", "load_checkpoint", "loss", "new_model", "noise",
    "save_checkpoint", "train_bpe", "train_stage", "translate", "translate_batch",
]
