"""Navigator/pointer model: co-grounding navigation with frontier search,
a modular referring-expression pointer, interaction fusion, and the
combined training losses."""

from .config import ModelConfig, desk_config, paper_scale_config, tiny_config
from .losses import (
    EpisodeRecord,
    PointerExample,
    StepRecord,
    build_teacher_record,
    loss_exp,
    loss_nav,
    loss_total,
)
from .network import NavPointModel, build_model, load_checkpoint, save_checkpoint
from .search import FrontierPlanner, frontier_search
from .training import (
    TrainConfig,
    TrainResult,
    build_pointer_examples,
    format_train_config,
    parse_train_config,
    train,
    write_loss_curve,
)
from .vocab import Vocab

__all__ = [
    "EpisodeRecord", "FrontierPlanner", "ModelConfig", "NavPointModel",
    "PointerExample", "StepRecord", "TrainConfig", "TrainResult", "Vocab",
    "build_model", "build_pointer_examples", "build_teacher_record",
    "desk_config", "format_train_config", "frontier_search", "load_checkpoint",
    "loss_exp", "loss_nav", "loss_total", "paper_scale_config",
    "parse_train_config", "save_checkpoint", "tiny_config", "train",
    "write_loss_curve",
]
