"""Model dimension presets and training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..episode import EpisodeConfig
from ..geometry import CameraIntrinsics


@dataclass(frozen=True)
class ModelConfig:
    """Dimension configuration for the navigator/pointer.

    The context hidden size equals d_text (the instruction encoder and the
    context LSTM share it). The fused candidate-view feature is
    d_visual_base + d_label + d_obj.
    """

    d_text: int = 64
    d_visual_base: int = 32
    d_label: int = 16
    d_obj: int = 16
    d_word: int = 32
    d_action: int = 16
    d_g: int = 32
    d_loc: int = 16
    mlp_hidden: int = 32
    pointer_hidden: int = 16  # per-direction bi-LSTM size; word states are 2x this
    grid: int = 7
    loc_slots: int = 5
    rel_slots: int = 5
    top_k: int = 3
    margin: float = 0.1
    lambda1: float = 0.5
    lambda2: float = 1.0
    lambda3: float = 1.0
    lambda4: float = 1.0
    max_steps: int = 40
    lan_only: bool = False

    @property
    def fused_dim(self) -> int:
        return self.d_visual_base + self.d_label + self.d_obj

    def episode_config(self, intr: CameraIntrinsics = CameraIntrinsics()) -> EpisodeConfig:
        return EpisodeConfig(
            max_steps=self.max_steps,
            intrinsics=intr,
            view_feature_dim=self.d_visual_base,
        )

    def with_lan_only(self, flag: bool = True) -> "ModelConfig":
        return replace(self, lan_only=flag)


def desk_config(**overrides) -> ModelConfig:
    return replace(ModelConfig(), **overrides) if overrides else ModelConfig()


def paper_scale_config() -> ModelConfig:
    """Dimension preset mirroring the published setup (fused 4736)."""
    return ModelConfig(
        d_text=512,
        d_visual_base=2048,
        d_label=640,
        d_obj=2048,
        d_word=256,
        d_action=128,
        d_g=512,
        d_loc=128,
        mlp_hidden=512,
        pointer_hidden=256,
        grid=14,
    )


def tiny_config() -> ModelConfig:
    """Small enough for exhaustive finite-difference checks."""
    return ModelConfig(
        d_text=6,
        d_visual_base=8,
        d_label=4,
        d_obj=4,
        d_word=5,
        d_action=3,
        d_g=5,
        d_loc=4,
        mlp_hidden=4,
        pointer_hidden=2,
        grid=2,
    )
