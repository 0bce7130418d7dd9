"""Validated configuration models.

All models are pydantic ``BaseModel``s that round-trip losslessly through
flat ``key=value`` files (see :mod:`mcn_seg.config.kvfile`). The run
configuration is deliberately flat so that one file (plus CLI overrides)
describes a complete experiment; the nested models are derived from it.
"""

from __future__ import annotations

import os
import typing
from enum import Enum
from pathlib import Path
from typing import Any

try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mcn_seg.config.constants import DESK, PAPER
from mcn_seg.config.kvfile import read_kv, split_list, write_kv
from mcn_seg.exceptions import ConfigError


class ContextVariant(str, Enum):
    """The five context-module variants compared in the model table."""

    PLAIN = "plain"
    LONG_SKIP = "long_skip"
    SHORT_SKIP = "short_skip"
    MCN = "mcn"
    MCN_LONG_SKIP = "mcn_long_skip"

    @classmethod
    def parse(cls, name: str | ContextVariant) -> ContextVariant:
        """Accept enum values or CamelCase names (``PlainContext``)."""
        if isinstance(name, ContextVariant):
            return name
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "plaincontext": cls.PLAIN,
            "longskip": cls.LONG_SKIP,
            "shortskip": cls.SHORT_SKIP,
            "mcnlongskip": cls.MCN_LONG_SKIP,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ConfigError(
                f"Unknown variant {name!r} (choose from: {choices})"
            ) from None

    @property
    def uses_mcn_blocks(self) -> bool:
        return self in (ContextVariant.MCN, ContextVariant.MCN_LONG_SKIP)

    @property
    def has_long_skip(self) -> bool:
        return self in (ContextVariant.LONG_SKIP, ContextVariant.MCN_LONG_SKIP)


class FusionMode(str, Enum):
    """How reduced trunk taps are combined."""

    SUM = "sum"
    CONCAT = "concat"


class KVModel(BaseModel):
    """Base for models stored as flat ``key=value`` files."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    @classmethod
    def from_kv(cls, values: dict[str, str]) -> Self:
        """Build from string values; list fields are comma-separated."""
        data: dict[str, Any] = {}
        for key, raw in values.items():
            field = cls.model_fields.get(key)
            if field is not None and typing.get_origin(field.annotation) in (
                list,
                tuple,
            ):
                data[key] = split_list(raw)
            else:
                data[key] = raw
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid {cls.__name__}: {e}") from e

    def to_kv(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    @classmethod
    def load(cls, path: str | Path) -> Self:
        return cls.from_kv(read_kv(path))

    def save(self, path: str | Path, header: str | None = None) -> Path:
        return write_kv(path, self.to_kv(), header=header)

    def updated(self, **changes: Any) -> Self:
        """Return a validated copy with ``changes`` applied."""
        try:
            return self.model_validate({**self.model_dump(), **changes})
        except ValidationError as e:
            raise ConfigError(f"Invalid {type(self).__name__}: {e}") from e


class TrunkConfig(KVModel):
    """Desk-scale fully-convolutional backbone."""

    in_channels: int = Field(default=3, ge=1)
    stage_widths: list[int] = Field(
        default_factory=lambda: list(DESK.TRUNK_WIDTHS), min_length=1
    )
    convs_per_stage: int = Field(default=DESK.CONVS_PER_STAGE, ge=1)
    fc_channels: int = Field(default=DESK.FC_CHANNELS, ge=1)
    use_norm: bool = True
    freeze_mask: list[bool] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if any(w < 1 for w in self.stage_widths):
            raise ValueError("stage widths must be >= 1")
        if self.freeze_mask and len(self.freeze_mask) != self.num_taps:
            raise ValueError(
                f"freeze_mask needs {self.num_taps} entries "
                "(one per stage plus the fc head)"
            )
        return self

    @property
    def num_stages(self) -> int:
        return len(self.stage_widths)

    @property
    def num_taps(self) -> int:
        return self.num_stages + 1

    @property
    def divisibility(self) -> int:
        return 2**self.num_stages

    @property
    def tap_names(self) -> list[str]:
        return [f"stage{i + 1}" for i in range(self.num_stages)] + ["fc"]


class FusionConfig(KVModel):
    """Channel reduction and fusion of the selected trunk taps."""

    taps: list[str] = Field(
        default_factory=lambda: list(DESK.FUSION_TAPS), min_length=1
    )
    channels: int = Field(default=DESK.FUSION_CHANNELS, ge=1)
    mode: FusionMode = FusionMode.SUM
    freeze_reduce: bool = False

    @property
    def output_channels(self) -> int:
        if self.mode is FusionMode.CONCAT:
            return self.channels * len(self.taps)
        return self.channels


class ArchitectureConfig(KVModel):
    """Context-module variant plus its per-layer widths and rates."""

    variant: ContextVariant = ContextVariant.MCN
    input_channels: int = Field(default=DESK.FUSION_CHANNELS, ge=1)
    widths: list[int] = Field(
        default_factory=lambda: list(DESK.CONTEXT_WIDTHS), min_length=1
    )
    rates: list[int] = Field(
        default_factory=lambda: list(DESK.CONTEXT_RATES), min_length=1
    )
    num_classes: int = Field(default=DESK.NUM_CLASSES, ge=1)
    use_norm: bool = False

    @model_validator(mode="before")
    @classmethod
    def _parse_variant(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("variant"), str):
            data = {**data, "variant": ContextVariant.parse(data["variant"])}
        return data

    @model_validator(mode="after")
    def _check(self) -> Self:
        if len(self.widths) != len(self.rates):
            raise ValueError(
                f"widths ({len(self.widths)}) and rates ({len(self.rates)}) "
                "must have equal length"
            )
        if any(w < 1 for w in self.widths):
            raise ValueError("widths must be >= 1")
        if any(r < 1 for r in self.rates):
            raise ValueError("rates must be >= 1")
        for lower, upper in zip(self.rates, self.rates[1:], strict=False):
            if upper != 2 * lower:
                raise ValueError(
                    f"rates must double layer over layer, got {self.rates}"
                )
        return self

    @classmethod
    def paper(
        cls,
        variant: ContextVariant = ContextVariant.MCN,
        num_classes: int = PAPER.VOC_CLASSES,
    ) -> ArchitectureConfig:
        """Full-scale widths 256..1024 with rates 1..32."""
        return cls(
            variant=variant,
            input_channels=PAPER.CONTEXT_INPUT_CHANNELS,
            widths=list(PAPER.CONTEXT_WIDTHS),
            rates=list(PAPER.CONTEXT_RATES),
            num_classes=num_classes,
        )


class RefineConfig(KVModel):
    """Stagewise refinement towards the finer trunk taps."""

    enabled: bool = True
    width: int = Field(default=DESK.REFINE_WIDTH, ge=1)
    taps: list[str] = Field(default_factory=list)


class MpnSettings(KVModel):
    """Message passing network settings (``reduced=0`` means automatic)."""

    enabled: bool = False
    reduced: int = Field(default=0, ge=0)
    iterations: int = Field(default=PAPER.MPN_ITERATIONS, ge=0)
    theta_alpha: float = Field(default=DESK.THETA_ALPHA, gt=0)
    theta_beta: float = Field(default=DESK.THETA_BETA, gt=0)
    normalize: bool = True

    def reduced_for(self, num_classes: int) -> int:
        """Resolve the reduced channel count for ``num_classes`` classes."""
        if self.reduced:
            return self.reduced
        return max(1, min(DESK.MPN_REDUCED, num_classes - 1))


class OptimizerConfig(KVModel):
    base_lr: float = Field(default=PAPER.BASE_LR, gt=0)
    momentum: float = Field(default=PAPER.MOMENTUM, ge=0, lt=1)
    lr_factor: float = Field(default=PAPER.LR_FACTOR, gt=0)
    lr_period: int = Field(default=DESK.LR_PERIOD, ge=1)
    weight_decay: float = Field(default=0.0, ge=0)
    new_layer_lr_mult: float = Field(default=1.0, gt=0)


class AugmentConfig(KVModel):
    flip_prob: float = Field(default=0.5, ge=0, le=1)
    scale_min: float = Field(default=PAPER.SCALE_MIN, gt=0)
    scale_max: float = Field(default=PAPER.SCALE_MAX, gt=0)
    crop_size: int = Field(default=DESK.CROP_SIZE, ge=1)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min must not exceed scale_max")
        return self


class DatasetConfig(KVModel):
    seed: int = 0
    count: int = Field(default=DESK.DATASET_COUNT, ge=1)
    num_classes: int = Field(default=DESK.NUM_CLASSES, ge=2)
    image_size: int = Field(default=DESK.IMAGE_SIZE, ge=8)
    max_shapes: int = Field(default=DESK.MAX_SHAPES, ge=1)


class PipelineConfig(BaseModel):
    """Everything needed to build a :class:`SegmentationPipeline`."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    trunk: TrunkConfig = Field(default_factory=TrunkConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    refine: RefineConfig = Field(default_factory=RefineConfig)
    mpn: MpnSettings = Field(default_factory=MpnSettings)
    new_layer_lr_mult: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check(self) -> Self:
        known = set(self.trunk.tap_names)
        missing = [t for t in self.fusion.taps if t not in known]
        if missing:
            raise ValueError(f"fusion taps {missing} not among {sorted(known)}")
        if self.architecture.input_channels != self.fusion.output_channels:
            raise ValueError(
                f"architecture.input_channels={self.architecture.input_channels}"
                f" but fusion emits {self.fusion.output_channels} channels"
            )
        if self.mpn.enabled:
            reduced = self.mpn.reduced_for(self.architecture.num_classes)
            if reduced >= self.architecture.num_classes:
                raise ValueError(
                    f"MPN reduced channels ({reduced}) must be smaller than "
                    f"the class count ({self.architecture.num_classes})"
                )
        return self


# Named pipelines from the model comparison table.
PRESETS: dict[str, dict[str, Any]] = {
    "fcn_256ct": {"variant": "plain", "refine": False, "mpn": False},
    "fcn_256ct_long_skip": {"variant": "long_skip", "refine": False, "mpn": False},
    "fcn_256ct_short_skip": {
        "variant": "short_skip",
        "refine": False,
        "mpn": False,
    },
    "fcn_mcn": {"variant": "mcn", "refine": False, "mpn": False},
    "fcn_mcn_long_skip": {"variant": "mcn_long_skip", "refine": False, "mpn": False},
    "fcn_mcn_refine": {"variant": "mcn", "refine": True, "mpn": False},
    "fcn_mcn_refine_mpn": {"variant": "mcn", "refine": True, "mpn": True},
}


class RunConfig(KVModel):
    """Flat experiment configuration (one ``key=value`` file).

    ``architecture_config`` and ``trunk_config`` optionally point at
    separate files whose values replace the inline architecture/trunk keys.
    """

    seed: int = 0
    deterministic: bool = False

    architecture_config: str = ""
    trunk_config: str = ""

    variant: ContextVariant = ContextVariant.MCN
    widths: list[int] = Field(default_factory=lambda: list(DESK.CONTEXT_WIDTHS))
    rates: list[int] = Field(default_factory=lambda: list(DESK.CONTEXT_RATES))
    context_norm: bool = False

    trunk_widths: list[int] = Field(
        default_factory=lambda: list(DESK.TRUNK_WIDTHS)
    )
    convs_per_stage: int = Field(default=DESK.CONVS_PER_STAGE, ge=1)
    fc_channels: int = Field(default=DESK.FC_CHANNELS, ge=1)
    trunk_norm: bool = True
    freeze_mask: list[bool] = Field(default_factory=list)

    fusion_taps: list[str] = Field(default_factory=lambda: list(DESK.FUSION_TAPS))
    fusion_channels: int = Field(default=DESK.FUSION_CHANNELS, ge=1)
    fusion_mode: FusionMode = FusionMode.SUM
    freeze_fusion: bool = False

    refine: bool = True
    refine_width: int = Field(default=DESK.REFINE_WIDTH, ge=1)

    mpn: bool = False
    mpn_reduced: int = Field(default=0, ge=0)
    mpn_iterations: int = Field(default=PAPER.MPN_ITERATIONS, ge=0)
    theta_alpha: float = Field(default=DESK.THETA_ALPHA, gt=0)
    theta_beta: float = Field(default=DESK.THETA_BETA, gt=0)

    num_classes: int = Field(default=DESK.NUM_CLASSES, ge=2)
    dataset_count: int = Field(default=DESK.DATASET_COUNT, ge=1)
    image_size: int = Field(default=DESK.IMAGE_SIZE, ge=8)
    max_shapes: int = Field(default=DESK.MAX_SHAPES, ge=1)

    steps: int = Field(default=DESK.STEPS, ge=0)
    batch_size: int = Field(default=DESK.BATCH_SIZE, ge=1)
    base_lr: float = Field(default=PAPER.BASE_LR, gt=0)
    lr_factor: float = Field(default=PAPER.LR_FACTOR, gt=0)
    lr_period: int = Field(default=DESK.LR_PERIOD, ge=1)
    momentum: float = Field(default=PAPER.MOMENTUM, ge=0, lt=1)
    weight_decay: float = Field(default=0.0, ge=0)
    new_layer_lr_mult: float = Field(default=1.0, gt=0)

    flip_prob: float = Field(default=0.5, ge=0, le=1)
    scale_min: float = Field(default=PAPER.SCALE_MIN, gt=0)
    scale_max: float = Field(default=PAPER.SCALE_MAX, gt=0)
    crop_size: int = Field(default=DESK.CROP_SIZE, ge=1)

    checkpoint_every: int = Field(default=0, ge=0)
    eval_count: int = Field(default=8, ge=1)
    eval_scales: list[float] = Field(default_factory=lambda: [1.0], min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _parse_variant(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("variant"), str):
            data = {**data, "variant": ContextVariant.parse(data["variant"])}
        return data

    @classmethod
    def load(cls, path: str | Path) -> Self:
        """Read a run file.

        Relative ``architecture_config`` and ``trunk_config`` values are
        taken relative to the file's own directory, not the working one.
        """
        run = super().load(path)
        base = Path(path).parent
        changes = {
            key: str(base / value)
            for key in ("architecture_config", "trunk_config")
            if (value := getattr(run, key)) and not Path(value).is_absolute()
        }
        return run.updated(**changes) if changes else run

    def with_preset(self, name: str) -> RunConfig:
        """Apply one of the named model-table pipelines."""
        if name not in PRESETS:
            raise ConfigError(
                f"Unknown preset {name!r} (choose from: {', '.join(PRESETS)})"
            )
        return self.updated(**PRESETS[name])

    def trunk_config_model(self) -> TrunkConfig:
        if self.trunk_config:
            return TrunkConfig.load(self.trunk_config)
        return TrunkConfig(
            stage_widths=self.trunk_widths,
            convs_per_stage=self.convs_per_stage,
            fc_channels=self.fc_channels,
            use_norm=self.trunk_norm,
            freeze_mask=self.freeze_mask,
        )

    def fusion_config(self) -> FusionConfig:
        return FusionConfig(
            taps=self.fusion_taps,
            channels=self.fusion_channels,
            mode=self.fusion_mode,
            freeze_reduce=self.freeze_fusion,
        )

    def architecture_config_model(self) -> ArchitectureConfig:
        if self.architecture_config:
            return ArchitectureConfig.load(self.architecture_config)
        return ArchitectureConfig(
            variant=self.variant,
            input_channels=self.fusion_config().output_channels,
            widths=self.widths,
            rates=self.rates,
            num_classes=self.num_classes,
            use_norm=self.context_norm,
        )

    def pipeline_config(self) -> PipelineConfig:
        try:
            return PipelineConfig(
                seed=self.seed,
                trunk=self.trunk_config_model(),
                fusion=self.fusion_config(),
                architecture=self.architecture_config_model(),
                refine=RefineConfig(enabled=self.refine, width=self.refine_width),
                mpn=MpnSettings(
                    enabled=self.mpn,
                    reduced=self.mpn_reduced,
                    iterations=self.mpn_iterations,
                    theta_alpha=self.theta_alpha,
                    theta_beta=self.theta_beta,
                ),
                new_layer_lr_mult=self.new_layer_lr_mult,
            )
        except ValidationError as e:
            raise ConfigError(f"Invalid pipeline configuration: {e}") from e

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            base_lr=self.base_lr,
            momentum=self.momentum,
            lr_factor=self.lr_factor,
            lr_period=self.lr_period,
            weight_decay=self.weight_decay,
            new_layer_lr_mult=self.new_layer_lr_mult,
        )

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(
            flip_prob=self.flip_prob,
            scale_min=self.scale_min,
            scale_max=self.scale_max,
            crop_size=self.crop_size,
        )

    def dataset_config(self, seed_offset: int = 0) -> DatasetConfig:
        return DatasetConfig(
            seed=self.seed + seed_offset,
            count=self.dataset_count,
            num_classes=self.num_classes,
            image_size=self.image_size,
            max_shapes=self.max_shapes,
        )

    def resolved(self) -> RunConfig:
        """Copy with referenced architecture/trunk files inlined."""
        changes: dict[str, Any] = {"architecture_config": "", "trunk_config": ""}
        if self.architecture_config:
            arch = self.architecture_config_model()
            changes.update(
                variant=arch.variant,
                widths=arch.widths,
                rates=arch.rates,
                num_classes=arch.num_classes,
                context_norm=arch.use_norm,
            )
        if self.trunk_config:
            trunk = self.trunk_config_model()
            changes.update(
                trunk_widths=trunk.stage_widths,
                convs_per_stage=trunk.convs_per_stage,
                fc_channels=trunk.fc_channels,
                trunk_norm=trunk.use_norm,
                freeze_mask=trunk.freeze_mask,
            )
        return self.updated(**changes)

    def check_paths(self) -> None:
        """Every referenced path must exist before a command runs."""
        for key in ("architecture_config", "trunk_config"):
            value = getattr(self, key)
            if value and not Path(value).is_file():
                raise ConfigError(f"{key} points at a missing file: {value}")


class RuntimeSettings(BaseModel):
    """Process-level settings read from the environment."""

    threads: int = Field(default=1, ge=1)
    deterministic: bool = False

    @classmethod
    def from_env(cls, deterministic: bool = False) -> RuntimeSettings:
        """Read ``MCN_THREADS`` (worker cap for data and filter parallelism).

        Environment Variables:
            MCN_THREADS: maximum worker threads (default: 1 when
                deterministic, otherwise the CPU count)
        """
        raw = os.getenv("MCN_THREADS")
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                raise ConfigError(
                    f"MCN_THREADS must be an integer, got {raw!r}"
                ) from None
        elif deterministic:
            threads = 1
        else:
            threads = os.cpu_count() or 1
        try:
            return cls(threads=max(1, threads), deterministic=deterministic)
        except ValidationError as e:
            raise ConfigError(f"Invalid runtime settings: {e}") from e
