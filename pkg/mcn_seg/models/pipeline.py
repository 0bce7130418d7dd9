"""End-to-end segmentation network.

    image → trunk → fuse_taps → context variant → refinement → [MPN]

The context network runs at the coarsest fused resolution. With refinement
on, its head emits refine-width features and one refinement stage per
finer trunk tap restores resolution; otherwise its class scores are
bilinearly resized to the input size.
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import PipelineConfig, RunConfig
from mcn_seg.lattice.filters import LatticeFilter
from mcn_seg.models.context import ContextNetwork, build_architecture
from mcn_seg.models.fusion import TapFusion
from mcn_seg.models.mpn import MpnParams, mpn_run
from mcn_seg.models.refine import RefinePipeline
from mcn_seg.models.trunk import Trunk, tap_level
from mcn_seg.nn import functional as F
from mcn_seg.nn.layers import Module


def refinement_taps(config: PipelineConfig) -> list[str]:
    """Stage taps finer than the fused grid, ordered coarse to fine."""
    if config.refine.taps:
        return list(config.refine.taps)
    stages = config.trunk.num_stages
    coarse = max(tap_level(t, stages) for t in config.fusion.taps)
    return [f"stage{level + 1}" for level in range(min(coarse, stages) - 1, -1, -1)]


class SegmentationPipeline(Module):
    """Trunk, fusion, context module, refinement and optional MPN."""

    def __init__(self, config: PipelineConfig):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        arch = config.architecture

        self.trunk = Trunk(config.trunk, rng)
        self.fusion = TapFusion(config.fusion, self.trunk.tap_channels, rng)

        taps = refinement_taps(config) if config.refine.enabled else []
        head = config.refine.width if taps else arch.num_classes
        self.context: ContextNetwork = build_architecture(arch, rng, head)
        self.refine = RefinePipeline(
            head,
            taps,
            self.trunk.tap_channels,
            config.refine.width,
            arch.num_classes,
            rng,
        )

        self.mpn: MpnParams | None = None
        if config.mpn.enabled:
            settings = config.mpn
            self.mpn = MpnParams(
                arch.num_classes,
                settings.reduced_for(arch.num_classes),
                settings.iterations,
                LatticeFilter(
                    settings.theta_alpha, settings.theta_beta, settings.normalize
                ),
                rng,
            )

        for module in (self.fusion, self.context, self.refine, self.mpn):
            if module is not None:
                module.set_lr_mult(config.new_layer_lr_mult)

        logger.info(
            f"pipeline: variant={arch.variant.value} refine_stages="
            f"{len(self.refine.stages)} mpn={'on' if self.mpn else 'off'} "
            f"params={self.count_parameters()} "
            f"trainable={self.count_parameters(trainable_only=True)}"
        )

    @classmethod
    def from_run_config(cls, run: RunConfig) -> SegmentationPipeline:
        return cls(run.pipeline_config())

    @classmethod
    def from_preset(
        cls, name: str, run: RunConfig | None = None
    ) -> SegmentationPipeline:
        """Build one of :data:`PRESETS` on top of ``run`` (desk defaults)."""
        return cls.from_run_config((run or RunConfig()).with_preset(name))

    @property
    def divisibility(self) -> int:
        return self.config.trunk.divisibility

    @property
    def num_classes(self) -> int:
        return self.config.architecture.num_classes

    def parameter_report(self) -> dict[str, int]:
        """Parameter count per top-level component."""
        report = {
            "trunk": self.trunk.count_parameters(),
            "fusion": self.fusion.count_parameters(),
            "context": self.context.count_parameters(),
            "refine": self.refine.count_parameters(),
        }
        if self.mpn is not None:
            report["mpn"] = self.mpn.count_parameters()
        return report

    def forward(self, image: Tensor) -> Tensor:
        """``(n, 3, h, w)`` image → ``(n, num_classes, h, w)`` scores."""
        taps = self.trunk(image)
        fused = self.fusion(taps)
        scores = self.refine(self.context(fused), taps)
        if scores.spatial != image.spatial:
            scores = F.resize_bilinear(scores, image.spatial)
        if self.mpn is not None:
            scores = mpn_run(scores, image, self.mpn)
        return scores
