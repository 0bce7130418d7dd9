"""Tests for the configuration models."""

from pathlib import Path

import pytest

from mcn_seg.config.constants import PAPER
from mcn_seg.config.settings import (
    PRESETS,
    ArchitectureConfig,
    ContextVariant,
    MpnSettings,
    RunConfig,
    RuntimeSettings,
)
from mcn_seg.exceptions import ConfigError

CONFIGS = Path(__file__).resolve().parents[3] / "configs"


@pytest.mark.unit
class TestContextVariant:
    """Test suite for ContextVariant."""

    @pytest.mark.parametrize(
        "name, variant",
        [
            ("mcn", ContextVariant.MCN),
            ("PlainContext", ContextVariant.PLAIN),
            ("LongSkip", ContextVariant.LONG_SKIP),
            ("short-skip", ContextVariant.SHORT_SKIP),
            ("MCN_LONG_SKIP", ContextVariant.MCN_LONG_SKIP),
        ],
    )
    def test_parse(self, name, variant):
        """Enum values and CamelCase names are accepted."""
        assert ContextVariant.parse(name) is variant

    def test_unknown_lists_choices(self):
        """Unknown names list the valid ones."""
        with pytest.raises(ConfigError, match="mcn_long_skip"):
            ContextVariant.parse("densecrf")

    def test_flags(self):
        """Block type and skip flags."""
        assert ContextVariant.MCN_LONG_SKIP.uses_mcn_blocks
        assert ContextVariant.MCN_LONG_SKIP.has_long_skip
        assert not ContextVariant.SHORT_SKIP.has_long_skip


@pytest.mark.unit
class TestArchitectureConfig:
    """Test suite for ArchitectureConfig."""

    def test_rates_must_double(self):
        """Rates 1, 2, 3 are rejected."""
        with pytest.raises(ConfigError, match="double"):
            ArchitectureConfig.from_kv({"widths": "4,4,4", "rates": "1,2,3"})

    def test_lengths_must_agree(self):
        """One width per rate."""
        with pytest.raises(ConfigError):
            ArchitectureConfig.from_kv({"widths": "4,4", "rates": "1"})

    def test_paper_architecture(self):
        """Full-scale module: 6 layers, rates 1..32."""
        arch = ArchitectureConfig.paper()
        assert arch.widths == list(PAPER.CONTEXT_WIDTHS)
        assert arch.rates == [1, 2, 4, 8, 16, 32]
        assert arch.num_classes == 21

    def test_shipped_paper_file(self):
        """configs/paper_architecture.cfg matches the built-in paper module."""
        arch = ArchitectureConfig.load(CONFIGS / "paper_architecture.cfg")
        assert arch == ArchitectureConfig.paper()


@pytest.mark.unit
class TestRunConfig:
    """Test suite for RunConfig."""

    def test_save_load(self, tmp_path, tiny_run):
        """A saved run file loads back equal."""
        path = tiny_run.save(tmp_path / "run.cfg")
        assert RunConfig.load(path) == tiny_run

    def test_shipped_desk_file_matches_defaults(self):
        """configs/desk.cfg only restates desk defaults (plus checkpoints)."""
        desk = RunConfig.load(CONFIGS / "desk.cfg")
        assert desk.updated(checkpoint_every=0) == RunConfig()

    def test_shipped_paper_file(self):
        """configs/paper.cfg points at the full-width architecture."""
        paper = RunConfig.load(CONFIGS / "paper.cfg")
        assert paper.architecture_config.endswith("paper_architecture.cfg")
        assert paper.batch_size == PAPER.BATCH_SIZE
        assert paper.crop_size == PAPER.CROP_SIZE
        assert paper.eval_scales == [0.5, 1.0, 1.5]

    def test_paper_file_loads_from_any_directory(self, monkeypatch, tmp_path):
        """The architecture reference resolves against configs/, not the CWD."""
        monkeypatch.chdir(tmp_path)
        paper = RunConfig.load(CONFIGS / "paper.cfg")
        paper.check_paths()
        resolved = paper.resolved()
        assert resolved.widths == ArchitectureConfig.paper().widths
        assert resolved.num_classes == 21

    def test_relative_references_follow_the_file(self, tmp_path):
        """Relative paths are joined to the file's directory; absolute ones kept."""
        sub = tmp_path / "sub"
        sub.mkdir()
        ArchitectureConfig.paper().save(sub / "arch.cfg")
        RunConfig(architecture_config="arch.cfg").save(sub / "run.cfg")
        loaded = RunConfig.load(sub / "run.cfg")
        assert Path(loaded.architecture_config) == sub / "arch.cfg"

        absolute = str(sub / "arch.cfg")
        RunConfig(architecture_config=absolute).save(tmp_path / "abs.cfg")
        assert RunConfig.load(tmp_path / "abs.cfg").architecture_config == absolute

    def test_unknown_key(self):
        """Typos in config files are errors."""
        with pytest.raises(ConfigError):
            RunConfig.from_kv({"sede": "1"})

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets(self, name):
        """Every preset applies its variant, refinement and MPN switches."""
        run = RunConfig().with_preset(name)
        assert run.variant is ContextVariant.parse(PRESETS[name]["variant"])
        assert run.refine == PRESETS[name]["refine"]
        assert run.mpn == PRESETS[name]["mpn"]

    def test_unknown_preset(self):
        """Unknown preset names are rejected."""
        with pytest.raises(ConfigError, match="fcn_mcn"):
            RunConfig().with_preset("fcn_unknown")

    def test_fusion_feeds_context(self):
        """Concatenated fusion widens the context input."""
        run = RunConfig(fusion_mode="concat")
        arch = run.architecture_config_model()
        assert arch.input_channels == run.fusion_channels * len(run.fusion_taps)

    def test_mpn_reduced_below_classes(self):
        """Ns >= N is a pipeline configuration error."""
        run = RunConfig(mpn=True, mpn_reduced=3, num_classes=3)
        with pytest.raises(ConfigError, match="MPN"):
            run.pipeline_config()

    def test_resolved_inlines_architecture(self, tmp_path):
        """resolved() copies the referenced architecture into the flat keys."""
        arch = ArchitectureConfig(
            variant="short_skip", input_channels=16, widths=[8], rates=[1]
        )
        path = arch.save(tmp_path / "arch.cfg")
        run = RunConfig(architecture_config=str(path)).resolved()
        assert run.architecture_config == ""
        assert run.variant is ContextVariant.SHORT_SKIP
        assert run.widths == [8]

    def test_check_paths(self, tmp_path):
        """Referenced files must exist."""
        run = RunConfig(trunk_config=str(tmp_path / "missing.cfg"))
        with pytest.raises(ConfigError, match="trunk_config"):
            run.check_paths()

    def test_dataset_seed_offset(self, tiny_run):
        """Held-out data shifts the seed."""
        assert tiny_run.dataset_config(seed_offset=100).seed == tiny_run.seed + 100


@pytest.mark.unit
class TestMpnSettings:
    """Test suite for MpnSettings."""

    @pytest.mark.parametrize(
        "reduced, classes, expected", [(0, 150, 32), (0, 3, 2), (8, 21, 8)]
    )
    def test_reduced_for(self, reduced, classes, expected):
        """Automatic Ns is min(32, N - 1)."""
        assert MpnSettings(reduced=reduced).reduced_for(classes) == expected


@pytest.mark.unit
class TestRuntimeSettings:
    """Test suite for RuntimeSettings."""

    def test_env_threads(self, monkeypatch):
        """MCN_THREADS caps the worker count."""
        monkeypatch.setenv("MCN_THREADS", "3")
        assert RuntimeSettings.from_env().threads == 3

    def test_deterministic_single_thread(self, monkeypatch):
        """Deterministic runs default to one thread."""
        monkeypatch.delenv("MCN_THREADS", raising=False)
        assert RuntimeSettings.from_env(deterministic=True).threads == 1

    def test_invalid_env(self, monkeypatch):
        """Non-integer values are configuration errors."""
        monkeypatch.setenv("MCN_THREADS", "many")
        with pytest.raises(ConfigError, match="MCN_THREADS"):
            RuntimeSettings.from_env()
