"""On-disk artifacts: MCNT tensors, checkpoints and PPM/PGM dumps."""

from mcn_seg.exporters.checkpoint import (
    Checkpoint,
    load_checkpoint,
    restore_pipeline,
    save_checkpoint,
)
from mcn_seg.exporters.images import export_sample, write_image_ppm, write_label_pgm
from mcn_seg.exporters.tensor_io import (
    decode_tensor,
    encode_tensor,
    read_tensor,
    write_tensor,
)

__all__ = [
    "Checkpoint",
    "decode_tensor",
    "encode_tensor",
    "export_sample",
    "load_checkpoint",
    "read_tensor",
    "restore_pipeline",
    "save_checkpoint",
    "write_image_ppm",
    "write_label_pgm",
    "write_tensor",
]
