"""Shared helpers."""

from mcn_seg.utils.parallel import parallel_map, set_thread_cap, thread_cap

__all__ = ["parallel_map", "set_thread_cap", "thread_cap"]
