"""Pseudo-online evaluation of motor-imagery decoding pipelines.

Recordings are turned into asynchronous window sets by injecting an idle
("nothing") class and sliding overlapping windows, then scored with
imbalance-robust metrics under causal within-session and leave-one-session-out
protocols.
"""

from .core import NOTHING, ConfusionMatrix, EvalRecord, EventSpan, Recording, SkipRecord, WindowSet
from .epoching import WindowConfig, epoch_offline, inject_idle, label_mixed_window, slide_windows
from .errors import PseudoBenchError
from .io import read_recording, read_results, write_recording, write_results

__version__ = "0.1.0"

__all__ = [
    "NOTHING", "ConfusionMatrix", "EvalRecord", "EventSpan", "PseudoBenchError", "Recording",
    "SkipRecord", "WindowConfig", "WindowSet", "epoch_offline", "inject_idle", "label_mixed_window",
    "read_recording", "read_results", "slide_windows", "write_recording", "write_results",
]
