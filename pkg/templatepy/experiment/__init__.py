"""
Running evaluations: configuration, records, recorders, and summaries.
"""

# Utility files.
from .config import EnsembleConfig, RunConfig, TemplateSource
from .records import RunRecord, iter_records, read_records, records_frame
from .recorders import JsonlRecorder, MemoryRecorder, ProgressRecorder, Recorder

from .evaluation import Cell, Evaluation, run_evaluation
from .summary import summarize, unit_accuracies
