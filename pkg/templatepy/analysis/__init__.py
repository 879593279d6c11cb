"""
Analysis of run records: accuracy aggregation, template transfer, rank decay, and component breakdowns.
"""

from .metrics import (
    ComponentGroup, TemplateScore, accuracy, aggregate, component_breakdown, count_wins, iou, rank_curve, spearman,
    top_k
)
from .transfer import (
    WinsReport, breakdown_frame, component_frame, rank_curve_frame, template_scores, transfer_matrix, wins_report
)
