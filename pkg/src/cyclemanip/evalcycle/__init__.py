from .counters import (
    CounterConfig,
    CycleEvent,
    count_contacts,
    count_peaks,
    count_revolutions,
)
from .judge import (
    HOME_TOLERANCE,
    CycleReport,
    MetricsSummary,
    aggregate,
    default_counter_config,
    judge_episode,
    render_table,
    reports_to_json,
)

__all__ = [
    "HOME_TOLERANCE",
    "CounterConfig",
    "CycleEvent",
    "CycleReport",
    "MetricsSummary",
    "aggregate",
    "count_contacts",
    "count_peaks",
    "count_revolutions",
    "default_counter_config",
    "judge_episode",
    "render_table",
    "reports_to_json",
]
