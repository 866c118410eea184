"""Compile and recommend animated transitions between two single-view charts."""

from .chart import ChartSpec, load_chart, parse_chart
from .changes import detect_changes, join_aggregate, join_data, thread_step_states
from .costmodel import CostModel, capacity, complexity, load_cost_model
from .grammar import TransitionSpec, load_transition, parse_transition, validate_transition
from .plan import AnimationPlan, compile_plan, interpolate_attrs, parse_plan, sample, serialize_plan
from .recommender import recommend
from .scene import render_scene
from .scheduler import schedule_timeline

__version__ = "0.1.0"

__all__ = [
    "AnimationPlan", "ChartSpec", "CostModel", "TransitionSpec", "capacity", "compile_plan",
    "complexity", "detect_changes", "interpolate_attrs", "join_aggregate", "join_data",
    "load_chart", "load_cost_model", "load_transition", "parse_chart", "parse_plan",
    "parse_transition", "recommend", "render_scene", "sample", "schedule_timeline",
    "serialize_plan", "thread_step_states", "validate_transition",
]
