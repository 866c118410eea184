"""Candidate timelines for a chart pair, ranked by the complexity cost model.

For each component the detected changes are assigned to N stages in every
possible way. Assignments whose cumulative intermediate states break a
constraint are pruned, the survivors of all components are combined (no
stage may end up empty) and view steps are placed by their size effect.

Not every detected change is enumerated. Encode changes of a guide ride
along with that guide's scale change when it has one, and guide signal
changes ride along with the view step for the same dimension.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .changes import (AtomicChange, ChangeSet, Violation, apply_change, change_spec_for,
                      check_state, detect_changes)
from .chart import ChartSpec
from .costmodel import CostModel, complexity, load_cost_model, stage_complexity
from .errors import AnimtxError, RecommendError
from .grammar import ComponentRef, Concat, Step, Sync, TimingSpec, TransitionSpec
from .state import KeyPolicy, endpoint_states, resolve_key_policy

MAX_STAGES = 4
WARN_CANDIDATES = 10 ** 5
MAX_CANDIDATES = 10 ** 6

Sequence_ = tuple  # tuple[tuple[AtomicChange, ...], ...], one entry per stage


# --------------------------------------------------------------------------
# which changes are enumerated

@dataclass
class Enumerable:
    """Changes split into enumerated units and the riders that follow them."""
    units: dict            # component -> [AtomicChange]
    riders: dict           # unit uid -> [AtomicChange]
    views: list            # view.* changes, placed after combination
    view_riders: dict      # dimension -> [AtomicChange] (guide signal changes)


def split_changes(changes: ChangeSet) -> Enumerable:
    view_dims = {c.target for c in changes.all() if c.component[0] == "view"}
    units: dict = {}
    riders: dict = {}
    views: list = []
    view_riders: dict = {}
    for comp, cs in changes.components.items():
        if comp[0] == "view":
            views.extend(cs)
            continue
        if comp[0] == "mark":
            units[comp] = list(cs)
            continue
        scale = next((c for c in cs if c.kind.startswith("scale.")), None)
        own = []
        for c in cs:
            if c.kind.startswith("signal.") and c.target in view_dims:
                view_riders.setdefault(c.target, []).append(c)
            elif c.kind.startswith("encode.") and scale is not None:
                riders.setdefault(scale.uid, []).append(c)
            else:
                own.append(c)
        if own:
            units[comp] = own
    return Enumerable(units, riders, views, view_riders)


# --------------------------------------------------------------------------
# per-component enumeration and pruning

def enumerate_component_sequences(changes: Sequence[AtomicChange], n: int) -> list[Sequence_]:
    """Every assignment of ``changes`` to ``n`` stages (empty stages allowed)."""
    if n < 1:
        raise RecommendError("the number of stages must be at least 1")
    out = []
    for assign in itertools.product(range(n), repeat=len(changes)):
        out.append(tuple(tuple(c for c, s in zip(changes, assign) if s == i) for i in range(n)))
    return out


def check_constraints(state) -> list[Violation]:
    """Constraint violations of one intermediate component state."""
    return check_state(state)


def _with_riders(stage, riders: Mapping) -> list[AtomicChange]:
    out = []
    for c in stage:
        out.append(c)
        out.extend(riders.get(c.uid, ()))
    return out


def sequence_states(seq: Sequence_, start: ChartSpec, end: ChartSpec,
                    riders: Mapping | None = None, policy: KeyPolicy | None = None) -> list:
    """Cumulative component state after each stage of a per-component sequence."""
    comp = next(c.component for stage in seq for c in stage)
    state, tgt = endpoint_states(start, end, *comp)
    out = []
    for stage in seq:
        kinds = {c.kind for c in _with_riders(stage, riders or {})}
        if kinds:
            state = apply_change(state, tgt, change_spec_for(comp[0], kinds), policy)
        out.append(state)
    return out


def sequence_violations(seq: Sequence_, start: ChartSpec, end: ChartSpec,
                        riders: Mapping | None = None, policy: KeyPolicy | None = None
                        ) -> list[tuple[int, Violation]]:
    """``(stage index, violation)`` for every intermediate state of ``seq``."""
    try:
        states = sequence_states(seq, start, end, riders, policy)
    except AnimtxError as exc:
        comp = next(c.component for stage in seq for c in stage)
        return [(0, Violation("Unavailable Encoding", f"{comp[0]} {comp[1]}", str(exc)))]
    return [(i, v) for i, s in enumerate(states[:-1]) for v in check_constraints(s)]


def prune_sequences(sequences: Iterable[Sequence_], start: ChartSpec, end: ChartSpec,
                    riders: Mapping | None = None, policy: KeyPolicy | None = None
                    ) -> tuple[list[Sequence_], list[tuple[Sequence_, list]]]:
    """Split sequences into survivors and ``(pruned sequence, violations)``."""
    keep, pruned = [], []
    for seq in sequences:
        bad = sequence_violations(seq, start, end, riders, policy)
        if bad:
            pruned.append((seq, bad))
        else:
            keep.append(seq)
    return keep, pruned


def combine_candidates(per_component: Sequence[Sequence[Sequence_]], n: int,
                       limit: int = MAX_CANDIDATES) -> tuple[list[tuple], bool]:
    """Cross product of per-component sequences minus combinations with an
    empty stage. Returns the stage lists and whether ``limit`` cut it short."""
    out = []
    seen = 0
    for combo in itertools.product(*per_component):
        seen += 1
        if seen > limit:
            return out, True
        stages = tuple(tuple(c for seq in combo for c in seq[i]) for i in range(n))
        if all(stages):
            out.append(stages)
    return out, False


def insert_view_steps(stages: Sequence[Sequence[AtomicChange]], views: Sequence[AtomicChange],
                      view_riders: Mapping | None = None) -> tuple:
    """Place each view change (and its riders): an expanding one in the first
    stage that expands that dimension, a shrinking one in the last stage
    that shrinks it; without such a stage, the first or the last stage."""
    out = [list(s) for s in stages]
    for v in views:
        dim = v.target
        grows = v.size_effect.get(dim) != "shrinks"
        want = "expands" if grows else "shrinks"
        hits = [i for i, s in enumerate(stages) if any(c.size_effect.get(dim) == want for c in s)]
        if grows:
            i = hits[0] if hits else 0
        else:
            i = hits[-1] if hits else len(out) - 1
        out[i].append(v)
        out[i].extend((view_riders or {}).get(dim, ()))
    return tuple(tuple(s) for s in out)


# --------------------------------------------------------------------------
# candidates

def stage_durations(total_ms: int, n: int) -> tuple[int, ...]:
    """Even split of ``total_ms`` into ``n`` stages, remainder on the last."""
    base = total_ms // n
    return tuple([base] * (n - 1) + [total_ms - base * (n - 1)])


def stage_signature(stages) -> str:
    return " | ".join(",".join(sorted(c.uid for c in s)) for s in stages)


@dataclass
class Candidate:
    stages: tuple            # tuple of stages, each a tuple of AtomicChange
    durations: tuple[int, ...]
    score: float = 0.0
    stage_scores: tuple[float, ...] = ()
    spec: TransitionSpec | None = None

    @property
    def n(self) -> int:
        return len(self.stages)

    @property
    def signature(self) -> str:
        return stage_signature(self.stages)

    def to_doc(self) -> dict:
        from .grammar import transition_to_doc
        doc = {"stages": [[c.uid for c in s] for s in self.stages],
               "durationsMs": list(self.durations), "score": self.score,
               "stageScores": list(self.stage_scores)}
        if self.spec is not None:
            doc["transition"] = transition_to_doc(self.spec)
        return doc


def to_transition_spec(stages, durations, start: ChartSpec, end: ChartSpec) -> TransitionSpec:
    """A root concat of one sync per stage; each sync steps every component
    the stage touches. The stage holding a view change also moves the layout
    signals of every other component."""
    comps_all = []
    for chart in (start, end):
        for m in chart.marks:
            comps_all.append(("mark", m.name))
        for a in chart.axes:
            comps_all.append(("axis", a.name))
        for g in chart.legends:
            comps_all.append(("legend", g.name))
    comps_all = list(dict.fromkeys(comps_all))
    syncs = []
    for stage, dur in zip(stages, durations):
        kinds: dict = {}
        for c in stage:
            kinds.setdefault(c.component, set()).add(c.kind)
        dims = sorted(c.target for c in stage if c.component[0] == "view")
        if dims:
            for comp in comps_all:
                kinds.setdefault(comp, set()).update(f"signal.{d}" for d in dims)
        steps = []
        for comp in sorted(kinds, key=_comp_order):
            ref = ComponentRef("view", "view") if comp[0] == "view" else ComponentRef(*comp)
            steps.append(Step(ref, change_spec_for(comp[0], kinds[comp]),
                              TimingSpec(Fraction(dur))))
        syncs.append(Sync(tuple(steps)))
    return TransitionSpec(Concat(tuple(syncs)))


_KIND_ORDER = {"view": 0, "mark": 1, "axis": 2, "legend": 3}


def _comp_order(comp):
    return (_KIND_ORDER[comp[0]], comp[1])


def score_candidate(stages, durations, model: CostModel) -> tuple[float, tuple[float, ...]]:
    per = tuple(stage_complexity(s, d, model) for s, d in zip(stages, durations))
    return complexity(stages, durations, model), per


def rank_candidates(candidates: Sequence[Candidate], model: CostModel,
                    total_ms: int | None = None) -> list[Candidate]:
    """Ascending complexity; ties go to fewer stages, then the stage signature.
    With ``total_ms`` the durations are reassigned as an even split first."""
    for c in candidates:
        if total_ms is not None:
            c.durations = stage_durations(total_ms, c.n)
        c.score, c.stage_scores = score_candidate(c.stages, c.durations, model)
    return sorted(candidates, key=lambda c: (c.score, c.n, c.signature))


# --------------------------------------------------------------------------
# driver

@dataclass
class StageCount:
    n: int
    raw: int = 0
    pruned: int = 0
    surviving: int = 0
    combined: int = 0
    truncated: bool = False
    components: dict = field(default_factory=dict)   # "kind name" -> (raw, pruned, surviving)

    def to_doc(self) -> dict:
        return {"stages": self.n, "raw": self.raw, "pruned": self.pruned,
                "surviving": self.surviving, "candidates": self.combined,
                "truncated": self.truncated,
                "components": {k: {"raw": r, "pruned": p, "surviving": s}
                               for k, (r, p, s) in self.components.items()}}


@dataclass
class Recommendation:
    candidates: list[Candidate]
    changes: ChangeSet
    counts: list[StageCount]
    warnings: list[str] = field(default_factory=list)
    explanation: list[str] = field(default_factory=list)
    model: str = ""
    total_ms: int = 0

    def to_doc(self, top: int | None = None) -> dict:
        picked = self.candidates if top is None else self.candidates[:top]
        return {"costModel": self.model, "totalDurationMs": self.total_ms,
                "changes": self.changes.to_doc(), "counts": [c.to_doc() for c in self.counts],
                "warnings": list(self.warnings), "explanation": list(self.explanation),
                "candidates": [dict(c.to_doc(), rank=i + 1) for i, c in enumerate(picked)]}


def _stage_list(stages) -> list[int]:
    if isinstance(stages, int):
        stages = [stages]
    out = sorted(set(int(n) for n in stages))
    if not out or out[0] < 1:
        raise RecommendError("stage counts must be at least 1")
    if out[-1] > MAX_STAGES:
        raise RecommendError(f"refusing to enumerate more than {MAX_STAGES} stages "
                             f"(asked for {out[-1]})")
    return out


def recommend(start: ChartSpec, end: ChartSpec, stages=(1, 2, 3), total_ms: int = 2000,
              model: CostModel | str | None = None, top: int | None = None,
              options: Mapping | None = None) -> Recommendation:
    """Enumerate, prune, combine and rank candidate timelines.

    ``options`` is passed to change detection (``dimension``, ``keys``).
    Raises RecommendError when no candidate survives for any stage count.
    """
    if not isinstance(model, CostModel):
        model = load_cost_model(model or "tuned")
    total_ms = int(total_ms)
    if total_ms <= 0:
        raise RecommendError("total duration must be positive")
    ns = _stage_list(stages)
    changes = detect_changes(start, end, options)
    rec = Recommendation([], changes, [], model=model.name, total_ms=total_ms)
    if not len(changes):
        rec.explanation.append("the charts are identical; nothing to animate")
        return rec
    split = split_changes(changes)
    user_keys = dict((options or {}).get("keys", {}))
    policies = {comp: resolve_key_policy(start, end, comp[1], user_keys.get(comp[1]))
                for comp in split.units if comp[0] == "mark"}
    k = sum(len(v) for v in split.units.values())
    rec.explanation.append(f"{len(changes)} detected change(s), {k} enumerated across "
                           f"{len(split.units)} component(s)")
    cands: list[Candidate] = []
    for n in ns:
        count = StageCount(n)
        rec.counts.append(count)
        survivors = []
        if not split.units:
            stages_ = tuple(() for _ in range(n))
            count.raw = count.surviving = 1
            if n == 1:
                survivors_combined = [stages_]
            else:
                survivors_combined = []
                rec.explanation.append(f"N={n}: only view changes, which cannot fill {n} stages")
        else:
            raw_total = n ** k
            if raw_total > WARN_CANDIDATES:
                rec.warnings.append(f"N={n}: {raw_total} raw sequences; enumeration may be slow")
            dead = None
            for comp, units in split.units.items():
                seqs = enumerate_component_sequences(units, n)
                keep, pruned = prune_sequences(seqs, start, end, split.riders, policies.get(comp))
                count.raw += len(seqs)
                count.pruned += len(pruned)
                count.surviving += len(keep)
                count.components[f"{comp[0]} {comp[1]}"] = (len(seqs), len(pruned), len(keep))
                if not keep:
                    dead = (comp, pruned)
                survivors.append(keep)
            if dead is not None:
                comp, pruned = dead
                why = sorted({v.rule for _, bad in pruned for _, v in bad})
                rec.explanation.append(f"N={n}: every sequence of {comp[0]} {comp[1]!r} was pruned "
                                       f"({', '.join(why)})")
                continue
            survivors_combined, cut = combine_candidates(survivors, n)
            count.truncated = cut
            if cut:
                rec.warnings.append(f"N={n}: stopped combining after {MAX_CANDIDATES} combinations")
            if not survivors_combined:
                rec.explanation.append(f"N={n}: every combination leaves a stage empty")
        count.combined = len(survivors_combined)
        durations = stage_durations(total_ms, n)
        for st in survivors_combined:
            full = insert_view_steps(st, split.views, split.view_riders)
            cands.append(Candidate(full, durations))
    # riders are attached to their unit for scoring and spec generation
    for c in cands:
        c.stages = tuple(tuple(_with_riders(s, split.riders)) for s in c.stages)
    ranked = rank_candidates(cands, model)
    if not ranked:
        raise RecommendError("no candidate survives pruning: " + "; ".join(rec.explanation[1:]))
    keep = ranked if top is None else ranked[:top]
    for c in keep:
        c.spec = to_transition_spec(c.stages, c.durations, start, end)
    rec.candidates = keep
    return rec
