"""Acceptance criteria 1-10, each printed as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines appear in the
terminal summary (and immediately with ``-s``).
"""

import math
import random
import time
from fractions import Fraction

from animtx.changes import AtomicChange, join_data
from animtx.costmodel import (Capacity, BundlingRule, CostModel, bundling_adjustment, capacity,
                              complexity, crossover_ms, load_cost_model, stage_cost)
from animtx.fixtures import REFERENCE_FIXTURES, load_fixture
from animtx.grammar import (ChangeSpec, ComponentRef, Concat, StaggeringSpec, Step, Sync,
                            TimingSpec, TransitionSpec)
from animtx.plan import compile_plan, prepare_timeline, sample
from animtx.recommender import (combine_candidates, detect_changes, enumerate_component_sequences,
                                prune_sequences, recommend, split_changes)
from animtx.scheduler import schedule_timeline
from animtx.stagger import group_windows, overlap_of, resolve_stagger

from conftest import attrs_close, bar_chart, scene_attrs

RESULTS = []


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------- 1

def test_criterion_01_schedule_exactness(zoom):
    _, _, spec = zoom
    best = math.inf
    for _ in range(20):
        t0 = time.perf_counter()
        sched = schedule_timeline(spec.timeline)
        best = min(best, time.perf_counter() - t0)
    got = [(str(s.step.component), s.start_ms, s.end_ms) for s in sched.steps]
    want = [("axis 'x-axis'", 0, 900), ("axis 'y-axis'", 0, 900), ("mark 'lines'", 0, 900),
            ("pause", 900, 1100), ("mark 'lines'", 1100, 2000)]
    ints = all(type(s.start_ms) is int and type(s.end_ms) is int for s in sched.steps)
    ok = sorted(got) == sorted(want) and sched.total_end_ms == 2000 and ints and best < 0.010
    record(1, ok, f"schedule {got}, total {sched.total_end_ms} ms, {best * 1e3:.2f} ms")


# ---------------------------------------------------------------- 2

def test_criterion_02_enumeration_counts(zoom):
    start, end, _ = zoom
    split = split_changes(detect_changes(start, end))
    units = split.units[("mark", "lines")]
    kinds = sorted(c.kind for c in units)
    seqs = enumerate_component_sequences(units, 2)
    keep, pruned = prune_sequences(seqs, start, end, split.riders)
    a = AtomicChange(("mark", "A"), "data")
    b = AtomicChange(("mark", "B"), "data")
    combined, _ = combine_candidates([enumerate_component_sequences([a], 2),
                                      enumerate_component_sequences([b], 2)], 2)
    pairs = sorted(tuple(tuple(c.component[1] for c in s) for s in st) for st in combined)
    ok = (kinds == ["data", "scale.x", "scale.y"] and (len(seqs), len(pruned), len(keep)) == (8, 3, 5)
          and pairs == [(("A",), ("B",)), (("B",), ("A",))])
    record(2, ok, f"raw {len(seqs)}, pruned {len(pruned)}, surviving {len(keep)}; toy combine {pairs}")


# ---------------------------------------------------------------- 3

def test_criterion_03_capacity():
    ini, tuned = load_cost_model("initial"), load_cost_model("tuned")
    c0, c1 = ini.capacity(800), tuned.capacity(1200)
    x = crossover_ms(ini.capacity, tuned.capacity)
    ok = math.isclose(c0, 0.6, abs_tol=1e-12) and math.isclose(c1, 0.7, abs_tol=1e-12) \
        and abs(x - 1373) <= 5
    record(3, ok, f"C_initial(800)={c0:.12f}, C_tuned(1200)={c1:.12f}, crossover {x:.2f} ms")


# ---------------------------------------------------------------- 4

def _mk(comp, kind, **kw):
    return AtomicChange(comp, kind, **kw)


def _hand_checks(model):
    cap = model.capacity
    sx = _mk(("mark", "m"), "scale.x", channels=("x",), dimension="same")
    sy = _mk(("mark", "m"), "scale.y", channels=("y",), dimension="same")
    ay = _mk(("axis", "ya"), "scale.y")
    data = _mk(("mark", "m"), "data", op="filter")
    sdiff = _mk(("mark", "m"), "scale.x", channels=("x",), dimension="different")
    c667 = 1.4 / (1 + math.exp(-(667 - 1200) / 300))
    c2000 = 1.4 / (1 + math.exp(-(2000 - 1200) / 300))
    return [
        ("W(empty)", stage_cost([], model), 0.0),
        ("W{scale.x,scale.y}", stage_cost([sx, sy], model), 0.8),
        ("W{data(filter)}", stage_cost([data], model), 0.65),
        ("B{mark scale.y, y-axis scale}", bundling_adjustment([sy, ay], model), -0.2),
        ("B{mark scale.x, scale.y}", bundling_adjustment([sx, sy], model), -0.2),
        ("B{mark scale.x, scale.y, y-axis}", bundling_adjustment([sx, sy, ay], model), -0.4),
        ("B{dimension change, no encode}", bundling_adjustment([sdiff], model), 0.4),
        ("C_tuned(2000)", capacity(2000, cap), c2000),
        ("C_tuned(667)", capacity(667, cap), c667),
        ("one 2000 ms stage W=0.8 B=-0.2", complexity([[sx, sy]], [2000], model),
         max(0.0, 0.8 - c2000 - 0.2)),
        ("three 667 ms stages W=0.4", complexity([[sx], [sy], [sdiff]], [667] * 3,
                                                 _no_bundling(model)), 3 * (0.4 - c667)),
        ("empty candidate", complexity([], [], model), 0.0),
    ]


def _no_bundling(model):
    return CostModel(model.name, model.weights, model.capacity,
                     tuple(BundlingRule(r.rule_id, r.description, 0.0) for r in model.bundling))


def _random_model(rng, base):
    weights = {k: rng.uniform(0.05, 1.0) for k in base.weights}
    weights["markType"] = min(weights["data.filter"], weights["data.aggregate"]) * rng.uniform(0.1, 0.99)
    cap = Capacity(rng.uniform(0.2, 2.0), rng.uniform(200, 2000), rng.uniform(50, 600),
                   rng.uniform(0, 0.5))
    rules = tuple(BundlingRule(r.rule_id, r.description, rng.uniform(-0.5, 0.5)) for r in base.bundling)
    return CostModel("random", weights, cap, rules)


def _ranking(cands, model):
    scores = [complexity(st, d, model) for st, d in cands]
    ref = max(max(scores), 1e-12)
    return sorted(range(len(cands)), key=lambda i: (round(scores[i] / ref, 9), i))


def test_criterion_04_complexity_conformance():
    model = load_cost_model("tuned")
    checks = _hand_checks(model)
    bad = [(name, got, want) for name, got, want in checks if not math.isclose(got, want, abs_tol=1e-9)]
    cands = []
    for name in REFERENCE_FIXTURES:
        s, e, _ = load_fixture(name)
        rec = recommend(s, e, (1, 2, 3), 2000, model)
        cands += [(c.stages, c.durations) for c in rec.candidates]
    rng = random.Random(4)
    flips = 0
    for _ in range(1000):
        m = _random_model(rng, model)
        c = rng.uniform(0.01, 100)
        if _ranking(cands, m) != _ranking(cands, m.scaled(c)):
            flips += 1
    ok = not bad and flips == 0
    record(4, ok, f"{len(checks) - len(bad)}/{len(checks)} hand scores within 1e-9; "
                  f"{1000 - flips}/1000 scaled models keep the ranking of {len(cands)} candidates"
                  + (f"; mismatches {bad}" if bad else ""))


# ---------------------------------------------------------------- 5

def _bar_case(rng):
    n = rng.randint(2, 8)
    cats = [chr(ord("A") + i) for i in range(n)]
    lo0, lo1 = rng.choice([0, rng.randint(0, 50)]), rng.choice([0, rng.randint(0, 50)])
    v0 = [rng.randint(lo0, lo0 + 60) for _ in cats]
    v1 = [rng.randint(lo1, lo1 + 60) for _ in cats]
    hi0 = max(v0) + rng.choice([0, rng.randint(1, 40)])
    hi1 = max(v1) + rng.choice([0, rng.randint(1, 40)])
    return (bar_chart(v0, hi0, cats=cats, ymin=lo0), bar_chart(v1, hi1, cats=cats, ymin=lo1),
            v0, v1, (lo0, hi0), (lo1, hi1))


def _bar_spec():
    bars = ComponentRef("mark", "bars")
    first = Sync((Step(ComponentRef("axis", "y-axis"), timing=TimingSpec(Fraction(500))),
                  Step(bars, ChangeSpec(data=False), TimingSpec(Fraction(500)))))
    second = Step(bars, ChangeSpec(scale=False), TimingSpec(Fraction(500)))
    return TransitionSpec(Concat((first, second), auto_scale_order=("bars",)))


def test_criterion_05_auto_scale_order():
    rng = random.Random(5)
    spec = _bar_spec()
    t0 = time.perf_counter()
    wrong, stats = [], {"both": 0, "one": 0, "none": 0}
    for i in range(500):
        s, e, v0, v1, (lo0, hi0), (lo1, hi1) = _bar_case(rng)
        # oracle: rescaling first keeps the old values under the new domain; updating
        # the data first puts the new values and the new bar base under the old one
        scale_first_ok = all(lo1 <= v <= hi1 for v in v0)
        data_first_ok = all(lo0 <= v <= hi0 for v in v1 + [lo1])
        n_ok = scale_first_ok + data_first_ok
        stats["both" if n_ok == 2 else "one" if n_ok == 1 else "none"] += 1
        prep = prepare_timeline(spec, s, e)
        chosen_scale_first = isinstance(prep.block.blocks[0], Sync)
        chosen_ok = scale_first_ok if chosen_scale_first else data_first_ok
        warned = bool(prep.warnings)
        if (n_ok and not chosen_ok) or (warned != (n_ok == 0)):
            wrong.append(i)
    dt = time.perf_counter() - t0
    ok = not wrong and dt < 5.0
    record(5, ok, f"500 fixtures ({stats}), {len(wrong)} disagreements with the oracle, {dt:.2f} s")


# ---------------------------------------------------------------- 6

def _nested_loop(a, b, keys):
    def key(r):
        return tuple(r[k] for k in keys)
    enter = [key(y) for y in b if not any(key(x) == key(y) for x in a)]
    update = [key(y) for y in b if any(key(x) == key(y) for x in a)]
    exit_ = [key(x) for x in a if not any(key(x) == key(y) for y in b)]
    return set(enter), set(update), set(exit_)


def test_criterion_06_join_partition():
    rng = random.Random(6)
    bad = 0
    for _ in range(1000):
        keys = rng.choice([("k",), ("k", "g")])
        universe = [(k, g) for k in range(8) for g in "ab"]

        def rows():
            picked = rng.sample(universe, rng.randint(0, 10))
            return [{"k": k, "g": g, "v": rng.random()} for k, g in picked]
        a, b = rows(), rows()
        if keys == ("k",):
            a = list({r["k"]: r for r in a}.values())
            b = list({r["k"]: r for r in b}.values())
        j = join_data(a, b, keys)
        en, up, ex = j.key_sets()
        all_keys = {tuple(r[k] for k in keys) for r in a + b}
        disjoint = not (en & up or en & ex or up & ex)
        covering = en | up | ex == all_keys
        if not (disjoint and covering and (en, up, ex) == _nested_loop(a, b, keys)):
            bad += 1
    record(6, bad == 0, f"1000 fuzzed pairs, {bad} mismatches with the nested-loop oracle")


# ---------------------------------------------------------------- 7

def test_criterion_07_stagger_round_trip():
    rng = random.Random(7)
    worst = 0.0
    for _ in range(500):
        n = rng.randint(2, 50)
        o = rng.random()
        dur = rng.uniform(100, 5000)
        data = [{"i": i} for i in rng.sample(range(n), n)]
        wins = resolve_stagger(data, StaggeringSpec("s", "i", overlap=o), 0, dur)
        ordered = [w for _, w in sorted(zip([d["i"] for d in data], wins))]
        for a, b in zip(ordered, ordered[1:]):
            worst = max(worst, abs(overlap_of(a, b) - o))
    seq = group_windows(10, 0.0, "linear", 0, 1000)
    sim = group_windows(10, 1.0, "linear", 0, 1000)
    sequential = all(a[1] == b[0] for a, b in zip(seq, seq[1:])) and seq[-1][1] == 1000
    simultaneous = all(w == (0.0, 1000.0) for w in sim)
    ok = worst <= 1e-9 and sequential and simultaneous
    record(7, ok, f"max |overlap - o| {worst:.2e}; o=0 sequential {sequential}; "
                  f"o=1 simultaneous {simultaneous}")


# ---------------------------------------------------------------- 8

def test_criterion_08_endpoint_fidelity():
    out = []
    for name in REFERENCE_FIXTURES:
        s, e, spec = load_fixture(name)
        plan = compile_plan(s, e, spec)
        first = attrs_close(sample(plan, 0), scene_attrs(s, plan.keys))
        last = attrs_close(sample(plan, plan.total_ms), scene_attrs(e, plan.keys))
        out.append((name, first, last))
    ok = all(f and l for _, f, l in out)
    record(8, ok, "; ".join(f"{n} t=0 {f} t=total {l}" for n, f, l in out))


# ---------------------------------------------------------------- 9

def test_criterion_09_recommender_regression():
    model = load_cost_model("tuned")
    out = []
    ok = True
    for name in REFERENCE_FIXTURES:
        s, e, _ = load_fixture(name)
        rec = recommend(s, e, (1, 3), 2000, model)
        one = [c for c in rec.candidates if c.n == 1]
        three = [c for c in rec.candidates if c.n == 3]
        rank = {id(c): i for i, c in enumerate(rec.candidates)}
        good = len(one) == 1 and all(rank[id(one[0])] < rank[id(c)] for c in three) \
            and all(one[0].score < c.score for c in three)
        ok = ok and good
        best3 = f"{min(c.score for c in three):.4f}" if three else "none (too few changes)"
        out.append(f"{name} 1-stage {one[0].score:.4f} vs best 3-stage {best3}")
    record(9, ok, "; ".join(out))


# ---------------------------------------------------------------- 10

def test_criterion_10_performance():
    s, e, _ = load_fixture("dot_to_scatter")
    k = len(detect_changes(s, e))
    t0 = time.perf_counter()
    rec = recommend(s, e, (1, 2, 3), 2000, "tuned")
    dt = time.perf_counter() - t0
    assert rec.candidates
    ok = k <= 8 and dt < 5.0
    record(10, ok, f"recommend N<=3 on {k} changes in {dt:.2f} s (suite time in the summary)")
