import json
import logging
import math

import jsonschema
import numpy as np
import pytest

from tvpath import (PathSegment, SolverParams, compute_path, constant_solution, group_value,
                    initial_partition_and_lambda, make_signal, merge_groups, next_event,
                    path_from_dict, path_to_dict, solve_at, solve_k2)
from tvpath.formats import dumps
from tvpath.path import (PATH_SCHEMA, PathSolverError, make_group, safe_lambda_floor, stage1_partition,
                         stage1_valid)

from corpus import golden, random_signal


def test_group_value_examples():
    sig = golden()
    g12 = make_group(sig, 0, 1, 0, 1)
    assert g12.W == 3 and g12.M == pytest.approx(4 / 3, abs=1e-15)
    assert group_value(g12, 2.0, 0.8) == pytest.approx(37 / 24, abs=1e-15)
    g3 = make_group(sig, 2, 2, 1, 1)
    assert g3.a == 0
    for lam in (0.01, 1.0, 100.0):
        assert group_value(g3, 2.0, lam) == 3
        assert group_value(g3, 1.5, lam) == 3
    g5 = make_group(sig, 4, 4, 1, -1)
    assert g5.a == 2 and group_value(g5, 2.0, 2.0) == 5.5


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_group_value_solves_equation(p):
    sig = golden()
    g = make_group(sig, 1, 4, -1, -1)
    for lam in (0.1, 1.0, 10.0):
        u = group_value(g, p, lam)
        el = g.a + p * lam * sum(L * math.copysign(abs(u - f) ** (p - 1), u - f)
                                 for L, f in zip(g.lengths, g.values))
        assert abs(el) < 1e-9


def test_constant_solution_examples():
    c, lam_bar = constant_solution(golden(), 2.0)
    assert c == pytest.approx(31 / 9, abs=1e-15)
    assert lam_bar == pytest.approx(0.05, abs=1e-15)
    c, lam_bar = constant_solution(make_signal((2,), (4,)), 1.5)
    assert c == 4 and lam_bar == math.inf
    c, _ = constant_solution(golden(), 1.0)
    assert c == 4  # lowest weighted median


def test_safe_floor_is_constant_regime():
    rng = np.random.default_rng(31)
    for _ in range(30):
        sig = random_signal(rng, 2, 8)
        for p in (1.5, 2.0, 3.0):
            c, _ = constant_solution(sig, p)
            u = solve_at(sig, p, safe_lambda_floor(sig, p)).values
            assert max(abs(x - c) for x in u) < 1e-10


def test_initial_partition():
    sig = golden()
    assert stage1_valid(sig, 2.0, 2.0)
    assert not stage1_valid(sig, 2.0, 0.9)
    groups, lam0 = initial_partition_and_lambda(sig, 2.0)
    assert len(groups) == 6 and stage1_valid(sig, 2.0, lam0)
    assert [(g.s_left, g.s_right) for g in groups] == [(0, -1), (-1, 1), (1, 1), (1, 1),
                                                       (1, -1), (-1, 0)]
    with pytest.raises(ValueError):
        initial_partition_and_lambda(sig, 1.0)


def test_next_event_and_merge_examples():
    sig = golden()
    groups = stage1_partition(sig)
    ev = next_event(PathSegment(0.0, 2.0, groups), 2.0)
    assert ev.lambda_star == pytest.approx(1.0, abs=1e-15)
    assert ev.merges == ((0, 1), (3, 4))
    groups = merge_groups(groups, ev.merges)
    assert [(g.lo, g.hi) for g in groups] == [(0, 1), (2, 2), (3, 4), (5, 5)]
    ev = next_event(PathSegment(0.0, 1.0, groups), 2.0)
    assert ev.lambda_star == pytest.approx(7 / 16, abs=1e-15) and ev.merges == ((2, 3),)
    groups = merge_groups(groups, ev.merges)
    ev = next_event(PathSegment(0.0, 7 / 16, groups), 2.0)
    assert ev.lambda_star == pytest.approx(0.1, abs=1e-15) and ev.merges == ((0, 1),)
    groups = merge_groups(groups, ev.merges)
    assert [(g.lo, g.hi) for g in groups] == [(0, 2), (3, 5)]
    ev = next_event(PathSegment(0.0, 0.1, groups), 2.0)
    assert ev.lambda_star == pytest.approx(9 / 122, abs=1e-15)
    assert next_event(PathSegment(0.0, 0.1, merge_groups(groups, ev.merges)), 2.0) is None


def test_general_p_event_matches_closed_form():
    # k = 2 event is the closed-form threshold
    sig = make_signal((0.7, 1.9), (-1.0, 2.5))
    for p in (1.5, 3.0):
        path = compute_path(sig, p)
        assert len(path.events) == 1
        thr = solve_k2(p, 1.0, 0.7, 1.9, -1.0, 2.5).lambda_threshold
        assert path.events[0].lambda_star == pytest.approx(thr, rel=1e-9)


def test_merge_groups_rejects_non_adjacent():
    groups = stage1_partition(golden())
    with pytest.raises(ValueError):
        merge_groups(groups, [(0, 2)])
    merged = merge_groups(groups, [(0, 1), (1, 2)])
    assert [(g.lo, g.hi) for g in merged][0] == (0, 2)
    assert merged[0].s_left == 0 and merged[0].s_right == 1


def test_solve_at_examples():
    sig = golden()
    assert solve_at(sig, 2.0, 2.0).values == pytest.approx((1.75, 1.25, 3, 5, 5.5, 4.125),
                                                           abs=1e-15)
    assert solve_at(sig, 2.0, 0.08).values == pytest.approx((3.3125,) * 3 + (3.55,) * 3,
                                                            abs=1e-14)
    assert solve_at(sig, 2.0, 0.05).values == pytest.approx((31 / 9,) * 6, abs=1e-15)
    with pytest.raises(ValueError):
        solve_at(sig, 2.0, 0.0)
    with pytest.raises(ValueError):
        solve_at(sig, 1.0, 1.0)


def test_small_paths():
    path = compute_path(make_signal((1, 1), (0, 1)), 2.0)
    assert [e.lambda_star for e in path.events] == [1.0]
    assert path.evaluate(2.0).values == (0.25, 0.75)
    assert path.evaluate(0.5).values == (0.5, 0.5)
    path = compute_path(make_signal((3,), (2.5,)), 1.5)
    assert path.events == () and path.terminal_value == 2.5
    assert len(path.segments) == 1 and path.evaluate(1e-3).values == (2.5,)


def _path_samples(sig, p, n=40):
    path = compute_path(sig, p)
    lo = safe_lambda_floor(sig, p) / 4 if sig.k > 1 else 0.1
    hi = 4 * path.lambda0 if sig.k > 1 else 10
    return path, [float(x) for x in np.geomspace(hi, lo, n)]


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_segment_structure(p):
    rng = np.random.default_rng(int(100 * p))
    for _ in range(25):
        sig = random_signal(rng, 2, 8)
        path = compute_path(sig, p)
        assert path.terminal_value == pytest.approx(constant_solution(sig, p)[0], abs=1e-12)
        lams = [ev.lambda_star for ev in path.events]
        assert all(b < a for a, b in zip(lams, lams[1:]))
        # partitions only coarsen
        parts = [set((g.lo, g.hi) for g in s.groups) for s in path.segments]
        for a, b in zip(parts, parts[1:]):
            assert len(b) < len(a)
            assert all(any(lo <= x and y <= hi for lo, hi in b) for x, y in a)
        for seg in path.segments:
            top = seg.lambda_hi if math.isfinite(seg.lambda_hi) else 4 * path.lambda0
            bottom = seg.lambda_lo if seg.lambda_lo > 0 else top / 100
            grid = np.geomspace(top, bottom, 6)
            for g in seg.groups:
                vals = [group_value(g, p, lam) for lam in grid]
                if g.a == 0:
                    assert max(vals) - min(vals) <= 1e-12 * max(1, abs(vals[0]))
                elif g.a > 0:   # both neighbours below: falls as lambda decreases
                    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
                else:
                    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_continuity_across_events(p):
    rng = np.random.default_rng(int(7 * p))
    for _ in range(20):
        sig = random_signal(rng, 2, 8)
        path = compute_path(sig, p)
        for ev in path.events:
            lam = ev.lambda_star
            above = path.evaluate(lam * (1 + 1e-11)).values
            below = path.evaluate(lam * (1 - 1e-11)).values
            assert max(abs(a - b) for a, b in zip(above, below)) <= 1e-8
        # Lipschitz-like behaviour away from events
        for lam in np.geomspace(path.lambda0, path.segments[-1].lambda_hi / 2, 7):
            d = max(abs(a - b) for a, b in zip(path.evaluate(lam).values,
                                               path.evaluate(lam * (1 + 1e-7)).values))
            assert d <= 1e-4


def test_strict_interior_and_data_never_optimal():
    rng = np.random.default_rng(41)
    for _ in range(30):
        sig = random_signal(rng, 2, 8)
        for p in (1.5, 2.0, 3.0):
            path, grid = _path_samples(sig, p, 15)
            for lam in grid:
                u = path.evaluate(lam).values
                assert all(sig.fmin < x < sig.fmax for x in u)
                assert u != sig.values


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_json_round_trip(p):
    rng = np.random.default_rng(int(13 * p))
    for _ in range(5):
        sig = random_signal(rng, 1, 8)
        path = compute_path(sig, p)
        doc = json.loads(dumps(path_to_dict(path)))
        jsonschema.validate(doc, PATH_SCHEMA)
        back = path_from_dict(doc)
        assert back.signal == sig
        lamr = np.random.default_rng(1)
        hi = 10 * path.lambda0 if math.isfinite(path.lambda0) else 10.0
        for lam in np.exp(lamr.uniform(np.log(1e-3), np.log(hi), 100)):
            a = path.evaluate(lam).values
            b = back.evaluate(lam).values
            tol = 1e-10 if p == 2 else 1e-9
            assert max(abs(x - y) for x, y in zip(a, b)) <= tol


def test_from_dict_requires_signal_and_schema():
    doc = path_to_dict(compute_path(golden(), 2.0))
    bad = dict(doc)
    del bad["signal"]
    with pytest.raises(ValueError):
        path_from_dict(bad)
    with pytest.raises(jsonschema.ValidationError):
        path_from_dict({**doc, "p": "two"})


def test_infinite_segment_has_null_bound():
    doc = path_to_dict(compute_path(golden(), 2.0))
    assert doc["segments"][0]["lambda_hi"] is None
    assert doc["events"][0]["merges"] == [[1, 2], [4, 5]]
    assert doc["segments"][0]["groups"][0]["range"] == [1, 1]


def test_sign_flip_logging(caplog):
    with caplog.at_level(logging.DEBUG, logger="tvpath.path"):
        compute_path(make_signal((1, 2, 1, 2, 1, 2.0000000001), (2, 1, 3, 5, 6, 4)), 2.0)
    assert any("crosses" in r.message for r in caplog.records)


def test_params_lambda_min_stops_scan():
    sig = make_signal((1.0, 2.0, 1.5), (0.0, 3.0, 1.0))
    full = compute_path(sig, 1.5)
    assert len(full.events) >= 1
    with pytest.raises(PathSolverError):
        compute_path(sig, 1.5, SolverParams(p=1.5, lambda_min=10 * full.events[0].lambda_star))
