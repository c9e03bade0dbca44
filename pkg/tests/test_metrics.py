import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from courtmetrics import court, metrics, pipeline, synth
from courtmetrics.errors import CalibrationUnavailableError, IntervalError, ParameterError
from courtmetrics.tracking import BallTrack, PlayerTrack


def court_ball(pos, start=0):
    t = BallTrack.from_points(pos, start=start)
    pos = np.asarray(pos, float)
    return dataclasses.replace(t, smoothed=pos, court_positions=pos, court_raw=pos)


def court_player(pid, pos, start=0):
    pos = np.asarray(pos, float)
    n = len(pos)
    return PlayerTrack(pid, np.arange(start, start + n), pos.copy(), np.zeros((n, 4)), np.ones(n), pos)


def test_kmh_constant_is_exact():
    assert metrics.kmh(10.0, 30, 30.0) == 36.0
    assert metrics.KMH_PER_MPS == 3.6


def test_ten_metres_in_one_second():
    pos = np.column_stack([np.linspace(0, 10, 31), np.zeros(31)])
    assert metrics.ball_speed(court_ball(pos), 0, 30, 30.0) == pytest.approx(36.0, abs=1e-12)


def test_zero_displacement():
    assert metrics.ball_speed(court_ball(np.zeros((5, 2))), 0, 4, 30.0) == 0.0


def test_path_vs_chord():
    # out and back: chord 0, path 8 m
    pos = np.array([[0, 0], [2, 0], [4, 0], [2, 0], [0, 0]], float)
    b = court_ball(pos)
    assert metrics.ball_speed(b, 0, 4, 4.0) == 0.0
    assert metrics.ball_speed(b, 0, 4, 4.0, method="path") == pytest.approx(28.8)


def test_interval_and_missing_errors():
    b = court_ball(np.array([[0, 0], [np.nan, np.nan], [1, 1]]))
    with pytest.raises(IntervalError):
        metrics.ball_speed(b, 2, 2, 30.0)
    with pytest.raises(IntervalError):
        metrics.ball_speed(b, 0, 9, 30.0)
    with pytest.raises(CalibrationUnavailableError):
        metrics.ball_speed(b, 0, 1, 30.0)
    with pytest.raises(CalibrationUnavailableError):
        metrics.ball_speed(BallTrack.from_points(np.zeros((3, 2))), 0, 2, 30.0)


def test_scalar_speed_arithmetic():
    pos = np.array([[0.0, 0.0], [300.0, 400.0]])
    b = dataclasses.replace(BallTrack.from_points(pos), smoothed=pos)
    scale = court.scale_from_measurement(50.0, 1.0)
    assert metrics.ball_speed_scalar(b, 0, 1, scale, 1.0) == pytest.approx(36.0)


@given(hnp.arrays(float, (12, 2), elements=st.floats(-50, 50)), st.floats(0.01, 100))
def test_speed_scales_with_positions(pos, k):
    a = metrics.ball_speed(court_ball(pos), 2, 9, 30.0)
    b = metrics.ball_speed(court_ball(pos * k), 2, 9, 30.0)
    assert b == pytest.approx(k * a, rel=1e-12, abs=1e-12)


@given(hnp.arrays(float, (11, 2), elements=st.floats(-50, 50)), st.floats(1, 120))
def test_speed_time_coherence(pos, fps):
    # same motion sampled twice as densely: double fps, double the frame interval
    dense = np.empty((21, 2))
    dense[0::2] = pos
    dense[1::2] = (pos[:-1] + pos[1:]) / 2
    a = metrics.ball_speed(court_ball(pos), 0, 10, fps)
    b = metrics.ball_speed(court_ball(dense), 0, 20, 2 * fps)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_player_speed_examples():
    still = court_player(1, np.zeros((61, 2)))
    assert metrics.player_speed(still, (0, 60), 30.0).mean_speed_kmh == 0.0
    moving = court_player(1, np.column_stack([np.linspace(0, 4, 61), np.zeros(61)]))
    s = metrics.player_speed(moving, (0, 60), 30.0)
    assert s.mean_speed_kmh == pytest.approx(7.2)
    assert s.distance_m == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# reaction time


def mover(shot, first_move, n=200):
    pos = np.zeros((n, 2))
    for k in range(first_move, n):
        pos[k] = (0.05 * (k - first_move + 7), 0.0)
    return court_player(2, pos)


def test_reaction_examples():
    assert metrics.reaction_time(100, mover(100, 130), 30.0) == (130, 1.0)
    # already moving: 0.05 * 7 = 0.35 m on the first frame
    assert metrics.reaction_time(100, mover(100, 101), 30.0) == (101, pytest.approx(1 / 30))


def test_no_response_is_absent():
    assert metrics.reaction_time(100, mover(100, 150), 30.0, until_frame=140) is None
    still = court_player(2, np.zeros((50, 2)))
    assert metrics.reaction_time(10, still, 30.0) is None
    with pytest.raises(ParameterError):
        metrics.reaction_time(10, still, 30.0, -0.1)


@given(hnp.arrays(float, (60, 2), elements=st.floats(-3, 3)), st.floats(0, 2), st.floats(0, 2))
def test_reaction_monotone_in_threshold(pos, t1, t2):
    lo, hi = sorted((t1, t2))
    p = court_player(1, np.cumsum(pos * 0.05, axis=0))
    a = metrics.reaction_time(5, p, 30.0, lo)
    b = metrics.reaction_time(5, p, 30.0, hi)
    if a is not None:
        assert a[1] >= 0
    if b is not None:
        assert a is not None and b[0] >= a[0]


# ---------------------------------------------------------------------------
# heatmaps

BOUNDS = (-5.0, 5.0, -5.0, 5.0)


def test_heatmap_single_centre_point():
    h = metrics.heatmap([[0.1, 0.1]], (10, 10), BOUNDS)
    assert h.counts.sum() == 1 and h.counts[5, 5] == 1


def test_heatmap_empty():
    h = metrics.heatmap(np.zeros((0, 2)), (10, 10), BOUNDS)
    assert h.counts.sum() == 0 and h.overflow == 0 and h.counts.shape == (10, 10)


def test_heatmap_grid_validation():
    with pytest.raises(ParameterError):
        metrics.heatmap([[0, 0]], (0, 3), BOUNDS)


def test_heatmap_uniform_counts_within_binomial_band():
    rng = np.random.default_rng(2024)
    n, cells = 10_000, 100
    pts = rng.uniform(-5, 5, size=(n, 2))
    h = metrics.heatmap(pts, (10, 10), BOUNDS)
    p = 1 / cells
    sd = math.sqrt(n * p * (1 - p))
    assert np.all(np.abs(h.counts - n * p) < 5 * sd)


@given(
    hnp.arrays(float, st.tuples(st.integers(0, 200), st.just(2)),
               elements=st.floats(allow_nan=True, allow_infinity=True, width=64)),
    st.integers(1, 30), st.integers(1, 30),
)
def test_heatmap_conservation(pts, nx, ny):
    h = metrics.heatmap(pts, (nx, ny), BOUNDS)
    assert h.counts.sum() + h.overflow == len(pts)
    assert h.total == len(pts)


# ---------------------------------------------------------------------------
# summary


def test_summary_of_rally_matches_truth():
    from conftest import rendered

    script, header, frames, truth = rendered(21)
    res = pipeline.analyze(header, frames)
    m = res.metrics
    assert [r.frame for r in m.shots] == list(truth.shot_frames)
    for r, v in zip(m.shots, truth.speeds_kmh):
        assert r.speed_kmh == pytest.approx(v, rel=1e-9)
    # per-player average is the mean of that player's per-shot oracle speeds
    for pid in (1, 2):
        mine = [v for v, s in zip(truth.speeds_kmh, truth.strikers) if s == pid]
        assert m.players[pid].avg_shot_speed_kmh == pytest.approx(float(np.mean(mine)), rel=1e-9)
        assert m.players[pid].n_shots == len(mine)
    for pid in (1, 2):
        got = [s.mean_speed_kmh for s in m.player_speeds[pid]]
        np.testing.assert_allclose(got, truth.player_interval_speeds_kmh(pid), rtol=0.02, atol=1e-9)
    for r in m.reaction_times:
        k = truth.shot_frames.index(r.shot_frame)
        assert r.responder_id == truth.responders[k]
        assert abs(r.seconds - truth.reaction_delays_s[k]) <= 1 / truth.fps + 1e-12
    for name, h in m.heatmaps.items():
        assert h.total == int(np.all(np.isfinite(
            res.ball.court_positions if name == "ball" else res.players[int(name[-1]) - 1].court_positions
        ), axis=1).sum())


def test_summary_without_shots_still_has_heatmaps():
    pos = np.column_stack([np.linspace(-3, 3, 20), np.zeros(20)])
    m = metrics.summarize(court_ball(pos), [court_player(1, pos), court_player(2, -pos)], [], 30.0)
    assert m.shots == [] and m.shot_speed_series == [] and m.reaction_times == []
    assert set(m.heatmaps) == {"ball", "player1", "player2"}
    assert m.heatmaps["ball"].total == 20


def test_summary_is_deterministic():
    from conftest import rendered

    from courtmetrics import export

    _, header, frames, _ = rendered(5)
    a = export.dumps(export.metrics_to_dict(pipeline.analyze(header, frames).metrics))
    b = export.dumps(export.metrics_to_dict(pipeline.analyze(header, frames).metrics))
    assert a == b


def test_scalar_and_court_agree_overhead():
    script = synth.random_rally(3, 6, camera=synth.overhead_camera(25.0))
    header, frames, truth = synth.generate_rally(script)
    cfg = pipeline.PipelineConfig()
    homog = pipeline.analyze(header, frames, cfg)
    cfg.calibration.mode = "scalar"
    scalar = pipeline.analyze(header, frames, cfg)
    a = [r.speed_kmh for r in homog.metrics.shots]
    b = [r.speed_kmh for r in scalar.metrics.shots]
    np.testing.assert_allclose(b, a, rtol=1e-6)
