import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esai.events import EventStream, FormatError
from esai.framing import (FrameSequence, collapse, load_frames, normalize_frames, save_frames,
                          voxelize)


def random_stream(rng, n_events, w=7, h=5, t_max=10_000):
    t = np.sort(rng.integers(0, t_max, n_events))
    return EventStream(w, h, t, rng.integers(0, w, n_events), rng.integers(0, h, n_events),
                       rng.choice([-1, 1], n_events))


def test_single_event():
    s = EventStream.from_events(4, 3, [(10, 1, 2, -1)])
    seq = voxelize(s, 1)
    assert seq.data.shape == (1, 2, 3, 4)
    assert seq.data.sum() == 1 and seq.data[0, 1, 2, 1] == 1


def test_thirty_intervals():
    s = EventStream.from_events(4, 3, [(t, 0, 0, 1) for t in range(0, 300, 7)])
    seq = voxelize(s, 30)
    assert seq.n == 30 and seq.data.sum() == len(s)


def test_floor_rule_interval_indices():
    s = EventStream.from_events(2, 1, [(t, 0, 0, 1) for t in (0, 249_999, 250_000, 999_999)])
    seq = voxelize(s, 4, (0, 1_000_000))
    assert seq.data[:, 0, 0, 0].tolist() == [2, 1, 0, 1]
    np.testing.assert_array_equal(seq.t_edges, [0, 250_000, 500_000, 750_000, 1_000_000])


def test_last_edge_clamped():
    s = EventStream.from_events(2, 1, [(0, 0, 0, 1), (100, 0, 0, 1)])
    seq = voxelize(s, 4, (0, 100))
    assert seq.data[3, 0, 0, 0] == 1


def test_errors():
    s = EventStream.from_events(2, 1, [(0, 0, 0, 1)])
    with pytest.raises(ValueError):
        voxelize(s, 0)
    with pytest.raises(ValueError):
        voxelize(EventStream(2, 1), 3)
    assert voxelize(EventStream(2, 1), 3, (0, 30)).data.sum() == 0


def test_collapse_examples():
    s = EventStream.from_events(2, 1, [(0, 0, 0, 1), (5, 1, 0, -1)])
    seq = voxelize(s, 1)
    np.testing.assert_array_equal(collapse(seq), seq.data[0])
    data = np.zeros((2, 2, 1, 1), np.int64)
    data[:, 0] = 3
    assert collapse(FrameSequence(data, [0, 1, 2]))[0, 0, 0] == 6


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40), st.integers(0, 200))
def test_conservation_and_partition(seed, n, n_events):
    rng = np.random.default_rng(seed)
    s = random_stream(rng, n_events)
    span = (0, 10_000)
    seq = voxelize(s, n, span)
    assert seq.data.sum() == len(s)
    np.testing.assert_array_equal(collapse(seq), voxelize(s, 1, span).data[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    s = random_stream(rng, 60)
    perm = rng.permutation(len(s))
    shuffled = EventStream(s.width, s.height, s.t[perm], s.x[perm], s.y[perm], s.p[perm])
    assert voxelize(s, 6, (0, 10_000)) == voxelize(shuffled, 6, (0, 10_000))


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    seq = voxelize(random_stream(rng, 300), 5)
    p = tmp_path / "f.efrm"
    save_frames(seq, p)
    raw = p.read_bytes()
    assert raw[:4] == b"EFRM"
    assert len(raw) == 16 + 4 * 5 * 2 * 5 * 7
    assert load_frames(p) == seq
    (tmp_path / "bad.efrm").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        load_frames(tmp_path / "bad.efrm")


def test_normalize_frames():
    data = np.zeros((2, 2, 1, 3), np.int64)
    data[0, 0, 0] = [0, 4, 8]
    x = normalize_frames(FrameSequence(data, [0, 1, 2]))
    assert x.max() <= 1.0 and x.min() == 0.0
    assert x[0, 0, 0, 1] == pytest.approx(4 / np.percentile([4, 8], 99))
    zero = normalize_frames(FrameSequence(np.zeros((1, 2, 2, 2), np.int64), [0, 1]))
    assert not zero.any()
