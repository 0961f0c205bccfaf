import numpy as np
import pytest

from esai.framing import FrameSequence
from esai.network import (Adam, TrainConfig, build_network, load_checkpoint, save_checkpoint,
                          train)
from esai.network.train import lr_at_epoch


def fixture(n=5, size=8, seed=0):
    rng = np.random.default_rng(seed)
    seq = FrameSequence(rng.poisson(1.0, (n, 2, size, size)).astype(np.int64), np.arange(n + 1))
    yy, xx = np.mgrid[0:size, 0:size]
    target = 0.5 + 0.4 * np.sin(xx / 2.0) * np.cos(yy / 3.0)
    return seq, target


def params_of(net):
    return {k: v.copy() for k, v in net.named_params()}


def test_schedule():
    cfg = TrainConfig(epochs=10)
    assert cfg.lr == 5e-4
    assert [lr_at_epoch(cfg, e) for e in (0, 4, 5, 9)] == [5e-4, 5e-4, 2.5e-4, 2.5e-4]
    assert lr_at_epoch(TrainConfig(epochs=1), 0) == 5e-4
    assert lr_at_epoch(TrainConfig(epochs=3), 2) == 1.25e-4


def test_adam_first_step_moves_by_lr():
    p = np.array([1.0, -2.0])
    opt = Adam([("p", p)], lr=0.1)
    opt.step({"p": np.array([3.0, -0.5])})
    np.testing.assert_allclose(p, [0.9, -1.9], atol=1e-7)


def test_zero_lr_leaves_params_unchanged():
    net = build_network(n_steps=5, seed=1)
    before = params_of(net)
    _, hist = train(net, [fixture()], TrainConfig(lr=0.0, epochs=4))
    for k, v in net.named_params():
        np.testing.assert_array_equal(v, before[k])
    assert len(hist) == 4 and len(set(hist)) == 1


def test_single_sample_overfit():
    net = build_network(n_steps=5, seed=0)
    _, hist = train(net, [fixture()], TrainConfig(epochs=300, seed=0))
    assert len(hist) == 300
    assert hist[-1] < 0.1 * hist[0]


def test_deterministic():
    data = [fixture(seed=s) for s in range(3)]
    runs = []
    for _ in range(2):
        net = build_network(n_steps=5, seed=4)
        _, hist = train(net, data, TrainConfig(epochs=3, seed=9))
        runs.append((hist, params_of(net)))
    assert runs[0][0] == runs[1][0]
    for k in runs[0][1]:
        np.testing.assert_array_equal(runs[0][1][k], runs[1][1][k])


def test_max_steps():
    net = build_network(n_steps=5, seed=0)
    before = params_of(net)
    _, hist = train(net, [fixture()] * 3, TrainConfig(epochs=5, max_steps=4))
    assert len(hist) == 2
    assert any(not np.array_equal(v, before[k]) for k, v in net.named_params())


def test_empty_dataset():
    with pytest.raises(ValueError):
        train(build_network(n_steps=5), [])


def test_checkpoint_round_trip(tmp_path):
    net = build_network(n_steps=5, seed=2, skip_taps=())
    p = tmp_path / "m.esai"
    save_checkpoint(net, p)
    back = load_checkpoint(p)
    assert back.encoder == net.encoder and back.decoder == net.decoder
    assert back.lif == net.lif and back.n_steps == 5 and back.skip_taps == ()
    for (k1, a), (k2, b) in zip(net.named_params(), back.named_params()):
        assert k1 == k2
        np.testing.assert_array_equal(a.astype(np.float32), b)
    save_checkpoint(back, tmp_path / "again.esai")
    assert (tmp_path / "again.esai").read_bytes() == p.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    from esai.events import FormatError
    p = tmp_path / "m.esai"
    save_checkpoint(build_network(n_steps=5), p)
    raw = p.read_bytes()
    (tmp_path / "a").write_bytes(b"NOPE" + raw[4:])
    (tmp_path / "b").write_bytes(raw[:-4])
    for name in "ab":
        with pytest.raises(FormatError):
            load_checkpoint(tmp_path / name)
