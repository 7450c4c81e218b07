import io
import itertools
import json
import math

import numpy as np
import pytest

import dcmn


def brute_force_log_partition(e, trans, start):
    t, n = e.shape
    scores = []
    for path in itertools.product(range(n), repeat=t):
        s = start[path[0]] + e[0, path[0]]
        for k in range(1, t):
            s += trans[path[k - 1], path[k]] + e[k, path[k]]
        scores.append(s)
    m = max(scores)
    return m + math.log(sum(math.exp(s - m) for s in scores)), scores


def test_crf_against_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(20):
        e = rng.normal(size=(4, 3))
        trans = rng.normal(size=(3, 3))
        start = rng.normal(size=3)
        log_z, scores = brute_force_log_partition(e, trans, start)
        assert dcmn.crf_log_partition(e, trans, start) == pytest.approx(log_z, abs=1e-9)
        labels, score = dcmn.crf_viterbi(e, trans, start)
        assert score == pytest.approx(max(scores), abs=1e-9)
        best = list(itertools.product(range(3), repeat=4))[int(np.argmax(scores))]
        assert tuple(labels) == best
        assert dcmn.crf_nll(e, labels, trans, start) == pytest.approx(log_z - max(scores), abs=1e-9)


def test_huber_branches_meet():
    for tau in (0.5, 1.0, 2.0):
        assert dcmn.huber(tau, 0.0, tau) == pytest.approx(0.5 * tau * tau, abs=1e-12)


def test_mobility_counts():
    k, l, h = 0, 1, 3
    assert dcmn.daily_transitions([k, h, l, h, k]) == 4
    assert dcmn.pair_durations([k, h, h, l], k, l, h) == [3.0]
    assert dcmn.pair_durations([k, h, k], k, l, h) == []
    with pytest.raises(dcmn.DomainError):
        dcmn.pair_durations([k, h, l], k, k, h)


def test_simulate_csv_is_deterministic():
    cfg = json.dumps({"days": 1, "duration_s": 60, "subjects": [{"id": "HC01"}]})
    a = dcmn.simulate_csv(cfg, seed=1)
    assert a == dcmn.simulate_csv(cfg, seed=1)
    assert a != dcmn.simulate_csv(cfg, seed=2)
    lines = a.strip().split("\n")
    assert len(lines) == 61
    assert lines[0].startswith("subject_id,day_index,timestamp_s,rssi_01")
    with pytest.raises(dcmn.ConfigError):
        dcmn.simulate_csv(json.dumps({"days": 0}))


def test_cli_round_trip(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"days": 1, "duration_s": 120, "subjects": [{"id": "HC01"}, {"id": "PD01", "preset": "PD"}]}))
    assert dcmn.run_cli(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    train = tmp_path / "train.json"
    train.write_text(json.dumps({"d": 8, "heads": 2, "epochs": 1, "train_stride": 10}))
    rc = dcmn.run_cli(["train", "--data", str(tmp_path / "sim" / "recordings.csv"), "--config", str(train),
                       "--out", str(tmp_path / "train")])
    assert rc == 0
    manifest = json.loads((tmp_path / "train" / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert "checkpoint.json" in manifest["outputs"]
    assert dcmn.run_cli(["train", "--out", str(tmp_path / "x")]) == 2
