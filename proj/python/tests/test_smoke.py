import csv
import io
from collections import Counter

import pytest

import hhjlab


def brute_join(build, probe):
    by_key = {}
    for k, p in hhjlab.parse_records(build):
        by_key.setdefault(k, []).append(p)
    return Counter((k, b, p) for k, p in hhjlab.parse_records(probe) for b in by_key.get(k, []))


def test_trivial_join():
    build = hhjlab.encode_records([(1, b"a"), (2, b"b")])
    probe = hhjlab.encode_records([(1, b"x"), (3, b"y")])
    stats = hhjlab.run_join(build, probe, collect=True)
    assert stats["pairs"] == [(1, b"a", b"x")]
    assert stats["rounds"] == 1


def test_spilling_join_matches_brute_force():
    build, report = hhjlab.generate(cardinality=3000, dataset="3-large:10", seed=5)
    assert report["records"] == 3000
    probe, _ = hhjlab.generate(cardinality=2000, seed=6)
    stats = hhjlab.run_join(build, probe, memory_frames=16, growth="gs", collect=True)
    assert stats["rounds"] >= 2
    assert stats["spilled_build_frames"] > 0
    assert stats["peak_frames"] <= 16
    assert Counter(stats["pairs"]) == brute_join(build, probe)


def test_generate_is_deterministic():
    a, _ = hhjlab.generate(cardinality=500, normal_keys=(250, 30), seed=3)
    b, _ = hhjlab.generate(cardinality=500, normal_keys=(250, 30), seed=3)
    assert a == b
    assert all(1 <= k <= 500 for k, _ in hhjlab.parse_records(a))


def test_tuning_values():
    assert hhjlab.partition_count(1024, 128, 1.3, 2) == 10
    assert hhjlab.partition_count(8192, 128, 1.3, 2) == 83
    assert hhjlab.ngns_io_split(100, 50, 20, 1) == (2.5, 2.5)
    seq, rand = hhjlab.gs_io_split(100, 50, 20, 1)
    assert seq == pytest.approx(2.5 / 0.95 + 2.5)
    assert rand == 0
    assert hhjlab.ideal_spill(100, 100, 100) == 60


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        hhjlab.partition_count(10, 2)
    with pytest.raises(hhjlab.SpecError):
        hhjlab.generate(cardinality=1, target_bytes=1)
    with pytest.raises(ValueError):
        hhjlab.run_join(b"", b"", victim="biggest")


def test_sweep_csv():
    text = hhjlab.run_sweep(
        "victim", memory=[16], inputs=[2.0], datasets=["all-small"], skew=[False],
        victims=["largest-size", "low-high"], frame_bytes=4096, threads=2,
    )
    lines = text.splitlines()
    assert lines[0] == "#hhj-lab-csv-v1"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert [r["victim"] for r in rows] == ["largest-size", "low-high"]
    assert all(r["error"] == "" for r in rows)
