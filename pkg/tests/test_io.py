import json

import numpy as np
import pytest

from flagmine import FuzzyLaggedCluster
from flagmine.errors import SchemaError
from flagmine.io import (
    dumps, read_clusters, read_json, read_labels, read_trajectories, read_truth, write_clusters,
    write_labels, write_trajectories, write_truth,
)
from flagmine.synth import PlantSpec, gen_random_matrix, gen_trajectories, plant_cluster


def test_cluster_round_trip(tmp_path):
    c = FuzzyLaggedCluster([3, 0], [2, 0], [1, 4], {(3, 4): -1}, max_fuzz=1, achieved_error=0.1 + 0.2,
                           anti_rows=[3], anchor=0)
    p = tmp_path / "c.json"
    write_clusters([c], p, scores=[4.0])
    back = read_clusters(p)[0]
    assert sorted(zip(back.rows, back.lags)) == sorted(zip(c.rows, c.lags))
    assert back.cols == c.cols and back.fuzz == c.fuzz and back.anti_rows == c.anti_rows
    assert back.achieved_error == c.achieved_error
    d = json.loads(p.read_text())["clusters"][0]
    assert d["rows"] == [1, 4] and d["fuzz"] == [[4, 5, -1]] and d["anti"] is True


def test_float_format():
    assert dumps({"a": 0.1, "b": 2, "c": None}) == '{"a": 0.10000000000000001, "b": 2, "c": null}\n'
    assert dumps([1.0, float("nan")]) == "[1.0, null]\n"


def test_schema_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        read_json(p)
    p.write_text('{"clusters": [{"rows": [0]}]}')
    with pytest.raises(SchemaError):
        read_clusters(p)
    p.write_text('[]')
    with pytest.raises(SchemaError):
        read_clusters(p)


def test_truth_round_trip(tmp_path):
    M2, gt = plant_cluster(gen_random_matrix(20, 20), PlantSpec(0.3, 0.5, w=1.0, F=1, seed=3))
    p = tmp_path / "t.json"
    write_truth(gt, p)
    back = read_truth(p)
    assert back.cluster.canonical_key() == gt.cluster.canonical_key()
    assert back.cluster.fuzz == gt.cluster.fuzz
    assert np.array_equal(back.C, gt.C)


def test_labels_round_trip(tmp_path):
    p = tmp_path / "l.csv"
    write_labels([0, 0, 2, 1], p)
    assert read_labels(p).tolist() == [0, 0, 2, 1]
    p.write_text("row,label\n1,0\n3,1\n")
    with pytest.raises(SchemaError):
        read_labels(p)


def test_trajectories_round_trip(tmp_path):
    tr = gen_trajectories(2, 3, 15, fuzz_spread=1, noise=0.1, seed=4)
    p = tmp_path / "t.csv"
    write_trajectories(tr, p)
    back = read_trajectories(p)
    assert np.array_equal(back.x, tr.x) and np.array_equal(back.y, tr.y)
    assert p.read_text().splitlines()[0] == "object_id,t,x,y"
