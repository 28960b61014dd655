import os
import pathlib

import numpy as np
import pytest

import graphite

FIXTURES = pathlib.Path(
    os.environ.get("GRAPHITE_FIXTURES", pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures")
)


@pytest.fixture
def g_fig():
    graph, nodes, features, classes = graphite.parse_graph_dir(FIXTURES / "g_fig")
    assert nodes == ["v1", "v2", "v3", "v4", "v5"]
    assert features == ["f1", "f2", "f3"]
    assert classes == ["A", "B"]
    return graph


def test_g_fig_metrics(g_fig):
    assert g_fig.num_nodes == 5
    assert g_fig.num_edges == 4
    report = graphite.homophily_report(g_fig)
    assert report["share_hom"] == pytest.approx(0.25, abs=1e-12)
    assert report["feature_hom"] == pytest.approx(0.125, abs=1e-12)
    assert report["adjusted_hom"] == pytest.approx(-1.0, abs=1e-12)


def test_g_fig_transform(g_fig):
    tg = graphite.graphite_transform(g_fig)
    assert tg.num_feature_nodes == 3
    assert tg.num_feature_edges == 7
    x = tg.x_star()
    expected = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 1.0 / 3.0], [0.5, 0.5, 1.0]])
    np.testing.assert_allclose(x[5:], expected, atol=1e-12)
    assert graphite.homophily_report(tg)["share_hom"] == pytest.approx(8.0 / 11.0, abs=1e-12)
    assert graphite.verify_two_hop(g_fig, tg)
    assert graphite.share_homophily(graphite.nhb_transform(g_fig)) == pytest.approx(5.0 / 8.0, abs=1e-12)


def test_errors_map_to_python():
    with pytest.raises(ValueError, match="out of range"):
        graphite.graph_from_lists(2, 1, [(0, 5)], [(0, 0)])
    empty = graphite.graph_from_lists(2, 1, [], [])
    with pytest.raises(ValueError, match="nothing to transform"):
        graphite.graphite_transform(empty)


def test_campaign_small():
    result = graphite.run_campaign(num_graphs=20, seed=3, max_nodes=60)
    assert result["graphs"] == 20
    assert result["failed"] == 0
    again = graphite.run_campaign(num_graphs=20, seed=3, max_nodes=60)
    assert again["report"] == result["report"]


def test_train_runs_on_synthetic():
    g = graphite.generate_synthetic(num_nodes=80, num_features=10, seed=2)
    tg = graphite.graphite_transform(g)
    out = graphite.train(tg, "num_layers = 1\nhidden_dim = 8\nsteps = 5\nlearning_rate = 0.01\n")
    assert len(out["train_loss"]) == 5
    assert all(np.isfinite(out["train_loss"]))
    assert len(out["predictions"]) == tg.num_graph_nodes
