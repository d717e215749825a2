"""Smoke tests for the python bindings: exercises the main operations
end-to-end on small synthetic inputs."""

import math

import pytest

import tempo_conformal as tc


def test_graph_and_neighbors():
    g = tc.TemporalGraph(
        edges=[(0, 1, 5), (1, 2, 5), (1, 1_000, 9)],
        labels=[(0, 5, 0), (1, 5, 1), (2, 5, 0)],
        num_classes=2,
    )
    assert g.num_occurrences == 5
    assert g.label(tc.TemporalNodeId(1, 5)) == 1

    nbrs = g.topological_neighbors(tc.TemporalNodeId(1, 5), tc.NeighborQueryParams(1, 0))
    assert {(n.node, n.time) for n in nbrs} == {(0, 5), (2, 5)}

    later = g.temporal_neighbors(tc.TemporalNodeId(1, 9), max_time_gap=10)
    assert [(n.node, n.time) for n in later] == [(1, 5)]

    with pytest.raises(ValueError):
        g.label(tc.TemporalNodeId(77, 5))


def test_scores_and_prediction_sets():
    p = tc.ProbabilityTable([((0, 1), [0.5, 0.3, 0.2]), ((1, 1), [0.1, 0.8, 0.1])])
    tps = tc.tps_scores(p)
    assert tps.row(tc.TemporalNodeId(0, 1)) == pytest.approx([0.5, 0.7, 0.8])

    aps = tc.aps_scores(p)
    assert aps.row(tc.TemporalNodeId(0, 1)) == pytest.approx([0.5, 0.8, 1.0])

    raps = tc.raps_scores(p, penalty_free_ranks=1, rank_penalty=0.1)
    assert raps.row(tc.TemporalNodeId(0, 1)) == pytest.approx([0.5, 0.9, 1.2])

    sets = tc.build_prediction_set(tc.TemporalNodeId(0, 1), [0.3, 0.8], 0.5)
    assert sets.admitted == [0]


def test_quantiles():
    scores = [0.1 * i for i in range(1, 11)]
    assert tc.hard_quantile(scores, alpha=0.1) == pytest.approx(1.0)
    assert tc.fixed_weight_quantile(scores, decay=1.0, alpha=0.1) == pytest.approx(1.0)
    assert tc.hard_quantile([0.4], alpha=0.05) == math.inf

    w = tc.WeightVector.uniform(10)
    q = tc.soft_quantile(scores, w, alpha=0.1, temperature=0.01)
    assert sum(q.selection) == pytest.approx(1.0)
    assert min(scores) <= q.eta <= max(scores)


def test_soft_quantile_gradient_matches_finite_differences():
    scores = [0.13, 0.62, 0.48, 0.91, 0.27, 0.55, 0.72, 0.08]
    w = tc.WeightVector([0.1, -0.2, 0.3, 0.0, 0.25, -0.15, 0.05, 0.4])
    grad = tc.soft_quantile_gradient(scores, w, alpha=0.2, temperature=0.1)
    h = 1e-5
    for j in range(len(scores)):
        up_logits = list(w.logits)
        dn_logits = list(w.logits)
        up_logits[j] += h
        dn_logits[j] -= h
        fd = (
            tc.soft_quantile(scores, tc.WeightVector(up_logits), 0.2, 0.1).eta
            - tc.soft_quantile(scores, tc.WeightVector(dn_logits), 0.2, 0.1).eta
        ) / (2 * h)
        assert grad.d_eta_d_logit[j] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_exchange_check():
    assert tc.quantile_exchange_check([0.2, 0.5, 0.9], [0.2, 0.3, 0.5])
    assert not tc.quantile_exchange_check([0.2, 0.3, 0.8], [0.5, 0.3, 0.2])


def test_end_to_end_pipeline_coverage():
    cfg = tc.SynthConfig()
    cfg.n_nodes = 120
    cfg.n_timesteps = 10
    cfg.edges_per_step = 240
    cfg.n_classes = 2
    cfg.drift_rate = 0.3
    cfg.seed = 17
    data = tc.generate_temporal_graph(cfg)

    plan = tc.chronological_split(data.graph)
    scores = tc.diffusion_scores(
        tc.tps_scores(data.probabilities),
        data.graph,
        tc.DiffusionParams(0.01, 0.01, tc.NeighborQueryParams(1, 2), 2),
    )

    opt = tc.OptimizerConfig()
    opt.alpha = 0.05
    opt.epochs = 40
    opt.learning_rate = 0.02
    opt.temperature = 0.04
    result = tc.train_weights(scores, data.graph, plan.calib_train, plan.calib_valid, opt)

    sets = [
        tc.build_prediction_set(i, scores.row(i), result.threshold) for i in plan.test
    ]
    report = tc.evaluate(sets, data.graph, opt.alpha)
    assert report.n_test == len(plan.test)
    assert report.coverage >= 0.85
    assert 0.0 < report.efficiency <= data.graph.num_classes


def test_gap_bound_and_demo():
    calib = tc.StreamSpec(tc.SlotDistribution(0.0, 1.0), tc.SlotDistribution(0.0, 1.0))
    report = tc.estimate_gap_bound(
        calib, tc.SlotDistribution(0.5, 1.5), [1.0] * 19, alpha=0.1, n_samples=5000, seed=3
    )
    assert report.empirical_gap <= report.bound + 0.05
    assert report.bound == pytest.approx(0.5, abs=0.1)

    split = tc.StreamSpec(
        tc.SlotDistribution(0.0, 1.0), tc.SlotDistribution(2.0, 3.0), changepoint_fraction=0.5
    )
    assert tc.nonexchangeability_demo(split, n=12, seed=1, exact_mode=True) == 1.0
