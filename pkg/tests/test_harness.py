import dataclasses

import numpy as np
import pytest

from neutralcopy.errors import InvalidParameterError
from neutralcopy.graph import GeneratorParams
from neutralcopy.harness import (
    ARM_ASSORTATIVE,
    ExperimentConfig,
    run_ci_contrast,
    run_fig1,
    simulate_replicate,
)


def small_config(**kw):
    base = dict(generator=GeneratorParams(40, 0.3, 0.05), replicates=6, permutations=99, master_seed=11,
                flat_p=0.2)
    base.update(kw)
    return ExperimentConfig(**base)


def test_defaults_follow_n():
    cfg = ExperimentConfig(generator=GeneratorParams(50, 0.1, 0.02))
    assert cfg.budget == 200 * 50
    assert cfg.record_every == 50


@pytest.mark.parametrize("kw", [
    dict(replicates=0), dict(alpha=0.0), dict(alpha=1.5), dict(graph_mode="shared"),
    dict(bias=[[1, 0], [1, 1]]), dict(permutations=0), dict(format="xml"),
])
def test_invalid_config(kw):
    with pytest.raises(InvalidParameterError):
        small_config(**kw).validate()


def test_config_round_trip():
    cfg = small_config(bias=[[1.0, 0.2], [0.2, 1.0]])
    d = cfg.to_dict()
    again = ExperimentConfig.from_dict(d)
    assert again.to_dict() == d
    with pytest.raises(InvalidParameterError):
        ExperimentConfig.from_dict({"replicate": 3})


def test_replicate_independence():
    cfg = small_config()
    a = simulate_replicate(cfg, ARM_ASSORTATIVE, 4)
    b = simulate_replicate(dataclasses.replace(cfg, replicates=500), ARM_ASSORTATIVE, 4)
    assert a.graph == b.graph
    assert np.array_equal(a.record.chi2, b.record.chi2)
    c = simulate_replicate(cfg, ARM_ASSORTATIVE, 5)
    assert c.graph != a.graph


def test_fig1_small():
    res = run_fig1(small_config())
    for arm in res.arms.values():
        assert len(arm.replicates) == 6
        assert arm.steps[0] == 0 and arm.steps[-1] == 200 * 40
        assert np.all(arm.q25 <= arm.median) and np.all(arm.median <= arm.q75)
        for r in arm.replicates:
            assert r.peak_chi2 >= 0
            if r.absorbed:
                assert r.absorption_step <= 200 * 40
                assert r.final_chi2 == 0.0
        assert np.all(arm.trace.tables.reshape(-1, 4).sum(axis=1) == 40)


def test_fig1_minimal_run():
    res = run_fig1(small_config(replicates=1, budget=1, record_every=1))
    arm = res.arms["assortative"]
    assert arm.steps.tolist() == [0, 1]
    assert len(arm.trace) >= 1


def test_fig1_fixed_graph_mode():
    res = run_fig1(small_config(graph_mode="fixed-graph"))
    seeds = {r.graph_seed for r in res.arms["assortative"].replicates}
    assert len(seeds) == 1


def test_fig1_deterministic():
    a = run_fig1(small_config())
    b = run_fig1(small_config())
    for name in a.arms:
        assert np.array_equal(a.arms[name].median, b.arms[name].median)
        assert [r.to_dict() for r in a.arms[name].replicates] == [r.to_dict() for r in b.arms[name].replicates]


def test_ci_contrast_alpha_one_rejects_everything():
    res = run_ci_contrast(small_config(alpha=1.0))
    assert res.rejection_rate("unconditional") == 1.0
    assert res.rejection_rate("conditional") == 1.0


def test_ci_contrast_reports():
    res = run_ci_contrast(small_config(bias=[[1.0, 0.2], [0.2, 1.0]]))
    summary = res.summary()
    assert summary["replicates"] == 6
    assert summary["included"] + summary["excluded"] == 6
    for r in res.included:
        d = r.to_dict()
        for key in ("unconditional", "conditional"):
            rep = d[key]
            assert set(rep) == {"statistic", "df", "p_asymptotic", "p_permutation", "permutations",
                                "seed", "per_community"}
            assert rep["permutations"] == 99
            assert 0 < rep["p_permutation"] <= 1
        assert sum(c["size"] for c in d["conditional"]["per_community"]) == 40
        assert len(d["unconditional"]["per_community"]) == 1


def test_ci_contrast_excludes_absorbed_peaks():
    # Two linked nodes of different type: a concordant start is absorbed at
    # step 0 and has nothing to test, a discordant one peaks at chi2 = 2.
    cfg = small_config(generator=GeneratorParams(2, 1.0, 1.0), budget=50, record_every=1, replicates=40)
    res = run_ci_contrast(cfg)
    assert 0 < res.excluded_count < 40
    for r in res.replicates:
        assert r.excluded == (r.peak_chi2 == 0.0)
        if r.excluded:
            assert r.conditional is None and r.absorption_step == 0
        else:
            assert r.peak_chi2 == pytest.approx(2.0) and r.peak_step == 0
