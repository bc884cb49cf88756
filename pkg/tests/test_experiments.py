import math

import pytest

from holocompress.experiments import (
    DEFAULT_TOLERANCES,
    ConfigError,
    ExperimentConfig,
    RunManifest,
    execute,
    lemma4_expression_check,
    manifest_path_for,
    read_csv,
    reproduce,
    run,
    validate,
    write_csv,
)


def small(kind, **kw):
    base = {
        "lemma-sweep": {"params": {"trials": 50, "n_max": 40}},
        "spin-compress": {"model": {"length": 8}, "region": "0:4"},
        "gauss-compress": {"model": {"length": 60}, "region": "20:40", "epsilons": [1e-1, 1e-3, 1e-5]},
        "renyi-counterexample": {"params": {"volumes": [8, 9], "hierarchy_trials": 50}},
        "decay-fit": {},
        "density-lemma": {"params": {"resolution": 20000}},
    }[kind]
    return ExperimentConfig.from_dict({"kind": kind, **base, **kw})


def test_config_defaults_and_roundtrip(tmp_path):
    cfg = ExperimentConfig(kind="gauss-compress")
    assert cfg.model["length"] == 200 and cfg.region == "60:140"
    assert cfg.epsilons == [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    assert cfg.tolerances == DEFAULT_TOLERANCES
    cfg.save(tmp_path / "c.yaml")
    again = ExperimentConfig.load(tmp_path / "c.yaml")
    assert again == cfg and again.hash() == cfg.hash()


def test_config_infinity_survives_yaml():
    cfg = ExperimentConfig(kind="renyi-counterexample")
    again = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert [float(a) for a in again.params["alphas"]][-1] == math.inf


def test_hash_ignores_output_and_threads():
    cfg = ExperimentConfig(kind="decay-fit")
    assert cfg.updated(output="x.csv", threads=4).hash() == cfg.hash()
    assert cfg.updated(seed=1).hash() != cfg.hash()


@pytest.mark.parametrize("bad", [
    {"kind": "nope"},
    {"kind": "decay-fit", "colour": "red"},
    {"region": "0:3"},
    {"kind": "decay-fit", "tolerances": {"bogus": 1}},
    {"kind": "decay-fit", "seed": "abc"},
    [1, 2],
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_config_rejects_bad_yaml():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("kind: [unclosed")


def test_validate_diagnostics():
    assert validate(small("spin-compress")) == []
    assert any("capacity" in d for d in validate(small("spin-compress", model={"length": 30})))
    assert any("gapless" in d for d in validate(small("decay-fit", model={"mass": 0.0})))
    assert any("region" in d for d in validate(small("decay-fit", region="0:x")))
    assert any("epsilon" in d for d in validate(small("spin-compress", epsilons=[1.5])))
    assert any("capacity" in d for d in validate(small("spin-compress", model={"length": 16}, region="0:13")))
    with pytest.raises(ConfigError):
        execute(small("decay-fit", model={"mass": 0.0}))


@pytest.mark.parametrize("kind", ["lemma-sweep", "spin-compress", "gauss-compress", "renyi-counterexample",
                                  "decay-fit", "density-lemma"])
def test_every_kind_runs_clean(kind):
    res = execute(small(kind))
    assert res.rows and res.violations == [] and res.exit_code == 0


@pytest.mark.parametrize("kind", ["lemma-sweep", "spin-compress", "decay-fit"])
def test_injected_violation_is_reported(kind):
    res = execute(small(kind, inject_violation=True))
    assert len(res.violations) == 1 and res.exit_code == 1


def test_infeasible_spin_target_is_config_error():
    with pytest.raises(ConfigError):
        execute(small("spin-compress", epsilons=[0.001], params={"k": 5.0}))


def test_spin_rows_use_documented_columns():
    rows = execute(small("spin-compress")).rows
    assert list(rows[0])[:11] == ["A_size", "boundary_size", "S_A", "k", "epsilon", "l", "M", "overlap",
                                  "recovery_fidelity", "thm2_lhs", "thm2_bound"]


def test_gauss_manifest_records_expression_check():
    res = execute(ExperimentConfig(kind="gauss-compress"))
    assert res.extra["lemma4_expression"]["matches"] == "unsquared"
    assert res.constants["l_used_r_squared"] >= 0.95
    assert list(res.rows[0])[:11] == ["A_size", "boundary_size", "c1", "c2", "L_eps", "M", "fidelity_oracle",
                                      "fidelity_paper_expr", "lemma4_bound", "epsilon", "l_used"]


def test_lemma4_expression_check():
    out = lemma4_expression_check(3.0)
    assert out["unsquared_error"] <= 1e-12 and out["squared_error"] > 0.1


def test_threads_do_not_change_results():
    a = execute(small("lemma-sweep"))
    b = execute(small("lemma-sweep", threads=4))
    assert a.rows == b.rows


def test_csv_roundtrip(tmp_path):
    rows = [{"a": 1, "b": 0.1}, {"a": 2, "c": "x", "b": True}]
    write_csv(tmp_path / "t.csv", rows)
    header, data = read_csv(tmp_path / "t.csv")
    assert header == ["a", "b", "c"]
    assert data == [["1", "0.10000000000000001", ""], ["2", "1", "x"]]


def test_run_and_reproduce(tmp_path):
    cfg = small("gauss-compress", output=str(tmp_path / "g.csv"))
    res = run(cfg)
    assert res.manifest_path == manifest_path_for(tmp_path / "g.csv")
    man = RunManifest.load(res.manifest_path)
    assert man.config_hash == cfg.hash() and man.n_rows == 3
    assert man.extra["lemma4_expression"]["matches"] == "unsquared"
    assert reproduce(res.manifest_path) == []
    assert reproduce(res.manifest_path, threads=3) == []


def test_reproduce_detects_tampering(tmp_path):
    res = run(small("density-lemma", output=str(tmp_path / "d.csv")))
    header, data = read_csv(res.csv_path)
    data[0][header.index("coverage")] = "0.5"
    write_csv(res.csv_path, [dict(zip(header, r)) for r in data])
    problems = reproduce(res.manifest_path)
    assert len(problems) == 1 and "coverage" in problems[0]
