import pytest

from stochsynth.system import (
    ConfigError,
    estimate_input_lipschitz,
    load_config,
    parse_config,
)

from conftest import BENCHMARK_DOC


def doc(**overrides):
    d = {k: (list(v) if isinstance(v, list) else v) for k, v in BENCHMARK_DOC.items()}
    d.update(overrides)
    return d


def test_parse_benchmark(benchmark):
    spec, params = benchmark
    assert spec.n == 1 and spec.p == 1
    assert spec.theta1 == 0.0 and spec.theta2 == 2.0
    assert sorted(spec.all_props) == ["bad", "goal", "in"]
    assert params.eta == 0.25 and params.rho == 0.5 and params.k == 0.05
    assert spec.drift_at((2.0,), (-1.0,)) == (pytest.approx(0.8),)
    assert spec.noise_std_at((0.0,)) == (0.3,)


def test_missing_key():
    d = doc()
    del d["L_u"]
    with pytest.raises(ConfigError, match="L_u"):
        parse_config(d)


def test_wrong_expression_count():
    with pytest.raises(ConfigError, match="'f'"):
        parse_config(doc(f=["x1", "x1"]))


def test_nonpositive_diffusion_rejected():
    with pytest.raises(ConfigError, match="b\\[0\\]"):
        parse_config(doc(b=["0.0"]))
    with pytest.raises(ConfigError, match="b\\[0\\]"):
        parse_config(doc(b=["x1"]))  # sign-indefinite on W


def test_diffusion_must_not_use_inputs():
    with pytest.raises(ConfigError, match="inputs"):
        parse_config(doc(b=["0.3 + 0*u1"]))


def test_label_cover_required():
    with pytest.raises(ConfigError, match="cover"):
        parse_config(
            doc(
                labels=[
                    {"region": [[-2.0, -1.0]], "props": ["bad"]},
                    {"region": [[1.0, 2.0]], "props": ["goal"]},
                ]
            )
        )


def test_label_overlap_rejected():
    with pytest.raises(ConfigError, match="overlap"):
        parse_config(
            doc(
                labels=[
                    {"region": [[-2.0, 0.5]], "props": ["bad"]},
                    {"region": [[-0.5, 2.0]], "props": ["goal"]},
                ]
            )
        )


def test_label_outside_working_space_rejected():
    with pytest.raises(ConfigError, match="contained"):
        parse_config(doc(labels=[{"region": [[-3.0, 2.0]], "props": []}]))


def test_implicit_in_prop_reserved():
    with pytest.raises(ConfigError, match="implicit"):
        parse_config(doc(labels=[{"region": [[-2.0, 2.0]], "props": ["in"]}]))


def test_theta_ordering():
    with pytest.raises(ConfigError, match="theta2"):
        parse_config(doc(theta1=0.5, theta2=0.5))
    spec, _ = parse_config(doc(theta2=None))
    assert spec.theta2 is None


def test_unbounded_working_space_rejected():
    with pytest.raises(ConfigError, match="bounded"):
        parse_config(doc(W=[[-2.0, float("inf")]]))


def test_lipschitz_estimate_matches_linear_gain(benchmark):
    spec, _ = benchmark
    est = estimate_input_lipschitz(spec, samples=300, seed=1)
    assert est == pytest.approx(1.0, abs=1e-9)  # f is linear in u with gain 1


def test_load_config_digest(tmp_path):
    import yaml

    path = tmp_path / "sys.yaml"
    path.write_text(yaml.safe_dump(doc()))
    spec, params, digest = load_config(str(path))
    assert spec.n == 1
    assert len(digest) == 64
    # same bytes, same digest
    _, _, digest2 = load_config(str(path))
    assert digest2 == digest


def test_load_config_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("n: [unclosed")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(str(path))
