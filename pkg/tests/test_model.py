import json

import numpy as np
import pytest

from qbath import model


def paper_config():
    return model.default_paper_config()


def test_paper_config_is_valid():
    assert model.validation_errors(paper_config()) == []


def test_paper_config_values():
    cfg = paper_config()
    assert cfg.bath.beta == 0.4
    assert cfg.bath.n_states == 5000
    assert cfg.bath.e_min == 3.0
    assert cfg.bath.e_max == 20.0465
    assert cfg.coupling.g == 0.005
    assert cfg.bath.eta_factor == 100.0
    assert np.array_equal(cfg.system.energies, [0.5, 1.5, 2.2, 4.0])
    # 0-based indices for paper states 2 and 4
    assert cfg.system.x[1][3] == -0.4
    assert cfg.system.x[3][1] == -0.4
    assert cfg.system.x[2][3] == 0.4
    assert cfg.initial.by_energy == (12.4, 14.1)
    assert cfg.eth.ma_window == 200


def test_paper_x_matrix_symmetric_zero_diag():
    x = paper_config().system.x
    assert np.array_equal(x, x.T)
    assert np.all(np.diag(x) == 0)
    expected_upper = (-0.7, 0.3, -0.9, -1.2, -0.4, 0.4)
    iu = np.triu_indices(4, k=1)
    assert tuple(x[iu]) == expected_upper


def test_nonzero_diagonal_rejected():
    cfg = paper_config()
    x = cfg.system.x.copy()
    x[0, 0] = 0.1
    bad = model.RunConfig(
        system=model.SystemSpec(energies=cfg.system.energies, x=x),
        bath=cfg.bath, coupling=cfg.coupling, initial=cfg.initial,
        evolve=cfg.evolve, eth=cfg.eth,
    )
    errors = model.validation_errors(bad)
    assert any("nonzero diagonal" in e for e in errors)


def test_not_ascending_rejected():
    cfg = paper_config()
    bad = model.RunConfig(
        system=model.SystemSpec(energies=[1.5, 0.5], x=np.zeros((2, 2))),
        bath=cfg.bath, coupling=cfg.coupling, initial=cfg.initial,
        evolve=cfg.evolve, eth=cfg.eth,
    )
    errors = model.validation_errors(bad)
    assert any("not ascending" in e for e in errors)


def test_all_violations_reported_together():
    cfg = paper_config()
    x = np.zeros((2, 2))
    x[0, 0] = 1.0
    bad = model.RunConfig(
        system=model.SystemSpec(energies=[1.5, 0.5], x=x),
        bath=model.BathSpec(n_states=1, e_min=5.0, e_max=4.0, beta=-1.0,
                            eta_factor=0.0, coupling_seed=1),
        coupling=model.CouplingSpec(g=-0.1),
        initial=model.InitialCondition(system_level=9, by_index=None, by_energy=None),
        evolve=model.EvolveSpec(t_max=-1.0, n_steps=-2),
        eth=model.EthSpec(ma_window=0),
    )
    errors = model.validation_errors(bad)
    paths = {e.split(":")[0] for e in errors}
    assert {"system.energies", "system.x", "bath.n_states", "bath.e_min", "bath.beta",
            "bath.eta_factor", "coupling.g", "initial.system_level",
            "initial.bath_window", "evolve.t_max", "evolve.n_steps",
            "eth.ma_window"} <= paths


def test_validate_raises_with_field_path():
    cfg = paper_config()
    bad = model.RunConfig(
        system=cfg.system,
        bath=model.BathSpec(n_states=5000, e_min=3.0, e_max=20.0465, beta=-0.4,
                            eta_factor=100.0, coupling_seed=1),
        coupling=cfg.coupling, initial=cfg.initial, evolve=cfg.evolve, eth=cfg.eth,
    )
    with pytest.raises(model.ConfigError) as exc:
        model.validate(bad)
    assert any(e.startswith("bath.beta") for e in exc.value.errors)


def test_validate_idempotent():
    cfg = paper_config()
    once = model.validate(cfg)
    twice = model.validate(once)
    assert once == twice


def test_ma_window_normalized_to_odd():
    cfg = paper_config()
    assert model.validate(cfg).eth.ma_window == 201  # 200 -> next odd
    odd = model.RunConfig(
        system=cfg.system, bath=cfg.bath, coupling=cfg.coupling, initial=cfg.initial,
        evolve=cfg.evolve, eth=model.EthSpec(ma_window=7),
    )
    assert model.validate(odd).eth.ma_window == 7


def test_serialization_round_trip(tmp_path):
    cfg = model.validate(paper_config())
    path = tmp_path / "config.json"
    model.save_config(cfg, path)
    loaded = model.load_config(path)
    assert loaded == cfg


def test_unknown_keys_are_errors(tmp_path):
    cfg = model.validate(paper_config())
    data = cfg.to_dict()
    data["bath"]["bta"] = 0.4
    data["extra"] = 1
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    with pytest.raises(model.ConfigError) as exc:
        model.load_config(path)
    joined = " ".join(exc.value.errors)
    assert "bath.bta" in joined and "extra" in joined


def test_manifest_round_trip(tmp_path):
    cfg = model.validate(paper_config())
    manifest = {"artifact_version": 1, "command": "build", "config": cfg.to_dict()}
    path = tmp_path / "build_manifest.json"
    path.write_text(json.dumps(manifest))
    assert model.load_config(path) == cfg


def test_config_hash_covers_physics_only():
    cfg = model.validate(paper_config())
    base = model.config_hash(cfg)
    import dataclasses
    moved = dataclasses.replace(cfg, output_dir="elsewhere", cache=False)
    assert model.config_hash(moved) == base
    changed_g = dataclasses.replace(cfg, coupling=model.CouplingSpec(g=0.006))
    assert model.config_hash(changed_g) != base
    changed_seed = dataclasses.replace(
        cfg, bath=dataclasses.replace(cfg.bath, coupling_seed=999)
    )
    assert model.config_hash(changed_seed) != base


def test_delta_eps0_formula():
    spec = model.BathSpec(n_states=10, e_min=3.0, e_max=5.0, beta=0.4,
                          eta_factor=100.0, coupling_seed=0)
    assert spec.delta_eps0 == pytest.approx(np.exp(-0.4 * 3.0), rel=1e-15)
