"""Tests for model checkpoints and the three-model bundle directory."""

import json
import os

import numpy as np
import pytest

from cdsa.checkpoint import (BC_FILE, BUNDLE_FILES, MANIFEST_FILE,
                             CheckpointError, load_bundle, load_bundle_bc,
                             load_model, model_from_dict, model_to_dict,
                             norm_digest, save_bundle, save_model)
from cdsa.controller import CdsaModels
from cdsa.dataset import NormStats
from cdsa.envs import BehaviorCloned
from cdsa.invdyn import InvDynModel, model_dims
from cdsa.neuralcore import Rng, mlp_init
from cdsa.scorefield import ScoreField, ScoreKind, field_dims

DS, DA = 2, 2


def _norm(seed=0):
    rng = Rng(seed)
    return NormStats(rng.normal(size=DS), np.abs(rng.normal(size=DS)) + 0.5,
                     rng.normal(size=DA), np.abs(rng.normal(size=DA)) + 0.5)


def _score(kind, seed=1, sigma=0.2):
    params = mlp_init(field_dims(kind, DS, DA), 0.2, Rng(seed))
    return ScoreField(params, kind, sigma, _norm())


def _invdyn(seed=2):
    return InvDynModel(mlp_init(model_dims(DS, DA), 0.2, Rng(seed)), _norm())


def _bc(seed=3):
    params = mlp_init([DS, 16, DA], 0.2, Rng(seed))
    return BehaviorCloned(params, _norm(), -np.ones(DA), np.ones(DA))


def _models():
    return CdsaModels(action_score=_score(ScoreKind.ACTION, 1),
                      state_score=_score(ScoreKind.STATE, 2),
                      invdyn=_invdyn(3), norm=_norm())


def _params_equal(a, b):
    return (a.layer_dims == b.layer_dims
            and a.leaky_slope == b.leaky_slope
            and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
            and all(np.array_equal(x, y) for x, y in zip(a.biases, b.biases)))


def test_score_field_roundtrip_bitwise(tmp_path):
    for kind in (ScoreKind.ACTION, ScoreKind.STATE):
        model = _score(kind, seed=kind is ScoreKind.STATE)
        path = tmp_path / f"{kind.value}.json"
        save_model(model, str(path))
        back = load_model(str(path))
        assert isinstance(back, ScoreField)
        assert back.kind == kind
        assert back.sigma == model.sigma
        assert _params_equal(back.params, model.params)
        assert back.norm.equals(model.norm)


def test_invdyn_roundtrip_bitwise(tmp_path):
    model = _invdyn()
    path = tmp_path / "invdyn.json"
    save_model(model, str(path))
    back = load_model(str(path))
    assert isinstance(back, InvDynModel)
    assert _params_equal(back.params, model.params)
    assert back.norm.equals(model.norm)


def test_bc_roundtrip_bitwise(tmp_path):
    model = _bc()
    path = tmp_path / "bc.json"
    save_model(model, str(path))
    back = load_model(str(path))
    assert isinstance(back, BehaviorCloned)
    assert _params_equal(back.params, model.params)
    assert back.norm.equals(model.norm)
    assert np.array_equal(back.action_low, model.action_low)
    assert np.array_equal(back.action_high, model.action_high)


def test_model_to_dict_rejects_unknown_type():
    with pytest.raises(CheckpointError, match="cannot checkpoint"):
        model_to_dict(object())


def test_model_from_dict_validation():
    good = model_to_dict(_invdyn())
    with pytest.raises(CheckpointError, match="format"):
        model_from_dict({**good, "format": "something-else"})
    with pytest.raises(CheckpointError, match="version"):
        model_from_dict({**good, "version": 99})
    with pytest.raises(CheckpointError, match="kind"):
        model_from_dict({**good, "kind": "mystery"})
    missing = dict(good)
    del missing["norm"]
    with pytest.raises(CheckpointError, match="missing field"):
        model_from_dict(missing)


def test_model_from_dict_rejects_shape_mismatch():
    d = model_to_dict(_invdyn())
    d["arch"]["layers"][0]["w"] = [[0.0, 0.0]]  # wrong fan-out for dims
    with pytest.raises(CheckpointError, match="shapes"):
        model_from_dict(d)


def test_load_model_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointError, match="JSON"):
        load_model(str(path))


def test_load_model_missing_file(tmp_path):
    with pytest.raises(CheckpointError, match="cannot read"):
        load_model(str(tmp_path / "absent.json"))


def test_bundle_roundtrip_bitwise(tmp_path):
    models = _models()
    d = str(tmp_path / "bundle")
    save_bundle(models, d)
    assert set(os.listdir(d)) == set(BUNDLE_FILES.values()) | {MANIFEST_FILE}
    back = load_bundle(d)
    assert _params_equal(back.action_score.params, models.action_score.params)
    assert _params_equal(back.state_score.params, models.state_score.params)
    assert _params_equal(back.invdyn.params, models.invdyn.params)
    assert back.norm.equals(models.norm)
    assert back.action_score.sigma == models.action_score.sigma


def test_bundle_bc_optional(tmp_path):
    bare = str(tmp_path / "bare")
    save_bundle(_models(), bare)
    assert BC_FILE not in os.listdir(bare)
    with pytest.raises(CheckpointError, match="behavior-cloned"):
        load_bundle_bc(bare)

    with_bc = str(tmp_path / "with_bc")
    bc = _bc()
    save_bundle(_models(), with_bc, bc=bc)
    back = load_bundle_bc(with_bc)
    assert _params_equal(back.params, bc.params)
    load_bundle(with_bc)  # bc file never blocks the model load


def test_bundle_manifest_digest_cross_check(tmp_path):
    d = str(tmp_path / "bundle")
    save_bundle(_models(), d)
    mpath = os.path.join(d, MANIFEST_FILE)
    manifest = json.loads(open(mpath).read())
    manifest["norm_sha256"] = "0" * 64
    with open(mpath, "w") as fh:
        json.dump(manifest, fh)
    with pytest.raises(CheckpointError, match="digest"):
        load_bundle(d)


def test_bundle_manifest_validation(tmp_path):
    d = str(tmp_path / "bundle")
    save_bundle(_models(), d)
    mpath = os.path.join(d, MANIFEST_FILE)
    manifest = json.loads(open(mpath).read())

    for patch, msg in (({"format": "zip"}, "format"),
                       ({"version": 7}, "version"),
                       ({"files": {}}, "lists no")):
        bad = {**manifest, **patch}
        with open(mpath, "w") as fh:
            json.dump(bad, fh)
        with pytest.raises(CheckpointError, match=msg):
            load_bundle(d)


def test_bundle_missing_manifest(tmp_path):
    with pytest.raises(CheckpointError, match="manifest"):
        load_bundle(str(tmp_path / "empty"))


def test_norm_digest_tracks_content():
    n1, n2 = _norm(0), _norm(9)
    assert norm_digest(n1) == norm_digest(_norm(0))
    assert norm_digest(n1) != norm_digest(n2)
