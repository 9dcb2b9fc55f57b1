import json
import math
import os
from pathlib import Path

import pytest

import hac_lab

SOURCE = Path(os.environ.get("HAC_SOURCE_DIR", Path(__file__).resolve().parents[2]))
MINIMAL = SOURCE / "configs" / "minimal_4class.json"


def hyperbolic_config():
    doc = json.loads(MINIMAL.read_text())
    doc["mode"] = "meru-hac-reg"
    doc["unlearn"].update({"omega_r": 0.2, "omega_f": 1.0, "lambda_reg": 0.1})
    return hac_lab.Config.from_json(json.dumps(doc))


def test_geometry():
    space, time = hac_lab.exp_map_origin([0.5, 0.0, 0.0, 0.0])
    assert time == pytest.approx(math.cosh(0.5))
    assert hac_lab.distance_to_origin(space) == pytest.approx(0.5, abs=1e-12)
    assert hac_lab.lorentz_inner([0.0, 0.0], [0.0, 0.0]) == pytest.approx(-1.0)
    a, _ = hac_lab.exp_map_origin([0.3])
    b, _ = hac_lab.exp_map_origin([-0.3])
    assert hac_lab.lorentz_distance(a, b) == pytest.approx(0.6, abs=1e-12)
    assert hac_lab.half_aperture([0.4, 0.0, 0.0]) == pytest.approx(math.pi / 6, abs=1e-12)
    inner, _ = hac_lab.exp_map_origin([0.5, 0.0])
    outer, _ = hac_lab.exp_map_origin([1.0, 0.0])
    assert hac_lab.exterior_angle(outer, inner) < 1e-6
    with pytest.raises(hac_lab.DomainError):
        hac_lab.exterior_angle(outer, [0.0, 0.0])
    with pytest.raises(hac_lab.ShapeError):
        hac_lab.lorentz_distance([0.1], [0.1, 0.2])


def test_loss_breakdown():
    image = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.8, -0.6]]
    text = [[0.9, 0.1], [0.1, 0.9], [0.5, 0.9], [0.7, -0.5]]
    hp = {"alpha": 0.5, "beta": 0.25, "gamma": 0.75, "epsilon": 0.1, "tau": 0.1}
    out = hac_lab.loss_breakdown(image, text, [False, False, True, True], mode="ac", hp=hp)
    forget = hp["alpha"] * out["negative"] + hp["beta"] * out["positive"] + hp["gamma"] * out["performance"]
    assert out["total"] == pytest.approx(out["retain"] + hp["epsilon"] * forget, rel=1e-12)
    assert "norm_reg" not in out
    with pytest.raises(hac_lab.ValidationError):
        hac_lab.loss_breakdown(image, text, [False] * 4, hp={"taux": 1.0})


def test_gradient_suite():
    rows = hac_lab.gradient_suite(hyperbolic_config(), points=2)
    assert rows and all(passed for _, _, passed in rows)
    faulty = hac_lab.gradient_suite(hyperbolic_config(), points=2, inject_fault=True)
    assert not all(passed for _, _, passed in faulty)


def test_pipeline_roundtrip():
    config = hyperbolic_config()
    assert config.mode == "meru-hac-reg"
    pipeline = hac_lab.Pipeline(config)
    model, log = pipeline.pretrain()
    assert len(log) == 500 and log[-1]["loss"] < log[0]["loss"]
    assert hac_lab.Model.from_bytes(model.to_bytes()) == model
    before = pipeline.evaluate(model)
    unlearned, ulog = pipeline.unlearn(model)
    after = pipeline.evaluate(unlearned)
    assert len(ulog) > 0
    assert 0.0 <= after["f_acc"] <= before["f_acc"]
    audit = pipeline.audit(model, unlearned)
    assert set(audit) >= {"image_side_fraction", "retain_drift", "forget_drift"}


def test_run_command(tmp_path):
    code, out, err = hac_lab.run_command("pretrain", config=MINIMAL, out=tmp_path)
    assert code == 0, err
    run_dir = Path(out.strip().splitlines()[-1])
    assert (run_dir / "checkpoint.bin").exists()
    code, _, err = hac_lab.run_command("eval", config=MINIMAL, out=tmp_path)
    assert code == 1
    code, _, _ = hac_lab.run_command("pretrain", config=tmp_path / "missing.json", out=tmp_path)
    assert code == 3
