import math

import numpy as np
import pytest

from telemap import quat
from telemap.diffeo import DiffeoMap, RotationLayer, TranslationLayer, fit, golden_section, rho_max
from telemap.errors import NumericalError
from telemap.scenario import Correspondence, ObjectPose, position_error


def naive_forward(map_doc, x):
    """Independent re-implementation of the layer stack for oracle checks."""
    x = [float(v) for v in x]
    for layer in map_doc["layers"]:
        c, v, rho = layer["c1"], layer["v1"], layer["rho1"]
        d2 = sum((x[i] - c[i]) ** 2 for i in range(3))
        k = math.exp(-(rho**2) * d2)
        x = [x[i] + k * v[i] for i in range(3)]
    return np.array(x)


def two_object_translation_corr():
    local = [
        ObjectPose(0, [0.2, 0.3, 0.0], [1, 0, 0, 0]),
        ObjectPose(1, [0.7, 0.5, 0.0], [1, 0, 0, 0]),
    ]
    remote = [
        ObjectPose(0, [0.3, 0.3, 0.0], [1, 0, 0, 0]),
        ObjectPose(1, [0.8, 0.5, 0.0], [1, 0, 0, 0]),
    ]
    return Correspondence(local=local, remote=remote)


def test_golden_section_quadratic():
    assert golden_section(lambda r: (r - 1.3) ** 2, 0.0, 4.0) == pytest.approx(1.3, abs=1e-5)


def test_golden_section_respects_bounds():
    best = golden_section(lambda r: -r, 0.0, 2.0)  # minimum at the upper bound
    assert 0.0 < best < 2.0
    assert best == pytest.approx(2.0, abs=1e-5)


def test_translation_layer_width_bound():
    v = np.array([0.5, 0.0, 0.0])
    with pytest.raises(NumericalError):
        TranslationLayer(np.zeros(3), v, rho_max(v) * 1.01)
    TranslationLayer(np.zeros(3), v, rho_max(v) * 0.99)  # fine


def test_rotation_layer_positive_width():
    with pytest.raises(NumericalError):
        RotationLayer(np.zeros(3), quat.identity(), 0.0)


def test_two_object_translation_fit_against_naive_oracle():
    corr = two_object_translation_corr()
    fitted = fit(corr, n_layers=20)
    doc = fitted.to_dict()
    mapped = np.array([naive_forward(doc, x) for x in corr.local_positions()])
    f_p = position_error(mapped, corr.remote_positions())
    assert f_p <= 1e-6
    assert abs(f_p - fitted.f_p) <= 1e-12


def test_fit_on_already_matched_correspondence():
    local = [
        ObjectPose(0, [0.1, 0.1, 0.0], [1, 0, 0, 0]),
        ObjectPose(1, [0.6, 0.4, 0.0], [1, 0, 0, 0]),
    ]
    remote = [
        ObjectPose(0, [0.1, 0.1, 0.0], [1, 0, 0, 0]),
        ObjectPose(1, [0.6, 0.4, 0.0], [1, 0, 0, 0]),
    ]
    fitted = fit(Correspondence(local=local, remote=remote), n_layers=5)
    assert fitted.f_p == 0.0
    assert all(np.linalg.norm(t.v1) == 0.0 for t in fitted.translations)


def test_fit_validates_hyperparameters(toy_corr):
    with pytest.raises(ValueError):
        fit(toy_corr, n_layers=0)
    with pytest.raises(ValueError):
        fit(toy_corr, n_layers=5, mu=1.0)
    with pytest.raises(ValueError):
        fit(toy_corr, n_layers=5, beta1=0.0)


def test_single_layer_forward_at_center():
    layer = TranslationLayer([0.2, 0.1, 0.0], [0.05, 0.0, 0.0], 1.0)
    rot = RotationLayer([0.2, 0.1, 0.0], quat.identity(), 1.0)
    m = DiffeoMap(translations=[layer], rotations=[rot], hyper={})
    out = m.forward_pos(np.array([0.2, 0.1, 0.0]))
    assert np.allclose(out, [0.25, 0.1, 0.0])


def test_single_layer_forward_far_field():
    v = np.array([0.05, 0.0, 0.0])
    layer = TranslationLayer([0.0, 0.0, 0.0], v, 1.0)
    rot = RotationLayer([0.0, 0.0, 0.0], quat.identity(), 1.0)
    m = DiffeoMap(translations=[layer], rotations=[rot], hyper={})
    x = np.array([10.0, 0.0, 0.0])  # ||x - c|| * rho = 10
    out = m.forward_pos(x)
    assert np.linalg.norm(out - x) <= 1e-8 * np.linalg.norm(v)


def test_forward_maps_objects_to_targets(toy_corr, toy_diffeo):
    mapped = toy_diffeo.forward_pos(toy_corr.local_positions())
    errs = np.linalg.norm(mapped - toy_corr.remote_positions(), axis=1)
    assert errs.max() <= 5 * max(toy_diffeo.f_p, 1e-12) * len(toy_corr)


def test_backward_round_trip(toy_corr, toy_diffeo, rng):
    lo, hi = toy_corr.bounds("local", inflate=3.0)
    x = rng.uniform(lo, hi, size=(1000, 3))
    back = toy_diffeo.backward_pos(toy_diffeo.forward_pos(x))
    assert np.linalg.norm(back - x, axis=1).max() <= 1e-9


def test_backward_identity_map():
    layers = [TranslationLayer([0.0, 0.0, 0.0], np.zeros(3), 1.0)]
    rots = [RotationLayer([0.0, 0.0, 0.0], quat.identity(), 1.0)]
    m = DiffeoMap(translations=layers, rotations=rots, hyper={})
    x = np.array([0.3, -0.2, 0.9])
    assert np.array_equal(m.backward_pos(x), x)


def test_backward_on_fitted_objects(toy_corr, toy_diffeo):
    # oracle: the forward images of the local objects
    targets = toy_diffeo.forward_pos(toy_corr.local_positions())
    back = toy_diffeo.backward_pos(targets)
    assert np.linalg.norm(back - toy_corr.local_positions(), axis=1).max() <= 1e-9


def test_jacobian_identity_map():
    m = DiffeoMap(
        translations=[TranslationLayer(np.zeros(3), np.zeros(3), 1.0)],
        rotations=[RotationLayer(np.zeros(3), quat.identity(), 1.0)],
        hyper={},
    )
    assert np.allclose(m.jacobian(np.array([0.1, 0.2, 0.3])), np.eye(3))


def test_jacobian_matches_finite_differences(toy_corr, toy_diffeo, rng):
    lo, hi = toy_corr.bounds("local", inflate=2.0)
    pts = rng.uniform(lo, hi, size=(500, 3))
    h = 1e-6
    worst = 0.0
    for p in pts:
        jac = toy_diffeo.jacobian(p)
        fd = np.zeros((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[:, k] = (toy_diffeo.forward_pos(p + e) - toy_diffeo.forward_pos(p - e)) / (2 * h)
        worst = max(worst, np.abs(jac - fd).max() / max(1.0, np.abs(fd).max()))
    assert worst <= 1e-5


def test_jacobian_determinant_positive(toy_corr, toy_diffeo, rng):
    lo, hi = toy_corr.bounds("local", inflate=3.0)
    pts = rng.uniform(lo, hi, size=(10_000, 3))
    assert np.linalg.det(toy_diffeo.jacobian(pts)).min() > 0.0


def test_forward_ori_identity_rotations(toy_diffeo, rng):
    m = DiffeoMap(
        translations=toy_diffeo.translations,
        rotations=[RotationLayer(r.c2, quat.identity(), r.rho2) for r in toy_diffeo.rotations],
        hyper={},
    )
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    out = m.forward_ori(np.array([0.4, 0.5, 0.0]), q)
    assert np.allclose(out, q, atol=1e-12)


def test_forward_ori_matches_objects(toy_corr, toy_diffeo):
    mapped = toy_diffeo.forward_ori(toy_corr.local_positions(), toy_corr.local_quaternions())
    dist = quat.quat_distance(mapped, toy_corr.remote_quaternions())
    assert dist.max() <= max(5 * toy_diffeo.f_q * len(toy_corr), 1e-9)


def test_orientation_offset_far_field(toy_corr, toy_diffeo):
    lo, hi = toy_corr.bounds("local", inflate=1.0)
    far = hi + 3.0 * (hi - lo) + 1.0
    g = toy_diffeo.orientation_offset(far)
    assert quat.quat_distance(g, quat.identity()) <= 1e-6


def test_backward_ori_round_trip(toy_diffeo, rng):
    x = np.array([0.45, 0.4, 0.0])
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    back = toy_diffeo.backward_ori(x, toy_diffeo.forward_ori(x, q))
    assert np.abs(back - q).max() <= 1e-9


def test_map_velocity_identity_map(rng):
    m = DiffeoMap(
        translations=[TranslationLayer(np.zeros(3), np.zeros(3), 1.0)],
        rotations=[RotationLayer(np.zeros(3), quat.identity(), 1.0)],
        hyper={},
    )
    q = quat.from_axis_angle([0, 0, 1], 0.4)
    v = np.array([0.1, -0.2, 0.05])
    w = np.array([0.0, 0.3, 0.1])
    v_out, w_out = m.map_velocity(np.array([0.1, 0.1, 0.0]), q, v, w)
    assert np.allclose(v_out, v, atol=1e-9)
    assert np.allclose(w_out, w, atol=1e-9)
    v_b, w_b = m.map_velocity(np.array([0.1, 0.1, 0.0]), q, v, w, direction="backward")
    assert np.allclose(v_b, v, atol=1e-9)
    assert np.allclose(w_b, w, atol=1e-9)


def test_map_velocity_zero_inputs(toy_diffeo):
    q = quat.identity()
    v_out, w_out = toy_diffeo.map_velocity(np.array([0.4, 0.4, 0.0]), q, np.zeros(3), np.zeros(3))
    assert np.allclose(v_out, 0.0, atol=1e-12)
    assert np.allclose(w_out, 0.0, atol=1e-9)


def test_map_velocity_round_trip(toy_diffeo):
    x = np.array([0.35, 0.45, 0.0])
    q = quat.from_axis_angle([0, 0, 1], 0.3)
    v = np.array([0.2, -0.1, 0.0])
    w = np.array([0.0, 0.0, 0.5])
    v_fwd, w_fwd = toy_diffeo.map_velocity(x, q, v, w, direction="forward")
    q_prime = toy_diffeo.forward_ori(x, q)
    v_back, w_back = toy_diffeo.map_velocity(x, q_prime, v_fwd, w_fwd, direction="backward")
    assert np.allclose(v_back, v, atol=1e-9)
    assert np.allclose(w_back, w, atol=1e-6)


def test_map_velocity_rejects_bad_direction(toy_diffeo):
    with pytest.raises(ValueError):
        toy_diffeo.map_velocity(np.zeros(3), quat.identity(), np.zeros(3), np.zeros(3), "sideways")


def test_velocity_consistency_along_trajectory(toy_diffeo):
    # oracle: numerically differentiate the mapped trajectory
    dt = 1e-4

    def x_of(t):
        return np.array([0.4 + 0.2 * np.sin(t), 0.45 + 0.15 * np.cos(0.7 * t), 0.0])

    def xdot_of(t):
        return np.array([0.2 * np.cos(t), -0.105 * np.sin(0.7 * t), 0.0])

    for t in (0.0, 0.8, 2.1):
        v_map, _ = toy_diffeo.map_velocity(x_of(t), quat.identity(), xdot_of(t), np.zeros(3))
        fd = (toy_diffeo.forward_pos(x_of(t + dt)) - toy_diffeo.forward_pos(x_of(t - dt))) / (2 * dt)
        assert np.linalg.norm(v_map - fd) <= 1e-3 * max(1.0, np.linalg.norm(fd))


def test_fitted_width_bounds_strict(toy_diffeo):
    mu = toy_diffeo.hyper["mu"]
    for t in toy_diffeo.translations:
        if np.linalg.norm(t.v1) > 0:
            assert t.rho1 < mu * rho_max(t.v1)


def test_lipschitz_continuity_sampled(toy_corr, toy_diffeo, rng):
    bound = toy_diffeo.lipschitz_bound()
    lo, hi = toy_corr.bounds("local", inflate=2.0)
    pts = rng.uniform(lo, hi, size=(1000, 3))
    delta = rng.normal(size=(1000, 3))
    delta = delta / np.linalg.norm(delta, axis=1, keepdims=True) * 1e-5
    diff = toy_diffeo.forward_pos(pts + delta) - toy_diffeo.forward_pos(pts)
    assert np.linalg.norm(diff, axis=1).max() <= bound * 1e-5 * (1 + 1e-6)


def test_orientation_output_unit_norm(toy_diffeo, rng):
    pts = rng.uniform(-0.5, 1.5, size=(200, 3))
    g = toy_diffeo.orientation_offset(pts)
    assert np.abs(np.linalg.norm(g, axis=1) - 1.0).max() <= 1e-9


def test_serialization_round_trip(tmp_path, toy_diffeo, rng):
    path = tmp_path / "map.json"
    toy_diffeo.save(path)
    back = DiffeoMap.load(path)
    x = rng.uniform(0, 1, size=(50, 3))
    assert np.array_equal(back.forward_pos(x), toy_diffeo.forward_pos(x))
    q = quat.from_axis_angle([0, 0, 1], 0.3)
    assert np.array_equal(back.forward_ori(x[0], q), toy_diffeo.forward_ori(x[0], q))
    assert back.hyper == toy_diffeo.hyper
    assert back.f_p == toy_diffeo.f_p
