import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pgr.removal as removal
from pgr import (GridSpec, PointCloud, RemovalConfig, apply_pgr, build_grid, filter_cloud,
                 named_config, removal_phase, restoration_phase)
from pgr.errors import ContractError, UnknownNameError, ValidationError
from pgr.frame_io import box_mask
from pgr.removal import load_config, resolve_config
from pgr.synthetic import SyntheticSceneSpec, synthesize_scene, urban_scene
from reference import random_pillar_cloud, reference_pgr

C0 = RemovalConfig()


def grid_of(points, res=0.4):
    return build_grid(PointCloud(np.asarray(points, dtype=np.float64)), GridSpec(res, 0.0, 0.0))


def pillar_points(ix, iy, zs, res=0.4):
    return [[(ix + 0.5) * res, (iy + 0.5) * res, z] for z in zs]


# -- removal ----------------------------------------------------------------------


def test_flat_pillar_at_local_minimum_is_ground():
    g = grid_of(pillar_points(0, 0, [0.0, 0.0]))
    assert removal_phase(g, C0).tolist() == [0]


def test_tall_pillar_is_retained():
    # z spread 0.5 m > 0.4 m fails the flatness rule whatever the baseline
    g = grid_of(pillar_points(0, 0, [0.0, 0.5]))
    assert removal_phase(g, C0).tolist() == [1]


def test_flatness_threshold_is_inclusive():
    g = grid_of(pillar_points(0, 0, [0.0, 0.25]))
    assert removal_phase(g, replace(C0, delta_minmax=0.25)).tolist() == [0]


def test_flat_roof_is_retained():
    # roof: spread 0.05 m, floor 1.5 m above the neighboring ground
    pts = pillar_points(0, 0, [1.5, 1.55]) + pillar_points(3, 0, [0.0])
    g = grid_of(pts)
    phi = removal_phase(g, C0)
    assert phi[g.index_of((0, 0))] == 1
    assert phi[g.index_of((3, 0))] == 0


def test_env_threshold_is_strict():
    pts = pillar_points(0, 0, [0.25]) + pillar_points(1, 0, [0.0])
    g = grid_of(pts)
    phi = removal_phase(g, replace(C0, delta_env=0.25))
    assert phi[g.index_of((0, 0))] == 1


def test_resolution_mismatch_rejected():
    g = grid_of(pillar_points(0, 0, [0.0]), res=0.5)
    with pytest.raises(ContractError):
        removal_phase(g, C0)


# -- restoration ------------------------------------------------------------------


def test_adjacent_removed_pillar_restored():
    pts = pillar_points(10, 10, [0.0]) + pillar_points(11, 10, [0.0, 1.0])
    g = grid_of(pts)
    phi = removal_phase(g, C0)
    assert phi[g.index_of((10, 10))] == 0 and phi[g.index_of((11, 10))] == 1
    restored = restoration_phase(g, phi, C0)
    assert restored[g.index_of((10, 10))] == 1
    assert restored[g.index_of((11, 10))] == 0


def test_no_retained_pillar_means_no_restoration():
    g = grid_of([[x, y, 0.0] for x in np.arange(0.1, 4, 0.4) for y in np.arange(0.1, 4, 0.4)])
    phi = removal_phase(g, C0)
    assert not phi.any()
    assert not restoration_phase(g, phi, C0).any()


def test_restoration_threshold_is_inclusive():
    # removed pillar exactly 1.8 m (4.5 cells? no: 4 cells = 1.6 m) and 5 cells = 2.0 m away
    pts = pillar_points(0, 0, [0.0, 1.0]) + pillar_points(4, 0, [0.0]) + pillar_points(5, 0, [0.0])
    g = grid_of(pts)
    phi = removal_phase(g, C0)
    restored = restoration_phase(g, phi, C0)
    assert restored[g.index_of((4, 0))] == 1
    assert restored[g.index_of((5, 0))] == 0
    cfg = replace(C0, restore_rules=((30.0, 1.6), (math.inf, 5.4)))
    assert restoration_phase(g, phi, cfg)[g.index_of((4, 0))] == 1


def test_far_pillars_use_the_wide_radius():
    far = 100  # cells, 40 m from the sensor
    pts = pillar_points(far, 0, [0.0, 1.0]) + pillar_points(far + 13, 0, [0.0])
    pts += pillar_points(far + 14, 0, [0.0])
    g = grid_of(pts)
    restored = restoration_phase(g, removal_phase(g, C0), C0)
    assert restored[g.index_of((far + 13, 0))] == 1   # 5.2 m <= 5.4 m
    assert restored[g.index_of((far + 14, 0))] == 0   # 5.6 m


def test_radius_selected_by_removed_pillars_own_range():
    # retained pillar beyond 30 m, removed pillar inside 30 m, 2.0 m apart
    res = 0.4
    pts = pillar_points(76, 0, [0.0, 1.0]) + pillar_points(71, 0, [0.0])
    g = grid_of(pts)
    assert g.pillar((71, 0)).range_2d < 30 < g.pillar((76, 0)).range_2d
    restored = restoration_phase(g, removal_phase(g, C0), C0)
    assert 5 * res > 1.8
    assert restored[g.index_of((71, 0))] == 0


def test_restoration_disabled():
    pts = pillar_points(10, 10, [0.0]) + pillar_points(11, 10, [0.0, 1.0])
    g = grid_of(pts)
    cfg = replace(C0, restoration=False)
    assert not restoration_phase(g, removal_phase(g, cfg), cfg).any()


def test_mixed_grids_match_all_pairs_oracle(rng):
    for i in range(40):
        xyz = random_pillar_cloud(rng, max_cells=30)
        cfg = list(removal.PRESETS.values())[i % 6]
        mask, d = apply_pgr(PointCloud(xyz), cfg)
        ref_phi, ref_res = reference_pgr(xyz, cfg)
        assert np.array_equal(d.phi[d.grid.point_pillar], ref_phi)
        assert np.array_equal(d.restored[d.grid.point_pillar], ref_res)
        assert np.array_equal(mask, (ref_phi | ref_res).astype(bool))


# -- apply_pgr -------------------------------------------------------------------


def test_empty_cloud_gives_empty_mask():
    mask, d = apply_pgr(PointCloud.empty())
    assert mask.shape == (0,) and len(d.grid) == 0


def test_car_points_all_kept(car_scene):
    cloud, ground, (car,) = car_scene
    mask, _ = apply_pgr(cloud)
    inside = box_mask(cloud.xyz, car)
    assert inside.sum() > 500
    assert mask[inside].all()
    assert (~mask).mean() > 0


def test_ground_only_scene_fully_removed():
    cloud, _, _ = synthesize_scene(SyntheticSceneSpec(extent=20.0, ground_points=4000), 2)
    mask, d = apply_pgr(cloud)
    assert not d.phi.any()
    assert not mask.any()


def test_each_stage_runs_once(monkeypatch, car_scene):
    calls = {"removal": 0, "restoration": 0}

    def counted(name, fn):
        def wrapper(*a, **k):
            calls[name] += 1
            return fn(*a, **k)
        return wrapper

    monkeypatch.setattr(removal, "removal_phase", counted("removal", removal.removal_phase))
    monkeypatch.setattr(removal, "restoration_phase",
                        counted("restoration", removal.restoration_phase))
    _, d = removal.apply_pgr(car_scene.cloud)
    assert calls == {"removal": 1, "restoration": 1}
    assert d.stages == ("grid", "removal", "restoration", "mask")


def test_decision_invariants(car_scene):
    _, d = apply_pgr(car_scene.cloud)
    assert not np.any(d.phi.astype(bool) & d.restored.astype(bool))
    c = d.counts()
    assert c["retained"] + c["restored"] + c["removed"] == c["pillars"]


def test_attributes_do_not_matter(car_scene):
    cloud = car_scene.cloud
    other = PointCloud(cloud.xyz, np.zeros_like(cloud.attributes), cloud.frame_id)
    assert np.array_equal(apply_pgr(cloud)[0], apply_pgr(other)[0])


def test_second_pass_keeps_object_points(car_scene):
    cloud, ground, _ = car_scene
    mask1, _ = apply_pgr(cloud)
    kept = filter_cloud(cloud, mask1)
    mask2, _ = apply_pgr(kept)
    kept_objects = np.flatnonzero(mask1 & ~ground)
    survivors = np.flatnonzero(mask1)
    second = set(survivors[mask2].tolist())
    assert set(kept_objects.tolist()) <= second


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), dz=st.floats(-100, 100))
def test_vertical_translation_invariance(seed, dz):
    xyz = random_pillar_cloud(np.random.default_rng(seed), max_cells=25)
    xyz_shift = xyz + (0, 0, dz)
    # float rounding of z + dz can move values that sit on a threshold
    if np.any(np.abs((xyz_shift[:, 2] - dz) - xyz[:, 2]) > 0):
        xyz = xyz_shift - (0, 0, dz)
    a = apply_pgr(PointCloud(xyz))[0]
    b = apply_pgr(PointCloud(xyz + (0, 0, dz)))[0]
    assert np.array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), kx=st.integers(-20, 20), ky=st.integers(-20, 20))
def test_horizontal_cell_translation_invariance(seed, kx, ky):
    cfg = replace(C0, resolution=0.5, er=1.5, delta_env=0.5, delta_minmax=0.5,
                  restore_rules=((1000.0, 2.0), (math.inf, 5.5)))
    xyz = random_pillar_cloud(np.random.default_rng(seed), max_cells=25, res=0.5)
    a = apply_pgr(PointCloud(xyz), cfg)[0]
    b = apply_pgr(PointCloud(xyz + (kx * 0.5, ky * 0.5, 0)), cfg)[0]
    rel = xyz[:, :2] / 0.5
    safe = np.all(np.abs(rel - np.round(rel)) > 1e-9, axis=1)
    assert np.array_equal(a[safe], b[safe])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), grow=st.floats(0, 3))
def test_restoration_monotone_in_radius(seed, grow):
    xyz = random_pillar_cloud(np.random.default_rng(seed), max_cells=25)
    big = replace(C0, restore_rules=tuple((r, d + grow) for r, d in C0.restore_rules))
    a = apply_pgr(PointCloud(xyz))[0]
    b = apply_pgr(PointCloud(xyz), big)[0]
    assert np.all(b >= a)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), grow=st.floats(0, 1))
def test_flatness_threshold_only_turns_phi_off(seed, grow):
    xyz = random_pillar_cloud(np.random.default_rng(seed), max_cells=25)
    g = build_grid(PointCloud(xyz), GridSpec(0.4))
    a = removal_phase(g, C0)
    b = removal_phase(g, replace(C0, delta_minmax=C0.delta_minmax + grow))
    assert np.all(b <= a)


# -- filter_cloud ------------------------------------------------------------------


def test_filter_identity_and_empty(random_cloud):
    c = random_cloud(50)
    assert filter_cloud(c, np.ones(50, bool)).bitwise_equal(c)
    assert len(filter_cloud(c, np.zeros(50, bool))) == 0


def test_filter_matches_index_selection(random_cloud, rng):
    c = random_cloud(200, arity=2)
    m = rng.random(200) < 0.3
    out = filter_cloud(c, m)
    idx = [i for i in range(200) if m[i]]
    assert np.array_equal(out.xyz, c.xyz[idx])
    assert np.array_equal(out.attributes, c.attributes[idx])


def test_filter_length_mismatch(random_cloud):
    with pytest.raises(ContractError):
        filter_cloud(random_cloud(5), np.ones(4, bool))


# -- configs ----------------------------------------------------------------------


def test_presets():
    c0 = named_config("pgr-c0-kitti")
    assert (c0.resolution, c0.delta_minmax, c0.er, c0.delta_env) == (0.4, 0.4, 1.8, 0.4)
    assert c0.restore_rules == ((30.0, 1.8), (math.inf, 5.4))
    assert named_config("pgr-c0-waymo").restore_rules[0] == (30.0, 2.2)
    assert named_config("pgr-c1").er == 1.4
    assert named_config("pgr-c2").restore_rules[0] == (30.0, 1.4)
    assert named_config("pgr-c3").delta_minmax == 0.6
    c4 = named_config("pgr-c4")
    assert (c4.er, c4.delta_minmax, c4.restore_rules) == (
        0.6, 0.35, ((30.0, 1.6), (math.inf, 5.2)))
    assert (c4.resolution, c4.delta_env) == (0.4, 0.4)
    assert named_config("c0") == c0


def test_unknown_preset_lists_valid_names():
    with pytest.raises(UnknownNameError, match="pgr-c0-kitti"):
        named_config("bogus")


def test_config_validation():
    with pytest.raises(ValidationError):
        RemovalConfig(er=0)
    with pytest.raises(ValidationError):
        RemovalConfig(restore_rules=((30.0, 1.8), (20.0, 5.4)))
    with pytest.raises(ValidationError):
        RemovalConfig(restore_rules=((30.0, 1.8),))


def test_config_file_round_trip(tmp_path):
    cfg = named_config("pgr-c4")
    p = tmp_path / "c4.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert load_config(p) == cfg
    assert resolve_config(str(p)) == cfg


def test_urban_scene_removal_fraction():
    cloud = urban_scene(3).cloud
    mask, _ = apply_pgr(cloud)
    assert 0.2 < 1 - mask.mean() < 1
