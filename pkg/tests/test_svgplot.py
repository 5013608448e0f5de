"""Tests for the hand-built SVG scene renderer."""

import xml.etree.ElementTree as ET

import numpy as np

from cdsa.controller import control_episode
from cdsa.envs import ScriptedDirect, builtin_spec_path, load_env_spec
from cdsa.neuralcore import Rng
from cdsa.svgplot import ARM_STYLE, render_scene, write_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def _spec(name="pointmass"):
    return load_env_spec(builtin_spec_path(name))


def _trajs(spec, n, seed0=0):
    return [control_episode(spec, ScriptedDirect(spec), None, None, Rng(seed0 + i))
            for i in range(n)]


def test_scene_parses_as_xml():
    spec = _spec("transport")
    root = ET.fromstring(render_scene(spec, {"baseline": _trajs(spec, 2)}))
    assert root.tag == f"{SVG_NS}svg"


def test_scene_has_geometry_elements():
    spec = _spec("transport")
    root = ET.fromstring(render_scene(spec))
    rects = root.findall(f"{SVG_NS}rect")
    circles = root.findall(f"{SVG_NS}circle")
    # arena frame + start box + 3 rect risk regions
    assert len(rects) == 2 + sum(r.shape == "rect" for r in spec.risk_regions)
    # goal ring + goal dot + airport circle (+ goods circle)
    assert len(circles) >= 3
    assert root.findall(f"{SVG_NS}path")  # landing-point cross


def test_scene_polylines_per_arm():
    spec = _spec()
    trajs = {"baseline": _trajs(spec, 3), "corrected": _trajs(spec, 2, seed0=10)}
    root = ET.fromstring(render_scene(spec, trajs))
    lines = root.findall(f"{SVG_NS}polyline")
    assert len(lines) == 5
    base_color, base_dash = ARM_STYLE["baseline"]
    dashed = [el for el in lines if el.get("stroke-dasharray") == base_dash]
    assert len(dashed) == 3
    assert all(el.get("stroke") == base_color for el in dashed)


def test_scene_caps_trajectories_per_arm():
    spec = _spec()
    root = ET.fromstring(render_scene(spec, {"corrected": _trajs(spec, 5)},
                                      max_per_arm=2))
    assert len(root.findall(f"{SVG_NS}polyline")) == 2


def test_scene_skips_empty_trajectories():
    spec = _spec()
    traj = control_episode(spec, ScriptedDirect(spec), None, None, Rng(0),
                           max_steps=0)
    root = ET.fromstring(render_scene(spec, {"baseline": [traj]}))
    assert root.findall(f"{SVG_NS}polyline") == []


def test_quiver_line_count_matches_grid():
    spec = _spec()
    grid_n = 7
    text = render_scene(spec, quiver_fn=lambda pts: -pts, quiver_grid=grid_n)
    root = ET.fromstring(text)
    qv = [el for el in root.findall(f"{SVG_NS}line") if el.get("class") == "qv"]
    assert len(qv) == grid_n * grid_n
    # arrow lengths stay inside a cell: longest segment <= 0.9 * cell size
    span = float(np.min(spec.arena_max - spec.arena_min))
    cell_px = (600 - 2 * 40) / float(np.max(spec.arena_max - spec.arena_min)) \
        * span / grid_n
    for el in qv:
        dx = float(el.get("x2")) - float(el.get("x1"))
        dy = float(el.get("y2")) - float(el.get("y1"))
        assert np.hypot(dx, dy) <= 0.9 * cell_px + 0.02


def test_quiver_zero_field_draws_dots_only():
    spec = _spec()
    root = ET.fromstring(render_scene(spec, quiver_fn=np.zeros_like, quiver_grid=3))
    qv = [el for el in root.findall(f"{SVG_NS}line") if el.get("class") == "qv"]
    assert all(el.get("x1") == el.get("x2") and el.get("y1") == el.get("y2")
               for el in qv)


def test_y_axis_flips():
    spec = _spec()
    # goal sits at y=0.5 mid-arena; a state above it must map to a smaller
    # pixel y than one below it
    root = ET.fromstring(render_scene(spec))
    assert root.get("viewBox") == "0 0 600 600"
    from cdsa.svgplot import _Mapper
    m = _Mapper(spec)
    assert m.y(0.9) < m.y(0.1)
    assert m.x(0.9) > m.x(0.1)


def test_write_svg_appends_newline(tmp_path):
    path = tmp_path / "scene.svg"
    write_svg(render_scene(_spec()), str(path))
    text = path.read_text()
    assert text.endswith("\n") and not text.endswith("\n\n")
    ET.fromstring(text)
