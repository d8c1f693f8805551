#!/usr/bin/env python3
"""Regenerate the committed fixture scenes in scenes/.

All three scenes fully cover a 16:9 frame from their cameras so that every
pixel carries geometry; work-ratio arithmetic in the tests relies on that.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "scenes"


def quad(p0, p1, p2, p3, normal, albedo):
    """Two triangles spanning the quad p0-p1-p2-p3 (counter-clockwise)."""
    n3 = [list(normal)] * 3
    return [
        {"v": [list(p0), list(p1), list(p2)], "n": n3, "albedo": list(albedo)},
        {"v": [list(p0), list(p2), list(p3)], "n": n3, "albedo": list(albedo)},
    ]


def scene_quad():
    tris = quad((-6, -4, 0), (6, -4, 0), (6, 4, 0), (-6, 4, 0), (0, 0, 1), (0.85, 0.85, 0.85))
    return {
        "triangles": tris,
        "camera": {"position": [0, 0, 4], "view_dir": [0, 0, -1], "up": [0, 1, 0],
                   "fov_y_deg": 50, "near": 0.1, "far": 50},
        "light": {"direction": [0.3, -0.5, -0.8], "intensity": [1, 1, 1],
                  "ambient": [0.2, 0.2, 0.2]},
        "defaults": {"ssao": {"radius": 0.5}, "ssgi": {"radius": 2.0}},
    }


def _room_base(floor_albedo, wall_albedo):
    tris = []
    # floor: y = 0, generous extent so the frame is always covered
    tris += quad((-12, 0, 8), (12, 0, 8), (12, 0, -4), (-12, 0, -4), (0, 1, 0), floor_albedo)
    # back wall: z = -4
    tris += quad((-12, 0, -4), (12, 0, -4), (12, 8, -4), (-12, 8, -4), (0, 0, 1), wall_albedo)
    return tris


def scene_crease():
    tris = _room_base((0.75, 0.75, 0.75), (0.8, 0.25, 0.2))
    return {
        "triangles": tris,
        "camera": {"position": [0, 1.8, 4.2], "view_dir": [0, -0.25, -1], "up": [0, 1, 0],
                   "fov_y_deg": 55, "near": 0.1, "far": 60},
        "light": {"direction": [-0.25, -0.85, -0.45], "intensity": [1, 1, 1],
                  "ambient": [0.25, 0.25, 0.25]},
        "defaults": {"ssao": {"radius": 0.5}, "ssgi": {"radius": 2.0}},
    }


def scene_occluder():
    tris = _room_base((0.8, 0.8, 0.8), (0.75, 0.3, 0.25))
    # floating slab casting a compact shadow onto the floor
    tris += quad((-1.6, 1.2, -0.2), (-0.2, 1.2, -0.2), (-0.2, 1.2, -1.4), (-1.6, 1.2, -1.4),
                 (0, 1, 0), (0.35, 0.45, 0.75))
    return {
        "triangles": tris,
        "camera": {"position": [0, 1.8, 4.2], "view_dir": [0, -0.25, -1], "up": [0, 1, 0],
                   "fov_y_deg": 55, "near": 0.1, "far": 60},
        "light": {"direction": [-0.25, -0.85, -0.45], "intensity": [1, 1, 1],
                  "ambient": [0.25, 0.25, 0.25]},
        "defaults": {"ssao": {"radius": 0.5}, "ssgi": {"radius": 2.0}},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in (("quad", scene_quad()), ("crease", scene_crease()),
                      ("occluder", scene_occluder())):
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
