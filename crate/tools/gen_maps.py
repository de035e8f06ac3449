#!/usr/bin/env python3
"""Authoring script for the bundled map documents in crates/core/maps/.

Routes are built from straight and circular-arc pieces and sampled every 4 m.
Hazard spawns are placed by (route, arc length, lateral offset) and converted
to world poses here so the JSON stays explicit.
"""
import json
import math
import os

SPACING = 4.0
LANE_WIDTH = 3.5


class Path:
    def __init__(self, x, y, heading_deg):
        self.x, self.y, self.h = x, y, math.radians(heading_deg)
        self.pieces = []

    def straight(self, length):
        self.pieces.append(("s", length))
        return self

    def arc(self, radius, angle_deg):
        """Positive angle turns left (counter-clockwise)."""
        self.pieces.append(("a", radius, math.radians(angle_deg)))
        return self

    def length(self):
        total = 0.0
        for p in self.pieces:
            total += p[1] if p[0] == "s" else p[1] * abs(p[2])
        return total

    def pose_at(self, s):
        x, y, h = self.x, self.y, self.h
        for p in self.pieces:
            seg = p[1] if p[0] == "s" else p[1] * abs(p[2])
            step = min(s, seg)
            if p[0] == "s":
                x += step * math.cos(h)
                y += step * math.sin(h)
            else:
                r, ang = p[1], p[2]
                sign = 1.0 if ang > 0 else -1.0
                cx = x - sign * r * math.sin(h)
                cy = y + sign * r * math.cos(h)
                dphi = sign * step / r
                phi0 = math.atan2(y - cy, x - cx)
                x = cx + r * math.cos(phi0 + dphi)
                y = cy + r * math.sin(phi0 + dphi)
                h += dphi
            s -= step
            if s <= 0:
                break
        return x, y, h

    def sample(self, spacing):
        total = self.length()
        n = max(1, math.ceil(total / spacing - 1e-9))
        pts = []
        for i in range(n + 1):
            x, y, _ = self.pose_at(min(total, i * total / n))
            pts.append([round(x, 6), round(y, 6)])
        return pts


def offset_pose(path, s, lateral, rel_heading_deg=0.0):
    x, y, h = path.pose_at(s)
    ox = x - lateral * math.sin(h)
    oy = y + lateral * math.cos(h)
    return {"x": round(ox, 6), "y": round(oy, 6),
            "heading": round(math.atan2(math.sin(h + math.radians(rel_heading_deg)),
                                        math.cos(h + math.radians(rel_heading_deg))), 9)}


def cut_in(oid, path, route, s, side=-1.0, prob=0.45, trigger=22.0, speed=5.0):
    return {
        "id": oid, "kind": "vehicle", "pose": offset_pose(path, s, side * LANE_WIDTH),
        "speed": speed, "radius": 1.2,
        "behavior": {"type": "cut_in", "lateral_shift": -side * LANE_WIDTH,
                     "shift_duration": 1.5, "hold_time": 14.0, "brake_decel": 5.0},
        "trigger_distance": trigger, "routes": [route], "spawn_probability": prob,
        "jitter": {"along": 10.0, "trigger": 4.0, "speed_frac": 0.2},
    }


def crossing(oid, path, route, s, side=1.0, prob=0.45, trigger=20.0, speed=1.3):
    return {
        "id": oid, "kind": "pedestrian", "pose": offset_pose(path, s, side * 6.0, -side * 90.0),
        "speed": speed, "radius": 0.5,
        "behavior": {"type": "crossing", "crossing_distance": 12.0},
        "trigger_distance": trigger, "routes": [route], "spawn_probability": prob,
        "jitter": {"along": 10.0, "trigger": 4.0, "speed_frac": 0.25},
    }


def parked(oid, path, route, s, prob=0.5):
    return {
        "id": oid, "kind": "vehicle", "pose": offset_pose(path, s, -3.8),
        "speed": 0.0, "radius": 1.2, "behavior": {"type": "stationary"},
        "trigger_distance": 0.0, "routes": [route], "spawn_probability": prob,
        "jitter": {"along": 15.0},
    }


def lead(oid, path, route, s, prob=0.3):
    return {
        "id": oid, "kind": "vehicle", "pose": offset_pose(path, s, 0.0),
        "speed": 9.0, "radius": 1.2, "behavior": {"type": "constant_velocity"},
        "trigger_distance": 0.0, "routes": [route], "spawn_probability": prob,
        "jitter": {"along": 5.0, "speed_frac": 0.1},
    }


def document(map_id, paths, objects, extra_lanes):
    lanes = [p.sample(1.0) for p in paths] + extra_lanes
    return {
        "format": 1,
        "map_id": map_id,
        "lane_width": LANE_WIDTH,
        "lanes": lanes,
        "routes": [p.sample(SPACING) for p in paths],
        "objects": objects,
    }


def map_seen():
    # T-junction grid: an east-west avenue (y = 0) with two side streets
    # (x = 80, x = 160) ending on it. Corners use 10 m fillets.
    routes = [
        Path(0, 0, 0).straight(240),
        Path(0, 0, 0).straight(70).arc(10, 90).straight(110),
        Path(80, 120, -90).straight(110).arc(10, 90).straight(150),
        Path(160, 120, -90).straight(110).arc(10, -90).straight(150),
        Path(240, 0, 180).straight(70).arc(10, -90).straight(110),
    ]
    objs = []
    oid = 1

    def add(o):
        nonlocal oid
        objs.append(o)
        oid += 1

    add(cut_in(oid, routes[0], 0, 60))
    add(crossing(oid, routes[0], 0, 160))
    add(parked(oid, routes[0], 0, 110))
    add(lead(oid, routes[0], 0, 30))
    add(crossing(oid, routes[1], 1, 45))
    add(cut_in(oid, routes[1], 1, 130))
    add(parked(oid, routes[1], 1, 150))
    add(cut_in(oid, routes[2], 2, 45))
    add(crossing(oid, routes[2], 2, 190))
    add(lead(oid, routes[2], 2, 30))
    add(crossing(oid, routes[3], 3, 60))
    add(cut_in(oid, routes[3], 3, 175))
    add(parked(oid, routes[3], 3, 220))
    add(cut_in(oid, routes[4], 4, 35))
    add(crossing(oid, routes[4], 4, 140))
    add(lead(oid, routes[4], 4, 100))
    # Adjacent (parking-side) lanes along the avenue and side streets.
    extra = [
        [[0, -LANE_WIDTH], [240, -LANE_WIDTH]],
        [[80 + LANE_WIDTH, 10], [80 + LANE_WIDTH, 120]],
        [[160 - LANE_WIDTH, 10], [160 - LANE_WIDTH, 120]],
    ]
    return document("map_seen", routes, objs, extra)


def map_unseen():
    # Ring road (radius 45, counter-clockwise) with a tangential merge from the
    # west, an exit to the east and an exit to the north.
    routes = [
        Path(-100, -45, 0).straight(100).arc(45, 270),
        Path(0, 45, 180).arc(45, 180).straight(100),
        Path(-45, 0, -90).arc(45, 180).straight(100),
    ]
    objs = []
    oid = 101

    def add(o):
        nonlocal oid
        objs.append(o)
        oid += 1

    add(crossing(oid, routes[0], 0, 55, side=-1.0, trigger=18.0, speed=1.5))
    add(cut_in(oid, routes[0], 0, 190, side=-1.0))
    add(lead(oid, routes[0], 0, 20))
    add(cut_in(oid, routes[1], 1, 70, side=-1.0, trigger=24.0, speed=4.5))
    add(crossing(oid, routes[1], 1, 185, side=1.0, trigger=18.0, speed=1.5))
    add(parked(oid, routes[1], 1, 200))
    add(crossing(oid, routes[2], 2, 60, side=1.0, trigger=18.0, speed=1.5))
    add(cut_in(oid, routes[2], 2, 180, side=1.0, trigger=24.0, speed=4.5))
    add(lead(oid, routes[2], 2, 150))
    return document("map_unseen", routes, objs, [])


if __name__ == "__main__":
    out = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "maps")
    for name, doc in (("map_seen", map_seen()), ("map_unseen", map_unseen())):
        with open(os.path.join(out, name + ".json"), "w") as f:
            json.dump(doc, f, separators=(",", ":"))
            f.write("\n")
        print(name, [round(sum(math.dist(a, b) for a, b in zip(r, r[1:])), 1) for r in doc["routes"]])
