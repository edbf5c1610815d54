"""Regenerates the shipped scenario documents under scenarios/."""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
VMAX = round(50 / 3.6, 4)


def single(name, lanes, approach_m, config):
    arms = {"N": (0, approach_m), "E": (approach_m, 0), "S": (0, -approach_m), "W": (-approach_m, 0)}
    nodes = [{"id": "C", "x": 0, "y": 0}] + [{"id": k, "x": x, "y": y} for k, (x, y) in arms.items()]
    links = []
    for k in arms:
        links.append({"id": f"{k}_in", "from": k, "to": "C", "length_m": approach_m,
                      "vmax_mps": VMAX, "lanes": lanes, "section_m": approach_m})
        links.append({"id": f"{k}_out", "from": "C", "to": k, "length_m": approach_m,
                      "vmax_mps": VMAX, "lanes": lanes, "section_m": approach_m})
    od = [{"origin": o, "destination": d} for o in arms for d in arms if o != d]
    return {
        "name": name,
        "model": "micro",
        "nodes": nodes,
        "links": links,
        "intersections": [{"node": "C", "tile_size_m": 0.25, "lane_width_m": 3.0,
                           "vehicle_length_m": 4.0, "vehicle_width_m": 2.0}],
        "od": od,
        "config": config,
    }


def grid(name, config):
    n = 4
    spacing = 500.0
    nodes, links, od = [], [], []
    vmax = round(50 / 3.6, 4)

    def gid(i, j):
        return f"G{i}{j}"

    for i in range(n):
        for j in range(n):
            nodes.append({"id": gid(i, j), "x": j * spacing, "y": -i * spacing})

    def add(a, b, length):
        links.append({"id": f"{a}_{b}", "from": a, "to": b, "length_m": length,
                      "vmax_mps": vmax, "lanes": 1, "section_m": 500.0})

    for i in range(n):
        for j in range(n):
            if j + 1 < n:
                add(gid(i, j), gid(i, j + 1), spacing)
                add(gid(i, j + 1), gid(i, j), spacing)
            if i + 1 < n:
                add(gid(i, j), gid(i + 1, j), spacing)
                add(gid(i + 1, j), gid(i, j), spacing)
    # Zones on the boundary: W/E per row, N/S per column.
    zone_len = 250.0
    for i in range(n):
        for side, j, dx in (("W", 0, -zone_len), ("E", n - 1, zone_len)):
            z = f"{side}{i}"
            nodes.append({"id": z, "x": j * spacing + dx, "y": -i * spacing})
            add(z, gid(i, j), zone_len)
            add(gid(i, j), z, zone_len)
    for j in range(n):
        for side, i, dy in (("N", 0, zone_len), ("S", n - 1, -zone_len)):
            z = f"{side}{j}"
            nodes.append({"id": z, "x": j * spacing, "y": -i * spacing + dy})
            add(z, gid(i, j), zone_len)
            add(gid(i, j), z, zone_len)
    od = [
        {"origin": "W1", "destination": "E2", "rate_per_min": 15.0},
        {"origin": "N1", "destination": "S2", "rate_per_min": 15.0},
    ]
    for o, d in (("W0", "E3"), ("E0", "W3"), ("N3", "S0"), ("S3", "N0"), ("W3", "N3"), ("S0", "E0")):
        od.append({"origin": o, "destination": d, "rate_per_min": 0.5})
    return {
        "name": name,
        "model": "meso",
        "nodes": nodes,
        "links": links,
        "intersections": [],
        "default_geometry": {"tile_size_m": 5.0, "lane_width_m": 3.0,
                             "vehicle_length_m": 4.0, "vehicle_width_m": 2.0},
        "od": od,
        "config": config,
    }


def madrid_like(name, config):
    """Irregular 3x4 street grid with a two-lane avenue and seven zones; documentation only."""
    import math
    jitter = {(0, 1): (40, -30), (1, 2): (-60, 25), (2, 0): (30, 45), (1, 0): (-25, -40), (2, 3): (50, -20)}
    xs = [0.0, 420.0, 980.0, 1400.0]
    ys = [0.0, -380.0, -900.0]
    nodes, links = [], []

    def nid(i, j):
        return f"M{i}{j}"

    pos = {}
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            dx, dy = jitter.get((i, j), (0, 0))
            pos[nid(i, j)] = (x + dx, y + dy)
            nodes.append({"id": nid(i, j), "x": x + dx, "y": y + dy})

    def add(a, b, lanes=1, vmax_kmh=50):
        (ax, ay), (bx, by) = pos[a], pos[b]
        length = round(math.hypot(bx - ax, by - ay), 1)
        links.append({"id": f"{a}_{b}", "from": a, "to": b, "length_m": length,
                      "vmax_mps": round(vmax_kmh / 3.6, 4), "lanes": lanes, "section_m": length})

    for i in range(len(ys)):
        for j in range(len(xs)):
            avenue = i == 1
            if j + 1 < len(xs):
                add(nid(i, j), nid(i, j + 1), 2 if avenue else 1, 60 if avenue else 50)
                add(nid(i, j + 1), nid(i, j), 2 if avenue else 1, 60 if avenue else 50)
            if i + 1 < len(ys):
                add(nid(i, j), nid(i + 1, j))
                add(nid(i + 1, j), nid(i, j))
    zones = {"O1": (0, 0, -300, 0), "O2": (0, 2, 0, 300), "O3": (0, 3, 300, 0), "O4": (1, 3, 300, 0),
             "O5": (2, 3, 0, -300), "O6": (2, 1, 0, -300), "O7": (1, 0, -300, 0)}
    for z, (i, j, dx, dy) in zones.items():
        x, y = pos[nid(i, j)]
        pos[z] = (x + dx, y + dy)
        nodes.append({"id": z, "x": x + dx, "y": y + dy})
        add(z, nid(i, j), 1)
        add(nid(i, j), z, 1)
    od = []
    for o in zones:
        for d in zones:
            if o != d:
                od.append({"origin": o, "destination": d, "rate_per_min": 0.4})
    return {
        "name": name,
        "model": "meso",
        "nodes": nodes,
        "links": links,
        "intersections": [],
        "default_geometry": {"tile_size_m": 5.0, "lane_width_m": 3.0,
                             "vehicle_length_m": 4.0, "vehicle_width_m": 2.0},
        "od": od,
        "config": config,
    }


def main():
    ROOT.mkdir(exist_ok=True)
    base = {"mode": "fcfs", "lambda_per_min": 15, "window_s": 1800}
    docs = {
        "single_intersection.json": single("single-intersection", 3, 200.0, base),
        "single_small.json": single("single-small", 2, 200.0, base),
        "grid4x4.json": grid("grid-4x4", {"mode": "fcfs", "window_s": 3000}),
        "madrid_like.json": madrid_like("madrid-like", {"mode": "ca-cta", "window_s": 1800}),
    }
    for fname, doc in docs.items():
        (ROOT / fname).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
