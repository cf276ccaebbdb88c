"""Regenerate the synthetic pipeline fixtures: ``python tests/fixtures/make_fixtures.py``."""
import csv
import json
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
SOILS = ("loam", "clay", "sand", "peat")


def fc(features):
    return {"type": "FeatureCollection", "features": features}


def feature(gtype, coords, **props):
    return {"type": "Feature", "geometry": {"type": gtype, "coordinates": coords},
            "properties": props}


def r(v):
    return round(float(v), 3)


def main():
    rng = np.random.default_rng(20240601)
    # 10 x 6 block of 100 m parcels with jittered interior corners
    nx, ny, c = 10, 6, 100.0
    gx, gy = np.meshgrid(np.arange(nx + 1) * c, np.arange(ny + 1) * c, indexing="ij")
    jitter = rng.uniform(-20, 20, gx.shape + (2,))
    jitter[[0, -1], :, 0] = 0
    jitter[:, [0, -1], 1] = 0
    gx, gy = gx + jitter[..., 0], gy + jitter[..., 1]
    parcels = []
    pid = 100
    for i in range(nx):
        for j in range(ny):
            ring = [[r(gx[a, b]), r(gy[a, b])]
                    for a, b in ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1), (i, j))]
            parcels.append(feature("Polygon", [ring], pid=pid,
                                   soil=SOILS[int(rng.integers(0, 4))],
                                   slope=r(rng.uniform(0, 25))))
            pid += 1
    schools = [feature("Point", [r(x), r(y)], name=f"school-{k}")
               for k, (x, y) in enumerate(rng.uniform(0, [nx * c, ny * c], (8, 2)))]
    roads = [
        feature("LineString", [[0, 150], [420, 230], [1000, 180]], cls="arterial"),
        feature("MultiLineString", [[[300, 0], [360, 600]], [[700, 600], [820, 250], [990, 0]]],
                cls="local"),
    ]
    wells = [feature("Point", [r(x), r(y)], depth=r(20 + 0.02 * x + 15 * np.sin(y / 90)))
             for x, y in rng.uniform(-50, [nx * c + 50, ny * c + 50], (25, 2))]
    for name, doc in (("parcels", parcels), ("schools", schools), ("roads", roads),
                      ("wells", wells)):
        with open(os.path.join(HERE, f"{name}.geojson"), "w") as fh:
            json.dump(fc(doc), fh, indent=1)
            fh.write("\n")
    with open(os.path.join(HERE, "flood.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parcel_id", "flood_zone"])
        for p in range(100, 100 + nx * ny):
            if p % 7:  # every seventh parcel has no flood record
                w.writerow([p, ["X", "AE", "VE"][int(rng.integers(0, 3))]])


if __name__ == "__main__":
    main()
