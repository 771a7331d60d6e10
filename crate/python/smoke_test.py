"""Smoke test for the textregion_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math

import textregion_py as tr


def square(x, y, s):
    return tr.Polygon([(x, y), (x + s, y), (x + s, y + s), (x, y + s)])


def main():
    sq = square(0.0, 0.0, 2.0)
    grown = sq.expand(1.0)
    assert grown.points() == [(-1.0, -1.0), (3.0, -1.0), (3.0, 3.0), (-1.0, 3.0)], grown

    tri = tr.Polygon([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]).expand(1.0)
    for (x, y), (ex, ey) in zip(tri.points(), [(-1.0, -1.0), (7.0, -1.0), (-1.0, 5.0)]):
        assert abs(x - ex) < 1e-9 and abs(y - ey) < 1e-9, tri

    assert square(0.0, 0.0, 4.0).shrink(2.0) is None

    poly = tr.Polygon([(20.0, 24.0), (100.0, 16.0), (108.0, 60.0), (24.0, 68.0)])
    labels = tr.generate_labels([poly], 128, 96, fixed=0.5)
    rec = labels.records()[0]
    assert rec["status"] == "central"
    assert math.isclose(rec["distance"], poly.offset_distance(0.5))

    full = [[float(v) for v in row] for row in labels.full_mask]
    central = [[float(v) for v in row] for row in labels.central_mask]
    dets = tr.extract_detections(full, central, labels.ratio_map)
    assert len(dets) == 1
    det, score = dets[0]
    assert det.iou(poly, 8.0) >= 0.99, det.iou(poly, 8.0)
    assert score > 0.99

    report = tr.evaluate([det], [poly])
    assert report["f_measure"] == 1.0

    assert tr.smooth_l1(0.5) == 0.125
    assert math.isclose(tr.dice([[1.0, 0.0]], [[1.0, 1.0]]), (2 + 1e-6) / (3 + 1e-6))

    parsed = tr.parse_icdar15("0,0,10,0,10,5,0,5,###\n")
    assert parsed[0][1] is True

    try:
        tr.Polygon([(0.0, 0.0), (float("nan"), 1.0), (1.0, 1.0)])
    except tr.TextRegionError:
        pass
    else:
        raise AssertionError("NaN vertex accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
