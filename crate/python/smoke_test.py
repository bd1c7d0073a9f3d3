"""Smoke test for the `nlos` extension module.

Build first: pip install --no-build-isolation -e crates/py
"""

import json
import math

import nlos


def main():
    m = nlos.mirror_point((1.0, 2.0), (0.0, 0.0), (1.0, 0.0))
    assert m == (1.0, -2.0), m

    labels = nlos.dbscan([(0, 0), (0.1, 0), (0.2, 0), (5, 5)], 0.15, 2)
    assert labels == [0, 0, 0, -1], labels

    a = nlos.AlignedBox((0.0, 0.0), 2.0, 2.0)
    b = nlos.AlignedBox((1.0, 0.0), 2.0, 2.0)
    assert abs(nlos.iou(a, b) - 1.0 / 3.0) < 1e-12
    assert len(a.corners()) == 4
    assert math.isclose(nlos.euclid_error((3.0, 4.0), (0.0, 0.0)), 5.0)

    cfg = json.loads(nlos.default_config())
    assert cfg["target_eps"] == 0.6

    scenario = nlos.Scenario.builtin("SA")
    assert scenario.id == "SA"
    va, vb = scenario.vehicles()
    corrected, bounces, truncated = nlos.unfold((6.65, 0.0), [va, vb])
    assert bounces == 0 and not truncated

    report = nlos.run_trial(scenario, reference=True)
    print(f"SA zero noise: accuracy={report.accuracy} ae={report.ae} idp={report.idp} tta={report.tta}")
    assert report.accuracy == 1.0

    scenario.benchmark_noise()
    scenario.seed = 3
    report = nlos.run_trial(scenario)
    print(f"SA benchmark seed 3: accuracy={report.accuracy:.3f} ae={report.ae:.3f}")
    for name, radar, reference in report.vehicle_errors():
        print(f"  {name}: radar={radar:.4f}")

    try:
        nlos.Scenario.builtin("nope")
    except ValueError as e:
        print(f"rejected unknown scenario: {e}")
    else:
        raise AssertionError("expected ValueError")

    print("ok")


if __name__ == "__main__":
    main()
