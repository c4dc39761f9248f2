"""Smoke test for the folia Python module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/folia-py
"""

import json
import math
import tempfile

import folia


def grid(nx, ny, lo, h, f):
    return [[f(lo[0] + h * i, lo[1] + h * j) for i in range(nx)] for j in range(ny)]


def main():
    n = 65
    h = 1.0 / (n - 1)
    squared = folia.Field("square", grid(n, n, (0.0, 0.0), h, lambda x, y: y * y))
    linear = folia.Field("square", grid(n, n, (0.0, 0.0), h, lambda x, y: y))
    assert (squared.nx, squared.ny, squared.shape) == (n, n, "square")
    assert abs(squared(0.3, 0.5) - 0.25) < 1e-3

    verdict = squared.classify()
    assert verdict["status"] == "weakly_regular", verdict["status"]
    plateau = folia.Field("square", grid(n, n, (0.0, 0.0), h, lambda x, y: min(y, 0.5)))
    assert plateau.classify()["status"] == "not_regular"

    family = linear.levels(11)
    assert len(family["curves"]) == 11

    assert abs(folia.mu_length([(0, 0), (1, 0)], 1e-9) - math.log(2)) < 1e-6
    assert abs(folia.frechet([(0, 0), (1, 0)], [(0, 1), (1, 1)]) - 1.0) < 1e-12

    hmap = squared.rectify("square", 17, 17)
    assert hmap.orientation_ok and hmap.residual <= 2 * squared.h
    for j, row in enumerate(hmap.grid):
        for _, y in row:
            assert abs(y - math.sqrt(j / 16)) < 2 * squared.h
    x, y = hmap(0.5, 0.25)
    assert abs(y - 0.5) < 2 * squared.h
    inv = hmap.invert()
    assert abs(inv(0.5, 0.5)[1] - 0.25) < 4 * squared.h
    again = folia.Homeomorphism.from_json(hmap.to_json())
    assert again.to_json() == hmap.to_json()
    assert hmap.svg().startswith("<svg")

    pairs = []
    for i in range(64):
        s = i / 64
        pairs.append((s, s))
    phi, report = folia.conjugate(linear, linear, pairs, 17, 17)
    assert report["passed"], report

    with tempfile.TemporaryDirectory() as d:
        path = squared.save(d, "sq")
        back = folia.Field.load(path)
        assert back(0.3, 0.5) == squared(0.3, 0.5)
        with open(path) as fh:
            assert json.load(fh)["shape"] == "square"

    try:
        folia.Field.load("/nonexistent/field.json")
    except OSError:
        pass
    else:
        raise AssertionError("missing file should raise OSError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
