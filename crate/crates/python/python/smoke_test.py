"""Smoke test for the eigenbound extension module."""

import json
import math

import eigenbound as eb


def main():
    p = eb.ProjectivePoint([1, 0])
    q = eb.ProjectivePoint([0, 1])
    assert abs(eb.fs_distance(p, q) - math.pi / 2) < 1e-12
    assert abs(p.distance(eb.ProjectivePoint([1, 1])) - math.pi / 4) < 1e-12

    tau = eb.moment_map(eb.ProjectivePoint.random(2, seed=1))
    assert abs(sum(tau[i][i] for i in range(3)) - 1j) < 1e-12

    w = eb.ProjectivePoint.random(1, seed=2)
    assert abs(eb.model_eigenfunction(w, w) - 1.0) < 1e-12
    assert abs(math.tan(eb.ball_image_radius(2.0, 0.3)) - 2.0 * math.tan(0.3)) < 1e-12

    a = eb.Annulus(w, 0.0, 0.2)
    assert a.cutoff(w) >= 0.3

    mesh = eb.Mesh.icosphere(3)
    eigs = mesh.eigenvalues(10)
    assert abs(eigs[1] - 8.0) / 8.0 < 0.02, eigs

    ident = eb.RationalMap.identity()
    assert abs(eb.pullback_area(ident, mesh) - math.pi) / math.pi < 0.05
    cubic = eb.RationalMap.monomial(3)
    assert cubic.degree == 3
    assert abs(eb.holomorphic_degree(cubic, mesh) - 3 * math.pi / mesh.area) < 1e-12

    points = [eb.ProjectivePoint.random(1, seed=s) for s in range(1000)]
    annuli, measures, fraction, ok = eb.pack_annuli(points, [1.0] * 1000, 4)
    assert ok and len(annuli) == 4 and fraction >= 0.01

    report = json.loads(eb.run("bly-check", "[mesh]\nlevel = 3\n[bly]\nbumpy_cases = 2\n"))
    assert report["command"] == "bly-check"
    assert report["records"][0]["lambda_k"] > 7.5
    print("smoke test passed")


if __name__ == "__main__":
    main()
