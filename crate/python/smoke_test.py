"""Smoke test for the mvfsgl extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import mvfsgl


def main():
    views, labels, informative = mvfsgl.make_blobs(n=90, seed=3)
    assert len(views) == 2 and len(labels) == 90

    result = mvfsgl.fit(views, 3, seed=0)
    print(result)
    assert result.converged
    objectives = result.objectives
    assert all(b <= a * (1 + 1e-9) for a, b in zip(objectives, objectives[1:]))
    assert all(abs(sum(row) - 1.0) < 1e-9 for row in result.s)
    assert abs(sum(result.delta) - 1.0) < 1e-10

    pred = mvfsgl.spectral_cluster(result.s, 3, seed=0)
    score = mvfsgl.nmi(pred, labels)
    print(f"spectral NMI {score:.4f}  ACC {mvfsgl.acc(pred, labels):.4f}  PUR {mvfsgl.purity(pred, labels):.4f}")
    assert score >= 0.95

    for (scores, order), rows in zip(result.feature_scores(), informative):
        assert set(order[: len(rows)]) == set(rows)
    assert [len(k) for k in result.selected_features(25.0)] == [5, 5]

    normalized = mvfsgl.normalize(views)
    stacked = [row for view in normalized for row in view]
    km_labels, inertia = mvfsgl.kmeans(stacked, 3, seed=1)
    assert mvfsgl.nmi(km_labels, labels) >= 0.9 and inertia > 0

    projected = mvfsgl.project_simplex([0.6, 0.3])
    assert all(abs(a - b) < 1e-12 for a, b in zip(projected, [0.65, 0.35]))
    q = mvfsgl.solve_procrustes([[3.0, 0.0], [0.0, 2.0]])
    assert all(abs(q[i][j] - (i == j)) < 1e-12 for i in range(2) for j in range(2))

    try:
        mvfsgl.nmi([0, 1], [0])
    except ValueError as e:
        print(f"length mismatch rejected: {e}")
    else:
        raise AssertionError("length mismatch accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
