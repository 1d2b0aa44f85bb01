"""Smoke test for the gwspeed Python module.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
"""

import math

import gwspeed


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    dist = gwspeed.OffspringDistribution({2: 0.5, 3: 0.5})
    assert dist.mean == 2.5 and dist.min_degree == 2 and dist.max_degree == 3
    assert repr(dist) == "OffspringDistribution('2:0.5,3:0.5')"
    assert close(dist.monotonicity_threshold(), 2 / (1 + math.sqrt(0.5)), 1e-12)

    q = gwspeed.OffspringDistribution.parse("0:0.25,2:0.75").extinction_probability()
    assert close(q, 1 / 3, 1e-10), q

    try:
        gwspeed.OffspringDistribution({2: 0.6, 3: 0.6})
    except ValueError as e:
        assert "sum to 1.2" in str(e)
    else:
        raise AssertionError("bad pmf accepted")

    tree = gwspeed.QuenchedTree.sample(dist, 6, 1)
    beta, dbeta = tree.beta(6, 1.0)
    assert close(beta, tree.effective_conductance(6, 1.0), 1e-12 * beta)
    assert close(dbeta, tree.dbeta_path_sum(6, 1.0), 1e-12 * abs(dbeta))
    est, se = tree.hitting_mc(1.0, 6, 4000, seed=3)
    assert abs(est - beta) < 4 * math.sqrt(beta * (1 - beta) / 4000)

    assert gwspeed.regular_escape_probability(2, 1.0) == 0.5
    assert close(gwspeed.regular_return_gf(2, 1.0, 1.0), 0.5, 1e-15)

    exact = gwspeed.speed_exact_lambda1(dist)
    speed, se = gwspeed.speed_formula(dist, 1.0, n=10, samples=20000, tuples=20000, seed=5)
    assert abs(speed - exact) < 4 * se + 2e-3, (speed, se, exact)
    mean, se = gwspeed.simulate_speed(gwspeed.OffspringDistribution.regular(2), 1.0, steps=20000, replicas=8)
    assert abs(mean - 1 / 3) < 4 * se + 1e-3, (mean, se)

    curve = gwspeed.speed_curve(dist, [0.0, 0.3, 0.6, 0.9], n=8, samples=5000, tuples=5000)
    assert curve["strictly_decreasing"] is True
    assert curve["levels"] == [8, 11]
    print("smoke test ok: beta_6 = %.6f, speed(1) = %.4f +- %.4f (exact %.6f)" % (beta, speed, se, exact))


if __name__ == "__main__":
    main()
