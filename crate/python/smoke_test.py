"""Smoke test for the pareto_records extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
Then run:                 python python/smoke_test.py
"""

import json
import math
from fractions import Fraction

import pareto_records as pr


def main():
    assert pr.p_star_exact(2, 3) == Fraction(7, 8)
    assert pr.roman_harmonic(3, 1) == Fraction(11, 6)
    assert math.isclose(pr.p_star(10, 2), sum(1 / k for k in range(1, 11)) / 10, rel_tol=1e-12)

    n, d, a = 5, 2, 1.0
    lo, mid, hi = pr.p_pa(n, d, a), pr.p_star(n, d), pr.p_dir(n, d, a)
    assert 1 / n < lo < mid < hi < 1, (lo, mid, hi)
    assert math.isclose(pr.p_family("dir", n, d, a, method="quad"), hi, rel_tol=1e-10)

    spec = pr.DistributionSpec.pa_scale_mixture(2, 1.0)
    assert spec.dimension == 2
    assert pr.DistributionSpec.from_json(spec.to_json()) == spec
    assert math.isclose(spec.survival([1.0, 1.0]), 1 / 3)

    est = pr.estimate_pn(spec, 2, 20_000, seed=7)
    assert abs(est["point"] - 2 / 3) <= 4 * est["std_error"], est
    again = pr.estimate_pn(spec, 2, 20_000, seed=7, workers=2)
    assert (again["point"], again["std_error"]) == (est["point"], est["std_error"])

    pts = spec.sample(300, seed=1)
    front = pr.Frontier(2)
    flags = [front.insert(p)[0] for p in pts]
    assert flags == [s[0] for s in pr.run_stream(pts)]
    assert front.records_total == sum(flags)
    assert len(front) == len(front.maxima())

    iid = pr.DistributionSpec.iid_exponential(2)
    verdict = pr.check_rp_order(pr.DistributionSpec.marginal_dirichlet(2, 1.0), iid, 20_000, 3)
    assert verdict["relation"] == "first-greater", verdict
    assert all(p["pass"] for p in pr.check_limits("pa", 5, 2))
    assert not pr.check_nuod(spec, 100_000, 4)["consistent"]

    try:
        pr.p_dir(3, 2, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative shape accepted")

    print(json.dumps({"module": pr.__name__, "version": pr.__version__, "ok": True}))


if __name__ == "__main__":
    main()
