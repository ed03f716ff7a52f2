"""Smoke test for the adicflow Python bindings.

Build first:  pip install --no-build-isolation -e crates/python
Run:          python crates/python/python/smoke_test.py
"""

import json
import math

import adicflow_py as af

QA = [[3, 1], [1, 3]]

theta1, h, la = af.perron(QA)
assert abs(theta1 - math.log(4)) < 1e-12
assert all(abs(x - 1) < 1e-12 for x in h) and all(abs(x - 0.5) < 1e-12 for x in la)

flow = af.Flow(QA)
# f = 1 integrates to the elapsed time.
re, im = flow.integral([], [0, 0, 0], 0.0, 1000.0, constant=1.0, seed=3)
assert abs(re - 1000.0) < 1e-9 and im == 0.0

# The constant Q_A sequence has exponents ln 4 and ln 2.
ex = af.lyapunov([QA], [1.0], horizon=2000)
assert abs(ex[0] - math.log(4)) < 1e-9 and abs(ex[1] - math.log(2)) < 1e-9

cfg = {
    "graph": {"matrix": QA},
    "observables": [{"name": "f", "depth": 1, "terms": [{"word": [3], "coeff": [1, 0]}], "center": True}],
    "deviation": {"ns": [5, 6, 7, 8], "samples": 32},
    "limit": {"ns": [5, 6], "samples": 200, "eta_samples": 200, "modulus_samples": 10},
}
report = json.loads(af.spectral(json.dumps(cfg)))
assert report["kind"] == "periodic"
files = af.deviation(json.dumps(cfg))
assert files["deviation.csv"].startswith("observable,n[level]")
assert af.limit(json.dumps(cfg)) == af.limit(json.dumps(cfg))

try:
    af.spectral(json.dumps({"graph": {"matrix": [[1]]}}))
except ValueError as e:
    assert "does not exceed 1" in str(e)
else:
    raise AssertionError("non-expanding graph accepted")

assert all(ok for _, ok in af.selftest(["graph_core", "spectral"]))
assert not all(ok for _, ok in af.selftest(["adic_flow"], 0.0))
print("smoke test passed")
