"""Quick check that the extension imports and agrees with known values."""

import json
import math

import mellinbp


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


for u in (0.0, 0.5, 2.0):
    close(mellinbp.mittag_leffler(1.0, u).real, math.exp(-u), 1e-13)
    close(mellinbp.mittag_leffler(0.5, u).real, math.exp(u * u) * math.erfc(u), 1e-12)

law = mellinbp.StableLaw(1.5, 0.25)
for s in (0.2, 0.5, 0.8):
    plus, minus = law.mellin_numeric(s)
    close(plus.real, law.mellin(s, "plus").real, 1e-6)
    close(minus.real, law.mellin(s, "minus").real, 1e-6)
value, err = mellinbp.StableLaw(2.0).density(1.0)
close(value, math.exp(-0.25) / math.sqrt(4 * math.pi), 1e-8)

ld = mellinbp.LuriaDelbruck(0.5)
close(ld.limit_laplace(1.0), mellinbp.mittag_leffler(0.5, 1.0).real, 1e-12)
counts = ld.simulate(200, 400, seed=3)
assert counts == ld.simulate(200, 400, seed=3)
assert len(counts) == 400 and 1 <= min(counts) and max(counts) <= 201
r = ld.ratios(counts, 200, resamples=20)
assert 1.0 < r["second"] < 2.5

f = mellinbp.Offspring([0.0, 0.0, 0.5, 0.5])
rec, err = f.recover_lifetime_laplace(1.5, 1.0)
close(rec.real, f.lifetime_laplace(1.5, 1.0).real, 1e-8)
sim = mellinbp.Offspring.power(2).simulate(3.0, 300, seed=5)
close(sim["beta"], 1.0, 1e-9)

report = json.loads(mellinbp.run("stable-mellin", {"alpha": "2"}, {"s": (0.25, 0.75, 3)}))
assert report["command"] == "stable-mellin" and len(report["results"]) == 12
try:
    mellinbp.run("ld-limit", {"rho": "1.5", "u": "1"})
except ValueError:
    pass
else:
    raise AssertionError("invalid rho accepted")

print("smoke test passed, mellinbp", mellinbp.__version__)
