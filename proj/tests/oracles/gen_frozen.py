"""Regenerates tests/data/frozen_scipy.json. Values are frozen; the C++ tests
never call Python."""

import json
import pathlib

import numpy as np
from scipy import stats
from scipy.stats import studentized_range

out = {}

# two-sided t-test p for a correlation r with n pairs
out["cc_p"] = []
for r, n in [(0.5, 20), (0.0, 10), (-0.3, 50), (0.9, 8), (0.1, 277), (-0.68, 24)]:
    t = r * np.sqrt((n - 2) / (1 - r * r))
    out["cc_p"].append({"r": r, "n": n, "p": float(2 * stats.t.sf(abs(t), n - 2))})

out["f_sf"] = [{"f": f, "d1": a, "d2": b, "p": float(stats.f.sf(f, a, b))}
               for f, a, b in [(3.0, 2, 6), (1.0, 2, 10), (5.5, 3, 40), (0.2, 1, 5), (12.0, 2, 200)]]

out["qtukey"] = [{"alpha": a, "k": k, "df": df, "q": float(studentized_range.ppf(1 - a, k, df))}
                 for a in (0.05, 0.01) for k in (2, 3, 4, 5) for df in (5, 10, 30, 120)]
out["ptukey"] = [{"q": q, "k": k, "df": df, "cdf": float(studentized_range.cdf(q, k, df))}
                 for q, k, df in [(0.5, 3, 20), (2.0, 3, 20), (3.5, 3, 20), (4.0, 4, 60), (1e-3, 3, 100), (6.0, 2, 8)]]

# Tukey-Kramer fixtures decided by the textbook formula
rng = np.random.default_rng(20240)
fixtures = []
for _ in range(50):
    k = int(rng.integers(2, 5))
    groups = []
    for g in range(k):
        n = int(rng.integers(3, 16))
        shift = float(rng.choice([0.0, 0.0, 1.0, 2.5]))
        groups.append([round(float(x), 6) for x in rng.normal(shift, 1.0, n)])
    N = sum(len(g) for g in groups)
    df = N - k
    mse = sum(((np.array(g) - np.mean(g)) ** 2).sum() for g in groups) / df
    q = float(studentized_range.ppf(0.95, k, df))
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = float(np.mean(groups[i]) - np.mean(groups[j]))
            crit = q * np.sqrt(mse / 2 * (1 / len(groups[i]) + 1 / len(groups[j])))
            pairs.append({"i": i, "j": j, "diff": diff, "critical": float(crit), "significant": bool(abs(diff) > crit)})
    fixtures.append({"groups": groups, "q_critical": q, "pairs": pairs})
out["hsd"] = fixtures

path = pathlib.Path(__file__).resolve().parent.parent / "data" / "frozen_scipy.json"
path.write_text(json.dumps(out, indent=1) + "\n")
print("wrote", path)
