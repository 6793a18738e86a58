"""Quick check that the extension module loads and the main calls work."""

import math

import rfimpute

truth = rfimpute.simulate(200, seed=1)
assert truth.n_rows == 200 and truth.n_missing() == 0
print(truth, truth.names)

holed, mask = rfimpute.ampute(truth, "MCAR", 0.25, seed=2)
assert holed.n_missing() == mask.total() > 0

base, _ = rfimpute.impute(holed, "strawman", seed=3)
for alg in ["otf.2", "unsv", "prxR", "mRF0.5", "knn"]:
    out, trace = rfimpute.impute(holed, alg, ntree=20, seed=3)
    assert out.n_missing() == 0
    for r in range(out.n_rows):
        for c in range(out.n_cols):
            if not mask.get(r, c):
                assert out.get(r, c) == holed.get(r, c)
    s = rfimpute.score(truth, out, mask, baseline=base)
    print(f"{alg:8s} E={s['e_total']:.4f} E_R={s['e_relative']:.1f} stop={trace['stop_reason']}")

forest = rfimpute.grow(truth, "composite", responses=["Y"], ntree=10, nodesize=5, seed=4)
prox = forest.proximity()
assert len(prox) == 200 and all(0.0 <= v <= 1.0 for row in prox for v in row)
again = rfimpute.Forest.from_json(forest.to_json())
assert again.ntree == 10 and again.proximity() == prox

eq = rfimpute.equicorrelated(300, 5, 0.6, seed=5)
rho = eq.stats()["rho"]
assert rho is not None and not math.isnan(rho)

t = rfimpute.Table.from_csv("a,b\n1,x\n,y\n3,\n")
assert t.get(1, 0) is None and t.get(0, 1) == "x" and t.get(2, 1) is None
assert rfimpute.Table.from_csv(t.to_csv()).to_csv() == t.to_csv()

print("smoke test ok")
