"""Evaluate the nonlinear inequality on quantum and classical distributions.

The witness f_w(P) = w * s111(P) - (1 - w) * Delta(P) combines the
three-point correlation s111 with a penalty Delta that vanishes exactly on
distributions symmetric within each outcome-coincidence class. Classical (network-local)
models are conjectured to satisfy f_w <= bound(w); the tetrahedral-basis
distribution violates the tabulated bound at w = 0.0922.

Runs in about a second.
"""

from trianglekit.dist import TriangleDistribution
from trianglekit.inequality import delta, evaluate, f_w, load_bound_table, s111, sweep_w
from trianglekit.quantum import elegant_distribution

elegant = elegant_distribution()
uniform = TriangleDistribution.uniform()

print("witness ingredients:")
print(f"  s111(elegant) = {s111(elegant)}   Delta(elegant) = {delta(elegant):.2e}")
print(f"  s111(uniform) = {s111(uniform)}   Delta(uniform) = {delta(uniform):.2e}")

w, bound = 0.0922, 0.0264
print(f"\nat w = {w} against bound {bound}:")
for name, p in (("elegant", elegant), ("uniform", uniform)):
    report = evaluate(p, w=w, bound=bound)
    print(f"  {name:8s} f_w = {f_w(p, w):.6f}  margin = {report.margin:+.6f}  "
          f"-> {report.classification}")

# sweep the packaged bound table and find where the violation is strongest
entries = load_bound_table()
rows = sweep_w(elegant, entries)
violated = [r for r in rows if r.report.margin > 0.0]
best = max(rows, key=lambda r: r.report.margin)
print(f"\nbundled table: {len(entries)} rows, {len(violated)} violated by elegant")
print(f"violated range: w in [{violated[0].report.w}, {violated[-1].report.w}]")
print(f"largest margin {best.report.margin:.6f} at w = {best.report.w}")
