"""Solve the retirement problem for a couple and look at the policy.

Uses a coarse grid so that it finishes in well under a minute; the
defaults (120 wealth nodes, 10 quadrature nodes) take a few minutes.

Run: python3 demos/02_solve_and_surfaces.py
"""
from agepension.config import ControlSpec, GridSpec, ScenarioConfig
from agepension.pension import HouseholdKind
from agepension.solver import solve_policy
from agepension.utility import FamilyState

cfg = ScenarioConfig(regime="post2015", household=HouseholdKind.COUPLE,
                     grid=GridSpec(1_000.0, 3e6, 50), quadrature_nodes=6,
                     controls=ControlSpec(15, 15, refine_rounds=1))
sol = solve_policy(cfg)
model = sol.model()

print("Couple, post-2015 rules: drawdown rate and risky share by age")
print("  age   W=250k          W=500k          W=1m")
for t in (65, 70, 75, 80, 85, 90, 95):
    cells = []
    for w in (250e3, 500e3, 1e6):
        a = float(sol.alpha(t, w, FamilyState.COUPLE))
        d = float(sol.delta(t, w, FamilyState.COUPLE))
        cells.append(f"{a:5.1%} / {d:4.0%}")
    print(f"  {t:3d}  " + "   ".join(cells) + f"    (min {cfg.withdrawal.min_rate(t):.0%})")

w = 500e3
a = float(sol.alpha(65, w, FamilyState.COUPLE))
p = model.pension(w, a * w, HouseholdKind.COUPLE, False, 65)
print(f"\nAt $500k and 65 the couple draws {a:.1%} and receives ${p:,.0f} pension,"
      f" so consumption is {(a * w + p) / w:.1%} of wealth.")
