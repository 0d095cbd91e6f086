"""Walk through the Age Pension means tests for a few households.

Run: python3 demos/01_pension_rules.py
"""
import numpy as np

from agepension.config import ScenarioConfig
from agepension.pension import (HouseholdKind, age_pension, binding_test_crossover,
                                load_regimes, zero_pension_wealth)

regimes = load_regimes()
cfg = ScenarioConfig()

print("Where the asset test takes over from the income test (post-2015 rules):")
for kind in HouseholdKind:
    for owner in (False, True):
        w = binding_test_crossover(kind, owner, regimes["post2015"])
        print(f"  {kind.value:6s} {'homeowner' if owner else 'renter':9s}  ${w:>12,.0f}")

print("\nWealth at which the pension runs out:")
for name in ("post2015", "post2015r"):
    w = zero_pension_wealth(HouseholdKind.SINGLE, False, regimes[name])
    print(f"  {name:10s} single renter  ${w:,.2f}")

# A pre-2015 account is assessed on drawdown less a fixed deduction, set when the
# account was opened. Two identical balances drawn at the same rate can therefore
# get very different pensions depending on the regime.
W = np.array([200e3, 400e3, 600e3, 800e3])
gf = cfg.grandfather(500_000.0)
print("\nSingle renter, 5% drawdown, age 65:")
print("   wealth     pre2015    post2015   post2015r")
for w in W:
    row = [age_pension(w, 0.05 * w, HouseholdKind.SINGLE, False, regimes[r],
                       gf if r == "pre2015" else None, 65)
           for r in ("pre2015", "post2015", "post2015r")]
    print(f"  {w:8,.0f}" + "".join(f"{p:11,.0f}" for p in row))
