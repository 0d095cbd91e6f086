"""How much of their wealth should a new retiree put into the family home?

The home is exempt from the asset test, which is where the two income tests
pull in different directions. This demo compares the chosen home value under
pre-2015 and post-2015 rules for a single retiree. Coarse grids keep the
runtime to a few minutes.

Run: python3 demos/04_housing.py
"""
from agepension.config import ControlSpec, GridSpec, HousingSpec, ScenarioConfig
from agepension.solver import solve_policy
from agepension.utility import FamilyState

coarse = dict(grid=GridSpec(1_000.0, 3e6, 50), quadrature_nodes=6,
              controls=ControlSpec(15, 15, refine_rounds=1),
              housing=HousingSpec(search=True, total_wealth_min=2e5, total_wealth_max=2e6,
                                  n_total_wealth=12, n_opening_balances=12))
curves = {r: solve_policy(ScenarioConfig(regime=r, **coarse)).housing
          for r in ("post2015", "pre2015")}
tw = curves["post2015"].total_wealth
print(" total wealth   home post2015   home pre2015")
for i, w in enumerate(tw):
    print(f" {w:12,.0f}  {curves['post2015'].housing[FamilyState.SINGLE][i]:14,.0f}"
          f"  {curves['pre2015'].housing[FamilyState.SINGLE][i]:13,.0f}")
gap = curves["post2015"].housing[FamilyState.SINGLE] - curves["pre2015"].housing[FamilyState.SINGLE]
print("\nsign of (post - pre):", "".join("+" if g > 0 else "-" if g < 0 else "0" for g in gap))
own_all = tw[(curves["post2015"].housing[FamilyState.SINGLE] == tw)
             & (curves["pre2015"].housing[FamilyState.SINGLE] == tw)]
if own_all.size:
    print(f"Up to ${own_all.max():,.0f} both rules put all wealth into the home.")
