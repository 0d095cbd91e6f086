"""Follow a single retiree with $1m through retirement under two regimes.

The deterministic path grows with the expected return every year. The
Monte Carlo ensemble then draws returns and deaths, and reports quantiles.

Run: python3 demos/03_lifetime_paths.py
"""
from agepension.config import ControlSpec, GridSpec, ScenarioConfig
from agepension.paths import deterministic_path, monte_carlo_paths
from agepension.solver import solve_policy

coarse = dict(grid=GridSpec(1_000.0, 3e6, 50), quadrature_nodes=6,
              controls=ControlSpec(15, 15, refine_rounds=1))
start = 1_000_000.0
post = solve_policy(ScenarioConfig(regime="post2015", **coarse))
pre = solve_policy(ScenarioConfig(regime="pre2015", opening_balance=start, **coarse))

p_post = deterministic_path(start, "post2015", post)
p_pre = deterministic_path(start, "pre2015", pre)
print(" age    wealth post  wealth pre   pension post  pension pre")
for i in range(0, p_post.ages.size, 5):
    print(f" {p_post.ages[i]:3d}  {p_post.wealth[i]:12,.0f} {p_pre.wealth[i]:11,.0f}"
          f"  {p_post.pension[i]:12,.0f} {p_pre.pension[i]:11,.0f}")
print(f"\nCumulative pension: post2015 ${p_post.cumulative_pension:,.0f}, "
      f"pre2015 ${p_pre.cumulative_pension:,.0f}")

mc = monte_carlo_paths(start, "post2015", post, n_paths=4_000, seed=7)
print("\nMonte Carlo (post2015), wealth quantiles among survivors:")
print("  age  " + "  ".join(f"p{q:g}".rjust(10) for q in mc.quantile_levels)
      + "   alive")
for i in range(0, mc.ages.size, 5):
    print(f"  {mc.ages[i]:3d}  " + "  ".join(f"{v:10,.0f}" for v in mc.wealth[:, i])
          + f"   {mc.alive[i]:5d}")
