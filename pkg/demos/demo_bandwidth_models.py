"""The two parametric bandwidth rules and how CV consumes them.

Run: python3 demos/demo_bandwidth_models.py
"""

from locfrechet import bandwidth_from_log_model, bandwidth_from_power_model

print("log model (ln n)^(-1/beta), beta = 10:")
for n in (80, 90, 100, 500):
    print(f"  n={n:4d} -> {bandwidth_from_log_model(n, 10.0):.4f}")

print("\npower model n^(-beta), beta = 1/6, n in minutes:")
for curves in (82, 84, 72, 52):
    minutes = curves * 50  # 50-minute trajectories
    print(f"  {curves} curves = {minutes} min -> {bandwidth_from_power_model(minutes, 1/6):.4f}")

print("""
In a CV config, replace the explicit grid with a parametric spec:
    "bandwidth_model": {"model": "power", "beta": 0.1667}
and each fold uses its own training size; the report labels the
setting with the interval the model spans across folds.""")
