"""End-to-end smoke test of the rulesolve_py bindings.

Runs a tiny three-step march, generates the matching reference solution,
compares the two tables, reads back training metrics and a checkpoint, and
spot-checks the analytic series helper. Finishes in a few seconds.
"""

import math
import os
import tempfile

import rulesolve_py as rs

CONFIG = """\
schema_version = 1
equation = "van_der_pol"

[march]
dt_seconds = 0.05
n_steps = 3
threshold = 1e-3
max_iters_per_step = 3000
seed = 0
batch_equation = 20

[network]
hidden = [8, 8]
sigma = 0.05

[output]
directory = "{out}"
time_points = 16
"""


def main():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "run")
        config = os.path.join(tmp, "vdp.toml")
        with open(config, "w") as f:
            f.write(CONFIG.format(out=out))

        report = rs.solve_config(config)
        assert report["n_steps"] == 3, report
        assert report["all_converged"], report
        assert os.path.exists(os.path.join(out, "solution.csv"))

        oracle_csv = rs.oracle_config(config)
        assert os.path.exists(oracle_csv), oracle_csv

        rows = rs.compare_files(os.path.join(out, "solution.csv"), oracle_csv)
        worst = {
            r["component"]: r["value"]
            for r in rows
            if r["section"] == "global" and r["metric"] == "max_abs_err"
        }
        assert set(worst) == {"x", "y"}, rows
        for component, value in worst.items():
            assert value < 5e-2, (component, value)

        summary = rs.metrics_run(out)
        assert summary["first_step_iterations"] > 0, summary
        assert os.path.exists(os.path.join(out, "warm_start_ratio.csv"))

        policy = rs.Policy.load(os.path.join(out, "policy_final_0.rspn"))
        assert policy.n_params > 0
        mean = policy.forward([0.01])
        assert len(mean) == 2 and all(math.isfinite(v) for v in mean), mean
        assert all(s > 0 for s in policy.sigmas())

        u0 = rs.cole_series([-0.5, 0.0, 0.5], 0.0, 0.1)
        expected = [-math.sin(math.pi * x) for x in (-0.5, 0.0, 0.5)]
        for got, want in zip(u0, expected):
            assert abs(got - want) < 1e-9, (got, want)

    print("smoke test passed")


if __name__ == "__main__":
    main()
