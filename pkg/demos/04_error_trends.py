# How error falls with more samples and a higher sampling rate
#
# Signals here are exact Gaussian draws with precision L, so the estimator
# is consistent and RelErr shrinks as the per-graph sample count grows.

from tvgraph.harness import ExperimentConfig, run_scaling_study

cfg = ExperimentConfig.from_dict({
    "generator": {"model": "BA", "n_nodes": 15},
    "signal": {"mode": "gmrf"},
    "sampling_rates": [0.8],
    "noise_stds": [0.1],
    "monte_carlo_runs": 2,
})
rep = run_scaling_study(cfg, n_grid=[50, 100, 200], sr_grid=[0.5, 0.7, 0.9])
print("n  ", [(p["x"], round(p["mean"], 3)) for p in rep["n_series"]])
print("SR ", [(p["x"], round(p["mean"], 3)) for p in rep["sr_series"]])
print(rep["trend"])
