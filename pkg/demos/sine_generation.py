"""Generate sin(0.2x) + sin(0.311x) with an evolved LSTM.

The network has no external input: it reads its own previous output. While
fitting (steps 1..700) that output is replaced by the true value; on the
test steps 701..1000 it runs free on its own predictions. Both readouts
are fitted to the same evolved network so their test errors compare
directly.

    python demos/sine_generation.py [seed]
"""
import sys

import numpy as np

from evoke import tasks
from evoke.harness import ExperimentConfig, decode, fit_readouts, make_dataset, run_single

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
config = ExperimentConfig.for_task("sine", readout="pi", base_seed=seed, n_runs=1)
series = make_dataset(config)
result = run_single(config, 0, series)
print(f"best fitness (SSE over 101..700, clamped): {result.best_fitness:.4g}")

net = decode(config, result.best_genome)
for readout in ("pi", "svm"):
    cfg = ExperimentConfig.for_task("sine", readout=readout)
    model = fit_readouts(cfg, net, series)
    clamped = tasks.sine_test(net, model, series, clamp_test=True)
    free = tasks.sine_generate(net, model, series)
    err = np.abs(free - series.segment(tasks.TEST))
    # how long the free run stays within 0.1 of the target
    drift = int(np.argmax(err > 0.1)) if np.any(err > 0.1) else len(err)
    print(f"{readout:>3}: test SSE clamped {clamped:.4g}, free-running {tasks.sse(free, series.segment(tasks.TEST)):.4g}; "
          f"free run within 0.1 for {drift} steps")
