"""Evolve an LSTM that predicts the next symbol of a^n b^n c^n strings.

Four kernel classifiers read the network state and decide whether a, b, c
or the terminator may come next. Only n = 1..5 is seen while fitting the
classifiers; n = 6..10 scores them during evolution. Afterwards we scan n
upward until the first string the network gets wrong.

    python demos/csl_generalization.py [seed]
"""
import sys

from evoke import tasks
from evoke.harness import ExperimentConfig, decode, fit_readouts, make_dataset, run_single

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
config = ExperimentConfig.for_task("csl", readout="svm", base_seed=seed, n_runs=1)
dataset = make_dataset(config)
print("training strings:", " ".join(s.symbols for s in dataset.training))

result = run_single(config, 0, dataset)
for rec in result.history[::10]:
    print(f"generation {rec.generation:3d}: {rec.best_fitness:.0f} misclassified steps")

net = decode(config, result.best_genome)
models = fit_readouts(config, net, dataset)
print(f"support vectors per classifier: {[len(m.support_rows) for m in models]}")
print(f"accepts every a^n b^n c^n for n = 1..{result.test_metric:.0f}")

# the first rejected string, step by step
n = int(result.test_metric) + 1
if n <= config.generalization_cap:
    s = tasks.SymbolString.legal(n)
    signs = tasks.sign_predictions(tasks.decisions(models, tasks.string_activations(net, s)))
    for t, (sym, legal) in enumerate(zip(s.symbols, s.legal_next_sets)):
        predicted = {c for c, v in zip(tasks.TARGET_SYMBOLS, signs[t]) if v > 0}
        if predicted != legal:
            print(f"n={n}: after {s.symbols[:t + 1][-6:]!r} (step {t}) predicted {sorted(predicted)}, "
                  f"legal {sorted(legal)}")
            break
