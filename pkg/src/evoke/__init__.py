"""Evolved LSTM networks with analytically fitted outputs.

Hidden LSTM weights are searched by Enforced SubPopulations; for every
candidate the output layer is fitted in closed form, either as a kernel
support vector machine or as a pseudoinverse linear map.
"""
from .errors import ConvergenceError, DegenerateLabelsError, EvokeError, MalformedGenomeError
from .harness import ExperimentConfig, ExperimentReport, emit_report, make_fitness_fn, run_experiment
from .lstm import InputMode, LstmNetwork, decode_genome, reset, run_sequence, step
from .neuroevolution import EvolutionConfig, evolve
from .readout import (ActivationTable, KernelSpec, LinearReadout, SvmModel, fit_pseudoinverse,
                      fit_svc, fit_svr, gaussian_kernel, predict, predict_linear)

__version__ = "0.1.0"
