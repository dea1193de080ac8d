"""LSTM memory-cell networks decoded from ESP chromosomes.

Each memory cell is encoded by one flat chromosome of ``4 * (I + H)`` weights:
four blocks (cell input, input gate, forget gate, output gate), each holding
``I`` external-input weights followed by ``H`` recurrent weights from the
previous cell outputs. Gate biases are constants fixed at decode time.

The cell update is the forget-gate LSTM without peepholes::

    s_c <- sigma(net_f) * s_c + sigma(net_in) * tanh(net_g)
    phi_c <- sigma(net_o) * tanh(s_c)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from .errors import MalformedGenomeError

N_BLOCKS = 4
CELL_INPUT, INPUT_GATE, FORGET_GATE, OUTPUT_GATE = range(N_BLOCKS)


class InputMode(enum.Enum):
    """How the network input vector is formed at each step."""

    EXTERNAL = "external-only"
    BACKPROJECTED = "backprojected"


@njit(cache=True)
def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _step(weights, biases, u, state, out):
    # weights: (4, H, I + H); biases: (4,); updates state and out in place
    n_cells = state.shape[0]
    n_in = u.shape[0]
    new_out = np.empty(n_cells)
    for c in range(n_cells):
        net = np.empty(N_BLOCKS)
        for b in range(N_BLOCKS):
            acc = 0.0
            for k in range(n_in):
                acc += weights[b, c, k] * u[k]
            for k in range(n_cells):
                acc += weights[b, c, n_in + k] * out[k]
            net[b] = acc + biases[b]
        s = _sigmoid(net[FORGET_GATE]) * state[c] + _sigmoid(net[INPUT_GATE]) * np.tanh(net[CELL_INPUT])
        state[c] = s
        new_out[c] = _sigmoid(net[OUTPUT_GATE]) * np.tanh(s)
    for c in range(n_cells):
        out[c] = new_out[c]


@njit(cache=True)
def _run(weights, biases, inputs, state, out):
    rows = np.empty((inputs.shape[0], state.shape[0]))
    for t in range(inputs.shape[0]):
        _step(weights, biases, inputs[t], state, out)
        rows[t] = out
    return rows


@dataclass
class LstmNetwork:
    """A decoded LSTM network with mutable cell state.

    Attributes
    ----------
    n_inputs : int
        Effective input width ``I`` (including a feedback channel, if any).
    n_cells : int
        Number of memory cells ``H``.
    weights : ndarray, shape (4, H, I + H)
        Per-block, per-cell weights in (cell input, input, forget, output) order.
    gate_biases : ndarray, shape (3,)
        Constant biases of the (input, forget, output) gates.
    """

    n_inputs: int
    n_cells: int
    weights: np.ndarray
    gate_biases: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cell_states: np.ndarray = field(init=False)
    cell_outputs: np.ndarray = field(init=False)

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=float)
        self.gate_biases = np.asarray(self.gate_biases, dtype=float)
        expected = (N_BLOCKS, self.n_cells, self.n_inputs + self.n_cells)
        if self.weights.shape != expected:
            raise MalformedGenomeError(f"weights shape {self.weights.shape} != {expected}")
        if self.gate_biases.shape != (3,):
            raise ValueError("gate_biases must hold (input, forget, output) biases")
        self._biases = np.concatenate([[0.0], self.gate_biases])
        self.cell_states = np.zeros(self.n_cells)
        self.cell_outputs = np.zeros(self.n_cells)

    def genome(self) -> list[np.ndarray]:
        """Re-encode the weights as one chromosome per cell."""
        return [self.weights[:, c, :].reshape(-1).copy() for c in range(self.n_cells)]


def decode_genome(chromosomes: Sequence[np.ndarray], n_inputs: int,
                  gate_biases=(0.0, 0.0, 0.0)) -> LstmNetwork:
    """Build a network from one chromosome per memory cell.

    Raises MalformedGenomeError unless every chromosome has length
    ``4 * (n_inputs + len(chromosomes))``.
    """
    n_cells = len(chromosomes)
    if n_cells == 0:
        raise MalformedGenomeError("genome has no chromosomes")
    width = n_inputs + n_cells
    genes = []
    for c, chrom in enumerate(chromosomes):
        chrom = np.asarray(chrom, dtype=float)
        if chrom.ndim != 1 or chrom.shape[0] != N_BLOCKS * width:
            raise MalformedGenomeError(
                f"chromosome {c} has length {chrom.size}, expected 4*({n_inputs}+{n_cells})={N_BLOCKS * width}")
        if not np.all(np.isfinite(chrom)):
            raise MalformedGenomeError(f"chromosome {c} has non-finite weights")
        genes.append(chrom.reshape(N_BLOCKS, width))
    weights = np.stack(genes, axis=1)
    return LstmNetwork(n_inputs, n_cells, weights, np.asarray(gate_biases, dtype=float))


def reset(net: LstmNetwork) -> LstmNetwork:
    net.cell_states[:] = 0.0
    net.cell_outputs[:] = 0.0
    return net


def step(net: LstmNetwork, u) -> np.ndarray:
    """Advance one time step and return the cell outputs (a copy)."""
    u = np.ascontiguousarray(u, dtype=float).reshape(-1)
    if u.shape[0] != net.n_inputs:
        raise ValueError(f"input length {u.shape[0]} != n_inputs {net.n_inputs}")
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite network input")
    _step(net.weights, net._biases, u, net.cell_states, net.cell_outputs)
    return net.cell_outputs.copy()


def run_sequence(net: LstmNetwork, inputs, teacher=None, mode: InputMode = InputMode.EXTERNAL,
                 feedback: Optional[Callable[[np.ndarray], float]] = None,
                 initial_feedback: float = 0.0, reset_first: bool = True) -> np.ndarray:
    """Propagate a sequence and return one activation row per step.

    Parameters
    ----------
    inputs : array_like, shape (L, I_ext)
        External inputs. In backprojected mode ``I_ext = I - 1``.
    teacher : array_like, shape (L,), optional
        Clamped targets; in backprojected mode ``teacher[t-1]`` is fed at
        step ``t`` and ``initial_feedback`` at step 0.
    feedback : callable, optional
        Free-running backprojection: called with ``phi(t)`` after every step,
        its return value becomes the feedback input of step ``t + 1``.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs.reshape(-1, 1)
    n_steps = inputs.shape[0]
    if reset_first:
        reset(net)
    if n_steps == 0:
        return np.zeros((0, net.n_cells))

    if mode is InputMode.EXTERNAL:
        if inputs.shape[1] != net.n_inputs:
            raise ValueError(f"input width {inputs.shape[1]} != n_inputs {net.n_inputs}")
        x = np.ascontiguousarray(inputs)
    else:
        if inputs.shape[1] != net.n_inputs - 1:
            raise ValueError(f"input width {inputs.shape[1]} != n_inputs - 1 = {net.n_inputs - 1}")
        if teacher is None:
            if feedback is None:
                raise ValueError("free-running backprojection needs a feedback callback")
            rows = np.empty((n_steps, net.n_cells))
            fb = float(initial_feedback)
            for t in range(n_steps):
                rows[t] = step(net, np.append(inputs[t], fb))
                fb = float(feedback(rows[t]))
            return rows
        teacher = np.asarray(teacher, dtype=float).reshape(-1)
        if teacher.shape[0] != n_steps:
            raise ValueError(f"teacher length {teacher.shape[0]} != sequence length {n_steps}")
        fed = np.concatenate([[initial_feedback], teacher[:-1]])
        x = np.ascontiguousarray(np.column_stack([inputs, fed]))
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    return _run(net.weights, net._biases, x, net.cell_states, net.cell_outputs)
