"""Benchmark tasks: the a^n b^n c^n language and superimposed sines.

CSL protocol: symbols are presented one per step as 4-channel vectors
(+1.0 for the observed symbol of ``S, a, b, c``, -1.0 elsewhere). Four
binary readouts predict whether each of ``a, b, c, T`` is a legal next
symbol. A string is accepted when, at every step, the set of positively
predicted symbols equals the legal-next set.

Sine protocol: ``y(x) = sin(0.2 x) + sin(0.311 x)``. The network has no
external drive; its only input is the previous output (the true value while
clamped, its own prediction while free-running). Step ``x`` reads
``y(x - 1)`` and is trained to emit ``y(x)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EvokeError
from .lstm import InputMode, LstmNetwork, reset, run_sequence, step
from .readout import ActivationTable

INPUT_SYMBOLS = "Sabc"
TARGET_SYMBOLS = "abcT"

FAILURE = float("inf")


# --------------------------------------------------------------------------- CSL


def legal_next(prefix: str) -> frozenset:
    """Symbols that may follow ``prefix`` in some string of S a^n b^n c^n T.

    Returns the empty set for prefixes that cannot be completed.
    """
    if not prefix or prefix[0] != "S":
        return frozenset()
    body = prefix[1:]
    na, nb, nc = body.count("a"), body.count("b"), body.count("c")
    if body != "a" * na + "b" * nb + "c" * nc:
        return frozenset()
    if na == 0:
        return frozenset("a") if nb == nc == 0 else frozenset()
    if nb == 0:
        return frozenset("ab") if nc == 0 else frozenset()
    if nb < na:
        return frozenset("b") if nc == 0 else frozenset()
    if nb > na or nc > na:
        return frozenset()
    return frozenset("c") if nc < na else frozenset("T")


def encode_symbols(symbols: str) -> np.ndarray:
    """One row per symbol: +1 on its channel, -1 on the others."""
    x = -np.ones((len(symbols), len(INPUT_SYMBOLS)))
    for t, s in enumerate(symbols):
        x[t, INPUT_SYMBOLS.index(s)] = 1.0
    return x


@dataclass(frozen=True)
class SymbolString:
    n: int
    symbols: str

    @classmethod
    def legal(cls, n: int) -> "SymbolString":
        if n < 1:
            raise ValueError("n must be positive")
        return cls(n, "S" + "a" * n + "b" * n + "c" * n)

    def __len__(self):
        return len(self.symbols)

    @property
    def inputs(self) -> np.ndarray:
        return encode_symbols(self.symbols)

    @property
    def legal_next_sets(self) -> list:
        return [legal_next(self.symbols[:t + 1]) for t in range(len(self.symbols))]

    @property
    def next_symbols(self) -> str:
        """The symbol actually following each step (``T`` after the last)."""
        return self.symbols[1:] + "T"

    def targets(self) -> np.ndarray:
        """(L, 4) matrix of +1/-1: is each of a, b, c, T legal next."""
        sets = self.legal_next_sets
        return np.array([[1.0 if s in legal else -1.0 for s in TARGET_SYMBOLS] for legal in sets])


@dataclass
class CslDataset:
    strings: list
    n_train: int

    @property
    def training(self) -> list:
        return self.strings[:self.n_train]

    @property
    def validation(self) -> list:
        return self.strings[self.n_train:]

    def to_text(self) -> str:
        return "".join(s.symbols + "\n" for s in self.strings)


def generate_csl_set(max_n: int) -> CslDataset:
    """Strings for n = 1..max_n; the first half trains, the second validates."""
    if max_n < 2:
        raise ValueError("need max_n >= 2 so the validation half is non-empty")
    return CslDataset([SymbolString.legal(n) for n in range(1, max_n + 1)], max_n // 2)


def string_activations(net: LstmNetwork, string: SymbolString) -> np.ndarray:
    return run_sequence(net, string.inputs)


def build_csl_tables(net: LstmNetwork, strings: Sequence[SymbolString]) -> list:
    """Four tables (one per target symbol) sharing the same activation rows."""
    if net.n_inputs != len(INPUT_SYMBOLS):
        raise ValueError("CSL networks take exactly 4 inputs")
    blocks = [(string_activations(net, s), s.targets()) for s in strings]
    rows = np.concatenate([r for r, _ in blocks])
    targets = np.concatenate([d for _, d in blocks])
    bounds = np.concatenate([[0], np.cumsum([len(r) for r, _ in blocks])])
    return [ActivationTable(rows, targets[:, k], bounds) for k in range(len(TARGET_SYMBOLS))]


def decisions(models: Sequence, rows: np.ndarray) -> np.ndarray:
    """(L, 4) decision values, one column per readout."""
    return np.column_stack([m.decision_function(rows) for m in models])


def sign_predictions(values: np.ndarray) -> np.ndarray:
    # exact zero counts as the negative class
    return np.where(values > 0, 1.0, -1.0)


def accepts(values: np.ndarray, symbols: str) -> bool:
    """Acceptance of a symbol string given its (L, 4) decision values.

    Every step must predict exactly the legal-next set, and the symbol that
    actually follows must be in it.
    """
    pred = sign_predictions(np.asarray(values))
    string = SymbolString(0, symbols)
    for t, (legal, nxt) in enumerate(zip(string.legal_next_sets, string.next_symbols)):
        predicted = {s for s, v in zip(TARGET_SYMBOLS, pred[t]) if v > 0}
        if predicted != legal or nxt not in predicted:
            return False
    return True


def classify_string(net: LstmNetwork, models: Sequence, string) -> bool:
    if isinstance(string, str):
        string = SymbolString(0, string)
    return accepts(decisions(models, string_activations(net, string)), string.symbols)


def csl_generalization(net: LstmNetwork, models: Sequence, max_n: int = 1000) -> int:
    """Largest m such that every legal string with n <= m is accepted."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    for n in range(1, max_n + 1):
        if not classify_string(net, models, SymbolString.legal(n)):
            return n - 1
    return max_n


def csl_errors(models: Sequence, tables: Sequence[ActivationTable]) -> int:
    """Per-step, per-classifier sign errors."""
    total = 0
    for model, table in zip(models, tables):
        pred = sign_predictions(model.decision_function(table.rows))
        total += int(np.sum(pred != np.where(table.targets > 0, 1.0, -1.0)))
    return total


def fit_csl_models(net: LstmNetwork, dataset: CslDataset, fit: Callable) -> list:
    return [fit(t) for t in build_csl_tables(net, dataset.training)]


def csl_fitness(net: LstmNetwork, models: Sequence, dataset: CslDataset) -> float:
    """Sign errors summed over the training and validation halves."""
    train = build_csl_tables(net, dataset.training)
    valid = build_csl_tables(net, dataset.validation)
    return float(csl_errors(models, train) + csl_errors(models, valid))


# --------------------------------------------------------------------------- sine

WASHOUT = (1, 100)
TRAIN = (101, 400)
VALIDATION = (401, 700)
TEST = (701, 1000)


def double_sine(x):
    x = np.asarray(x, dtype=float)
    return np.sin(0.2 * x) + np.sin(0.311 * x)


@dataclass
class SineSeries:
    """``values[x]`` holds y(x) for x = 0..length."""

    values: np.ndarray

    @property
    def length(self) -> int:
        return len(self.values) - 1

    def segment(self, bounds) -> np.ndarray:
        lo, hi = bounds
        return self.values[lo:hi + 1]

    def to_text(self) -> str:
        return "".join(f"{x} {v!r}\n" for x, v in enumerate(self.values.tolist()) if x >= 1)


def generate_sine_series(length: int = 1000, func: Callable = double_sine) -> SineSeries:
    if length < 1:
        raise ValueError("length must be positive")
    return SineSeries(func(np.arange(length + 1)))


def sine_clamped_rows(net: LstmNetwork, series: SineSeries, last: int = VALIDATION[1]) -> np.ndarray:
    """Rows for steps x = 1..last with the true y(x - 1) fed back."""
    if net.n_inputs != 1:
        raise ValueError("sine networks take only the feedback input")
    targets = series.values[1:last + 1]
    return run_sequence(net, np.zeros((last, 0)), teacher=targets, mode=InputMode.BACKPROJECTED,
                        initial_feedback=series.values[0])


def _rows_for(rows: np.ndarray, bounds) -> np.ndarray:
    # rows[x - 1] belongs to step x
    return rows[bounds[0] - 1:bounds[1]]


def sine_table(rows: np.ndarray, series: SineSeries, bounds=TRAIN) -> ActivationTable:
    return ActivationTable(_rows_for(rows, bounds), series.segment(bounds))


def sse(pred, target) -> float:
    d = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return float(d @ d)


def sine_score(model, rows: np.ndarray, series: SineSeries) -> tuple:
    """(training SSE, validation SSE) of a fitted readout on clamped rows."""
    train = sse(model.decision_function(_rows_for(rows, TRAIN)), series.segment(TRAIN))
    valid = sse(model.decision_function(_rows_for(rows, VALIDATION)), series.segment(VALIDATION))
    return train, valid


def sine_fit(net: LstmNetwork, series: SineSeries, fit: Callable):
    """Fit a readout on the training segment and return (model, fitness)."""
    rows = sine_clamped_rows(net, series)
    model = fit(sine_table(rows, series, TRAIN))
    train, valid = sine_score(model, rows, series)
    return model, train + valid


def sine_fitness(net: LstmNetwork, series: SineSeries, fit: Callable) -> float:
    try:
        return sine_fit(net, series, fit)[1]
    except EvokeError:
        return FAILURE


def sine_generate(net: LstmNetwork, model, series: SineSeries, bounds=TEST,
                  clamp_test: bool = False) -> np.ndarray:
    """Predictions over ``bounds`` after a clamped warm-up on 1..bounds[0]-1.

    The first free-running step reads the true y(bounds[0] - 1); afterwards
    the network reads its own previous prediction (or the truth, when
    ``clamp_test`` is set).
    """
    first, last = bounds
    sine_clamped_rows(net, series, first - 1)
    preds = np.empty(last - first + 1)
    fb = series.values[first - 1]
    for k, x in enumerate(range(first, last + 1)):
        phi = step(net, [fb])
        preds[k] = model.decision_function(phi.reshape(1, -1))[0]
        fb = series.values[x] if clamp_test else preds[k]
    return preds


def sine_test(net: LstmNetwork, model, series: SineSeries, clamp_test: bool = False) -> float:
    """Summed squared error over the 300 free-running test points."""
    return sse(sine_generate(net, model, series, TEST, clamp_test), series.segment(TEST))
