import numpy as np
import pytest

from evoke import tasks
from evoke.lstm import decode_genome
from evoke.readout import KernelSpec, LinearReadout, SvmModel, fit_pseudoinverse, fit_svc


class ConstantModel:
    def __init__(self, value):
        self.value = value

    def decision_function(self, rows):
        return np.full(len(rows), self.value)


def grammar_enumeration(max_n):
    """Legal-next sets by enumerating all complete strings up to max_n."""
    complete = ["S" + "a" * n + "b" * n + "c" * n + "T" for n in range(1, max_n + 1)]
    table = {}
    for s in complete:
        for t in range(1, len(s)):
            table.setdefault(s[:t], set()).add(s[t])
    return table


def random_net(seed, n_inputs=4, n_cells=3, biases=(0.0, 1.5, -1.5)):
    rng = np.random.default_rng(seed)
    return decode_genome([rng.uniform(-1, 1, 4 * (n_inputs + n_cells)) for _ in range(n_cells)],
                         n_inputs, biases)


# --------------------------------------------------------------------------- grammar


def test_legal_sets_n1():
    s = tasks.SymbolString.legal(1)
    assert s.symbols == "Sabc" and len(s) == 4
    assert s.legal_next_sets == [{"a"}, {"a", "b"}, {"c"}, {"T"}]
    np.testing.assert_array_equal(s.inputs[0], [1, -1, -1, -1])
    np.testing.assert_array_equal(s.inputs[3], [-1, -1, -1, 1])


def test_legal_set_after_first_b():
    assert tasks.legal_next("Saab") == {"b"}


def test_legal_sets_match_enumeration():
    table = grammar_enumeration(12)
    for n in range(1, 9):
        s = tasks.SymbolString.legal(n)
        for t, legal in enumerate(s.legal_next_sets):
            assert legal == table[s.symbols[:t + 1]]


def test_replaying_legal_sets_reconstructs_string():
    for n in range(1, 15):
        s = tasks.SymbolString.legal(n)
        sets = s.legal_next_sets
        assert all(nxt in legal for nxt, legal in zip(s.next_symbols, sets))
        assert sets[-1] == {"T"}
        # unique continuations determine the whole b/c part
        assert all(len(legal) == 1 for legal in sets[n + 1:])


def test_illegal_prefixes_have_no_continuation():
    for prefix in ("", "a", "Sb", "Saba", "Sabb", "Sabcc", "Saacb", "SS"):
        assert tasks.legal_next(prefix) == frozenset()


def test_csl_dataset_split():
    ds = tasks.generate_csl_set(10)
    assert [s.n for s in ds.training] == [1, 2, 3, 4, 5]
    assert [s.n for s in ds.validation] == [6, 7, 8, 9, 10]
    with pytest.raises(ValueError):
        tasks.generate_csl_set(1)
    assert ds.to_text().splitlines()[1] == "Saabbcc"


# --------------------------------------------------------------------------- tables / acceptance


def test_tables_share_rows():
    net = random_net(0)
    ds = tasks.generate_csl_set(4)
    tabs = tasks.build_csl_tables(net, ds.training)
    assert len(tabs) == 4
    assert len(tabs[0]) == 4 + 7
    for t in tabs[1:]:
        np.testing.assert_array_equal(t.rows, tabs[0].rows)
    np.testing.assert_array_equal(tabs[0].boundaries, [0, 4, 11])
    assert tabs[0].targets[0] == 1.0 and tabs[2].targets[0] == -1.0


def test_accepts_oracle_decisions():
    for n in range(1, 30):
        s = tasks.SymbolString.legal(n)
        assert tasks.accepts(s.targets(), s.symbols)


def test_oracle_rejects_corrupted_strings():
    rng = np.random.default_rng(0)
    rejected = 0
    for _ in range(100):
        n = int(rng.integers(1, 20))
        s = list(tasks.SymbolString.legal(n).symbols)
        pos = int(rng.integers(0, len(s)))
        s[pos] = rng.choice([c for c in "Sabc" if c != s[pos]])
        corrupted = "".join(s)
        # oracle decisions: thresholded legal-next sets of the corrupted string's prefixes
        oracle = np.array([[1.0 if c in tasks.legal_next(corrupted[:t + 1]) else -1.0
                            for c in tasks.TARGET_SYMBOLS] for t in range(len(corrupted))])
        rejected += not tasks.accepts(oracle, corrupted)
    assert rejected == 100


def test_zero_decision_counts_negative():
    s = tasks.SymbolString.legal(2)
    d = s.targets()
    d[d > 0] = 0.0
    assert not tasks.accepts(d, s.symbols)


def test_reject_all_and_constant_T():
    net = random_net(1)
    reject_all = [ConstantModel(-1.0)] * 4
    assert tasks.csl_generalization(net, reject_all, 50) == 0
    assert not tasks.classify_string(net, reject_all, tasks.SymbolString.legal(3))


def test_memorising_models_accept_training_strings():
    net = random_net(2, n_cells=5)
    ds = tasks.generate_csl_set(6)
    models = [fit_svc(t, KernelSpec(0.05), 1e4) for t in tasks.build_csl_tables(net, ds.strings)]
    for s in ds.strings:
        assert tasks.classify_string(net, models, s)
    assert tasks.csl_generalization(net, models, 6) == 6
    assert tasks.csl_fitness(net, models, ds) == 0.0


def test_constant_negative_models_miss_every_positive():
    ds = tasks.generate_csl_set(2)
    net = random_net(3)
    tabs = tasks.build_csl_tables(net, ds.strings)
    positives = sum(int(np.sum(t.targets > 0)) for t in tabs)
    assert sum(len(t) for t in tabs) == 44
    assert tasks.csl_errors([ConstantModel(0.0)] * 4, tabs) == positives
    assert tasks.csl_fitness(net, [LinearReadout(np.zeros(3), 0.0)] * 4, ds) == positives


class Lookup:
    """Readout that returns a stored value for each known activation row."""

    def __init__(self, rows, values):
        self.rows, self.values = rows, values

    def decision_function(self, r):
        idx = [int(np.flatnonzero(np.all(self.rows == x, axis=1))[0]) for x in r]
        return self.values[idx]


def test_csl_fitness_all_wrong_is_44():
    ds = tasks.generate_csl_set(2)
    net = random_net(4)
    rows = np.concatenate([tasks.string_activations(net, s) for s in ds.strings])
    targets = np.concatenate([s.targets() for s in ds.strings])
    assert tasks.csl_fitness(net, [Lookup(rows, -targets[:, k]) for k in range(4)], ds) == 44.0
    assert tasks.csl_fitness(net, [Lookup(rows, targets[:, k]) for k in range(4)], ds) == 0.0


# --------------------------------------------------------------------------- sine


def test_sine_values():
    series = tasks.generate_sine_series(1000)
    assert series.values[0] == 0.0
    assert series.length == 1000
    assert np.all(np.abs(series.values) <= 2.0)
    x = 123
    assert series.values[x] == pytest.approx(np.sin(0.2 * x) + np.sin(0.311 * x), abs=1e-15)
    assert len(series.segment(tasks.TEST)) == 300
    assert series.to_text().splitlines()[0].split()[0] == "1"


def test_sine_not_periodic():
    y = tasks.generate_sine_series(2000).values
    for p in range(1, 1001):
        assert np.max(np.abs(y[p:p + 1000] - y[:1000])) >= 1e-6


def test_segments_disjoint():
    spans = [tasks.WASHOUT, tasks.TRAIN, tasks.VALIDATION, tasks.TEST]
    covered = np.concatenate([np.arange(lo, hi + 1) for lo, hi in spans])
    np.testing.assert_array_equal(covered, np.arange(1, 1001))


def sine_net(seed, n_cells=4):
    rng = np.random.default_rng(seed)
    return decode_genome([rng.uniform(-1, 1, 4 * (1 + n_cells)) for _ in range(n_cells)], 1)


def test_constant_zero_predictor_fitness():
    series = tasks.generate_sine_series(1000)
    net = sine_net(0)
    rows = tasks.sine_clamped_rows(net, series)
    train, valid = tasks.sine_score(LinearReadout(np.zeros(4), 0.0), rows, series)
    x = np.arange(101, 701)
    expected = float(np.sum((np.sin(0.2 * x) + np.sin(0.311 * x)) ** 2))
    assert train + valid == pytest.approx(expected, rel=1e-12)


def test_sine_fitness_decomposes_and_is_deterministic():
    series = tasks.generate_sine_series(1000)
    net = sine_net(1)
    model, fitness = tasks.sine_fit(net, series, fit_pseudoinverse)
    rows = tasks.sine_clamped_rows(net, series)
    train, valid = tasks.sine_score(model, rows, series)
    assert fitness == train + valid
    assert np.isfinite(fitness)
    assert tasks.sine_fitness(sine_net(1), series, fit_pseudoinverse) == fitness


def test_sine_rows_are_clamped():
    series = tasks.generate_sine_series(1000)
    net = sine_net(2)
    rows = tasks.sine_clamped_rows(net, series)
    assert rows.shape == (700, 4)
    from evoke.lstm import reset, step
    reset(net)
    for x in range(1, 50):
        np.testing.assert_array_equal(step(net, [series.values[x - 1]]), rows[x - 1])


def test_perfect_predictor_zero_fitness():
    series = tasks.generate_sine_series(1000)
    rows = tasks.sine_clamped_rows(sine_net(4), series)
    truth = Lookup(rows, series.values[1:701])
    assert tasks.sine_score(truth, rows, series) == (0.0, 0.0)


def test_test_phase_clamped_vs_free():
    series = tasks.generate_sine_series(1000)
    net = sine_net(3, n_cells=6)
    model, _ = tasks.sine_fit(net, series, fit_pseudoinverse)
    clamped = tasks.sine_test(net, model, series, clamp_test=True)
    free = tasks.sine_test(net, model, series)
    assert len(tasks.sine_generate(net, model, series)) == 300
    assert clamped <= free
