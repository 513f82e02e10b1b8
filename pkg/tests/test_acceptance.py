"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line."""
import math
import random
import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from crimecast.cli import main
from crimecast.features import (
    apply_scaler,
    build_sequences,
    fit_scaler,
    time_series_split,
)
from crimecast.metrics import (
    MetricSummary,
    StatePrediction,
    TrialMetrics,
    aggregate_trials,
    percent_error,
    test_mse,
    total_loss,
)
from crimecast.nn import (
    GruParams,
    LstmParams,
    NetworkSpec,
    gradient_check,
    gru_forward,
    init_params,
    lstm_forward,
    network_backward,
)
from crimecast.panel import synthesize_panel
from crimecast.report import render_error_bars
from crimecast.training import (
    EarlyStopState,
    LrSchedulerState,
    TrainConfig,
    early_stop_update,
    lr_scheduler_update,
    predict,
    train_model,
)

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {detail}")
        assert ok, detail
    return report


def test_1_table_percent_errors(verdict):
    rows = {"CA": (4466.7, 174331.0, 2.6), "FL": (6358.0, 81270.0, 7.8)}
    got = {s: percent_error(actual + adl, actual) for s, (adl, actual, _) in rows.items()}
    ok = all(abs(got[s] - rows[s][2]) <= 0.05 for s in rows)
    verdict(1, "table percent errors", ok,
            ", ".join(f"{s} {got[s]:.2f} vs {rows[s][2]}" for s in rows))


def _zero_gate(layer, gate):
    def backward(params, cache, d_pred):
        grads = network_backward(params, cache, d_pred)
        cell = getattr(grads, layer)
        for arr in (cell.input_weights, cell.recurrent_weights, cell.biases):
            arr[gate] = 0.0
        return grads
    return backward


def test_2_gradient_check(verdict):
    start = time.perf_counter()
    spec = NetworkSpec(10, 8, 4)
    errors = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        params = init_params(seed, spec)
        errors.append(gradient_check(params, rng.normal(size=(5, 10)), float(rng.normal()), 1e-5))

    rng = np.random.default_rng(99)
    params, seq, target = init_params(99, spec), rng.normal(size=(5, 10)), float(rng.normal())
    mutants = {f"{layer}[{gate}]": gradient_check(params, seq, target, 1e-5, _zero_gate(layer, gate))
               for layer, n in (("lstm", 4), ("gru", 3)) for gate in range(n)}
    elapsed = time.perf_counter() - start

    bad = [(s, float(f"{e:.2e}")) for s, e in enumerate(errors) if not e < 1e-5]
    weak = {k: v for k, v in mutants.items() if not v > 1e-2}
    ok = not bad and not weak and elapsed < 30
    detail = (f"max error {max(errors):.2e} over 20 seeds, failing seeds {bad}, "
              f"min mutant error {min(mutants.values()):.2e}, {elapsed:.1f}s")
    verdict(2, "gradient check", ok, detail)


def test_3_cell_fixed_points(verdict):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 10))
    lstm = LstmParams(np.zeros((4, 8, 10)), np.zeros((4, 8, 8)), np.zeros((4, 8)))
    h_lstm, _ = lstm_forward(lstm, x)
    gru = GruParams(np.zeros((3, 4, 8)), np.zeros((3, 4, 4)), np.zeros((3, 4)))
    h0 = rng.normal(size=4)
    h_gru, _ = gru_forward(gru, rng.normal(size=(5, 8)), h0=h0)
    prev = np.vstack([h0, h_gru[:-1]])
    lstm_err = float(np.abs(h_lstm).max())
    gru_err = float(np.abs(h_gru - 0.5 * prev).max())
    ok = lstm_err <= 1e-12 and gru_err <= 1e-12
    verdict(3, "cell fixed points", ok, f"LSTM max |h| {lstm_err:.1e}, GRU max |h - h_prev/2| {gru_err:.1e}")


def test_4_callback_state_machines(verdict):
    # early stopping on a stream that never improves after epoch 0
    stop_state, stopped_at = EarlyStopState(10), None
    for epoch, loss in enumerate([1.0] * 30):
        stop_state, stop = early_stop_update(stop_state, loss, epoch=epoch)
        if stop:
            stopped_at = epoch
            break
    non_improving = stopped_at  # epochs 1..stopped_at

    sched = LrSchedulerState(0.001, 5, 0.5, 1e-6)
    lrs = []
    for loss in [1.0] * 12:
        sched = lr_scheduler_update(sched, loss)
        lrs.append(sched.current_lr)
    halvings = [i for i in range(1, len(lrs)) if lrs[i] == lrs[i - 1] / 2]

    stream = list(np.random.default_rng(4).uniform(0.5, 1.5, 25))
    snap = EarlyStopState(100)
    for epoch, loss in enumerate(stream):
        snap, _ = early_stop_update(snap, loss, init_params(epoch, NetworkSpec(2, 2, 1)), epoch)
    want = init_params(int(np.argmin(stream)), NetworkSpec(2, 2, 1))
    restored = all(np.array_equal(a, b) for (_, a), (_, b) in
                   zip(snap.best_params.named_arrays(), want.named_arrays()))

    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(40, 5, 3)), rng.normal(size=40)
    params, log = train_model(X[:30], y[:30], X[30:], y[30:], TrainConfig(epochs=25, batch_size=8),
                              NetworkSpec(3, 4, 2))
    val = float(np.mean((predict(params, X[30:]) - y[30:]) ** 2))
    best = min(r.val_mse for r in log.records)

    ok = (non_improving == 10 and halvings == [5, 10] and restored
          and math.isclose(val, best, rel_tol=1e-12))
    verdict(4, "callbacks", ok,
            f"stopped after {non_improving} non-improving epochs, lr halved at epochs {halvings}, "
            f"snapshot matches argmin {restored}, trained snapshot val {val:.6g} vs log min {best:.6g}")


def test_5_pipeline_counting(verdict):
    panel = synthesize_panel(7, 50, 2000, 20)
    sequences = build_sequences(panel, lag=5, mean_window=3, std_window=4)
    per_state = {s: sum(q.state == s for q in sequences) for s in panel.states}
    split = time_series_split(sequences)
    sizes = (len(split.train), len(split.validation), len(split.test))
    # lag-only accounting: every length-5 window followed by a target year
    crime = [r.violent_crime for r in panel.for_state(panel.states[0])]
    lag_only = sum(1 for end in range(5, len(crime)))
    ok = set(per_state.values()) == {12} and sizes == (500, 50, 50) and lag_only == 15
    verdict(5, "pipeline counting", ok,
            f"{len(sequences)} sequences, per state {sorted(set(per_state.values()))}, split {sizes}, "
            f"lag-only count {lag_only}/state")


def test_6_learnability(verdict):
    start = time.perf_counter()
    panel = synthesize_panel(7, 10, 2000, 20)
    split = time_series_split(build_sequences(panel))
    scaler = fit_scaler(split.train)
    X_tr, y_tr = apply_scaler(scaler, split.train)
    X_val, y_val = apply_scaler(scaler, split.validation)
    X_te, _ = apply_scaler(scaler, split.test)
    params, log = train_model(X_tr, y_tr, X_val, y_val, TrainConfig(seed=7))

    val_actual = np.array([s.target for s in split.validation])
    val_pred = scaler.unscale_target(predict(params, X_val))
    persistence = np.array([s.inputs[-1, 0] for s in split.validation])
    model_mse = float(np.mean((val_pred - val_actual) ** 2))
    persistence_mse = float(np.mean((persistence - val_actual) ** 2))

    test_actual = np.array([s.target for s in split.test])
    test_pred = scaler.unscale_target(predict(params, X_te))
    mape = float(np.mean(np.abs(test_pred - test_actual) / test_actual) * 100)
    elapsed = time.perf_counter() - start
    ok = model_mse < persistence_mse and mape < 25 and elapsed < 120
    verdict(6, "learnability", ok,
            f"val MSE {model_mse:.4g} vs persistence {persistence_mse:.4g}, test MAPE {mape:.2f}%, "
            f"{len(log.records)} epochs, {elapsed:.1f}s")


def test_7_cli_determinism(verdict, tmp_path):
    assert main(["synth", "--seed", "7", "--states", "5", "--years", "20", "--out", str(tmp_path)]) == 0
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["trials", "--data", str(tmp_path / "panel.csv"), "--out", str(out),
                     "--n-trials", "3", "--seed", "11"])
        assert code == 0
        runs.append(out)
    files = ("trials.csv", "per_state.csv", "report.json")
    same = {f: (runs[0] / f).read_bytes() == (runs[1] / f).read_bytes() for f in files}
    verdict(7, "determinism", all(same.values()),
            ", ".join(f"{f} {'identical' if v else 'differs'}" for f, v in same.items()))


def _brute_aggregate(trials):
    n = len(trials)

    def summary(values):
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        return mean, max(values) - min(values), math.sqrt(var)

    scalars = {name: summary([getattr(t, name) for t in trials])
               for name in ("total_loss", "test_mse", "wall_time_s", "cpu_time_s", "stopped_epoch")}
    per_state = {}
    for t in trials:
        for s in t.per_state:
            per_state.setdefault(s.state, []).append(s)
    states = {k: (math.fsum(s.predicted for s in v) / n,
                  math.fsum(s.predicted - s.actual for s in v) / n,
                  math.fsum(100 * (s.predicted - s.actual) / s.actual for s in v) / n)
              for k, v in per_state.items()}
    return scalars, states


def _close(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)


def test_8_metric_oracles(verdict):
    rnd = random.Random(8)
    failures = []
    jensen_ok = True
    for case in range(100):
        n_states = rnd.randint(1, 50)
        actual = [float(rnd.randint(50, 200_000)) for _ in range(n_states)]
        predicted = [a * rnd.uniform(0.5, 1.5) + rnd.uniform(-100, 100) for a in actual]
        preds = [StatePrediction(f"S{i}", 2019, p, a) for i, (p, a) in enumerate(zip(predicted, actual))]

        tl = math.fsum(abs(p - a) for p, a in zip(predicted, actual))
        mse = math.fsum((p - a) ** 2 for p, a in zip(predicted, actual)) / n_states
        if not _close(total_loss(preds), tl):
            failures.append((case, "total_loss"))
        if not _close(test_mse(preds), mse):
            failures.append((case, "test_mse"))
        p0, a0 = predicted[0], actual[0]
        if not _close(percent_error(p0, a0), (p0 - a0) / a0 * 100):
            failures.append((case, "percent_error"))
        jensen_ok &= test_mse(preds) >= (total_loss(preds) / n_states) ** 2 * (1 - 1e-12)

        trials = []
        for t in range(rnd.randint(1, 6)):
            noisy = [StatePrediction(p.state, p.year, p.predicted * rnd.uniform(0.9, 1.1), p.actual)
                     for p in preds]
            rnd.shuffle(noisy)
            trials.append(TrialMetrics.from_predictions(t, t, noisy, wall_time_s=rnd.uniform(0, 5),
                                                        cpu_time_s=rnd.uniform(0, 5),
                                                        stopped_epoch=rnd.randint(10, 99)))
        report = aggregate_trials(trials)
        scalars, states = _brute_aggregate(trials)
        for name, want in scalars.items():
            s = getattr(report, name)
            if not all(map(_close, (s.mean, s.range, s.std), want)):
                failures.append((case, name))
        for s in report.per_state:
            if not all(map(_close, (s.mean_predicted, s.adl, s.ape), states[s.state])):
                failures.append((case, f"per_state {s.state}"))
    ok = not failures and jensen_ok
    verdict(8, "metric oracles", ok, f"100 instances, mismatches {failures[:5]}, Jensen holds {jensen_ok}")


def test_9_error_bar_figure(verdict):
    rng = np.random.default_rng(9)
    actual = rng.uniform(500, 180_000, 12)
    trials = [TrialMetrics.from_predictions(
        t, t, [StatePrediction(f"S{i:02d}", 2019, float(a * rng.uniform(0.85, 1.15)), float(a))
               for i, a in enumerate(actual)]) for t in range(4)]
    report = aggregate_trials(trials)
    chart, svg = render_error_bars(report)
    root = ET.fromstring(svg)
    groups = root.findall(f".//{SVG}g[@class='state']")
    per_group = [(len(g.findall(f"{SVG}circle[@class='marker']")),
                  len(g.findall(f"{SVG}line[@class='error-bar']"))) for g in groups]
    widths = {float(g.get("data-half-width")) for g in groups}
    expected = math.sqrt(report.test_mse.mean)

    report.test_mse = MetricSummary(4_000_000.0, 0.0, 0.0)
    fixed, _ = render_error_bars(report)
    ok = (len(groups) == 12 and set(per_group) == {(1, 1)} and widths == {chart.half_width}
          and math.isclose(chart.half_width, expected, rel_tol=1e-15) and fixed.half_width == 2000.0)
    verdict(9, "error-bar figure", ok,
            f"{len(groups)} state groups, half-width {chart.half_width:.4f} vs sqrt(mean MSE) "
            f"{expected:.4f}, MSE 4e6 gives {fixed.half_width}")
