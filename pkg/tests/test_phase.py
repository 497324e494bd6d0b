import math

import pytest

from robust_amp import phase
from robust_amp.errors import AmbiguousTransitionError, BracketError, DomainError, NumericalError
from robust_amp.phase import (PhaseClass, TransitionKind, classify, find_transition,
                              params_along, sweep_phase_diagram)
from robust_amp.replica import ReplicaParams

FIXED = dict(alpha=0.5, delta=1e-10, eta=1e-4)


def test_classes_along_fig1_densities():
    easy = classify(ReplicaParams(rho=0.1, **FIXED))
    assert easy.cls is PhaseClass.EASY
    assert easy.amp_mse_predicted == pytest.approx(easy.bayes_mse, rel=1e-3)
    hard = classify(ReplicaParams(rho=0.33, **FIXED))
    assert hard.cls is PhaseClass.HARD and hard.n_maxima == 2
    assert hard.amp_mse_predicted > 1e-2 > hard.bayes_mse
    assert classify(ReplicaParams(rho=0.4, **FIXED)).cls is PhaseClass.IMPOSSIBLE
    assert classify(ReplicaParams(0.5, 0.1, 1e-2, math.inf)).cls is PhaseClass.DEGENERATE


def test_below():
    sp, fo = TransitionKind.SPINODAL, TransitionKind.FIRST_ORDER
    assert sp.below(PhaseClass.EASY) and not sp.below(PhaseClass.HARD)
    assert fo.below(PhaseClass.HARD) and not fo.below(PhaseClass.IMPOSSIBLE)


def test_params_along():
    p = params_along("rho_over_alpha", 0.5, dict(alpha=0.4, delta=0.0, eta=0.0))
    assert p.rho == pytest.approx(0.2)
    with pytest.raises(DomainError):
        params_along("beta", 1.0, FIXED)


def test_spinodal_below_fig1_density():
    rho_s = find_transition("spinodal", "rho", FIXED, (0.2, 0.4), resolution=1e-2)
    assert 0.28 < rho_s < 0.33


def test_noiseless_first_order_at_alpha():
    rho_c = find_transition("first_order", "rho", dict(alpha=0.5, delta=0.0, eta=0.0),
                            (0.3, 0.7), resolution=1e-2)
    assert rho_c == pytest.approx(0.5, rel=0.02)


def test_resolution_convergence():
    coarse = find_transition("spinodal", "rho", FIXED, (0.2, 0.4), resolution=1e-2)
    fine = find_transition("spinodal", "rho", FIXED, (0.2, 0.4), resolution=5e-3)
    assert abs(coarse - fine) < 1e-2 * coarse


def test_same_side_bracket():
    with pytest.raises(BracketError):
        find_transition("spinodal", "rho", FIXED, (0.05, 0.1))
    with pytest.raises(BracketError):
        find_transition("spinodal", "rho", FIXED, (0.3, 0.2))


def test_ambiguous_classification(monkeypatch):
    flip = iter([PhaseClass.EASY, PhaseClass.HARD, PhaseClass.EASY, PhaseClass.HARD,
                 PhaseClass.HARD, PhaseClass.HARD])

    def fake(params, **kw):
        return phase.PhasePoint(params, next(flip))

    monkeypatch.setattr(phase, "classify", fake)
    with pytest.raises(AmbiguousTransitionError) as info:
        find_transition("spinodal", "rho", FIXED, (0.1, 0.4))
    assert len(info.value.scan) == 6


def test_single_point_sweep():
    d = sweep_phase_diagram("alpha", [0.5], "rho", [0.1], dict(delta=1e-10, eta=1e-4))
    assert len(d.points) == 1 and d.points[0].cls is PhaseClass.EASY
    assert not list(d.line_csv_rows())[1:]


def test_small_diagram_ordering():
    d = sweep_phase_diagram("alpha", [0.4, 0.6], "rho_over_alpha", [0.2, 0.5, 0.8, 0.95],
                            dict(delta=0.0, eta=0.0), resolution=1e-2)
    assert len(d.points) == 8
    rows = list(d.phase_csv_rows())
    assert rows[0] == phase.PHASE_CSV_HEADER and len(rows) == 9
    by_kind = {line.kind: dict(line.points) for line in d.lines}
    spin, first = by_kind[TransitionKind.SPINODAL], by_kind[TransitionKind.FIRST_ORDER]
    assert set(spin) == {0.4, 0.6}
    for alpha, crit in spin.items():
        assert crit <= first.get(alpha, 1.0)


def test_sweep_keeps_failed_points(monkeypatch):
    real = phase.classify

    def flaky(params, **kw):
        if params.rho > 0.3:
            raise NumericalError("synthetic failure")
        return real(params, **kw)

    monkeypatch.setattr(phase, "classify", flaky)
    d = sweep_phase_diagram("alpha", [0.5], "rho", [0.1, 0.35], dict(delta=1e-10, eta=1e-4),
                            workers=1)
    assert d.points[0].cls is PhaseClass.EASY
    assert d.points[1].cls is None and "synthetic" in d.points[1].error


def test_empty_grid():
    with pytest.raises(DomainError):
        sweep_phase_diagram("alpha", [], "rho", [0.1], FIXED)
