"""Phase classification and transition-line search.

A parameter point is

* ``easy``       - density evolution from ``E = rho`` reaches the global maximum;
* ``hard``       - the global maximum is the low-error one but DE stops at a
                   higher-error local maximum (AMP is trapped);
* ``impossible`` - the global maximum itself sits on the high-error branch;
* ``degenerate`` - the potential is flat (``D = 1``).

The spinodal separates ``easy`` from the rest, the first-order line separates
``easy``/``hard`` from ``impossible``.
"""
import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import AmbiguousTransitionError, BracketError, DomainError, RobustAmpError
from .replica import ReplicaParams, scan_potential
from .state_evolution import de_run

log = logging.getLogger(__name__)

AXES = ("alpha", "rho", "delta", "eta", "rho_over_alpha")


class PhaseClass(str, enum.Enum):
    EASY = "easy"
    HARD = "hard"
    IMPOSSIBLE = "impossible"
    DEGENERATE = "degenerate"


class TransitionKind(str, enum.Enum):
    SPINODAL = "spinodal"
    FIRST_ORDER = "first_order"

    def below(self, cls: PhaseClass) -> bool:
        """True when ``cls`` lies on the good (low-density) side of this line."""
        if self is TransitionKind.SPINODAL:
            return cls is PhaseClass.EASY
        return cls in (PhaseClass.EASY, PhaseClass.HARD)


@dataclass
class PhasePoint:
    params: ReplicaParams
    cls: Optional[PhaseClass]
    bayes_mse: float = float("nan")
    amp_mse_predicted: float = float("nan")
    n_maxima: int = 0
    error: Optional[str] = None

    def csv_row(self):
        p = self.params
        return (repr(p.alpha), repr(p.rho), repr(p.delta), repr(p.eta),
                self.cls.value if self.cls else "error",
                repr(float(self.bayes_mse)), repr(float(self.amp_mse_predicted)))


PHASE_CSV_HEADER = ("alpha", "rho", "delta", "eta", "class", "bayes_mse", "amp_mse")
LINE_CSV_HEADER = ("axis_value", "critical_value", "kind")


@dataclass
class TransitionLine:
    kind: TransitionKind
    sweep_axis: str
    column_axis: str
    fixed: Dict[str, float]
    points: List[Tuple[float, float]] = field(default_factory=list)

    def csv_rows(self):
        for x, crit in self.points:
            yield (repr(float(x)), repr(float(crit)), self.kind.value)


def low_error_threshold(params: ReplicaParams) -> float:
    """Errors below this count as the low-MSE branch."""
    return 100.0 * max(params.delta, params.D * params.rho, 1e-10)


def classify(params: ReplicaParams, de_max_iters: int = 5000, de_tol: float = 1e-10,
             **scan_kw) -> PhasePoint:
    if params.degenerate:
        return PhasePoint(params, PhaseClass.DEGENERATE, params.rho, params.rho)
    try:
        curve = scan_potential(params, **scan_kw)
        if curve.flat:
            return PhasePoint(params, PhaseClass.DEGENERATE, params.rho, params.rho)
        best = curve.global_max
        amp = de_run(params, max_iters=de_max_iters, tol=de_tol).fixed_point
    except RobustAmpError as exc:
        raise type(exc)(f"{exc} [at {params}]") from exc

    threshold = low_error_threshold(params)
    lowest = min(curve.maxima, key=lambda mx: mx.e)
    global_is_low = best.e < threshold or (len(curve.maxima) > 1 and best is lowest)
    if not global_is_low:
        cls = PhaseClass.IMPOSSIBLE
    elif amp <= max(threshold, 2.0 * best.e):
        cls = PhaseClass.EASY
    else:
        cls = PhaseClass.HARD
    return PhasePoint(params, cls, best.e, amp, len(curve.maxima))


def params_along(axis: str, value: float, fixed) -> ReplicaParams:
    """Build parameters with ``axis`` set to ``value`` and the rest from ``fixed``."""
    if axis not in AXES:
        raise DomainError(f"unknown axis {axis!r}; expected one of {AXES}")
    values = dict(fixed.__dict__ if isinstance(fixed, ReplicaParams) else fixed)
    values[axis] = value
    if "rho_over_alpha" in values:
        values["rho"] = values.pop("rho_over_alpha") * values["alpha"]
    return ReplicaParams(**{k: float(values[k]) for k in ("alpha", "rho", "delta", "eta")})


def _is_below(kind, axis, value, fixed, classify_kw):
    return kind.below(classify(params_along(axis, value, fixed), **classify_kw).cls)


def find_transition(kind, sweep_axis: str, fixed, bracket: Tuple[float, float],
                    resolution: float = 1e-3, prescan: int = 4, **classify_kw) -> float:
    """Bisect ``sweep_axis`` for the ``kind`` transition inside ``bracket``.

    ``resolution`` is relative to the bracket midpoint.  A coarse prescan
    with ``prescan`` interior points guards against a classification that
    flips more than once.
    """
    kind = TransitionKind(kind)
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError(f"empty bracket {bracket}")
    xs = np.linspace(lo, hi, prescan + 2)
    flags = [_is_below(kind, sweep_axis, x, fixed, classify_kw) for x in xs]
    if flags[0] == flags[-1]:
        raise BracketError(
            f"{kind.value}: both ends of {sweep_axis} in [{lo}, {hi}] are on the same side")
    switches = [i for i in range(len(flags) - 1) if flags[i] != flags[i + 1]]
    if len(switches) > 1:
        raise AmbiguousTransitionError(
            f"{kind.value}: classification along {sweep_axis} switches {len(switches)} times",
            scan=list(zip(xs.tolist(), flags)))
    i = switches[0]
    lo, hi = xs[i], xs[i + 1]
    lo_flag = flags[i]
    while hi - lo > resolution * abs(0.5 * (lo + hi)):
        mid = 0.5 * (lo + hi)
        if _is_below(kind, sweep_axis, mid, fixed, classify_kw) == lo_flag:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class PhaseDiagram:
    points: List[PhasePoint]
    lines: List[TransitionLine]

    def phase_csv_rows(self):
        yield PHASE_CSV_HEADER
        for pt in self.points:
            yield pt.csv_row()

    def line_csv_rows(self):
        yield LINE_CSV_HEADER
        for line in self.lines:
            yield from line.csv_rows()


def _classify_safe(args):
    params, classify_kw = args
    try:
        return classify(params, **classify_kw)
    except RobustAmpError as exc:
        return PhasePoint(params, None, error=str(exc))


def default_workers() -> int:
    return max(1, int(os.environ.get("AMPU_THREADS", "1")))


def sweep_phase_diagram(column_axis: str, column_values: Sequence[float],
                        sweep_axis: str, sweep_values: Sequence[float], fixed,
                        resolution: float = 1e-3, workers: Optional[int] = None,
                        kinds=(TransitionKind.SPINODAL, TransitionKind.FIRST_ORDER),
                        **classify_kw) -> PhaseDiagram:
    """Classify a grid and refine both transition lines column by column.

    Points are ordered column-major (all ``sweep_values`` for the first column
    value, then the next).  A failed point is kept with ``cls=None`` and the
    error message; the sweep continues.
    """
    column_values = list(column_values)
    sweep_values = sorted(sweep_values)
    if not column_values or not sweep_values:
        raise DomainError("phase grid is empty")
    if isinstance(fixed, ReplicaParams):
        fixed = dict(fixed.__dict__)
    fixed = {k: v for k, v in fixed.items() if k not in (column_axis, sweep_axis)}

    jobs = []
    for x in column_values:
        for yv in sweep_values:
            values = dict(fixed, **{column_axis: x})
            jobs.append((params_along(sweep_axis, yv, values), classify_kw))
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            points = list(pool.map(_classify_safe, jobs))
    else:
        points = [_classify_safe(job) for job in jobs]

    lines = [TransitionLine(TransitionKind(k), sweep_axis, column_axis, dict(fixed))
             for k in kinds]
    ny = len(sweep_values)
    for ci, x in enumerate(column_values):
        column = points[ci * ny:(ci + 1) * ny]
        values = dict(fixed, **{column_axis: x})
        for line in lines:
            flags = [None if p.cls is None else line.kind.below(p.cls) for p in column]
            switches = [j for j in range(ny - 1)
                        if flags[j] is not None and flags[j + 1] is not None
                        and flags[j] != flags[j + 1]]
            if not switches:
                continue
            if len(switches) > 1:
                log.warning("%s line at %s=%g: %d class switches, using the first",
                            line.kind.value, column_axis, x, len(switches))
            j = switches[0]
            try:
                crit = find_transition(line.kind, sweep_axis, values,
                                       (sweep_values[j], sweep_values[j + 1]),
                                       resolution=resolution, prescan=0, **classify_kw)
            except RobustAmpError as exc:
                log.warning("%s line at %s=%g failed: %s", line.kind.value, column_axis, x, exc)
                continue
            line.points.append((x, crit))
    return PhaseDiagram(points, lines)
