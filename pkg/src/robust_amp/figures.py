"""Figure-reproduction presets for the ``reproduce`` subcommand.

Each preset writes CSV files (and, on request, PNG renderings) into an output
directory together with ``manifest.json`` listing every run, its parameters,
files, status and wall-clock time.  Desk scale trades system size and grid
density for minutes-scale runtime.
"""
import json
import logging
import math
import os
import time
from contextlib import contextmanager

import numpy as np

from . import __version__
from .amp import AmpConfig, amp_run
from .errors import BracketError, RobustAmpError
from .instance import NoiseModel, generate
from .phase import find_transition, sweep_phase_diagram
from .prior import SignalPrior
from .replica import ReplicaParams, scan_potential
from .report import atomic_write, header_lines, write_csv
from .state_evolution import de_run

log = logging.getLogger(__name__)

FIGURES = ("fig1", "fig2", "fig3", "fig4")
SCALES = ("desk", "full")

# densities around the alpha = 0.5 spinodal (~0.317); 0.33 shows two maxima
FIG1_RHOS = (0.2, 0.25, 0.3, 0.33, 0.36, 0.4)
FIG2_RHOS = (0.1, 0.2, 0.3)
FIG4_ETAS = (1e-6, 1e-4, 1e-2)


class _Manifest:
    def __init__(self, figure, scale, out_dir):
        self.out_dir = out_dir
        self.data = {"figure": figure, "scale": scale, "version": __version__,
                     "runs": [], "status": "ok"}
        self._t0 = time.perf_counter()

    @contextmanager
    def run(self, name, **params):
        record = {"name": name, "params": params, "files": [], "status": "ok"}
        t0 = time.perf_counter()
        try:
            yield record
        except RobustAmpError as exc:
            log.error("%s failed: %s", name, exc)
            record["status"] = "failed"
            record["error"] = f"{type(exc).__name__}: {exc}"
            self.data["status"] = "partial"
        finally:
            record["seconds"] = round(time.perf_counter() - t0, 3)
            self.data["runs"].append(record)

    def path(self, record, filename):
        record["files"].append(filename)
        return os.path.join(self.out_dir, filename)

    def finish(self):
        self.data["total_seconds"] = round(time.perf_counter() - self._t0, 3)
        atomic_write(os.path.join(self.out_dir, "manifest.json"),
                     json.dumps(self.data, indent=2, default=float) + "\n")
        return self.data


def potential_trailer(curve):
    lines = ["maxima:"]
    for mx in curve.maxima:
        lines.append(f"maximum E={mx.e!r} phi={mx.phi!r} boundary={mx.boundary}")
    if curve.flat:
        lines.append("flat potential")
    return lines


def _fmt(x):
    return repr(float(x))


def _fig1(man, scale):
    n_points = 256 if scale == "desk" else 1024
    curves = []
    for rho in FIG1_RHOS:
        params = ReplicaParams(0.5, rho, 1e-10, 1e-4)
        with man.run(f"potential rho={rho}", **params.__dict__, n_points=n_points) as rec:
            curve = scan_potential(params, n_points=n_points)
            cfg = dict(params.__dict__, n_points=n_points)
            write_csv(man.path(rec, f"potential_rho{rho:g}.csv"), curve.to_csv_rows(),
                      header_lines("reproduce fig1", cfg), potential_trailer(curve))
            rec["maxima"] = [mx.e for mx in curve.maxima]
            curves.append((rho, curve))
    return {"potentials": curves}


def _fig2(man, scale):
    desk = scale == "desk"
    alpha, delta = 0.5, 1e-10
    etas = np.geomspace(1e-8, 1e-1, 8 if desk else 22)
    rows = []
    with man.run("bayes mse vs eta", alpha=alpha, delta=delta, rhos=FIG2_RHOS,
                 etas=etas.tolist()) as rec:
        for rho in FIG2_RHOS:
            for eta in etas:
                params = ReplicaParams(alpha, rho, delta, float(eta))
                curve = scan_potential(params)
                best = curve.global_max
                highest = max(curve.maxima, key=lambda mx: mx.e)
                trap = highest.e if highest is not best else math.nan
                de = de_run(params, max_iters=5000).fixed_point
                rows.append((rho, float(eta), best.e, trap, de))
        cfg = dict(alpha=alpha, delta=delta)
        write_csv(man.path(rec, "mse_vs_eta.csv"),
                  [("rho", "eta", "bayes_mse", "trap_mse", "de_fixed_point")]
                  + [tuple(map(_fmt, r)) for r in rows],
                  header_lines("reproduce fig2", cfg))

    n = 10_000 if desk else 20_000
    amp_etas = (1e-6, 1e-4, 1e-2) if desk else tuple(etas[::3])
    points = []
    with man.run("amp points", alpha=alpha, delta=delta, n=n, seed=0) as rec:
        for rho in FIG2_RHOS[:2]:
            prior = SignalPrior(rho)
            for eta in amp_etas:
                inst = generate(n, alpha, prior, NoiseModel(delta, float(eta)), seed=0,
                                keep_f0=False)
                report = amp_run(inst, prior, AmpConfig(max_iters=300), truth=inst.s)
                del inst
                points.append((rho, float(eta), report.final_mse))
        write_csv(man.path(rec, "amp_points.csv"),
                  [("rho", "eta", "n", "seed", "amp_mse")]
                  + [(_fmt(r), _fmt(e), str(n), "0", _fmt(m)) for r, e, m in points],
                  header_lines("reproduce fig2", dict(alpha=alpha, delta=delta, n=n, seed=0)))

    inset_etas = (1e-8, 1e-6, 1e-4, 1e-2) if desk else tuple(np.geomspace(1e-8, 1e-1, 8))
    lines = []
    with man.run("transitions vs eta", alpha=alpha, delta=delta) as rec:
        for eta in inset_etas:
            fixed = dict(alpha=alpha, delta=delta, eta=float(eta))
            for kind in ("spinodal", "first_order"):
                try:
                    crit = find_transition(kind, "rho", fixed, (0.05, 0.5))
                except BracketError:
                    crit = math.nan
                lines.append((float(eta), crit, kind))
        write_csv(man.path(rec, "transitions.csv"),
                  [("axis_value", "critical_value", "kind")]
                  + [(_fmt(e), _fmt(c), k) for e, c, k in lines],
                  header_lines("reproduce fig2", dict(alpha=alpha, delta=delta, axis="eta")))
    return {"mse_lines": [r[:4] for r in rows], "amp_points": points}


def _fig3(man, scale, workers=None):
    desk = scale == "desk"
    alphas = np.linspace(0.1, 0.9, 9) if desk else np.linspace(0.05, 1.0, 20)
    ratios = np.linspace(0.05, 0.95, 10) if desk else np.linspace(0.05, 1.0, 20)
    settings = {"noiseless": dict(delta=0.0, eta=0.0), "noisy": dict(delta=1e-4, eta=1e-6)}
    line_sets = {}
    for label, fixed in settings.items():
        with man.run(f"phase diagram {label}", **fixed, alphas=alphas.tolist(),
                     rho_over_alpha=ratios.tolist()) as rec:
            diagram = sweep_phase_diagram("alpha", alphas, "rho_over_alpha", ratios, fixed,
                                          workers=workers)
            cfg = dict(fixed, grid=f"alpha x rho_over_alpha {len(alphas)}x{len(ratios)}")
            comments = header_lines("reproduce fig3", cfg)
            write_csv(man.path(rec, f"phase_{label}.csv"), diagram.phase_csv_rows(), comments)
            write_csv(man.path(rec, f"lines_{label}.csv"), diagram.line_csv_rows(), comments)
            failed = [p for p in diagram.points if p.cls is None]
            if failed:
                rec["failed_points"] = len(failed)
            line_sets[label] = diagram.lines
    return {"line_sets": line_sets}


def _fig4(man, scale):
    desk = scale == "desk"
    n = 10_000 if desk else 25_000
    seeds = range(5) if desk else range(3)
    alpha, rho, delta = 0.5, 0.1, 1e-10
    prior = SignalPrior(rho)
    series = []
    for eta in FIG4_ETAS:
        params = ReplicaParams(alpha, rho, delta, eta)
        with man.run(f"trajectory eta={eta:g}", **params.__dict__, n=n,
                     seeds=list(seeds)) as rec:
            traj = de_run(params)
            runs = []
            for seed in seeds:
                inst = generate(n, alpha, prior, NoiseModel(delta, eta), seed=seed,
                                keep_f0=False)
                runs.append(amp_run(inst, prior, AmpConfig(max_iters=100), truth=inst.s))
                del inst
            t_max = max(len(traj.e_seq) - 1, max(r.iterations for r in runs))
            out = [("t", "de_E", "amp_mse", "amp_v_mean", "rel_gap")]
            amp_mean = []
            for t in range(t_max + 1):
                de_e = traj.e_seq[min(t, len(traj.e_seq) - 1)]
                # AMP rows start at t = 1; DE row 0 is the prior variance
                if t == 0:
                    amp_e = amp_v = math.nan
                else:
                    amp_e = float(np.mean([r.mse_per_iter[min(t, r.iterations) - 1] for r in runs]))
                    amp_v = float(np.mean([r.v_mean_per_iter[min(t, r.iterations) - 1]
                                           for r in runs]))
                    amp_mean.append(amp_e)
                out.append((str(t), _fmt(de_e), _fmt(amp_e), _fmt(amp_v),
                            _fmt(amp_e / de_e - 1.0)))
            cfg = dict(params.__dict__, n=n, seeds=",".join(map(str, seeds)))
            write_csv(man.path(rec, f"trajectory_eta{eta:g}.csv"), out,
                      header_lines("reproduce fig4", cfg))
            series.append((f"eta={eta:g}", traj.e_seq, amp_mean))
    return {"series": series}


def reproduce(figure: str, scale: str = "desk", out_dir: str = ".", plot: bool = False,
              workers=None) -> dict:
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {SCALES}")
    os.makedirs(out_dir, exist_ok=True)
    man = _Manifest(figure, scale, out_dir)
    if figure == "fig1":
        data = _fig1(man, scale)
    elif figure == "fig2":
        data = _fig2(man, scale)
    elif figure == "fig3":
        data = _fig3(man, scale, workers)
    else:
        data = _fig4(man, scale)

    if plot:
        from . import plotting

        with man.run("render figure") as rec:
            target = man.path(rec, f"{figure}.png")
            if figure == "fig1":
                plotting.plot_potentials(data["potentials"], target)
            elif figure == "fig2":
                plotting.plot_mse_vs_eta(data["mse_lines"], data["amp_points"], target)
            elif figure == "fig3":
                plotting.plot_phase_diagram(data["line_sets"], target)
            else:
                plotting.plot_trajectories(data["series"], target)
    return man.finish()
