"""``qst-channel`` command line: simulations, poles, predictions, sweeps.

Every subcommand writes CSV (UTF-8, ``\\n`` line endings, header row,
floats with 17 significant digits). Output files are written to a
temporary file next to the target and renamed on success.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
failure, 4 tolerance exceeded (``compare`` only).
"""
from __future__ import annotations

import argparse
import io
import itertools
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dynamics import SingleExcitationState, evolve
from .errors import NumericalError, ParameterError, QSTChannelError, RegimeError
from .model import ModelParams
from .regimes import RabiPrediction, ResonantPrediction, StrongPrediction, Thresholds, \
    classify_regime, natural_window, predict_strong, predict_weak_offres, \
    predict_weak_resonant, predictor_for, transfer_metrics
from .spectral import find_poles

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_TOLERANCE = 4

FIG1 = ModelParams(n_modes=30, distance=6, coupling=0.05, impurity_energy=1.5)
FIG2 = ModelParams(n_modes=16, distance=8, coupling=0.01, impurity_energy=0.0)
FIG3 = ModelParams(n_modes=50, distance=4, coupling=10.0, impurity_energy=0.0)

_DEFAULTS = {
    "n": 16, "l": 8, "g": 0.01, "omega": 0.0,
    "t_start": 0.0, "t_end": None, "samples": 2001, "times": None,
    "tolerance": 0.05, "jobs": 1, "initial": "A", "l_ratio": None,
    "sweep_n": None, "sweep_l": None, "sweep_g": None, "sweep_omega": None,
}
_KEYS = set(_DEFAULTS)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        write_atomic(Path(out), text)


# --------------------------------------------------------------------------
# configuration

def parse_config_file(path: str) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in _KEYS:
            raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_axis(spec: str, integer: bool) -> list:
    """Parse ``a:b:step`` (inclusive of ``b``) or a comma-separated list."""
    cast = int if integer else float
    spec = str(spec).strip()
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step <= 0 or stop < start:
                raise ParameterError(f"sweep range {spec!r} needs step > 0 and b >= a")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise ParameterError(f"cannot parse sweep axis {spec!r}") from exc
    if not values or not all(math.isfinite(v) for v in values):
        raise ParameterError(f"sweep axis {spec!r} must be non-empty and finite")
    if integer:
        if any(abs(v - round(v)) > 1e-9 for v in values):
            raise ParameterError(f"sweep axis {spec!r} must contain integers")
        return [int(round(v)) for v in values]
    return [cast(v) for v in values]


@dataclass
class RunConfig:
    params: ModelParams
    t_start: float = 0.0
    t_end: Optional[float] = None
    samples: int = 2001
    times: Optional[np.ndarray] = None
    out: Optional[str] = None
    tolerance: float = 0.05
    jobs: int = 1
    initial: str = "A"
    l_ratio: Optional[float] = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    sweep: dict = field(default_factory=dict)

    def time_grid(self, params: Optional[ModelParams] = None) -> np.ndarray:
        if self.times is not None:
            return self.times
        end = self.t_end
        if end is None:
            end = self.t_start + natural_window(params or self.params, self.thresholds)
        return np.linspace(self.t_start, end, self.samples)


def _number(raw, name, cast):
    try:
        value = cast(raw)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{name} must be a {cast.__name__}, got {raw!r}") from exc
    if cast is float and not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {raw!r}")
    return value


def build_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and explicit flags."""
    merged = dict(_DEFAULTS)
    if ns.config:
        merged.update(parse_config_file(ns.config))
    for key in _KEYS:
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = value

    n = _number(merged["n"], "--n", int)
    dist = _number(merged["l"], "--l", int)
    l_ratio = None if merged["l_ratio"] is None else _number(merged["l_ratio"], "--l-ratio", float)
    if l_ratio is not None:
        dist = _ratio_distance(n, l_ratio)
    params = ModelParams(n, dist, _number(merged["g"], "--g", float),
                         _number(merged["omega"], "--omega", float))

    t_start = _number(merged["t_start"], "--t-start", float)
    t_end = None if merged["t_end"] is None else _number(merged["t_end"], "--t-end", float)
    samples = _number(merged["samples"], "--samples", int)
    if samples < 2:
        raise ParameterError("--samples must be >= 2")
    if t_start < 0:
        raise ParameterError("--t-start must be >= 0")
    if t_end is not None and not t_end > t_start:
        raise ParameterError("--t-end must exceed --t-start")
    times = None
    if merged["times"] is not None:
        times = np.array(parse_axis(merged["times"], integer=False))
        if np.any(np.diff(times) < 0) or times[0] < 0:
            raise ParameterError("--times must be ascending and non-negative")

    tolerance = _number(merged["tolerance"], "--tolerance", float)
    if tolerance < 0:
        raise ParameterError("--tolerance must be >= 0")
    jobs = _number(merged["jobs"], "--jobs", int)
    if jobs < 1:
        raise ParameterError("--jobs must be >= 1")
    initial = str(merged["initial"]).upper()
    if initial not in ("A", "B"):
        raise ParameterError("--initial must be A or B")

    sweep = {}
    for axis, integer in (("n", True), ("l", True), ("g", False), ("omega", False)):
        raw = merged[f"sweep_{axis}"]
        if raw is not None:
            sweep[axis] = parse_axis(raw, integer)

    return RunConfig(params=params, t_start=t_start, t_end=t_end, samples=samples,
                     times=times, out=getattr(ns, "out", None), tolerance=tolerance,
                     jobs=jobs, initial=initial, l_ratio=l_ratio,
                     thresholds=Thresholds.from_env(), sweep=sweep)


def _ratio_distance(n: int, ratio: float) -> int:
    dist = n * ratio
    if abs(dist - round(dist)) > 1e-9:
        raise ParameterError(f"--l-ratio {ratio} gives non-integer L for N={n}")
    return int(round(dist))


# --------------------------------------------------------------------------
# subcommands

def _simulate(params: ModelParams, times: np.ndarray, initial: str = "A"):
    state = SingleExcitationState.on_site(initial, params.n_modes)
    return evolve(params, state, times)


def cmd_simulate(cfg: RunConfig) -> str:
    traj = _simulate(cfg.params, cfg.time_grid(), cfg.initial)
    rows = zip(traj.times, traj.p_a, traj.p_b, traj.p_chan)
    return render_csv(("t", "p_a", "p_b", "p_chan"), rows)


def cmd_poles(cfg: RunConfig) -> str:
    poles = find_poles(cfg.params)
    rows = ((p.omega, p.parity, p.residue_weight) for p in poles)
    return render_csv(("omega", "parity", "residue_weight"), rows)


PREDICT_HEADER = (
    "n", "l", "g", "omega", "regime", "g_sqrt_n", "band_offset", "resonance_offset",
    "omega_plus", "omega_minus", "omega_plus_continuum", "omega_minus_continuum",
    "gamma_big", "delta_1_minus", "delta_1_plus", "delta_2_minus", "delta_2_plus",
    "regime_flag", "transfer_time", "fast_freq", "slow_freq",
)


def predict_row(params: ModelParams, thresholds: Thresholds) -> list:
    report = classify_regime(params, thresholds)
    pred = predictor_for(params, report, thresholds)
    cols = dict.fromkeys(PREDICT_HEADER)
    cols.update(n=params.n_modes, l=params.distance, g=params.coupling,
                omega=params.impurity_energy, regime=report.regime,
                g_sqrt_n=report.g_sqrt_n, band_offset=report.band_offset,
                resonance_offset=report.resonance_offset)
    if isinstance(pred, RabiPrediction):
        cols.update(pred._asdict())
    elif isinstance(pred, ResonantPrediction):
        d1m, d1p, d2m, d2p = pred.delta_roots
        cols.update(gamma_big=pred.gamma_big, delta_1_minus=d1m, delta_1_plus=d1p,
                    delta_2_minus=d2m, delta_2_plus=d2p, regime_flag=pred.regime_flag,
                    transfer_time=pred.transfer_time)
    elif isinstance(pred, StrongPrediction):
        cols.update(pred._asdict())
    return [cols[k] for k in PREDICT_HEADER]


def cmd_predict(cfg: RunConfig) -> str:
    return render_csv(PREDICT_HEADER, [predict_row(cfg.params, cfg.thresholds)])


def applicable_prediction(params: ModelParams, thresholds: Thresholds):
    report = classify_regime(params, thresholds)
    pred = predictor_for(params, report, thresholds)
    if pred is None:
        raise RegimeError(
            f"no closed-form predictor applies to regime {report.regime} "
            f"(Omega in band and off every channel mode)")
    return pred


COMPARE_HEADER = ("t", "p_a_num", "p_b_num", "p_a_th", "p_b_th", "deviation")


def cmd_compare(cfg: RunConfig) -> tuple[str, float]:
    """CSV of numeric vs analytic curves and the largest deviation.

    The per-sample deviation is ``max(|ΔP_A|, |ΔP_B|)``.
    """
    if cfg.initial != "A":
        raise ParameterError("compare predicts an excitation starting on A")
    pred = applicable_prediction(cfg.params, cfg.thresholds)
    times = cfg.time_grid()
    traj = _simulate(cfg.params, times)
    pa, pb = pred.p_a(times), pred.p_b(times)
    dev = np.maximum(np.abs(traj.p_a - pa), np.abs(traj.p_b - pb))
    rows = zip(times, traj.p_a, traj.p_b, pa, pb, dev)
    return render_csv(COMPARE_HEADER, rows), float(dev.max())


SWEEP_HEADER = ("n", "l", "g", "omega", "regime", "max_p_b", "t_at_max")


def sweep_points(cfg: RunConfig) -> list:
    base = cfg.params
    axes = [cfg.sweep.get("n", [base.n_modes]), cfg.sweep.get("l", [base.distance]),
            cfg.sweep.get("g", [base.coupling]), cfg.sweep.get("omega", [base.impurity_energy])]
    points = []
    for n, dist, g, omega in itertools.product(*axes):
        if cfg.l_ratio is not None:
            dist = _ratio_distance(n, cfg.l_ratio)
        points.append(ModelParams(n, dist, g, omega))
    return points


def _sweep_point(args):
    params, cfg = args
    report = classify_regime(params, cfg.thresholds)
    traj = _simulate(params, cfg.time_grid(params), cfg.initial)
    metrics = transfer_metrics(traj)
    return (params.n_modes, params.distance, params.coupling, params.impurity_energy,
            report.regime, metrics.max_p_b, metrics.t_at_max)


def cmd_sweep(cfg: RunConfig) -> str:
    points = sweep_points(cfg)
    tasks = [(p, cfg) for p in points]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return render_csv(SWEEP_HEADER, rows)


FIGURE_HEADER = ("t", "p_a_num", "p_b_num", "p_a_th", "p_b_th")


def figure_tables(samples: int = 2001) -> dict:
    """Numeric and analytic curves for the three reference parameter sets.

    ``fig1``: raw time over one Rabi period. ``fig2``: time in units of
    ``1/ω`` with ``ω = √2 g/√N`` over ``[0, 2t*]``. ``fig3``: time in units
    of ``1/ω`` with ``ω = g/(2(2g)^L)``; a grid over one transfer cycle
    merged with a dense window resolving the fast oscillation at the
    transfer midpoint.
    """
    tables = {}

    rabi = predict_weak_offres(FIG1)
    t1 = np.linspace(0.0, rabi.period, samples)
    tr1 = _simulate(FIG1, t1)
    tables["fig1.csv"] = zip(t1, tr1.p_a, tr1.p_b, rabi.p_a(t1), rabi.p_b(t1))

    res = predict_weak_resonant(FIG2)
    t2 = np.linspace(0.0, 2.0 * res.transfer_time, samples)
    tr2 = _simulate(FIG2, t2)
    unit2 = math.sqrt(2.0) * FIG2.coupling / math.sqrt(FIG2.n_modes)
    tables["fig2.csv"] = zip(unit2 * t2, tr2.p_a, tr2.p_b, res.p_a(t2), res.p_b(t2))

    strong = predict_strong(FIG3)
    slow = np.linspace(0.0, math.pi / strong.slow_freq, samples)
    center = 0.5 * math.pi / strong.slow_freq
    fast_period = 2.0 * math.pi / strong.fast_freq
    fast = np.linspace(center - 2 * fast_period, center + 2 * fast_period, 401)
    t3 = np.union1d(slow, fast)
    tr3 = _simulate(FIG3, t3)
    tables["fig3.csv"] = zip(strong.slow_freq * t3, tr3.p_a, tr3.p_b,
                             strong.p_a(t3), strong.p_b(t3))
    return {name: render_csv(FIGURE_HEADER, rows) for name, rows in tables.items()}


def cmd_figures(cfg: RunConfig) -> list:
    outdir = Path(cfg.out or ".")
    if outdir.exists() and not outdir.is_dir():
        raise ParameterError(f"--out {outdir} must be a directory for 'figures'")
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in figure_tables(cfg.samples).items():
        write_atomic(outdir / name, text)
        written.append(outdir / name)
    return written


# --------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="number of channel modes N")
    common.add_argument("--l", type=int, help="impurity separation L (0 <= L <= N)")
    common.add_argument("--l-ratio", dest="l_ratio", type=float,
                        help="set L = ratio * N (applied per sweep point)")
    common.add_argument("--g", type=float, help="coupling g")
    common.add_argument("--omega", type=float, help="impurity energy")
    common.add_argument("--t-start", dest="t_start", type=float)
    common.add_argument("--t-end", dest="t_end", type=float,
                        help="end of the time grid (default: one transfer cycle)")
    common.add_argument("--samples", type=int)
    common.add_argument("--times", help="explicit comma-separated time list")
    common.add_argument("--initial", help="impurity holding the excitation at t=0 (A or B)")
    common.add_argument("--out", help="output file ('figures': output directory)")
    common.add_argument("--config", help="flat 'key = value' file; flags override it")
    common.add_argument("--tolerance", type=float, help="compare: allowed max deviation")
    common.add_argument("--jobs", type=int, help="sweep: worker processes")
    for axis in ("n", "l", "g", "omega"):
        common.add_argument(f"--sweep-{axis}", dest=f"sweep_{axis}",
                            help="a:b:step (inclusive) or comma list")

    parser = argparse.ArgumentParser(
        prog="qst-channel",
        description="Quantum state transfer through an N-mode channel (two-impurity "
                    "Fano-Anderson model).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("simulate", "exact P_A, P_B, P_chan on a time grid"),
            ("poles", "real roots of D+ and D- with residue weights"),
            ("predict", "regime and closed-form frequencies"),
            ("compare", "simulation vs closed-form prediction"),
            ("sweep", "Cartesian parameter sweep of transfer metrics"),
            ("figures", "fig1.csv, fig2.csv, fig3.csv reference datasets")):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    ns = parser.parse_args(argv)
    try:
        cfg = build_config(ns)
        if ns.command == "simulate":
            emit(cmd_simulate(cfg), cfg.out)
        elif ns.command == "poles":
            emit(cmd_poles(cfg), cfg.out)
        elif ns.command == "predict":
            emit(cmd_predict(cfg), cfg.out)
        elif ns.command == "sweep":
            emit(cmd_sweep(cfg), cfg.out)
        elif ns.command == "figures":
            for path in cmd_figures(cfg):
                print(path)
        elif ns.command == "compare":
            text, worst = cmd_compare(cfg)
            emit(text, cfg.out)
            summary = sys.stdout if cfg.out not in (None, "-") else sys.stderr
            print(f"max_abs_deviation={fmt(worst)}", file=summary)
            if not worst < cfg.tolerance:
                print(f"error: deviation {fmt(worst)} exceeds tolerance {fmt(cfg.tolerance)}",
                      file=sys.stderr)
                return EXIT_TOLERANCE
    except (ParameterError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QSTChannelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
