"""Flat key-value scenario configs, parameter sweeps and CSV emission.

Config syntax, one ``key = value`` per line, ``#`` starts a comment::

    tasks = pu_upper, pu_exact
    pu.gbar_db = 25          # both PU nodes
    pu.2.ibar_s_db = 8       # node 2 only, overrides the shared key
    design.cx = 0.5
    sweep.1.params = pu.gbar_db
    sweep.1.start = 10
    sweep.1.stop = 40
    sweep.1.step = 2
    sweep.2.params = pu.1.ibar_s_db, pu.2.ibar_s_db
    sweep.2.values = [[0, 4], [4, 8], [13, 13]]

Keys ending in ``_db`` are mean CNRs in dB and are converted to linear once,
when a scenario is built. Axis 1 is the outermost loop of a sweep.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .design import design_improper, design_proper
from .errors import DomainError, NumericError, NumericWarning
from .montecarlo import McConfig, estimate_pu_outage, estimate_su_outage
from .outage import pu_outage_exact, pu_outage_proper, pu_outage_upper, su_outage
from .params import SystemParams, db_to_linear
from .rates import SignalDesign

TASKS = (
    "su_closed",
    "pu_proper",
    "pu_upper",
    "pu_exact",
    "pu_mc",
    "su_mc",
    "design_proper",
    "design_improper",
)
POINT_TASKS = {"su_closed", "pu_proper", "pu_upper", "pu_exact", "pu_mc", "su_mc"}
MC_TASKS = {"pu_mc", "su_mc"}

# scenario key -> (SystemParams field, True if per-node)
SCENARIO_KEYS = {
    "pu.p_w": ("p", True),
    "pu.gbar_db": ("gbar_p", True),
    "pu.ibar_p_db": ("ibar_p", True),
    "pu.ibar_s_db": ("ibar_s", True),
    "pu.vbar_db": ("vbar_p", True),
    "pu.r0": ("r0_p", True),
    "pu.o_p": ("o_p", True),
    "su.gbar_db": ("gbar_s", False),
    "su.r0": ("r0_s", False),
    "su.ps_max_w": ("ps_max", False),
}
DESIGN_KEYS = ("design.ps_w", "design.cx")
RUN_KEYS = ("tasks", "quadrature.order", "mc.samples", "mc.seed", "mc.streams")
AXIS_FIELDS = ("params", "values", "start", "stop", "step")
DEFAULT_ORDER = 64


class ConfigError(ValueError):
    """A config document is malformed or out of range."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


def _node_key(base: str, node: int) -> str:
    group, name = base.split(".", 1)
    return f"{group}.{node}.{name}"


def _settable_keys():
    keys = set(DESIGN_KEYS)
    for base, (_, per_node) in SCENARIO_KEYS.items():
        keys.add(base)
        if per_node:
            keys.update(_node_key(base, n) for n in (1, 2))
    return keys


SETTABLE_KEYS = frozenset(_settable_keys())


def _base_key(key: str) -> str:
    parts = key.split(".")
    if len(parts) == 3 and parts[1] in ("1", "2"):
        return f"{parts[0]}.{parts[2]}"
    return key


def is_db_key(key: str) -> bool:
    return key.endswith("_db")


@dataclass(frozen=True)
class Axis:
    params: tuple
    values: tuple  # one tuple per point, aligned with params, in config units


@dataclass(frozen=True)
class SweepSpec:
    scenario: SystemParams
    design: SignalDesign | None
    tasks: tuple
    axes: tuple = ()
    mc: McConfig | None = None
    quadrature_order: int = DEFAULT_ORDER
    settings: dict = field(default_factory=dict)  # settable keys, config units


@dataclass(frozen=True)
class SweepResult:
    header: tuple
    rows: tuple

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.header):
                raise ValueError("ragged sweep result")


# --- parsing ---------------------------------------------------------------------


def _parse_value(raw: str, key: str, line: int):
    if raw == "":
        raise ConfigError("empty value", key, line)
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if raw.startswith("["):
        raise ConfigError(f"malformed list {raw!r}", key, line)
    return raw


def _tokenize(text: str) -> dict:
    entries = {}
    for n, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=n)
        key, raw = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("missing key", line=n)
        if key in entries:
            raise ConfigError("duplicate key", key, n)
        entries[key] = (_parse_value(raw, key, n), n)
    return entries


def _number(value, key, line, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", key, line)
    bad_lo = value <= lo if lo_open else value < lo
    bad_hi = value >= hi if hi_open else value > hi
    if bad_lo or bad_hi:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ConfigError(f"value {value!r} out of range {lb}{lo}, {hi}{rb}", key, line)
    return float(value)


def check_setting(key: str, value, line=None) -> float:
    """Range-check one settable key in config units."""
    base = _base_key(key)
    if is_db_key(base):
        return _number(value, key, line)
    if base == "pu.o_p":
        return _number(value, key, line, 0.0, 1.0, hi_open=True)
    if base in ("pu.r0", "su.r0"):
        return _number(value, key, line, 0.0)
    if base in ("pu.p_w", "su.ps_max_w"):
        return _number(value, key, line, 0.0, lo_open=True)
    if base == "design.ps_w":
        return _number(value, key, line, 0.0)
    if base == "design.cx":
        return _number(value, key, line, 0.0, 1.0)
    raise ConfigError("unknown key", key, line)


def _int_entry(entries, key, lo, hi=None, default=None):
    if key not in entries:
        return default
    value, line = entries[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < lo or (hi is not None and value > hi):
        bound = f"in [{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ConfigError(f"expected an integer {bound}, got {value!r}", key, line)
    return value


def _names(value, key, line) -> tuple:
    if isinstance(value, str):
        items = [s.strip() for s in value.split(",")]
    elif isinstance(value, list) and all(isinstance(s, str) for s in value):
        items = [s.strip() for s in value]
    else:
        raise ConfigError(f"expected a comma-separated list of names, got {value!r}", key, line)
    if not items or any(not s for s in items):
        raise ConfigError("empty name in list", key, line)
    return tuple(items)


def build_scenario(settings: dict) -> SystemParams:
    """Build a :class:`SystemParams` from settable keys (dB converted here)."""
    kwargs = {}
    for base, (name, per_node) in SCENARIO_KEYS.items():
        conv = db_to_linear if is_db_key(base) else float
        if per_node:
            pair = []
            for n in (1, 2):
                v = settings.get(_node_key(base, n), settings.get(base))
                pair.append(None if v is None else conv(v))
            kwargs[name] = tuple(pair)
        else:
            v = settings.get(base)
            kwargs[name] = None if v is None else conv(v)
    return SystemParams(**kwargs)


def _missing_scenario_keys(settings: dict) -> list:
    missing = []
    for base, (_, per_node) in SCENARIO_KEYS.items():
        if base in settings:
            continue
        if per_node:
            nodes = [_node_key(base, n) for n in (1, 2) if _node_key(base, n) not in settings]
            if nodes:
                missing.append(base if len(nodes) == 2 else nodes[0])
        else:
            missing.append(base)
    return missing


def _parse_axes(entries: dict) -> tuple:
    groups = {}
    for key, (value, line) in entries.items():
        parts = key.split(".")
        if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in AXIS_FIELDS:
            raise ConfigError("unknown key", key, line)
        groups.setdefault(int(parts[1]), {})[parts[2]] = (value, line, key)
    axes = []
    for idx in sorted(groups):
        g = groups[idx]
        head = f"sweep.{idx}.params"
        if "params" not in g:
            raise ConfigError("sweep axis needs a params key", head)
        value, line, key = g["params"]
        names = _names(value, key, line)
        for nm in names:
            if nm not in SETTABLE_KEYS:
                raise ConfigError(f"sweep parameter {nm!r} is not a scenario or design key", key, line)
        if "values" in g:
            if any(f in g for f in ("start", "stop", "step")):
                raise ConfigError("use either values or start/stop/step", f"sweep.{idx}.values", g["values"][1])
            value, line, key = g["values"]
            if not isinstance(value, list) or not value:
                raise ConfigError("values must be a non-empty list", key, line)
            points = []
            for item in value:
                tup = tuple(item) if isinstance(item, list) else (item,)
                if len(tup) != len(names):
                    raise ConfigError(f"each value needs {len(names)} entries, got {item!r}", key, line)
                points.append(tuple(check_setting(nm, v, line) for nm, v in zip(names, tup)))
            points.sort()
        else:
            for f in ("start", "stop", "step"):
                if f not in g:
                    raise ConfigError("missing range field", f"sweep.{idx}.{f}")
            start, stop, step = (_number(g[f][0], g[f][2], g[f][1]) for f in ("start", "stop", "step"))
            if step <= 0:
                raise ConfigError("step must be > 0", g["step"][2], g["step"][1])
            if stop < start:
                raise ConfigError("stop must be >= start", g["stop"][2], g["stop"][1])
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            line = g["start"][1]
            points = [
                tuple(check_setting(nm, start + k * step, line) for nm in names) for k in range(count)
            ]
        axes.append(Axis(names, tuple(points)))
    return tuple(axes)


def parse_config(text: str, default_tasks=None) -> SweepSpec:
    """Parse and validate a config document into a :class:`SweepSpec`."""
    entries = _tokenize(text)
    settings = {}
    sweep_entries = {}
    for key, (value, line) in entries.items():
        if key in SETTABLE_KEYS:
            settings[key] = check_setting(key, value, line)
        elif key.startswith("sweep."):
            sweep_entries[key] = (value, line)
        elif key not in RUN_KEYS:
            raise ConfigError("unknown key", key, line)

    if "tasks" in entries:
        value, line = entries["tasks"]
        tasks = _names(value, "tasks", line)
        for t in tasks:
            if t not in TASKS:
                raise ConfigError(f"unknown task {t!r}", "tasks", line)
        tasks = tuple(t for t in TASKS if t in tasks)
    elif default_tasks is not None:
        tasks = tuple(default_tasks)
    else:
        tasks = None

    axes = _parse_axes(sweep_entries)
    spec = SweepSpec(None, None, tasks or (), axes, None, DEFAULT_ORDER, settings)
    first = _point_settings(spec, tuple(ax.values[0] for ax in axes))
    missing = _missing_scenario_keys(first)
    if tasks is None:
        missing.append("tasks")
    elif POINT_TASKS & set(tasks):
        missing += [k for k in DESIGN_KEYS[:1] if k not in first]
    if MC_TASKS & set(tasks or ()) and "mc.samples" not in entries:
        missing.append("mc.samples")
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    mc = None
    if "mc.samples" in entries:
        mc = McConfig(
            _int_entry(entries, "mc.samples", 1),
            _int_entry(entries, "mc.seed", 0, 2**64 - 1, default=0),
            _int_entry(entries, "mc.streams", 1, default=1),
        )
    order = _int_entry(entries, "quadrature.order", 8, default=DEFAULT_ORDER)

    # the first sweep point must form a valid scenario
    try:
        scenario = build_scenario(first)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    design = None
    if "design.ps_w" in first:
        design = SignalDesign(first["design.ps_w"], first.get("design.cx", 0.0))
    return SweepSpec(scenario, design, tasks, axes, mc, order, settings)


def with_overrides(spec: SweepSpec, seed=None, samples=None, quadrature_order=None) -> SweepSpec:
    mc = spec.mc
    if seed is not None or samples is not None:
        mc = mc or McConfig(samples or 1, 0, 1)
        mc = replace(
            mc,
            seed=mc.seed if seed is None else seed,
            samples=mc.samples if samples is None else samples,
        )
    order = spec.quadrature_order if quadrature_order is None else quadrature_order
    if order < 8:
        raise ConfigError("quadrature order must be >= 8", "quadrature.order")
    return replace(spec, mc=mc, quadrature_order=order)


# --- sweeping ------------------------------------------------------------------


def _task_columns(task: str) -> list:
    if task == "su_closed":
        return ["su_outage"]
    if task in ("pu_proper", "pu_upper", "pu_exact"):
        return [f"pu{k}_{task[3:]}" for k in (1, 2)]
    if task == "pu_mc":
        return [c for k in (1, 2) for c in (f"pu{k}_mc", f"pu{k}_mc_se")]
    if task == "su_mc":
        return ["su_mc", "su_mc_se"]
    if task == "design_proper":
        return ["proper_ps", "proper_outage", "proper_silent"]
    if task == "design_improper":
        return ["improper_ps", "improper_cx", "improper_outage", "improper_silent"]
    raise KeyError(task)


def _axis_columns(spec: SweepSpec) -> list:
    cols = []
    for ax in spec.axes:
        for nm in ax.params:
            cols.append(nm)
            if is_db_key(nm):
                cols.append(nm[: -len("_db")] + "_lin")
    return cols


def sweep_header(spec: SweepSpec) -> tuple:
    cols = _axis_columns(spec)
    for t in spec.tasks:
        cols += _task_columns(t)
    if "pu_upper" in spec.tasks and "pu_exact" in spec.tasks:
        cols += ["pu1_gap_rel", "pu2_gap_rel"]
    return tuple(cols + ["errors"])


def _run_task(task, params, design, spec):
    if task == "su_closed":
        return [su_outage(params, design)]
    if task == "pu_proper":
        return [pu_outage_proper(params, k, design.ps) for k in (1, 2)]
    if task == "pu_upper":
        return [pu_outage_upper(params, k, design) for k in (1, 2)]
    if task == "pu_exact":
        return [pu_outage_exact(params, k, design, spec.quadrature_order).value for k in (1, 2)]
    if task == "pu_mc":
        out = []
        for k in (1, 2):
            e = estimate_pu_outage(params, k, design, spec.mc)
            out += [e.mean, e.std_err]
        return out
    if task == "su_mc":
        e = estimate_su_outage(params, design, spec.mc)
        return [e.mean, e.std_err]
    if task == "design_proper":
        o = design_proper(params)
        return [o.ps_star, o.outage, o.silent]
    if task == "design_improper":
        o = design_improper(params)
        return [o.ps_star, o.cx_star, o.outage, o.silent]
    raise KeyError(task)


def _point_settings(spec: SweepSpec, point) -> dict:
    s = dict(spec.settings)
    for ax, vals in zip(spec.axes, point):
        for nm, v in zip(ax.params, vals):
            if nm in SCENARIO_KEYS and SCENARIO_KEYS[nm][1]:
                # a shared axis beats per-node constants
                for n in (1, 2):
                    s.pop(_node_key(nm, n), None)
            s[nm] = v
    return s


def evaluate_point(spec: SweepSpec, point) -> list:
    """One sweep row: axis echoes, task metrics, then the error column."""
    s = _point_settings(spec, point)
    row = []
    for ax, vals in zip(spec.axes, point):
        for nm, v in zip(ax.params, vals):
            row.append(v)
            if is_db_key(nm):
                row.append(db_to_linear(v))
    errors = []
    try:
        params = build_scenario(s)
        design = SignalDesign(s["design.ps_w"], s.get("design.cx", 0.0)) if "design.ps_w" in s else None
    except DomainError as exc:
        params = None
        errors.append(f"scenario: {exc}")
    results = {}
    for t in spec.tasks:
        width = len(_task_columns(t))
        if params is None:
            row += ["ERR"] * width
            continue
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", NumericWarning)
                vals = _run_task(t, params, design, spec)
            for w in caught:
                if issubclass(w.category, NumericWarning):
                    errors.append(f"{t}: warning: {w.message}")
            results[t] = vals
            row += vals
        except (DomainError, NumericError) as exc:
            errors.append(f"{t}: {exc}")
            row += ["ERR"] * width
    if "pu_upper" in spec.tasks and "pu_exact" in spec.tasks:
        for k in range(2):
            try:
                up, ex = results["pu_upper"][k], results["pu_exact"][k]
                row.append((up - ex) / ex if ex > 0 else 0.0)
            except KeyError:
                row.append("ERR")
    row.append("; ".join(errors))
    return row


def sweep_points(spec: SweepSpec):
    return list(itertools.product(*(ax.values for ax in spec.axes)))


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every task at every sweep point; rows follow axis order."""
    points = sweep_points(spec)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda pt: evaluate_point(spec, pt), points))
    else:
        rows = [evaluate_point(spec, pt) for pt in points]
    return SweepResult(sweep_header(spec), tuple(tuple(r) for r in rows))


# --- CSV -------------------------------------------------------------------------


def format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


def render_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(result.header)
    for r in result.rows:
        w.writerow([format_cell(v) for v in r])
    return buf.getvalue()


class OutputError(OSError):
    pass


def emit_csv(result: SweepResult, destination) -> int:
    """Write ``result`` as CSV to a text or binary stream; returns bytes written."""
    data = render_csv(result).encode("utf-8")
    try:
        if isinstance(destination, io.TextIOBase):
            destination.write(data.decode("utf-8"))
        else:
            destination.write(data)
        destination.flush()
    except OSError as exc:
        name = getattr(destination, "name", repr(destination))
        raise OutputError(f"cannot write CSV to {name}: {exc}") from exc
    return len(data)
