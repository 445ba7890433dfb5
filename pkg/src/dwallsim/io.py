"""Config parsing and bit-exact data formats.

Config files are INI-style ``key = value`` sections; unknown sections or keys
are rejected.  Snapshots use a headered plain-text column format with 17
significant digits, which round-trips float64 exactly; series files are CSV
with deterministic column order (t first, then lexicographic).

Sections::

    [model]      alpha, gamma
    [field]      kind = constant | piecewise | ramp, values
    [grid]       x_min, x_max, n
    [sim]        t_end, dt (AUTO or float), cfl, scheme, boundary
    [experiment] name = single_wall | two_wall | snapshot | stability |
                        spectrum | coercivity | dissipation | kappa, ...
    [output]     dir, stride

Piecewise field values are ``t,v; t,v; ...`` (left-closed steps); ramp values
are ``t0,v0; t1,v1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, NormViolationError, ParseError, ValidationError
from .grid import Grid1D, SpinField
from .integrator import SCHEMES, BOUNDARIES, SimConfig
from .model import AppliedField, ModelParams

SNAPSHOT_MAGIC = "DWALLSIM v1"


# ---------------------------------------------------------------------------
# config schema

def _cast_float(s):
    try:
        return float(s)
    except ValueError as exc:
        raise ValueError("not a number") from exc


def _cast_int(s):
    try:
        return int(s)
    except ValueError as exc:
        raise ValueError("not an integer") from exc


def _cast_bool(s):
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError("not a boolean")


def _cast_str(s):
    return s


def _cast_dt(s):
    if s.upper() == "AUTO":
        return None
    return _cast_float(s)


_MODEL_KEYS = {"alpha": _cast_float, "gamma": _cast_float}
_FIELD_KEYS = {"kind": _cast_str, "values": _cast_str}
_GRID_KEYS = {"x_min": _cast_float, "x_max": _cast_float, "n": _cast_int}
_SIM_KEYS = {"t_end": _cast_float, "dt": _cast_dt, "cfl": _cast_float, "scheme": _cast_str, "boundary": _cast_str}
_OUTPUT_KEYS = {"dir": _cast_str, "stride": _cast_int}

_EXPERIMENT_KEYS = {
    "single_wall": {"sigma1": _cast_int, "sigma2": _cast_int, "y0": _cast_float, "phi0": _cast_float,
                    "delta": _cast_float, "seed": _cast_int},
    "two_wall": {"L": _cast_float, "delta": _cast_float, "seed": _cast_int},
    "snapshot": {"path": _cast_str},
    "stability": {"L": _cast_float, "delta": _cast_float, "seed": _cast_int, "snapshots": _cast_int,
                  "R": _cast_float, "lam": _cast_float, "cauchy_tol": _cast_float},
    "spectrum": {"k": _cast_int},
    "coercivity": {"L": _cast_float, "seed": _cast_int, "amp_min": _cast_float, "amp_max": _cast_float,
                   "n_amps": _cast_int, "refine": _cast_bool},
    "dissipation": {"L": _cast_float, "delta": _cast_float, "seed": _cast_int, "snapshots": _cast_int,
                    "R": _cast_float},
    "kappa": {"lam": _cast_float, "t_max": _cast_float, "n_t": _cast_int},
}

_SECTIONS = ("model", "field", "grid", "sim", "experiment", "output")


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; optional sections are None when absent."""

    params: ModelParams
    grid: Grid1D
    sim: SimConfig | None
    experiment_name: str | None
    experiment: dict
    output_dir: str
    stride: int
    raw: dict = field(compare=False, repr=False, default_factory=dict)


def _parse_sections(text: str) -> dict:
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(lineno, "unterminated section header")
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ParseError(lineno, f"unknown section [{name}]")
            if name in sections:
                raise ParseError(lineno, f"duplicate section [{name}]")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected key = value")
        if current is None:
            raise ParseError(lineno, "key = value outside any section")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not key:
            raise ParseError(lineno, "empty key")
        if key in current:
            raise ParseError(lineno, f"duplicate key {key!r}")
        current[key] = (val, lineno)
    return sections


def _typed(section: dict, schema: dict, section_name: str) -> dict:
    out = {}
    for key, (val, lineno) in section.items():
        if key not in schema:
            raise ValidationError(f"{section_name}.{key}", "unknown key")
        try:
            out[key] = schema[key](val)
        except ValueError as exc:
            raise ParseError(lineno, f"{section_name}.{key}: {exc}") from exc
    return out


def _parse_pairs(spec: str, key: str):
    pairs = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise ValidationError(key, f"expected 't,v' pairs separated by ';', got {chunk!r}")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValidationError(key, f"non-numeric pair {chunk!r}") from None
    if not pairs:
        raise ValidationError(key, "no pairs given")
    return pairs


def _build_field(fsec: dict) -> AppliedField:
    kind = fsec.get("kind", "constant")
    values = fsec.get("values", "0.0")
    if kind == "constant":
        try:
            return AppliedField.constant(float(values))
        except ValueError:
            raise ValidationError("field.values", f"not a number: {values!r}") from None
    if kind == "piecewise":
        return AppliedField.piecewise(_parse_pairs(values, "field.values"))
    if kind == "ramp":
        pairs = _parse_pairs(values, "field.values")
        if len(pairs) != 2:
            raise ValidationError("field.values", "ramp needs exactly two 't,v' pairs")
        (t0, v0), (t1, v1) = pairs
        return AppliedField.ramp(t0, v0, t1, v1)
    raise ValidationError("field.kind", f"unknown kind {kind!r}")


def parse_config_text(text: str) -> RunConfig:
    sections = _parse_sections(text)
    for required in ("model", "grid"):
        if required not in sections:
            raise ValidationError(required, "missing required section")

    model = _typed(sections["model"], _MODEL_KEYS, "model")
    for key in ("alpha", "gamma"):
        if key not in model:
            raise ValidationError(f"model.{key}", "missing required key")

    fsec = _typed(sections.get("field", {}), _FIELD_KEYS, "field")
    applied = _build_field(fsec)
    params = ModelParams(alpha=model["alpha"], gamma=model["gamma"], applied_field=applied)

    gsec = _typed(sections["grid"], _GRID_KEYS, "grid")
    for key in ("x_min", "x_max", "n"):
        if key not in gsec:
            raise ValidationError(f"grid.{key}", "missing required key")
    if not gsec["x_max"] > gsec["x_min"]:
        raise ValidationError("grid.x_max", "must exceed x_min")
    if gsec["n"] < 3:
        raise ValidationError("grid.n", "must be >= 3")
    grid = Grid1D(gsec["x_min"], (gsec["x_max"] - gsec["x_min"]) / (gsec["n"] - 1), gsec["n"])

    sim = None
    if "sim" in sections:
        ssec = _typed(sections["sim"], _SIM_KEYS, "sim")
        if "t_end" not in ssec:
            raise ValidationError("sim.t_end", "missing required key")
        scheme = ssec.get("scheme", "RK4_PROJECT")
        boundary = ssec.get("boundary", "NEUMANN")
        if scheme not in SCHEMES:
            raise ValidationError("sim.scheme", f"must be one of {SCHEMES}")
        if boundary not in BOUNDARIES:
            raise ValidationError("sim.boundary", f"must be one of {BOUNDARIES}")
        stride = _typed(sections.get("output", {}), _OUTPUT_KEYS, "output").get("stride", 1)
        sim = SimConfig(
            t_end=ssec["t_end"],
            dt=ssec.get("dt"),
            cfl=ssec.get("cfl", 0.2),
            scheme=scheme,
            boundary=boundary,
            snapshot_stride=max(1, stride),
        )

    exp_name = None
    exp: dict = {}
    if "experiment" in sections:
        raw_exp = dict(sections["experiment"])
        if "name" not in raw_exp:
            raise ValidationError("experiment.name", "missing required key")
        exp_name, lineno = raw_exp.pop("name")
        if exp_name not in _EXPERIMENT_KEYS:
            raise ValidationError("experiment.name", f"unknown experiment {exp_name!r}")
        exp = _typed(raw_exp, {**_EXPERIMENT_KEYS[exp_name]}, "experiment")
        if exp_name == "single_wall":
            for key in ("sigma1", "sigma2"):
                if key in exp and exp[key] not in (-1, 1):
                    raise ValidationError(f"experiment.{key}", "must be +1 or -1")
        if "seed" in exp and exp["seed"] < 0:
            raise ValidationError("experiment.seed", "must be >= 0")

    osec = _typed(sections.get("output", {}), _OUTPUT_KEYS, "output")
    return RunConfig(
        params=params,
        grid=grid,
        sim=sim,
        experiment_name=exp_name,
        experiment=exp,
        output_dir=osec.get("dir", "."),
        stride=max(1, osec.get("stride", 1)),
        raw=sections,
    )


def parse_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(parse(text))) == parse(text)."""
    lines = ["[model]", f"alpha = {_fmt(cfg.params.alpha)}", f"gamma = {_fmt(cfg.params.gamma)}", ""]
    af = cfg.params.applied_field
    lines.append("[field]")
    lines.append(f"kind = {af.kind}")
    if af.kind == "constant":
        lines.append(f"values = {_fmt(af.data[0])}")
    elif af.kind == "piecewise":
        lines.append("values = " + "; ".join(f"{_fmt(t)},{_fmt(v)}" for t, v in af.data))
    elif af.kind == "ramp":
        t0, v0, t1, v1 = af.data
        lines.append(f"values = {_fmt(t0)},{_fmt(v0)}; {_fmt(t1)},{_fmt(v1)}")
    lines.append("")
    lines += ["[grid]", f"x_min = {_fmt(cfg.grid.x_min)}", f"x_max = {_fmt(cfg.grid.x_max)}", f"n = {cfg.grid.n}", ""]
    if cfg.sim is not None:
        lines += [
            "[sim]",
            f"t_end = {_fmt(cfg.sim.t_end)}",
            f"dt = {'AUTO' if cfg.sim.dt is None else _fmt(cfg.sim.dt)}",
            f"cfl = {_fmt(cfg.sim.cfl)}",
            f"scheme = {cfg.sim.scheme}",
            f"boundary = {cfg.sim.boundary}",
            "",
        ]
    if cfg.experiment_name is not None:
        lines.append("[experiment]")
        lines.append(f"name = {cfg.experiment_name}")
        for key in sorted(cfg.experiment):
            lines.append(f"{key} = {_fmt(cfg.experiment[key])}")
        lines.append("")
    lines += ["[output]", f"dir = {cfg.output_dir}", f"stride = {cfg.stride}", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# snapshots

def write_snapshot(m: SpinField, path) -> None:
    g = m.grid
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{SNAPSHOT_MAGIC} n={g.n} x_min={g.x_min:.17g} dx={g.dx:.17g}\n")
        x = g.x
        v = m.values
        for i in range(g.n):
            f.write(f"{x[i]:.17g} {v[i, 0]:.17g} {v[i, 1]:.17g} {v[i, 2]:.17g}\n")


def read_snapshot(path) -> SpinField:
    """Read a snapshot, re-validating the unit-norm invariant to 1e-10."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        parts = header.split()
        if len(parts) != 5 or " ".join(parts[:2]) != SNAPSHOT_MAGIC:
            raise FormatError(f"bad header: {header!r}")
        fields = {}
        for tok in parts[2:]:
            key, _, val = tok.partition("=")
            if not val:
                raise FormatError(f"bad header token {tok!r}")
            fields[key] = val
        try:
            n = int(fields["n"])
            x_min = float(fields["x_min"])
            dx = float(fields["dx"])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad header fields: {header!r}") from exc
        try:
            grid = Grid1D(x_min, dx, n)
        except Exception as exc:
            raise FormatError(str(exc)) from exc
        values = np.empty((n, 3))
        for i in range(n):
            line = f.readline()
            if not line:
                raise FormatError(f"expected {n} rows, file ended at row {i}")
            cols = line.split()
            if len(cols) != 4:
                raise FormatError(f"row {i}: expected 4 columns, got {len(cols)}")
            try:
                xi = float(cols[0])
                values[i] = [float(cols[1]), float(cols[2]), float(cols[3])]
            except ValueError as exc:
                raise FormatError(f"row {i}: non-numeric entry") from exc
            if abs(xi - (x_min + i * dx)) > 1e-6 * max(1.0, abs(xi)):
                raise FormatError(f"row {i}: x = {xi!r} disagrees with header grid")
        if f.readline().strip():
            raise FormatError(f"trailing data after {n} rows")
    norms = np.sqrt((values * values).sum(axis=1))
    bad = np.abs(norms - 1.0) > 1e-10
    if bad.any():
        row = int(np.argmax(bad))
        raise NormViolationError(row, float(norms[row]))
    return SpinField(grid, values, norm_atol=1e-10)


# ---------------------------------------------------------------------------
# series

def series_columns(columns: dict) -> list:
    names = sorted(columns)
    if "t" in columns:
        names.remove("t")
        names.insert(0, "t")
    return names


def write_series(name: str, columns: dict, path) -> str:
    """Write named columns as CSV; `path` may be a directory (file <name>.csv).

    Column order is deterministic: t first, then lexicographic.  NaNs are
    serialized as the literal 'nan'.  Returns the written file path.
    """
    import os

    cols = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) > 1:
        raise ValidationError("columns", f"unequal column lengths {sorted(lengths)}")
    if os.path.isdir(path):
        path = os.path.join(path, f"{name}.csv")
    names = series_columns(cols)
    nrows = lengths.pop() if lengths else 0
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(names) + "\n")
        for i in range(nrows):
            f.write(",".join(_fmt_cell(cols[k][i]) for k in names) + "\n")
    return str(path)


def _fmt_cell(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def read_series(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if not header:
            raise FormatError("empty series file")
        names = header.split(",")
        data: list[list[float]] = [[] for _ in names]
        for line in f:
            cells = line.rstrip("\n").split(",")
            if len(cells) != len(names):
                raise FormatError(f"row has {len(cells)} cells, header has {len(names)}")
            for j, c in enumerate(cells):
                data[j].append(float(c))
    return {name: np.array(vals) for name, vals in zip(names, data)}
