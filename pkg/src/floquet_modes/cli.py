"""Command-line interface.

    floquet-modes <command> --config <path> [--out <path>] [--format csv|json] [--threads N]

The config is a JSON object with the system keys (``f``, ``A``, ``Q2`` and
optionally ``Q4``, ``G``, ``F``, ``tolerances``) plus an optional block named
after the command holding its parameters.  Every artifact starts with a
``#`` header echoing the version, the config and the tolerances.

Exit codes: 0 ok, 1 usage or invalid config, 2 unstable, 3 marginal, 4 solver error.
Every failure prints one line ``ERROR <code> <module>: <message>`` to stderr.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .continued import solve_modes
from .errors import DefectiveMonodromy, FloquetModesError
from .inhomogeneous import periodic_solution
from .model import SystemSpec, Tolerances, validate_system
from .oracle import StabilityClass, analyze, multiplier_mismatch
from .quantum import QuantumStateSpec, norm_squared, wavefunction
from .transform import PhaseState, build_transform, check_canonical_identities, mode_actions, propagate, to_modes

COMMANDS = ("exponents", "modes", "propagate", "scan", "inhom", "wavefunction", "validate")
MAX_SCAN_POINTS = 10**6
TARGET_RE = re.compile(r"^(A|Q2|Q4)\[(\d+),(\d+)\]$")


class UsageError(FloquetModesError):
    module = "cli"
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="floquet-modes", description="Coupled Mathieu/Hill systems by continued matrix inversions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON system/run configuration")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker threads for scan")
    return p


# ---------------------------------------------------------------------------
# results and rendering

class Table:
    def __init__(self, columns, rows=None, footer=None):
        self.columns = list(columns)
        self.rows = list(rows or [])
        self.footer = dict(footer or {})


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    return v


def render(table: Table, command: str, config: dict, tol: Tolerances, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "version": __version__,
            "command": command,
            "config": config,
            "tolerances": tol.to_dict(),
            "columns": table.columns,
            "rows": [[_jsonable(v) for v in r] for r in table.rows],
        }
        if table.footer:
            doc["footer"] = {k: [[_jsonable(v) for v in r] for r in rows] for k, rows in table.footer.items()}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    lines = [
        f"# floquet-modes {__version__}",
        f"# command: {command}",
        f"# config: {json.dumps(config, sort_keys=True)}",
        f"# tolerances: {json.dumps(tol.to_dict(), sort_keys=True)}",
        ",".join(table.columns),
    ]
    lines += [",".join(_fmt(v) for v in r) for r in table.rows]
    for name, rows in table.footer.items():
        lines += ["# " + ",".join([name] + [_fmt(v) for v in r]) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands

def _params(config: dict, command: str) -> dict:
    block = config.get(command, {})
    if not isinstance(block, dict):
        raise UsageError(f"config key {command!r} must be an object")
    return block


def cmd_exponents(spec: SystemSpec, tol: Tolerances, params: dict, threads: int) -> Table:
    modes = solve_modes(spec, tol)
    dec, _ = analyze(spec, steps=tol.oracle_steps)
    rows = [(j + 1, b, multiplier_mismatch(b, dec), modes.truncation) for j, b in enumerate(modes.exponents)]
    return Table(["j", "beta", "oracle_mismatch", "N_used"], rows)


def cmd_modes(spec, tol, params, threads) -> Table:
    modes = solve_modes(spec, tol)
    rows = []
    for j in range(modes.f):
        for n, c in zip(modes.orders, modes.coefficients[j]):
            rows += [(j + 1, modes.exponents[j], int(n), i + 1, c[i]) for i in range(modes.f)]
    return Table(["j", "beta", "n", "component", "coefficient"], rows)


def _vector(params, key, f, default=None):
    v = params.get(key, default)
    if v is None:
        raise UsageError(f"missing parameter {key!r}")
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (f,):
        raise UsageError(f"{key!r} must have length {f}")
    return v


def _times(params, default):
    if "times" in params:
        return [float(t) for t in params["times"]]
    return list(default)


def cmd_propagate(spec, tol, params, threads) -> Table:
    f = spec.f
    flt = build_transform(solve_modes(spec, tol), identity_tol=tol.identity_tol)
    state0 = PhaseState(_vector(params, "u0", f), _vector(params, "p0", f, np.zeros(f)))
    rows = []
    for t in _times(params, np.linspace(0.0, np.pi, 11)):
        st = propagate(flt, state0, t)
        I = mode_actions(to_modes(flt, st, t), tol.identity_tol)
        rows.append((t, *st.u, *st.p, *I))
    cols = ["t"] + [f"u{i + 1}" for i in range(f)] + [f"p{i + 1}" for i in range(f)] + [f"I{i + 1}" for i in range(f)]
    return Table(cols, rows)


def _axis(block: dict, name: str):
    if not isinstance(block, dict):
        raise UsageError(f"scan axis {name!r} must be an object")
    m = TARGET_RE.match(str(block.get("target", "")).replace(" ", ""))
    if not m:
        raise UsageError(f"scan axis {name!r} needs a target like 'A[0,0]' or 'Q2[0,1]'")
    num = int(block.get("num", 0))
    if num < 0:
        raise UsageError("scan num must be nonnegative")
    values = np.linspace(float(block.get("start", 0.0)), float(block.get("stop", 0.0)), num)
    return (m.group(1), int(m.group(2)), int(m.group(3))), values


def _with_entry(spec: SystemSpec, target, value) -> SystemSpec:
    name, i, j = target
    if max(i, j) >= spec.f:
        raise UsageError(f"scan target {name}[{i},{j}] outside f = {spec.f}")
    M = np.array(getattr(spec, name))
    M[i, j] = M[j, i] = value
    return spec.replace(**{name: M})


def scan_point(spec: SystemSpec, tol: Tolerances):
    """Classification and integer distance for one grid point; never raises."""
    try:
        _, stab = analyze(validate_system(spec), steps=tol.oracle_steps)
        return stab.cls.value, stab.integer_distance
    except DefectiveMonodromy:
        return StabilityClass.MARGINAL.value, 0.0
    except (FloquetModesError, np.linalg.LinAlgError, ValueError):
        return "Error", float("nan")


def cmd_scan(spec, tol, params, threads) -> Table:
    tx, xs = _axis(params.get("x", {}), "x")
    ty, ys = _axis(params.get("y", {}), "y")
    if len(xs) * len(ys) > MAX_SCAN_POINTS:
        raise UsageError(f"scan grid exceeds {MAX_SCAN_POINTS} points")
    grid = [(x, y) for x in xs for y in ys]

    def work(pt):
        return scan_point(_with_entry(_with_entry(spec, tx, pt[0]), ty, pt[1]), tol)

    if threads > 1 and grid:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, grid))
    else:
        results = [work(pt) for pt in grid]
    rows = [(x, y, cls, margin) for (x, y), (cls, margin) in zip(grid, results)]
    return Table(["p1", "p2", "class", "margin"], rows)


def cmd_inhom(spec, tol, params, threads) -> Table:
    resp = periodic_solution(spec, tol)
    f = spec.f
    ts = np.asarray(_times(params, np.linspace(0.0, np.pi, 11)))
    u, ud, alpha = resp.u(ts), resp.u_dot(ts), resp.action(ts)
    rows = [(t, *u[k], *ud[k], alpha[k]) for k, t in enumerate(ts)]
    cols = ["t"] + [f"u{i + 1}" for i in range(f)] + [f"udot{i + 1}" for i in range(f)] + ["alpha"]
    footer = {"harmonic": [(n, *b) for n, b in enumerate(resp.half_coeffs)]}
    return Table(cols, rows, footer)


def _state_from(params: dict, flt, spec, tol) -> QuantumStateSpec:
    block = params.get("state", {"n": [0] * spec.f})
    drive = periodic_solution(spec, tol) if params.get("drive", spec.is_driven) else None
    if "zeta0" in block:
        z = np.asarray(block["zeta0"], dtype=float)
        zeta0 = z[..., 0] + 1j * z[..., 1] if z.ndim == 2 else z.astype(complex)
        return QuantumStateSpec.coherent(flt, zeta0, drive=drive)
    return QuantumStateSpec.number(flt, tuple(block.get("n", [0] * spec.f)), drive=drive)


def cmd_wavefunction(spec, tol, params, threads) -> Table:
    f = spec.f
    if f > 3:
        raise UsageError("grid output supports f <= 3")
    flt = build_transform(solve_modes(spec, tol), identity_tol=tol.identity_tol)
    state = _state_from(params, flt, spec, tol)
    ub = params.get("u", {"start": -4.0, "stop": 4.0, "num": 41})
    axes = ub if isinstance(ub, list) else [ub] * f
    if len(axes) != f:
        raise UsageError(f"'u' must give one axis or {f}")
    grids = [np.linspace(float(a["start"]), float(a["stop"]), int(a["num"])) for a in axes]
    pts = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, f)
    rows, norms = [], []
    for t in _times(params, [0.0]):
        psi = wavefunction(state, pts, t) if len(pts) else np.zeros(0, complex)
        rows += [(t, *p, v.real, v.imag, abs(v) ** 2) for p, v in zip(pts, psi)]
        if f <= 2:
            norms.append((t, norm_squared(state, t)))
    cols = ["t"] + [f"u{i + 1}" for i in range(f)] + ["re_psi", "im_psi", "abs2"]
    return Table(cols, rows, {"normalization": norms} if norms else None)


def cmd_validate(spec, tol, params, threads) -> Table:
    rows = [("f", spec.f)]
    try:
        _, stab = analyze(spec, steps=tol.oracle_steps)
        cls = stab.cls.value
        rows += [("class", cls), ("max_modulus", stab.max_modulus), ("integer_distance", stab.integer_distance)]
    except DefectiveMonodromy:
        cls = StabilityClass.MARGINAL.value
        rows.append(("class", cls))
    if cls == StabilityClass.STABLE.value:
        flt = build_transform(solve_modes(spec, tol, check_stability=False), identity_tol=tol.identity_tol)
        checks = check_canonical_identities(flt, np.linspace(0.0, np.pi, 7))
        rows += sorted(checks.items())
    return Table(["check", "value"], rows)


HANDLERS = {
    "exponents": cmd_exponents,
    "modes": cmd_modes,
    "propagate": cmd_propagate,
    "scan": cmd_scan,
    "inhom": cmd_inhom,
    "wavefunction": cmd_wavefunction,
    "validate": cmd_validate,
}


def load_config(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    spec = validate_system(SystemSpec.from_dict(config))
    tol = Tolerances.from_dict(config.get("tolerances"))
    return config, spec, tol


def run(argv=None) -> str:
    """Parse ``argv``, run the command and return the rendered output."""
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    config, spec, tol = load_config(args.config)
    table = HANDLERS[args.command](spec, tol, _params(config, args.command), args.threads)
    return args, render(table, args.command, config, tol, args.format)


def main(argv=None) -> int:
    try:
        args, text = run(argv)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except FloquetModesError as exc:
        print(f"ERROR {exc.exit_code} {exc.module}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"ERROR 4 cli: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
