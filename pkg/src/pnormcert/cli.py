"""Batch front-end: JSON job in, JSON certificate out, CSV curves out.

Certificates are deterministic: the payload section is byte-identical
across runs and thread counts for the same job file.  Wall-clock timing
lives outside the payload for exactly that reason.  Floats that JSON
cannot carry (inf, nan) are encoded as strings.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import __version__
from .continuation import loop_monodromy
from .dependence import (
    AnalyzeOptions,
    SampleGrid,
    analyze,
    build_matrix,
    make_grid,
)
from .errors import (
    InvalidInputError,
    MonodromyMismatchError,
)
from .exppoly import (
    Rectangle,
    ZeroSearchOptions,
    ZeroSet,
    find_zeros,
    from_vector,
)
from .vectors import RealVector, equivalent, partition

SCHEMA_VERSION = 1
COMMANDS = ("zeros", "norms", "monodromy", "equiv", "analyze")
DEFAULT_INTERVAL = (1.0, 4.0)
DEFAULT_WINDOW = Rectangle(-1.0, 1.0, 0.5, 40.0)
DEFAULT_GRID_COUNT = 16

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNEXPECTED = 2
EXIT_ILL_CONDITIONED = 3


@dataclass(frozen=True)
class JobSpec:
    command: str
    vectors: tuple[RealVector, ...]
    interval: tuple[float, float]
    window: Rectangle
    grid_count: int | None
    equiv_tol: float
    merge_tol: float
    quad_tol: float
    match_tol: float
    base_ps: tuple[float, ...]
    radius: float
    target_index: int | None
    include_zero_evidence: bool
    output: str | None
    curves: str | None


@dataclass(frozen=True)
class Certificate:
    version: str
    schema: int
    command: str
    input: dict
    payload: dict
    timing_ms: float

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "schema": self.schema,
            "command": self.command,
            "input": self.input,
            "payload": self.payload,
            "timing_ms": self.timing_ms,
        }
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _as_float(value, where: str) -> float:
    """Accept JSON numbers or round-trippable decimal strings, incl. 'inf'."""
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise InvalidInputError(f"{where}: expected a number, got {value!r}")
    try:
        x = float(value)
    except ValueError:
        raise InvalidInputError(f"{where}: cannot parse {value!r} as a number") from None
    if math.isnan(x):
        raise InvalidInputError(f"{where}: nan is not allowed")
    return x


def _as_positive(value, where: str) -> float:
    x = _as_float(value, where)
    if not x > 0:
        raise InvalidInputError(f"{where}: must be positive, got {x}")
    return x


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise InvalidInputError(f"{where}: unknown field(s) {', '.join(unknown)}")


def parse_jobspec(text: str, command: str | None = None) -> JobSpec:
    """Parse and validate a job file; fills documented defaults.

    ``command`` (from the command line) must agree with the file's
    command field when both are present.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise InvalidInputError(
            f"malformed JSON at line {err.lineno} column {err.colno}: {err.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise InvalidInputError("job file must contain a JSON object")
    _check_keys(
        raw,
        {"schema", "command", "vectors", "interval", "window", "options"},
        "job",
    )
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise InvalidInputError(f"schema: unsupported version {schema!r}")
    file_cmd = raw.get("command")
    if file_cmd is not None and file_cmd not in COMMANDS:
        raise InvalidInputError(f"command: must be one of {', '.join(COMMANDS)}")
    if command is not None and file_cmd is not None and command != file_cmd:
        raise InvalidInputError(
            f"command: job file says {file_cmd!r} but {command!r} was requested"
        )
    cmd = command or file_cmd
    if cmd is None:
        raise InvalidInputError("command: missing (give it in the file or CLI)")

    if "vectors" not in raw:
        raise InvalidInputError("vectors: required field is missing")
    if not isinstance(raw["vectors"], list) or not raw["vectors"]:
        raise InvalidInputError("vectors: expected a non-empty list")
    vectors = []
    for k, item in enumerate(raw["vectors"]):
        if not isinstance(item, list) or not item:
            raise InvalidInputError(f"vectors[{k}]: expected a non-empty list of numbers")
        coords = tuple(_as_float(x, f"vectors[{k}][{j}]") for j, x in enumerate(item))
        try:
            vectors.append(RealVector(coords))
        except InvalidInputError as err:
            raise InvalidInputError(f"vectors[{k}]: {err}") from None

    interval = DEFAULT_INTERVAL
    if "interval" in raw:
        iv = raw["interval"]
        if not isinstance(iv, list) or len(iv) != 2:
            raise InvalidInputError("interval: expected [a, b]")
        a = _as_float(iv[0], "interval[0]")
        b = _as_float(iv[1], "interval[1]")
        if math.isinf(a) or not 1.0 <= a < b:
            raise InvalidInputError(f"interval: need 1 <= a < b, got [{a}, {b}]")
        interval = (a, b)

    window = DEFAULT_WINDOW
    if "window" in raw:
        w = raw["window"]
        if not isinstance(w, dict):
            raise InvalidInputError("window: expected an object")
        _check_keys(w, {"re", "im"}, "window")
        bounds = {"re": (-1.0, 1.0), "im": (0.5, 40.0)}
        for axis in ("re", "im"):
            if axis in w:
                pair = w[axis]
                if not isinstance(pair, list) or len(pair) != 2:
                    raise InvalidInputError(f"window.{axis}: expected [lo, hi]")
                lo = _as_float(pair[0], f"window.{axis}[0]")
                hi = _as_float(pair[1], f"window.{axis}[1]")
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise InvalidInputError(f"window.{axis}: need finite lo < hi")
                bounds[axis] = (lo, hi)
        window = Rectangle(bounds["re"][0], bounds["re"][1], bounds["im"][0], bounds["im"][1])

    opts = raw.get("options", {})
    if not isinstance(opts, dict):
        raise InvalidInputError("options: expected an object")
    _check_keys(
        opts,
        {
            "grid_count",
            "equiv_tol",
            "merge_tol",
            "quad_tol",
            "match_tol",
            "base_p",
            "radius",
            "target_index",
            "include_zero_evidence",
            "output",
            "curves",
        },
        "options",
    )
    grid_count = opts.get("grid_count")
    if grid_count is not None:
        if not isinstance(grid_count, int) or isinstance(grid_count, bool) or grid_count < 2:
            raise InvalidInputError("options.grid_count: expected an integer >= 2")
    equiv_tol = _as_positive(opts.get("equiv_tol", 1e-9), "options.equiv_tol")
    merge_tol = _as_float(opts.get("merge_tol", 1e-12), "options.merge_tol")
    if merge_tol < 0:
        raise InvalidInputError("options.merge_tol: must be non-negative")
    quad_tol = _as_positive(opts.get("quad_tol", 1e-3), "options.quad_tol")
    match_tol = _as_positive(opts.get("match_tol", 1e-6), "options.match_tol")
    base_raw = opts.get("base_p", 2.0)
    if not isinstance(base_raw, list):
        base_raw = [base_raw]
    if not base_raw:
        raise InvalidInputError("options.base_p: expected a number or non-empty list")
    base_ps = tuple(
        _as_positive(x, f"options.base_p[{i}]") for i, x in enumerate(base_raw)
    )
    for i, x in enumerate(base_ps):
        if math.isinf(x):
            raise InvalidInputError(f"options.base_p[{i}]: must be finite")
    radius = _as_positive(opts.get("radius", 0.25), "options.radius")
    if math.isinf(radius):
        raise InvalidInputError("options.radius: must be finite")
    target_index = opts.get("target_index")
    if target_index is not None:
        if not isinstance(target_index, int) or isinstance(target_index, bool) or target_index < 0:
            raise InvalidInputError("options.target_index: expected an integer >= 0")
    include_zero_evidence = opts.get("include_zero_evidence", False)
    if not isinstance(include_zero_evidence, bool):
        raise InvalidInputError("options.include_zero_evidence: expected a boolean")
    output = opts.get("output")
    curves = opts.get("curves")
    for name, val in (("output", output), ("curves", curves)):
        if val is not None and not isinstance(val, str):
            raise InvalidInputError(f"options.{name}: expected a string path")

    return JobSpec(
        command=cmd,
        vectors=tuple(vectors),
        interval=interval,
        window=window,
        grid_count=grid_count,
        equiv_tol=equiv_tol,
        merge_tol=merge_tol,
        quad_tol=quad_tol,
        match_tol=match_tol,
        base_ps=base_ps,
        radius=radius,
        target_index=target_index,
        include_zero_evidence=include_zero_evidence,
        output=output,
        curves=curves,
    )


# ---------------------------------------------------------------------------
# JSON encoding of domain values
# ---------------------------------------------------------------------------


def _enc_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return float(x)


def _enc_complex(z: complex) -> dict:
    return {"re": _enc_float(z.real), "im": _enc_float(z.imag)}


def _enc_rect(r: Rectangle) -> dict:
    return {"re": [r.re_min, r.re_max], "im": [r.im_min, r.im_max]}


def _enc_zeroset(zs: ZeroSet) -> dict:
    return {
        "window": _enc_rect(zs.window),
        "total": zs.total,
        "zeros": [
            {
                "re": z.location.real,
                "im": z.location.imag,
                "multiplicity": z.multiplicity,
                "refined": z.refined,
            }
            for z in zs.zeros
        ],
    }


def _enc_grid(grid: SampleGrid) -> dict:
    return {
        "a": grid.a,
        "b": _enc_float(grid.b),
        "points": list(grid.points),
        "include_infinity": grid.include_infinity,
    }


def _echo_input(job: JobSpec) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": job.command,
        "vectors": [list(v.coords) for v in job.vectors],
        "interval": [job.interval[0], _enc_float(job.interval[1])],
        "window": _enc_rect(job.window),
        "options": {
            "grid_count": job.grid_count,
            "equiv_tol": job.equiv_tol,
            "merge_tol": job.merge_tol,
            "quad_tol": job.quad_tol,
            "match_tol": job.match_tol,
            "base_p": list(job.base_ps),
            "radius": job.radius,
            "target_index": job.target_index,
            "include_zero_evidence": job.include_zero_evidence,
            "output": job.output,
            "curves": job.curves,
        },
    }


# ---------------------------------------------------------------------------
# Command payloads
# ---------------------------------------------------------------------------


def _run_zeros(job: JobSpec, threads: int) -> dict:
    opts = ZeroSearchOptions(quad_tol=job.quad_tol)

    def one(v: RealVector) -> ZeroSet:
        return find_zeros(from_vector(v, job.merge_tol), job.window, opts)

    results = _ordered_map(one, job.vectors, threads)
    return {
        "requested_window": _enc_rect(job.window),
        "results": [
            {"vector_index": k, **_enc_zeroset(zs)} for k, zs in enumerate(results)
        ],
    }


def _run_norms(job: JobSpec) -> dict:
    grid = make_grid(
        job.interval[0], job.interval[1], job.grid_count or DEFAULT_GRID_COUNT
    )
    matrix = build_matrix(list(job.vectors), grid)
    return {
        "grid": _enc_grid(grid),
        "norms": [[float(x) for x in row] for row in matrix.entries],
        "column_scales": [float(s) for s in matrix.column_scales],
    }


def _run_monodromy(job: JobSpec, threads: int) -> dict:
    opts = ZeroSearchOptions(quad_tol=job.quad_tol)
    out = []
    for k, v in enumerate(job.vectors):
        f = from_vector(v, job.merge_tol)
        zs = find_zeros(f, job.window, opts)
        if job.target_index is not None:
            if job.target_index >= len(zs.zeros):
                raise InvalidInputError(
                    f"options.target_index: only {len(zs.zeros)} zeros in the window"
                )
            targets = [zs.zeros[job.target_index]]
        else:
            targets = list(zs.zeros)
        jobs = [(zero, bp) for zero in targets for bp in job.base_ps]

        def one(args):
            zero, bp = args
            others = tuple(
                z.location for z in zs.zeros if z.location != zero.location
            )
            measured, predicted = loop_monodromy(
                f, zero, bp, job.radius, other_zeros=others
            )
            return zero, bp, measured, predicted

        loops = []
        for zero, bp, measured, predicted in _ordered_map(one, jobs, threads):
            z = zero.location
            loops.append(
                {
                    "zero": _enc_complex(z),
                    "multiplicity": zero.multiplicity,
                    "base_p": bp,
                    "radius": job.radius,
                    "measured": _enc_complex(measured),
                    "predicted": _enc_complex(predicted),
                    "rel_error": abs(measured - predicted) / abs(predicted),
                    "zero_formula_factor": _enc_complex(
                        cmath.exp(2j * math.pi * zero.multiplicity / z)
                    ),
                }
            )
        out.append(
            {"vector_index": k, "window": _enc_rect(zs.window), "loops": loops}
        )
    return {"results": out}


def _run_equiv(job: JobSpec) -> dict:
    part = partition(list(job.vectors), job.equiv_tol)
    pairs = []
    for i in range(len(job.vectors)):
        for j in range(i + 1, len(job.vectors)):
            flag, ratio = equivalent(job.vectors[i], job.vectors[j], job.equiv_tol)
            pairs.append(
                {"i": i, "j": j, "equivalent": flag, "ratio": ratio}
            )
    return {
        "partition": {
            "classes": [list(c) for c in part.classes],
            "scales": [list(s) for s in part.scales],
        },
        "pairs": pairs,
    }


def _run_analyze(job: JobSpec) -> tuple[dict, int]:
    opts = AnalyzeOptions(
        equiv_tol=job.equiv_tol,
        merge_tol=job.merge_tol,
        grid_count=job.grid_count,
        include_zero_evidence=job.include_zero_evidence,
        zero_window=job.window,
    )
    report = analyze(list(job.vectors), job.interval[0], job.interval[1], opts)
    payload = {
        "classification": report.classification,
        "numeric_rank": report.numeric_rank,
        "rank_gap": _enc_float(report.rank_gap),
        "singular_values": [_enc_float(s) for s in report.singular_values],
        "null_basis": [list(alpha) for alpha in report.null_basis],
        "principal_angle": report.principal_angle,
        "partition": {
            "classes": [list(c) for c in report.partition.classes],
            "scales": [list(s) for s in report.partition.scales],
        },
        "ratio_checks": [
            {"i": i, "j": j, "a": fit.a, "beta": fit.beta, "residual": fit.residual}
            for i, j, fit in report.ratio_checks
        ],
        "zero_checks": [
            {"i": i, "j": j, "equal": flag} for i, j, flag in report.zero_checks
        ],
        "notes": list(report.notes),
        "grid": _enc_grid(report.matrix.grid),
        "norms": [[float(x) for x in row] for row in report.matrix.entries],
        "column_scales": [float(s) for s in report.matrix.column_scales],
    }
    exit_code = {
        "consistent-with-theorem": EXIT_OK,
        "unexpected-dependence": EXIT_UNEXPECTED,
        "ill-conditioned": EXIT_ILL_CONDITIONED,
    }[report.classification]
    return payload, exit_code


def _ordered_map(fn, items, threads: int) -> list:
    """Map preserving input order; thread count never changes the result."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run(job: JobSpec, threads: int = 1) -> tuple[Certificate, int]:
    """Execute a job; returns the certificate and the process exit code.

    Domain errors (bad input, failed quadrature, monodromy mismatch)
    propagate as exceptions; ``main`` maps them to exit codes.
    """
    start = time.perf_counter()
    exit_code = EXIT_OK
    if job.command == "zeros":
        payload = _run_zeros(job, threads)
    elif job.command == "norms":
        payload = _run_norms(job)
    elif job.command == "monodromy":
        payload = _run_monodromy(job, threads)
    elif job.command == "equiv":
        payload = _run_equiv(job)
    elif job.command == "analyze":
        payload, exit_code = _run_analyze(job)
    else:
        raise InvalidInputError(f"unknown command {job.command!r}")
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    cert = Certificate(
        version=__version__,
        schema=SCHEMA_VERSION,
        command=job.command,
        input=_echo_input(job),
        payload=payload,
        timing_ms=elapsed_ms,
    )
    return cert, exit_code


def emit_curves(vs: list[RealVector], grid: SampleGrid, path: str) -> None:
    """Write the sampled norm curves as CSV: p,norm_1,...,norm_n.

    Values carry 17 significant digits (lossless for doubles); the
    infinity sample, if any, appears as a final row with p = inf.
    """
    if not vs:
        raise InvalidInputError("need at least one vector")
    matrix = build_matrix(list(vs), grid)
    header = "p," + ",".join(f"norm_{k + 1}" for k in range(len(vs)))
    lines = [header]
    labels = ["%.17g" % p for p in grid.points]
    if grid.include_infinity:
        labels.append("inf")
    for label, row in zip(labels, matrix.entries):
        lines.append(label + "," + ",".join("%.17g" % x for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pnormcert",
        description="Certify linear (in)dependence of p-norm curves and "
        "inspect the complex-analytic machinery behind it.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", required=True, help="job JSON file")
    parser.add_argument("--output", help="certificate path (default: stdout)")
    parser.add_argument("--curves", help="also write sampled norm curves as CSV")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    args = parser.parse_args(argv)
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"error: cannot read {args.input}: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        job = parse_jobspec(text, args.command)
        if args.threads < 1:
            raise InvalidInputError("--threads must be at least 1")
        cert, exit_code = run(job, args.threads)
        out_path = args.output or job.output
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(cert.to_json())
        else:
            sys.stdout.write(cert.to_json())
        curves_path = args.curves or job.curves
        if curves_path:
            grid = make_grid(
                job.interval[0], job.interval[1], job.grid_count or DEFAULT_GRID_COUNT
            )
            emit_curves(list(job.vectors), grid, curves_path)
        return exit_code
    except InvalidInputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except MonodromyMismatchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except (ArithmeticError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ILL_CONDITIONED


if __name__ == "__main__":
    sys.exit(main())
