"""Command-line entry point: ``xsbkit <subcommand> ...`` or ``python3 -m xsbkit``.

Every run writes ``<name>.csv`` (data), ``<name>.json`` (summary plus the
resolved config and version) and ``<name>.config.json`` into ``--output-dir``.
Exit codes: 0 success, 2 validation or usage error, 3 numerical divergence,
1 when ``reproduce`` finds a criterion out of tolerance.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .dkg_solver import (
    DivergenceError,
    Scheme,
    SolverConfig,
    charge_observer,
    evolve,
    initial_data,
    norm_observer,
)
from .dyadic_region import (
    cor12_check,
    domination_experiment,
    gwp_region_check,
    outer_sum_probe,
    thm11_check,
)
from .exponents import ExponentTuple, parse_triple, to_fraction
from .imethod import ExperimentSetup, almost_conservation_experiment
from .lattice import Grid, InvalidInputError, dft_spacetime, read_field_csv
from .norms import DomainError, NormKind, NormSpec, evaluate
from .trilinear import FAMILIES, counterexample_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and callable(v.item):
        return v.item()
    if hasattr(v, "value") and not isinstance(v, (int, float, str, bool)):
        return v.value
    return v


def _dump_json(obj, path: Path):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_outputs(out_dir: Path, name: str, config: dict, summary: dict,
                  header=None, rows=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if header is not None:
        with (out_dir / f"{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
    _dump_json({"config": config, "version": __version__, **summary}, out_dir / f"{name}.json")
    _dump_json(config, out_dir / f"{name}.config.json")


def _parse_floats(text: str, kind=float) -> list:
    try:
        return [kind(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse list {text!r}") from exc


def parse_lambdas(text: str) -> list[float]:
    """``lo:hi:geometric`` (factor 2) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3 or parts[2] != "geometric":
            raise InvalidInputError(f"expected lo:hi:geometric, got {text!r}")
        lo, hi = float(parts[0]), float(parts[1])
        if not (0 < lo < hi):
            raise InvalidInputError("need 0 < lo < hi")
        out, lam = [], lo
        while lam <= hi * (1 + 1e-12):
            out.append(lam)
            lam *= 2
        return out
    return _parse_floats(text)


# -- subcommands -----------------------------------------------------------

def cmd_norms(a) -> dict:
    f = read_field_csv(a.input)
    spec = NormSpec(a.kind, float(to_fraction(a.s)), float(to_fraction(a.b)))
    value = evaluate(spec, dft_spacetime(f))
    print(f"{value:.12f}")
    config = {"subcommand": "norms", "input": str(a.input), "kind": spec.kind.value,
              "s": spec.s, "b": spec.b, "grid": f.grid.to_dict()}
    write_outputs(a.output_dir, "norms", config, {"norm": value},
                  ["kind", "s", "b", "norm"], [(spec.kind.value, spec.s, spec.b, value)])
    return {"norm": value}


def _exponents_from(a) -> ExponentTuple:
    signs = tuple(a.signs)
    if len(signs) != 3 or any(c not in "+-" for c in signs):
        raise InvalidInputError(f"signs must be three characters from '+-', got {a.signs!r}")
    vals = [to_fraction(getattr(a, k)) for k in ("s1", "s2", "s3", "b1", "b2", "b3")]
    return ExponentTuple(*vals, signs=signs)


def cmd_sweep(a) -> dict:
    if a.family not in FAMILIES:
        raise InvalidInputError(f"unknown family {a.family!r}; valid: {', '.join(FAMILIES)}")
    e = _exponents_from(a)
    lams = parse_lambdas(a.lambdas)
    rep = counterexample_sweep(FAMILIES[a.family], e, lams)
    summary = {"family": a.family, "fitted_slope": rep.fitted_slope,
               "predicted_slope": rep.predicted_slope, "note": rep.note}
    config = {"subcommand": "sweep", "family": a.family, "exponents": e.to_dict(),
              "lambdas": lams}
    write_outputs(a.output_dir, "sweep", config, summary,
                  ["lambda", "ratio", "log_ratio"], rep.rows())
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return summary


def cmd_region(a) -> dict:
    if a.gwp is not None:
        s, r = (to_fraction(p) for p in a.gwp.split(","))
        res = gwp_region_check(s, r)
        summary = res.to_dict()
        config = {"subcommand": "region", "gwp": [str(s), str(r)]}
    else:
        if a.b is None:
            raise InvalidInputError("--b is required unless --gwp is given")
        b = parse_triple(a.b)
        if a.cor is not None:
            s1, s2, r = parse_triple(a.cor)
            summary = cor12_check(s1, s2, r, *b).to_dict()
            config = {"subcommand": "region", "cor": [str(s1), str(s2), str(r)], "b": [str(x) for x in b]}
        else:
            if a.s is None:
                raise InvalidInputError("--s is required")
            s = parse_triple(a.s)
            e = ExponentTuple.from_lists(s, b)
            summary = thm11_check(e).to_dict()
            config = {"subcommand": "region", "s": [str(x) for x in s], "b": [str(x) for x in b]}
    write_outputs(a.output_dir, "region", config, summary)
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    return summary


def cmd_dyadic(a) -> dict:
    if a.probe == "domination":
        rep = domination_experiment(a.samples, seed=a.seed, margin=a.margin, eps=a.eps,
                                    cap_factor_log2=a.cap_log2, max_log2=a.max_log2)
        rows = []
        for (N, b), rt in zip(rep.samples, rep.ratios):
            rows.append(tuple(math.log2(n) for n in N) + tuple(b) + (rt,))
        summary = {"max_ratio": rep.max_ratio, "trend_slope": rep.trend_slope,
                   "envelope_log2": rep.envelope_log2, "envelope": rep.envelope}
        config = {"subcommand": "dyadic", "probe": "domination", "samples": a.samples,
                  "seed": a.seed, "margin": a.margin, "eps": a.eps,
                  "cap_log2": a.cap_log2, "max_log2": a.max_log2}
        header = ["log2_N1", "log2_N2", "log2_N3", "b1", "b2", "b3", "ratio"]
    else:
        e = _exponents_from(a)
        if a.n_cap < 1 or a.n_cap & (a.n_cap - 1):
            raise InvalidInputError("--n-cap must be a power of two")
        rep = outer_sum_probe(e, eps=a.eps, N_cap=a.n_cap)
        rows = list(rep.rows())
        summary = {"sup": rep.sup, "argsup": rep.argsup, "tail_slope": rep.tail_slope,
                   "trend": rep.trend}
        config = {"subcommand": "dyadic", "probe": "outer", "exponents": e.to_dict(),
                  "eps": a.eps, "n_cap": a.n_cap}
        header = ["N", "level_sup", "level_sum"]
    write_outputs(a.output_dir, "dyadic", config, summary, header, rows)
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return summary


SOLVE_DEFAULTS = {
    "M": 1.0, "m": 1.0, "x_points": 512, "x_length": 2 * math.pi, "dt": 1e-3, "T": 1.0,
    "scheme": "strang", "linear": False, "dealias": True, "seed": 0, "s": 0.0, "r": 0.5,
    "amp_spinor": 0.2, "amp_scalar": 0.2, "stride": 10, "dump_fields": False,
}


def resolve_solve_config(raw: dict) -> dict:
    unknown = set(raw) - set(SOLVE_DEFAULTS)
    if unknown:
        raise InvalidInputError(f"unknown solve keys: {sorted(unknown)}")
    cfg = {**SOLVE_DEFAULTS, **raw}
    Scheme(cfg["scheme"])
    if not (isinstance(cfg["stride"], int) and cfg["stride"] >= 1):
        raise InvalidInputError("stride must be a positive integer")
    if not (isinstance(cfg["T"], (int, float)) and cfg["T"] > 0):
        raise InvalidInputError("T must be positive")
    return cfg


def cmd_solve(a) -> dict:
    try:
        raw = json.loads(Path(a.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {a.config}: {exc}") from exc
    if not isinstance(raw, dict) or not raw:
        raise UsageError("empty solve config")
    cfg = resolve_solve_config(raw)
    grid = Grid(int(cfg["x_points"]), 1, float(cfg["x_length"]))
    solver = SolverConfig(cfg["M"], cfg["m"], grid, cfg["dt"], scheme=cfg["scheme"],
                          linear=cfg["linear"], dealias=cfg["dealias"])
    st = initial_data(int(cfg["seed"]), cfg["s"], cfg["r"], cfg["amp_spinor"], cfg["amp_scalar"], grid)
    obs = [charge_observer(grid), norm_observer(grid, cfg["s"], cfg["r"])]
    tr = evolve(st, solver, cfg["T"], obs, stride=cfg["stride"], keep_states=cfg["dump_fields"])
    cols = ("charge", "Hs_norm_psi", "Hr_norm_phi")
    rows = [(t, *(tr.column(c)[i] for c in cols)) for i, t in enumerate(tr.times)]
    c = tr.column("charge")
    summary = {"steps_dt": tr.dt_effective, "final_time": tr.times[-1],
               "charge_drift": max(abs(x / c[0] - 1) for x in c) if c[0] else 0.0}
    config = {"subcommand": "solve", **cfg}
    write_outputs(a.output_dir, "solve", config, summary, ["time", *cols], rows)
    if cfg["dump_fields"]:
        _dump_states(a.output_dir, tr)
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return summary


def _dump_states(out_dir: Path, tr) -> None:
    with (out_dir / "solve_fields.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "x_index", "psi_plus_re", "psi_plus_im", "psi_minus_re",
                    "psi_minus_im", "phi", "phi_t"])
        for t, st in zip(tr.times, tr.states):
            for j in range(len(st.phi)):
                w.writerow([repr(float(t)), j,
                            repr(float(st.psi_plus[j].real)), repr(float(st.psi_plus[j].imag)),
                            repr(float(st.psi_minus[j].real)), repr(float(st.psi_minus[j].imag)),
                            repr(float(st.phi[j])), repr(float(st.phi_t[j]))])


def cmd_imethod(a) -> dict:
    Ns = _parse_floats(a.N)
    setup = ExperimentSetup(x_points=a.x_points, amp_spinor=a.amp, amp_scalar=a.amp)
    rep = almost_conservation_experiment(a.seed, float(to_fraction(a.s)), float(to_fraction(a.r)),
                                         a.eps, Ns, setup=setup, n_seeds=a.seeds)
    rows = [(r.N, r.delta_t, r.gamma0, r.gammaT, r.dgamma) for r in rep.rows]
    summary = {"fitted_slope": rep.fitted_slope, "reference_slope": rep.reference_slope,
               "strictly_decreasing": rep.strictly_decreasing, "note": rep.note}
    config = {"subcommand": "imethod", "s": a.s, "r": a.r, "eps": a.eps, "N": Ns,
              "seed": a.seed, "seeds": a.seeds, "setup": setup.to_dict()}
    write_outputs(a.output_dir, "imethod", config, summary,
                  ["N", "deltaT", "gamma0", "gammaT", "dgamma"], rows)
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return summary


def cmd_reproduce(a) -> int:
    from .criteria import CRITERIA

    ids = list(CRITERIA) if a.criterion == "all" else [a.criterion]
    if any(i not in CRITERIA for i in ids):
        print(f"unknown criterion {a.criterion!r}; valid ids: {', '.join(CRITERIA)}, all",
              file=sys.stderr)
        return EXIT_USAGE
    ok = True
    for cid in ids:
        res = CRITERIA[cid]()
        print(res.line())
        write_outputs(a.output_dir, f"reproduce_{cid}", {"subcommand": "reproduce", "criterion": cid},
                      {"passed": res.passed, "summary": res.summary, "runtime": res.runtime,
                       "details": res.details})
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_run(a) -> int:
    """Dispatch a JSON run config ``{subcommand, parameters, seed, output_dir}``."""
    try:
        raw = json.loads(Path(a.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {a.config}: {exc}") from exc
    if not isinstance(raw, dict) or "subcommand" not in raw:
        raise UsageError("run config needs a 'subcommand' key")
    argv = [raw["subcommand"]]
    params = dict(raw.get("parameters", {}))
    if "seed" in raw:
        params.setdefault("seed", raw["seed"])
    if "output_dir" in raw:
        params.setdefault("output_dir", raw["output_dir"])
    for k, v in params.items():
        argv += [f"--{k.replace('_', '-')}", str(v)]
    return main(argv)


# -- parser ----------------------------------------------------------------

def _add_exponent_flags(p):
    for k in ("s1", "s2", "s3", "b1", "b2", "b3"):
        p.add_argument(f"--{k}", default="0", help="rational, e.g. -3/10")
    p.add_argument("--signs", default="++-", help="three characters from '+-'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xsbkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand")

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--output-dir", type=Path, default=Path("xsb_out"))
        p.set_defaults(func=fn)
        return p

    p = add("norms", cmd_norms, "evaluate a norm of a field stored as CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kind", choices=[k.value for k in NormKind if k is not NormKind.CALH_PAIR],
                   default="xsb+")
    p.add_argument("--s", default="0")
    p.add_argument("--b", default="0")

    p = add("sweep", cmd_sweep, "counterexample scaling sweep for one family")
    p.add_argument("--family", required=True)
    _add_exponent_flags(p)
    p.add_argument("--lambdas", default="16:4096:geometric")

    p = add("region", cmd_region, "exact exponent-region verdicts")
    p.add_argument("--s", help="s1,s2,s3")
    p.add_argument("--b", help="b1,b2,b3")
    p.add_argument("--cor", help="s1,s2,r for the mixed wave check")
    p.add_argument("--gwp", help="s,r for the global well-posedness region")

    p = add("dyadic", cmd_dyadic, "dyadic sum probes")
    p.add_argument("--probe", choices=["domination", "outer"], default="domination")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--cap-log2", type=int, default=256)
    p.add_argument("--max-log2", type=int, default=256)
    p.add_argument("--n-cap", type=int, default=2**10)
    _add_exponent_flags(p)

    p = add("solve", cmd_solve, "evolve the Dirac-Klein-Gordon system")
    p.add_argument("--config", type=Path, required=True)

    p = add("imethod", cmd_imethod, "almost-conservation experiment")
    p.add_argument("--s", default="-0.1")
    p.add_argument("--r", default="0.5")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--N", default="16,32,64,128")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--seeds", type=int, default=1, help="ensemble size, seeds seed..seed+seeds-1")
    p.add_argument("--x-points", type=int, default=4096)
    p.add_argument("--amp", type=float, default=1.0)

    p = add("reproduce", cmd_reproduce, "run one canned acceptance check, or 'all'")
    p.add_argument("criterion")

    p = add("run", cmd_run, "run a JSON config {subcommand, parameters, seed, output_dir}")
    p.add_argument("--config", type=Path, required=True)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--b1 -3/10`` into ``--b1=-3/10`` so argparse does not read a flag."""
    out: list[str] = []
    for tok in argv:
        if (_NEGATIVE_VALUE.match(tok) and out and out[-1].startswith("--")
                and "=" not in out[-1]):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if a.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            out = a.func(a)
    except UsageError as exc:
        print(f"xsbkit: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, DomainError, ValueError) as exc:
        print(f"xsbkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"xsbkit: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return out if isinstance(out, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
