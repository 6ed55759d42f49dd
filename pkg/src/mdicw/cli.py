"""Command-line entry point: ``mdicw <command> ...``.

Exit codes: 0 success, 2 infeasible data, 64 usage error, 65 bad input data.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, randomness, simulator, tables
from .certifier import SearchConfig
from .decoy import IntensityConfig
from .errors import DataError, InfeasibleIntervals, InfeasibleRegion, MdicwError, SeedLengthError, UsageError
from .pipeline import certify_counts, dark_count_from_records
from .qubit import CoherenceBasis

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64
EXIT_DATA = 65


@dataclass
class RunConfig:
    mu: float | None = None
    nu: float | None = None
    p_d: float | None = None
    n_sigma: float = 3.89
    basis: str = "z"
    clock_rate_hz: float = 50e6
    grid_points: int = 9
    method: str = "decoy"
    loss_db: float = 13.13
    N: float = 3.2e6
    p_s: float = 0.5
    error_rate: float = 0.0

    def echo(self) -> dict:
        return dataclasses.asdict(self)


_CONFIG_TYPES = {"grid_points": int, "basis": str, "method": str}


def parse_config_text(text: str, source: str = "config") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise UsageError(f"{source}:{lineno}: unknown config key {key!r}")
        conv = _CONFIG_TYPES.get(key, float)
        try:
            out[key] = conv(value)
        except ValueError:
            raise UsageError(f"{source}:{lineno}: bad value {value!r} for {key}") from None
    return out


def load_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_echo(echo: dict, out: str | None):
    """CSV outputs keep their fixed schema; the config echo goes to OUT.config.json (stderr without --out)."""
    doc = tables.dumps({"config_echo": echo})
    if out:
        Path(f"{out}.config.json").write_text(doc, encoding="utf-8")
    else:
        sys.stderr.write(doc)


def _interval(iv) -> dict:
    return {"lo": float(iv.lo), "hi": float(iv.hi)}


def certificate_json(cert, yields, echo: dict) -> dict:
    povm = cert.worst_povm
    return {
        "c_lower_bits": float(cert.c_lower),
        "lambda_star": float(cert.lambda_star),
        "labeling": cert.labeling,
        "worst_povm": {"a1": povm.a1, "nx": povm.n[0], "ny": povm.n[1], "nz": povm.n[2]},
        "t_worst": float(cert.t_worst),
        "t_interval": _interval(cert.t_interval),
        "yield_intervals": {k: _interval(v) for k, v in yields.items()},
        "diagnostics": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cert.diagnostics.items()},
        "config_echo": echo,
    }


# -- commands -----------------------------------------------------------------


def cmd_certify(args) -> int:
    cfg = load_config(args)
    records = tables.read_counts(args.counts)
    p_d = cfg.p_d
    p_d_source = "config"
    if p_d is None:
        p_d = dark_count_from_records(records, cfg.n_sigma)
        p_d_source = "vacuum rows"
    if p_d is None:
        raise UsageError("no vacuum rows in the counts table; give the dark-count probability explicitly with --p-d or p_d=")
    if cfg.mu is None or (cfg.method == "decoy" and cfg.nu is None):
        raise UsageError("signal intensity mu (and decoy nu for the decoy method) must be configured")
    if cfg.method not in ("decoy", "nondecoy"):
        raise UsageError(f"unknown method {cfg.method!r}")
    try:
        icfg = IntensityConfig(cfg.mu, cfg.nu if cfg.method == "decoy" else None, p_d)
        basis = CoherenceBasis.named(cfg.basis)
    except MdicwError as exc:
        raise UsageError(str(exc)) from None
    search = SearchConfig(grid_points=cfg.grid_points)
    certs, yields = certify_counts(records, icfg, cfg.n_sigma, basis, search, cfg.method)
    echo = cfg.echo() | {"p_d_used": p_d, "p_d_source": p_d_source, "counts_file": str(args.counts),
                         "version": __version__}
    doc = {"certificates": {k: certificate_json(c, yields, echo) for k, c in certs.items()}}
    _write(tables.dumps(doc), args.out)
    for k, c in certs.items():
        print(f"{k}: C_L = {c.c_lower:.4f} bits per detected signal ({c.labeling} labeling, "
              f"lambda* = {c.lambda_star:.4f})", file=sys.stderr)
    return EXIT_OK


def _channel(cfg: RunConfig, loss_db: float) -> simulator.ChannelConfig:
    kw = dict(eta=simulator.db_to_eta(loss_db), N=cfg.N, p_s=cfg.p_s, n_sigma=cfg.n_sigma,
              error_rate=cfg.error_rate, p_d=1e-6 if cfg.p_d is None else cfg.p_d)
    if cfg.mu is not None:
        kw["mu"] = cfg.mu
    if cfg.nu is not None:
        kw["nu"] = cfg.nu
    try:
        return simulator.ChannelConfig(**kw)
    except (ValueError, MdicwError) as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    ch = _channel(cfg, cfg.loss_db)
    records = simulator.simulate_counts(ch, seed=args.seed)
    _write(tables.format_counts(records), args.out)
    _write_echo(cfg.echo() | {"seed": args.seed, "version": __version__}, args.out)
    return EXIT_OK


def parse_range(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
        return simulator.sweep_values(start, stop, step)
    except ValueError:
        raise UsageError(f"sweep range must be start:stop:step with step > 0, got {text!r}") from None


def cmd_sweep(args) -> int:
    if args.range and args.sweep:
        raise UsageError("give the sweep range either positionally or with --sweep, not both")
    range_text = args.range or args.sweep
    if not range_text:
        raise UsageError("a sweep range start:stop:step is required")
    losses = parse_range(range_text)
    cfg = load_config(args)
    if cfg.method not in ("decoy", "nondecoy"):
        raise UsageError(f"unknown method {cfg.method!r}")
    ch = _channel(cfg, losses[0])
    points = simulator.loss_sweep(ch, losses, cfg.method, optimize=not args.fixed_intensities,
                                  search=SearchConfig(grid_points=cfg.grid_points))
    _write(tables.format_curve(points), args.out)
    # the non-decoy source sends every pulse at the signal intensity
    p_s_used = 1.0 if cfg.method == "nondecoy" else cfg.p_s
    echo = cfg.echo() | {"sweep": range_text, "fixed_intensities": args.fixed_intensities, "p_s_used": p_s_used,
                         "version": __version__,
                         "intensities": [[p.loss_db, p.mu, p.nu] for p in points]}
    _write_echo(echo, args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = load_config(args)
    ch = _channel(cfg, cfg.loss_db)
    if cfg.method == "nondecoy":
        opt = simulator.optimize_signal_intensity(dataclasses.replace(ch, p_s=1.0, nu=None))
    elif cfg.method == "decoy":
        opt = simulator.optimize_intensities(ch)
    else:
        raise UsageError(f"unknown method {cfg.method!r}")
    doc = {"mu_opt": opt.mu, "nu_opt": opt.nu, "objective": opt.objective,
           "feasible_points": opt.feasible_points, "config_echo": cfg.echo() | {"version": __version__}}
    _write(tables.dumps(doc), args.out)
    return EXIT_OK


def cmd_attack(args) -> int:
    if args.p is None:
        raise UsageError("--p is required")
    try:
        rep = simulator.attack_demo(args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"p": rep.p, "intended_value": rep.intended_value, "attacked_value": rep.attacked_value,
           "falsely_witnessed": rep.falsely_witnessed, "config_echo": {"p": args.p}}
    _write(tables.dumps(doc), args.out)
    return EXIT_OK


def _read_bits(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def _ratio_from_certificate(path, state) -> float:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        certs = doc["certificates"]
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read certificate {path}: {exc}") from None
    if state is None:
        if len(certs) != 1:
            raise UsageError(f"certificate has {len(certs)} entries; choose one with --state")
        state = next(iter(certs))
    if state not in certs:
        raise UsageError(f"certificate has no entry for {state!r}")
    return float(certs[state]["c_lower_bits"])


def cmd_extract(args) -> int:
    if (args.ratio is None) == (args.certificate is None):
        raise UsageError("give exactly one of --ratio or --certificate")
    ratio = args.ratio if args.ratio is not None else _ratio_from_certificate(args.certificate, args.state)
    if not 0 < ratio <= 1:
        raise UsageError(f"extraction ratio must be in (0, 1], got {ratio}")
    raw = _read_bits(args.raw)
    need = randomness.seed_length(args.block_bits, ratio)
    seed_bytes = Path(args.seed_file).read_bytes()
    if len(seed_bytes) != math.ceil(need / 8):
        raise SeedLengthError(
            f"seed file has {len(seed_bytes)} bytes; block size {args.block_bits} at ratio {ratio} "
            f"needs {need} bits ({math.ceil(need / 8)} bytes)"
        )
    seed_bits = np.unpackbits(np.frombuffer(seed_bytes, dtype=np.uint8))[:need]
    out, seed, blocks = randomness.extract_stream(raw, seed_bits, ratio, args.block_bits)
    Path(args.out).write_bytes(np.packbits(out).tobytes())
    meta = {
        "n": int(blocks * args.block_bits),
        "m": int(out.size),
        "block_bits": args.block_bits,
        "bits_per_block": seed.m,
        "blocks": int(blocks),
        "discarded_raw_bits": int(raw.size - blocks * args.block_bits),
        "ratio": float(ratio),
        "seed_sha256": seed.digest(),
        "raw_sha256": hashlib.sha256(np.packbits(raw).tobytes()).hexdigest(),
        "limitations": "ratio equals the asymptotic min-entropy bound; finite-size smoothing is not applied",
        "config_echo": {"raw": str(args.raw), "seed_file": str(args.seed_file), "ratio": float(ratio),
                        "block_bits": args.block_bits},
    }
    meta_path = args.meta or f"{args.out}.json"
    Path(meta_path).write_text(tables.dumps(meta), encoding="utf-8")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_physics(p, sim=False):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--p-d", dest="p_d", type=float, help="dark-count probability per pulse")
    p.add_argument("--n-sigma", dest="n_sigma", type=float)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--method", choices=("decoy", "nondecoy"))
    if sim:
        p.add_argument("--N", dest="N", type=float, help="total number of pulses")
        p.add_argument("--p-s", dest="p_s", type=float, help="signal proportion")
        p.add_argument("--error-rate", dest="error_rate", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdicw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("certify", help="certify coherence from a counts CSV")
    p.add_argument("counts")
    _add_physics(p)
    p.add_argument("--basis", choices=("x", "y", "z"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="write the simulated counts table")
    _add_physics(p, sim=True)
    p.add_argument("--loss-db", dest="loss_db", type=float)
    p.add_argument("--seed", type=int, help="draw binomial counts with this seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="coherence bound versus channel loss")
    p.add_argument("range", nargs="?", help="start:stop:step in dB")
    p.add_argument("--sweep", help="start:stop:step in dB")
    _add_physics(p, sim=True)
    p.add_argument("--fixed-intensities", action="store_true", help="use mu/nu as given at every loss")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="optimal signal/decoy intensities")
    _add_physics(p, sim=True)
    p.add_argument("--loss-db", dest="loss_db", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("attack", help="basis-rotating attack on a conventional witness")
    p.add_argument("--p", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("extract", help="Toeplitz-hash raw bits")
    p.add_argument("--raw", required=True, help="raw bits, packed MSB first")
    p.add_argument("--seed-file", dest="seed_file", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratio", type=float, help="output bits per raw bit")
    p.add_argument("--certificate", help="take the ratio from a certificate JSON")
    p.add_argument("--state", help="certificate entry to use")
    p.add_argument("--block-bits", dest="block_bits", type=int, default=randomness.BLOCK_BITS)
    p.add_argument("--meta", help="metadata JSON path (default: OUT.json)")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mdicw: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleRegion, InfeasibleIntervals) as exc:
        print(f"mdicw: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MdicwError, OSError) as exc:
        print(f"mdicw: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
