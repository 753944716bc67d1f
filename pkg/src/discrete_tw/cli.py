"""Command-line front end.

    discrete-tw bessel --theta 1 --size 32 --out report.json
    discrete-tw verify-all --quick --deterministic

Exit status: 0 when every check passes, 1 when a check fails (the report
is still written), 2 for invalid input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

import numpy as np

from . import __version__, dpp, factorize as fz, report
from .linalg import sym_eigen
from .models import almost_mathieu_model, bessel_model, laguerre_model, mathieu_model
from .spectra import decay_fit, multiplicity_profile
from .specfun import GOLDEN
from .suite import SuiteConfig, verify_all

COMMANDS = ("bessel", "laguerre", "mathieu", "almost-mathieu", "factorize", "spectrum",
            "dpp-sample", "dpp-verify", "verify-all")

# flag dest -> type, used for config-file values
_TYPES = {"theta": float, "beta": float, "lam": float, "freq": float, "phase": float, "branch": int,
          "size": int, "tail": int, "tol": float, "seed": int, "trials": int, "out": str, "format": str,
          "system": str, "model": str, "quick": bool, "deterministic": bool, "kernel_csv": str}
_DEFAULTS = {"theta": 1.0, "beta": 1.0, "lam": 10.0, "freq": GOLDEN, "phase": 0.3, "branch": 0,
             "size": None, "tail": None, "tol": None, "seed": 0, "trials": 20_000, "out": None,
             "format": "json", "system": "bessel", "model": "bessel", "quick": False, "deterministic": False,
             "kernel_csv": None}


class UsageError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment. `lambda` is accepted for `lam`."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = {"lambda": "lam"}.get(key.replace("-", "_"), key.replace("-", "_"))
        if key not in _TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        typ = _TYPES[key]
        try:
            out[key] = _bool(val) if typ is bool else typ(val)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so config-file values are only overridden by explicit flags
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--theta", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--freq", type=float, help="frequency theta of the almost Mathieu operator")
    common.add_argument("--phase", type=float, help="phase alpha of the almost Mathieu operator")
    common.add_argument("--branch", type=int)
    common.add_argument("--size", type=int, help="section size N")
    common.add_argument("--tail", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out")
    common.add_argument("--kernel-csv", dest="kernel_csv", help="also write the kernel section as a CSV matrix")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--system", choices=sorted(fz.SYSTEMS))
    common.add_argument("--model", choices=("bessel", "laguerre", "mathieu", "almost-mathieu"))
    common.add_argument("--quick", action="store_const", const=True)
    common.add_argument("--deterministic", action="store_const", const=True)

    p = argparse.ArgumentParser(prog="discrete-tw", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in _TYPES:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _validate(cfg: dict) -> None:
    cmd = cfg["command"]
    if cmd in ("bessel", "dpp-sample", "dpp-verify") and not cfg["theta"] > 0:
        raise UsageError(f"theta must be positive, got {cfg['theta']}")
    if cmd == "mathieu" and cfg["beta"] == 0:
        raise UsageError("beta must be nonzero")
    if cfg["size"] is not None and not 1 <= cfg["size"] <= 512:
        raise UsageError(f"size must lie in 1..512, got {cfg['size']}")
    if cfg["tail"] is not None and cfg["tail"] < 0:
        raise UsageError("tail must be nonnegative")
    if cmd == "mathieu" and cfg["branch"] < 0:
        raise UsageError("branch must be nonnegative")
    if cmd == "dpp-sample" and cfg["trials"] < 1:
        raise UsageError("trials must be positive")


# --------------------------------------------------------------------------
# commands: each returns (payload dict, passed, csv text)


def _model_run(cfg: dict, name: str):
    n, tail, tol = cfg["size"], cfg["tail"], cfg["tol"]
    if name == "bessel":
        r = bessel_model(cfg["theta"], n or 32, tail, tol=tol or 1e-10)
        cols = {"phi": r.symbols["phi"][: 2 * r.kernel.dim], "K_diag": np.diag(r.kernel.values)}
    elif name == "laguerre":
        r = laguerre_model(cfg["theta"], n or 64, 10**6 if tail is None else tail, tol=tol or 1e-4)
        w = r.remainder
        cols = {"phi": r.symbols["phi"][: 2 * r.kernel.dim],
                "W": [w.symbol(d) for d in range(1, r.kernel.dim)]}
    elif name == "mathieu":
        r = mathieu_model(cfg["beta"], cfg["branch"], n or 32, tail, tol=tol or 1e-10)
        cols = {"b": r.symbols["b"], "K_diag": np.diag(r.kernel.values)}
    else:
        r = almost_mathieu_model(cfg["lam"], cfg["freq"], cfg["phase"], n or 48, tail,
                                 tol=tol or 1e-8, seed=cfg["seed"])
        cols = {"u": r.symbols["u"], "c": r.symbols["c"], "s": r.symbols["s"]}
    return r, cols


def cmd_model(cfg: dict):
    r, cols = _model_run(cfg, cfg["command"])
    header = {"model": r.model, "dim": r.kernel.dim, **r.params}
    csv = report.sequence_csv(cols, header)
    if cfg.get("kernel_csv"):
        with open(cfg["kernel_csv"], "w") as fh:
            fh.write(report.matrix_csv(r.kernel.values, {**header, "diagonal": r.kernel.diagonal_rule}))
    return r.to_dict(), r.passed, csv


def cmd_factorize(cfg: dict):
    params = {"theta": cfg["theta"], "beta": cfg["beta"], "lambda": cfg["lam"],
              "theta_freq": cfg["freq"], "alpha": cfg["phase"]}
    sys_ = fz.SYSTEMS[cfg["system"]](params)
    out = {"system": cfg["system"], "params": sys_.meta, "det_error": sys_.det_error(),
           "symplectic_error": sys_.symplectic_error()}
    try:
        cert = fz.rank_one_certificate(sys_, tol=cfg["tol"] or 1e-12)
    except fz.RankOneError as exc:
        out.update({"certificate": None, "error": str(exc), "residual": exc.residual,
                    "C": None if exc.C is None else exc.C})
        return out, False, report.sequence_csv({"residual": [exc.residual]}, {"system": cfg["system"]})
    out["certificate"] = {"C": cert.C, "lambda": cert.lam, "v_lambda": cert.v_lambda,
                          "residual": cert.max_residual}
    csv = report.sequence_csv({"C_row0": cert.C[0], "C_row1": cert.C[1]}, {"system": cfg["system"]})
    return out, True, csv


def cmd_spectrum(cfg: dict):
    c = dict(cfg, command=cfg["model"])
    r, _ = _model_run(c, cfg["model"])
    k = r.kernel.values
    dec = sym_eigen(k)
    s = dec.singular_numbers
    scale = float(s[0]) if len(s) else 0.0
    prof = multiplicity_profile(dec.eigenvalues, (cfg["tol"] or 1e-8) * (scale or 1.0))
    window = s[s > 1e-14 * (scale or 1.0)]
    fit = None
    if len(window) >= 8:
        c0, delta, r2 = decay_fit(window, floor=0.0)
        fit = {"C": c0, "delta": delta, "r2": r2}
    out = {"model": r.model, "params": r.params, "N": r.kernel.dim, "eigenvalues": dec.eigenvalues,
           "singular_numbers": s, "residual": dec.residual, "sweeps": dec.sweeps,
           "multiplicities": [m for _, m in prof.clusters], "decay_fit": fit, "model_pass": r.passed}
    ok = dec.residual <= 1e-10 * max(scale, 1.0)
    csv = report.sequence_csv({"eigenvalue": dec.eigenvalues, "singular": s},
                              {"model": r.model, "dim": r.kernel.dim})
    return out, bool(ok), csv


def cmd_dpp_sample(cfg: dict):
    n = cfg["size"] or 48
    kern = dpp.validate_dpp(dpp.bessel_dpp_kernel(cfg["theta"], n))
    samples = dpp.sample_many(kern, cfg["trials"], cfg["seed"])
    header = {"theta": cfg["theta"], "window": f"1..{n}", "seed": cfg["seed"], "algorithm": "spectral-hkpv"}
    out = {**header, "trials": cfg["trials"], "samples": [list(s) for s in samples]}
    return out, True, report.samples_csv(samples, header)


def cmd_dpp_verify(cfg: dict):
    th = cfg["theta"]
    res = dpp.verify_bessel_dpp(dpp.DppCheckConfig(theta=th, window=cfg["size"] or 48,
                                                   trials=cfg["trials"], seed=cfg["seed"]))
    gaps = dpp.gap_sweep(th, range(0, 13))
    vals = list(gaps.values())
    mono = all(b >= a - 1e-14 for a, b in zip(vals, vals[1:])) and all(0 <= g <= 1 for g in vals)
    res["gaps"] = gaps
    res["gaps_monotone"] = mono
    ok = res["pass"] and mono
    if th <= 16 and cfg["trials"] >= 10_000:
        centre = int(np.ceil(2 * np.sqrt(th)))
        lis = dpp.rsk_lis_mc(th, cfg["trials"], cfg["seed"] + 1)
        cal = dpp.calibrate_offset(th, range(max(centre - 2, 0), centre + 5), lis)
        res["lis_counts"] = lis
        res["offsets"] = {str(o): v for o, v in cal.items()}
        res["pinned_offset"] = dpp.PINNED_OFFSET
        ok = ok and cal[dpp.PINNED_OFFSET]["pass"]
    csv = report.sequence_csv({"gap_det": [gaps[n] for n in sorted(gaps)]}, {"theta": th, "first_n": 0})
    return res, bool(ok), csv


def cmd_verify_all(cfg: dict):
    res = verify_all(SuiteConfig(quick=cfg["quick"], seed=cfg["seed"] or SuiteConfig.seed,
                                 deterministic=cfg["deterministic"]))
    lines = ["criterion,name,pass"] + [f"{c['id']},{c['name']},{str(c['pass']).lower()}" for c in res["criteria"]]
    return res, res["pass"], "\n".join(lines) + "\n"


HANDLERS = {
    "bessel": cmd_model, "laguerre": cmd_model, "mathieu": cmd_model, "almost-mathieu": cmd_model,
    "factorize": cmd_factorize, "spectrum": cmd_spectrum, "dpp-sample": cmd_dpp_sample,
    "dpp-verify": cmd_dpp_verify, "verify-all": cmd_verify_all,
}


def run(cfg: dict) -> tuple[int, str]:
    """Execute a resolved config; returns (exit status, rendered report)."""
    _validate(cfg)
    try:
        payload, ok, csv = HANDLERS[cfg["command"]](cfg)
    except (ValueError, fz.RankOneError) as exc:
        raise UsageError(str(exc)) from exc
    if cfg["format"] == "csv":
        text = csv
    else:
        envelope = {"schema": report.SCHEMA, "version": __version__, "command": cfg["command"],
                    "config": {k: v for k, v in cfg.items() if k not in ("out", "command")}}
        if not cfg["deterministic"]:
            envelope["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        envelope["pass"] = bool(ok)
        envelope["report"] = payload
        text = report.dumps(envelope) + "\n"
    return (0 if ok else 1), text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        status, text = run(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
