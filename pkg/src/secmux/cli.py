"""Command-line entry point.

Every command reads one JSON config (``--config``), emits JSON or CSV to
``--out`` (written atomically) or stdout, and exits with

    0  all checks passed
    1  a checked property failed
    2  malformed input
    3  an enumeration guard was exceeded

Information quantities are in nats; ``--bits`` divides them by ln 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from secmux import families, gf, info, kernels, pa, regions, simulator
from secmux.channels import (
    Channel,
    channel_from_json,
    joint_uvo,
    markov_from_json,
    product_distribution,
    product_extend,
)
from secmux.errors import GuardError, SecmuxError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3

COMMON_FIELDS = {"channels", "tolerance", "seed"}

# keys holding nats; --bits rescales exactly these
NATS_KEYS = {
    "information", "conditional_entropy", "equivocation_rate", "max_entropy", "bound",
    "i_vy_u", "i_vz_u", "i_uy", "i_uz", "r0", "rate_sum", "re", "max_re", "value", "log_term",
    "psi", "phi", "r_i", "r_p", "phi_rate", "epsilon", "leakage_rate_bound",
    "equivocation_rate_bound", "mutual_information",
}


class InputError(ValueError):
    """Malformed or inconsistent configuration."""


def _require(doc: dict, allowed: set[str], required: set[str] = frozenset(), where: str = "config") -> None:
    if not isinstance(doc, dict):
        raise InputError(f"{where} must be a JSON object")
    unknown = set(doc) - allowed - COMMON_FIELDS
    if unknown:
        raise InputError(f"unknown {where} fields: {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise InputError(f"missing {where} fields: {sorted(missing)}")


def _named_channels(cfg: dict) -> dict[str, Channel]:
    named: dict[str, Channel] = {}
    for name, doc in cfg.get("channels", {}).items():
        named[name] = channel_from_json(doc, named)
    return named


def _channel(cfg: dict, key: str, named) -> Channel:
    return channel_from_json(cfg[key], named)


def _rhos(values) -> list[float]:
    rhos = [float(r) for r in values]
    for r in rhos:
        if not 0.0 < r <= 1.0:
            raise InputError(f"rho must lie in (0, 1], got {r}")
    return rhos


def _subsets(layout: families.MessageLayout, spec, include_randomness: bool = False):
    if spec is None or spec == "all":
        return layout.subsets(include_randomness=include_randomness)
    return [families.normalize_subset(layout, s) for s in spec]


def _tol(cfg: dict, name: str, default: float) -> float:
    return float(cfg.get("tolerance", {}).get(name, default))


# -- commands ---------------------------------------------------------------------
# Each returns (exit code, summary dict, rows).

def cmd_hash_verify(cfg: dict, args):
    _require(cfg, {"family", "subsets", "include_randomness", "orbit"}, {"family"})
    family = families.HashFamily.from_json(cfg["family"])
    if not family.verify_bijective():
        raise InputError("family members must be bijections")
    layout = family.layout
    subsets = _subsets(layout, cfg.get("subsets"), bool(cfg.get("include_randomness", True)))
    check_orbit = bool(cfg.get("orbit", family.kind == families.BIJECTIVE_LINEAR))
    rows = []
    for s in subsets:
        rep = families.verify_two_universal(family, s)
        row = {
            "subset": regions.subset_label(s),
            "max_collision": str(rep.max_ratio),
            "bound": str(rep.bound),
            "two_universal": rep.passed,
        }
        if check_orbit:
            row["orbit_criterion"] = families.orbit_criterion_all(family, s)
        rows.append(row)
    ok = all(r["two_universal"] and r.get("orbit_criterion", True) for r in rows)
    summary = {"family": family.kind, "members": family.size(), "q": layout.q,
               "dims": list(layout.dims), "passed": ok}
    return (EXIT_OK if ok else EXIT_FAIL), summary, rows


def _joint(doc, named) -> np.ndarray:
    if isinstance(doc, list):
        return info.check_joint(doc, 2)
    _require(doc, {"prior", "channel", "n"}, {"prior", "channel"}, "joint")
    n = int(doc.get("n", 1))
    ch = product_extend(channel_from_json(doc["channel"], named), n)
    return info.joint_from_channel(product_distribution(doc["prior"], n), ch)


def cmd_pa_check(cfg: dict, args):
    _require(cfg, {"family", "joint", "rhos", "subsets", "include_randomness"}, {"family", "joint", "rhos"})
    named = _named_channels(cfg)
    family = families.HashFamily.from_json(cfg["family"])
    joint = _joint(cfg["joint"], named)
    rhos = _rhos(cfg["rhos"])
    tol = _tol(cfg, "margin", 1e-10)
    subsets = _subsets(family.layout, cfg.get("subsets"), bool(cfg.get("include_randomness", True)))
    rows = []
    for rho in rhos:
        for s in subsets:
            rep = pa.pa_check(family, rho, joint, s)
            row = {"rho": rho, "subset": regions.subset_label(s), "lhs": rep.lhs_exact, "rhs": rep.rhs_bound}
            for name in ("general", "uniform", "discrete"):
                row[f"rhs_{name}"] = rep.forms.get(name)
            row["margin"] = rep.margin
            row["passed"] = rep.passed(tol)
            rows.append(row)
    ok = all(r["passed"] for r in rows)
    return (EXIT_OK if ok else EXIT_FAIL), {"passed": ok, "members": family.size()}, rows


def _functional(cfg: dict, name: str):
    _require(cfg, {"channel", "prior", "rhos"}, {"channel", "prior", "rhos"})
    named = _named_channels(cfg)
    ch = _channel(cfg, "channel", named)
    prior = cfg["prior"]
    rhos = _rhos(cfg["rhos"])
    if name == "phi" and 1.0 in rhos:
        raise InputError("phi is defined for 0 < rho < 1")
    fn = info.psi if name == "psi" else info.phi
    rows = [{"rho": rho, name: fn(rho, ch, prior)} for rho in rhos]
    summary = {"mutual_information": info.mutual_information(info.joint_from_channel(prior, ch))}
    return EXIT_OK, summary, rows


def cmd_psi(cfg: dict, args):
    return _functional(cfg, "psi")


def cmd_phi(cfg: dict, args):
    return _functional(cfg, "phi")


def _point_row(p: regions.ScanPoint) -> dict:
    return {"grid_index": p.grid_index, "i_vy_u": p.i_vy_u, "i_vz_u": p.i_vz_u, "i_uy": p.i_uy,
            "i_uz": p.i_uz, "r0": p.r0, "rate_sum": p.rate_sum, "re": p.re}


def cmd_region_scan(cfg: dict, args):
    _require(cfg, {"bob", "eve", "u_size", "v_size", "resolution", "v_equals_x"}, {"bob", "eve"})
    named = _named_channels(cfg)
    res = regions.region_scan(
        _channel(cfg, "bob", named), _channel(cfg, "eve", named),
        u_size=int(cfg.get("u_size", 1)), v_size=cfg.get("v_size"),
        resolution=int(cfg.get("resolution", 11)), v_equals_x=bool(cfg.get("v_equals_x", False)),
        threads=args.threads,
    )
    summary = {
        "evaluated": res.evaluated,
        "max_re": res.max_re,
        "best_re": _point_row(res.best_re),
        "best_sum": _point_row(res.best_sum),
        "best_r0": _point_row(res.best_r0),
    }
    return EXIT_OK, summary, [_point_row(p) for p in res.boundary]


def cmd_region_member(cfg: dict, args):
    _require(cfg, {"region", "markov", "bob", "eve", "rates"}, {"region", "markov", "bob", "eve", "rates"})
    named = _named_channels(cfg)
    spec = markov_from_json(cfg["markov"], named)
    bob, eve = _channel(cfg, "bob", named), _channel(cfg, "eve", named)
    tol = _tol(cfg, "slack", regions.SLACK_TOL)
    kind = cfg["region"]
    if kind == "bcc":
        cert = regions.bcc_membership(cfg["rates"], spec, bob, eve, tol)
    elif kind == "bcd":
        cert = regions.bcd_membership(cfg["rates"], spec, bob, eve, tol)
    elif kind == "smc":
        cert = regions.smc_membership(regions.rates_from_json(cfg["rates"]), spec, bob, eve, tol)
    else:
        raise InputError(f"unknown region {kind!r}; expected bcc, bcd or smc")
    q = cert.quantities
    summary = {"region": kind, "passed": cert.passed, "i_vy_u": q.i_vy_u, "i_vz_u": q.i_vz_u,
               "i_uy": q.i_uy, "i_uz": q.i_uz}
    rows = [{"constraint": k, "slack": v, "satisfied": v >= -tol} for k, v in cert.slacks.items()]
    return (EXIT_OK if cert.passed else EXIT_FAIL), summary, rows


def cmd_exponent(cfg: dict, args):
    _require(cfg, {"markov", "eve", "r_i", "r_p", "rhos", "grid_points"}, {"markov", "eve", "r_i", "r_p"})
    named = _named_channels(cfg)
    spec = markov_from_json(cfg["markov"], named)
    eve = _channel(cfg, "eve", named)
    joint = joint_uvo(spec, eve)
    r_i, r_p = float(cfg["r_i"]), float(cfg["r_p"])
    opt = regions.optimize_exponent(r_i, r_p, joint, int(cfg.get("grid_points", regions.RHO_GRID)))
    rhos = _rhos(cfg["rhos"]) if "rhos" in cfg else list(opt.grid_rho)
    rows = []
    for rho in rhos:
        rep = regions.leakage_exponent(rho, r_i, r_p, joint)
        rows.append({"rho": rho, "log_term": rep.log_term, "value": rep.value})
    summary = {"r_i": r_i, "r_p": r_p, "rho_star": opt.rho, "value": opt.value,
               "decays": opt.value < 0}
    return EXIT_OK, summary, rows


def _maps(cfg: dict, layout: families.MessageLayout) -> list:
    if "f" in cfg and "family" in cfg:
        raise InputError("give either f or family, not both")
    if "f" in cfg:
        f = cfg["f"]
        if f == "identity":
            return [np.arange(layout.size)]
        if isinstance(f, dict):
            _require(f, {"matrix", "permutation"}, where="f")
            if "matrix" in f:
                return [gf.GFMatrix(f["matrix"], layout.q)]
            return [np.array(f["permutation"], dtype=np.int64)]
        raise InputError("f must be 'identity', {'matrix': ...} or {'permutation': ...}")
    doc = cfg.get("family", {"kind": families.BIJECTIVE_LINEAR})
    fam = families.HashFamily.from_json({"q": layout.q, "dims": list(layout.dims), **doc})
    if fam.kind == families.BIJECTIVE_LINEAR:
        return fam.matrices()
    return list(fam.tables())


def _codebooks(cfg: dict, spec, n: int, n_e: int, n_b: int, seed: int | None) -> list[simulator.Codebook]:
    books = cfg.get("codebooks", 1)
    if isinstance(books, list):
        out = [simulator.Codebook.from_json(b) for b in books]
        for cb in out:
            if cb.n != n or cb.n_e != n_e or cb.n_b != n_b:
                raise InputError(f"explicit codebook shape {(cb.n_e, cb.n_b, cb.n)} != {(n_e, n_b, n)}")
        return out
    if seed is None:
        raise InputError("simulate draws random codebooks and needs --seed")
    return [
        simulator.build_codebook(n, spec.p_u, spec.p_v_given_u, n_e, n_b, np.random.default_rng([seed, j]))
        for j in range(int(books))
    ]


def cmd_simulate(cfg: dict, args):
    _require(cfg, {"layout", "n", "markov", "bob", "eve", "common_messages", "codebooks", "f", "family",
                   "rhos", "subsets", "e_dist", "eve_knows_common", "thresholds"},
             {"layout", "n", "markov", "bob", "eve"})
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise InputError("simulate needs --seed")
    named = _named_channels(cfg)
    lay_doc = cfg["layout"]
    _require(lay_doc, {"q", "dims"}, {"q", "dims"}, "layout")
    layout = families.MessageLayout(int(lay_doc["q"]), tuple(lay_doc["dims"]))
    spec = markov_from_json(cfg["markov"], named)
    bob, eve = _channel(cfg, "bob", named), _channel(cfg, "eve", named)
    n = int(cfg["n"])
    n_e = int(cfg.get("common_messages", 1))
    subsets = _subsets(layout, cfg.get("subsets"))
    books = _codebooks(cfg, spec, n, n_e, layout.size, int(seed))
    maps = _maps(cfg, layout)
    e_dist = cfg.get("e_dist")
    knows = bool(cfg.get("eve_knows_common", False))
    cands = simulator.evaluate_candidates(maps, books, layout, spec.p_x_given_v, bob, eve, subsets,
                                          e_dist, knows, threads=args.threads)
    thresholds = cfg.get("thresholds")
    search = simulator.existence_search(cands, layout.T, thresholds)
    pick = search.best or cands[0]
    config = simulator.EncoderConfig(layout, maps[pick.f_index], books[pick.codebook_index], spec.p_x_given_v)
    report = simulator.leakage_report(config, bob, eve, subsets, e_dist, knows, spec)
    summary = {
        "seed": int(seed),
        "n": n,
        "r_p": report.r_p,
        "bob_error": report.bob_error,
        "bcd_error": simulator.bcd_error_probability(config.codebook, spec.p_x_given_v, bob, e_dist),
        "candidates": len(cands),
        "search": search.to_json(),
    }
    ok = search.found
    if "rhos" in cfg:
        checks = []
        for s in subsets:
            checks += [r.to_json() for r in simulator.bound_check(
                cands, books, layout, spec, eve, s, _rhos(cfg["rhos"]), e_dist)]
        for c in checks:
            c["subset"] = regions.subset_label(c["subset"])
        summary["bound_check"] = checks
        ok = ok and all(c["passed"] for c in checks)
    summary["passed"] = ok
    rows = report.rows()
    for row in rows:
        row["f_index"] = pick.f_index
        row["codebook_index"] = pick.codebook_index
    return (EXIT_OK if ok else EXIT_FAIL), summary, rows


COMMANDS = {
    ("hash", "verify"): cmd_hash_verify,
    ("pa", "check"): cmd_pa_check,
    ("psi",): cmd_psi,
    ("phi",): cmd_phi,
    ("region", "scan"): cmd_region_scan,
    ("region", "member"): cmd_region_member,
    ("exponent",): cmd_exponent,
    ("simulate",): cmd_simulate,
}


# -- output -----------------------------------------------------------------------

def _to_bits(obj):
    if isinstance(obj, dict):
        return {k: (v / math.log(2) if k in NATS_KEYS and isinstance(v, float) else _to_bits(v))
                for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_bits(v) for v in obj]
    return obj


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.12g" % v
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return str(v)


def render(command: str, summary: dict, rows: list[dict], fmt: str, bits: bool) -> str:
    summary, rows = _plain(summary), _plain(rows)
    if bits:
        summary, rows = _to_bits(summary), _to_bits(rows)
    if fmt == "json":
        doc = {"command": command, "units": "bits" if bits else "nats", "summary": summary, "rows": rows}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    header: list[str] = []
    for row in rows:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".secmux-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- argument parsing ---------------------------------------------------------------

def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=_u64, default=None, help="64-bit seed (required by simulate)")
    common.add_argument("--out", default=None, help="output file, written atomically (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=_positive, default=1, help="worker cap for parallel stages")
    common.add_argument("--bits", action="store_true", help="report information in bits instead of nats")

    parser = argparse.ArgumentParser(prog="secmux", description="Secure multiplex coding toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="group", required=True)

    hash_p = sub.add_parser("hash", help="hash family checks")
    hash_sub = hash_p.add_subparsers(dest="action", required=True)
    hash_sub.add_parser("verify", parents=[common], help="two-universality and orbit criterion")

    pa_p = sub.add_parser("pa", help="privacy amplification")
    pa_sub = pa_p.add_subparsers(dest="action", required=True)
    pa_sub.add_parser("check", parents=[common], help="exact left side against the bound")

    sub.add_parser("psi", parents=[common], help="evaluate psi on a rho grid")
    sub.add_parser("phi", parents=[common], help="evaluate phi on a rho grid")

    reg_p = sub.add_parser("region", help="rate regions")
    reg_sub = reg_p.add_subparsers(dest="action", required=True)
    reg_sub.add_parser("scan", parents=[common], help="lattice scan of Markov chains")
    reg_sub.add_parser("member", parents=[common], help="membership certificate for one chain")

    sub.add_parser("exponent", parents=[common], help="leakage exponent over rho")
    sub.add_parser("simulate", parents=[common], help="exact desk-scale multiplex coding run")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    key = (args.group,) + ((args.action,) if getattr(args, "action", None) else ())
    name = " ".join(key)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
        code, summary, rows = COMMANDS[key](cfg, args)
        text = render(name, summary, rows, args.format, args.bits)
    except GuardError as exc:
        print(f"secmux {name}: {exc} (set SECMUX_GUARD_OVERRIDE to raise it)", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, KeyError, TypeError, OSError, SecmuxError) as exc:
        # JSONDecodeError is a ValueError
        print(f"secmux {name}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
