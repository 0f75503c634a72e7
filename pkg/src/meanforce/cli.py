"""Command-line front end: config-driven scans with reproducible artifacts.

Every command reads one INI config, materializes all defaults, echoes the
resolved configuration into each output's metadata header, and writes CSV
(plus gnuplot two-column .dat) files.  Re-running a command with the same
config yields byte-identical CSV bodies; only the timestamp comment line
may differ.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import gmpy2

from . import __version__
from .errors import MeanForceError, UsageError
from .fits import OperatorFamily, fit_beta_exponent, fit_skin_depth, fit_skin_law
from .hmf import (
    HmfCalculator,
    deviation_table,
    entanglement_hamiltonian,
    rescaled_distance,
)
from .model import build_xxz, bipartition
from .pauli import (
    PauliString,
    distance,
    enumerate_pauli,
    sign_excludes,
    witnessing_assignment,
)
from .series import (
    SeriesCalculator,
    default_k0_tol,
    k0_lower_bound,
    k0_numeric,
    series_deviation_table,
)
from .pauli import conjecture_k0
from .xlinalg import workprec

COMMANDS = (
    "scan-beta",
    "scan-distance",
    "series",
    "selection-rules",
    "ent-compare",
    "scan-coupling",
    "fit",
)

_DEFAULTS = {
    "model": {
        "L": "6",
        "J": "1.0",
        "delta": "0.95",
        "hx": "0.0",
        "hz": "0.0",
        "disorder_seed": "",
    },
    "bipartition": {
        "L_A": "4",
        "j_ab_scale": "1.0",
    },
    "scan": {
        "betas": "0.1 0.5 1.0",
        "beta": "0.5",
        "families": "",
        "n_body_max": "2",
        "k_max": "4",
        "couplings": "0.1 0.2 0.4 0.7 1.0",
        "exponent_window": "1e-3 1e-2",
        "gap_tol": "1e-10",
    },
    "run": {
        "precision": "106",
        "threads": "1",
        "out": "out",
    },
}


@dataclass
class RunConfig:
    """Fully resolved run configuration; echoed into every output header."""

    L: int
    J: float
    delta: float
    hx: float
    hz: float
    disorder_seed: Optional[int]
    L_A: int
    j_ab_scale: float
    betas: tuple[float, ...]
    beta: float
    families: tuple[str, ...]
    n_body_max: int
    k_max: int
    couplings: tuple[float, ...]
    exponent_window: tuple[float, float]
    gap_tol: float
    precision: int
    threads: int
    out: str

    def echo_items(self) -> list[tuple[str, str]]:
        def fmt(v):
            if isinstance(v, tuple):
                return " ".join(repr(x) for x in v)
            if v is None:
                return ""
            return repr(v) if isinstance(v, float) else str(v)

        keys = [
            "L", "J", "delta", "hx", "hz", "disorder_seed",
            "L_A", "j_ab_scale",
            "betas", "beta", "families", "n_body_max", "k_max",
            "couplings", "exponent_window", "gap_tol",
            "precision", "threads", "out",
        ]
        return [(k, fmt(getattr(self, k))) for k in keys]


def _floats(text: str, path: str) -> tuple[float, ...]:
    toks = text.replace(",", " ").split()
    try:
        return tuple(float(t) for t in toks)
    except ValueError as exc:
        raise UsageError(f"config {path}: expected numbers, got {text!r}") from exc


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (L vs L_A)
    parser.read_dict(_DEFAULTS)
    if path is not None:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        parser.read(path)
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise UsageError(f"config section [{section}] is not recognized")
        for key in parser[section]:
            if key not in _DEFAULTS[section]:
                raise UsageError(f"config {section}.{key} is not recognized")

    def get(section, key):
        return parser.get(section, key)

    try:
        seed_text = get("model", "disorder_seed").strip()
        window = _floats(get("scan", "exponent_window"), "scan.exponent_window")
        if len(window) != 2:
            raise UsageError("config scan.exponent_window: expected two numbers")
        cfg = RunConfig(
            L=int(get("model", "L")),
            J=float(get("model", "J")),
            delta=float(get("model", "delta")),
            hx=float(get("model", "hx")),
            hz=float(get("model", "hz")),
            disorder_seed=int(seed_text) if seed_text else None,
            L_A=int(get("bipartition", "L_A")),
            j_ab_scale=float(get("bipartition", "j_ab_scale")),
            betas=_floats(get("scan", "betas"), "scan.betas"),
            beta=float(get("scan", "beta")),
            families=tuple(
                f.strip() for f in get("scan", "families").split("|") if f.strip()
            ),
            n_body_max=int(get("scan", "n_body_max")),
            k_max=int(get("scan", "k_max")),
            couplings=_floats(get("scan", "couplings"), "scan.couplings"),
            exponent_window=(window[0], window[1]),
            gap_tol=float(get("scan", "gap_tol")),
            precision=int(get("run", "precision")),
            threads=int(get("run", "threads")),
            out=get("run", "out"),
        )
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if not 2 <= cfg.L:
        raise UsageError("config model.L: need L >= 2")
    if not 1 <= cfg.L_A < cfg.L:
        raise UsageError("config bipartition.L_A: need 1 <= L_A < L")
    if cfg.precision < 24:
        raise UsageError("config run.precision: need >= 24 bits")
    if cfg.threads < 1:
        raise UsageError("config run.threads: need >= 1")
    return cfg


# -- output plumbing -------------------------------------------------------


def _num(x) -> str:
    """Deterministic scientific rendering of an mpfr/float, 32 digits."""
    with workprec(113):
        v = gmpy2.mpfr(x)
        if v == 0:
            return "0.0e+00"
        digits, exp, _prec = gmpy2.digits(v, 10, 32)
        sign = "-" if digits.startswith("-") else ""
        mant = digits.lstrip("-")
        return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+03d}"


class ArtifactWriter:
    """CSV/.dat writer with provenance headers and deterministic bodies."""

    def __init__(self, cfg: RunConfig, command: str, out_dir: Path):
        self.cfg = cfg
        self.command = command
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)

    def _header_lines(self) -> list[str]:
        lines = [
            f"# meanforce {__version__}",
            f"# command {self.command}",
        ]
        for k, v in self.cfg.echo_items():
            lines.append(f"# config {k} = {v}")
        lines.append(
            "# timestamp "
            + datetime.datetime.now(datetime.timezone.utc).isoformat()
        )
        return lines

    def write_csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence]):
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            for line in self._header_lines():
                fh.write(line + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow(row)
        return path

    def write_dat(self, name: str, pairs: Sequence[tuple]):
        path = self.out_dir / name
        with open(path, "w") as fh:
            for line in self._header_lines():
                fh.write(line + "\n")
            for x, y in pairs:
                fh.write(f"{x} {y}\n")
        return path


# -- shared model assembly -------------------------------------------------


def _build(cfg: RunConfig, j_ab_scale: Optional[float] = None):
    spec = build_xxz(
        cfg.L, cfg.J, cfg.delta, hx=cfg.hx, hz=cfg.hz, disorder_seed=cfg.disorder_seed
    )
    scale = cfg.j_ab_scale if j_ab_scale is None else j_ab_scale
    return spec, bipartition(spec, cfg.L_A, j_ab_scale=scale)


def _operators(cfg: RunConfig) -> list[PauliString]:
    """Scan surface: family members if families are given, else all strings
    up to n_body_max."""
    if cfg.families:
        ops: dict[PauliString, None] = {}
        for text in cfg.families:
            fam = OperatorFamily.from_text(text)
            for _d, op in fam.members(cfg.L_A, cfg.L_A):
                ops[op] = None
        return list(ops)
    out = []
    for n in range(1, min(cfg.n_body_max, cfg.L_A) + 1):
        out.extend(enumerate_pauli(cfg.L_A, n))
    return out


def _coeff_rows(table, L_A: int, beta_label: str, key_label: str):
    rows = []
    for op, c in table.sorted_items():
        if op.is_identity:
            continue
        rows.append(
            [
                op.to_text(),
                op.n_body,
                distance(op, L_A),
                beta_label,
                _num(c),
                int(abs(c) < table.floor),
            ]
        )
    return rows


COEFF_COLUMNS = ("operator", "n_body", "distance", "beta", "coefficient", "below_floor")


# -- commands --------------------------------------------------------------


def cmd_scan_beta(cfg: RunConfig, writer: ArtifactWriter) -> int:
    spec, bip = _build(cfg)
    calc = HmfCalculator(bip, precision=cfg.precision)
    ops = _operators(cfg)
    calc.full_decomposition()  # share the cached eigensystem across threads

    def one(beta: float):
        res = calc.hmf(beta)
        return deviation_table(res, bip.h_a, ops)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        tables = list(pool.map(one, cfg.betas))
    rows = []
    for beta, table in zip(cfg.betas, tables):
        rows.extend(_coeff_rows(table, cfg.L_A, repr(beta), "beta"))
    rows.sort(key=lambda r: (float(r[3]), r[0]))
    writer.write_csv("scan_beta.csv", COEFF_COLUMNS, rows)
    # one .dat per operator: (beta, |c|)
    by_op: dict[str, list] = {}
    for r in rows:
        by_op.setdefault(r[0], []).append((r[3], r[4]))
    for op_text, pairs in sorted(by_op.items()):
        fname = "beta_" + op_text.replace(" ", "_").lower() + ".dat"
        writer.write_dat(fname, [(b, abs(float(c))) for b, c in pairs])
    return 0


def cmd_scan_distance(cfg: RunConfig, writer: ArtifactWriter) -> int:
    spec, bip = _build(cfg)
    calc = HmfCalculator(bip, precision=cfg.precision)
    res = calc.hmf(cfg.beta)
    ops = _operators(cfg)
    table = deviation_table(res, bip.h_a, ops)
    rows = _coeff_rows(table, cfg.L_A, repr(cfg.beta), "beta")
    rows.sort(key=lambda r: (r[2], r[0]))
    writer.write_csv("scan_distance.csv", COEFF_COLUMNS, rows)
    for text in cfg.families or ():
        fam = OperatorFamily.from_text(text)
        pairs = []
        for d, op in fam.members(cfg.L_A, cfg.L_A):
            c = table.entries.get(PauliString(op.factors, cfg.L_A))
            if c is not None:
                pairs.append((d, abs(float(c))))
        fname = "distance_" + text.replace(" ", "_").lower() + ".dat"
        writer.write_dat(fname, pairs)
    return 0


def cmd_series(cfg: RunConfig, writer: ArtifactWriter) -> int:
    spec, bip = _build(cfg)
    sc = SeriesCalculator(bip, precision=cfg.precision, k_guard=max(cfg.k_max, 12))
    ops = _operators(cfg)
    coeffs = [sc.series_coefficient(k) for k in range(cfg.k_max + 1)]
    tables = {
        c.order: series_deviation_table(c, bip.h_a, ops) for c in coeffs
    }
    rows = []
    for k in sorted(tables):
        rows.extend(_coeff_rows(tables[k], cfg.L_A, str(k), "k"))
    columns = ("operator", "n_body", "distance", "k", "c_k", "below_floor")
    writer.write_csv("series_orders.csv", columns, rows)

    tol = default_k0_tol(coeffs)
    h_terms = [s for _c, s in bip.scaled_spec().terms]
    report_rows = []
    for op in sorted(ops, key=lambda o: o.to_text()):
        if op.is_identity:
            continue
        op_full = PauliString(op.factors, cfg.L)
        k0n = k0_numeric(tables, op, tol)
        k0c = conjecture_k0(h_terms, op_full, cfg.k_max, cfg.L_A)
        report_rows.append(
            [
                op.to_text(),
                "" if k0n is None else k0n,
                k0_lower_bound(op, cfg.L_A),
                "" if k0c is None else k0c,
            ]
        )
    writer.write_csv(
        "series_report.csv",
        ("operator", "k0_numeric", "k0_bound", "k0_conjecture"),
        report_rows,
    )
    return 0


def cmd_selection_rules(cfg: RunConfig, writer: ArtifactWriter) -> int:
    spec, bip = _build(cfg)
    calc = HmfCalculator(bip, precision=cfg.precision)
    ops = _operators(cfg)
    h_terms = [s for _c, s in bip.scaled_spec().terms]
    tables = [
        deviation_table(calc.hmf(beta), bip.h_a, ops) for beta in cfg.betas
    ]
    rows = []
    for op in sorted(ops, key=lambda o: o.to_text()):
        key = PauliString(op.factors, cfg.L_A)
        op_full = PauliString(op.factors, cfg.L)
        witness = witnessing_assignment(h_terms, op_full)
        with workprec(cfg.precision):
            peak = max(abs(t.entries[key]) for t in tables)
        rows.append(
            [
                op.to_text(),
                op.n_body,
                distance(op, cfg.L_A),
                int(witness is not None),
                witness.plus_axis if witness else "",
                _num(peak),
                int(all(t.below_floor(key) for t in tables)),
            ]
        )
    writer.write_csv(
        "selection_rules.csv",
        (
            "operator",
            "n_body",
            "distance",
            "excluded",
            "witness_plus_axis",
            "max_abs_coefficient",
            "below_floor_all_beta",
        ),
        rows,
    )
    return 0


def cmd_ent_compare(cfg: RunConfig, writer: ArtifactWriter) -> int:
    spec, bip = _build(cfg)
    calc = HmfCalculator(bip, precision=cfg.precision)
    ent = entanglement_hamiltonian(
        spec, cfg.L_A, gap_tol=cfg.gap_tol, precision=cfg.precision
    )
    rows = []
    pairs = []
    for beta in cfg.betas:
        res = calc.hmf(beta)
        dist = rescaled_distance(res, ent)
        rows.append([repr(beta), _num(dist)])
        pairs.append((repr(beta), float(dist)))
    writer.write_csv(
        "ent_compare.csv",
        ("beta", "rescaled_distance"),
        rows,
    )
    writer.write_dat("ent_compare.dat", pairs)
    writer.write_csv(
        "ent_meta.csv",
        ("gs_degeneracy", "reduced_rank", "regularization_eps", "gap_tol"),
        [
            [
                ent.gs_degeneracy,
                ent.reduced_rank,
                _num(ent.regularization_eps),
                repr(ent.gap_tol),
            ]
        ],
    )
    return 0


def cmd_scan_coupling(cfg: RunConfig, writer: ArtifactWriter) -> int:
    if not cfg.families:
        raise UsageError("scan-coupling needs scan.families (at least one pattern)")
    rows = []
    dat_pairs: dict[str, list] = {t: [] for t in cfg.families}
    for coupling in cfg.couplings:
        spec, bip = _build(cfg, j_ab_scale=coupling)
        calc = HmfCalculator(bip, precision=cfg.precision)
        res = calc.hmf(cfg.beta)
        ops = _operators(cfg)
        table = deviation_table(res, bip.h_a, ops)
        for text in cfg.families:
            fam = OperatorFamily.from_text(text)
            fit = fit_skin_depth(table, fam)
            rows.append(
                [
                    repr(coupling),
                    text,
                    repr(fit.d_c),
                    repr(fit.slope),
                    repr(fit.intercept),
                    repr(fit.r_squared),
                    fit.points_used,
                    fit.excluded_below_floor,
                ]
            )
            dat_pairs[text].append((coupling, fit.d_c))
    writer.write_csv(
        "scan_coupling.csv",
        (
            "coupling",
            "family",
            "d_c",
            "slope",
            "intercept",
            "r_squared",
            "points_used",
            "excluded_below_floor",
        ),
        rows,
    )
    for text, pairs in dat_pairs.items():
        fname = "coupling_" + text.replace(" ", "_").lower() + ".dat"
        writer.write_dat(fname, pairs)
    return 0


def _read_scan_beta(path: Path):
    if not path.is_file():
        raise UsageError(
            f"fit needs {path} (run scan-beta with the same --out first)"
        )
    rows = []
    with open(path) as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        idx = {name: i for i, name in enumerate(header)}
        for rec in reader:
            rows.append(
                {
                    "operator": rec[idx["operator"]],
                    "beta": float(rec[idx["beta"]]),
                    "coefficient": float(rec[idx["coefficient"]]),
                    "below_floor": rec[idx["below_floor"]] == "1",
                }
            )
    return rows


def cmd_fit(cfg: RunConfig, writer: ArtifactWriter) -> int:
    """Consume a prior scan_beta.csv: per-family skin depths at each beta,
    the skin-depth law across beta, and small-beta exponents per operator."""
    if not cfg.families:
        raise UsageError("fit needs scan.families (at least one pattern)")
    records = _read_scan_beta(writer.out_dir / "scan_beta.csv")
    by_beta_op: dict[float, dict[str, float]] = {}
    for r in records:
        by_beta_op.setdefault(r["beta"], {})[r["operator"]] = r["coefficient"]
    betas = sorted(by_beta_op)
    fit_rows = []
    law_rows = []
    for text in cfg.families:
        fam = OperatorFamily.from_text(text)
        members = fam.members(cfg.L_A, cfg.L_A)
        dc_samples = []
        for beta in betas:
            coeffs = by_beta_op[beta]
            pts = []
            for d, op in members:
                c = coeffs.get(op.to_text())
                if c is not None and c != 0.0:
                    pts.append((d, c))
            if len(pts) < 2:
                continue
            from .fits import least_squares

            slope, intercept, r2 = least_squares(
                [p[0] for p in pts], [math.log(abs(p[1])) for p in pts]
            )
            d_c = -1.0 / slope
            fit_rows.append(
                [text, "skin_depth", repr(beta), repr(d_c), repr(slope), repr(r2), len(pts)]
            )
            if d_c > 0:
                dc_samples.append((beta, d_c))
        if len(dc_samples) >= 3:
            law = fit_skin_law(dc_samples)
            law_rows.append(
                [
                    text,
                    repr(law.slope),
                    repr(law.intercept),
                    repr(law.r_squared),
                    law.points_used,
                ]
            )
        # small-beta exponent per member, over the configured window
        lo, hi = cfg.exponent_window
        for d, op in members:
            samples = [
                (beta, by_beta_op[beta].get(op.to_text()))
                for beta in betas
                if lo <= beta <= hi
            ]
            samples = [(b, c) for b, c in samples if c is not None and c != 0.0]
            if len(samples) >= 3:
                res = fit_beta_exponent(samples)
                fit_rows.append(
                    [
                        op.to_text(),
                        "beta_exponent",
                        f"{lo!r}..{hi!r}",
                        repr(res.slope),
                        repr(res.intercept),
                        repr(res.r_squared),
                        res.points_used,
                    ]
                )
    writer.write_csv(
        "fits.csv",
        ("family", "kind", "beta", "value", "slope_or_intercept", "r_squared", "points"),
        fit_rows,
    )
    writer.write_csv(
        "skin_law.csv",
        ("family", "slope", "a", "r_squared", "points"),
        law_rows,
    )
    return 0


_DISPATCH = {
    "scan-beta": cmd_scan_beta,
    "scan-distance": cmd_scan_distance,
    "series": cmd_series,
    "selection-rules": cmd_selection_rules,
    "ent-compare": cmd_ent_compare,
    "scan-coupling": cmd_scan_coupling,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanforce",
        description="Mean-force Hamiltonian scans for spin-1/2 chain segments.",
    )
    parser.add_argument(
        "--config",
        default=os.environ.get("MEANFORCE_CONFIG"),
        help="INI config file (defaults applied for missing keys)",
    )
    parser.add_argument(
        "--command",
        default=os.environ.get("MEANFORCE_COMMAND"),
        choices=COMMANDS,
        help="what to run",
    )
    parser.add_argument(
        "--out",
        default=os.environ.get("MEANFORCE_OUT"),
        help="output directory (overrides run.out)",
    )
    parser.add_argument(
        "--precision",
        type=int,
        default=_env_int("MEANFORCE_PRECISION"),
        help="mantissa bits (overrides run.precision)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=_env_int("MEANFORCE_THREADS"),
        help="worker threads for scan jobs (overrides run.threads)",
    )
    return parser


def _env_int(name: str) -> Optional[int]:
    v = os.environ.get(name)
    return int(v) if v else None


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command is None:
            raise UsageError("--command is required (or set MEANFORCE_COMMAND)")
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.precision is not None:
            overrides["precision"] = args.precision
        if args.threads is not None:
            overrides["threads"] = args.threads
        cfg = load_config(args.config, overrides)
        writer = ArtifactWriter(cfg, args.command, Path(cfg.out))
        return _DISPATCH[args.command](cfg, writer)
    except MeanForceError as exc:
        print(f"meanforce: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
