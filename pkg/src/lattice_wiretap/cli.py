"""Command-line entry point: ``lattice-wiretap <subcommand> --config cfg.json``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import re
import sys
import time
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis as an
from . import channel as ch
from . import gaussian as ga
from . import lattice as la
from . import numberfield as nf
from . import receiver as rc
from . import verify as vf
from . import wiretap as wt

SUBCOMMANDS = ("analyze-lattice", "design-code", "simulate", "bounds", "verify")

COLUMNS = {
    "analyze-lattice": ["seed", "field", "k", "quantity", "sigma", "value_lo", "value_hi"],
    "design-code": [
        "seed", "field", "k", "P", "index", "R_target", "R", "R_prime", "R_b", "alpha_b", "alpha_e",
        "alpha_e_rate_formula", "G_eff", "rprime_floor", "eps_coarse_hi", "flatness_ok", "C_e", "rprime_condition",
    ],
    "simulate": [
        "seed", "snr", "snr_db", "trials", "errors", "p_e", "ci_lo", "ci_hi", "bound_two_term",
        "bound_empirical_term1", "term1_analytic_min", "term1_display_min", "dR2_amgm_unit_fading",
        "leakage_bound", "outage_probability", "outage_term", "conditional_term", "empirical_leakage",
    ],
    "bounds": ["seed", "check", "case", "measured", "bound", "ok"],
    "verify": ["seed", "check", "case", "value", "reference", "ok"],
}


class ConfigError(ValueError):
    pass


# -- config -----------------------------------------------------------------

def _data(name: str) -> str:
    return resources.files("lattice_wiretap").joinpath("data", name).read_text(encoding="utf-8")


def default_config_text() -> str:
    return _data("default_config.json")


def _line_of(text: str, path) -> int:
    """Best-effort line of the JSON node at ``path`` (keys are located textually)."""
    pos = 0
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = m.start()
    return text.count("\n", 0, pos) + 1


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}: invalid JSON: {e.msg}") from None
    schema = json.loads(_data("config.schema.json"))
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        where = "/".join(str(p) for p in path) or "(root)"
        raise ConfigError(f"{source}:{_line_of(text, path)}: {where}: {e.message}")
    fields = nf.catalog()
    if cfg["field_name"] not in fields:
        raise ConfigError(
            f"{source}:{_line_of(text, ['field_name'])}: field_name: unknown field {cfg['field_name']!r}; "
            f"catalog has {sorted(fields)}"
        )
    k = fields[cfg["field_name"]].k
    if "k" in cfg and cfg["k"] != k:
        raise ConfigError(f"{source}:{_line_of(text, ['k'])}: k: field {cfg['field_name']} has k={k}")
    for side in ("bob", "eve"):
        blk = cfg[side]
        if blk["kind"] == "static" and len(blk.get("h", [])) != k:
            raise ConfigError(f"{source}:{_line_of(text, [side, 'h'])}: {side}/h: static channel needs {k} coefficients")
    if not cfg["bob"].get("snr_grid"):
        raise ConfigError(f"{source}:{_line_of(text, ['bob'])}: bob: snr_grid is required")
    return cfg


def _model(blk: dict, noise: float | None = None) -> ch.ChannelModel:
    nv = noise if noise is not None else float(blk.get("noise_variance", 1.0))
    h = [complex(a, b) for a, b in blk.get("h", [])]
    return ch.ChannelModel(blk["kind"], nv, tuple(h))


def _nesting(cfg: dict):
    spec = cfg.get("nesting_spec")
    if spec is None:
        return None
    if "integer" in spec:
        return int(spec["integer"])
    return [str(v) for v in spec["element"]]


def _code(cfg: dict, C_e: float | None = None) -> wt.WiretapCode:
    return wt.design_code(cfg["field_name"], cfg["P"], cfg.get("R_target"), cfg["R_prime"], _nesting(cfg), C_e=C_e)


def _eve_capacity(cfg: dict) -> float:
    eve = _model(cfg["eve"])
    return ch.exact_capacity(eve, cfg["P"] / eve.noise_variance)


# -- subcommands ------------------------------------------------------------

def cmd_analyze_lattice(cfg: dict, seed: int, threads: int):
    field = nf.get_field(cfg["field_name"])
    k = field.k
    ring = la.from_ring(field)
    dual_ideal = nf.codifferent(field)
    lam = la.shortest_vector(ring).length
    lam_dual_ideal = la.shortest_vector(la.from_ideal(field, dual_ideal)).length
    lam_dual = la.shortest_vector(la.dual(ring)).length
    eta = ga.smoothing_parameter(ring, 2.0 ** (-2 * k))
    rows = [
        [seed, field.name, k, "volume", None, ring.volume, ring.volume],
        [seed, field.name, k, "lambda1_ring", None, lam, lam],
        [seed, field.name, k, "lambda1_codifferent", None, lam_dual_ideal, lam_dual_ideal],
        [seed, field.name, k, "lambda1_dual", None, lam_dual, lam_dual],
        [seed, field.name, k, "smoothing_2^-2k", None, eta, eta],
    ]
    curve = []
    for s in cfg.get("sigma_grid", [0.5, 1.0, 2.0]):
        e = ga.flatness_factor(ring, s)
        rows.append([seed, field.name, k, "flatness", s, e.lo, e.hi])
        curve.append({"sigma": s, "eps": [e.lo, e.hi]})
    report = {
        "field": field.name,
        "k": k,
        "discriminant": field.discriminant,
        "root_discriminant": field.root_discriminant,
        "volume": ring.volume,
        "volume_formula": 2.0 ** (-k) * math.sqrt(abs(field.discriminant)),
        "lambda1_ring": lam,
        "lambda1_codifferent": lam_dual_ideal,
        "lambda1_dual": lam_dual,
        "dual_matches_2conj_codifferent": la.unimodular_equivalent(
            la.dual(ring), la.conjugate(la.from_ideal(field, dual_ideal, 2.0))
        ),
        "smoothing_parameter_2^-2k": eta,
        "flatness_curve": curve,
    }
    return rows, report, True


def cmd_design_code(cfg: dict, seed: int, threads: int):
    c_e = _eve_capacity(cfg)
    code = _code(cfg, C_e=c_e)
    r = code.report()
    row = [
        seed, code.field.name, code.k, code.P, code.index, code.R_target, code.R, code.R_prime, code.R_b,
        code.alpha_b, code.alpha_e, code.alpha_e_rate_formula, code.G_eff, r["rprime_floor"], code.eps_coarse.hi,
        code.flatness_ok, c_e, code.rprime_condition,
    ]
    report = {"code": r, "descriptor": code.descriptor(seed)}
    return [row], report, True


def cmd_simulate(cfg: dict, seed: int, threads: int):
    code = _code(cfg)
    eve = _model(cfg["eve"])
    delta = float(cfg.get("delta", 0.5))
    c_e = ch.exact_capacity(eve, code.P / eve.noise_variance)
    dec = an.leakage_decomposition(code, eve, c_e, delta, int(cfg["trials"]), ch.spawn_rng(seed, 1 << 32))
    h_unit = np.ones(code.k)
    ff = an.faded_flatness(code, h_unit, code.P, eve.noise_variance)
    lb = an.leakage_bound(ff.eps.hi, code.k, code.R) if ff.eps.hi <= 0.5 else None
    emp = None
    if cfg.get("empirical_leakage") and code.k <= 2 and code.index <= 16:
        emp = an.empirical_leakage(code, h_unit, eve.noise_variance).value
    rows, per_snr = [], []
    for snr in cfg["bob"]["snr_grid"]:
        bob = _model(cfg["bob"], code.P / snr)
        rep = rc.error_rate(code, bob, snr, int(cfg["trials"]), seed=seed, threads=threads)
        d2 = rc.amgm_bound_sq(code, h_unit, snr)
        rows.append([
            seed, float(snr), 10 * math.log10(snr), rep.trials, rep.errors, rep.p_e, rep.ci[0], rep.ci[1],
            rep.bound, rep.bound_empirical, min(rep.term1_analytic), min(rep.term1_display), d2,
            lb, dec.outage_probability, dec.outage_term, dec.conditional_term, emp,
        ])
        per_snr.append({k: v for k, v in rep._asdict().items()})
    report = {
        "code": code.report(),
        "eve": {"C_e": c_e, "delta": delta, "decomposition": dec._asdict(),
                "faded_flatness_unit_fading": [ff.eps.lo, ff.eps.hi], "leakage_bound": lb, "empirical_leakage": emp},
        "rows": per_snr,
    }
    return rows, report, True


def cmd_bounds(cfg: dict, seed: int, threads: int):
    code = _code(cfg)
    field = code.field
    eve = _model(cfg["eve"])
    draws = int(cfg.get("fading_draws", 20))
    rng = ch.spawn_rng(seed, 2)
    rows = []
    snr0 = float(cfg["bob"]["snr_grid"][0])
    tail_rows, _ = rc.tail_bound_check(code, np.ones(code.k), snr0, int(cfg.get("tail_trials", 20000)), rng)
    for t in tail_rows:
        rows.append([seed, "tail_exceedance", f"t={t.t!r} snr={snr0!r}", t.exceedance, t.bound + 3 * t.std_error, t.ok])
    for i in range(draws):
        h = ch.complex_normal(rng, code.k)
        md = rc.received_min_distance_bound(code, h, snr0)
        rows.append([seed, "dR2_vs_amgm", f"draw={i}", md.exact_sq, md.amgm_sq, md.exact_sq >= md.amgm_sq * (1 - 1e-9)])
        dc = an.dual_lambda1_check(field, h, code.P, eve.noise_variance)
        rows.append([seed, "faded_dual_lambda1", f"draw={i}", dc.lambda1, dc.bound, dc.ok])
    ff = an.faded_flatness(code, np.ones(code.k), code.P, eve.noise_variance)
    rows.append([seed, "faded_flatness_unit_fading", "h=1", ff.eps.hi, 2.0 ** (-2 * code.k), ff.eps.hi <= 2.0 ** (-2 * code.k) or not ff.condition])
    if ff.eps.hi <= 0.5:
        lb = an.leakage_bound(ff.eps.hi, code.k, code.R)
        if cfg.get("empirical_leakage") and code.k <= 2:
            emp = an.empirical_leakage(code, np.ones(code.k), eve.noise_variance)
            rows.append([seed, "empirical_leakage_vs_bound", "h=1", emp.value, lb, emp.value <= lb + emp.error])
    report = {"code": code.report(), "rows": [dict(zip(COLUMNS["bounds"], r)) for r in rows]}
    return rows, report, all(r[-1] for r in rows)


def cmd_verify(cfg: dict, seed: int, threads: int):
    checks = vf.run_all(cfg, seed)
    rows = [[seed, c.name, c.case, c.value, c.reference, c.ok] for c in checks]
    ok = all(c.ok for c in checks)
    report = {"passed": ok, "checks": [c._asdict() for c in checks]}
    return rows, report, ok


HANDLERS = {
    "analyze-lattice": cmd_analyze_lattice,
    "design-code": cmd_design_code,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
}


# -- output -----------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(command: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[command])
    for r in rows:
        if len(r) != len(COLUMNS[command]):
            raise AssertionError(f"row width {len(r)} != {len(COLUMNS[command])}")
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else repr(f)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("scipy", "mpmath", "jsonschema", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


def run(command: str, cfg: dict, seed: int, out_dir: Path, threads: int = 1) -> int:
    start = time.time()
    rows, report, ok = HANDLERS[command](cfg, seed, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = cfg.get("outputs", {})
    csv_name = outputs.get("csv", "{command}.csv").format(command=command)
    json_name = outputs.get("json", "{command}.json").format(command=command)
    with open(out_dir / csv_name, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(command, rows))
    full = {
        "command": command,
        "seed": seed,
        "config": cfg,
        "passed": ok,
        "csv_columns": COLUMNS[command],
        "csv_rows": rows,
        "report": report,
        "versions": _versions(),
        "wall_clock_seconds": time.time() - start,
    }
    with open(out_dir / json_name, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(full), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-wiretap", description="Algebraic lattice wiretap codes: design, bounds and simulation.")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="experiment JSON (default: the shipped default config)")
    p.add_argument("--seed", type=int, help="64-bit seed overriding the config seed")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo shards")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            text, source = default_config_text(), "default_config.json"
        else:
            text, source = args.config.read_text(encoding="utf-8"), str(args.config)
        cfg = parse_config(text, source)
        seed = cfg["seed"] if args.seed is None else args.seed
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg["seed"] = seed
        return run(args.command, cfg, seed, args.out, args.threads)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (wt.DesignRefused, ga.SamplerRefused, ga.Lemma1NotApplicable, la.TailNotCertified) as e:
        print(f"refused: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
