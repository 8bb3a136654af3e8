"""Command-line experiment runner.

    amenable-entropy <command> --config exp.yaml [--seed N] [--out PATH]
                     [--format json|csv] [--threads N] [--cache-dir DIR] [--bits]
    amenable-entropy replay RESULT.json [--threads N]

Exit codes: 0 success, 1 replay mismatch, 2 invalid input, 3 budget refusal.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .entropy import (
    EXACT,
    MONTE_CARLO,
    EntropyError,
    abramov_rokhlin_residual,
    chain_rule_decomposition,
    folner_entropy_rate,
    kieffer_pinsker_estimate,
    markov_kp_uniform_exact,
    predictability_profile,
    standard_window,
)
from .groups import (
    LATTICE,
    BudgetExceeded,
    GroupError,
    d_interior,
    folner_boundary_ratio,
    folner_window,
    interval,
)
from .orders import (
    IidUniform,
    OrderError,
    extend_uniform,
    invariance_statistic,
    linear_extensions_count,
    validate,
)
from .systems import Factored, MarginalCache, MarkovZ, ProcessError, set_default_cache

log = logging.getLogger("amenable_entropy")

COMMANDS = (
    "entropy-rate",
    "kp",
    "chain-check",
    "order-stats",
    "folner-audit",
    "predictability",
    "ar-check",
)

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


def _row(key, value, stderr=0.0, n_orders=1, mode=EXACT) -> dict:
    return {
        "key": key,
        "value_nats": float(value),
        "stderr": float(stderr),
        "n_orders": int(n_orders),
        "mode": mode,
    }


def _param(cfg: ExperimentConfig, name: str, default=None, cast=None):
    if name not in cfg.params:
        if default is None:
            raise ConfigError("required parameter missing", f"params.{name}")
        return default
    val = cfg.params[name]
    try:
        return cast(val) if cast else val
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {val!r}", f"params.{name}") from None


def _int_list(v):
    return [int(x) for x in v]


# ---------------------------------------------------------------------------
# commands


def cmd_entropy_rate(cfg: ExperimentConfig):
    table = folner_entropy_rate(
        cfg.process,
        _param(cfg, "n_list", cast=_int_list),
        cfg.factor,
        centered=bool(_param(cfg, "centered", False)),
        mode=_param(cfg, "mode", EXACT),
        n_samples=_param(cfg, "n_samples", 10**5, int),
        seed=cfg.seed,
    )
    return table.records(), {"nonincreasing": table.nonincreasing}


def cmd_kp(cfg: ExperimentConfig):
    D_list = _param(cfg, "D_list", [_param(cfg, "D", 1, int)], _int_list)
    n_orders = _param(cfg, "n_orders", 1, int)
    rows, verdicts = [], {}
    proc = cfg.process
    with_exact = (
        isinstance(cfg.order_model, IidUniform)
        and isinstance(proc, MarkovZ)
        and proc.initial is None
        and cfg.factor is None
    )
    for D in D_list:
        est = kieffer_pinsker_estimate(proc, cfg.order_model, D, n_orders, cfg.factor, threads=cfg.threads)
        rows.append(_row(D, est.value, est.stderr, est.n_orders, est.mode))
        if with_exact:
            exact = markov_kp_uniform_exact(proc, D)
            rows.append(_row(f"{D}/uniform-exact", exact))
            if est.mode == MONTE_CARLO:
                verdicts[f"D={D}:within_3_stderr"] = bool(abs(est.value - exact) <= 3 * est.stderr)
    return rows, verdicts


def cmd_chain_check(cfg: ExperimentConfig):
    radius = _param(cfg, "window_radius", 4, int)
    n_orders = _param(cfg, "n_orders", 100, int)
    window = interval(-radius, radius) if cfg.process.on_z else standard_window(cfg.group, radius)
    model = cfg.order_model
    rows, worst = [], 0.0
    count = 1 if getattr(model, "deterministic", False) else n_orders
    for t in range(count):
        order = model.sample(window, t)
        if not validate(order)[1]:
            order = extend_uniform(order, t, cfg.seed)
        res = chain_rule_decomposition(cfg.process, window, order, cfg.factor)
        worst = max(worst, res.gap)
        rows.append(_row(t, res.total))
    return rows, {"max_gap": worst, "chain_rule_identity": worst < 1e-9}


def cmd_order_stats(cfg: ExperimentConfig):
    size = _param(cfg, "window_radius", 1, int)
    n_samples = _param(cfg, "n_samples", 10**4, int)
    spec = cfg.group
    if spec.family == LATTICE and spec.dim == 1:
        window = interval(-size, size)
    else:
        window = folner_window(spec, size, centered=True)
    shifts = cfg.params.get("translations")
    if shifts is None:
        elems = spec.generators()
    else:
        elems = [spec.element(*s) if isinstance(s, list) else spec.element(s) for s in shifts]
    rows, verdicts = [], {}
    for i, g in enumerate(elems):
        st = invariance_statistic(cfg.order_model, window, g, n_samples)
        rows.append(_row(i, st.p_value, 0.0, n_samples, MONTE_CARLO))
        verdicts[f"translation_{i}:p_value"] = st.p_value
    order = cfg.order_model.sample(window, 0)
    is_partial, is_total = validate(order)
    verdicts["sample0_partial"] = is_partial
    verdicts["sample0_total"] = is_total
    if is_partial and len(window) <= 12:
        verdicts["sample0_linear_extensions"] = linear_extensions_count(order)
    verdicts["invariant_at_0.01"] = all(r["value_nats"] > 0.01 for r in rows)
    return rows, verdicts


def cmd_folner_audit(cfg: ExperimentConfig):
    n_list = _param(cfg, "n_list", cast=_int_list)
    spec = cfg.group
    rows, verdicts = [], {}
    ratios: dict[int, list[float]] = {}
    for n in n_list:
        for j, s in enumerate(spec.generators()):
            r = folner_boundary_ratio(spec, n, s)
            ratios.setdefault(j, []).append(r)
            rows.append(_row(f"n={n}/gen={j}", r))
    d_radius = cfg.params.get("d_radius")
    if d_radius is not None and spec.family == LATTICE and spec.dim == 1:
        fracs = []
        for n in n_list:
            w = folner_window(spec, n)
            D = [spec.element(x) for x in range(-int(d_radius), int(d_radius) + 1)]
            interior, _ = d_interior(w, D)
            fracs.append(len(interior) / len(w))
            rows.append(_row(f"n={n}/interior-fraction", fracs[-1]))
        verdicts["interior_fraction_increasing"] = all(b > a for a, b in zip(fracs, fracs[1:]))
    # a generator that fixes every box (the lamp toggle) stays at 0
    verdicts["ratios_decrease"] = all(v[-1] < v[0] or v[-1] == v[0] == 0 for v in ratios.values())
    return rows, verdicts


def cmd_predictability(cfg: ExperimentConfig):
    table, verdict = predictability_profile(
        cfg.process,
        cfg.order_model,
        cfg.factor,
        _param(cfg, "D_list", cast=_int_list),
        n_orders=_param(cfg, "n_orders", 1, int),
        eps=_param(cfg, "eps", 1e-6, float),
        threads=cfg.threads,
    )
    return table.records(), {"verdict": verdict}


def cmd_ar_check(cfg: ExperimentConfig):
    if cfg.factor is None:
        raise ConfigError("ar-check needs a factor", "factor")
    diagnostic = bool(_param(cfg, "diagnostic", False))
    table = abramov_rokhlin_residual(
        cfg.process, cfg.factor, _param(cfg, "n_list", cast=_int_list), diagnostic=diagnostic
    )
    worst = max(table.values) if table.rows else 0.0
    return table.records(), {"max_abs_residual": worst, "identity_holds": worst < 1e-9}


_DISPATCH = {
    "entropy-rate": cmd_entropy_rate,
    "kp": cmd_kp,
    "chain-check": cmd_chain_check,
    "order-stats": cmd_order_stats,
    "folner-audit": cmd_folner_audit,
    "predictability": cmd_predictability,
    "ar-check": cmd_ar_check,
}


# ---------------------------------------------------------------------------
# envelopes


def run(command: str, cfg: ExperimentConfig) -> dict:
    """Execute ``command`` and return the result envelope (not yet written)."""
    if command not in _DISPATCH:
        raise ConfigError(f"unknown command {command!r}", "command")
    if isinstance(cfg.process, Factored) and cfg.factor is not None:
        raise ConfigError("give the factor either in process or in factor, not both", "factor")
    set_default_cache(MarginalCache(cfg.cache_dir) if cfg.cache_dir else None)
    start = time.perf_counter()
    try:
        rows, verdicts = _DISPATCH[command](cfg)
    finally:
        set_default_cache(None)
    return {
        "version": __version__,
        "command": command,
        "config_digest": cfg.digest(),
        "config": cfg.canonical(),
        "seed": cfg.seed,
        "rows": rows,
        "verdicts": _plain(verdicts),
        "elapsed_ms": round((time.perf_counter() - start) * 1000, 3),
    }


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def payload_bytes(envelope: dict) -> bytes:
    """The deterministic part of an envelope: rows and verdicts."""
    body = {"rows": envelope["rows"], "verdicts": envelope["verdicts"]}
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def dumps_envelope(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True, indent=2) + "\n"


def rows_csv(rows: list[dict]) -> str:
    lines = ["key,value_nats,stderr,n_orders,mode"]
    for r in rows:
        lines.append(f"{r['key']},{r['value_nats']!r},{r['stderr']!r},{r['n_orders']},{r['mode']}")
    return "\n".join(lines) + "\n"


def write_result(envelope: dict, path: str | Path, fmt: str = "json"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_envelope(envelope) if fmt == "json" else rows_csv(envelope["rows"]))


def replay(result_path: str | Path, threads: int | None = None) -> tuple[bool, list[str]]:
    """Re-run the config embedded in a JSON envelope and compare payloads."""
    env = json.loads(Path(result_path).read_text())
    report = []
    if env.get("version") != __version__:
        report.append(f"version mismatch: result {env.get('version')} vs tool {__version__}")
        return False, report
    raw = dict(env["config"])
    if threads is not None:
        raw["threads"] = threads
    cfg = load_config(raw)
    if cfg.digest() != env["config_digest"]:
        report.append("config digest mismatch")
        return False, report
    fresh = run(env["command"], cfg)
    if payload_bytes(fresh) == payload_bytes(env):
        report.append("PASS")
        return True, report
    old_rows, new_rows = env["rows"], fresh["rows"]
    if len(old_rows) != len(new_rows):
        report.append(f"FAIL: row count {len(old_rows)} vs {len(new_rows)}")
    for a, b in zip(old_rows, new_rows):
        if a != b:
            report.append(f"FAIL: row {a.get('key')!r} differs: {a} vs {b}")
    if env["verdicts"] != fresh["verdicts"]:
        report.append("FAIL: verdicts differ")
    return False, report


# ---------------------------------------------------------------------------
# argument parsing


def _print_table(envelope: dict, bits: bool):
    unit = "bits" if bits else "nats"
    scale = 1 / np.log(2) if bits else 1.0
    print(f"{envelope['command']}  seed={envelope['seed']}  digest={envelope['config_digest'][:12]}")
    print(f"{'key':>22}  {'value (' + unit + ')':>20}  {'stderr':>12}  {'n':>7}  mode")
    for r in envelope["rows"]:
        print(
            f"{str(r['key']):>22}  {r['value_nats'] * scale:>20.12f}  "
            f"{r['stderr'] * scale:>12.3e}  {r['n_orders']:>7}  {r['mode']}"
        )
    for k, v in envelope["verdicts"].items():
        print(f"  {k}: {v}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amenable-entropy", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--threads", type=int)
        p.add_argument("--cache-dir")
        p.add_argument("--bits", action="store_true", help="display values in bits (files stay in nats)")
    p = sub.add_parser("replay")
    p.add_argument("result")
    p.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "replay":
            ok, report = replay(args.result, args.threads)
            print("\n".join(report))
            return EXIT_OK if ok else EXIT_MISMATCH
        cfg = load_config(args.config, seed=args.seed)
        if args.threads is not None:
            cfg.threads = args.threads
            cfg.raw["threads"] = args.threads
        if args.cache_dir:
            cfg.cache_dir = args.cache_dir
        fmt = args.format or cfg.output_format
        out = args.out or cfg.output_path
        envelope = run(args.command, cfg)
    except BudgetExceeded as e:
        print(f"budget refusal: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ProcessError, OrderError, GroupError, EntropyError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    if out:
        write_result(envelope, out, fmt)
        log.info("wrote %s", out)
    _print_table(envelope, args.bits)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
