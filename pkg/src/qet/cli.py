"""Command-line scenario runner.

    qet <subcommand> [--config FILE] [--out PATH] [--seed N] [--deterministic] [parameters]

Parameters can come from a flat INI file with one [section] per subcommand;
flags override file values. Output is CSV (to --out or stdout) preceded by
'#' metadata lines: version, seed, timestamp and a JSON echo of the config.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, cooling, hardware_sim, minimal_qet, qft1d, slp, unitary_qet
from .errors import NumericalError, QetError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
TABLE_PAIRS = ((1.0, 0.2), (1.0, 0.5), (1.0, 1.0), (1.5, 1.0))


# typed parameter schema ------------------------------------------------------

def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError("not an integer")
    return int(f)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _floats(v):
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(x) for x in str(v).split(",") if x.strip()]


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all(check):
    return lambda xs: len(xs) > 0 and all(check(x) for x in xs)


@dataclass(frozen=True)
class Param:
    kind: callable
    default: object = None
    check: callable = None
    rule: str = ""
    choices: tuple = ()
    help: str = ""
    required: bool = False


SCHEMA = {
    "minimal": {
        "h": Param(_float, None, _positive, "must be positive", help="local field h (required)", required=True),
        "k": Param(_float, None, _positive, "must be positive", help="coupling k (required)", required=True),
        "theta": Param(_float, None, help="Bob's rotation angle; default is the optimum"),
    },
    "unitary": {
        "h_a": Param(_float, 1.0, _positive, "must be positive", help="Alice's field"),
        "h_b": Param(_float, 0.4, _positive, "must be positive", help="Bob's field"),
        "k": Param(_float, 1.0, _positive, "must be positive", help="coupling"),
        "j_an_a": Param(_float, 72.27, _positive, "must be positive", help="An-A J coupling in Hz"),
        "j_an_b": Param(_float, 69.68, _positive, "must be positive", help="An-B J coupling in Hz"),
        "t_pulse": Param(_float, 9.5, _nonneg, "must be >= 0", help="total pulse time in ms"),
        "j_ab": Param(_float, 1.16, _positive, "must be positive", help="A-B J coupling in Hz"),
    },
    "hardware": {
        "h": Param(_floats, None, _all(_positive), "must be positive numbers",
                   help="comma list of h values (default: the four table pairs)"),
        "k": Param(_floats, None, _all(_positive), "must be positive numbers", help="comma list of k values"),
        "shots": Param(_int, 0, _nonneg, "must be >= 0", help="shots per circuit; 0 gives exact values"),
        "noise": Param(_float, 0.0, lambda x: 0 <= x < 0.5, "must lie in [0, 0.5)",
                       help="symmetric readout flip probability"),
        "mitigate": Param(_bool, False, help="apply confusion-matrix inversion"),
    },
    "cooling": {
        "beta_grid": Param(_floats, [0.05, 0.1, 0.3, 1.0, 3.0], _all(_nonneg), "must be >= 0",
                           help="comma list of inverse temperatures"),
        "k_over_h": Param(_float, 5.0, _positive, "must be positive", help="coupling to field ratio"),
        "h": Param(_float, 1.0, _positive, "must be positive", help="local field"),
        "h_an": Param(_float, 1.0, _positive, "must be positive", help="ancilla gap"),
        "method": Param(str, "povm", choices=("povm", "pvm", "ancilla", "optimized", "ppa2", "ppa3"),
                        help="cooling method"),
        "restarts": Param(_int, 4, _positive, "must be positive", help="optimizer restarts"),
    },
    "qft": {
        "family": Param(str, "lorentz", choices=("bump", "gauss", "lorentz"), help="smearing family"),
        "optimize": Param(_bool, False, help="optimise the scenario before evaluating"),
        "upsilon_list": Param(_floats, [1.0], _all(_positive), "must be positive", help="comma list of Upsilon"),
        "grid": Param(_int, 4096, lambda n: n >= 16, "must be >= 16", help="points of the x grid"),
        "restarts": Param(_int, 8, _positive, "must be positive", help="optimizer restarts"),
    },
    "slp": {
        "instances": Param(_int, 20, _nonneg, "must be >= 0", help="random instances"),
        "trials": Param(_int, 500, _nonneg, "must be >= 0", help="oracle trials per instance"),
        "include_minimal": Param(_bool, True, help="add the minimal-model ground state at h=k=1"),
    },
}
@dataclass
class RunConfig:
    subcommand: str
    parameters: dict
    seed: int = 0
    output_path: str | None = None
    deterministic: bool = False


@dataclass
class ResultTable:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)
    sidecar: dict | None = None

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValidationError("result table is not rectangular")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _coerce(sub: str, name: str, raw, where: str):
    spec = SCHEMA[sub][name]
    try:
        val = spec.kind(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: cannot parse {raw!r} as {spec.kind.__name__.lstrip('_')}") from None
    if spec.choices and val not in spec.choices:
        raise ValidationError(f"{where}: {val!r} is not one of {', '.join(spec.choices)}")
    if spec.check is not None and not spec.check(val):
        raise ValidationError(f"{where}: {spec.rule}, got {raw}")
    return val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qet", description="Quantum energy teleportation scenario runner")
    ap.add_argument("--version", action="version", version=f"qet {__version__}")
    subs = ap.add_subparsers(dest="subcommand", required=True)
    for sub, params in SCHEMA.items():
        sp = subs.add_parser(sub, help=f"run the {sub} scenario")
        sp.add_argument("--config", help="INI file with a [%s] section" % sub)
        sp.add_argument("--out", help="output CSV path (default: stdout)")
        sp.add_argument("--seed", help="64-bit seed (fallback: QET_SEED, then 0)")
        sp.add_argument("--deterministic", action="store_true", default=None,
                        help="omit the timestamp so repeated runs are byte-identical")
        for name, spec in params.items():
            hint = f" (choices: {', '.join(spec.choices)})" if spec.choices else ""
            default = "" if spec.default is None else f" [default: {spec.default}]"
            sp.add_argument(_flag(name), dest=name, default=None, help=spec.help + hint + default)
    return ap


def _read_config(path: str, sub: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=path)
    except configparser.Error as e:
        raise ValidationError(f"{path}: {e}") from None
    lines = text.splitlines()
    out = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValidationError(f"{path}:{_line_of(lines, '[' + section)}: unknown section [{section}]")
        if section != sub:
            continue
        for key, raw in cp.items(section):
            where = f"{path}:{_line_of(lines, key)}"
            if key in ("seed", "deterministic"):
                out[key] = (raw, where)
            elif key not in SCHEMA[sub]:
                raise ValidationError(f"{where}: unknown key {key!r} in [{sub}]")
            else:
                out[key] = (raw, where)
    return out


def _line_of(lines, token: str) -> int:
    for i, line in enumerate(lines, 1):
        if line.strip().startswith(token):
            return i
    return 0


def parse_config(argv=None) -> RunConfig:
    """Parse flags (and an optional --config file) into a validated RunConfig."""
    ns = build_parser().parse_args(argv)
    sub = ns.subcommand
    raw = _read_config(ns.config, sub) if ns.config else {}
    params = {}
    for name, spec in SCHEMA[sub].items():
        flag_val = getattr(ns, name)
        if flag_val is not None:
            params[name] = _coerce(sub, name, flag_val, _flag(name))
        elif name in raw:
            params[name] = _coerce(sub, name, *raw[name])
        elif spec.required:
            raise ValidationError(f"missing required parameter {_flag(name)}")
        else:
            params[name] = spec.default
    if ns.seed is not None:
        seed = _seed(ns.seed, "--seed")
    elif "seed" in raw:
        seed = _seed(*raw["seed"])
    else:
        seed = _seed(os.environ.get("QET_SEED", "0"), "QET_SEED")
    det = ns.deterministic if ns.deterministic is not None else (
        _bool(raw["deterministic"][0]) if "deterministic" in raw else False)
    if sub == "hardware":
        _check_pairs(params)
    return RunConfig(sub, params, seed, ns.out, bool(det))


def _seed(raw, where) -> int:
    try:
        s = int(str(raw), 0)
    except ValueError:
        raise ValidationError(f"{where}: seed must be an integer, got {raw!r}") from None
    if not 0 <= s < 2**64:
        raise ValidationError(f"{where}: seed must lie in [0, 2^64)")
    return s


def _check_pairs(params):
    h, k = params.get("h"), params.get("k")
    if (h is None) != (k is None):
        raise ValidationError("--h and --k must be given together")
    if h is not None and len(h) != len(k):
        raise ValidationError("--h and --k must have the same length")


def config_echo(cfg: RunConfig) -> str:
    return json.dumps({"subcommand": cfg.subcommand, "parameters": cfg.parameters, "seed": cfg.seed},
                      sort_keys=True)


def parse_echo(text: str) -> RunConfig:
    """Rebuild a RunConfig from the JSON config echo of an output file."""
    d = json.loads(text)
    sub = d["subcommand"]
    if sub not in SCHEMA:
        raise ValidationError(f"unknown subcommand {sub!r}")
    params = {}
    for key, val in d["parameters"].items():
        if key not in SCHEMA[sub]:
            raise ValidationError(f"unknown key {key!r} in config echo")
        params[key] = None if val is None else _coerce(sub, key, val, f"echo:{key}")
    return RunConfig(sub, params, _seed(d["seed"], "echo:seed"))


# runners ---------------------------------------------------------------------

def _run_minimal(cfg):
    p = cfg.parameters
    mp = minimal_qet.MinimalParams(p["h"], p["k"])
    theta = p["theta"]
    led = minimal_qet.run_protocol(mp, theta)
    th = minimal_qet.optimal_theta(mp) if theta is None else theta
    return ResultTable(["h", "k", "theta", "E_PA", "H_B", "V_AB", "E_UB"],
                       [[mp.h, mp.k, th, *led.as_tuple()]])


def _run_unitary(cfg):
    p = cfg.parameters
    up = unitary_qet.UnitaryParams(p["h_a"], p["h_b"], p["k"])
    budget = unitary_qet.timescale_budget(p["j_an_a"], p["j_an_b"], p["t_pulse"] / 1000, p["j_ab"])
    rows = [
        ["alice_energy", unitary_qet.alice_energy(up)],
        ["max_extraction_bound", unitary_qet.max_extraction_bound(up)],
        ["nmr_extraction", unitary_qet.nmr_extraction(up)],
        ["t_total_ms", budget.t_total * 1000],
        ["t_ab_ms", budget.t_ab * 1000],
        ["budget_valid", budget.valid],
    ]
    return ResultTable(["quantity", "value"], rows)


def _run_hardware(cfg):
    p = cfg.parameters
    pairs = list(zip(p["h"], p["k"])) if p["h"] is not None else list(TABLE_PAIRS)
    shots = p["shots"] or None
    rows = []
    for i, (h, k) in enumerate(pairs):
        est = hardware_sim.estimate_table(minimal_qet.MinimalParams(h, k), shots, seed=_mix(cfg.seed, i),
                                          noise=p["noise"] or None, mitigate_readout=p["mitigate"])
        for e in est:
            rows.append([h, k, e.quantity, e.exact, e.shot_estimate, e.std_err, e.mitigated])
    return ResultTable(["h", "k", "quantity", "exact", "shot_estimate", "std_err", "mitigated"], rows)


def _mix(seed: int, i: int) -> int:
    """Independent per-pair seed derived from the run seed."""
    return int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1, np.uint64)[0])


def _run_cooling(cfg):
    p = cfg.parameters
    h, k, h_an, method = p["h"], p["k_over_h"] * p["h"], p["h_an"], p["method"]
    rows = []
    for beta in p["beta_grid"]:
        mp = minimal_qet.MinimalParams(h, k)
        if method == "povm":
            rep = cooling.thermal_povm_report(mp, beta, cooling.PovmParams.symmetric(math.pi / 8))
        elif method == "pvm":
            rep = cooling.thermal_povm_report(mp, beta, cooling.PovmParams.projective())
        elif method == "ancilla":
            rep = cooling.PurityReport(cooling._ab_initial_purity(h, h, k, beta),
                                       cooling.simulate_ancilla_purity(h, h, k, beta, h_an))
        elif method == "optimized":
            rep = cooling.optimize_probes(h, h, k, beta, h_an, restarts=p["restarts"], seed=cfg.seed)[1]
        else:
            rep = cooling.ppa_purity(h, h, k, beta, n_qubits=int(method[-1]))
        rows.append([beta, method, rep.p_initial, rep.p_final])
    return ResultTable(["beta", "method", "p_initial", "p_final"], rows)


def _run_qft(cfg):
    p = cfg.parameters
    fam = p["family"]
    if p["optimize"]:
        scn = qft1d.optimize_scenario(fam, seed=cfg.seed, restarts=p["restarts"])
    else:
        scn = qft1d.optimize_scenario(fam, seed=cfg.seed, maxiter=0)
    rows, metrics = [], []
    for u in p["upsilon_list"]:
        s = qft1d.scaling_transform(scn, qft1d.ScalingLaw(u))
        t = s.well_time()
        x = qft1d.default_grid(s, t, p["grid"])
        rho = qft1d.energy_density(s, x, t)
        rows.extend([u, xi, t, r] for xi, r in zip(x, rho))
        m = qft1d.well_metrics(s, t)
        metrics.append({"upsilon": u, "depth": m.depth, "width": m.width, "delta_x": m.delta_x,
                        "delta_e": m.delta_e, "norm_alpha": s.norm_alpha, "empty": m.empty})
    side = dict(metrics[0])
    side["scaling"] = metrics
    side["scenario"] = _scenario_dict(scn)
    return ResultTable(["upsilon", "x", "t", "density"], rows, sidecar=side)


def _scenario_dict(scn):
    return {"alice": asdict(scn.alice), "bob": asdict(scn.bob), "t_signal": scn.t_signal,
            "sigma_y_expect": scn.sigma_y_expect, "norm_alpha": scn.norm_alpha}


def _run_slp(cfg):
    p = cfg.parameters
    insts = [(f"random_{i}", slp.random_instance(_mix(cfg.seed, i))) for i in range(p["instances"])]
    if p["include_minimal"]:
        m = minimal_qet.build_model(minimal_qet.MinimalParams(1.0, 1.0))
        insts.append(("minimal_ground", slp.SlpInstance(np.outer(m.ground, m.ground.conj()), m.h_total)))
    rows = []
    for i, (name, inst) in enumerate(insts):
        v = slp.slp_check(inst)
        gain = slp.brute_force_extraction_oracle(inst, p["trials"], _mix(cfg.seed, 10_000 + i))
        rows.append([name, v.is_slp, v.condition_min_eigenvalue, gain, v.is_slp == (gain <= 1e-6)])
    return ResultTable(["instance", "is_slp", "c_min_eigenvalue", "oracle_gain", "agree"], rows)


RUNNERS = {"minimal": _run_minimal, "unitary": _run_unitary, "hardware": _run_hardware,
           "cooling": _run_cooling, "qft": _run_qft, "slp": _run_slp}


def run(cfg: RunConfig) -> ResultTable:
    try:
        table = RUNNERS[cfg.subcommand](cfg)
    except QetError as e:
        raise type(e)(f"{cfg.subcommand}: {e}") from e
    table.metadata = {"version": __version__, "seed": cfg.seed, "config": config_echo(cfg)}
    if not cfg.deterministic:
        table.metadata["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return table


# output ----------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for key in ("version", "seed", "timestamp", "config"):
        if key in table.metadata:
            buf.write(f"# {key}: {table.metadata[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def sidecar_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".metrics.json"


def write(table: ResultTable, out: str | None) -> None:
    text = to_csv(table)
    if out is None:
        sys.stdout.write(text)
        if table.sidecar is not None:
            sys.stdout.write("# metrics: " + json.dumps(table.sidecar, sort_keys=True) + "\n")
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if table.sidecar is not None:
        with open(sidecar_path(out), "w", encoding="utf-8") as fh:
            json.dump(table.sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        write(run(cfg), cfg.output_path)
    except ValidationError as e:
        print(f"qet: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        print(f"qet: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"qet: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
