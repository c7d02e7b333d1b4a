"""Command-line interface: configuration, dispatch, reports and sweeps.

Reports are JSON documents that depend only on (config, seed): the worker
count and wall-clock timings are kept out of them (timings go to stderr).
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import matelem, oracle, separates, sov, spectrum
from .algebra import (CASES, REGIMES, Model, ModelParams, ParameterError, algebra_residuals,
                      fixed_value_residuals, hamiltonian_link_residual, hermiticity_residual,
                      regime_params)

log = logging.getLogger("sovxxz")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESIDUAL = 3
EXIT_SOLVER = 4

DEFAULT_TOL_REL = 1e-7
DEFAULT_TOL_ABS = 1e-6
DEFAULT_SAMPLES = 5
MAX_SPECTRUM_SITES = 8
MAX_HERMITICITY_SITES = 4
REFERENCE_MAX_SITES = 6      # extended-precision direct contractions up to this N

COMPLEX_FIELDS = ("eta", "zeta_minus", "kappa_minus", "tau_minus",
                  "zeta_plus", "kappa_plus", "tau_plus")

DEFAULT_PARAMS = {
    "n_sites": 3,
    "eta": [0.35, 0.2],
    "zeta_minus": [0.6, 0.25],
    "kappa_minus": [0.4, -0.1],
    "tau_minus": [0.15, 0.3],
    "zeta_plus": [0.45, -0.3],
    "kappa_plus": [0.3, 0.2],
    "tau_plus": [-0.2, 0.1],
    "xi": [[0.21, 0.05], [-0.33, 0.12], [0.47, -0.09]],
    "case": "minus",
    "tri_c": None,
}


class ConfigError(ValueError):
    """Malformed configuration document or option."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_complex(value, name):
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"{name}: expected a number or [re, im], got {value!r}")


def encode(x):
    """JSON-ready form: complex numbers as [re, im], arrays as nested lists."""
    if isinstance(x, dict):
        return {str(k): encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode(v) for v in x]
    if isinstance(x, np.ndarray):
        return [encode(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass(frozen=True)
class RunConfig:
    params: dict                       # canonical plain-data parameter fields
    seed: int = 0
    tol_rel: float = DEFAULT_TOL_REL
    tol_abs: float = DEFAULT_TOL_ABS
    site: int | None = None
    samples: int = DEFAULT_SAMPLES
    sweep: dict | None = None
    workers: int = field(default=1, compare=False)

    def model_params(self):
        p = self.params
        return ModelParams(
            n_sites=p["n_sites"],
            **{k: parse_complex(p[k], k) for k in COMPLEX_FIELDS},
            xi=tuple(parse_complex(x, "xi") for x in p["xi"]),
            case=p.get("case"),
            tri_c=None if p.get("tri_c") is None else parse_complex(p["tri_c"], "tri_c"),
        )

    def canonical(self):
        """Everything a report depends on (worker count excluded)."""
        return {"params": self.params, "seed": self.seed, "tol_rel": self.tol_rel,
                "tol_abs": self.tol_abs, "site": self.site, "samples": self.samples,
                "sweep": self.sweep}

    def hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_params(self, **kw):
        params = dict(self.params)
        params.update(kw)
        return RunConfig(params=params, seed=self.seed, tol_rel=self.tol_rel, tol_abs=self.tol_abs,
                         site=self.site, samples=self.samples, sweep=None, workers=1)


def _canonical_params(raw):
    if not isinstance(raw, dict):
        raise ConfigError("params must be a JSON object")
    unknown = set(raw) - set(DEFAULT_PARAMS)
    if unknown:
        raise ConfigError(f"unknown parameter fields: {sorted(unknown)}")
    missing = [k for k in ("n_sites", *COMPLEX_FIELDS, "xi") if k not in raw]
    if missing:
        raise ConfigError(f"missing parameter fields: {missing}")
    n = raw["n_sites"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"n_sites must be a positive integer, got {n!r}")
    out = {"n_sites": n}
    for k in COMPLEX_FIELDS:
        out[k] = encode(parse_complex(raw[k], k))
    if not isinstance(raw["xi"], list):
        raise ConfigError("xi must be a list")
    out["xi"] = [encode(parse_complex(x, "xi")) for x in raw["xi"]]
    case = raw.get("case")
    if case not in (None, *CASES):
        raise ConfigError(f"case must be one of {CASES} or null, got {case!r}")
    out["case"] = case
    tri = raw.get("tri_c")
    out["tri_c"] = None if tri is None else encode(parse_complex(tri, "tri_c"))
    return out


def load_config(doc, seed=None, case=None, site=None, tol_rel=None, tol_abs=None, workers=1):
    """Validate a config document (a dict) and apply command-line overrides."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    allowed = set(DEFAULT_PARAMS) | {"seed", "tol_rel", "tol_abs", "n", "samples", "sweep", "params"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    raw = dict(doc.get("params", {}))
    raw.update({k: v for k, v in doc.items() if k in DEFAULT_PARAMS})
    if case is not None:
        raw["case"] = case
    params = _canonical_params(raw)

    def pick(cli_value, key, default, kind):
        value = cli_value if cli_value is not None else doc.get(key, default)
        if value is None:
            return None
        if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"{key} must be a positive number, got {value!r}")
            value = float(value)
        return value

    seed = pick(seed, "seed", 0, int)
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    samples = pick(None, "samples", DEFAULT_SAMPLES, int)
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    sweep = doc.get("sweep")
    if sweep is not None:
        sweep = _check_sweep(sweep)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return RunConfig(params=params, seed=seed,
                     tol_rel=pick(tol_rel, "tol_rel", DEFAULT_TOL_REL, float),
                     tol_abs=pick(tol_abs, "tol_abs", DEFAULT_TOL_ABS, float),
                     site=pick(site, "n", None, int), samples=samples, sweep=sweep,
                     workers=workers)


def _check_sweep(sweep):
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be an object")
    param = sweep.get("param")
    if param not in (*COMPLEX_FIELDS, "tri_c"):
        raise ConfigError(f"sweep.param must be one of {(*COMPLEX_FIELDS, 'tri_c')}, got {param!r}")
    values = sweep.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values must be a non-empty list")
    command = sweep.get("command", "matelem")
    if command not in ("verify", "spectrum", "scalar", "matelem"):
        raise ConfigError(f"sweep.command must be verify|spectrum|scalar|matelem, got {command!r}")
    return {"param": param, "values": [encode(parse_complex(v, "sweep.values")) for v in values],
            "command": command}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

class Report:
    """Accumulates checks and results; status follows the worst check."""

    def __init__(self, command, config):
        self.command = command
        self.config = config
        self.checks = {}
        self.results = {}

    def check(self, name, residual, tol):
        residual = float(residual)
        self.checks[name] = {"residual": residual, "tol": float(tol),
                             "pass": bool(np.isfinite(residual) and residual <= tol)}

    @property
    def ok(self):
        return all(c["pass"] for c in self.checks.values())

    def worst(self):
        return max((c["residual"] for c in self.checks.values()), default=0.0)

    def to_dict(self):
        return encode({
            "command": self.command,
            "config": self.config.canonical(),
            "config_hash": self.config.hash(),
            "tolerances": {"rel": self.config.tol_rel, "abs": self.config.tol_abs},
            "status": "ok" if self.ok else "residual_failure",
            "checks": self.checks,
            "results": self.results,
        })


def dumps(report_dict):
    return json.dumps(report_dict, indent=2, sort_keys=True) + "\n"


def _eps_of(params):
    if params.case is None:
        raise ParameterError("this command needs a boundary class: set case to 'minus' or 'plus'")
    return "-" if params.case == "minus" else "+"


def _rng(config, tag):
    """Independent, reproducible stream per purpose."""
    return np.random.default_rng([config.seed, tag])


def _points(rng, k):
    return [complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)) for _ in range(k)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_verify(config):
    """Algebraic identities, fixed values, Hamiltonian link, Hermiticity and SOV-basis checks."""
    params = config.model_params().validate()
    model = Model(params)
    report = Report("verify", config)
    rng = _rng(config, 1)
    worst = {}
    for lam, mu in zip(_points(rng, 3), _points(rng, 3)):
        for k, v in algebra_residuals(model, lam, mu).items():
            worst[k] = max(worst.get(k, 0.0), v)
    worst.update(fixed_value_residuals(model))
    for k in sorted(worst):
        report.check(k, worst[k], config.tol_rel)

    # the Pauli-string Hamiltonian is written with both boundary matrices general
    homogeneous = params.replace(xi=(0.0,) * params.n_sites, case=None, tri_c=None)
    report.check("hamiltonian_link", hamiltonian_link_residual(homogeneous), config.tol_abs)

    if params.n_sites <= MAX_HERMITICITY_SITES:
        for regime in REGIMES:
            hmodel = Model(regime_params(regime, params.n_sites, _rng(config, 2)))
            res = max(hermiticity_residual(hmodel, lam) for lam in _points(rng, 2))
            report.check(f"hermiticity_{regime}", res, config.tol_rel)

    eps_list = ["-", "+"] if params.case is None else [_eps_of(params)]
    lams = _points(rng, 2)
    for eps in eps_list:
        basis = sov.build_basis(model, eps)
        for k, v in sov.basis_residuals(basis, lams).items():
            report.check(k, v, config.tol_rel)
    return report


def _oracle_agreement(model, pairs, spec):
    """(max relative node-value deviation, matched oracle indices)."""
    s = model.scalars
    pts = [s.zeta_point(a, 0) for a in range(model.n)]
    worst = 0.0
    matched = []
    for pair in pairs:
        k = matelem.match_oracle(model, spec, pair)
        matched.append(k)
        ours = np.array([spectrum.tau_eval(pair.tau, z) for z in pts])
        theirs = spec.node_values(k, pts)
        scale = max(np.max(np.abs(theirs)), 1e-300)
        worst = max(worst, float(np.max(np.abs(ours - theirs)) / scale))
    return worst, matched


def cmd_spectrum(config):
    params = config.model_params().validate()
    if params.n_sites > MAX_SPECTRUM_SITES:
        raise ParameterError(f"spectrum supports N <= {MAX_SPECTRUM_SITES}")
    eps = _eps_of(params)
    model = Model(params)
    report = Report("spectrum", config)
    basis = sov.build_basis(model, eps)
    pairs = spectrum.solve_all(model, eps, seed=config.seed, workers=config.workers, basis=basis)
    spec = oracle.diagonalize(model, seed=config.seed, workers=config.workers)
    agreement, matched = _oracle_agreement(model, pairs, spec)
    report.check("count", abs(len(pairs) - 2 ** params.n_sites), 0)
    report.check("oracle_matching_bijective", 0 if len(set(matched)) == len(matched) else 1, 0)
    report.check("oracle_node_agreement", agreement, config.tol_rel)
    report.check("sov_residual", max(float(np.max(spectrum.sov_residuals(model, p.tau, eps)))
                                     for p in pairs), config.tol_rel)
    report.check("eigen_residual", max(p.residual for p in pairs), config.tol_rel)
    report.check("projector_sum", spectrum.projector_sum_residual(pairs), config.tol_rel)
    report.results = {
        "eps": eps,
        "n_eigenvalues": len(pairs),
        "coefficients": [list(p.tau.c) for p in pairs],
        "oracle_index": matched,
    }
    return report


def cmd_scalar(config):
    params = config.model_params().validate()
    eps = _eps_of(params)
    model = Model(params)
    report = Report("scalar", config)
    basis = sov.build_basis(model, eps)
    rng = _rng(config, 3)
    n = params.n_sites
    # extended-precision reference for the direct contraction where affordable
    ref = separates.reference_basis(model, eps) if n <= REFERENCE_MAX_SITES else basis
    worst = 0.0
    values = []
    for _ in range(config.samples):
        fl = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        fr = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        alpha = separates.SeparateState("left", eps, fl)
        beta = separates.SeparateState("right", eps, fr)
        det_value = separates.pairing_det(alpha, beta, model)
        direct = separates.pairing_direct(alpha, beta, ref)
        worst = max(worst, abs(det_value - direct) / max(abs(direct), 1e-300))
        values.append(det_value)
    report.check("pairing_det_vs_direct", worst, config.tol_rel)
    pairs = spectrum.solve_all(model, eps, seed=config.seed, workers=config.workers, basis=basis)
    cert = 0.0
    for i, left in enumerate(pairs):
        for j, right in enumerate(pairs):
            if i != j:
                cert = max(cert, separates.orthogonality_certificate(left, right, model))
    report.check("orthogonality_certificate", cert, config.tol_rel)
    report.results = {"eps": eps, "extended_precision_reference": n <= REFERENCE_MAX_SITES,
                      "pairings": values,
                      "norms": [separates.pairing_det(p.left_separate(), p.right_separate(), model)
                                for p in pairs]}
    return report


def _couples(config, count):
    rng = _rng(config, 4)
    out = [(0, 0)] if count > 0 else []
    while len(out) < min(config.samples, count * count):
        c = (int(rng.integers(count)), int(rng.integers(count)))
        if c not in out:
            out.append(c)
    return out


def cmd_matelem(config):
    params = config.model_params()
    n_sites = params.n_sites
    if config.site is not None and not 1 <= config.site <= n_sites:
        raise ParameterError(f"site n={config.site} outside 1..{n_sites}")
    params.validate()
    eps = _eps_of(params)
    model = Model(params)
    report = Report("matelem", config)
    basis = sov.build_basis(model, eps)
    pairs = spectrum.solve_all(model, eps, seed=config.seed, workers=config.workers, basis=basis)
    spec = oracle.diagonalize(model, seed=config.seed, workers=config.workers)
    sites = [config.site] if config.site is not None else list(range(1, n_sites + 1))
    rows = []
    scatter = 0.0
    excess = 0.0     # ill-conditioned elements: deviation / allowed deviation
    for n in sites:
        for i, j in _couples(config, len(pairs)):
            left, right = pairs[i], pairs[j]
            res = matelem.matrix_element(model, eps, left, right, n)
            formula = matelem.normalized(res.value, model, left, right)
            direct = matelem.normalized(matelem.oracle_matrix_element(model, spec, eps, left, right, n),
                                        model, left, right)
            ratio = formula / direct if direct != 0 else complex("nan")
            dev = abs(ratio - matelem.CALIBRATION[eps])
            cond = matelem.sigma_condition(res.sigma_matrix)
            well = cond <= matelem.CONDITION_LIMIT
            if well:
                scatter = max(scatter, dev)
            else:
                excess = max(excess, dev / matelem.ratio_tolerance(cond, config.tol_rel))
            rows.append({"n": n, "left": i, "right": j, "value": res.value, "prefactor": res.prefactor,
                         "normalized": formula, "oracle_normalized": direct, "ratio": ratio,
                         "sigma_condition": cond, "well_conditioned": well})
    report.check("ratio_scatter", scatter, config.tol_rel)
    report.check("ill_conditioned_bound", excess, 1.0)
    report.results = {"eps": eps, "calibration_constant": matelem.CALIBRATION[eps], "elements": rows}
    return report


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "scalar": cmd_scalar, "matelem": cmd_matelem}


def run_point(command, config):
    """(exit code, report dict or None, message) for one command run."""
    try:
        report = COMMANDS[command](config)
    except (ParameterError, ConfigError) as exc:
        return EXIT_VALIDATION, None, f"validation: {exc}"
    except spectrum.SolverIncomplete as exc:
        return EXIT_SOLVER, None, f"solver incomplete: {exc}"
    except oracle.OracleError as exc:
        return EXIT_SOLVER, None, f"oracle failure: {exc}"
    code = EXIT_OK if report.ok else EXIT_RESIDUAL
    return code, report, "ok" if report.ok else "residual failure"


SWEEP_STATUS = {EXIT_OK: "ok", EXIT_VALIDATION: "invalid", EXIT_RESIDUAL: "residual_failure",
                EXIT_SOLVER: "solver_failure"}


def cmd_sweep(config):
    """Run one command over a parameter grid; returns (report dict, csv text, exit code)."""
    if config.sweep is None:
        raise ConfigError("sweep needs a 'sweep' section: {param, values, command}")
    sw = config.sweep
    points = [config.with_params(**{sw["param"]: v}) for v in sw["values"]]

    def one(point):
        t0 = time.perf_counter()
        out = run_point(sw["command"], point)
        log.info("sweep point %s: %.2fs", point.hash(), time.perf_counter() - t0)
        return out

    with ThreadPoolExecutor(max_workers=config.workers) as ex:
        results = list(ex.map(one, points))     # ordered by grid index

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "config_hash", "param", "value_re", "value_im", "status",
                     "exit_code", "worst_residual", "message"])
    entries = []
    for idx, (point, value, (code, report, msg)) in enumerate(zip(points, sw["values"], results)):
        worst = report.worst() if report is not None else float("nan")
        writer.writerow([idx, point.hash(), sw["param"], repr(float(value[0])), repr(float(value[1])),
                         SWEEP_STATUS[code], code, repr(float(worst)), msg])
        entries.append({"index": idx, "config_hash": point.hash(), "value": value,
                        "status": SWEEP_STATUS[code], "exit_code": code, "message": msg,
                        "report": None if report is None else report.to_dict()})
    codes = {code for code, _, _ in results}
    exit_code = EXIT_OK
    for c in (EXIT_VALIDATION, EXIT_SOLVER, EXIT_RESIDUAL):
        if c in codes:
            exit_code = c
    doc = encode({"command": "sweep", "config": config.canonical(), "config_hash": config.hash(),
                  "tolerances": {"rel": config.tol_rel, "abs": config.tol_abs},
                  "status": SWEEP_STATUS[exit_code], "points": entries, "csv": buf.getvalue()})
    return doc, buf.getvalue(), exit_code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="sovxxz", description=(
        "SOV solution of the open XXZ chain with one general and one diagonal/triangular "
        "boundary, checked against exact diagonalisation."))
    ap.add_argument("command", choices=["verify", "spectrum", "scalar", "matelem", "sweep"])
    ap.add_argument("--config", help="JSON config file (default: built-in N=3 parameter set)")
    ap.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    ap.add_argument("--case", choices=list(CASES), help="boundary class override")
    ap.add_argument("--n", type=int, dest="site", help="site index n of the sigma^- string")
    ap.add_argument("--out", help="write the JSON report here (sweep: CSV next to it, .csv)")
    ap.add_argument("--tol-rel", type=float, help=f"relative tolerance (default {DEFAULT_TOL_REL})")
    ap.add_argument("--tol-abs", type=float, help=f"absolute tolerance (default {DEFAULT_TOL_ABS})")
    ap.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    ap.add_argument("-v", "--verbose", action="store_true", help="log timings to stderr")
    return ap


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.config is None:
            doc = {"params": DEFAULT_PARAMS}
        else:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        config = load_config(doc, seed=args.seed, case=args.case, site=args.site,
                             tol_rel=args.tol_rel, tol_abs=args.tol_abs, workers=args.workers)
    except (OSError, json.JSONDecodeError, ConfigError, ParameterError) as exc:
        print(f"sovxxz: config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    t0 = time.perf_counter()
    if args.command == "sweep":
        try:
            doc_out, csv_text, code = cmd_sweep(config)
        except ConfigError as exc:
            print(f"sovxxz: config error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        _write(args.out, dumps(doc_out))
        if args.out is not None:
            base = args.out[:-5] if args.out.endswith(".json") else args.out
            _write(base + ".csv", csv_text)
    else:
        code, report, msg = run_point(args.command, config)
        if report is None:
            print(f"sovxxz: {msg}", file=sys.stderr)
            return code
        _write(args.out, dumps(report.to_dict()))
        if code != EXIT_OK:
            failed = [k for k, c in report.checks.items() if not c["pass"]]
            print(f"sovxxz: residual failure in {failed}", file=sys.stderr)
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
