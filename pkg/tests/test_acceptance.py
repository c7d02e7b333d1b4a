"""Acceptance criteria 1-10.

Each test records a pass/fail line (printed in the terminal summary by
conftest.py) and then asserts.  Thresholds are the ones of the acceptance
list; nothing is loosened.
"""

import json
import subprocess
import sys
import time

import numpy as np

from conftest import ACCEPTANCE, make_model, rand_complex
from sovxxz import matelem, oracle, separates, sov, spectrum
from sovxxz.algebra import (REGIMES, Model, algebra_residuals, fixed_value_residuals,
                            hamiltonian_link_residual, hermiticity_residual, random_params,
                            regime_params)

CASE_CYCLE = [(None, False), ("minus", False), ("plus", False), ("minus", True), ("plus", True)]
BOTH = [("minus", "-"), ("plus", "+")]


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")


# 1 -------------------------------------------------------------------------

def test_criterion_01_algebraic_skeleton():
    t0 = time.perf_counter()
    worst = {}
    for n_sites in (2, 3, 4, 5):
        for k in range(20):
            case, tri = CASE_CYCLE[k % len(CASE_CYCLE)]
            rng = np.random.default_rng([1, n_sites, k])
            model = Model(random_params(n_sites, rng, case=case, triangular=tri))
            for _ in range(20):
                res = algebra_residuals(model, rand_complex(rng), rand_complex(rng))
                for name, v in res.items():
                    worst[name] = max(worst.get(name, 0.0), v)
    elapsed = time.perf_counter() - t0
    top = max(worst, key=worst.get)
    ok = max(worst.values()) < 1e-9 and elapsed < 60
    record(1, ok, f"max residual {worst[top]:.2e} ({top}), {len(worst)} identities, {elapsed:.1f}s")
    assert max(worst.values()) < 1e-9, worst
    assert elapsed < 60


# 2 -------------------------------------------------------------------------

def test_criterion_02_fixed_values():
    worst = 0.0
    for n_sites in (1, 2, 3, 4):
        for k, (case, tri) in enumerate(CASE_CYCLE):
            model = make_model([2, n_sites, k], n_sites, case, tri)
            res = fixed_value_residuals(model)
            worst = max(worst, res["T_fixed_half"], res["T_fixed_pi"])
    record(2, worst < 1e-10, f"max residual {worst:.2e}")
    assert worst < 1e-10


# 3 -------------------------------------------------------------------------

def test_criterion_03_hermiticity():
    worst = 0.0
    for regime in REGIMES:
        for n_sites in (1, 2, 3, 4):
            for k in range(3):
                rng = np.random.default_rng([3, n_sites, k])
                model = Model(regime_params(regime, n_sites, rng))
                for _ in range(5):
                    worst = max(worst, hermiticity_residual(model, rand_complex(rng)))
    record(3, worst < 1e-10, f"max |T(l)^+ - T(l*)| rel {worst:.2e}")
    assert worst < 1e-10


# 4 -------------------------------------------------------------------------

def test_criterion_04_sov_bases():
    worst = {}
    for n_sites in (1, 2, 3, 4, 5):
        for case, eps in BOTH:
            for tri in (False, True):
                model = make_model([4, n_sites, tri], n_sites, case, tri)
                rng = np.random.default_rng([4, n_sites])
                basis = sov.build_basis(model, eps)
                lams = [rand_complex(rng) for _ in range(2)]
                for name, v in sov.basis_residuals(basis, lams).items():
                    key = name.rstrip("+-")
                    worst[key] = max(worst.get(key, 0.0), v)
    ok = max(worst.values()) < 1e-8
    record(4, ok, " ".join(f"{k}={v:.1e}" for k, v in sorted(worst.items())))
    assert ok, worst


# 5 -------------------------------------------------------------------------

def test_criterion_05_spectrum_completeness():
    t0 = time.perf_counter()
    lines = []
    ok = True
    n6_time = 0.0
    for n_sites in (1, 2, 3, 4, 5, 6):
        for case, eps in BOTH:
            t1 = time.perf_counter()
            model = make_model([5, n_sites], n_sites, case, True)
            basis = sov.build_basis(model, eps)
            pairs = spectrum.solve_all(model, eps, seed=0, basis=basis)
            spec = oracle.diagonalize(model, seed=0)
            pts = [model.scalars.zeta_point(a, 0) for a in range(n_sites)]
            agree = 0.0
            matched = set()
            for p in pairs:
                k = matelem.match_oracle(model, spec, p)
                matched.add(k)
                ours = np.array([spectrum.tau_eval(p.tau, z) for z in pts])
                theirs = spec.node_values(k, pts)
                agree = max(agree, float(np.max(np.abs(ours - theirs)) / np.max(np.abs(theirs))))
            sep = spectrum.min_separation(model, [p.tau for p in pairs])
            eig = max(p.residual for p in pairs)
            proj = spectrum.projector_sum_residual(pairs)
            good = (len(pairs) == 2 ** n_sites and len(matched) == 2 ** n_sites and sep > 1e-6
                    and agree < 1e-8 and eig < 1e-8 and proj < 1e-7)
            ok &= good
            if n_sites == 6:
                n6_time = max(n6_time, time.perf_counter() - t1)
            lines.append(f"N={n_sites}{eps}: {len(pairs)} sols, node {agree:.1e}, eig {eig:.1e}, "
                         f"proj {proj:.1e}")
    ok &= n6_time < 300
    record(5, ok, f"N=1..6 both classes; N=6 {n6_time:.1f}s; total {time.perf_counter() - t0:.1f}s")
    print("\n".join(lines))
    assert ok, lines


# 6 -------------------------------------------------------------------------

def test_criterion_06_scalar_products():
    worst_det = 0.0
    worst_cert = 0.0
    for n_sites in (1, 2, 3, 4, 5, 6):
        for case, eps in BOTH:
            model = make_model([6, n_sites], n_sites, case, False)
            basis = sov.build_basis(model, eps)
            # direct contractions cancel heavily at N = 6: extended-precision reference
            ref = separates.reference_basis(model, eps)
            rng = np.random.default_rng([6, n_sites])
            draws = 100 if case == "minus" else 20
            for _ in range(draws):
                a = separates.SeparateState("left", eps, rng.normal(size=(n_sites, 2))
                                            + 1j * rng.normal(size=(n_sites, 2)))
                b = separates.SeparateState("right", eps, rng.normal(size=(n_sites, 2))
                                            + 1j * rng.normal(size=(n_sites, 2)))
                d = separates.pairing_det(a, b, model)
                direct = separates.pairing_direct(a, b, ref)
                worst_det = max(worst_det, abs(d - direct) / abs(direct))
            if n_sites <= 5:
                pairs = spectrum.solve_all(model, eps, basis=basis)
                for i, left in enumerate(pairs):
                    for j, right in enumerate(pairs):
                        if i != j:
                            worst_cert = max(worst_cert,
                                             separates.orthogonality_certificate(left, right, model))
    ok = worst_det < 1e-9 and worst_cert < 1e-8
    record(6, ok, f"det vs direct {worst_det:.1e}, orthogonality certificate {worst_cert:.1e}")
    assert ok


# 7 -------------------------------------------------------------------------

def test_criterion_07_reconstructions():
    worst = {"bulk": 0.0, "boundary": 0.0, "annihilation": 0.0, "sigma_string": 0.0}
    consts = []
    for n_sites in (2, 3, 4, 5):
        rng = np.random.default_rng([7, n_sites])
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        for case, eps in BOTH:
            model = make_model([7, n_sites], n_sites, case, True)
            for n in range(1, n_sites + 1):
                worst["bulk"] = max(worst["bulk"], matelem.bulk_reconstruct_check(model, x, n))
                worst["boundary"] = max(worst["boundary"], matelem.boundary_reconstruct_check(model, x, n))
                res, const = matelem.sigma_string_reconstruct_check(model, eps, n)
                worst["sigma_string"] = max(worst["sigma_string"], res)
                consts.append(const)
            worst["annihilation"] = max(worst["annihilation"], max(matelem.annihilation_checks(model).values()))
    spread = max(abs(c - 1) for c in consts)
    ok = max(worst.values()) < 1e-8 and spread < 1e-8
    record(7, ok, " ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f" constant-1={spread:.1e}")
    assert ok, worst


# 8 -------------------------------------------------------------------------

def test_criterion_08_matrix_elements():
    scatter = {"-": 0.0, "+": 0.0}
    count = 0
    ill = []         # (N, n, couple, condition, deviation) of nearly vanishing elements
    for n_sites in (1, 2, 3, 4, 5):
        for case, eps in BOTH:
            model = make_model([8, n_sites], n_sites, case, True)
            pairs = spectrum.solve_all(model, eps)
            spec = oracle.diagonalize(model, seed=1)
            rng = np.random.default_rng([8, n_sites])
            couples = [(0, 0), (len(pairs) - 1, 0)]
            while len(couples) < min(5, len(pairs) ** 2):
                c = (int(rng.integers(len(pairs))), int(rng.integers(len(pairs))))
                if c not in couples:
                    couples.append(c)
            for n in range(1, n_sites + 1):
                for i, j in couples:
                    left, right = pairs[i], pairs[j]
                    res = matelem.matrix_element(model, eps, left, right, n)
                    f = matelem.normalized(res.value, model, left, right)
                    o = matelem.normalized(matelem.oracle_matrix_element(model, spec, eps, left, right, n),
                                           model, left, right)
                    dev = abs(f / o - matelem.CALIBRATION[eps])
                    cond = matelem.sigma_condition(res.sigma_matrix)
                    if cond <= matelem.CONDITION_LIMIT:
                        scatter[eps] = max(scatter[eps], dev)
                        count += 1
                    else:
                        ill.append((n_sites, n, (i, j), cond, dev))
    ill_ok = all(dev <= matelem.ratio_tolerance(cond, 1e-7) for *_, cond, dev in ill)
    ok = max(scatter.values()) < 1e-7 and ill_ok
    for entry in ill:
        print("ill-conditioned element N=%d n=%d couple=%s cond=%.1e deviation=%.1e" % entry)
    record(8, ok, f"{count} elements; calibration {matelem.CALIBRATION['-']:.0f}/"
                  f"{matelem.CALIBRATION['+']:.0f}; scatter minus {scatter['-']:.1e} plus {scatter['+']:.1e}; "
                  f"{len(ill)} nearly vanishing element(s) within the conditioning bound: {ill_ok}")
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_09_hamiltonian_link():
    worst = 0.0
    for n_sites in (2, 3):
        for k in range(3):
            rng = np.random.default_rng([9, n_sites, k])
            p = random_params(n_sites, rng).replace(xi=(0.0,) * n_sites)
            worst = max(worst, hamiltonian_link_residual(p))
    record(9, worst < 1e-6, f"max off-identity residual {worst:.1e}")
    assert worst < 1e-6


# 10 ------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    cfg = {"params": {"n_sites": 3, "eta": [0.35, 0.2], "zeta_minus": [0.6, 0.25],
                      "kappa_minus": [0.4, -0.1], "tau_minus": [0.15, 0.3], "zeta_plus": [0.45, -0.3],
                      "kappa_plus": [0.3, 0.2], "tau_plus": [-0.2, 0.1],
                      "xi": [[0.21, 0.05], [-0.33, 0.12], [0.47, -0.09]], "case": "plus", "tri_c": [0.2, 0.1]},
           "sweep": {"param": "kappa_plus", "values": [0.2, 0.3, 0.4], "command": "matelem"}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    identical = {}
    for command in ("verify", "spectrum", "scalar", "matelem", "sweep"):
        outputs = []
        for workers in (1, 2, 8):
            out = tmp_path / f"{command}_{workers}.json"
            proc = subprocess.run([sys.executable, "-m", "sovxxz", command, "--config", str(path),
                                   "--seed", "7", "--workers", str(workers), "--out", str(out)],
                                  capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            data = out.read_bytes()
            if command == "sweep":
                data += (tmp_path / f"{command}_{workers}.csv").read_bytes()
            outputs.append(data)
        identical[command] = len(set(outputs)) == 1
    ok = all(identical.values())
    record(10, ok, " ".join(f"{k}={'same' if v else 'DIFFERENT'}" for k, v in identical.items())
           + " (workers 1/2/8)")
    assert ok
