"""Named verification suites shared by the command line and the acceptance tests.

Each suite returns a list of result records ``{"check", "value", "tol", "pass", ...}``.
"""

from __future__ import annotations

import numpy as np

from . import toda as td
from . import transforms as tr
from . import uvarov as uv
from .errors import SpecError
from .factorization import quasi_tau_from_minors
from .functional import Diagonal
from .mindex import eval_chi

DEFAULT_TOLS = {
    "biorthogonality": 1e-10,
    "quasidet": 1e-11,
    "cd": 1e-9,
    "transform": 1e-8,
    "resolvent": 1e-9,
    "cauchy": 1e-8,
    "uvarov": 1e-8,
    "fredholm": 1e-8,
    "nystrom": 1e-10,
    "curve_oracle": 1e-7,
    "toda": 1e-6,
    "hankel": 1e-10,
    "commuting": 1e-7,
    "bilinear": 1e-7,
    "wave": 1e-6,
}

RNG_SEED = 20240917


def record(check, value, tol, **extra):
    value = float(value)
    return {"check": check, "value": value, "tol": tol, "pass": bool(value < tol), **extra}


def _gram_scale(fam):
    return max(1.0, float(np.max(np.abs(fam.fact.reconstruct()))))


def biorthogonality(fam, tols):
    return [record("biorthogonality", fam.biorthogonality_error() / _gram_scale(fam), tols["biorthogonality"])]


def quasidet(fam, tols):
    G = fam.fact.reconstruct()
    err = 0.0
    for k in range(fam.idx.n_max + 1):
        ref = quasi_tau_from_minors(G, fam.idx, k)
        err = max(err, float(np.max(np.abs(fam.h_blocks[k] - ref))) / max(1e-300, float(np.max(np.abs(ref)))))
    return [record("quasidet", err, tols["quasidet"])]


def reproducing_error(fam, n, x, coeffs):
    """``|<u_y, K_n(x, y) p(y)> - p(x)|`` for ``p`` given by monomial coefficients (degree ``<= n``)."""
    idx = fam.idx
    row = fam.source.pair(fam.s1, np.atleast_2d(coeffs), idx, fam.t1, fam.t2, fam.n_hint)[:, 0]
    p2 = fam.eval_all(2, x)
    total = 0.0
    for m in range(n + 1):
        b = idx.block(m)
        total = total + p2[b] @ np.linalg.solve(fam.h_blocks[m], row[b])
    return abs(total - eval_chi(idx, x) @ np.asarray(coeffs))


def christoffel_darboux(fam, tols, pairs=100):
    rng = np.random.default_rng(RNG_SEED)
    idx = fam.idx
    n = idx.n_max - 1
    if n < 0:
        raise SpecError("Christoffel-Darboux checks need n_max >= 1")
    rep = 0.0
    cdf = 0.0
    for _ in range(pairs):
        x = rng.uniform(-1, 1, idx.D)
        y = rng.uniform(-1, 1, idx.D)
        c = np.zeros(idx.size)
        c[:idx.count(n)] = rng.normal(size=idx.count(n))
        rep = max(rep, reproducing_error(fam, n, x, c) / max(1.0, float(np.max(np.abs(c)))))
        if fam.fact.mode == "cholesky":
            cdf = max(cdf, fam.cd_formula_residual(n, x, y, rng.normal(size=idx.D)))
    out = [record("cd_reproducing", rep, tols["cd"])]
    if fam.fact.mode == "cholesky":
        out.append(record("cd_formula", cdf, tols["cd"]))
    return out


def transform_suite(fam, spec, tols):
    levels = tr.transform_all(fam, spec)
    hat = tr.oracle_transform(fam, spec)
    out = [record("transform_oracle", tr.compare_with_oracle(levels, hat), tols["transform"])]
    rep = tr.resolvent_checks(fam, spec, levels)
    out.append(record("resolvent_band", rep.band_error, tols["resolvent"]))
    out.append(record("resolvent_quasi_tau", rep.quasi_tau_error, tols["resolvent"]))
    out.append(record("resolvent_omega_r_lower", rep.omega_r_lower_error, tols["resolvent"]))
    out.append(record("resolvent_omega_r_diag", rep.omega_r_diag_error, tols["resolvent"]))
    if fam.idx.D == 1 and spec.m2 + spec.m1 > 0:
        err = 0.0
        for lv in levels:
            if lv.k < spec.m2:
                continue
            c = tr.reduce_1d_cauchy(fam, spec, lv.k)
            err = max(err, float(np.max(np.abs(c.p_hat - lv.p_hat))) / max(1.0, float(np.max(np.abs(lv.p_hat)))),
                      abs(c.h_hat - complex(lv.h_hat[0, 0])) / max(1e-300, abs(lv.h_hat[0, 0])))
        out.append(record("cauchy_path", err, tols["cauchy"]))
    return out


def uvarov_suite(fam, mp, tols):
    v = mp.as_functional()
    hat = uv.oracle_uvarov(fam, v)
    err = 0.0
    for n in range(fam.idx.n_max + 1):
        lv = uv.uvarov_0d(fam, mp, n)
        ref_p = hat.s1[fam.idx.block(n), :fam.idx.count(n)]
        err = max(err, float(np.max(np.abs(lv.p_hat - ref_p))) / max(1.0, float(np.max(np.abs(ref_p)))),
                  float(np.max(np.abs(lv.h_hat - hat.h_blocks[n]))) / max(1e-300, float(np.max(np.abs(hat.h_blocks[n])))))
    return [record("uvarov_oracle", err, tols["uvarov"])]


def fredholm_suite(fam, cp, tols):
    hat = uv.oracle_uvarov(fam, cp.as_functional(fam.idx.n_max))
    res = nys = orc = 0.0
    for n in range(fam.idx.n_max + 1):
        sol = uv.fredholm_1d(fam, cp, n)
        ny = uv.nystrom_1d(fam, cp, n)
        res = max(res, sol.residual)
        nys = max(nys, float(np.max(np.abs(sol.pi_hat - ny.pi_hat))))
        ref_p = hat.s1[fam.idx.block(n), :fam.idx.count(n)]
        orc = max(orc, float(np.max(np.abs(sol.p_hat - ref_p))) / max(1.0, float(np.max(np.abs(ref_p)))),
                  float(np.max(np.abs(sol.h_hat - hat.h_blocks[n]))) / max(1e-300, float(np.max(np.abs(hat.h_blocks[n])))))
    return [record("fredholm_residual", res, tols["fredholm"]),
            record("nystrom_agreement", nys, tols["nystrom"]),
            record("curve_oracle", orc, tols["curve_oracle"])]


# -- Toda ------------------------------------------------------------------

FIRST_ORDER_H = 1e-3
NESTED_H = 1e-3


def _ratio_record(r, tol):
    out = r.to_json()
    out["pass"] = bool(r.passed and r.residual_h < tol)
    out["tol"] = tol
    out["value"] = r.residual_h
    return out


def _unit(D, a, p=1):
    return tuple(p if i == a else 0 for i in range(D))


def toda_suite(state, names, tols, h=None, spec=None, z=None):
    """Run the named Toda checks on ``state``; unknown names raise ``SpecError``."""
    D = state.D
    h1 = h or FIRST_ORDER_H
    h2 = h or NESTED_H
    z = np.full(D, 0.5) if z is None else np.asarray(z, dtype=float)
    out = []
    for name in names:
        if name == "lax":
            for i in (1, 2):
                for j in (1, 2):
                    for alpha in (_unit(D, 0), _unit(D, D - 1, 2)):
                        r = td.ratio_test(f"lax_L{i}_flow{j}_{alpha}",
                                          lambda s, i=i, j=j, alpha=alpha: td.lax_residual(state, i, 0, j, alpha, s), h1)
                        out.append(_ratio_record(r, tols["toda"]))
        elif name == "zs":
            pairs = [((1, _unit(D, 0)), (2, _unit(D, 0))), ((1, _unit(D, 0)), (1, _unit(D, D - 1, 2))),
                     ((2, _unit(D, D - 1)), (1, _unit(D, 0, 2)))]
            for f, g in pairs:
                r = td.ratio_test(f"zs_{f}_{g}", lambda s, f=f, g=g: td.zs_residual(state, f, g, s), h1)
                out.append(_ratio_record(r, tols["toda"]))
        elif name == "toda2d":
            for a, b in ([(0, 0)] if D == 1 else [(0, 0), (1, 0)]):
                r = td.ratio_test(f"toda2d_k1_a{a}_b{b}", lambda s, a=a, b=b: td.toda_lattice_residual(state, 1, a, b, s), h2, 2)
                out.append(_ratio_record(r, tols["toda"]))
            r = td.ratio_test("log_derivative_k1", lambda s: td.log_derivative_residual(state, 1, 0, s), h1)
            out.append(_ratio_record(r, tols["toda"]))
        elif name == "kp":
            for a, b in ([(0, 0)] if D == 1 else [(0, 0), (0, 1)]):
                r = td.ratio_test(f"kp_a{a}_b{b}", lambda s, a=a, b=b: td.kp_wave_residual(state, a, b, z, s), h2, 2)
                out.append(_ratio_record(r, tols["toda"]))
        elif name == "spectral":
            out.append(record("spectral", max(td.spectral_residual(state, a, z) for a in range(D)), tols["toda"]))
        elif name == "wave":
            T = max(td.trust_level(state), 1)
            study = td.wave_identity_study(state.generator, T, state.t1, state.t2)
            last = study[-1][1] if study else float("inf")
            out.append({"check": "wave_identity", "value": last, "tol": tols["wave"],
                        "errors_by_extra_levels": [[e, v] for e, v in study],
                        "pass": bool(td.wave_converged(study, tols["wave"]))})
            out.append(record("baker_closed_form", td.baker_closed_form_error(state, z, levels=T), tols["wave"]))
        elif name == "hankel":
            if not isinstance(state.generator, Diagonal):
                out.append({"check": "hankel", "pass": True, "skipped": "generator is not diagonal"})
                continue
            gap, band = td.hankel_lax_gap(state)
            out.append(record("hankel_lax_gap", gap, tols["hankel"]))
            out.append(record("hankel_tridiagonal", band, tols["hankel"]))
            r = td.ratio_test("hankel_combined_flow", lambda s: td.combined_flow_derivative(state, _unit(D, 0), s), h2)
            out.append(_ratio_record(r, tols["toda"]))
        elif name == "cgu":
            if spec is None:
                raise SpecError("the cgu check needs a transform")
            out.append(record("toda_commuting_square", td.commuting_square_error(state, spec), tols["commuting"]))
        elif name == "reduction":
            if spec is None:
                raise SpecError("the reduction check needs q1 and q2 (from a transform)")
            rep = td.reduction_check(state, spec.q1, spec.q2)
            out.append({"check": "reduction", "pass": rep["pass"], **rep})
        elif name == "bilinear":
            out.extend(bilinear_suite(state, spec, tols))
        else:
            raise SpecError(f"unknown Toda check {name!r}")
    return out


def bilinear_suite(state, spec, tols):
    if state.D != 1:
        return [{"check": "bilinear", "pass": True, "skipped": "mandatory path is D=1; D=2 optional"}]
    spec = spec if spec is not None else tr.TransformSpec.identity(1)
    t = (state.t1, state.t2)
    zero = (None, None)
    out = []
    k_max = state.n_max - spec.m1
    for tp in (t, zero):
        for a, ap in ((min(1, k_max), min(1, k_max)), (0, k_max)):
            r = td.bilinear_check(state.generator, state.n_max, spec, t, tp, a, ap, n_hint=state.n_hint)
            out.append({"check": f"bilinear_alpha{a}_alphap{ap}_{'same' if tp is t else 'zero'}_times",
                        "value": r.error, "tol": tols["bilinear"], **r.to_json(),
                        "pass": bool(r.error < tols["bilinear"])})
    return out
