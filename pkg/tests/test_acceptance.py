"""Acceptance criteria 1-8, each printing one PASS/FAIL line.

Sweeps at eps^2 = 1e-10 are shared between criteria 4, 5 and 6 through a
cache, so the module runs each (problem, k, N) cell once.
"""

from functools import lru_cache
import json
import math
import time

import numpy as np
import pytest

from wgbiharmonic import WeakGalerkinBiharmonic
from wgbiharmonic.assembly import assemble, local_stiffness
from wgbiharmonic.basis import Triangle, lagrange_interpolate_on_tri, tri_basis
from wgbiharmonic.cli import main
from wgbiharmonic.mesh import MeshParams, build_mesh
from wgbiharmonic.norms import convergence_orders, energy_norm, interpolate, triple_norm_M
from wgbiharmonic.problems import ExactSolution, ProblemSpec, example2, get_problem
from wgbiharmonic.weak_ops import Discretization, lift_polynomial, weak_gradient_op, weak_laplacian_op
from _oracles import brute_force_stiffness
from conftest import sample_elements

EPS2 = 1e-10
NS = (4, 8, 16, 32, 64)

# reference errors |||nu||| and orders at eps^2 = 1e-10 for N = 4, 8, 16, 32, 64
REFERENCE = {
    ("example1", 2): ([4.1265, 1.23918, 3.45618e-1, 8.91642e-2, 2.23968e-2],
                      [1.735, 1.842, 1.954, 1.993]),
    ("example2", 2): ([2.19564, 5.50095e-1, 1.35582e-1, 3.43142e-2, 8.64901e-3],
                      [1.996, 2.020, 1.982, 1.988]),
    ("example2", 3): ([8.51156e-1, 1.09358e-1, 1.36778e-2, 1.72992e-3],
                      [2.960, 2.999, 2.983]),
}


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")


@lru_cache(maxsize=None)
def cell(name, k, N, eps2=EPS2):
    """(discrete error, exact error, wall seconds) for one fitted cell."""
    t0 = time.perf_counter()
    est = WeakGalerkinBiharmonic(k=k, N=N).fit(get_problem(name, math.sqrt(eps2)))
    out = est.error("discrete").total, est.error("exact").total
    return out + (time.perf_counter() - t0,)


def sweep(name, k, Ns):
    rows = [cell(name, k, N) for N in Ns]
    disc = [r[0] for r in rows]
    exact = [r[1] for r in rows]
    return disc, exact, sum(r[2] for r in rows)


def orders(Ns, errors):
    return convergence_orders(list(zip(Ns, errors)))


def fmt(values, spec=".3f"):
    return "/".join(format(v, spec) for v in values)


def table_check(name, k, Ns, order_tol, check_magnitude):
    ref_err, ref_ord = REFERENCE[name, k]
    ref_err = ref_err[:len(Ns)]
    disc, exact, secs = sweep(name, k, Ns)
    parts = []
    for mode, errs in (("discrete", disc), ("exact", exact)):
        o = orders(Ns, errs)
        dev = max(abs(a - b) for a, b in zip(o, ref_ord))
        ratio = [e / r for e, r in zip(errs, ref_err)]
        parts.append(f"{mode}: orders {fmt(o)} (max dev {dev:.3f}), "
                     f"error/reference {fmt(ratio, '.2f')}")
    # orders must hold in the mode that is also used for the magnitude check,
    # or in either mode when magnitudes are not checked
    mode_ok = []
    for errs in (disc, exact):
        o = orders(Ns, errs)
        orders_ok = all(abs(a - b) <= order_tol for a, b in zip(o, ref_ord))
        # magnitudes are compared from N = 8 on; N = 4 only anchors the first order
        mags_ok = all(1 / 1.5 <= e / r <= 1.5
                      for n, e, r in zip(Ns, errs, ref_err) if n >= 8)
        mode_ok.append(orders_ok and (mags_ok or not check_magnitude))
    return any(mode_ok), "; ".join(parts) + f"; {secs:.0f} s"


# ---------------------------------------------------------------- criterion 1

def test_criterion_1_patch_exactness(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for k in (2, 3):
        for eps2 in (1.0, 1e-6):
            for N in (4, 8):
                worst = max(worst, cell(f"patch-k{k}", k, N, eps2)[0])
    secs = time.perf_counter() - t0
    ok = worst <= 1e-7 and secs < 10
    report(capsys, 1, ok, f"max |||I_h u - u_N|||_M = {worst:.2e} (<= 1e-7), {secs:.1f} s (< 10 s)")
    assert ok


# ---------------------------------------------------------------- criterion 2

def _reproduction_error(k, n_elem=20, n_poly=50):
    rng = np.random.default_rng(100 + k)
    d = Discretization(k)
    worst = 0.0
    exps = [(a, e - a) for e in range(k + 1) for a in range(e + 1)]
    for V, signs, rev, _ in sample_elements(n_elem, seed=50 + k, k=k):
        tri = Triangle(V)
        lap_op = weak_laplacian_op(tri, d, signs, rev)
        grad_op = weak_gradient_op(tri, d, rev)
        c0 = V.mean(axis=0)
        s = V.max(axis=0) - V.min(axis=0)
        for _ in range(n_poly):
            c = rng.normal(size=len(exps))

            def terms(x, y, dx=0, dy=0):
                X, Y = (x - c0[0]) / s[0], (y - c0[1]) / s[1]
                out = 0 * x
                for ci, (a, b) in zip(c, exps):
                    if a < dx or b < dy:
                        continue
                    fa = math.perm(a, dx) * X ** (a - dx) / s[0] ** dx
                    fb = math.perm(b, dy) * Y ** (b - dy) / s[1] ** dy
                    out = out + ci * fa * fb
                return out

            v = lift_polynomial(lambda x, y: terms(x, y),
                                lambda x, y: (terms(x, y, 1, 0), terms(x, y, 0, 1)),
                                tri, d, signs, rev)
            lap_ref = lagrange_interpolate_on_tri(
                lambda x, y: terms(x, y, 2, 0) + terms(x, y, 0, 2), tri, k - 2)
            grad_ref = np.array([
                lagrange_interpolate_on_tri(lambda x, y: terms(x, y, 1, 0), tri, k - 1),
                lagrange_interpolate_on_tri(lambda x, y: terms(x, y, 0, 1), tri, k - 1)])
            lw = lap_op.apply(v, d)
            gw = grad_op.apply(v, d).reshape(2, -1)
            # coefficients made dimensionless with the element scales
            worst = max(worst, np.abs(lw - lap_ref).max() * s.min() ** 2,
                        (np.abs(gw - grad_ref).max(axis=1) * s).max())
    return worst


def test_criterion_2_operator_reproduction(capsys):
    t0 = time.perf_counter()
    worst = max(_reproduction_error(k) for k in (2, 3))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-11 and secs < 5
    report(capsys, 2, ok, f"max scaled coefficient error {worst:.2e} (<= 1e-11), "
                          f"{secs:.1f} s (< 5 s)")
    assert ok


# ---------------------------------------------------------------- criterion 3

def test_criterion_3_block_formula(capsys):
    t0 = time.perf_counter()
    worst, regions = 0.0, set()

    def a(x, y):
        return 0.5 + x * y

    for k in (2, 3):
        d = Discretization(k)
        sl = d.slices()
        for i, (V, signs, rev, reg) in enumerate(sample_elements(20, seed=30 + k, k=k)):
            regions.add(int(reg))
            eps = (1e-1, 1e-3, 1e-5)[i % 3]
            S = local_stiffness(Triangle(V), d, eps, a, signs, rev).matrix
            B = brute_force_stiffness(V, k, eps, a, signs, rev, tri_basis(k).nodes)
            for r in sl:
                for c in sl:
                    scale = max(np.abs(B[r, c]).max(), 1e-13 * np.abs(B).max())
                    worst = max(worst, np.abs(S[r, c] - B[r, c]).max() / scale)
    secs = time.perf_counter() - t0
    ok = worst <= 1e-10 and regions == {0, 1, 2} and secs < 10
    report(capsys, 3, ok, f"max block-relative entry error {worst:.2e} (<= 1e-10) over regions "
                          f"{sorted(regions)}, {secs:.1f} s (< 10 s)")
    assert ok


# ---------------------------------------------------------------- criterion 4

@pytest.mark.slow
def test_criterion_4_example1_table(capsys):
    ok, detail = table_check("example1", 2, NS, 0.15, True)
    report(capsys, 4, ok, "example1 k=2 eps2=1e-10: " + detail)
    assert ok


# ---------------------------------------------------------------- criterion 5

@pytest.mark.slow
def test_criterion_5_example2_table(capsys):
    ok2, d2 = table_check("example2", 2, NS, 0.15, True)
    ok3, d3 = table_check("example2", 3, NS[:4], 0.2, False)
    ok = ok2 and ok3
    report(capsys, 5, ok, f"example2 k=2: {'ok' if ok2 else 'off'} [{d2}] | "
                          f"k=3 orders: {'ok' if ok3 else 'off'} [{d3}]")
    assert ok


# ---------------------------------------------------------------- criterion 6

@pytest.mark.slow
def test_criterion_6_asymptotic_rate(capsys):
    Ns = (16, 32, 64)
    lines, ok = [], True
    for name in ("example1", "example2"):
        disc, exact, _ = sweep(name, 2, Ns)
        slope_exact = -np.polyfit(np.log(Ns), np.log(exact), 1)[0]
        slope_disc = -np.polyfit(np.log(Ns), np.log(disc), 1)[0]
        # the rate statement bounds |||u - u_N|||_M
        ok &= slope_exact >= 3 - 1 - 0.2
        lines.append(f"{name} slope |||u-u_N||| {slope_exact:.3f}, "
                     f"|||I_h u-u_N||| {slope_disc:.3f}")
    report(capsys, 6, ok, "; ".join(lines) + " (need >= 1.8)")
    assert ok


# ---------------------------------------------------------------- criterion 7

def _smooth_sample(rng, eps):
    """Clamped smooth function (x(1-x)y(1-y))^2 sin(ax + c) cos(by + d)."""
    a, b = rng.integers(1, 4, 2) * np.pi
    c = rng.random(2) * np.pi

    def u(x, y):
        q = x * (1 - x) * y * (1 - y)
        return q**2 * np.sin(a * x + c[0]) * np.cos(b * y + c[1])

    def grad(x, y):
        q = x * (1 - x) * y * (1 - y)
        qx, qy = (1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)
        f = np.sin(a * x + c[0]) * np.cos(b * y + c[1])
        fx = a * np.cos(a * x + c[0]) * np.cos(b * y + c[1])
        fy = -b * np.sin(a * x + c[0]) * np.sin(b * y + c[1])
        return 2 * q * qx * f + q**2 * fx, 2 * q * qy * f + q**2 * fy

    return ProblemSpec("smooth", eps, None, None, ExactSolution(u, grad, None, None, None))


def test_criterion_7_norm_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    ratios, per_config = [], []
    for N in (8, 16):
        for eps in (1e-3, 1e-5):
            m = build_mesh(MeshParams(N, eps, 3.0))
            d = Discretization(2)
            p = example2(eps)
            s = assemble(m, d, p)
            dm = s.dofmap
            r = []
            for i in range(100):
                if i % 2 == 0:  # unstructured: stabilizer dominated
                    v = np.zeros(dm.n_dofs)
                    v[dm.free] = rng.normal(size=len(dm.free))
                else:  # smooth: volume terms dominated
                    v = interpolate(_smooth_sample(rng, eps), m, d, dm)
                    v[dm.boundary] = 0.0
                r.append(energy_norm(v, s) / triple_norm_M(v, m, d, dm, p).total)
            per_config.append(f"N={N},eps={eps:g}:[{min(r):.3f},{max(r):.3f}]")
            ratios += r
    secs = time.perf_counter() - t0
    spread = max(ratios) / min(ratios)
    ok = spread < 100 and secs < 60
    report(capsys, 7, ok, f"|||v|||/|||v|||_M in [{min(ratios):.3f}, {max(ratios):.3f}], "
                          f"max/min {spread:.3f} (< 100); {' '.join(per_config)}; {secs:.1f} s")
    assert ok


# ---------------------------------------------------------------- criterion 8

def test_criterion_8_determinism(capsys, tmp_path):
    files = ("example2_k2_convergence.csv", "example2_k2_convergence.json",
             "example2_k2_table.txt")
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        rc = main(["--problem", "example2", "--N", "4,8,16", "--eps2", "1e-6,1e-10",
                   "--out", str(out), "--format", "table,csv,json"])
        capsys.readouterr()
        assert rc == 0
        blobs.append([(out / f).read_bytes() for f in files])
    same = blobs[0] == blobs[1]
    doc = json.loads(blobs[0][1])
    ok = same and len(doc["cells"]) == 6
    report(capsys, 8, ok, f"two sweeps byte-identical across {len(files)} report files: {same}")
    assert ok
