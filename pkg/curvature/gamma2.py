# curvature/gamma2.py
"""
Gamma_2 and local best Bakry-Emery constants.

Gamma(f)(x) and Gamma_2(f)(x) are quadratic forms in the values of f on the
2-hop neighbourhood of x:

    Gamma(f)(x)   = f^T G_x f,  G_x = 1/2 sum_y a_xy (e_y - e_x)(e_y - e_x)^T
    Gamma_2(f)(x) = f^T H_x f,  H_x = 1/2 sum_z A_xz G_z - sym(G_x A)

The best constant at x is the infimum of the Rayleigh quotient of H_x against
G_x. The kernel of G_x is eliminated by a Schur complement, which leaves a
positive-definite generalized eigenproblem on the range of G_x.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from functionals.parallel import ParallelLadderEngine
from generator.generator import Generator, carre_du_champ
from mmspace.errors import NumericalError
from observability.obs import inc, timer

logger = logging.getLogger("heatperim")

METHOD = "local generalized eigh on 2-hop neighbourhoods, kernel of Gamma deflated by Schur complement"
_RANK_TOL = 1e-12


def gamma2(gen: Generator, f: np.ndarray) -> np.ndarray:
    """Gamma_2(f) = 1/2 A Gamma(f, f) - Gamma(f, Af)."""
    f = np.asarray(f, dtype=float)
    return 0.5 * gen.apply(carre_du_champ(gen, f)) - carre_du_champ(gen, f, gen.apply(f))


@dataclass(frozen=True)
class CurvatureReport:
    per_vertex_k: np.ndarray
    global_k: float
    method: str
    neighborhood_radius: int
    witness_vertex: int
    witness: np.ndarray  # full-length f attaining global_k at witness_vertex

    def to_dict(self) -> dict:
        return {
            "globalK": self.global_k,
            "method": self.method,
            "radius": self.neighborhood_radius,
            "witnessVertex": self.witness_vertex,
        }


def _hop_neighbourhood(gen: Generator, x: int, hops: int) -> np.ndarray:
    indptr, indices = gen.A.indptr, gen.A.indices
    seen = {x}
    frontier = [x]
    for _ in range(hops):
        nxt = []
        for v in frontier:
            for w in indices[indptr[v]:indptr[v + 1]]:
                if w not in seen:
                    seen.add(int(w))
                    nxt.append(int(w))
        frontier = nxt
    return np.array(sorted(seen), dtype=int)


def _gamma_form(A_loc: np.ndarray, v: int) -> np.ndarray:
    """Matrix of Gamma(.)(v) in local coordinates."""
    m = A_loc.shape[0]
    G = np.zeros((m, m))
    for y in np.flatnonzero(A_loc[v]):
        if y == v:
            continue
        a = A_loc[v, y]
        G[y, y] += 0.5 * a
        G[v, v] += 0.5 * a
        G[v, y] -= 0.5 * a
        G[y, v] -= 0.5 * a
    return G


def local_best_k(gen: Generator, x: int, hops: int = 2) -> Tuple[float, np.ndarray]:
    """
    Best constant at x and a local witness.

    Returns:
        (K_x, f) with f a full-length vector supported on the neighbourhood

    Raises:
        NumericalError: when an eigensolve fails at x
    """
    nodes = _hop_neighbourhood(gen, x, hops)
    A_loc = gen.A[nodes][:, nodes].toarray()
    local = {int(v): k for k, v in enumerate(nodes)}
    lx = local[int(x)]

    G = _gamma_form(A_loc, lx)
    H = np.zeros_like(G)
    for z in np.flatnonzero(A_loc[lx]):
        H += 0.5 * A_loc[lx, z] * _gamma_form(A_loc, z)
    GA = G @ A_loc
    H -= 0.5 * (GA + GA.T)
    H = 0.5 * (H + H.T)

    try:
        w, U = linalg.eigh(G)
        scale = max(float(np.abs(w).max()), 1e-300)
        rng = w > _RANK_TOL * scale
        P, Z = U[:, rng], U[:, ~rng]
        Gpp = np.diag(w[rng])
        Hpp = P.T @ H @ P
        if Z.shape[1]:
            Hpz = P.T @ H @ Z
            Hzz = Z.T @ H @ Z
            Hzz_pinv = linalg.pinvh(Hzz)
            S = Hpp - Hpz @ Hzz_pinv @ Hpz.T
        else:
            Hpz = Hzz_pinv = None
            S = Hpp
        S = 0.5 * (S + S.T)
        vals, vecs = linalg.eigh(S, Gpp)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"local curvature eigensolve failed at vertex {x}: {exc}") from exc
    inc("local_eigenproblems")

    y = vecs[:, 0]
    coeff = P @ y
    if Hpz is not None:
        coeff = coeff + Z @ (-Hzz_pinv @ Hpz.T @ y)
    witness = np.zeros(gen.n)
    witness[nodes] = coeff
    return float(vals[0]), witness


def best_k(gen: Generator, neighborhood_radius: int = 2, workers: int = 1) -> CurvatureReport:
    """
    Per-vertex best constants K(x) = inf Gamma_2(f)(x) / Gamma(f)(x).

    Args:
        gen: Generator
        neighborhood_radius: Hops of the local neighbourhood, >= 2
        workers: Concurrent local solves

    Raises:
        ValueError: radius below 2
        NumericalError: failed local eigensolve (message names the vertex)
    """
    if neighborhood_radius < 2:
        raise ValueError(f"Gamma_2 at a vertex needs 2 hops, got {neighborhood_radius}")

    engine = ParallelLadderEngine(workers)
    with timer("curvature_best_k"):
        results: List[Tuple[float, np.ndarray]] = engine.run(
            lambda v: local_best_k(gen, int(v), neighborhood_radius), list(range(gen.n)), tag="curvature"
        )

    ks = np.array([k for k, _ in results])
    ks.setflags(write=False)
    worst = int(np.argmin(ks))
    report = CurvatureReport(
        per_vertex_k=ks,
        global_k=float(ks[worst]),
        method=METHOD,
        neighborhood_radius=int(neighborhood_radius),
        witness_vertex=worst,
        witness=results[worst][1],
    )
    logger.info(f"[CURV] {gen.space.label or 'space'}: globalK={report.global_k:.6g} at vertex {worst}")
    return report


def curvature_check(gen: Generator, report: CurvatureReport, f: np.ndarray, tol: float = 1e-8) -> Optional[int]:
    """First vertex where Gamma_2(f) < globalK Gamma(f) beyond tolerance, or None."""
    g2 = gamma2(gen, f)
    g = carre_du_champ(gen, f)
    scale = tol * max(float(np.dot(f, f)) * float(np.abs(gen.A.diagonal()).max()) ** 2, 1.0)
    bad = np.flatnonzero(g2 < report.global_k * g - scale)
    return int(bad[0]) if bad.size else None
