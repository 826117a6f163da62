"""Contact-force distribution under linearized friction-cone constraints.

Given a desired body wrench, solves for stance-foot ground reaction forces
minimizing the total squared force subject to

* net force and net moment matching the wrench,
* a four-face friction pyramid |f_t| <= mu * f_n per stance foot,
* 0 <= f_n <= f_max on the contact normal,
* exactly zero force on swing legs.

The wrench equalities are enforced through a stiff quadratic penalty so the
problem stays well posed even when they are unattainable (flight phase, or a
two-foot stance that cannot realize the full moment); the achieved residual
and a feasibility verdict are reported alongside the forces. The cone faces
are handled by a primal active-set loop on the small dense QP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Weight of the norm-minimization term relative to the wrench penalty. Small
# enough that the wrench residual stays far below the 1e-6 feasibility
# threshold, large enough to keep the KKT systems well conditioned.
_RIDGE = 1e-9
_FEASIBLE_RTOL = 1e-6
# When the wrench is unattainable (rank-deficient or cone-limited stance),
# the residual lands on the rows with the least weight. Moment errors act on
# the small trunk inertia and destabilize far faster than force errors act on
# the mass, and losing vertical support means falling, so those rows are
# penalized harder; horizontal force errors only cause a fore-aft surge
# (which pair gaits need anyway to stay pitch-neutral).
_ROW_WEIGHTS = (0.3, 0.3, 8.0, 30.0, 30.0, 30.0)


@dataclass
class ForceDistribution:
    """Solved contact forces plus solver diagnostics."""

    forces: np.ndarray  # (4, 3) world frame; swing rows are exactly zero
    stance: np.ndarray  # (4,) bool
    residual: float  # |achieved wrench - desired wrench|
    relative_residual: float
    feasible: bool
    iterations: int


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def _tangent_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = normal / np.linalg.norm(normal)
    helper = np.array([1.0, 0.0, 0.0])
    if abs(n @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, helper)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def solve_qp(
    H: np.ndarray, g: np.ndarray, G: np.ndarray, h: np.ndarray, max_iter: int = 80
) -> tuple[np.ndarray, int]:
    """Minimize 0.5 x'Hx + g'x subject to Gx <= h with h >= 0.

    Primal active-set method started from the feasible point x = 0. H must be
    positive definite. Sized for a handful of variables and constraints.
    """
    n = H.shape[0]
    x = np.zeros(n)
    active: list[int] = []
    last_it = 0
    for it in range(max_iter):
        last_it = it + 1
        if active:
            C = G[active]
            m = len(active)
            kkt = np.zeros((n + m, n + m))
            kkt[:n, :n] = H
            kkt[:n, n:] = C.T
            kkt[n:, :n] = C
            rhs = np.concatenate([-(H @ x + g), np.zeros(m)])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            p, lam = sol[:n], sol[n:]
        else:
            p = np.linalg.solve(H, -(H @ x + g))
            lam = np.array([])

        # convergence in the H-norm: roundoff through the ridge-conditioned
        # KKT leaves |p| bouncing around 1e-4, but the remaining objective
        # improvement p'Hp is then negligible against the achieved value
        step_gain = float(p @ (H @ p))
        if step_gain <= 1e-18 * max(1.0, float(x @ (H @ x))) or np.linalg.norm(p) < 1e-11:
            if lam.size and lam.min() < -1e-9:
                active.pop(int(np.argmin(lam)))
                continue
            return x, last_it

        Gp = G @ p
        slack = h - G @ x
        alpha = 1.0
        blocking = -1
        for i in range(G.shape[0]):
            if i in active or Gp[i] <= 1e-12:
                continue
            step = slack[i] / Gp[i]
            if step < alpha:
                alpha = step
                blocking = i
        x = x + alpha * p
        if blocking >= 0:
            active.append(blocking)
        elif alpha >= 1.0:
            # full step taken with no blocking constraint; next pass yields
            # p ~ 0 and either terminates or drops a constraint
            continue
    return x, last_it


def distribute_forces(
    wrench,
    foot_positions,
    stance,
    com,
    friction: float,
    f_max: float,
    normals=None,
) -> ForceDistribution:
    """Distribute a desired (force, moment) wrench over the stance feet.

    ``wrench`` is a 6-vector (N, N*m) about the center of mass ``com``;
    ``foot_positions`` is (4, 3) world frame; ``stance`` is a 4-flag mask.
    ``normals`` optionally gives a contact normal per foot (world z default).
    """
    wrench = np.asarray(wrench, dtype=float).reshape(6)
    feet = np.asarray(foot_positions, dtype=float).reshape(4, 3)
    stance = np.asarray(stance, dtype=bool).reshape(4)
    com = np.asarray(com, dtype=float).reshape(3)
    if friction <= 0.0:
        raise ValueError("friction coefficient must be positive")

    forces = np.zeros((4, 3))
    idx = np.flatnonzero(stance)
    k = idx.size
    norm_b = float(np.linalg.norm(wrench))
    if k == 0:
        rel = norm_b / max(1.0, norm_b)
        return ForceDistribution(
            forces=forces,
            stance=stance,
            residual=norm_b,
            relative_residual=rel if norm_b > 0 else 0.0,
            feasible=norm_b <= _FEASIBLE_RTOL,
            iterations=0,
        )

    if normals is None:
        normals = np.tile(np.array([0.0, 0.0, 1.0]), (4, 1))
    else:
        normals = np.asarray(normals, dtype=float).reshape(4, 3)

    A = np.zeros((6, 3 * k))
    G = np.zeros((6 * k, 3 * k))
    h = np.zeros(6 * k)
    for j, leg in enumerate(idx):
        cols = slice(3 * j, 3 * j + 3)
        A[0:3, cols] = np.eye(3)
        A[3:6, cols] = _skew(feet[leg] - com)
        n = normals[leg] / np.linalg.norm(normals[leg])
        t1, t2 = _tangent_basis(n)
        rows = 6 * j
        G[rows + 0, cols] = t1 - friction * n
        G[rows + 1, cols] = -t1 - friction * n
        G[rows + 2, cols] = t2 - friction * n
        G[rows + 3, cols] = -t2 - friction * n
        G[rows + 4, cols] = -n
        G[rows + 5, cols] = n
        h[rows + 5] = f_max

    w_rows = np.array(_ROW_WEIGHTS)
    Aw = A * w_rows[:, None]
    bw = wrench * w_rows
    H = Aw.T @ Aw + _RIDGE * np.eye(3 * k)
    g = -(Aw.T @ bw)
    x, iterations = solve_qp(H, g, G, h)

    # polish: active-set steps through the ridge-conditioned KKT leave O(1e-4)
    # nullspace noise in the force split; re-min-norm while preserving the
    # achieved wrench and the binding cone faces
    binding = np.abs(G @ x - h) <= 1e-7 * (1.0 + np.abs(h))
    C = np.vstack([A, G[binding]])
    x_clean = np.linalg.lstsq(C, C @ x, rcond=None)[0]
    slack_ok = np.all(G @ x_clean <= h + 1e-9)
    if slack_ok and float(x_clean @ x_clean) <= float(x @ x) + 1e-9:
        x = x_clean

    forces[idx] = x.reshape(k, 3)
    residual = float(np.linalg.norm(A @ x - wrench))
    rel = residual / max(1.0, norm_b)
    return ForceDistribution(
        forces=forces,
        stance=stance,
        residual=residual,
        relative_residual=rel,
        feasible=rel <= _FEASIBLE_RTOL,
        iterations=iterations,
    )
