"""Support vector machines solved by sequential minimal optimization.

The solver is Platt's SMO: pick a KKT-violating multiplier, pair it with a
second one (largest |E1-E2| first, then sweeps), and optimize the pair
analytically under the box and equality constraints.  All candidate loops run
in ascending index order, so the solver is fully deterministic.  Multiclass
problems train one machine per class (one-vs-rest).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence, ParamOutOfRange

KERNELS = ("linear", "sigmoid", "rbf")
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 1_000_000  # pair updates; used when max_iter is -1
_STEP_EPS = 1e-10


def kernel_eval(kind: str, x, z, gamma: float = 1.0, coef0: float = 0.0) -> float:
    """Kernel value for a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if kind == "linear":
        return float(x @ z)
    if kind == "sigmoid":
        return float(np.tanh(gamma * (x @ z) + coef0))
    if kind == "rbf":
        d = x - z
        return float(np.exp(-gamma * (d @ d)))
    raise ParamOutOfRange(f"kernel {kind!r} not in {KERNELS}")


def kernel_matrix(kind: str, A: np.ndarray, B: np.ndarray, gamma: float, coef0: float) -> np.ndarray:
    G = A @ B.T
    if kind == "linear":
        return G
    if kind == "sigmoid":
        return np.tanh(gamma * G + coef0)
    if kind == "rbf":
        sqa = np.sum(A * A, axis=1)[:, None]
        sqb = np.sum(B * B, axis=1)[None, :]
        return np.exp(-gamma * np.clip(sqa + sqb - 2.0 * G, 0.0, None))
    raise ParamOutOfRange(f"kernel {kind!r} not in {KERNELS}")


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """'scale' is 1/(d * Var(X)), 'auto' is 1/d; numbers pass through."""
    d = X.shape[1]
    if gamma == "scale":
        v = float(X.var())
        return 1.0 / (d * v) if v > 0 else 1.0 / d
    if gamma == "auto":
        return 1.0 / d
    g = float(gamma)
    if g <= 0:
        raise ParamOutOfRange("gamma must be positive")
    return g


def smo_solve(K: np.ndarray, y: np.ndarray, C: np.ndarray, tol: float, max_iter: int):
    """Maximize the SVM dual by pairwise steps on the maximal violating
    pair.

    State: f_i = sum_j alpha_j y_j K_ij and u_i = y_i - f_i.  At the optimum
    there is a b with u_i <= b for every index that could still move up and
    u_i >= b for every index that could move down; the gap
    max(u[up]) - min(u[low]) is therefore the KKT violation, and the solver
    stops once it falls to ``tol``.  Each step moves the most violating pair
    as far as the box and curvature allow (non-positive curvature, possible
    for the indefinite sigmoid kernel, is floored like libsvm's TAU).
    Deterministic: ties in the pair selection resolve to the lowest index.
    Returns (alpha, b, n_updates).
    """
    n = len(y)
    alpha = np.zeros(n)
    if n == 0:
        return alpha, 0.0, 0
    u = y.astype(np.float64).copy()  # y_i - f_i with f = 0
    ya = np.zeros(n)  # y_i * alpha_i
    lo = np.where(y > 0, 0.0, -C)  # bounds of y*alpha
    hi = np.where(y > 0, C, 0.0)
    updates = 0
    diag = np.diag(K)
    m = M = np.nan

    while True:
        can_up = ya < hi - 1e-12
        can_dn = ya > lo + 1e-12
        u_up = np.where(can_up, u, -np.inf)
        u_dn = np.where(can_dn, u, np.inf)
        i = int(np.argmax(u_up))
        j = int(np.argmin(u_dn))
        m, M = u_up[i], u_dn[j]
        gap = m - M
        if not np.isfinite(gap) or gap <= tol:
            break
        if updates >= max_iter:
            raise NoConvergence(
                f"SMO hit the {max_iter}-update cap", kkt_violation=float(gap)
            )
        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        lam = min(hi[i] - ya[i], ya[j] - lo[j], gap / max(eta, _STEP_EPS))
        ya[i] += lam
        ya[j] -= lam
        alpha[i] = min(max(ya[i] * y[i], 0.0), C[i])
        alpha[j] = min(max(ya[j] * y[j], 0.0), C[j])
        u -= lam * (K[i] - K[j])
        updates += 1

    if np.isfinite(m) and np.isfinite(M):
        b = float((m + M) / 2.0)
    elif np.isfinite(m):
        b = float(m)
    elif np.isfinite(M):
        b = float(M)
    else:
        b = 0.0
    return alpha, b, updates


def smo_solve_path(K: np.ndarray, y: np.ndarray, C: np.ndarray, tols, max_updates: int):
    """Run the same iterate path as :func:`smo_solve` once, snapshotting the
    solution the first time the KKT gap falls to each requested tolerance.

    The pair selection never looks at the tolerance, so the solution
    recorded at a crossing is exactly what a standalone solve with that
    tolerance returns.  Returns {tol: (alpha, b, n_updates)} for every tol
    crossed within ``max_updates``.
    """
    n = len(y)
    tols = sorted(set(float(t) for t in tols), reverse=True)
    out: dict[float, tuple] = {}
    if n == 0:
        return {t: (np.zeros(0), 0.0, 0) for t in tols}
    alpha = np.zeros(n)
    u = y.astype(np.float64).copy()
    ya = np.zeros(n)
    lo = np.where(y > 0, 0.0, -C)
    hi = np.where(y > 0, C, 0.0)
    updates = 0
    diag = np.diag(K)
    pending = list(tols)

    def snapshot(m, M):
        if np.isfinite(m) and np.isfinite(M):
            b = float((m + M) / 2.0)
        elif np.isfinite(m):
            b = float(m)
        elif np.isfinite(M):
            b = float(M)
        else:
            b = 0.0
        return alpha.copy(), b, updates

    while True:
        can_up = ya < hi - 1e-12
        can_dn = ya > lo + 1e-12
        u_up = np.where(can_up, u, -np.inf)
        u_dn = np.where(can_dn, u, np.inf)
        i = int(np.argmax(u_up))
        j = int(np.argmin(u_dn))
        m, M = u_up[i], u_dn[j]
        gap = m - M
        while pending and (not np.isfinite(gap) or gap <= pending[0]):
            out[pending.pop(0)] = snapshot(m, M)
        if not pending or not np.isfinite(gap) or updates >= max_updates:
            break
        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        lam = min(hi[i] - ya[i], ya[j] - lo[j], gap / max(eta, _STEP_EPS))
        ya[i] += lam
        ya[j] -= lam
        alpha[i] = min(max(ya[i] * y[i], 0.0), C[i])
        alpha[j] = min(max(ya[j] * y[j], 0.0), C[j])
        u -= lam * (K[i] - K[j])
        updates += 1
    return out


@dataclass
class _BinaryMachine:
    support_X: np.ndarray
    support_y: np.ndarray  # in {-1, +1}
    alpha: np.ndarray
    b: float

    def decision(self, X: np.ndarray, kind: str, gamma: float, coef0: float) -> np.ndarray:
        if len(self.alpha) == 0:
            return np.full(X.shape[0], self.b)
        K = kernel_matrix(kind, X, self.support_X, gamma, coef0)
        return K @ (self.alpha * self.support_y) + self.b


@dataclass
class SvmModel:
    machines: list[_BinaryMachine]
    classes: list[int]
    kernel: str
    gamma: float
    coef0: float
    C: float

    @property
    def n_classes(self) -> int:
        return len(self.classes) if len(self.classes) > 2 else 2

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        cols = [m.decision(X, self.kernel, self.gamma, self.coef0) for m in self.machines]
        return np.column_stack(cols)

    def predict(self, X: np.ndarray) -> np.ndarray:
        vals = self.decision_values(X)
        if len(self.machines) == 1:
            return np.where(vals[:, 0] >= 0.0, 1, 0).astype(np.int64)
        return np.argmax(vals, axis=1)


def _balanced_C(C, y_pm, class_weight):
    n = len(y_pm)
    Cs = np.full(n, C)
    if class_weight == "balanced":
        for sign in (-1, 1):
            cnt = int(np.sum(y_pm == sign))
            if cnt:
                Cs[y_pm == sign] = C * n / (2.0 * cnt)
    return Cs


def svm_fit(X, y, n_classes, params, kernel: str) -> SvmModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    C = float(params.get("C", 1.0))
    if C <= 0:
        raise ParamOutOfRange("C must be positive")
    tol = float(params.get("tol", DEFAULT_TOL))
    gamma = resolve_gamma(params.get("gamma", "scale"), X) if kernel != "linear" else 1.0
    coef0 = float(params.get("coef0", 0.0))
    class_weight = params.get("class_weight", None)
    max_iter = int(params.get("max_iter", -1))
    if max_iter == -1:
        max_iter = DEFAULT_MAX_ITER

    machines = []
    problems = [1] if n_classes == 2 else list(range(n_classes))
    for target in problems:
        y_pm = np.where(y == target, 1.0, -1.0)
        K = kernel_matrix(kernel, X, X, gamma, coef0)
        Cs = _balanced_C(C, y_pm, class_weight)
        alpha, b, _ = smo_solve(K, y_pm, Cs, tol, max_iter)
        sv = alpha > 1e-12
        machines.append(
            _BinaryMachine(
                support_X=X[sv].copy(),
                support_y=y_pm[sv].copy(),
                alpha=alpha[sv].copy(),
                b=b,
            )
        )
    return SvmModel(
        machines=machines,
        classes=list(range(n_classes)),
        kernel=kernel,
        gamma=gamma,
        coef0=coef0,
        C=C,
    )


def svm_decision(model: SvmModel, x) -> tuple[float, int]:
    """Signed margin and predicted class for one vector (binary machines
    report the margin of the positive class)."""
    X = np.asarray(x, dtype=np.float64)[None, :]
    vals = model.decision_values(X)[0]
    label = int(model.predict(X)[0])
    margin = float(vals[0]) if len(model.machines) == 1 else float(vals[label])
    return margin, label
