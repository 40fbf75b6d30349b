"""Dense complex matrices with tolerance-aware structural predicates.

Every structural residual is measured in the max-norm (largest absolute
entry) so that thresholds do not depend on the dimension.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

ENV_EPS_DECOHERENCE = "HISTKIT_EPS_DECOHERENCE"


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


@dataclass(frozen=True)
class Tolerances:
    eps_structure: float = 1e-10
    eps_decoherence: float = 1e-9
    eps_prob: float = 1e-12

    def __post_init__(self):
        for name in ("eps_structure", "eps_decoherence", "eps_prob"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ContractError(f"tolerance {name} must be strictly positive, got {value!r}")
        if self.eps_prob > self.eps_decoherence:
            raise ContractError(
                f"eps_prob ({self.eps_prob}) must not exceed eps_decoherence ({self.eps_decoherence})"
            )

    @classmethod
    def from_env(cls, eps_decoherence: float | None = None, **kwargs) -> "Tolerances":
        """Defaults, overridden by ``HISTKIT_EPS_DECOHERENCE``, overridden by the argument."""
        if eps_decoherence is None:
            raw = os.environ.get(ENV_EPS_DECOHERENCE)
            if raw:
                try:
                    eps_decoherence = float(raw)
                except ValueError as exc:
                    raise ContractError(f"{ENV_EPS_DECOHERENCE}={raw!r} is not a number") from exc
        if eps_decoherence is not None:
            kwargs["eps_decoherence"] = eps_decoherence
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {
            "eps_structure": self.eps_structure,
            "eps_decoherence": self.eps_decoherence,
            "eps_prob": self.eps_prob,
        }


DEFAULT_TOL = Tolerances()


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a square, finite complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ContractError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} has non-finite entries")
    return a


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")


def max_norm(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def mat_product(a, b) -> np.ndarray:
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    _same_dim(a, b)
    return a @ b


def mat_sum(a, b) -> np.ndarray:
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    _same_dim(a, b)
    return a + b


def scale(c: complex, a) -> np.ndarray:
    return complex(c) * as_matrix(a)


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def ket_projector(v) -> np.ndarray:
    """|v><v| for the normalised vector ``v``."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise ContractError("cannot build a projector from a zero or non-finite vector")
    v = v / norm
    return np.outer(v, v.conj())


def span_projector(vectors) -> np.ndarray:
    """Projector onto the span of ``vectors`` (rows), orthonormalised with QR."""
    rows = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    q, r = np.linalg.qr(rows.T)
    keep = np.abs(np.diag(r)) > 1e-12
    if not np.all(keep):
        raise ContractError("span vectors are linearly dependent")
    return q @ q.conj().T


def hermiticity_residual(m) -> float:
    m = as_matrix(m)
    return max_norm(m - m.conj().T)


def idempotence_residual(m) -> float:
    m = as_matrix(m)
    return max_norm(m @ m - m)


def unitarity_residual(u) -> float:
    u = as_matrix(u)
    return max_norm(u.conj().T @ u - np.eye(u.shape[0]))


def check_projector(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return (idempotence_residual(m) <= tol.eps_structure
            and hermiticity_residual(m) <= tol.eps_structure)


def check_unitary(u, tol: Tolerances = DEFAULT_TOL) -> bool:
    return unitarity_residual(u) <= tol.eps_structure


def density_residuals(w) -> dict:
    """Hermiticity, most negative eigenvalue and trace defect of ``w``."""
    w = as_matrix(w, "density")
    herm = hermiticity_residual(w)
    evals = np.linalg.eigvalsh((w + w.conj().T) / 2)
    return {
        "hermiticity": herm,
        "min_eigenvalue": float(evals.min()),
        "trace_defect": abs(complex(np.trace(w)) - 1.0),
    }


def check_density(w, tol: Tolerances = DEFAULT_TOL) -> bool:
    r = density_residuals(w)
    return (r["hermiticity"] <= tol.eps_structure
            and r["min_eigenvalue"] >= -tol.eps_structure
            and r["trace_defect"] <= tol.eps_structure)


def require_density(w, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    w = as_matrix(w, "density")
    r = density_residuals(w)
    if not (r["hermiticity"] <= tol.eps_structure
            and r["min_eigenvalue"] >= -tol.eps_structure
            and r["trace_defect"] <= tol.eps_structure):
        raise ContractError(
            "invalid density operator: hermiticity residual {hermiticity:.3g}, "
            "min eigenvalue {min_eigenvalue:.3g}, trace defect {trace_defect:.3g} "
            "(threshold {thr:.3g})".format(thr=tol.eps_structure, **r)
        )
    return w


def commutator_residual(p, q) -> float:
    p, q = as_matrix(p, "p"), as_matrix(q, "q")
    _same_dim(p, q)
    return max_norm(p @ q - q @ p)


def commutes(p, q, tol: Tolerances = DEFAULT_TOL) -> bool:
    return commutator_residual(p, q) <= tol.eps_structure


def propagator(h, dt: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """exp(-i h dt) for Hermitian ``h`` via its eigendecomposition."""
    h = as_matrix(h, "generator")
    resid = hermiticity_residual(h)
    if resid > tol.eps_structure:
        raise ContractError(
            f"generator is not Hermitian: residual {resid:.3g} > {tol.eps_structure:.3g}"
        )
    if dt == 0:
        return identity(h.shape[0])
    evals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    return (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T


def sqrt_factor(w, cutoff: float = 0.0) -> np.ndarray:
    """Return ``S`` (dim x rank) with ``S S^dagger = w`` for a density ``w``.

    Eigenvalues at or below ``cutoff`` are dropped, negative rounding noise
    included.
    """
    w = as_matrix(w, "density")
    evals, vecs = np.linalg.eigh((w + w.conj().T) / 2)
    keep = evals > cutoff
    if not np.any(keep):
        keep = evals == evals.max()
    return vecs[:, keep] * np.sqrt(np.clip(evals[keep], 0.0, None))
