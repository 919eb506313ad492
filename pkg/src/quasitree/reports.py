"""Pairwise distortion reports for maps between finite metric spaces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import DEFAULT_TOL


@dataclass
class DistortionReport:
    """Per-pair comparison of a source metric ``d`` with an image metric.

    ``additive_error = d - image_d``.  ``direction`` says which sign the
    map guarantees: "contract" (non-expanding, errors >= 0), "expand"
    (image dominates, errors <= 0) or "any".
    """

    nodes: tuple[str, ...]
    d: np.ndarray
    image_d: np.ndarray
    direction: str = "contract"
    bound_claimed: float | None = None
    tol: float = DEFAULT_TOL
    bounds: dict[str, float] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        k = len(self.nodes)
        self._iu = np.triu_indices(k, 1)
        self._err = (self.d - self.image_d)[self._iu]

    @property
    def errors(self) -> np.ndarray:
        return self._err

    @property
    def signed_max(self) -> float:
        if self.direction == "contract":
            return float(self._err.max()) if len(self._err) else 0.0
        if self.direction == "expand":
            return float((-self._err).max()) if len(self._err) else 0.0
        return float(np.abs(self._err).max()) if len(self._err) else 0.0

    @property
    def max_additive(self) -> float:
        return max(self.signed_max, 0.0) if self.direction != "any" else self.signed_max

    @property
    def sign_ok(self) -> bool:
        if not len(self._err):
            return True
        if self.direction == "contract":
            return bool(self._err.min() >= -self.tol)
        if self.direction == "expand":
            return bool(self._err.max() <= self.tol)
        return True

    @property
    def best_L_C(self) -> tuple[float, float]:
        worst = float(np.abs(self._err).max()) if len(self._err) else 0.0
        return 1.0, worst

    @property
    def witness(self) -> tuple[str, str] | None:
        if not len(self._err):
            return None
        if self.direction == "contract":
            t = int(np.argmax(self._err))
        elif self.direction == "expand":
            t = int(np.argmax(-self._err))
        else:
            t = int(np.argmax(np.abs(self._err)))
        i, j = self._iu[0][t], self._iu[1][t]
        return self.nodes[i], self.nodes[j]

    @property
    def bound_satisfied(self) -> bool:
        within = self.bound_claimed is None or self.max_additive <= self.bound_claimed + self.tol
        return bool(within and self.sign_ok and all(self.checks.values()))

    def bound_ok(self, name: str) -> bool:
        return self.max_additive <= self.bounds[name] + self.tol

    @property
    def pairs(self) -> list[tuple[str, str, float, float, float]]:
        i, j = self._iu
        return [
            (self.nodes[a], self.nodes[b], float(self.d[a, b]), float(self.image_d[a, b]), float(e))
            for a, b, e in zip(i, j, self._err)
        ]

    def pair_dump(self) -> str:
        """Two-column ``d image_d`` text for plotting."""
        i, j = self._iu
        return "".join(f"{self.d[a, b]:.9f} {self.image_d[a, b]:.9f}\n" for a, b in zip(i, j))

    def to_dict(self, include_pairs: bool = False) -> dict:
        out = {
            "n_points": len(self.nodes),
            "n_pairs": int(len(self._err)),
            "direction": self.direction,
            "max_additive": self.max_additive,
            "best_L_C": list(self.best_L_C),
            "witness": list(self.witness) if self.witness else None,
            "bound_claimed": self.bound_claimed,
            "bound_satisfied": self.bound_satisfied,
            "sign_ok": self.sign_ok,
            "bounds": {k: {"value": v, "holds": self.bound_ok(k)} for k, v in self.bounds.items()},
            "checks": dict(self.checks),
            "values": dict(self.values),
        }
        if include_pairs:
            out["pairs"] = [
                {"x": x, "y": y, "d": a, "image_d": b, "additive_error": e}
                for x, y, a, b, e in self.pairs
            ]
        return out
