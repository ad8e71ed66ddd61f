"""System and dwell-time descriptions shared by analysis and oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError
from .linalg import as_matrix, as_square


@dataclass
class ImpulsiveSystem:
    """Linear impulsive system: flow dx/dt = A x + Bc u_c between impulses,
    jump x <- J x^- + Bd u_d at impulse instants."""

    A: np.ndarray
    J: np.ndarray
    Bc: np.ndarray | None = None
    Bd: np.ndarray | None = None

    def __post_init__(self):
        self.A = as_square(self.A, "A")
        self.J = as_square(self.J, "J")
        n = self.A.shape[0]
        if self.J.shape[0] != n:
            raise DimensionError("A and J must have the same dimension")
        if self.Bc is not None:
            self.Bc = as_matrix(self.Bc, "Bc")
            if self.Bc.shape[0] != n:
                raise DimensionError("Bc row count must match A")
        if self.Bd is not None:
            self.Bd = as_matrix(self.Bd, "Bd")
            if self.Bd.shape[0] != n:
                raise DimensionError("Bd row count must match A")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def to_json(self) -> dict:
        d = {"A": self.A.tolist(), "J": self.J.tolist()}
        if self.Bc is not None:
            d["Bc"] = self.Bc.tolist()
        if self.Bd is not None:
            d["Bd"] = self.Bd.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ImpulsiveSystem":
        return cls(np.asarray(d["A"], dtype=float), np.asarray(d["J"], dtype=float),
                   None if d.get("Bc") is None else np.asarray(d["Bc"], dtype=float),
                   None if d.get("Bd") is None else np.asarray(d["Bd"], dtype=float))


@dataclass
class PolytopicSystem:
    """Uncertain impulsive system with (A, J) ranging over the convex hull
    of the listed vertices."""

    vertices: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        if not self.vertices:
            raise InputError("polytope needs at least one vertex")
        verts = []
        n = None
        for Ai, Ji in self.vertices:
            Ai, Ji = as_square(Ai, "A_i"), as_square(Ji, "J_i")
            if n is None:
                n = Ai.shape[0]
            if Ai.shape[0] != n or Ji.shape[0] != n:
                raise DimensionError("all vertices must share one dimension")
            verts.append((Ai, Ji))
        self.vertices = verts

    @property
    def n(self) -> int:
        return self.vertices[0][0].shape[0]

    @property
    def N(self) -> int:
        return len(self.vertices)

    def vertex_system(self, i: int) -> ImpulsiveSystem:
        Ai, Ji = self.vertices[i]
        return ImpulsiveSystem(Ai, Ji)

    def to_json(self) -> dict:
        return {"vertices": [{"A": A.tolist(), "J": J.tolist()}
                             for A, J in self.vertices]}

    @classmethod
    def from_json(cls, d: dict) -> "PolytopicSystem":
        return cls([(np.asarray(v["A"], dtype=float), np.asarray(v["J"], dtype=float))
                    for v in d["vertices"]])


@dataclass
class DwellSpec:
    """Dwell-time regime of the impulse sequence."""

    mode: str                      # periodic | ranged | minimum | maximum
    tbar: float | None = None
    tmin: float | None = None
    tmax: float | None = None

    _MODES = ("periodic", "ranged", "minimum", "maximum")

    def __post_init__(self):
        if self.mode not in self._MODES:
            raise InputError(f"unknown dwell mode {self.mode!r}")
        if self.mode == "ranged":
            if not (self.tmin and self.tmax and 0 < self.tmin <= self.tmax):
                raise InputError("ranged mode needs 0 < tmin <= tmax")
        else:
            if not (self.tbar and self.tbar > 0):
                raise InputError(f"{self.mode} mode needs tbar > 0")

    @classmethod
    def periodic(cls, tbar: float) -> "DwellSpec":
        return cls("periodic", tbar=float(tbar))

    @classmethod
    def ranged(cls, tmin: float, tmax: float) -> "DwellSpec":
        return cls("ranged", tmin=float(tmin), tmax=float(tmax))

    @classmethod
    def minimum(cls, tbar: float) -> "DwellSpec":
        return cls("minimum", tbar=float(tbar))

    @classmethod
    def maximum(cls, tbar: float) -> "DwellSpec":
        return cls("maximum", tbar=float(tbar))

    @property
    def horizon(self) -> float:
        """Largest dwell time the certificate's flow condition must cover."""
        return self.tmax if self.mode == "ranged" else self.tbar

    def to_json(self) -> dict:
        d = {"mode": self.mode}
        if self.mode == "ranged":
            d["tmin"], d["tmax"] = self.tmin, self.tmax
        else:
            d["tbar"] = self.tbar
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DwellSpec":
        if d["mode"] == "ranged":
            return cls.ranged(d["tmin"], d["tmax"])
        return cls(d["mode"], tbar=d["tbar"])
