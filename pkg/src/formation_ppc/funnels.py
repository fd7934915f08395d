"""Prescribed-performance funnels and the error transform.

Each edge error component must stay inside a shrinking envelope
rho(t) = (rho0 - rho_inf) * exp(-rate * t) + rho_inf. The normalized error
xhat = xbar / rho(t) is mapped through the symmetric log-ratio transform
T(xhat) = ln((1 + xhat) / (1 - xhat)), which blows up at the funnel boundary;
leaders steer with the transformed error weighted by its Jacobian.

Functions accept scalars or numpy arrays and broadcast componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import FormationSpecError, FunnelViolationError, UnknownEdgeError
from .graphs import LeaderFollowerGraph, incidence_matrix

__all__ = [
    "PerformanceFunnel",
    "FunnelSettings",
    "PpcConfig",
    "normalize_error",
    "transform",
    "transform_jacobian",
    "transformed_error_rate",
    "leader_control",
]

# Normalized errors are clamped to this magnitude inside the simulation
# kernels so trajectories stay finite after a funnel violation.
CLAMP_LIMIT = 1.0 - 1e-9


@dataclass(frozen=True)
class PerformanceFunnel:
    """Exponentially shrinking envelope for one edge error.

    rho0 is the radius at t=0, rho_inf the asymptotic radius, rate the decay
    speed. rho0 == rho_inf gives a constant funnel (shrink rate 0).
    """

    rho0: float
    rho_inf: float
    rate: float

    def __post_init__(self) -> None:
        if not (self.rho0 > 0.0 and self.rho_inf > 0.0 and self.rate > 0.0):
            raise FormationSpecError(
                "funnel parameters must be strictly positive"
            )
        if self.rho0 < self.rho_inf:
            raise FormationSpecError("rho0 must be >= rho_inf")

    def radius(self, t):
        """rho(t)."""
        return (self.rho0 - self.rho_inf) * np.exp(-self.rate * np.asarray(t)) + self.rho_inf

    def radius_rate(self, t):
        """d rho / dt (non-positive)."""
        return -self.rate * (self.rho0 - self.rho_inf) * np.exp(-self.rate * np.asarray(t))

    def shrink_rate(self, t):
        """alpha(t) = -rho'(t) / rho(t); 0 for a constant funnel."""
        return -self.radius_rate(t) / self.radius(t)


def normalize_error(xbar, funnel: PerformanceFunnel, t):
    """xhat = xbar / rho(t)."""
    return np.asarray(xbar) / funnel.radius(t)


def transform(xhat):
    """Symmetric log-ratio transform, defined for |xhat| < 1.

    Raises FunnelViolationError if any component sits on or outside the
    boundary.
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    if np.any(np.abs(xhat) >= 1.0):
        worst = float(np.max(np.abs(xhat)))
        raise FunnelViolationError(
            f"normalized error magnitude {worst} is outside the open unit funnel"
        )
    return np.log1p(xhat) - np.log1p(-xhat)


def clamped_transform(xhat, limit: float = CLAMP_LIMIT):
    """Transform with input clamped to |xhat| <= limit; used by simulation."""
    clipped = np.clip(np.asarray(xhat, dtype=np.float64), -limit, limit)
    return np.log1p(clipped) - np.log1p(-clipped)


def transform_jacobian(xhat, funnel: PerformanceFunnel, t):
    """d transform / d xbar = 2 / ((1 - xhat^2) * rho(t)); always >= 2/rho."""
    xhat = np.asarray(xhat, dtype=np.float64)
    return 2.0 / ((1.0 - xhat * xhat) * funnel.radius(t))


def transformed_error_rate(xbar, xbar_dot, funnel: PerformanceFunnel, t):
    """Analytic time derivative of transform(xbar(t) / rho(t)).

    Equals jacobian * (xbar_dot + alpha * xbar); property tests check it
    against finite differences.
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    xhat = normalize_error(xbar, funnel, t)
    jac = transform_jacobian(xhat, funnel, t)
    return jac * (np.asarray(xbar_dot) + funnel.shrink_rate(t) * xbar)


# -- per-edge configuration --------------------------------------------------


@dataclass(frozen=True)
class FunnelSettings:
    """Funnel parameters plus the control gain for one edge."""

    rho0: float
    rho_inf: float
    rate: float
    gain: float

    def __post_init__(self) -> None:
        if self.gain <= 0.0:
            raise FormationSpecError("gain must be strictly positive")
        PerformanceFunnel(self.rho0, self.rho_inf, self.rate)

    @property
    def funnel(self) -> PerformanceFunnel:
        return PerformanceFunnel(self.rho0, self.rho_inf, self.rate)

    def to_json_dict(self) -> dict:
        return {
            "rho0": self.rho0,
            "rho_inf": self.rho_inf,
            "l": self.rate,
            "gain": self.gain,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping, base: "FunnelSettings | None" = None) -> "FunnelSettings":
        def pick(key: str, fallback: float | None) -> float:
            if key in data:
                return float(data[key])
            if fallback is None:
                raise FormationSpecError(f"funnel settings missing key {key!r}")
            return fallback

        return cls(
            rho0=pick("rho0", None if base is None else base.rho0),
            rho_inf=pick("rho_inf", None if base is None else base.rho_inf),
            rate=pick("l", None if base is None else base.rate),
            gain=pick("gain", None if base is None else base.gain),
        )


@dataclass(frozen=True)
class PpcConfig:
    """Default funnel settings plus per-edge overrides (by edge id)."""

    default: FunnelSettings
    overrides: tuple[tuple[int, FunnelSettings], ...] = ()

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for edge_id, _ in self.overrides:
            if edge_id in seen:
                raise FormationSpecError(f"duplicate funnel override for edge {edge_id}")
            seen.add(edge_id)

    def settings_for(self, edge_id: int) -> FunnelSettings:
        for other, settings in self.overrides:
            if other == edge_id:
                return settings
        return self.default

    def funnel_for(self, edge_id: int) -> PerformanceFunnel:
        return self.settings_for(edge_id).funnel

    def gain_for(self, edge_id: int) -> float:
        return self.settings_for(edge_id).gain

    def validate_edges(self, graph: LeaderFollowerGraph) -> None:
        for edge_id, _ in self.overrides:
            if edge_id not in graph.edge_index:
                raise UnknownEdgeError(
                    f"funnel override references unknown edge {edge_id}"
                )

    def arrays(self, graph: LeaderFollowerGraph) -> dict[str, np.ndarray]:
        """Per-edge parameter vectors in graph edge order (kernel inputs)."""
        m = graph.m
        out = {
            "rho0": np.empty(m),
            "rho_inf": np.empty(m),
            "rate": np.empty(m),
            "gain": np.empty(m),
        }
        for k, edge_id in enumerate(graph.edge_ids):
            settings = self.settings_for(edge_id)
            out["rho0"][k] = settings.rho0
            out["rho_inf"][k] = settings.rho_inf
            out["rate"][k] = settings.rate
            out["gain"][k] = settings.gain
        return out

    def to_json_dict(self) -> dict:
        return {
            "default": self.default.to_json_dict(),
            "edges": {
                str(edge_id): settings.to_json_dict()
                for edge_id, settings in self.overrides
            },
        }

    @classmethod
    def from_json_dict(cls, data: object) -> "PpcConfig":
        if not isinstance(data, Mapping) or "default" not in data:
            raise FormationSpecError("funnel config must be an object with 'default'")
        default = FunnelSettings.from_json_dict(data["default"])
        overrides = []
        for key, raw in dict(data.get("edges", {})).items():
            overrides.append((int(key), FunnelSettings.from_json_dict(raw, base=default)))
        return cls(default=default, overrides=tuple(overrides))


def leader_control(
    graph: LeaderFollowerGraph,
    config: PpcConfig,
    xbar: np.ndarray,
    t: float,
) -> np.ndarray:
    """Stacked leader input u = -D_L diag(gain * jacobian) transform(xhat).

    xbar has shape (m, d) in graph edge order; the result has one row per
    leader, in node input order. Raises FunnelViolationError if any edge
    error sits on or outside its funnel.
    """
    xbar = np.atleast_2d(np.asarray(xbar, dtype=np.float64))
    if xbar.shape[0] != graph.m:
        raise FormationSpecError(
            f"xbar has {xbar.shape[0]} rows, expected one per edge ({graph.m})"
        )
    params = config.arrays(graph)
    rho = (params["rho0"] - params["rho_inf"]) * np.exp(-params["rate"] * t) + params[
        "rho_inf"
    ]
    xhat = xbar / rho[:, None]
    eps = transform(xhat)
    jac = 2.0 / ((1.0 - xhat * xhat) * rho[:, None])
    weighted = params["gain"][:, None] * jac * eps
    D = incidence_matrix(graph).astype(np.float64)
    return -(D[graph.leader_rows] @ weighted)
