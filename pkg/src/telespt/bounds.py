"""Locality bounds on teleportation distance, evaluated as checks with slack."""
from __future__ import annotations

from dataclasses import dataclass

from .protocol import Protocol, depth_velocity, task_distance

__all__ = [
    "BoundCheck",
    "BoundReport",
    "check_bounds",
    "fyhl_bound",
    "min_depth",
    "necessary_measurements",
    "standard_bound",
    "task_distance",
]

LR_FAILURE = "exceeds Lieb-Robinson without measurements"


def standard_bound(k: int, M: int, T: int, v: float) -> float:
    """``vT + 2v floor(M / 2k) (T - 1)``: the k-qubit standard teleportation bound."""
    return v * T + 2 * v * (M // (2 * k)) * (T - 1)


def fyhl_bound(k: int, M: int, T: int, v: float) -> float:
    """``2 (1 + floor(M / k)) v T``: the general bound for measurement and feedback."""
    return 2 * (1 + M // k) * v * T


def min_depth(k: int, v: float) -> float:
    """Smallest depth compatible with teleporting k qubits beyond the light cone."""
    return 1 + k / v


def necessary_measurements(p: Protocol) -> tuple[str, ...]:
    """Ids that feed at least one recovery parity; the others may be omitted."""
    used: set[str] = set()
    for rec in p.recoveries:
        used.update(rec.parity_of)
    return tuple(m.id for m in p.measurements if m.id in used)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    passed: bool
    slack: float | None  # None when the check does not apply
    applies: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "pass": self.passed,
            "slack": self.slack,
            "applies": self.applies,
            "note": self.note,
        }


@dataclass(frozen=True)
class BoundReport:
    protocol: str
    L: float
    T: int
    v: float
    M: int
    M_raw: int
    k: int
    R_regions: int | None
    checks: tuple[BoundCheck, ...]
    warnings: tuple[str, ...] = ()

    @property
    def teleports(self) -> bool:
        """True when the logical qubits move beyond the bare light cone ``vT``."""
        return self.L > self.v * self.T

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "L": self.L,
            "T": self.T,
            "v": self.v,
            "M": self.M,
            "M_raw": self.M_raw,
            "k": self.k,
            "R_regions": self.R_regions,
            "teleports": self.teleports,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "warnings": list(self.warnings),
        }


def _num(x: float):
    return int(x) if float(x).is_integer() else float(x)


def check_bounds(p: Protocol, regions: int | None = None) -> BoundReport:
    """Evaluate every bound for ``p``; failures are reported, never raised."""
    L = task_distance(p)
    dv = depth_velocity(p)
    T, v = dv.T, dv.v
    k = p.k
    M = len(necessary_measurements(p))
    checks = []

    std = standard_bound(k, M, T, v)
    checks.append(BoundCheck("standard", _num(std), L <= std, _num(std - L)))

    fyhl = fyhl_bound(k, M, T, v)
    checks.append(BoundCheck("fyhl", _num(fyhl), L <= fyhl, _num(fyhl - L)))

    teleports = L > v * T
    if v > 0 and teleports:
        need = min_depth(k, v)
        checks.append(BoundCheck("min_depth", _num(need), T >= need, _num(T - need)))
    else:
        checks.append(
            BoundCheck("min_depth", _num(min_depth(k, v)) if v > 0 else 0, True, None, False,
                       "only constrains protocols with L > vT")
        )

    lr = v * T
    if M == 0:
        ok = L <= lr
        checks.append(
            BoundCheck("lieb_robinson", _num(lr), ok, _num(lr - L), True, "" if ok else LR_FAILURE)
        )
    else:
        checks.append(
            BoundCheck("lieb_robinson", _num(lr), True, None, False,
                       "measurements present: the sharp light cone does not apply")
        )
    return BoundReport(
        p.name, L, T, v, M, p.num_measurements, k, regions, tuple(checks), dv.warnings
    )
