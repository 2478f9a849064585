"""Kinematic bolt-removal world and the five primitive controllers.

Geometry is in millimetres with z pointing up. The bolt axis is vertical and
its head top sits at ``bolt[2]``. Obstacles are vertical cylinders, i.e.
discs in plan view. Controllers never mutate their input: each returns a
:class:`ControllerOutcome` carrying the successor world. A failed controller
returns the input world with only ``fault`` set.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, TextIO

import numpy as np

from ._validation import check_nonnegative, check_positive, check_probability

__all__ = [
    "WorldParams",
    "Obstacle",
    "WorldState",
    "FaultReason",
    "ControllerOutcome",
    "TraceRecord",
    "EpisodeTrace",
    "ctl_approach",
    "ctl_mate",
    "ctl_push",
    "ctl_insert",
    "ctl_disassemble",
    "observe",
    "retraction_profile",
    "CONTROLLERS",
]

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class WorldParams:
    compliance_radius: float = 4.0       # passive socket lead-in
    clearance_required: float = 10.0     # sleeve envelope around the bolt axis
    push_margin: float = 5.0
    hover_height: float = 30.0
    thread_pitch: float = 1.5
    engaged_turns: float = 8.0
    spin_rate: float = 2.0               # turns per second
    torque_cutoff: float = 5.0           # N*m
    contact_depth: float = 1.0
    mate_sigma: float = 0.2
    mate_block_rate: float = 0.2
    camera_radius: float = 0.0
    obs_sigma: float = 0.3
    retract_speed_factor: float = 1.0    # 1.0 = retraction matches pitch * spin rate
    retract_tolerance: float = 0.1
    home: Vec3 = (100.0, 100.0, 300.0)

    def __post_init__(self):
        for name in ("compliance_radius", "clearance_required", "push_margin", "hover_height",
                     "contact_depth", "mate_sigma", "camera_radius", "obs_sigma",
                     "retract_tolerance", "engaged_turns"):
            check_nonnegative(getattr(self, name), name)
        for name in ("thread_pitch", "spin_rate", "torque_cutoff", "retract_speed_factor"):
            check_positive(getattr(self, name), name)
        check_probability(self.mate_block_rate, "mate_block_rate")
        object.__setattr__(self, "home", tuple(float(v) for v in self.home))


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float
    movable: bool = True
    kind: str = "block"

    def clearance_to(self, px: float, py: float) -> float:
        return math.hypot(self.x - px, self.y - py) - self.radius


class FaultReason(str, enum.Enum):
    TORQUE_EXCEEDED = "torque_exceeded"
    NOT_ENGAGED = "not_engaged"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class WorldState:
    bolt: Vec3
    believed_bolt: Vec3
    nutrunner: Vec3
    obstacles: tuple[Obstacle, ...] = ()
    engaged_turns: float = 8.0
    inserted: bool = False
    disassembled: bool = False
    fault: FaultReason | None = None
    params: WorldParams = field(default_factory=WorldParams)

    @classmethod
    def create(cls, bolt: Iterable[float], believed_bolt: Iterable[float] | None = None,
               obstacles: Iterable[Obstacle] = (), params: WorldParams | None = None) -> "WorldState":
        params = params or WorldParams()
        bolt = tuple(float(v) for v in bolt)
        believed = bolt if believed_bolt is None else tuple(float(v) for v in believed_bolt)
        return cls(bolt=bolt, believed_bolt=believed, nutrunner=params.home,
                   obstacles=tuple(obstacles), engaged_turns=params.engaged_turns, params=params)

    @property
    def alignment_error(self) -> float:
        return math.hypot(self.nutrunner[0] - self.bolt[0], self.nutrunner[1] - self.bolt[1])

    @property
    def clearance(self) -> float:
        if not self.obstacles:
            return math.inf
        return min(o.clearance_to(self.bolt[0], self.bolt[1]) for o in self.obstacles)

    @property
    def hovering(self) -> bool:
        return not self.inserted and math.isclose(self.nutrunner[2], self.bolt[2] + self.params.hover_height)

    def digest(self) -> str:
        return hashlib.sha1(repr(self).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ControllerOutcome:
    new_world: WorldState
    succeeded: bool
    fault_reason: FaultReason | None = None

    def __post_init__(self):
        if self.succeeded == (self.fault_reason is not None):
            raise ValueError("fault_reason must be set exactly when the controller failed")


def _ok(world: WorldState, **changes) -> ControllerOutcome:
    return ControllerOutcome(replace(world, fault=None, **changes), True)


def _fail(world: WorldState, reason: FaultReason) -> ControllerOutcome:
    return ControllerOutcome(replace(world, fault=reason), False, reason)


def _hover_point(world: WorldState, x: float, y: float) -> Vec3:
    return (x, y, world.bolt[2] + world.params.hover_height)


def ctl_approach(world: WorldState, target: Vec3 | None = None,
                 rng: np.random.Generator | None = None) -> ControllerOutcome:
    """Fly to hover height above ``target`` (the believed bolt position)."""
    tx, ty = (target or world.believed_bolt)[:2]
    return _ok(world, nutrunner=_hover_point(world, tx, ty), inserted=False)


def _view_blocked(world: WorldState) -> bool:
    return world.clearance < world.params.camera_radius


def ctl_mate(world: WorldState, rng: np.random.Generator) -> ControllerOutcome:
    """Visual-servo onto the bolt axis; residual error is half-normal."""
    p = world.params
    if _view_blocked(world) and rng.random() < p.mate_block_rate:
        return _fail(world, FaultReason.BLOCKED)
    residual = abs(rng.normal(0.0, p.mate_sigma))
    theta = rng.uniform(0.0, 2.0 * math.pi)
    x = world.bolt[0] + residual * math.cos(theta)
    y = world.bolt[1] + residual * math.sin(theta)
    return _ok(world, nutrunner=_hover_point(world, x, y))


def ctl_push(world: WorldState, rng: np.random.Generator | None = None) -> ControllerOutcome:
    """Sweep obstacles radially out to ``clearance_required + push_margin``.

    The stroke covers the whole ring up to the target clearance, so objects
    just outside the sleeve envelope are moved too. An immovable object
    inside the envelope itself makes the push fail.
    """
    p = world.params
    bx, by = world.bolt[:2]
    target = p.clearance_required + p.push_margin
    if any(not o.movable and o.clearance_to(bx, by) < p.clearance_required for o in world.obstacles):
        return _fail(world, FaultReason.BLOCKED)
    moved = []
    for o in world.obstacles:
        if o.movable and o.clearance_to(bx, by) < target:
            dx, dy = o.x - bx, o.y - by
            dist = math.hypot(dx, dy)
            ux, uy = (dx / dist, dy / dist) if dist > 0 else (1.0, 0.0)
            reach = target + o.radius
            o = replace(o, x=bx + ux * reach, y=by + uy * reach)
        moved.append(o)
    return _ok(world, obstacles=tuple(moved))


def ctl_insert(world: WorldState, rng: np.random.Generator | None = None) -> ControllerOutcome:
    """Seat the socket on the bolt head, stopping at the torque cutoff."""
    p = world.params
    if world.clearance < p.clearance_required:
        return _fail(world, FaultReason.BLOCKED)
    if world.alignment_error > p.compliance_radius:
        # the socket lands on the head shoulder: torque spikes past the cutoff
        return _fail(world, FaultReason.TORQUE_EXCEEDED)
    x, y, _ = world.nutrunner
    return _ok(world, nutrunner=(x, y, world.bolt[2] - p.contact_depth), inserted=True)


def retraction_profile(world: WorldState) -> tuple[float, float]:
    """(retraction distance in mm, duration in s) for unscrewing the bolt."""
    p = world.params
    return world.engaged_turns * p.thread_pitch, world.engaged_turns / p.spin_rate


def ctl_disassemble(world: WorldState, rng: np.random.Generator | None = None) -> ControllerOutcome:
    """Unscrew counterclockwise while retracting at pitch times spin rate."""
    p = world.params
    if not world.inserted:
        return _fail(world, FaultReason.NOT_ENGAGED)
    if abs(p.retract_speed_factor - 1.0) > p.retract_tolerance:
        # retraction out of step with the thread binds the socket
        return _fail(world, FaultReason.TORQUE_EXCEEDED)
    distance, _ = retraction_profile(world)
    x, y, z = world.nutrunner
    return _ok(world, nutrunner=(x, y, z + distance), engaged_turns=0.0, disassembled=True)


def observe(world: WorldState, rng: np.random.Generator) -> tuple[float, float]:
    """Alignment error and clearance as seen through sensor noise (clipped at 0)."""
    noise = rng.normal(0.0, world.params.obs_sigma, size=2)
    e = max(0.0, world.alignment_error + float(noise[0]))
    d = world.clearance
    if not math.isinf(d):
        d = max(0.0, d + float(noise[1]))
    return e, d


def _approach(world, rng):
    return ctl_approach(world, world.believed_bolt)


CONTROLLERS: dict[str, Callable[[WorldState, np.random.Generator], ControllerOutcome]] = {
    "approach": _approach,
    "mate": ctl_mate,
    "push": ctl_push,
    "insert": ctl_insert,
    "disassemble": ctl_disassemble,
}


# --------------------------------------------------------------------------
# episode traces

@dataclass(frozen=True)
class TraceRecord:
    step: int
    action: str
    outcome: str
    e: float
    d: float
    flags: tuple[str, ...]
    pre: str
    post: str
    sat: float | None = None     # belief satisfaction of the precondition, when planned

    def to_line(self) -> str:
        flags = ",".join(self.flags) or "-"
        sat = "-" if self.sat is None else f"{self.sat:.6g}"
        return (f"step={self.step} action={self.action} outcome={self.outcome} "
                f"e={self.e:.4f} d={self.d:.4f} flags={flags} sat={sat} "
                f"pre={self.pre} post={self.post}")

    @classmethod
    def from_line(cls, line: str) -> "TraceRecord":
        fields = dict(part.split("=", 1) for part in line.split())
        flags = () if fields["flags"] == "-" else tuple(fields["flags"].split(","))
        sat = fields.get("sat", "-")
        return cls(int(fields["step"]), fields["action"], fields["outcome"],
                   float(fields["e"]), float(fields["d"]), flags, fields["pre"], fields["post"],
                   None if sat == "-" else float(sat))


def _flags(world: WorldState) -> tuple[str, ...]:
    out = []
    if world.inserted:
        out.append("inserted")
    if world.disassembled:
        out.append("disassembled")
    if world.fault is not None:
        out.append("fault")
    return tuple(out)


class EpisodeTrace:
    """Line-delimited log of every controller call in one episode."""

    def __init__(self, params: WorldParams | None = None):
        self.params = params or WorldParams()
        self.records: list[TraceRecord] = []

    def record(self, action: str, before: WorldState, outcome: ControllerOutcome,
               sat: float | None = None) -> TraceRecord:
        after = outcome.new_world
        rec = TraceRecord(
            step=len(self.records) + 1,
            action=action,
            outcome="ok" if outcome.succeeded else outcome.fault_reason.value,
            e=after.alignment_error,
            d=after.clearance,
            flags=_flags(after),
            pre=before.digest(),
            post=after.digest(),
            sat=sat,
        )
        self.records.append(rec)
        return rec

    def header(self) -> str:
        p = self.params
        return (f"# torque_cutoff_nm={p.torque_cutoff:g} contact_depth_mm={p.contact_depth:g} "
                f"compliance_radius_mm={p.compliance_radius:g} clearance_required_mm={p.clearance_required:g}")

    def lines(self) -> list[str]:
        return [self.header()] + [r.to_line() for r in self.records]

    def write(self, fh: TextIO) -> None:
        for line in self.lines():
            fh.write(line + "\n")

    @staticmethod
    def read(lines: Iterable[str]) -> list[TraceRecord]:
        return [TraceRecord.from_line(l) for l in lines if l.strip() and not l.startswith("#")]
