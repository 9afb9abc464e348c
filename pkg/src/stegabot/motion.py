"""Morse drift in a robot's path, generated with a social-force model.

The robot is a unit point mass driving along a lane (``y`` forward, ``x``
lateral). Three forces act on it: a goal force holding lane speed and
centreline, repulsion from real obstacles, and a communication force from a
"virtual obstacle" that exists only in the planner. Switching the virtual
obstacle on for a short or long hold pushes the robot slightly sideways,
and the sideways pulses spell Morse.

Each obstacle repels with magnitude ``A * exp(-d / B)`` along the line from
obstacle to robot.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .core import MorseSequence, Symbol
from .errors import CoincidentPositions, DomainError, MalformedCsv, NoPulsesFound, ScheduleTooLong
from .formats import format_csv_table, parse_csv_table


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.vx, self.vy)

    @property
    def heading(self) -> float:
        """Angle from the lateral x axis to the velocity vector."""
        return math.atan2(self.vy, self.vx)

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    A: float  # interaction force, N
    B: float  # interaction length, m
    stop: bool = False  # frontal stop (red light, stopped car)

    def __post_init__(self):
        if not self.B > 0:
            raise DomainError(f"interaction length B must be positive, got {self.B}")


@dataclass(frozen=True)
class GoalParams:
    """Lane-keeping goal force.

    The robot wants velocity ``(k_lat * (x_c - x), v_des)``; the force is a
    PID on the gap between wanted and actual velocity, with proportional gain
    ``k_speed``. The velocity-relaxation form is what damps lateral motion.
    """

    v_des: float = 10.0
    x_c: float = 0.0
    k_speed: float = 4.0
    k_lat: float = 2.0
    k_i: float = 0.0
    k_d: float = 0.0
    speed_limit: float | None = None

    def __post_init__(self):
        if min(self.k_speed, self.k_lat, self.k_i, self.k_d) < 0:
            raise DomainError("controller gains must be >= 0")

    @property
    def limit(self) -> float:
        return self.speed_limit if self.speed_limit is not None else 1.2 * self.v_des


@dataclass(frozen=True)
class DriftCode:
    """Timing and size of the sideways Morse pulses (seconds, metres)."""

    amplitude: float = 0.3
    dot_hold: float = 1.0
    inter_symbol: float = 1.0
    letter_gap: float = 4.0
    word_gap: float = 8.0
    density: float = 0.5
    side: int = 1  # +1 drifts toward +x
    start: float = 2.0
    lead: float = 1.0  # virtual obstacle distance ahead of the robot
    offset: float = 1.0  # virtual obstacle distance beside the centreline
    B: float = 1.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise DomainError("amplitude must be positive")
        if not self.dot_hold > 0:
            raise DomainError("dot_hold must be positive")
        if not 0 < self.density <= 1:
            raise DomainError(f"density must lie in (0, 1], got {self.density}")
        if self.side not in (1, -1):
            raise DomainError("side must be +1 or -1")
        if not self.inter_symbol < self.letter_gap < self.word_gap:
            raise DomainError("need inter_symbol < letter_gap < word_gap")

    @property
    def dash_hold(self) -> float:
        return 2.0 * self.dot_hold


@dataclass(frozen=True)
class ForceField:
    goal: GoalParams = GoalParams()
    obstacles: tuple[Obstacle, ...] = ()
    virtual_A: float | None = None  # calibrated on demand when None

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))


@dataclass(frozen=True)
class VirtualObstacle:
    """Hallucinated repulsor, placed relative to the lane and the robot.

    Sits ``lateral`` metres from the centreline and ``lead`` metres ahead of
    wherever the robot is.
    """

    lateral: float
    lead: float
    A: float
    B: float

    def resolve(self, robot: RobotState, x_c: float) -> Obstacle:
        return Obstacle(x_c + self.lateral, robot.y + self.lead, self.A, self.B)


@dataclass(frozen=True)
class Trajectory2D:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).ravel() for a in (self.t, self.x, self.y)]
        if not arrs[0].size == arrs[1].size == arrs[2].size:
            raise DomainError("t, x and y must have equal length")
        if arrs[0].size > 1 and np.any(np.diff(arrs[0]) <= 0):
            raise DomainError("timestamps must be strictly increasing")
        for name, a in zip(("t", "x", "y"), arrs):
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.t.size

    def to_csv(self, precision: int | None = 6) -> str:
        return format_csv_table(["t", "x", "y"], np.column_stack([self.t, self.x, self.y]), precision)

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory2D":
        _, table = parse_csv_table(text, min_columns=3)
        try:
            return cls(table[:, 0], table[:, 1], table[:, 2])
        except DomainError as exc:
            raise MalformedCsv(str(exc)) from None


# --- forces -----------------------------------------------------------------

def _repulsion(rx, ry, ox, oy, A, B):
    dx, dy = rx - ox, ry - oy
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise CoincidentPositions(f"robot and obstacle both at ({rx}, {ry})")
    mag = A * math.exp(-d / B)
    return mag * dx / d, mag * dy / d


def social_force(robot: RobotState, obstacle: Obstacle) -> np.ndarray:
    """Repulsive force of one obstacle, pointing from obstacle to robot."""
    return np.array(_repulsion(robot.x, robot.y, obstacle.x, obstacle.y, obstacle.A, obstacle.B))


def goal_force(robot: RobotState, goal: GoalParams, integral=(0.0, 0.0), derivative=(0.0, 0.0)) -> np.ndarray:
    ex = goal.k_lat * (goal.x_c - robot.x) - robot.vx
    ey = goal.v_des - robot.vy
    return np.array([
        goal.k_speed * ex + goal.k_i * integral[0] + goal.k_d * derivative[0],
        goal.k_speed * ey + goal.k_i * integral[1] + goal.k_d * derivative[1],
    ])


def net_force(
    robot: RobotState,
    field: ForceField,
    t: float,
    msg: MorseSequence | None = None,
    code: DriftCode | None = None,
) -> np.ndarray:
    """Goal + environment + communication force at time ``t`` (no PID memory)."""
    f = goal_force(robot, field.goal)
    for ob in field.obstacles:
        f += social_force(robot, ob)
    if msg is not None and code is not None:
        A = field.virtual_A if field.virtual_A is not None else calibrate_virtual_obstacle(code, field.goal)
        vo = hallucinate_virtual_obstacle(code, msg, t, A)
        if vo is not None:
            f += social_force(robot, vo.resolve(robot, field.goal.x_c))
    return f


# --- virtual obstacle -------------------------------------------------------

def drift_schedule(msg: MorseSequence, code: DriftCode) -> list[tuple[float, float, Symbol]]:
    """Hold windows ``(start, end, symbol)`` for each dot and dash."""
    windows = []
    t = code.start
    pause = 0.0
    for sym in msg:
        if sym is Symbol.LETTER_GAP:
            pause = code.letter_gap
            continue
        if sym is Symbol.WORD_GAP:
            pause = code.word_gap
            continue
        if windows:
            t += pause or code.inter_symbol
        pause = 0.0
        hold = code.dot_hold if sym is Symbol.DOT else code.dash_hold
        windows.append((t, t + hold, sym))
        t += hold
    return windows


def schedule_length(msg: MorseSequence, code: DriftCode) -> float:
    """Seconds from t=0 until the robot is back on the centreline."""
    w = drift_schedule(msg, code)
    return w[-1][1] + code.letter_gap if w else 0.0


def active_time(msg: MorseSequence, code: DriftCode) -> float:
    return sum(b - a for a, b, _ in drift_schedule(msg, code))


def lateral_equilibrium(A: float, code: DriftCode, goal: GoalParams) -> float:
    """Steady sideways drift while the virtual obstacle is held."""
    k = goal.k_speed * goal.k_lat

    def balance(a):
        dx = a + code.offset
        d = math.hypot(dx, code.lead)
        return A * math.exp(-d / code.B) * dx / d - k * a

    hi = 1.0
    while balance(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise DomainError("virtual obstacle too strong for the lane controller")
    return brentq(balance, 0.0, hi, xtol=1e-14)


def calibrate_virtual_obstacle(code: DriftCode, goal: GoalParams = GoalParams()) -> float:
    """Interaction force ``A`` whose steady-state drift equals ``code.amplitude``.

    Found by bisection on the equilibrium drift, which grows monotonically
    with ``A``.
    """
    if goal.k_speed * goal.k_lat <= 0:
        raise DomainError("lateral control gains must be positive to calibrate")
    hi = 1.0
    while lateral_equilibrium(hi, code, goal) < code.amplitude:
        hi *= 2
    return brentq(lambda A: lateral_equilibrium(A, code, goal) - code.amplitude, 0.0, hi, xtol=1e-12)


def hallucinate_virtual_obstacle(
    code: DriftCode, msg: MorseSequence, t: float, A: float | None = None
) -> VirtualObstacle | None:
    """The virtual obstacle active at time ``t``, if any.

    It sits ahead of the robot on the side opposite the intended drift.
    """
    for a, b, _ in drift_schedule(msg, code):
        if a <= t < b:
            if A is None:
                A = calibrate_virtual_obstacle(code)
            return VirtualObstacle(-code.side * code.offset, code.lead, A, code.B)
    return None


# --- simulation ---------------------------------------------------------------

def simulate(
    initial: RobotState,
    field: ForceField,
    msg: MorseSequence,
    code: DriftCode = DriftCode(),
    dt: float = 0.02,
    duration: float | None = None,
) -> Trajectory2D:
    """Explicit-Euler integration of the unit-mass robot.

    Speed is clamped to the goal's limit. While a stop obstacle pushes back
    the robot may brake to a standstill but never reverses. Without a
    ``duration`` the run lasts just long enough for the schedule and the
    density cap.

    Raises:
        ScheduleTooLong: the message does not fit ``duration``, or its
            drifting time exceeds ``code.density * duration``.
    """
    if not 0 < dt <= 0.1:
        raise DomainError(f"dt must lie in (0, 0.1], got {dt}")
    needed = schedule_length(msg, code)
    if duration is None:
        duration = max(needed, active_time(msg, code) / code.density)
    if needed > duration + 1e-9:
        raise ScheduleTooLong(f"message needs {needed:.2f} s, simulation lasts {duration:.2f} s")
    if active_time(msg, code) > code.density * duration + 1e-9:
        raise ScheduleTooLong(
            f"drifting for {active_time(msg, code):.2f} s exceeds "
            f"{code.density:.0%} of {duration:.2f} s"
        )

    goal = field.goal
    windows = drift_schedule(msg, code)
    A_virt = None
    if windows:
        A_virt = field.virtual_A if field.virtual_A is not None else calibrate_virtual_obstacle(code, goal)
    v_lat = -code.side * code.offset
    obstacles = [(o.x, o.y, o.A, o.B, o.stop) for o in field.obstacles]
    limit = goal.limit
    k_speed, k_lat, k_i, k_d = goal.k_speed, goal.k_lat, goal.k_i, goal.k_d
    x_c, v_des = goal.x_c, goal.v_des

    n = int(round(duration / dt))
    ts = np.arange(n + 1) * dt
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    x, y, vx, vy = initial.x, initial.y, initial.vx, initial.vy
    ix = iy = 0.0
    prev_ex = k_lat * (x_c - x) - vx
    prev_ey = v_des - vy
    w = 0
    for i in range(n + 1):
        xs[i] = x
        ys[i] = y
        if i == n:
            break
        t = ts[i]
        ex = k_lat * (x_c - x) - vx
        ey = v_des - vy
        ix += ex * dt
        iy += ey * dt
        fx = k_speed * ex + k_i * ix + k_d * (ex - prev_ex) / dt
        fy = k_speed * ey + k_i * iy + k_d * (ey - prev_ey) / dt
        prev_ex, prev_ey = ex, ey
        stopping = False
        for ox, oy, A, B, stop in obstacles:
            gx, gy = _repulsion(x, y, ox, oy, A, B)
            fx += gx
            fy += gy
            if stop and oy > y and gy < 0:
                stopping = True
        while w < len(windows) and t >= windows[w][1]:
            w += 1
        if w < len(windows) and windows[w][0] <= t:
            gx, gy = _repulsion(x, y, x_c + v_lat, y + code.lead, A_virt, code.B)
            fx += gx
            fy += gy
        vx += fx * dt
        vy += fy * dt
        if stopping and vy < 0:  # sin(heading) < 0: brake to zero, never reverse
            vy = 0.0
        speed = math.hypot(vx, vy)
        if speed > limit:
            vx *= limit / speed
            vy *= limit / speed
        x += vx * dt
        y += vy * dt
    return Trajectory2D(ts, xs, ys)


# --- decoding -----------------------------------------------------------------

def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges where ``mask`` is true."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def decode_trajectory(
    traj: Trajectory2D, centerline: float, code: DriftCode = DriftCode(), grid_rate: float = 10.0
) -> MorseSequence:
    """Read Morse from sideways pulses in an observed path.

    The lateral offset is resampled at ``grid_rate`` Hz; a pulse is a stretch
    beyond half the drift amplitude. Pulses longer than 1.5 dot holds are
    dashes; pauses of 3 dot holds or more separate letters, 7 or more words.
    Pulses and pauses shorter than a quarter dot hold are sensor noise and
    are absorbed into their neighbours.
    """
    if len(traj) < 2:
        raise DomainError("need at least two samples")
    step = 1.0 / grid_rate
    grid = np.arange(traj.t[0], traj.t[-1] + step / 2, step)
    lateral = code.side * (np.interp(grid, traj.t, traj.x) - centerline)
    mask = lateral > code.amplitude / 2
    min_len = max(1, int(round(0.25 * code.dot_hold * grid_rate)))
    # fill short dips, then drop short blips
    for a, b in _runs(~mask):
        if b - a < min_len and a > 0 and b < mask.size:
            mask[a:b] = True
    for a, b in _runs(mask):
        if b - a < min_len:
            mask[a:b] = False
    pulses = _runs(mask)
    if not pulses:
        raise NoPulsesFound("no sideways excursion beyond half the drift amplitude")
    symbols: list[Symbol] = []
    for k, (a, b) in enumerate(pulses):
        if k:
            gap = (a - pulses[k - 1][1]) * step
            if gap >= 7 * code.dot_hold:
                symbols.append(Symbol.WORD_GAP)
            elif gap >= 3 * code.dot_hold:
                symbols.append(Symbol.LETTER_GAP)
        dur = (b - a) * step
        symbols.append(Symbol.DOT if dur < 1.5 * code.dot_hold else Symbol.DASH)
    return MorseSequence(tuple(symbols))


# --- scenario configuration ---------------------------------------------------

@dataclass
class MotionScenario:
    message: str
    initial: RobotState
    field: ForceField
    code: DriftCode = DriftCode()
    dt: float = 0.02
    duration: float | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "MotionScenario":
        goal = GoalParams(**d.get("lane", {}))
        obstacles = tuple(Obstacle(**o) for o in d.get("obstacles", []))
        code = DriftCode(**d.get("code", {}))
        init = d.get("initial", {})
        initial = RobotState(
            init.get("x", goal.x_c), init.get("y", 0.0), init.get("vx", 0.0), init.get("vy", goal.v_des)
        )
        return cls(
            message=d.get("message", ""),
            initial=initial,
            field=ForceField(goal, obstacles),
            code=code,
            dt=d.get("dt", 0.02),
            duration=d.get("duration"),
        )

    def to_dict(self) -> dict:
        return {
            "message": self.message,
            "initial": asdict(self.initial),
            "lane": asdict(self.field.goal),
            "obstacles": [asdict(o) for o in self.field.obstacles],
            "code": asdict(self.code),
            "dt": self.dt,
            "duration": self.duration,
        }
