"""Closed exploration loop: scan, localize, fuse, pick a frontier, drive.

Simulated time advances in fixed controller steps.  A scan is taken once per
``node_period``; the pose-graph update it triggers takes
``update_duration(node_count)`` seconds, during which the robot keeps
executing its last velocity command.  Goal selection treats frontiers
(chains of Free map edges) as targets; both strategies offered here are
reconstructions, not a documented reference method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clip import PolygonMap
from .geom import EPS_PT, Point2, Pose2, normalize_angle, point_segment_distance
from .loc import (OdomConfig, SlamConfig, SlamState, add_node, match_overlap, over_budget,
                  pose_error, register_scan, try_loop_closure, update_duration,
                  visual_odom_step, wheel_odom_step)
from .mapper import (MIN_FRONTIER_LENGTH, DegenerateScan, extract_frontiers, frontier_total,
                     integrate_scan, scan_to_polygon)
from .planner import StartOutsideMap, plan_path
from .sensor import SensorConfig, World, _distance_to_edges, cast_scan

HEADING_GATE = math.radians(10.0)  # drive only when roughly facing the waypoint
WAYPOINT_TOL = 0.05
HEADING_TOL = math.radians(1.0)  # final-heading match needed to count as arrived
STALL_LIMIT = 20  # consecutive blocked steps before the current goal is given up
ROBOT_RADIUS = 0.2                 # true-world collision footprint


class Strategy(str, enum.Enum):
    NEAREST_CENTROID = "NearestCentroid"
    LARGEST_FRONTIER = "LargestFrontier"


class Event(str, enum.Enum):
    MOVE = "Move"
    SCAN = "Scan"
    REGISTERED = "Registered"
    REJECTED = "Rejected"
    LOOP_CLOSED = "LoopClosed"
    GOAL_REACHED = "GoalReached"
    REPLAN = "Replan"
    STALLED = "Stalled"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    DONE = "Done"


class StepBudgetExhausted(RuntimeError):
    """Raised only on request; by default exhaustion is a trace event."""


@dataclass
class ControllerLimits:
    max_angular_speed: float = 17.0   # deg/s
    max_linear_speed: float = 0.3     # m/s
    goal_tolerance: float = 1.0       # m, radius searched for a reachable end point

    def __post_init__(self):
        if min(self.max_angular_speed, self.max_linear_speed, self.goal_tolerance) <= 0:
            raise ValueError("controller limits must be positive")


@dataclass
class ExploreConfig:
    dt: float = 0.1
    step_budget: int = 100_000
    strategy: Strategy = Strategy.NEAREST_CENTROID
    min_frontier_length: float = MIN_FRONTIER_LENGTH
    clearance: float = 0.25
    standoff: float = 0.8          # preferred viewing distance from a frontier
    simplify_tol: float = 0.02
    blacklist_radius: float = 0.3

    def __post_init__(self):
        self.strategy = Strategy(self.strategy)
        if self.dt <= 0 or self.step_budget <= 0:
            raise ValueError("dt and step_budget must be positive")


@dataclass
class RunConfig:
    """Every knob of one run, grouped by subsystem."""
    sensor: SensorConfig = field(default_factory=SensorConfig)
    odom: OdomConfig = field(default_factory=OdomConfig)
    slam: SlamConfig = field(default_factory=SlamConfig)
    controller: ControllerLimits = field(default_factory=ControllerLimits)
    explore: ExploreConfig = field(default_factory=ExploreConfig)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    sim_time: float
    true_pose: Pose2
    est_pose: Pose2
    map_area: float
    frontier_total: float
    node_count: int
    update_duration: float
    event: Event
    cmd_omega_deg: float = 0.0
    cmd_v: float = 0.0

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "sim_time": self.sim_time,
            "true_pose": [self.true_pose.x, self.true_pose.y, self.true_pose.theta],
            "est_pose": [self.est_pose.x, self.est_pose.y, self.est_pose.theta],
            "map_area": self.map_area,
            "frontier_total": self.frontier_total,
            "node_count": self.node_count,
            "update_duration": self.update_duration,
            "event": self.event.value,
            "cmd_omega_deg": self.cmd_omega_deg,
            "cmd_v": self.cmd_v,
        }


def select_goal(frontiers, pose_est: Pose2, strategy=Strategy.NEAREST_CENTROID) -> Optional[Point2]:
    """Centroid of the chosen frontier, or None when nothing is left.

    ``frontiers`` is expected longest-first; near-ties in distance resolve to
    the earlier (longer) entry.
    """
    if not frontiers:
        return None
    strategy = Strategy(strategy)
    if strategy is Strategy.LARGEST_FRONTIER:
        return max(frontiers, key=lambda f: f.length).centroid  # max keeps the first on ties
    best, best_d = None, math.inf
    for f in frontiers:
        d = math.hypot(f.centroid.x - pose_est.x, f.centroid.y - pose_est.y)
        if d < best_d - EPS_PT:
            best, best_d = f, d
    return best.centroid


def _clamp(v, lim):
    return max(-lim, min(lim, v))


def step_motion(pose: Pose2, path, limits: ControllerLimits, dt: float, final_heading=None):
    """One rotate-then-drive controller step.

    Steers toward the first waypoint of ``path`` farther than the waypoint
    tolerance; once the path is used up, turns toward ``final_heading`` if
    given.  Returns ``(new_pose, omega_deg, v)`` where ``new_pose`` is
    ``pose`` advanced by the command.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = None
    for wp in path or ():
        if math.hypot(wp[0] - pose.x, wp[1] - pose.y) > WAYPOINT_TOL:
            target = wp
            break
    if target is not None:
        dist = math.hypot(target[0] - pose.x, target[1] - pose.y)
        err = normalize_angle(math.atan2(target[1] - pose.y, target[0] - pose.x) - pose.theta)
    elif final_heading is not None:
        dist, err = 0.0, normalize_angle(final_heading - pose.theta)
    else:
        return pose, 0.0, 0.0
    omega = _clamp(math.degrees(err) / dt, limits.max_angular_speed)
    v = 0.0
    if target is not None and abs(err) < HEADING_GATE:
        # do not overshoot the waypoint
        v = min(limits.max_linear_speed, dist / dt)
    return integrate_unicycle(pose, omega, v, dt), omega, v


def integrate_unicycle(pose: Pose2, omega_deg: float, v: float, dt: float) -> Pose2:
    w = math.radians(omega_deg)
    mid = pose.theta + 0.5 * w * dt
    return Pose2(pose.x + v * dt * math.cos(mid), pose.y + v * dt * math.sin(mid), pose.theta + w * dt)


def _blocked(world: World, p: Point2) -> bool:
    return not world.is_free(p) or _distance_to_edges(p, world.edges) < ROBOT_RADIUS


def _nearest_normal(world: World, p: Point2):
    """Unit vector from the nearest world edge toward ``p``."""
    segs = world.edges
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    L2 = np.where(dx * dx + dy * dy == 0, 1.0, dx * dx + dy * dy)
    t = np.clip(((p[0] - ax) * dx + (p[1] - ay) * dy) / L2, 0.0, 1.0)
    cx, cy = ax + t * dx, ay + t * dy
    k = int(np.argmin(np.hypot(p[0] - cx, p[1] - cy)))
    nx, ny = p[0] - cx[k], p[1] - cy[k]
    n = math.hypot(nx, ny)
    return (nx / n, ny / n) if n > 0 else None


def true_motion(world: World, pose: Pose2, omega_deg: float, v: float, dt: float):
    """Commanded motion of the real robot; returns ``(new_pose, stalled)``.

    A step that would bring the footprint into contact keeps only its
    component along the obstacle (sliding); if even that collides the robot
    only turns.
    """
    nxt = integrate_unicycle(pose, omega_deg, v, dt)
    if v <= 0 or not _blocked(world, nxt.position):
        return nxt, False
    # the contact normal is taken where the robot is now, so around a convex
    # corner the tangent step moves away from the corner
    n = _nearest_normal(world, pose.position)
    if n is not None:
        mx, my = nxt.x - pose.x, nxt.y - pose.y
        dot = mx * n[0] + my * n[1]
        if dot < 0:
            tx, ty = mx - dot * n[0], my - dot * n[1]
            for scale in (1.0, 0.5, 0.25):
                slid = Point2(pose.x + scale * tx, pose.y + scale * ty)
                if not _blocked(world, slid):
                    return Pose2(slid.x, slid.y, nxt.theta), True
    return Pose2(pose.x, pose.y, nxt.theta), True


class _Run:
    """Mutable state of one exploration run."""

    def __init__(self, world: World, cfg: RunConfig, seed: int):
        ss = np.random.SeedSequence(seed)
        self.rng_sensor, self.rng_odom, self.rng_slam = (np.random.default_rng(s) for s in ss.spawn(3))
        self.world, self.cfg = world, cfg
        self.true = world.start
        self.slam = SlamState(est_pose=world.start)
        self.map = PolygonMap.empty()
        self.frontiers = []
        self.trace = []
        self.path = None
        self.goal = None
        self.final_heading = None
        self.blacklist = []
        self.step = 0
        self.t = 0.0
        self.busy_until = 0.0
        self.next_scan = 0.0
        self.cmd = (0.0, 0.0)
        self.last_features = 0
        self.last_scan_heading = None
        self.duration = 0.0
        self.at_goal = False
        self.stalls = 0

    def record(self, event: Event):
        self.trace.append(TraceRecord(self.step, self.t, self.true, self.slam.est_pose,
                                      self.map.total_area, frontier_total(self.frontiers),
                                      self.slam.node_count, self.duration, event,
                                      self.cmd[0], self.cmd[1]))

    # -- scan / update ---------------------------------------------------
    def scan_cycle(self):
        c = self.cfg
        scan = cast_scan(self.true, self.world, c.sensor, self.rng_sensor, self.t)
        self.last_features = scan.feature_count
        self.record(Event.SCAN)
        if self.last_scan_heading is not None:
            overlap = match_overlap(self.last_scan_heading, scan.pose_true.theta, c.sensor.fov_deg)
            self.slam, reg = register_scan(self.slam, scan, overlap, c.slam, self.rng_slam,
                                           c.odom.vo_feature_min)
            if c.slam.registration:
                self.record(Event.REGISTERED if reg.accepted else Event.REJECTED)
        self.last_scan_heading = scan.pose_true.theta
        self.slam, lc = try_loop_closure(self.slam, self.true, scan.feature_count, c.slam)
        if lc.closed:
            self.record(Event.LOOP_CLOSED)
        self.slam = add_node(self.slam, self.true, scan.feature_count)
        self.duration = update_duration(self.slam.node_count, c.slam)
        try:
            poly = scan_to_polygon(scan, self.slam.est_pose, c.explore.simplify_tol)
            self.map = integrate_scan(self.map, poly)
        except DegenerateScan:
            pass
        self.frontiers = extract_frontiers(self.map, c.explore.min_frontier_length)
        self.busy_until = self.t + self.duration
        # leave at least one controller step between the end of an update and
        # the next scan, otherwise a long update would freeze the command
        self.next_scan = self.t + max(c.slam.node_period, self._ceil_dt(self.duration) + c.explore.dt)
        self.replan()

    def _ceil_dt(self, t: float) -> float:
        dt = self.cfg.explore.dt
        return math.ceil(t / dt - 1e-9) * dt

    def _hold_time(self) -> float:
        """How long a command issued now stays in force.

        Normally one step; on the last step before a scan the command keeps
        running through the following update, whose length is known from the
        node count.
        """
        c = self.cfg
        dt = c.explore.dt
        if self.t + dt + 1e-9 < self.next_scan:
            return dt
        end = self.next_scan + update_duration(self.slam.node_count + 1, c.slam)
        return max(dt, self.next_scan - self.t + self._ceil_dt(end - self.next_scan))

    def _blacklisted(self, p) -> bool:
        r = self.cfg.explore.blacklist_radius
        return any(math.hypot(p.x - b.x, p.y - b.y) <= r for b in self.blacklist)

    def _goal_alive(self, goal) -> bool:
        """A committed goal stays while some frontier still passes near it."""
        r = self.cfg.explore.blacklist_radius
        for f in self.frontiers:
            for a, b in zip(f.chain, f.chain[1:]):
                if point_segment_distance(goal, a, b) <= r:
                    return True
        return False

    def replan(self):
        c = self.cfg
        est = self.slam.est_pose
        cands = [f for f in self.frontiers if not self._blacklisted(f.centroid)]
        if self.goal is not None and self.at_goal and self._goal_alive(self.goal):
            # seen from its viewpoint and still open: the sensor cannot close it
            self.blacklist.append(self.goal)
            cands = [f for f in cands if not self._blacklisted(f.centroid)]
        keep = self.goal if (self.goal is not None and not self.at_goal
                             and self._goal_alive(self.goal)
                             and not self._blacklisted(self.goal)) else None
        self.path, self.goal, self.final_heading, self.at_goal = None, None, None, False
        while cands:
            if keep is not None:
                goal, keep = keep, None
            else:
                goal = select_goal(cands, est, c.explore.strategy)
            try:
                path = plan_path(self.map, est.position, goal, c.explore.clearance,
                                 c.controller.goal_tolerance, c.explore.standoff)
            except StartOutsideMap:
                path = None
            if path is not None:
                end = path[-1]
                self.path, self.goal = list(path[1:]), goal  # path[0] is where we stand
                self.final_heading = math.atan2(goal.y - end.y, goal.x - end.x) \
                    if math.hypot(goal.x - end.x, goal.y - end.y) > EPS_PT else None
                self.record(Event.REPLAN)
                return
            self.blacklist.append(goal)
            cands = [f for f in cands if not self._blacklisted(f.centroid)]

    # -- motion ------------------------------------------------------------
    def control(self):
        c = self.cfg
        dt = c.explore.dt
        est = self.slam.est_pose
        if self.t + 1e-12 >= self.busy_until:
            while self.path and len(self.path) > 1 and \
                    math.hypot(self.path[0].x - est.x, self.path[0].y - est.y) <= WAYPOINT_TOL:
                self.path.pop(0)
            _, omega, v = step_motion(est, self.path, c.controller, self._hold_time(), self.final_heading)
            self.cmd = (omega, v)
        omega, v = self.cmd
        nxt, stalled = true_motion(self.world, self.true, omega, v, dt)
        delta = nxt.relative_to(self.true)
        odo = visual_odom_step(self.last_features, delta, c.odom, self.rng_odom)
        if odo is None:
            odo = wheel_odom_step(delta, c.odom, self.rng_odom)
        self.true = nxt
        self.slam.est_pose = est.compose(odo)
        self.step += 1
        self.t = self.step * dt
        self.slam.sim_time = self.t
        self.record(Event.STALLED if stalled else Event.MOVE)
        # something the map does not show (glass, say) is in the way
        self.stalls = self.stalls + 1 if stalled and v > 0 else 0
        if self.stalls >= STALL_LIMIT and self.goal is not None:
            self.stalls = 0
            self.blacklist.append(self.goal)
            self.replan()
            return
        if (self.path and not self.at_goal and self.t >= self.busy_until
                and self._arrived()):
            self.at_goal = True
            self.record(Event.GOAL_REACHED)

    def _arrived(self) -> bool:
        est = self.slam.est_pose
        end = self.path[-1]
        if math.hypot(end.x - est.x, end.y - est.y) > WAYPOINT_TOL:
            return False
        if self.final_heading is None:
            return True
        return abs(normalize_angle(self.final_heading - est.theta)) <= HEADING_TOL

    def run(self):
        budget = self.cfg.explore.step_budget
        while True:
            if self.t + 1e-9 >= self.next_scan:
                self.scan_cycle()
                if not any(not self._blacklisted(f.centroid) for f in self.frontiers):
                    self.record(Event.DONE)
                    return
            if self.step >= budget:
                self.record(Event.BUDGET_EXHAUSTED)
                return
            self.control()


def run_exploration(world: World, cfg: RunConfig = None, seed: int = 0,
                    raise_on_budget: bool = False):
    """Explore ``world`` from its start pose; returns ``(final map, trace)``."""
    cfg = cfg or RunConfig()
    run = _Run(world, cfg, seed)
    run.run()
    if raise_on_budget and run.trace[-1].event is Event.BUDGET_EXHAUSTED:
        raise StepBudgetExhausted(f"no completion within {cfg.explore.step_budget} steps")
    return run.map, run.trace


@dataclass(frozen=True)
class Metrics:
    coverage: float
    final_loc_error_m: float
    reject_rate: float
    t90_s: float          # inf when 90 % coverage is never reached
    steps: int
    completed: bool


def compute_metrics(trace, world: World) -> Metrics:
    if not trace:
        raise ValueError("trace is empty")
    free = world.free_area
    last = trace[-1]
    err = pose_error(last.est_pose, last.true_pose)
    reg = sum(r.event is Event.REGISTERED for r in trace)
    rej = sum(r.event is Event.REJECTED for r in trace)
    t90 = next((r.sim_time for r in trace if r.map_area >= 0.9 * free), math.inf)
    return Metrics(coverage=last.map_area / free,
                   final_loc_error_m=math.hypot(err.x, err.y),
                   reject_rate=rej / (reg + rej) if reg + rej else 0.0,
                   t90_s=t90, steps=last.step,
                   completed=last.event is Event.DONE)
