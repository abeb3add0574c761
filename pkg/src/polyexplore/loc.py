"""Localization stack model.

Nothing here extracts features or optimizes a graph.  Each mechanism is a
small stochastic model of an observable failure mode:

* wheel odometry drifts (noise scaled by motion plus a heading bias per meter),
* visual odometry is precise but needs enough features,
* scan registration succeeds with a probability ramped on view overlap,
* graph updates get slower as nodes accumulate,
* loop closure on revisits removes most of the accumulated error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from .geom import Pose2, normalize_angle


@dataclass
class OdomConfig:
    wheel_trans_noise: float = 0.02   # sigma per meter traveled
    wheel_rot_noise: float = 0.02     # sigma per radian turned
    wheel_rot_bias: float = 0.002     # rad of heading drift per meter
    vo_enabled: bool = True
    vo_feature_min: int = 30
    vo_trans_noise: float = 0.003     # sigma per meter
    vo_rot_noise: float = 0.003       # sigma per radian

    def __post_init__(self):
        for name in ("wheel_trans_noise", "wheel_rot_noise", "vo_trans_noise", "vo_rot_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.vo_feature_min < 0:
            raise ValueError("vo_feature_min must be non-negative")


@dataclass
class SlamConfig:
    update_budget: float = 0.5
    base_update: float = 0.1
    per_node_cost: float = 0.002
    node_period: float = 1.0
    overlap_full_match: float = 0.9
    overlap_zero_match: float = 0.3
    loop_radius: float = 1.0
    loop_feature_min: int = 20
    loop_min_age: int = 20            # nodes; the recent trail is not a loop
    gamma_reg: float = 0.5            # share of drift removed by a registration
    gamma_loop: float = 0.9           # share removed by a loop closure
    registration: bool = True
    loop_closure: bool = True

    def __post_init__(self):
        if not (0.0 <= self.overlap_zero_match < self.overlap_full_match <= 1.0):
            raise ValueError("need 0 <= overlap_zero_match < overlap_full_match <= 1")
        for name in ("update_budget", "base_update", "per_node_cost", "node_period"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.gamma_reg <= 1.0 and 0.0 <= self.gamma_loop <= 1.0):
            raise ValueError("correction shares must lie in [0, 1]")


# Parameter presets mirroring three qualitative SLAM behaviors.
SLAM_PRESETS = {
    # slow map updates, good re-localization
    "slow_readable": dict(base_update=0.4, per_node_cost=0.006, overlap_zero_match=0.2,
                          overlap_full_match=0.8, gamma_loop=0.95),
    # defaults; relies on odometry between updates
    "balanced": {},
    # very fast updates, loses track more easily
    "fast_fragile": dict(base_update=0.02, per_node_cost=0.0003, overlap_zero_match=0.45,
                         overlap_full_match=0.95, gamma_reg=0.6),
}


def slam_preset(name: str, **overrides) -> SlamConfig:
    return SlamConfig(**{**SLAM_PRESETS[name], **overrides})


class Node(NamedTuple):
    est: Pose2
    true: Pose2
    feature_count: int
    timestamp: float


@dataclass
class SlamState:
    nodes: tuple = ()
    est_pose: Pose2 = field(default_factory=lambda: Pose2(0.0, 0.0, 0.0))
    drift_accum: Pose2 = field(default_factory=lambda: Pose2(0.0, 0.0, 0.0))
    sim_time: float = 0.0

    @property
    def node_count(self) -> int:
        return len(self.nodes)


class Registration(NamedTuple):
    accepted: bool
    correction: Optional[Pose2]
    probability: float


class LoopClosure(NamedTuple):
    closed: bool
    correction: Optional[Pose2]
    node_index: int = -1


def pose_error(est: Pose2, true: Pose2) -> Pose2:
    """World-frame error ``est - true``."""
    return Pose2(est.x - true.x, est.y - true.y, normalize_angle(est.theta - true.theta))


def wheel_odom_step(true_delta: Pose2, cfg: OdomConfig, rng) -> Pose2:
    dist = math.hypot(true_delta.x, true_delta.y)
    n = rng.standard_normal(3)
    st = cfg.wheel_trans_noise * dist
    sr = cfg.wheel_rot_noise * abs(true_delta.theta)
    return Pose2(true_delta.x + st * n[0],
                 true_delta.y + st * n[1],
                 true_delta.theta + sr * n[2] + cfg.wheel_rot_bias * dist)


def visual_odom_step(feature_count: int, true_delta: Pose2, cfg: OdomConfig, rng) -> Optional[Pose2]:
    """Low-noise increment, or None when too few features are visible."""
    if not cfg.vo_enabled or feature_count < cfg.vo_feature_min:
        return None
    dist = math.hypot(true_delta.x, true_delta.y)
    n = rng.standard_normal(3)
    st = cfg.vo_trans_noise * dist
    return Pose2(true_delta.x + st * n[0],
                 true_delta.y + st * n[1],
                 true_delta.theta + cfg.vo_rot_noise * abs(true_delta.theta) * n[2])


def match_overlap(prev_heading: float, cur_heading: float, fov_deg: float) -> float:
    """Shared fraction of two horizontal views that differ only in heading."""
    if fov_deg <= 0:
        raise ValueError("fov must be positive")
    dtheta = abs(math.degrees(normalize_angle(cur_heading - prev_heading)))
    return max(0.0, (fov_deg - dtheta) / fov_deg)


def registration_probability(overlap: float, feature_count: int, cfg: SlamConfig,
                             feature_min: int) -> float:
    lo, hi = cfg.overlap_zero_match, cfg.overlap_full_match
    p = min(1.0, max(0.0, (overlap - lo) / (hi - lo)))
    if feature_min > 0:
        p *= min(1.0, feature_count / feature_min)
    return p


def _shrink(state: SlamState, true_pose: Pose2, keep: float):
    """Scale the drift by ``keep``; returns the new estimate and the correction."""
    err = pose_error(state.est_pose, true_pose)
    new_err = Pose2(err.x * keep, err.y * keep, err.theta * keep)
    est = Pose2(true_pose.x + new_err.x, true_pose.y + new_err.y, true_pose.theta + new_err.theta)
    correction = est.relative_to(state.est_pose)
    return est, new_err, correction


def register_scan(state: SlamState, scan, overlap: float, cfg: SlamConfig, rng,
                  feature_min: int = 30):
    """Attempt to align ``scan`` with the map; returns ``(state, Registration)``.

    One uniform draw is consumed whether or not registration is enabled.
    """
    u = rng.random()
    if not cfg.registration:
        return state, Registration(False, None, 0.0)
    p = registration_probability(overlap, scan.feature_count, cfg, feature_min)
    if u < p:
        est, err, corr = _shrink(state, scan.pose_true, 1.0 - cfg.gamma_reg)
        return replace(state, est_pose=est, drift_accum=err), Registration(True, corr, p)
    state = replace(state, drift_accum=pose_error(state.est_pose, scan.pose_true))
    return state, Registration(False, None, p)


def update_duration(node_count: int, cfg: SlamConfig) -> float:
    if node_count < 0:
        raise ValueError("node_count must be non-negative")
    return cfg.base_update + cfg.per_node_cost * node_count


def over_budget(duration: float, cfg: SlamConfig) -> bool:
    """True once an update reaches the configured time budget."""
    return duration >= cfg.update_budget


def try_loop_closure(state: SlamState, true_pose: Pose2, feature_count: int,
                     cfg: SlamConfig, rng=None):
    """Close a loop when an old node lies near the current place.

    Only nodes older than ``loop_min_age`` count, and the view must carry
    at least ``loop_feature_min`` features.  Returns ``(state, LoopClosure)``.
    """
    if not cfg.loop_closure or feature_count < cfg.loop_feature_min:
        return state, LoopClosure(False, None)
    old = state.nodes[: max(0, len(state.nodes) - cfg.loop_min_age)]
    best, best_d = -1, math.inf
    for k, node in enumerate(old):
        d = node.true.distance_to(true_pose)
        if d <= cfg.loop_radius and d < best_d:
            best, best_d = k, d
    if best < 0:
        return state, LoopClosure(False, None)
    est, err, corr = _shrink(state, true_pose, 1.0 - cfg.gamma_loop)
    return replace(state, est_pose=est, drift_accum=err), LoopClosure(True, corr, best)


def add_node(state: SlamState, true_pose: Pose2, feature_count: int) -> SlamState:
    node = Node(state.est_pose, true_pose, feature_count, state.sim_time)
    return replace(state, nodes=state.nodes + (node,))


def advance_time(state: SlamState, duration: float, omega_deg: float = 0.0):
    """Let ``duration`` seconds pass while the last command keeps executing.

    Returns ``(state, degrees rotated meanwhile)``.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return replace(state, sim_time=state.sim_time + duration), omega_deg * duration
