"""Synthetic scenes for exercising the pose-refinement loop.

A scene is a bag of 3D world points (a planar road patch plus a little
off-plane clutter), a ground-truth camera, and one fixed set of pixel
observations of those points taken by that camera, optionally corrupted
with Gaussian pixel noise and gross outliers.  The observations play the
role of features matched in a real photograph; projections under a
candidate pose play the role of the rendered image.  Everything is
derived deterministically from the seed.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ParameterError
from .pose import Intrinsics, Pose, project_batch, so3_exp

_DEFAULT_K = Intrinsics(fx=1000.0, fy=1000.0, cx=640.0, cy=480.0)


@dataclass
class SyntheticScene:
    """World points, a true camera, and that camera's fixed observations.

    ``observations`` holds one pixel per world point (NaN where the point
    is not observed); ``observed_mask`` marks rows carrying a real
    measurement.  ``on_plane`` flags the road-patch subset; consumers that
    mimic a blind matcher must not read it.
    """

    points: np.ndarray
    on_plane: np.ndarray
    plane_normal_world: np.ndarray
    plane_d_world: float
    true_pose: Pose
    K: Intrinsics
    observations: np.ndarray
    observed_mask: np.ndarray
    noise_sigma_px: float
    outlier_fraction: float
    rng_seed: int
    width: int = 1280
    height: int = 960

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, np.float64)
        self.on_plane = np.ascontiguousarray(self.on_plane, bool)
        self.plane_normal_world = np.asarray(
            self.plane_normal_world, np.float64).reshape(3)
        self.observations = np.ascontiguousarray(
            self.observations, np.float64)
        self.observed_mask = np.ascontiguousarray(self.observed_mask, bool)
        n = self.points.shape[0]
        if self.observations.shape != (n, 2) or self.observed_mask.shape != (n,):
            raise ParameterError("SyntheticScene: array shapes disagree")
        planar_seen = int(np.count_nonzero(self.on_plane
                                           & self.observed_mask))
        if planar_seen < 4:
            raise DegenerateInputError(
                f"scene observes only {planar_seen} planar points; "
                f"need at least 4")


def look_at(eye, target, up=(0.0, 1.0, 0.0)):
    """Pose of a camera at ``eye`` whose optical axis passes through
    ``target``.  ``up`` picks the image roll; when the viewing direction
    is (anti)parallel to it the x world axis is used instead."""
    eye = np.asarray(eye, np.float64).reshape(3)
    target = np.asarray(target, np.float64).reshape(3)
    f = target - eye
    nf = np.linalg.norm(f)
    if nf == 0.0:
        raise ParameterError("look_at: eye and target coincide")
    f = f / nf
    u = np.asarray(up, np.float64).reshape(3)
    x = np.cross(f, u)
    if np.linalg.norm(x) < 1e-9:
        x = np.cross(f, np.array([1.0, 0.0, 0.0]))
    x = x / np.linalg.norm(x)
    y = np.cross(f, x)
    R = np.vstack([x, y, f])
    if np.linalg.det(R) < 0.0:
        y = -y
        R = np.vstack([x, y, f])
    return Pose(R=R, t=-R @ eye)


def perturb_pose(pose, angle_deg, distance_m, rng):
    """Rotate by exactly ``angle_deg`` about a random axis and move the
    camera center by exactly ``distance_m`` in a random direction."""
    rng = np.random.default_rng(rng)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    R = so3_exp(axis * math.radians(angle_deg)) @ pose.R
    center = pose.center + direction * distance_m
    return Pose(R=R, t=-R @ center)


def make_scene(n_plane=120, n_clutter=30, noise_sigma_px=0.0,
               outlier_fraction=0.0, seed=0, patch_half=20.0,
               plane_tilt_deg=2.0, camera_height=28.0, K=_DEFAULT_K,
               width=1280, height=960):
    """Build a deterministic scene: a gently tilted square road patch of
    ``n_plane`` points with ``n_clutter`` raised clutter points, viewed
    from ``camera_height`` meters up by a camera aimed near the patch
    center.  Observations are the true-camera projections of all points,
    plus N(0, sigma) pixel noise, with ``outlier_fraction`` of the
    observed ones replaced by uniform in-image pixels.

    The rng is consumed in a fixed order (plane attitude, patch points,
    clutter, camera placement, noise, outliers) so scenes differing only
    in later stages share the earlier draws.
    """
    if n_plane < 4:
        raise ParameterError("make_scene: need at least 4 planar points")
    if not 0.0 <= outlier_fraction < 1.0:
        raise ParameterError(
            "make_scene: outlier_fraction must be in [0, 1)")
    if noise_sigma_px < 0.0:
        raise ParameterError("make_scene: noise sigma must be >= 0")
    rng = np.random.default_rng(seed)

    tilt = math.radians(plane_tilt_deg)
    azim = rng.uniform(0.0, 2.0 * math.pi)
    n_w = np.array([math.sin(tilt) * math.cos(azim),
                    math.sin(tilt) * math.sin(azim),
                    math.cos(tilt)])
    d_w = rng.uniform(-0.5, 0.5)

    xy = rng.uniform(-patch_half, patch_half, size=(n_plane, 2))
    z = (d_w - xy @ n_w[:2]) / n_w[2]
    plane_pts = np.column_stack([xy, z])

    cxy = rng.uniform(-patch_half, patch_half, size=(n_clutter, 2))
    cz = (d_w - cxy @ n_w[:2]) / n_w[2] + rng.uniform(0.5, 8.0, n_clutter)
    clutter_pts = np.column_stack([cxy, cz])

    points = np.vstack([plane_pts, clutter_pts])
    on_plane = np.zeros(points.shape[0], bool)
    on_plane[:n_plane] = True

    eye = np.array([rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0),
                    camera_height])
    target_xy = rng.uniform(-3.0, 3.0, 2)
    target_z = (d_w - target_xy @ n_w[:2]) / n_w[2]
    true_pose = look_at(eye, np.array([target_xy[0], target_xy[1],
                                       target_z]))

    px, in_front = project_batch(points, K, true_pose)
    inside = (in_front
              & (px[:, 0] >= 0.0) & (px[:, 0] < width)
              & (px[:, 1] >= 0.0) & (px[:, 1] < height))
    observations = np.where(inside[:, None], px, np.nan)
    if noise_sigma_px > 0.0:
        observations = observations + rng.normal(
            0.0, noise_sigma_px, observations.shape)
    if outlier_fraction > 0.0:
        observed_idx = np.flatnonzero(inside)
        k = int(round(outlier_fraction * observed_idx.size))
        if k > 0:
            chosen = rng.choice(observed_idx, size=k, replace=False)
            observations[chosen, 0] = rng.uniform(0.0, width, k)
            observations[chosen, 1] = rng.uniform(0.0, height, k)

    return SyntheticScene(
        points=points, on_plane=on_plane, plane_normal_world=n_w,
        plane_d_world=float(d_w), true_pose=true_pose, K=K,
        observations=observations, observed_mask=inside,
        noise_sigma_px=float(noise_sigma_px),
        outlier_fraction=float(outlier_fraction), rng_seed=int(seed),
        width=int(width), height=int(height))


# -- JSON ----------------------------------------------------------------------


def _pose_to_dict(pose):
    return {"R": pose.R.tolist(), "t": pose.t.tolist()}


def _pose_from_dict(d):
    return Pose(R=np.array(d["R"], np.float64),
                t=np.array(d["t"], np.float64))


def scene_to_dict(scene):
    obs = [None if not m else [float(u), float(v)]
           for m, (u, v) in zip(scene.observed_mask, scene.observations)]
    return {
        "schema_version": 1,
        "points": scene.points.tolist(),
        "on_plane": scene.on_plane.astype(int).tolist(),
        "plane": {"n": scene.plane_normal_world.tolist(),
                  "d": float(scene.plane_d_world)},
        "true_pose": _pose_to_dict(scene.true_pose),
        "intrinsics": {"fx": scene.K.fx, "fy": scene.K.fy,
                       "cx": scene.K.cx, "cy": scene.K.cy,
                       "skew": scene.K.skew},
        "observations": obs,
        "noise_sigma_px": scene.noise_sigma_px,
        "outlier_fraction": scene.outlier_fraction,
        "rng_seed": scene.rng_seed,
        "width": scene.width,
        "height": scene.height,
    }


def scene_from_dict(data):
    obs_raw = data["observations"]
    n = len(obs_raw)
    observations = np.full((n, 2), np.nan)
    mask = np.zeros(n, bool)
    for i, entry in enumerate(obs_raw):
        if entry is not None:
            observations[i] = entry
            mask[i] = True
    ki = data["intrinsics"]
    return SyntheticScene(
        points=np.array(data["points"], np.float64),
        on_plane=np.array(data["on_plane"], bool),
        plane_normal_world=np.array(data["plane"]["n"], np.float64),
        plane_d_world=float(data["plane"]["d"]),
        true_pose=_pose_from_dict(data["true_pose"]),
        K=Intrinsics(fx=ki["fx"], fy=ki["fy"], cx=ki["cx"], cy=ki["cy"],
                     skew=ki.get("skew", 0.0)),
        observations=observations, observed_mask=mask,
        noise_sigma_px=float(data["noise_sigma_px"]),
        outlier_fraction=float(data["outlier_fraction"]),
        rng_seed=int(data["rng_seed"]),
        width=int(data["width"]), height=int(data["height"]))


def save_scene(scene, path):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(scene_to_dict(scene), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_scene(path):
    with open(path, "r", encoding="ascii") as fh:
        return scene_from_dict(json.load(fh))


def trace_to_dict(trace):
    return {
        "schema_version": 1,
        "iterations": [
            {
                "iteration": rec.iteration,
                "rmse_px": rec.rmse_px,
                "inliers": rec.inliers,
                "pairs": rec.pairs,
                "rel_change": rec.rel_change,
                "rotation_error_deg": rec.rotation_error_deg,
                "translation_error_m": rec.translation_error_m,
                "pose": _pose_to_dict(rec.pose),
            }
            for rec in trace
        ],
    }


def save_trace(trace, path):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(trace_to_dict(trace), fh, sort_keys=True, indent=2)
        fh.write("\n")
