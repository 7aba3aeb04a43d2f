"""Plane-induced homography geometry and camera-pose refinement.

Two views of a common road plane are related by a 3x3 homography built
from the relative camera pose, the plane normal, and the camera-plane
distance.  This module composes that homography from known quantities,
estimates it from (possibly contaminated) pixel correspondences, and
decomposes an estimate back into a corrected camera pose; refine_pose
wraps the loop that alternates re-rendering, matching, robust estimation,
decomposition, and an optional Gauss-Newton reprojection polish.

Conventions: x_cam = R @ X_world + t; the plane is n . x = d with d > 0 in
whichever camera frame is named; pixels are (u, v) with u along image
columns.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    DivergenceError,
    InconsistentHomographyError,
    InsufficientDataError,
    ParameterError,
    RobustFailureError,
)

_EPS_W = 1e-300


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole calibration; columns of K scale normalized rays to pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ParameterError(
                f"Intrinsics: focal lengths must be positive, got "
                f"fx={self.fx!r} fy={self.fy!r}")

    @property
    def matrix(self):
        return np.array([[self.fx, self.skew, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def inverse(self):
        return np.linalg.inv(self.matrix)


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid motion: x_cam = R @ X + t."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, np.float64).reshape(3, 3)
        t = np.asarray(self.t, np.float64).reshape(3)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise ParameterError("Pose: non-finite entries")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ParameterError("Pose: R is not orthonormal")
        if np.linalg.det(R) < 0.0:
            raise ParameterError("Pose: R must be a proper rotation")

    @property
    def center(self):
        """Camera center in world coordinates."""
        return -self.R.T @ self.t


@dataclass(frozen=True)
class Plane:
    """n . x = d with unit n and d > 0, in a stated camera frame."""

    n: np.ndarray
    d: float

    def __post_init__(self):
        n = np.asarray(self.n, np.float64).reshape(3)
        nn = float(np.linalg.norm(n))
        if not np.isfinite(nn) or abs(nn - 1.0) > 1e-6:
            raise ParameterError(f"Plane: normal must be unit length, "
                                 f"got |n| = {nn!r}")
        object.__setattr__(self, "n", n / nn)
        if not (np.isfinite(self.d) and self.d > 0.0):
            raise ParameterError(f"Plane: d must be > 0, got {self.d!r}")


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, stored scale-normalized.

    Frobenius norm 1, with the overall sign chosen so the largest-magnitude
    entry (first such entry in row-major order on ties) is positive; two
    matrices equal up to scale normalize identically.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise ParameterError("Homography: non-finite entries")
        norm = float(np.linalg.norm(m))
        if norm == 0.0:
            raise ParameterError("Homography: zero matrix")
        m = m / norm
        k = int(np.argmax(np.abs(m)))
        if m.flat[k] < 0.0:
            m = -m
        object.__setattr__(self, "matrix", m)

    def apply(self, px):
        """Transfer pixels (n, 2) or (2,) through the homography."""
        p = np.asarray(px, np.float64)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        q = p @ self.matrix[:, :2].T + self.matrix[:, 2]
        w = np.where(np.abs(q[:, 2]) < _EPS_W, _EPS_W, q[:, 2])
        out = q[:, :2] / w[:, None]
        return out[0] if single else out


@dataclass
class CorrespondenceSet:
    """Matched pixels between two views, with inlier flags once known."""

    pts1: np.ndarray
    pts2: np.ndarray
    inliers: np.ndarray = None

    def __post_init__(self):
        self.pts1 = np.asarray(self.pts1, np.float64).reshape(-1, 2)
        self.pts2 = np.asarray(self.pts2, np.float64).reshape(-1, 2)
        if self.pts1.shape != self.pts2.shape:
            raise ParameterError(
                "CorrespondenceSet: the two views disagree on pair count")

    def __len__(self):
        return self.pts1.shape[0]


@dataclass(frozen=True)
class RansacParams:
    threshold_px: float = 2.0
    confidence: float = 0.999
    max_trials: int = 2000

    def validate(self):
        if not self.threshold_px > 0.0:
            raise ParameterError("RansacParams: threshold_px must be > 0")
        if not 0.0 < self.confidence < 1.0:
            raise ParameterError("RansacParams: confidence must be in (0, 1)")
        if not self.max_trials >= 1:
            raise ParameterError("RansacParams: max_trials must be >= 1")


@dataclass(frozen=True)
class RefineParams:
    max_iters: int = 20
    stop_rel_change: float = 0.05
    ransac: RansacParams = field(default_factory=RansacParams)
    polish: bool = True
    gn_max_iters: int = 50
    gn_step_tol: float = 1e-10

    def validate(self):
        if not self.max_iters >= 1:
            raise ParameterError("RefineParams: max_iters must be >= 1")
        if not self.stop_rel_change > 0.0:
            raise ParameterError(
                "RefineParams: stop_rel_change must be > 0")
        if not (self.gn_max_iters >= 1 and self.gn_step_tol > 0.0):
            raise ParameterError("RefineParams: bad Gauss-Newton settings")
        self.ransac.validate()


# -- rotations ---------------------------------------------------------------


def skew(w):
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def so3_exp(w):
    """Rodrigues: rotation matrix for an axis-angle 3-vector."""
    w = np.asarray(w, np.float64).reshape(3)
    theta = float(np.linalg.norm(w))
    K = skew(w)
    if theta < 1e-12:
        return np.eye(3) + K + 0.5 * (K @ K)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R):
    """Axis-angle 3-vector of a rotation matrix; inverse of so3_exp."""
    R = np.asarray(R, np.float64)
    c = (np.trace(R) - 1.0) * 0.5
    c = min(1.0, max(-1.0, c))
    theta = math.acos(c)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-7:
        return 0.5 * v
    if math.pi - theta < 1e-7:
        # near a half turn the skew part vanishes; take the axis from the
        # dominant diagonal of (R + I) / 2
        A = (R + np.eye(3)) * 0.5
        k = int(np.argmax(np.diag(A)))
        axis = A[:, k] / math.sqrt(max(A[k, k], 1e-300))
        axis /= np.linalg.norm(axis)
        if v[k] < 0.0:
            axis = -axis
        return theta * axis
    return (theta / (2.0 * math.sin(theta))) * v


def rotation_angle(R):
    """Rotation magnitude in radians.

    atan2 of the skew norm against the trace keeps the result well
    conditioned near zero, where acos of the trace alone loses half the
    working precision.
    """
    R = np.asarray(R, np.float64)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * float(np.linalg.norm(v))
    c = (np.trace(R) - 1.0) * 0.5
    return math.atan2(s, c)


def nearest_rotation(M):
    """Orthogonal Procrustes projection of M onto SO(3)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, np.float64))
    S = np.diag([1.0, 1.0, float(np.linalg.det(U @ Vt))])
    return U @ S @ Vt


# -- projection ---------------------------------------------------------------


def project(X, K, pose):
    """Pixel of a world point; raises BehindCameraError at z_cam <= 0."""
    X = np.asarray(X, np.float64).reshape(3)
    xc = pose.R @ X + pose.t
    if xc[2] <= 0.0:
        raise BehindCameraError(
            f"point has camera depth {xc[2]:g}; must be > 0")
    u = K.matrix @ xc
    return np.array([u[0] / u[2], u[1] / u[2]])


def project_batch(points, K, pose):
    """(pixels, in_front) for an (n, 3) batch; pixels of points at
    z_cam <= 0 are NaN and flagged False."""
    P = np.asarray(points, np.float64).reshape(-1, 3)
    xc = P @ pose.R.T + pose.t
    ok = xc[:, 2] > 0.0
    px = np.full((P.shape[0], 2), np.nan)
    u = xc[ok] @ K.matrix.T
    px[ok] = u[:, :2] / u[:, 2:3]
    return px, ok


# -- composition and decomposition ---------------------------------------------


def relative_pose(pose1, pose2):
    """(R_rel, t_rel) with x_c2 = R_rel @ x_c1 + t_rel."""
    R_rel = pose2.R @ pose1.R.T
    t_rel = pose2.t - R_rel @ pose1.t
    return R_rel, t_rel


def compose_homography(K1, K2, pose1, pose2, plane, mode="consistent"):
    """Homography sending view-1 pixels of plane points to view-2 pixels.

    The plane is given in the camera-1 frame.  ``consistent`` (default)
    returns K2 (R_rel + t_rel n^T / d) K1^-1, the matrix that actually
    satisfies H x1 ~ x2 for every plane point under the stated pose
    convention.  ``verbatim`` evaluates K2 R2 (I - (t1 - t2) n^T / d)
    R1^T K1^T, a published variant kept for comparison; it transposes
    where the consistent form inverts, so it generally does not transfer
    pixels (the two agree for identity-like K and equal poses).
    """
    if mode not in ("consistent", "verbatim"):
        raise ParameterError(f"compose_homography: unknown mode {mode!r}")
    if not plane.d > 0.0:
        raise ParameterError("compose_homography: plane distance must be > 0")
    n = plane.n
    d = plane.d
    if mode == "consistent":
        R_rel, t_rel = relative_pose(pose1, pose2)
        M = R_rel + np.outer(t_rel, n) / d
        H = K2.matrix @ M @ K1.inverse
    else:
        M = np.eye(3) - np.outer(pose1.t - pose2.t, n) / d
        H = K2.matrix @ pose2.R @ M @ pose1.R.T @ K1.matrix.T
    return Homography(H)


def decompose_homography(H, K1, K2, pose1, plane):
    """Invert compose_homography(consistent): recover the view-2 pose.

    The input scale of H is irrelevant.  M = K2^-1 H K1 equals
    lambda (R_rel + t_rel n^T / d); |M v| over two orthonormal vectors
    v perpendicular to n recovers |lambda| (they must agree to 1%), the
    sign is fixed by requiring the plane point nearest camera 1 to sit in
    front of camera 2, R_rel comes from M's action on the plane-parallel
    subspace (orthonormalized through a Procrustes projection), and
    t_rel = (M/lambda - R_rel) n d.
    """
    n = plane.n
    d = plane.d
    M = K2.inverse @ np.asarray(H.matrix if isinstance(H, Homography) else H,
                                np.float64) @ K1.matrix
    # orthonormal basis of the plane-parallel subspace with v1 x v2 = n
    e = np.array([0.0, 0.0, 1.0])
    if abs(float(n @ e)) > 0.9:
        e = np.array([1.0, 0.0, 0.0])
    v1 = np.cross(e, n)
    v1 /= np.linalg.norm(v1)
    v2 = np.cross(n, v1)
    m1 = M @ v1
    m2 = M @ v2
    s1 = float(np.linalg.norm(m1))
    s2 = float(np.linalg.norm(m2))
    lam = 0.5 * (s1 + s2)
    if lam == 0.0 or abs(s1 - s2) > 0.01 * lam:
        raise InconsistentHomographyError(
            f"plane-parallel stretches disagree: {s1:g} vs {s2:g}")
    Mh = M / lam
    # cheirality: the plane's closest point to camera 1 (at n*d) must map
    # to positive depth in camera 2
    if (Mh @ (n * d))[2] < 0.0:
        Mh = -Mh
    b1 = Mh @ v1
    b2 = Mh @ v2
    A = np.column_stack([v1, v2, n])
    B = np.column_stack([b1, b2, np.cross(b1, b2)])
    R_rel = nearest_rotation(B @ A.T)
    t_rel = (Mh - R_rel) @ n * d
    R2 = R_rel @ pose1.R
    t2 = t_rel + R_rel @ pose1.t
    return Pose(R=nearest_rotation(R2), t=t2)


# -- DLT and RANSAC -------------------------------------------------------------


def _normalizer(pts):
    c = pts.mean(axis=0)
    dist = np.linalg.norm(pts - c, axis=1).mean()
    if dist == 0.0:
        raise DegenerateConfigurationError(
            "all correspondence points coincide")
    s = math.sqrt(2.0) / dist
    T = np.array([[s, 0.0, -s * c[0]],
                  [0.0, s, -s * c[1]],
                  [0.0, 0.0, 1.0]])
    T_inv = np.array([[1.0 / s, 0.0, c[0]],
                      [0.0, 1.0 / s, c[1]],
                      [0.0, 0.0, 1.0]])
    return T, T_inv


def estimate_homography(pairs):
    """Normalized direct linear transform.

    Hartley normalization (centroid to origin, mean distance sqrt(2)) on
    both views, algebraic least squares via SVD.  Degenerate
    configurations, where the design matrix keeps more than one vanishing
    singular value (e.g. four points with three collinear), raise
    DegenerateConfigurationError.
    """
    n = len(pairs)
    if n < 4:
        raise InsufficientDataError(
            f"homography needs at least 4 pairs, got {n}")
    T1, _ = _normalizer(pairs.pts1)
    T2, T2_inv = _normalizer(pairs.pts2)
    p1 = pairs.pts1 @ T1[:2, :2].T + T1[:2, 2]
    p2 = pairs.pts2 @ T2[:2, :2].T + T2[:2, 2]
    A = np.zeros((2 * n, 9))
    x, y = p1[:, 0], p1[:, 1]
    u, v = p2[:, 0], p2[:, 1]
    A[0::2, 0] = -x
    A[0::2, 1] = -y
    A[0::2, 2] = -1.0
    A[0::2, 6] = u * x
    A[0::2, 7] = u * y
    A[0::2, 8] = u
    A[1::2, 3] = -x
    A[1::2, 4] = -y
    A[1::2, 5] = -1.0
    A[1::2, 6] = v * x
    A[1::2, 7] = v * y
    A[1::2, 8] = v
    _, s, Vt = np.linalg.svd(A)
    if n == 4:
        degenerate = s[-1] <= 1e-9 * s[0]
    else:
        degenerate = (s[-2] - s[-1]) <= 1e-9 * s[0]
    if degenerate:
        raise DegenerateConfigurationError(
            "correspondences do not determine a unique homography")
    Hn = Vt[-1].reshape(3, 3)
    return Homography(T2_inv @ Hn @ T1)


def symmetric_transfer_errors(H, pairs):
    """Per-pair symmetric transfer distance
    sqrt(|H x1 - x2|^2 + |H^-1 x2 - x1|^2) in pixels."""
    Hm = H.matrix
    try:
        Hi = np.linalg.inv(Hm)
    except np.linalg.LinAlgError:
        return np.full(len(pairs), np.inf)
    q = pairs.pts1 @ Hm[:, :2].T + Hm[:, 2]
    w = np.where(np.abs(q[:, 2]) < _EPS_W, _EPS_W, q[:, 2])
    fwd = q[:, :2] / w[:, None] - pairs.pts2
    q = pairs.pts2 @ Hi[:, :2].T + Hi[:, 2]
    w = np.where(np.abs(q[:, 2]) < _EPS_W, _EPS_W, q[:, 2])
    bwd = q[:, :2] / w[:, None] - pairs.pts1
    d2 = np.einsum("ij,ij->i", fwd, fwd) + np.einsum("ij,ij->i", bwd, bwd)
    return np.sqrt(d2)


def ransac_homography(pairs, params=None, rng=0):
    """4-point RANSAC with a final DLT refit over the winning inliers.

    Returns (Homography, inlier mask).  Deterministic for a given rng
    seed; raises RobustFailureError when no sampled model reaches 4
    inliers.
    """
    if params is None:
        params = RansacParams()
    params.validate()
    rng = np.random.default_rng(rng)
    n = len(pairs)
    if n < 4:
        raise InsufficientDataError(
            f"ransac needs at least 4 pairs, got {n}")
    best_mask = None
    best_count = 3
    best_err = np.inf
    needed = params.max_trials
    trial = 0
    while trial < min(params.max_trials, needed):
        trial += 1
        sample = rng.choice(n, size=4, replace=False)
        sub = CorrespondenceSet(pairs.pts1[sample], pairs.pts2[sample])
        try:
            H = estimate_homography(sub)
        except DegenerateConfigurationError:
            continue
        errors = symmetric_transfer_errors(H, pairs)
        mask = errors <= params.threshold_px
        count = int(mask.sum())
        score = float(np.where(mask, errors, params.threshold_px).sum())
        if count > best_count or (count == best_count and score < best_err):
            best_mask = mask
            best_count = count
            best_err = score
            ratio = count / n
            if ratio >= 1.0:
                break
            denom = math.log1p(-min(ratio ** 4, 1.0 - 1e-12))
            needed = math.ceil(math.log(1.0 - params.confidence) / denom)
    if best_mask is None:
        raise RobustFailureError(
            "no 4-point sample produced a model with 4 inliers")
    refit = CorrespondenceSet(pairs.pts1[best_mask], pairs.pts2[best_mask])
    try:
        H = estimate_homography(refit)
    except DegenerateConfigurationError as exc:
        raise RobustFailureError(
            f"inlier set degenerate at refit: {exc}") from exc
    mask = symmetric_transfer_errors(H, pairs) <= params.threshold_px
    if int(mask.sum()) < 4:
        raise RobustFailureError("refit model keeps fewer than 4 inliers")
    return H, mask


# -- Gauss-Newton reprojection polish -------------------------------------------


def reprojection_residuals_jacobian(points, observed, K, pose):
    """Stacked residuals (2n,) and Jacobian (2n, 6) of pixel reprojection
    errors with respect to a left-multiplied axis-angle increment and a
    translation increment: R <- exp([dw]x) R, t <- t + dt.

    Points behind the camera contribute zero rows (they carry no usable
    gradient); callers needing hard failures should check depths first.
    """
    P = np.asarray(points, np.float64).reshape(-1, 3)
    obs = np.asarray(observed, np.float64).reshape(-1, 2)
    n = P.shape[0]
    Km = K.matrix
    r = np.zeros(2 * n)
    J = np.zeros((2 * n, 6))
    xc = P @ pose.R.T + pose.t
    u = xc @ Km.T
    for i in range(n):
        if xc[i, 2] <= 0.0:
            continue
        w = u[i, 2]
        px = u[i, 0] / w
        py = u[i, 1] / w
        r[2 * i] = px - obs[i, 0]
        r[2 * i + 1] = py - obs[i, 1]
        dpi = np.array([[1.0 / w, 0.0, -u[i, 0] / (w * w)],
                        [0.0, 1.0 / w, -u[i, 1] / (w * w)]])
        dx = np.hstack([-skew(xc[i]), np.eye(3)])
        J[2 * i:2 * i + 2] = dpi @ Km @ dx
    return r, J


def gauss_newton_pose(points, observed, K, pose, max_iters=50,
                      step_tol=1e-10):
    """Minimize squared reprojection error over the 6 pose parameters.

    Left-multiplicative updates keep R in SO(3) (it is re-projected after
    every step).  Stops on step norm below step_tol or max_iters.
    """
    cur = pose
    for _ in range(int(max_iters)):
        r, J = reprojection_residuals_jacobian(points, observed, K, cur)
        delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
        R = nearest_rotation(so3_exp(delta[:3]) @ cur.R)
        cur = Pose(R=R, t=cur.t + delta[3:])
        if float(np.linalg.norm(delta)) < step_tol:
            break
    return cur


# -- refinement loop -------------------------------------------------------------


@dataclass
class IterationRecord:
    """One refinement iteration, for traces and reports."""

    iteration: int
    rmse_px: float
    inliers: int
    pairs: int
    rel_change: float
    rotation_error_deg: float
    translation_error_m: float
    pose: Pose


def _pose_vector(pose):
    return np.concatenate([so3_log(pose.R), pose.t])


def plane_in_camera(plane_n_world, plane_d_world, pose):
    """Re-express a world plane n.X = d in a camera frame, with d > 0."""
    n_w = np.asarray(plane_n_world, np.float64).reshape(3)
    n_c = pose.R @ n_w
    d_c = float(plane_d_world + n_c @ pose.t)
    if d_c < 0.0:
        n_c = -n_c
        d_c = -d_c
    if d_c == 0.0:
        raise ParameterError("camera center lies on the plane")
    return Plane(n=n_c, d=d_c)


def refine_pose(scene, initial, params=None):
    """Iteratively correct a camera pose against a scene's observations.

    Per iteration: project the scene points with the current estimate (the
    rendered view), pair those pixels with the scene's fixed observations,
    estimate the induced homography robustly, decompose it into a
    corrected pose, and optionally polish with Gauss-Newton on the RANSAC
    inliers.  Stops when the relative change of the 6 pose parameters
    drops under params.stop_rel_change (or below an absolute 1e-8 floor);
    raises DivergenceError, carrying the trace, after three consecutive
    error increases.
    """
    if params is None:
        params = RefineParams()
    params.validate()
    rng = np.random.default_rng(int(scene.rng_seed) + 1)
    points = np.asarray(scene.points, np.float64)
    obs = np.asarray(scene.observations, np.float64)
    K = scene.K
    pose_est = initial
    theta_prev = _pose_vector(initial)
    trace = []
    rmse_prev = np.inf
    rises = 0
    for it in range(params.max_iters):
        rendered, in_front = project_batch(points, K, pose_est)
        usable = in_front & scene.observed_mask
        if int(usable.sum()) < 4:
            raise RobustFailureError(
                f"iteration {it}: only {int(usable.sum())} usable pairs")
        pairs = CorrespondenceSet(rendered[usable], obs[usable])
        H, inliers = ransac_homography(pairs, params.ransac, rng)
        cam_plane = plane_in_camera(scene.plane_normal_world,
                                    scene.plane_d_world, pose_est)
        pose_new = decompose_homography(H, K, K, pose_est, cam_plane)
        if params.polish:
            world_inl = points[usable][inliers]
            obs_inl = obs[usable][inliers]
            pose_new = gauss_newton_pose(world_inl, obs_inl, K, pose_new,
                                         params.gn_max_iters,
                                         params.gn_step_tol)
        re_px, re_ok = project_batch(points[usable][inliers], K, pose_new)
        diff = re_px[re_ok] - obs[usable][inliers][re_ok]
        rmse = (float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))
                if diff.size else np.inf)
        theta_new = _pose_vector(pose_new)
        step = float(np.linalg.norm(theta_new - theta_prev))
        rel = step / max(float(np.linalg.norm(theta_prev)), 1e-8)
        rot_err = math.degrees(
            rotation_angle(pose_new.R @ scene.true_pose.R.T))
        trans_err = float(np.linalg.norm(pose_new.center
                                         - scene.true_pose.center))
        trace.append(IterationRecord(
            iteration=it, rmse_px=rmse, inliers=int(inliers.sum()),
            pairs=len(pairs), rel_change=rel,
            rotation_error_deg=rot_err, translation_error_m=trans_err,
            pose=pose_new))
        pose_est = pose_new
        theta_prev = theta_new
        if rel < params.stop_rel_change or step < 1e-8:
            break
        if rmse > rmse_prev:
            rises += 1
            if rises >= 3:
                raise DivergenceError(
                    f"reprojection error rose {rises} iterations in a row",
                    trace=trace)
        else:
            rises = 0
        rmse_prev = rmse
    return pose_est, trace
