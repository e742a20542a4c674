"""Monte-Carlo reference statistics for the noisy pose and contact-point tests.

Independent of the C++ code: OpenCV's iterative PnP and a SciPy least-squares
triangulation over the same sampling distribution as tests/test_geometry.cpp.
Prints the constants frozen in that file.
"""
import numpy as np
import cv2
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

FX = FY = 1400.0
CX, CY = 960.0, 540.0
K = np.array([[FX, 0, CX], [0, FY, CY], [0, 0, 1.0]])
# World -> camera: camera 1.2 m behind the origin on -y, looking along +y.
R_WC = np.array([[1.0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]])
T_WC = np.array([0, 0, 1.2])
TRIALS = 100
SIGMA = 1.0


def project(points_obj, rot, trans):
    cam = (R_WC @ (rot @ points_obj.T + trans[:, None])).T + T_WC
    return np.column_stack([FX * cam[:, 0] / cam[:, 2] + CX, FY * cam[:, 1] / cam[:, 2] + CY])


def pnp_trial(rng):
    pts = rng.uniform(-0.1, 0.1, size=(10, 3))
    rot = Rotation.random(random_state=rng).as_matrix()
    trans = rng.uniform(-0.05, 0.05, size=3)
    pix = project(pts, rot, trans) + rng.normal(0, SIGMA, size=(10, 2))
    ok, rvec, tvec = cv2.solvePnP(pts, pix, K, None, flags=cv2.SOLVEPNP_ITERATIVE)
    # Refine from the truth as well; keep the lower-residual answer.
    r_true = R_WC @ rot
    t_true = R_WC @ trans + T_WC
    best = None
    for rv, tv in ((rvec, tvec), (cv2.Rodrigues(r_true)[0], t_true.reshape(3, 1))):
        rv, tv = cv2.solvePnPRefineLM(pts, pix, K, None, rv.copy(), tv.copy())
        proj, _ = cv2.projectPoints(pts, rv, tv, K, None)
        res = np.sqrt(np.mean(np.sum((proj.reshape(-1, 2) - pix) ** 2, axis=1)))
        if best is None or res < best[0]:
            best = (res, rv, tv)
    res, rv, tv = best
    r_est = cv2.Rodrigues(rv)[0]
    rot_err = np.linalg.norm(Rotation.from_matrix(r_est @ r_true.T).as_rotvec())
    trans_err = np.linalg.norm(tv.ravel() - t_true)
    return res, rot_err, trans_err


def contact_trial(rng):
    c = rng.uniform(-0.1, 0.1, size=3)
    rot0 = Rotation.random(random_state=rng)
    poses = []
    for t in range(10):
        step = Rotation.from_rotvec(np.radians(8.0) * t * np.array([0.3, 1.0, 0.2]) / np.linalg.norm([0.3, 1.0, 0.2]))
        trans = np.array([0.01 * t, 0.0, -0.005 * t])
        poses.append(((step * rot0).as_matrix(), trans))
    pix = [project(c[None, :], r, tr)[0] + rng.normal(0, SIGMA, size=2) for r, tr in poses]

    def residual(x):
        return np.concatenate([project(x[None, :], r, tr)[0] - p for (r, tr), p in zip(poses, pix)])

    sol = least_squares(residual, np.zeros(3), method="lm", xtol=1e-14, ftol=1e-14)
    return np.linalg.norm(sol.x - c)


def main():
    rng = np.random.default_rng(20240601)
    pnp = np.array([pnp_trial(rng) for _ in range(TRIALS)])
    cp = np.array([contact_trial(rng) for _ in range(TRIALS)])
    res = pnp[:, 0]
    print(f"pnp residual_px: mean {res.mean():.6f} sd {res.std(ddof=1):.6f} min {res.min():.6f} max {res.max():.6f}")
    print(f"pnp rotation_rad: mean {pnp[:, 1].mean():.6g} max {pnp[:, 1].max():.6g}")
    print(f"pnp translation_m: mean {pnp[:, 2].mean():.6g} max {pnp[:, 2].max():.6g}")
    print(f"contact error_m: mean {cp.mean():.6g} sd {cp.std(ddof=1):.6g} p95 {np.percentile(cp, 95):.6g} max {cp.max():.6g}")


if __name__ == "__main__":
    main()
