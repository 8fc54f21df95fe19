"""Independent reference computations used as test oracles.

Written without importing the package's filter code so a shared mistake
cannot cancel out.
"""

import numpy as np


def dense_transition(dt, frictions):
    A = np.zeros((8, 8))
    for axis, f in enumerate(frictions):
        i = 2 * axis
        A[i, i] = 1.0
        A[i, i + 1] = dt
        A[i + 1, i + 1] = 1.0 - f
    return A


def dense_process_noise(q_pos_yaw, q_rates):
    # q_pos_yaw = (x, y, z, yaw), q_rates = (vx, vy, vz, r)
    diag = []
    for a, b in zip(q_pos_yaw, q_rates):
        diag += [a, b]
    return np.diag(diag)


def measurement_matrix():
    H = np.zeros((4, 8))
    for row, col in enumerate((0, 2, 4, 6)):
        H[row, col] = 1.0
    return H


def kf_predict(x, P, A, Q):
    return A.dot(x), A.dot(P).dot(A.T) + Q


def kf_correct(x, P, z, R):
    H = measurement_matrix()
    S = H.dot(P).dot(H.T) + R
    K = P.dot(H.T).dot(np.linalg.inv(S))
    y = z - H.dot(x)
    y[3] = np.arctan2(np.sin(y[3]), np.cos(y[3]))
    x_new = x + K.dot(y)
    P_new = (np.eye(8) - K.dot(H)).dot(P)
    return x_new, 0.5 * (P_new + P_new.T)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_spd(rng, n=8, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T / n + 0.1 * np.eye(n))
