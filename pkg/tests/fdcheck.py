"""Central finite-difference gradient checks shared by the test suite.

Every backward pass in the library is verified against this oracle: perturb
one coordinate at a time by +/- step, re-run the forward closure, and compare
the resulting numerical gradient to the analytic one with a relative L2 error.
"""

import numpy as np

FD_STEP = 1e-6


def fd_grad(f, x, step=FD_STEP):
    """Central-difference gradient of the scalar closure f with respect to x.

    f takes no arguments and reads x's current contents; x is perturbed in
    place one coordinate at a time and restored afterwards.
    """
    x = np.asarray(x)
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = float(f())
        flat[i] = orig - step
        lo = float(f())
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def rel_error(analytic, numeric):
    """Relative L2 distance, guarded against an all-zero numerical gradient."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    diff = np.linalg.norm((analytic - numeric).reshape(-1))
    return diff / max(np.linalg.norm(numeric.reshape(-1)), 1e-10)


def check_grad(f, x, analytic, tol, step=FD_STEP, zero_floor=0.0):
    """Assert the analytic gradient of f with respect to x within tol.

    zero_floor handles identically-zero true gradients: central differences
    bottom out at roundoff/(2*step) ~ 1e-10 per coordinate, so when both the
    analytic and numerical gradients sit below the floor the check passes.
    """
    numeric = fd_grad(f, x, step=step)
    a_norm = np.linalg.norm(np.asarray(analytic, dtype=np.float64).reshape(-1))
    n_norm = np.linalg.norm(numeric.reshape(-1))
    if a_norm <= zero_floor and n_norm <= zero_floor:
        return
    err = rel_error(analytic, numeric)
    assert err <= tol, f"gradient mismatch: rel err {err:.3e} > {tol:.1e}"
