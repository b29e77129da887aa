"""Independent reference computations used by the tests.

None of these share code with the package: a grid Schroedinger integrator,
a truncated number-state diagonalisation and a high-precision Hessian.
"""
import numpy as np


def grid_echo_1d(omega_g, omega_e, displacement, times, n_points=2048, half_width=None, dt=2e-3):
    """Split-operator (Strang) integration of a 1D quench, hbar = m = 1.

    The initial state is the ``omega_g`` ground state at the origin; it
    evolves in ``0.5 omega_e^2 (x - d)^2``.  Energies are measured from the
    ``g`` ground level, so the returned echo is ``<psi0|psi(t)> e^{i w_g t/2}``.
    """
    if half_width is None:
        spread = 1.0 / np.sqrt(min(omega_g, omega_e))
        half_width = 12.0 * spread + 3.0 * abs(displacement)
    x = np.linspace(-half_width, half_width, n_points, endpoint=False)
    dx = x[1] - x[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, dx)
    psi0 = (omega_g / np.pi) ** 0.25 * np.exp(-0.5 * omega_g * x**2)
    potential = 0.5 * omega_e**2 * (x - displacement) ** 2
    out = []
    psi = psi0.astype(complex)
    t_now = 0.0
    for t in np.sort(np.asarray(times, dtype=float)):
        steps = int(round((t - t_now) / dt))
        if steps:
            h = (t - t_now) / steps
            half_v = np.exp(-0.5j * h * potential)
            kin = np.exp(-0.5j * h * k**2)
            for _ in range(steps):
                psi = half_v * np.fft.ifft(kin * np.fft.fft(half_v * psi))
        t_now = t
        out.append(np.sum(psi0 * psi) * dx * np.exp(0.5j * omega_g * t))
    return np.array(out)


def grid_width_1d(omega_g, omega_e, t, n_points=2048, dt=1e-3):
    """Position variance after a centred quench, from the grid wavefunction."""
    spread = 1.0 / np.sqrt(min(omega_g, omega_e))
    half_width = 12.0 * spread
    x = np.linspace(-half_width, half_width, n_points, endpoint=False)
    dx = x[1] - x[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, dx)
    psi = (omega_g / np.pi) ** 0.25 * np.exp(-0.5 * omega_g * x**2) + 0j
    steps = max(1, int(round(t / dt)))
    h = t / steps
    half_v = np.exp(-0.25j * h * omega_e**2 * x**2)
    kin = np.exp(-0.5j * h * k**2)
    for _ in range(steps):
        psi = half_v * np.fft.ifft(kin * np.fft.fft(half_v * psi))
    rho = np.abs(psi) ** 2
    return float(np.sum(rho * x**2) * dx / (np.sum(rho) * dx))


def fock_echo(omegas_g, stiffness_e, center_e, energy_e, times, cutoff):
    """Echo of a multimode quench in a truncated number-state basis.

    The basis is built from the ``g`` oscillators (diagonal, frequencies
    ``omegas_g``, centred at the origin).  ``H_e = p^2/2 + (x - c)^T K (x - c)/2
    + energy_e`` is assembled from truncated ladder operators and
    diagonalised; the echo is ``<0|exp(-i H_e t)|0> exp(i E_g t)`` with
    ``E_g = sum(omegas_g)/2``.
    """
    omegas_g = np.asarray(omegas_g, dtype=float)
    n_modes = omegas_g.size
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    eye = np.eye(cutoff)

    def embed(op, j):
        mats = [eye] * n_modes
        mats[j] = op
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    xs = [embed((a + a.T) / np.sqrt(2.0 * w), j) for j, w in enumerate(omegas_g)]
    ps = [embed(1j * np.sqrt(w / 2.0) * (a.T - a), j) for j, w in enumerate(omegas_g)]
    dim = cutoff**n_modes
    H = np.zeros((dim, dim), dtype=complex)
    shifted = [xs[j] - center_e[j] * np.eye(dim) for j in range(n_modes)]
    for j in range(n_modes):
        H += 0.5 * ps[j] @ ps[j]
        for k in range(n_modes):
            H += 0.5 * stiffness_e[j][k] * shifted[j] @ shifted[k]
    H += energy_e * np.eye(dim)
    H = 0.5 * (H + H.conj().T)
    energies, vectors = np.linalg.eigh(H)
    weights = np.abs(vectors[0, :]) ** 2
    e_ref = 0.5 * omegas_g.sum()
    times = np.asarray(times, dtype=float)
    return np.exp(-1j * np.outer(times, energies - e_ref)) @ weights


def mp_hessian_eigenvalues(positions, stiffness, dps=40):
    """Hessian eigenvalues of the dimensionless potential with mpmath.

    ``positions`` are mpmath-precision (x, y) pairs, ``stiffness`` the
    per-ion transverse curvature.
    """
    import mpmath as mp

    mp.mp.dps = dps
    n = len(positions)
    H = mp.zeros(2 * n, 2 * n)
    for j in range(n):
        H[j, j] += 1
        H[n + j, n + j] += stiffness[j]
        for k in range(n):
            if k == j:
                continue
            dx = positions[j][0] - positions[k][0]
            dy = positions[j][1] - positions[k][1]
            r2 = dx * dx + dy * dy
            r5 = r2 ** mp.mpf(2.5)
            bxx = (3 * dx * dx - r2) / r5
            byy = (3 * dy * dy - r2) / r5
            bxy = 3 * dx * dy / r5
            for (u, v, b) in ((j, j, bxx), (n + j, n + j, byy), (j, n + j, bxy), (n + j, j, bxy)):
                H[u, v] += b
            for (u, v, b) in ((j, k, bxx), (n + j, n + k, byy), (j, n + k, bxy), (n + j, k, bxy)):
                H[u, v] -= b
    return sorted(mp.eigsy(H, eigvals_only=True))


def mp_zigzag_x(alpha, dps=40):
    """High-precision x-zigzag of three identical ions, found by mpmath
    root finding on the force balance (no closed form used)."""
    import mpmath as mp

    mp.mp.dps = dps
    a = mp.mpf(alpha)

    def forces(xb, yb):
        # outer ions at (+-xb, yb), middle at (0, -2 yb): force on ion 1
        d12 = mp.sqrt(xb**2 + 9 * yb**2)
        fx = -xb + xb / d12**3 + 2 * xb / (2 * xb) ** 3
        fy = -(a**2) * yb + 3 * yb / d12**3
        return fx, fy

    xb, yb = mp.findroot(forces, (mp.mpf("0.8"), mp.mpf("0.5")))
    return [(xb, yb), (mp.mpf(0), -2 * yb), (-xb, yb)]
