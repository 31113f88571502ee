"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written by a different route than the library
code: explicit loops instead of stride tricks, a one-sided Jacobi SVD instead
of LAPACK, matrix-built DFTs and convolutions instead of FFTs and im2col.
Slow and obvious beats fast and shared-bug.
"""

import numpy as np


# ---------------------------------------------------------------------------
# block-Hankel lift / multiplicity, loop route


def hankel_lift_loops(k, window):
    """Lift an (nc, nx, ny) volume with four explicit loops."""
    nc, nx, ny = k.shape
    w = int(window)
    ox, oy = nx - w + 1, ny - w + 1
    H = np.zeros((nc * w * w, ox * oy), dtype=k.dtype)
    for c in range(nc):
        for lr in range(w):
            for lc in range(w):
                row = c * w * w + lr * w + lc
                for i in range(ox):
                    for j in range(oy):
                        H[row, i * oy + j] = k[c, i + lr, j + lc]
    return H


def multiplicity_loops(nx, ny, window):
    """Count covering windows per location by actually sliding the window."""
    w = int(window)
    m = np.zeros((nx, ny), dtype=np.int64)
    for i in range(nx - w + 1):
        for j in range(ny - w + 1):
            m[i : i + w, j : j + w] += 1
    return m


def unlift_loops(H, window, nx, ny, nc):
    """Average every matrix cell back onto its k-space source, loop route."""
    w = int(window)
    ox, oy = nx - w + 1, ny - w + 1
    acc = np.zeros((nc, nx, ny), dtype=np.complex128)
    for c in range(nc):
        for lr in range(w):
            for lc in range(w):
                row = c * w * w + lr * w + lc
                for i in range(ox):
                    for j in range(oy):
                        acc[c, i + lr, j + lc] += H[row, i * oy + j]
    return acc / multiplicity_loops(nx, ny, w)


# ---------------------------------------------------------------------------
# one-sided Jacobi SVD, complex


def jacobi_svd(A, tol=1e-13, max_sweeps=60):
    """Thin SVD of a complex matrix by one-sided Jacobi rotations.

    Returns (U, s, Vh) with U (m, r), s descending, Vh (r, n), r = min(m, n).
    Column pairs are rotated until every pair is numerically orthogonal, so
    accuracy does not lean on any LAPACK code path.
    """
    A = np.asarray(A, dtype=np.complex128)
    m, n = A.shape
    if m < n:
        # orthogonalize the shorter side, then swap factors
        U, s, Vh = jacobi_svd(A.conj().T, tol=tol, max_sweeps=max_sweeps)
        return Vh.conj().T, s, U.conj().T

    G = A.copy()
    V = np.eye(n, dtype=np.complex128)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = np.vdot(G[:, p], G[:, p]).real
                aqq = np.vdot(G[:, q], G[:, q]).real
                apq = np.vdot(G[:, p], G[:, q])
                denom = np.sqrt(app * aqq)
                if denom == 0.0 or abs(apq) <= tol * denom:
                    continue
                off = max(off, abs(apq) / denom)
                # fold the phase of the cross term into column q, then the
                # remaining 2x2 problem is real symmetric
                phase = apq / abs(apq)
                gq = G[:, q] * np.conj(phase)
                vq = V[:, q] * np.conj(phase)
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s_ = c * t
                gp = G[:, p].copy()
                vp = V[:, p].copy()
                G[:, p] = c * gp - s_ * gq
                G[:, q] = s_ * gp + c * gq
                V[:, p] = c * vp - s_ * vq
                V[:, q] = s_ * vp + c * vq
        if off <= tol:
            break

    sv = np.sqrt(np.sum(np.abs(G) ** 2, axis=0))
    order = np.argsort(sv)[::-1]
    sv = sv[order]
    G = G[:, order]
    V = V[:, order]
    U = np.zeros_like(G)
    for j in range(n):
        if sv[j] > 0:
            U[:, j] = G[:, j] / sv[j]
        else:
            # null column: any unit vector orthogonal to the previous ones
            e = np.zeros(m, dtype=np.complex128)
            e[j % m] = 1.0
            for i in range(j):
                e -= U[:, i] * np.vdot(U[:, i], e)
            nrm = np.linalg.norm(e)
            U[:, j] = e / nrm if nrm > 0 else e
    return U, sv, V.conj().T


# ---------------------------------------------------------------------------
# centered orthonormal DFT, matrix route


def centered_dft_matrix(n):
    """Orthonormal DFT matrix with both input and output index origins at n//2."""
    c = n // 2
    u = np.arange(n)[:, None] - c
    m = np.arange(n)[None, :] - c
    return np.exp(-2j * np.pi * u * m / n) / np.sqrt(n)


def fft2c_matrix(img):
    """Centered orthonormal 2-D DFT of the trailing two axes via explicit matrices."""
    img = np.asarray(img, dtype=np.complex128)
    Fx = centered_dft_matrix(img.shape[-2])
    Fy = centered_dft_matrix(img.shape[-1])
    return np.einsum("um,...mn,vn->...uv", Fx, img, Fy)


def ifft2c_matrix(k):
    k = np.asarray(k, dtype=np.complex128)
    Fx = centered_dft_matrix(k.shape[-2])
    Fy = centered_dft_matrix(k.shape[-1])
    return np.einsum("um,...mn,vn->...uv", Fx.conj().T, k, Fy.conj().T)


# ---------------------------------------------------------------------------
# image metrics, loop route


def psnr_loops(img, ref, cap=99.0):
    """Peak 1 PSNR after normalizing both images by the reference maximum."""
    scale = float(np.max(ref))
    a = np.asarray(img, dtype=np.float64) / scale
    b = np.asarray(ref, dtype=np.float64) / scale
    se = 0.0
    for i in range(b.shape[0]):
        for j in range(b.shape[1]):
            se += (a[i, j] - b[i, j]) ** 2
    mse = se / b.size
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * np.log10(1.0 / mse))


def _gaussian_window(size=11, sigma=1.5):
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim_loops(img, ref, size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Single-scale SSIM over valid window positions, explicit window loop."""
    scale = float(np.max(ref))
    a = np.asarray(img, dtype=np.float64) / scale
    b = np.asarray(ref, dtype=np.float64) / scale
    w = _gaussian_window(size, sigma)
    c1 = k1 ** 2
    c2 = k2 ** 2
    vals = []
    for i in range(a.shape[0] - size + 1):
        for j in range(a.shape[1] - size + 1):
            pa = a[i : i + size, j : j + size]
            pb = b[i : i + size, j : j + size]
            mua = np.sum(w * pa)
            mub = np.sum(w * pb)
            va = np.sum(w * pa * pa) - mua ** 2
            vb = np.sum(w * pb * pb) - mub ** 2
            cov = np.sum(w * pa * pb) - mua * mub
            vals.append(
                ((2 * mua * mub + c1) * (2 * cov + c2))
                / ((mua ** 2 + mub ** 2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# 3x3 convolution as an explicit matrix


def conv3x3_matrix(W, b, height, width):
    """Materialize a zero-padded 3x3 convolution as (matrix, bias vector).

    W has shape (c_out, c_in, 3, 3). The returned matrix M acts on a
    flattened (c_in * height * width) field so that conv(x) = M @ x + bias.
    """
    c_out, c_in = W.shape[:2]
    M = np.zeros((c_out * height * width, c_in * height * width))
    for co in range(c_out):
        for y in range(height):
            for x in range(width):
                r = (co * height + y) * width + x
                for ci in range(c_in):
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            yy, xx = y + dy, x + dx
                            if 0 <= yy < height and 0 <= xx < width:
                                cidx = (ci * height + yy) * width + xx
                                M[r, cidx] = W[co, ci, dy + 1, dx + 1]
    bias = np.repeat(np.asarray(b, dtype=np.float64), height * width)
    return M, bias


# ---------------------------------------------------------------------------
# analytic score for the Gaussian toy model


def gaussian_score(x, mu, var, sigma):
    """Marginal score of N(mu, var) data under N(0, sigma^2) smoothing."""
    return -(np.asarray(x, dtype=np.float64) - mu) / (var + sigma ** 2)


# ---------------------------------------------------------------------------
# misc small helpers


def eckart_young_error(A, rank):
    """Best rank-r approximation error of A in Frobenius norm, via Jacobi SVD."""
    _, s, _ = jacobi_svd(A)
    return float(np.sqrt(np.sum(s[rank:] ** 2)))


def rank8_volume(nc=4, nx=32, ny=32, seed=3):
    """Multi-coil k-space whose block-Hankel lift has rank at most 8.

    Each coil is the same mix of 8 complex exponentials with coil-specific
    amplitudes. Every lifted column then lives in the span of the 8 separable
    exponential window vectors, independent of the window size.
    """
    rng = np.random.default_rng(seed)
    fx = rng.uniform(-0.4, 0.4, size=8)
    fy = rng.uniform(-0.4, 0.4, size=8)
    amp = rng.normal(size=(nc, 8)) + 1j * rng.normal(size=(nc, 8))
    x = np.arange(nx)[:, None]
    y = np.arange(ny)[None, :]
    k = np.zeros((nc, nx, ny), dtype=np.complex128)
    for m in range(8):
        wave = np.exp(2j * np.pi * (fx[m] * x + fy[m] * y))
        for c in range(nc):
            k[c] += amp[c, m] * wave
    return k
