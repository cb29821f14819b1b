"""Centered 2-D Fourier transforms and inner products for k-space work.

MRI convention puts the zero-frequency bin at the grid center; numpy's FFT
puts it in the corner, so the transforms here wrap fft2/ifft2 in the usual
shift pair:

    image   -> ifftshift -> fft2  -> fftshift -> k-space
    k-space -> ifftshift -> ifft2 -> fftshift -> image

Scaling is orthonormal (1/sqrt(H*W) each direction), which makes fft2c
unitary: energy is preserved and the adjoint of the sampled forward
operator built on top of it needs no extra scale factors.  The
zero-frequency bin sits at (H//2, W//2).

``dft2c_reference`` is a direct-summation implementation of the same
contract, kept deliberately independent of the FFT path so it can serve as
ground truth in tests.
"""

import numpy as np

from ._checks import check_complex_field, check_same_shape
from .errors import CapabilityError

#: largest grid edge the direct-summation reference transform accepts
DFT_REFERENCE_MAX = 64


def fft2c(field):
    """Centered orthonormal 2-D DFT of an H x W complex field.

    Input may be complex64 or complex128; the transform runs in double
    precision and the result is cast back to the input's precision class.
    """
    arr = check_complex_field(field)
    k = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(arr), norm="ortho"))
    return _match_precision(k, field)


def ifft2c(kspace):
    """Exact inverse of :func:`fft2c` (same centering, same scaling)."""
    arr = check_complex_field(kspace)
    x = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(arr), norm="ortho"))
    return _match_precision(x, kspace)


def dft2c_reference(field):
    """Centered orthonormal 2-D DFT computed by direct summation.

    Ground-truth oracle for :func:`fft2c`.  With c_N = N//2 the transform is

        F[k, l] = (1/sqrt(H*W)) * sum_{m,n} x[m, n]
                  * exp(-2*pi*i*((k - c_H)*(m - c_H)/H + (l - c_W)*(n - c_W)/W))

    which is exactly fftshift(fft2(ifftshift(x), norm="ortho")).  Cost is
    O(N^2) per axis, so grids are limited to ``DFT_REFERENCE_MAX``.
    """
    arr = check_complex_field(field)
    h, w = arr.shape
    if h > DFT_REFERENCE_MAX or w > DFT_REFERENCE_MAX:
        raise CapabilityError(
            f"reference DFT supports edges up to {DFT_REFERENCE_MAX}, got {arr.shape}"
        )
    eh = _centered_kernel(h)
    ew = _centered_kernel(w)
    out = eh @ arr @ ew.T / np.sqrt(h * w)
    return _match_precision(out, field)


def inner_product(a, b):
    """Complex inner product sum(conj(a) * b) of two same-shape fields."""
    fa = check_complex_field(a, "a")
    fb = check_complex_field(b, "b")
    check_same_shape(fa, fb, "a", "b")
    return complex(np.vdot(fa, fb))


def _centered_kernel(n):
    c = n // 2
    idx = np.arange(n) - c
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n)


def _match_precision(out, like):
    dtype = np.asarray(like).dtype
    if dtype in (np.complex64, np.float32):
        return out.astype(np.complex64)
    return out
