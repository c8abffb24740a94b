"""Discrete Fourier/Hartley transforms and parameter-free 2D token mixing.

All transforms use the unnormalized forward convention

    y_k = sum_n x_n * exp(-2j*pi*n*k/N)        (Fourier)
    y_k = sum_n x_n * cas(2*pi*n*k/N)          (Hartley, cas(t) = cos(t) + sin(t))

so the Hartley transform is an involution up to a factor N, and any global
scale difference with other conventions is absorbed downstream by layer
normalization. ``dft_naive`` and ``dht_naive`` evaluate the kernels directly
in O(N^2) and serve as oracles for the fast paths. The fast paths use an
iterative radix-2 decimation-in-time FFT when N is a power of two and fall
back to the direct kernel otherwise; model dimensions that matter for speed
(sequence lengths) are powers of two.

The 2D mixing used by the encoders applies one 1D transform along the hidden
axis, then one along the sequence axis, and propagates a real-valued
projection of the complex result. Five projections are supported, selected by
:class:`MixingKind`. All of them map real input to real output and carry no
parameters. Hartley mixing is Re - Im of the 2D DFT, which equals the true 2D
cas-kernel transform (cas(a+b) cross terms included); it is deliberately not
the separable product of two 1D Hartley transforms, which is a different map.

Everything here is a pure function of its inputs; float64 throughout.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

from .errors import ShapeError

__all__ = [
    "MixingKind",
    "dft_naive",
    "fft",
    "dht_naive",
    "fht",
    "mix2d",
    "mix2d_vjp",
]


class MixingKind(enum.Enum):
    """Real-valued projection applied to the 2D spectrum during mixing."""

    FOURIER_REAL = "fourier-real"   # Re(F)
    HARTLEY = "hartley"             # Re(F) - Im(F)
    FOURIER_IMAG = "fourier-imag"   # Im(F)
    MODULUS = "modulus"             # |F|
    PHASE = "phase"                 # atan2(Im F, Re F)

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def from_label(cls, label: str) -> "MixingKind":
        for kind in cls:
            if kind.value == label:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown mixing kind {label!r}; expected one of: {valid}")

    @property
    def is_linear(self) -> bool:
        """True for the kinds whose mixing map is linear in the input."""
        return self in (MixingKind.FOURIER_REAL, MixingKind.HARTLEY, MixingKind.FOURIER_IMAG)


def _check_length(x: np.ndarray) -> None:
    if x.shape[-1] < 1:
        raise ShapeError(f"transform length must be >= 1, got shape {x.shape}")


@lru_cache(maxsize=8)
def _dft_matrix(n: int) -> np.ndarray:
    """Direct DFT kernel, W[k, m] = exp(-2j*pi*k*m/n). Symmetric."""
    k = np.arange(n)
    return np.exp((-2j * np.pi / n) * np.outer(k, k))


@lru_cache(maxsize=8)
def _cas_matrix(n: int) -> np.ndarray:
    """Direct DHT kernel, C[k, m] = cas(2*pi*k*m/n). Symmetric."""
    k = np.arange(n)
    theta = (2.0 * np.pi / n) * np.outer(k, k)
    return np.cos(theta) + np.sin(theta)


@lru_cache(maxsize=16)
def _fft_plan(n: int):
    """Bit-reversal permutation and per-stage twiddles for power-of-two n."""
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    twiddles = []
    m = 2
    while m <= n:
        twiddles.append(np.exp((-2j * np.pi / m) * np.arange(m // 2)))
        m *= 2
    return rev, tuple(twiddles)


def _fft_pow2_last(x: np.ndarray) -> np.ndarray:
    """Radix-2 DIT FFT along the last axis; last extent must be a power of two."""
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    rev, twiddles = _fft_plan(n)
    y = np.ascontiguousarray(x[..., rev])
    flat = y.reshape(-1, n)
    for w in twiddles:
        m = 2 * w.shape[0]
        v = flat.reshape(flat.shape[0], n // m, m)
        even = v[..., : m // 2]
        odd = v[..., m // 2:]
        t = odd * w
        # odd slot first: it reads even's pre-update values
        np.subtract(even, t, out=odd)
        np.add(even, t, out=even)
    return y


def _fft_last(x: np.ndarray) -> np.ndarray:
    """Unnormalized DFT along the last axis, batched over leading axes."""
    n = x.shape[-1]
    if n & (n - 1) == 0:
        return _fft_pow2_last(x)
    return x @ _dft_matrix(n)


def dft_naive(x) -> np.ndarray:
    """Direct O(N^2) DFT, y_k = sum_n x_n exp(-2j*pi*n*k/N).

    Oracle for :func:`fft`. Accepts real or complex input; returns complex128.
    """
    x = np.asarray(x, dtype=np.complex128)
    _check_length(x)
    return x @ _dft_matrix(x.shape[-1])


def fft(x) -> np.ndarray:
    """Fast DFT with the same value contract as :func:`dft_naive`.

    Radix-2 iterative decimation-in-time for power-of-two lengths, direct
    kernel evaluation otherwise.
    """
    x = np.asarray(x, dtype=np.complex128)
    _check_length(x)
    return _fft_last(x)


def dht_naive(x) -> np.ndarray:
    """Direct O(N^2) discrete Hartley transform, y_k = sum_n x_n cas(2*pi*n*k/N)."""
    x = np.asarray(x, dtype=np.float64)
    _check_length(x)
    return x @ _cas_matrix(x.shape[-1])


def fht(x) -> np.ndarray:
    """Fast Hartley transform of a real sequence, computed as Re(fft) - Im(fft)."""
    x = np.asarray(x, dtype=np.float64)
    _check_length(x)
    f = _fft_last(x.astype(np.complex128))
    return f.real - f.imag


def _dft2(x: np.ndarray) -> np.ndarray:
    """Unnormalized 2D DFT of an L x H matrix: hidden axis first, then sequence."""
    f = _fft_last(np.asarray(x, dtype=np.complex128))
    return np.ascontiguousarray(_fft_last(np.ascontiguousarray(f.T)).T)


def _check_matrix(x: np.ndarray) -> None:
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeError(f"mixing expects a non-empty 2D matrix, got shape {x.shape}")


def mix2d(x, kind: MixingKind) -> np.ndarray:
    """Parameter-free token mixing: real projection of the 2D spectrum of x.

    x is (sequence length, hidden dim) real; the result has the same shape.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_matrix(x)
    f = _dft2(x)
    if kind is MixingKind.FOURIER_REAL:
        return np.ascontiguousarray(f.real)
    if kind is MixingKind.HARTLEY:
        return f.real - f.imag
    if kind is MixingKind.FOURIER_IMAG:
        return np.ascontiguousarray(f.imag)
    if kind is MixingKind.MODULUS:
        return np.abs(f)
    if kind is MixingKind.PHASE:
        return np.arctan2(f.imag, f.real)
    raise ValueError(f"unhandled mixing kind {kind!r}")


def mix2d_vjp(kind: MixingKind, x, grad_out) -> np.ndarray:
    """Vector-Jacobian product of :func:`mix2d` at x applied to grad_out.

    The linear kinds have kernels cos/cas/-sin of 2*pi*(n*k/L + m*h/H), which
    are symmetric under swapping input and output indices, so their VJP is the
    forward map applied to the cotangent and x is not touched. Modulus and
    Phase chain the elementwise derivative through the transform adjoint; the
    Modulus (and Phase) derivative at a zero spectrum element is defined as 0.
    """
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if kind.is_linear:
        return mix2d(grad_out, kind)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != grad_out.shape:
        raise ShapeError(f"x shape {x.shape} != grad_out shape {grad_out.shape}")
    _check_matrix(x)
    f = _dft2(x)
    re, im = f.real, f.imag
    if kind is MixingKind.MODULUS:
        r = np.abs(f)
        safe = np.where(r > 0.0, r, 1.0)
        u = np.where(r > 0.0, grad_out * re / safe, 0.0)
        v = np.where(r > 0.0, grad_out * im / safe, 0.0)
    elif kind is MixingKind.PHASE:
        rho2 = re * re + im * im
        safe = np.where(rho2 > 0.0, rho2, 1.0)
        u = np.where(rho2 > 0.0, -grad_out * im / safe, 0.0)
        v = np.where(rho2 > 0.0, grad_out * re / safe, 0.0)
    else:
        raise ValueError(f"unhandled mixing kind {kind!r}")
    # sum_kh u*cos(theta) - v*sin(theta) == Re(DFT2(u - i v)) by kernel symmetry
    return np.ascontiguousarray(_dft2(u - 1j * v).real)
