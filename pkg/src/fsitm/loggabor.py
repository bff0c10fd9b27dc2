"""Log-Gabor quadrature filter bank and locally weighted mean phase angle.

Filters live in the frequency domain on the unshifted FFT grid of the image.
Each transfer function is real, non-negative and one-sided in orientation, so
the inverse FFT of ``FFT(plane) * filter`` is a complex response whose real
part is the even-symmetric (line) response and whose imaginary part is the
odd-symmetric (edge) response.

Application is circular convolution; no padding or windowing is applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .errors import BankTooLargeForImage, DimensionMismatch, InvalidParameter
from .image_io import check_plane

LOWPASS_CUTOFF = 0.45
LOWPASS_HALF_WIDTH = 0.05

# Summed responses smaller than this fraction of the plane's peak-to-peak
# range are FFT round-off (or exact cancellations) and are set to zero, so
# symmetric structures binarize the same way for every offset and scale.
RESPONSE_FLOOR = 1e-10


@dataclass(frozen=True)
class FilterParams:
    """Log-Gabor bank parameters.

    nscale : number of wavelet scales
    min_wavelength : wavelength of the smallest-scale filter, in pixels
    mult : ratio between successive filter wavelengths
    norient : number of filter orientations, spread over [0, pi)
    sigma_on_f : radial bandwidth, ratio of the log-Gaussian std to the centre frequency
    d_theta_sigma : orientation spacing divided by the angular Gaussian std
    """

    nscale: int = 2
    min_wavelength: float = 2.0
    mult: float = 2.0
    norient: int = 6
    sigma_on_f: float = 0.55
    d_theta_sigma: float = 1.2

    def __post_init__(self):
        if int(self.nscale) != self.nscale or self.nscale < 1:
            raise InvalidParameter(f"nscale must be an integer >= 1, got {self.nscale}")
        if int(self.norient) != self.norient or self.norient < 1:
            raise InvalidParameter(f"norient must be an integer >= 1, got {self.norient}")
        if not self.min_wavelength >= 2:
            raise InvalidParameter(f"min_wavelength must be >= 2, got {self.min_wavelength}")
        if not self.mult > 1:
            raise InvalidParameter(f"mult must be > 1, got {self.mult}")
        if not 0 < self.sigma_on_f < 1:
            raise InvalidParameter(f"sigma_on_f must lie in (0, 1), got {self.sigma_on_f}")
        if not self.d_theta_sigma > 0:
            raise InvalidParameter(f"d_theta_sigma must be > 0, got {self.d_theta_sigma}")

    def wavelengths(self) -> list[float]:
        return [self.min_wavelength * self.mult ** s for s in range(self.nscale)]

    @property
    def theta_sigma(self) -> float:
        return math.pi / self.norient / self.d_theta_sigma

    def orientations(self) -> list[float]:
        return [o * math.pi / self.norient for o in range(self.norient)]


class QuadratureResponse(NamedTuple):
    even: np.ndarray
    odd: np.ndarray
    scale: int
    orientation: int


def radial_profile(freq, wavelength: float, sigma_on_f: float) -> np.ndarray:
    """Log-normal radial transfer ``exp(-ln(f/f0)^2 / (2 ln(sigma_on_f)^2))``, zero at f = 0."""
    freq = np.asarray(freq, dtype=np.float64)
    f0 = 1.0 / wavelength
    out = np.zeros_like(freq)
    nz = freq > 0
    out[nz] = np.exp(-np.log(freq[nz] / f0) ** 2 / (2.0 * math.log(sigma_on_f) ** 2))
    return out


def raised_cosine_lowpass(radius) -> np.ndarray:
    """1 below ``cutoff - w``, 0 above ``cutoff + w``, half-cosine in between (w = 0.05)."""
    radius = np.asarray(radius, dtype=np.float64)
    lo = LOWPASS_CUTOFF - LOWPASS_HALF_WIDTH
    t = np.clip((radius - lo) / (2 * LOWPASS_HALF_WIDTH), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * t))


def frequency_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Radius (cycles/pixel) and polar angle of every FFT bin, unshifted layout.

    The angle uses ``-fy`` so that positive angles run anticlockwise in image
    coordinates (rows grow downwards).
    """
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    radius = np.sqrt(fx ** 2 + fy ** 2)
    theta = np.arctan2(-fy, fx)
    return radius, np.broadcast_to(theta, radius.shape)


@dataclass(frozen=True, eq=False)
class LogGaborBank:
    """Frequency-domain filters for every (scale, orientation) pair.

    The transfer function of pair ``(s, o)`` is ``radial[s] * angular[o]``;
    ``radial`` already includes the lowpass and the zeroed DC bin. The two
    factors are stored separately to keep large banks compact.
    """

    params: FilterParams
    width: int
    height: int
    radial: np.ndarray
    angular: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def transfer(self, scale: int, orientation: int) -> np.ndarray:
        return self.radial[scale] * self.angular[orientation]

    @property
    def filters(self) -> np.ndarray:
        """All transfer functions as a ``(nscale, norient, height, width)`` array."""
        return self.radial[:, None] * self.angular[None, :]

    @cached_property
    def summed_transfer(self) -> np.ndarray:
        """Sum of every transfer function, accumulated in fixed (scale, orientation) order."""
        total = np.zeros(self.shape)
        for s in range(self.params.nscale):
            for o in range(self.params.norient):
                total += self.transfer(s, o)
        total.setflags(write=False)
        return total


def build_bank(params: FilterParams, width: int, height: int) -> LogGaborBank:
    """Construct the log-Gabor bank for a ``height x width`` FFT grid.

    Raises
    ------
    BankTooLargeForImage
        If the largest filter wavelength exceeds the smaller image side.
    """
    width, height = int(width), int(height)
    if min(width, height) < params.min_wavelength:
        raise BankTooLargeForImage(
            f"image {width}x{height} is smaller than min_wavelength {params.min_wavelength}"
        )
    longest = params.wavelengths()[-1]
    if longest > min(width, height):
        raise BankTooLargeForImage(
            f"largest filter wavelength {longest:g} exceeds image side {min(width, height)}"
        )

    radius, theta = frequency_grid(height, width)
    lowpass = raised_cosine_lowpass(radius)
    radial = np.empty((params.nscale, height, width))
    for s, wavelength in enumerate(params.wavelengths()):
        radial[s] = radial_profile(radius, wavelength, params.sigma_on_f) * lowpass
        radial[s, 0, 0] = 0.0

    sin_t, cos_t = np.sin(theta), np.cos(theta)
    angular = np.empty((params.norient, height, width))
    for o, angle in enumerate(params.orientations()):
        # wrap-safe angular distance from the filter orientation
        ds = sin_t * math.cos(angle) - cos_t * math.sin(angle)
        dc = cos_t * math.cos(angle) + sin_t * math.sin(angle)
        dtheta = np.abs(np.arctan2(ds, dc))
        angular[o] = np.exp(-dtheta ** 2 / (2 * params.theta_sigma ** 2))

    radial.setflags(write=False)
    angular.setflags(write=False)
    return LogGaborBank(params, width, height, radial, angular)


@lru_cache(maxsize=4)
def cached_bank(params: FilterParams, width: int, height: int) -> LogGaborBank:
    return build_bank(params, width, height)


def apply_bank(plane, bank: LogGaborBank) -> list[QuadratureResponse]:
    """Filter ``plane`` with every pair in ``bank``, scale-major order."""
    plane = check_plane(plane)
    if plane.shape != bank.shape:
        raise DimensionMismatch(f"plane shape {plane.shape} != bank shape {bank.shape}")
    spectrum = np.fft.fft2(plane)
    out = []
    for s in range(bank.params.nscale):
        for o in range(bank.params.norient):
            resp = np.fft.ifft2(spectrum * bank.transfer(s, o))
            out.append(QuadratureResponse(resp.real.copy(), resp.imag.copy(), s, o))
    return out


def local_phase(resp: QuadratureResponse | tuple) -> np.ndarray:
    """Phase ``arctan2(odd, even)`` of one quadrature response, in (-pi, pi].

    ``even = odd = 0`` maps to 0.
    """
    even, odd = resp[0], resp[1]
    return _atan2(np.asarray(odd, dtype=np.float64), np.asarray(even, dtype=np.float64))


def _atan2(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.arctan2(num, den)
    # arctan2(-0.0, negative) gives -pi; keep the half-open range
    out[out == -np.pi] = np.pi
    return out


def normalize_plane(plane: np.ndarray) -> np.ndarray:
    """Remove the mean and divide by the peak-to-peak range.

    Filter responses are unaffected (every filter has zero DC gain), but the
    round-off floor below becomes independent of the plane's offset and scale.
    A constant plane maps to zeros.
    """
    span = np.ptp(plane)
    if span == 0:
        return np.zeros_like(plane)
    return (plane - plane.mean()) / span


def summed_response(plane, params: FilterParams) -> tuple[np.ndarray, np.ndarray]:
    """Sums of even and odd responses over all scales and orientations.

    By linearity this is one inverse FFT against the summed transfer
    function. The plane is normalized first, and sums whose magnitude is
    below :data:`RESPONSE_FLOOR` are set to exactly zero.
    """
    plane = check_plane(plane)
    bank = cached_bank(params, plane.shape[1], plane.shape[0])
    resp = np.fft.ifft2(np.fft.fft2(normalize_plane(plane)) * bank.summed_transfer)
    even, odd = resp.real.copy(), resp.imag.copy()
    even[np.abs(even) <= RESPONSE_FLOOR] = 0.0
    odd[np.abs(odd) <= RESPONSE_FLOOR] = 0.0
    return even, odd


def phase_from_sums(sum_even: np.ndarray, sum_odd: np.ndarray) -> np.ndarray:
    """``arctan2(sum_even, |sum_odd|)``, in [-pi/2, pi/2].

    Taking the odd magnitude folds rising and falling edges onto the same
    class: bright lines go to +pi/2, dark lines to -pi/2, steps to 0. The
    sign of the result is the sign of ``sum_even``.
    """
    return np.arctan2(sum_even, np.abs(sum_odd))


def lwmpa(plane, params: FilterParams) -> np.ndarray:
    """Locally weighted mean phase angle of ``plane``.

    Even and odd responses are summed over all scales and orientations of the
    bank built from ``params`` and combined by :func:`phase_from_sums`.
    Positive rescaling of ``plane`` or adding a constant changes the result
    only by round-off, and never changes its sign; a constant plane maps to
    all zeros.
    """
    even, odd = summed_response(plane, params)
    return phase_from_sums(even, odd)
