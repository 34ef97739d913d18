"""Quality indexes between a reference cube and a reconstruction.

PSNR uses peak 1 over the whole cube by default (band-averaged variant by
flag) and caps identical inputs at 100 dB. SSIM is the standard
single-scale index per band (11x11 Gaussian window, sigma 1.5, K1=0.01,
K2=0.03, dynamic range 1), averaged over bands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import DataError, DimensionError, UsageError

__all__ = ["QualityReport", "psnr", "ssim", "rmse", "ergas", "evaluate"]

PSNR_CAP_DB = 100.0

_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssim: float
    ergas: float
    rmse: float
    band_psnr: tuple[float, ...]

    def csv_row(self) -> str:
        return f"{self.psnr:.6f},{self.ssim:.6f},{self.ergas:.6f},{self.rmse:.8f}"

    def text(self) -> str:
        return (
            f"PSNR  {self.psnr:8.3f} dB\n"
            f"SSIM  {self.ssim:8.5f}\n"
            f"ERGAS {self.ergas:8.4f}\n"
            f"RMSE  {self.rmse:10.6f}"
        )


def _check_pair(ref: np.ndarray, est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch: {ref.shape} vs {est.shape}")
    return ref, est


def _mse_to_db(mse: float) -> float:
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def _cube_mse(ref: np.ndarray, est: np.ndarray) -> float:
    # exact summation over per-band sums keeps the value independent of
    # band ordering
    sse = math.fsum(
        float(np.sum((ref[:, :, b] - est[:, :, b]) ** 2)) for b in range(ref.shape[2])
    )
    return sse / ref.size


def psnr(ref: np.ndarray, est: np.ndarray, band_average: bool = False) -> float:
    """Peak signal-to-noise ratio in dB with peak 1."""
    ref, est = _check_pair(ref, est)
    if band_average:
        return float(np.mean(band_psnr(ref, est)))
    return _mse_to_db(_cube_mse(ref, est))


def band_psnr(ref: np.ndarray, est: np.ndarray) -> list[float]:
    ref, est = _check_pair(ref, est)
    return [
        _mse_to_db(float(np.mean((ref[:, :, b] - est[:, :, b]) ** 2)))
        for b in range(ref.shape[2])
    ]


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _ssim_band(x: np.ndarray, y: np.ndarray, kernel: np.ndarray) -> float:
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    mu_x = convolve2d(x, kernel, mode="valid")
    mu_y = convolve2d(y, kernel, mode="valid")
    var_x = convolve2d(x * x, kernel, mode="valid") - mu_x * mu_x
    var_y = convolve2d(y * y, kernel, mode="valid") - mu_y * mu_y
    cov = convolve2d(x * y, kernel, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(ref: np.ndarray, est: np.ndarray) -> float:
    """Mean over bands of the single-scale structural similarity index."""
    ref, est = _check_pair(ref, est)
    if min(ref.shape[0], ref.shape[1]) < _SSIM_WIN:
        raise UsageError(
            f"bands must be at least {_SSIM_WIN}x{_SSIM_WIN} for SSIM"
        )
    kernel = _gaussian_kernel(_SSIM_WIN, _SSIM_SIGMA)
    vals = [
        _ssim_band(ref[:, :, b], est[:, :, b], kernel) for b in range(ref.shape[2])
    ]
    return float(np.mean(vals))


def rmse(ref: np.ndarray, est: np.ndarray) -> float:
    """Root mean squared voxel error."""
    ref, est = _check_pair(ref, est)
    return float(np.sqrt(_cube_mse(ref, est)))


def ergas(ref: np.ndarray, est: np.ndarray, ratio: float = 1.0) -> float:
    """Relative dimensionless global synthesis error over bands."""
    ref, est = _check_pair(ref, est)
    terms = []
    for b in range(ref.shape[2]):
        mean_b = float(np.mean(ref[:, :, b]))
        if mean_b == 0.0:
            raise DataError(f"band {b} of the reference has zero mean")
        rmse_b = float(np.sqrt(np.mean((ref[:, :, b] - est[:, :, b]) ** 2)))
        terms.append((rmse_b / mean_b) ** 2)
    return float(100.0 * ratio * np.sqrt(np.mean(terms)))


def evaluate(ref: np.ndarray, est: np.ndarray) -> QualityReport:
    """All four indexes plus the per-band PSNR list."""
    return QualityReport(
        psnr=psnr(ref, est),
        ssim=ssim(ref, est),
        ergas=ergas(ref, est),
        rmse=rmse(ref, est),
        band_psnr=tuple(band_psnr(ref, est)),
    )
