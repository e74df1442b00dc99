"""Scanner-free data source: Shepp-Logan phantoms, k-space simulation, and
line-undersampling masks.

Conventions used across the pipeline:

* Images are square 2D float arrays with values in [0, 1].
* K-space grids are 2D complex arrays in DC-centered order: row ``n // 2`` is
  the zero-frequency (ky = 0) line, so the "centermost" mask lines are the low
  frequencies. Rows are ky, columns kx.
* The DFT is unitary in both directions, which makes the data-fidelity
  gradient in the reconstruction engine have Lipschitz constant exactly 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from cloudmri.raw_format import Acquisition, DatasetHeader, RawDataset


class AcquisitionError(Exception):
    pass


class SizeTooSmall(AcquisitionError):
    pass


class NonSquareImage(AcquisitionError):
    pass


class InfeasibleBudget(AcquisitionError):
    pass


# Shepp-Logan ellipses (modified contrast variant): intensity, semi-axes a/b,
# center x0/y0, rotation in degrees.
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)

PATTERNS = ("full", "uniform_lines", "random_lines_center")


@dataclass
class SamplingMask:
    """Which ky lines were acquired. ``sampled[i]`` is line i of a DC-centered
    grid; serializes to the job-spec JSON {pattern, n, acceleration,
    center_fraction, seed}."""

    pattern_name: str
    acceleration: float
    center_fraction: float
    seed: int
    sampled: np.ndarray

    @property
    def height(self) -> int:
        return len(self.sampled)

    @property
    def n_sampled(self) -> int:
        return int(np.count_nonzero(self.sampled))

    def spec_dict(self) -> dict:
        return {
            "pattern": self.pattern_name,
            "n": self.height,
            "acceleration": self.acceleration,
            "center_fraction": self.center_fraction,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.spec_dict())


def mask_from_spec(spec: dict) -> SamplingMask:
    return make_mask(
        pattern=spec["pattern"],
        n=int(spec["n"]),
        acceleration=float(spec.get("acceleration", 1.0)),
        center_fraction=float(spec.get("center_fraction", 0.0)),
        seed=int(spec.get("seed", 0)),
    )


def generate_phantom(n: int) -> np.ndarray:
    """n-by-n Shepp-Logan phantom, intensities clipped to [0, 1].

    Pixel (row r, col c) samples the continuous phantom at
    x = (c - (n-1)/2) / ((n-1)/2), y = ((n-1)/2 - r) / ((n-1)/2), so row 0 is
    the top of the head. Deterministic in n.
    """
    if n < 8:
        raise SizeTooSmall(f"phantom size must be >= 8, got {n}")
    half = (n - 1) / 2.0
    coords = (np.arange(n) - half) / half
    x = coords[np.newaxis, :]
    y = -coords[:, np.newaxis]
    img = np.zeros((n, n))
    for intensity, a, b, x0, y0, phi_deg in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(phi_deg)
        xr = (x - x0) * np.cos(phi) + (y - y0) * np.sin(phi)
        yr = (y - y0) * np.cos(phi) - (x - x0) * np.sin(phi)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += intensity
    return np.clip(img, 0.0, 1.0)


def forward_kspace(img: np.ndarray, noise_sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Unitary 2D DFT of a square image, DC-centered, plus optional complex
    Gaussian noise of per-component standard deviation ``noise_sigma``."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise NonSquareImage(f"expected a square image, got shape {img.shape}")
    k = unitary_dft2(img.astype(np.complex128))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        k = k + noise_sigma * (rng.standard_normal(k.shape) + 1j * rng.standard_normal(k.shape))
    return k


def unitary_dft2(x: np.ndarray) -> np.ndarray:
    n_pixels = x.shape[0] * x.shape[1]
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x))) / np.sqrt(n_pixels)


def unitary_idft2(k: np.ndarray) -> np.ndarray:
    n_pixels = k.shape[0] * k.shape[1]
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k))) * np.sqrt(n_pixels)


def center_line_range(n: int, center_fraction: float) -> tuple[int, int]:
    """[start, stop) row range of the round(c*n) centermost lines."""
    n_center = int(round(center_fraction * n))
    start = (n - n_center) // 2
    return start, start + n_center


def make_mask(
    pattern: str,
    n: int,
    acceleration: float = 1.0,
    center_fraction: float = 0.0,
    seed: int = 0,
) -> SamplingMask:
    """Build a ky-line sampling mask.

    full: every line. uniform_lines: every round(acceleration)-th line
    starting at 0. random_lines_center: the round(center_fraction*n)
    centermost lines plus uniformly random extra lines (deterministic in
    seed) until round(n / acceleration) lines total.
    """
    if pattern not in PATTERNS:
        raise AcquisitionError(f"unknown pattern {pattern!r}, expected one of {PATTERNS}")
    if n < 1:
        raise AcquisitionError("mask needs at least one line")
    if acceleration < 1:
        raise AcquisitionError(f"acceleration must be >= 1, got {acceleration}")
    if not 0 <= center_fraction <= 1:
        raise AcquisitionError(f"center_fraction must be in [0, 1], got {center_fraction}")

    sampled = np.zeros(n, dtype=bool)
    if pattern == "full":
        sampled[:] = True
    elif pattern == "uniform_lines":
        sampled[:: int(round(acceleration))] = True
    else:
        budget = int(round(n / acceleration))
        start, stop = center_line_range(n, center_fraction)
        n_center = stop - start
        if budget < n_center:
            raise InfeasibleBudget(
                f"budget round({n}/{acceleration}) = {budget} cannot cover "
                f"{n_center} center lines"
            )
        sampled[start:stop] = True
        extra = budget - n_center
        outside = np.flatnonzero(~sampled)
        if extra > len(outside):
            raise InfeasibleBudget("budget exceeds available lines")
        if extra:
            rng = np.random.default_rng(seed)
            sampled[rng.choice(outside, size=extra, replace=False)] = True
    return SamplingMask(
        pattern_name=pattern,
        acceleration=float(acceleration),
        center_fraction=float(center_fraction),
        seed=int(seed),
        sampled=sampled,
    )


def apply_mask(kspace: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Zero the unsampled ky lines (rows)."""
    if kspace.shape[0] != mask.height:
        raise AcquisitionError(
            f"mask height {mask.height} != k-space height {kspace.shape[0]}"
        )
    out = np.array(kspace, dtype=np.complex128, copy=True)
    out[~mask.sampled, :] = 0
    return out


# Vendor string stamped on simulator output; the gateway uses it to recognize
# datasets with a recomputable ground-truth phantom.
SIM_VENDOR = "CloudMRI-Sim"


def simulated_dataset(
    n: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
    pseudo_id: str | None = None,
) -> RawDataset:
    """Fully sampled single-coil phantom scan packed as a raw dataset.

    Samples are stored as complex64 per the container format; undersampling
    is applied later, at reconstruction time, via a mask spec.
    """
    img = generate_phantom(n)
    k = forward_kspace(img, noise_sigma=noise_sigma, seed=seed)
    header = DatasetHeader(
        vendor=SIM_VENDOR,
        patient_pseudo_id=pseudo_id or f"phantom-{n}-{seed}",
        matrix_x=n,
        matrix_y=n,
        coils=1,
        field_tesla=3.0,
        te_ms=10.0,
        tr_ms=500.0,
    )
    acquisitions = [
        Acquisition(
            flags=0,
            coil_count=1,
            num_samples=n,
            ky_index=ky,
            samples=k[ky].astype(np.complex64),
        )
        for ky in range(n)
    ]
    return RawDataset(header=header, acquisitions=acquisitions)


def kspace_from_dataset(dataset: RawDataset, coil: int = 0) -> np.ndarray:
    """Assemble the (matrix_y, matrix_x) grid for one coil; ky lines absent
    from the dataset stay zero."""
    header = dataset.header
    if not 0 <= coil < header.coils:
        raise AcquisitionError(f"coil {coil} outside [0, {header.coils})")
    grid = np.zeros((header.matrix_y, header.matrix_x), dtype=np.complex128)
    for acq in dataset.acquisitions:
        row = acq.samples[coil * acq.num_samples : (coil + 1) * acq.num_samples]
        grid[acq.ky_index, :] = row.astype(np.complex128)
    return grid
