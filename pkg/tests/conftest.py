import numpy as np
import pytest

from cloudmri.raw_format import Acquisition, DatasetHeader, RawDataset


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in getattr(report, "nodeid", ""):
                continue
            name = report.nodeid.split("::")[-1].replace("test_", "", 1)
            lines.append((name, outcome == "passed"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, ok in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}: {name}")


@pytest.fixture
def sample_header():
    return DatasetHeader(
        vendor="TestVendor",
        patient_pseudo_id="pseudo-0001",
        matrix_x=4,
        matrix_y=4,
        coils=1,
        field_tesla=3.0,
        te_ms=12.5,
        tr_ms=500.0,
    )


def random_dataset(rng: np.random.Generator, max_size: int = 12) -> RawDataset:
    """Arbitrary valid dataset: random matrix size, coil count, line subset."""
    matrix_x = int(rng.integers(1, max_size + 1))
    matrix_y = int(rng.integers(1, max_size + 1))
    coils = int(rng.integers(1, 4))
    header = DatasetHeader(
        vendor=str(rng.choice(["GE", "Siemens", "Philips", "United-Imaging"])),
        patient_pseudo_id=f"p-{rng.integers(0, 10**9):09d}",
        matrix_x=matrix_x,
        matrix_y=matrix_y,
        coils=coils,
        field_tesla=float(rng.choice([1.5, 3.0, 7.0])),
        te_ms=float(rng.uniform(1, 100)),
        tr_ms=float(rng.uniform(100, 5000)),
        retention_years=int(rng.integers(30, 60)),
    )
    n_lines = int(rng.integers(0, matrix_y + 1))
    ky_indexes = rng.choice(matrix_y, size=n_lines, replace=False)
    acquisitions = [
        Acquisition(
            flags=int(rng.integers(0, 1 << 16)),
            coil_count=coils,
            num_samples=matrix_x,
            ky_index=int(ky),
            samples=(
                rng.standard_normal(coils * matrix_x)
                + 1j * rng.standard_normal(coils * matrix_x)
            ).astype(np.complex64),
        )
        for ky in sorted(ky_indexes)
    ]
    return RawDataset(header=header, acquisitions=acquisitions)
