"""Instantiate the parameterized channel families as numeric fixtures.

    python scripts/generate_fixtures.py --out kraus_spectra/fixtures
    python scripts/generate_fixtures.py --phi 0.5 1.5 --out /tmp/fixtures
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Iterable, List

import structlog

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from kraus_spectra.cli import write_atomic  # noqa: E402
from kraus_spectra.src.families import (  # noqa: E402
    amplitude_damping_channel,
    depolarizing_channel,
    example1_kraus,
    example2_kraus,
    identity_channel,
    two_generator_kraus,
)
from kraus_spectra.src.logging_config import configure_logging  # noqa: E402
from kraus_spectra.src.schemas import ChannelFixture  # noqa: E402

DEFAULT_PHIS = (math.pi / 4, math.pi / 3, 1.0, 2.0)

logger = structlog.get_logger(__name__)


def family_fixtures(phis: Iterable[float]) -> List[ChannelFixture]:
    fixtures = []
    for phi in phis:
        fixtures.append(
            ChannelFixture.from_matrices(
                f"example1_phi_{phi!r}",
                example1_kraus(phi),
                {"family": "example1", "phi": phi},
            )
        )
        # Stored as printed; the loader applies the normalization.
        fixtures.append(
            ChannelFixture.from_matrices(
                f"example2_phi_{phi!r}",
                example2_kraus(phi, normalize=False),
                {"family": "example2", "phi": phi},
                normalization="trace_preserving",
            )
        )
    return fixtures


def standard_fixtures() -> List[ChannelFixture]:
    return [
        ChannelFixture.from_matrices(
            "two_generator_qutrit",
            two_generator_kraus(),
            {"family": "two_generator_qutrit", "algebra_dimension": 5},
        ),
        ChannelFixture.from_matrices(
            "identity_channel", identity_channel(2), {"family": "identity"}
        ),
        ChannelFixture.from_matrices(
            "qubit_depolarizing_p0.5",
            depolarizing_channel(0.5),
            {"family": "depolarizing", "p": 0.5},
        ),
        ChannelFixture.from_matrices(
            "amplitude_damping_g0.5",
            amplitude_damping_channel(0.5),
            {"family": "amplitude_damping", "gamma": 0.5},
        ),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--phi", type=float, nargs="*", default=None,
                        help="Family parameters (default pi/4 pi/3 1.0 2.0)")
    parser.add_argument("--out", type=Path,
                        default=ROOT / "kraus_spectra" / "fixtures")
    parser.add_argument("--families-only", action="store_true")
    args = parser.parse_args(argv)
    configure_logging("INFO")

    phis = DEFAULT_PHIS if args.phi is None else args.phi
    fixtures = family_fixtures(phis)
    if not args.families_only:
        fixtures += standard_fixtures()
    for fixture in fixtures:
        path = args.out / f"{fixture.name}.json"
        write_atomic(path, fixture.model_dump_json(indent=2) + "\n")
        logger.info("Wrote fixture", path=str(path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
