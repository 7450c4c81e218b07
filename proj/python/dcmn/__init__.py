"""Room-level localisation from wearable RSSI and accelerometer data."""

from ._dcmn import (
    ConfigError,
    DimensionError,
    DomainError,
    __version__,
    crf_log_partition,
    crf_nll,
    crf_viterbi,
    daily_transitions,
    huber,
    pair_durations,
    run_cli,
    simulate_csv,
)

ROOMS = ("kitchen", "living_room", "dining_room", "hallway", "stairs", "porch")


def main(argv=None):
    import sys

    return run_cli(list(sys.argv[1:] if argv is None else argv))
