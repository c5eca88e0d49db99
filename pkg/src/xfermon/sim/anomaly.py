"""Anomaly taxonomy, severity menus, and severity calibration.

Nine classes form the classification label space (normal plus eight faults).
Four more disturbance types (corrupt, reorder, duplicate, jitter) exist only
to reproduce throughput-impact sweeps; they never appear as classifier
output.

Severity semantics per class:
  - network loss / corrupt: drop probability per packet
  - reorder / duplicate:    perturbation probability per packet
  - jitter:                 delay standard deviation, microseconds
  - network congestion:     number of competing bulk WAN flows
  - I/O congestion classes: number of competitor processes; each process
                            demands ``intensity`` of the contended resource's
                            capacity
  - TCP buffer misconfig:   the misconfigured endpoint buffer, bytes
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .testbed import TestbedSpec

MATHIS_C = 1.22


class AnomalyClass(enum.Enum):
    NORMAL = "normal"
    RECEIVER_OST_WRITE_CONGESTION = "receiver_ost_write_congestion"
    RECEIVER_CLIENT_WRITE_CONGESTION = "receiver_client_write_congestion"
    SENDER_OST_READ_CONGESTION = "sender_ost_read_congestion"
    SENDER_CLIENT_READ_CONGESTION = "sender_client_read_congestion"
    SENDER_TCP_BUFFER_MISCONFIG = "sender_tcp_buffer_misconfig"
    RECEIVER_TCP_BUFFER_MISCONFIG = "receiver_tcp_buffer_misconfig"
    NETWORK_LOSS = "network_loss"
    NETWORK_CONGESTION = "network_congestion"
    # Simulation-only disturbances, outside the label space.
    CORRUPT = "corrupt"
    REORDER = "reorder"
    DUPLICATE = "duplicate"
    JITTER = "jitter"


LABEL_CLASSES: tuple[AnomalyClass, ...] = (
    AnomalyClass.NORMAL,
    AnomalyClass.RECEIVER_OST_WRITE_CONGESTION,
    AnomalyClass.RECEIVER_CLIENT_WRITE_CONGESTION,
    AnomalyClass.SENDER_OST_READ_CONGESTION,
    AnomalyClass.SENDER_CLIENT_READ_CONGESTION,
    AnomalyClass.SENDER_TCP_BUFFER_MISCONFIG,
    AnomalyClass.RECEIVER_TCP_BUFFER_MISCONFIG,
    AnomalyClass.NETWORK_LOSS,
    AnomalyClass.NETWORK_CONGESTION,
)

SIM_ONLY_CLASSES: tuple[AnomalyClass, ...] = (
    AnomalyClass.CORRUPT,
    AnomalyClass.REORDER,
    AnomalyClass.DUPLICATE,
    AnomalyClass.JITTER,
)

IO_CLASSES: tuple[AnomalyClass, ...] = (
    AnomalyClass.RECEIVER_OST_WRITE_CONGESTION,
    AnomalyClass.RECEIVER_CLIENT_WRITE_CONGESTION,
    AnomalyClass.SENDER_OST_READ_CONGESTION,
    AnomalyClass.SENDER_CLIENT_READ_CONGESTION,
)

BUFFER_CLASSES: tuple[AnomalyClass, ...] = (
    AnomalyClass.SENDER_TCP_BUFFER_MISCONFIG,
    AnomalyClass.RECEIVER_TCP_BUFFER_MISCONFIG,
)

# Fixed-rate sweep menus used by the severity-impact reproduction. Loss and
# corrupt run at 0.05%-1%, reorder and duplicate at 15%-45%; jitter levels
# are expressed as fractions of the base RTT, congestion as flow counts.
SWEEP_MENUS: dict[AnomalyClass, tuple[float, ...]] = {
    AnomalyClass.NETWORK_LOSS: (0.0005, 0.001, 0.005, 0.01),
    AnomalyClass.CORRUPT: (0.0005, 0.001, 0.005, 0.01),
    AnomalyClass.REORDER: (0.15, 0.25, 0.35, 0.45),
    AnomalyClass.DUPLICATE: (0.15, 0.25, 0.35, 0.45),
    AnomalyClass.JITTER: (0.25, 0.5, 1.0, 2.0),  # x base RTT
    AnomalyClass.NETWORK_CONGESTION: (1.0, 2.0, 4.0, 8.0),
}

LOSS_PROBABILITY_RANGE = (1e-5, 0.05)
PERTURB_PROBABILITY_RANGE = (0.0, 0.5)

# Labeled-dataset runs must land their mean throughput 20-80% below the
# normal mean; calibration targets stay inside the band with margin.
DROP_BAND = (0.20, 0.80)
TARGET_DROP_RANGE = (0.25, 0.75)
# Classes whose detection conditions need the per-window throughput clearly
# below the normal mean get a higher floor.
DEEP_DROP_CLASSES = (
    AnomalyClass.NETWORK_CONGESTION,
    AnomalyClass.SENDER_CLIENT_READ_CONGESTION,
    AnomalyClass.RECEIVER_CLIENT_WRITE_CONGESTION,
)
DEEP_DROP_FLOOR = 0.35

# Loss probabilities injected into labeled datasets must stay above the
# retransmission-ratio detection threshold with margin, and below a
# plausibility ceiling.
DATASET_LOSS_RANGE = (8e-4, 0.03)


@dataclass(frozen=True)
class AnomalySpec:
    cls: AnomalyClass
    severity: float
    start_s: int
    end_s: int
    intensity: float = 0.25  # per-process demand fraction, I/O classes only

    def __post_init__(self) -> None:
        if self.start_s >= self.end_s:
            raise ValueError(f"start_s {self.start_s} must precede end_s {self.end_s}")
        if self.cls is AnomalyClass.NORMAL:
            raise ValueError("normal is not an injectable anomaly")
        self._check_severity()

    def _check_severity(self) -> None:
        c, s = self.cls, self.severity
        if c in (AnomalyClass.NETWORK_LOSS, AnomalyClass.CORRUPT):
            lo, hi = LOSS_PROBABILITY_RANGE
            if not (lo <= s <= hi):
                raise ValueError(f"{c.value} probability {s} outside [{lo}, {hi}]")
        elif c in (AnomalyClass.REORDER, AnomalyClass.DUPLICATE):
            lo, hi = PERTURB_PROBABILITY_RANGE
            if not (lo < s <= hi):
                raise ValueError(f"{c.value} probability {s} outside ({lo}, {hi}]")
        elif c is AnomalyClass.JITTER:
            if s <= 0:
                raise ValueError("jitter stddev must be positive microseconds")
        elif c is AnomalyClass.NETWORK_CONGESTION:
            if s < 1 or s != int(s):
                raise ValueError("congestion severity is a competitor flow count >= 1")
        elif c in IO_CLASSES:
            if s < 1 or s != int(s):
                raise ValueError("I/O congestion severity is a competitor process count >= 1")
            if not (0 < self.intensity < 1):
                raise ValueError("competitor intensity must be in (0, 1)")
        elif c in BUFFER_CLASSES:
            if s < 1:
                raise ValueError("buffer severity is a byte size >= 1")

    def active_at(self, t: int) -> bool:
        return self.start_s <= t < self.end_s


def mathis_rate(
    mss_bytes: float,
    rtt_us: float,
    loss_p: float,
    capacity_bytes_per_s: float = math.inf,
    streams: int = 1,
) -> float:
    """Loss-limited TCP rate: streams x C x MSS / (RTT x sqrt(p)), capped.

    The aggregate of ``streams`` parallel connections scales linearly as each
    stream sees the same loss probability.
    """
    if not (0.0 < loss_p < 1.0):
        raise ValueError(f"loss probability must be in (0, 1), got {loss_p}")
    if mss_bytes <= 0 or rtt_us <= 0:
        raise ValueError("mss_bytes and rtt_us must be positive")
    rtt_s = rtt_us / 1e6
    rate = streams * MATHIS_C * mss_bytes / (rtt_s * math.sqrt(loss_p))
    return min(rate, capacity_bytes_per_s)


def buffer_limited_rate(
    tcp_buf_bytes: float,
    rtt_us: float,
    capacity_bytes_per_s: float = math.inf,
) -> float:
    """Window-limited TCP rate: one buffer per RTT, capped at path capacity."""
    if tcp_buf_bytes <= 0 or rtt_us <= 0:
        raise ValueError("tcp_buf_bytes and rtt_us must be positive")
    return min(capacity_bytes_per_s, tcp_buf_bytes / (rtt_us / 1e6))


def jitter_rate_factor(rtt_us: float, jitter_std_us: float) -> float:
    """Throughput multiplier under delay jitter.

    Models stall time from delayed ACKs and spurious timeouts as widening the
    effective RTT by two standard deviations: factor = rtt / (rtt + 2 sigma).
    Strictly decreasing in sigma.
    """
    return rtt_us / (rtt_us + 2.0 * jitter_std_us)


def reorder_rate_factor(reorder_p: float) -> float:
    # Fast-recovery absorbs most reordering; at the 45% menu top this costs 9%.
    return 1.0 - 0.2 * reorder_p


def _loss_for_rate(tb: TestbedSpec, target_rate: float) -> float:
    ratio = tb.parallel_streams * MATHIS_C * tb.mss_bytes / (tb.rtt_s * target_rate)
    return ratio * ratio


def feasible_drop_range(tb: TestbedSpec, cls: AnomalyClass) -> tuple[float, float]:
    """Target-drop interval achievable for a class on a testbed.

    For loss/corrupt the interval is narrowed so the injected probability
    stays inside DATASET_LOSS_RANGE (detectable yet plausible); other classes
    support the full target range, with a deeper floor where the detection
    conditions require it.
    """
    lo, hi = TARGET_DROP_RANGE
    if cls in DEEP_DROP_CLASSES:
        lo = max(lo, DEEP_DROP_FLOOR)
    if cls in (AnomalyClass.NETWORK_LOSS, AnomalyClass.CORRUPT):
        normal = tb.unimpaired_rate
        p_lo, p_hi = DATASET_LOSS_RANGE
        # rate(p) is decreasing, so p bounds map to drop bounds reversed
        drop_at_p_lo = 1.0 - min(
            mathis_rate(tb.mss_bytes, tb.rtt_us, p_lo, streams=tb.parallel_streams), normal
        ) / normal
        drop_at_p_hi = 1.0 - min(
            mathis_rate(tb.mss_bytes, tb.rtt_us, p_hi, streams=tb.parallel_streams), normal
        ) / normal
        lo = max(lo, drop_at_p_lo)
        hi = min(hi, drop_at_p_hi)
    if lo > hi:
        raise ValueError(
            f"testbed {tb.id} cannot reach a valid {cls.value} severity: "
            f"feasible drop range [{lo:.3f}, {hi:.3f}] is empty"
        )
    return lo, hi


def spec_for_target_drop(
    tb: TestbedSpec,
    cls: AnomalyClass,
    target_drop: float,
    start_s: int,
    end_s: int,
) -> AnomalySpec:
    """Build an AnomalySpec whose steady-state throughput drop is target_drop.

    Inverts the class's rate-response model. The calibration is exact for the
    fluid model up to competitor-count rounding.
    """
    normal = tb.unimpaired_rate
    residual = (1.0 - target_drop) * normal

    if cls in (AnomalyClass.NETWORK_LOSS, AnomalyClass.CORRUPT):
        p = _loss_for_rate(tb, residual)
        lo, hi = DATASET_LOSS_RANGE
        p = min(max(p, lo), hi)
        return AnomalySpec(cls, p, start_s, end_s)

    if cls is AnomalyClass.NETWORK_CONGESTION:
        flows = max(1, round(tb.wan_bandwidth_bytes_per_s / residual) - 1)
        return AnomalySpec(cls, float(flows), start_s, end_s)

    if cls in IO_CLASSES:
        if cls in (
            AnomalyClass.SENDER_OST_READ_CONGESTION,
            AnomalyClass.RECEIVER_OST_WRITE_CONGESTION,
        ):
            capacity = (
                tb.per_ost_disk_read_bytes_per_s
                if cls is AnomalyClass.SENDER_OST_READ_CONGESTION
                else tb.per_ost_disk_write_bytes_per_s
            )
        else:
            capacity = tb.lnet_nic_bytes_per_s
        demand = capacity - residual
        if demand <= 0:
            raise ValueError(
                f"{tb.id}/{cls.value}: target drop {target_drop} needs no competitor load"
            )
        # Smallest process count whose per-process demand fits its fair share,
        # so the full demand is actually served and the transfer keeps exactly
        # the residual.
        count = max(1, math.ceil(demand / residual)) if residual > 0 else 1
        intensity = demand / (count * capacity)
        return AnomalySpec(cls, float(count), start_s, end_s, intensity=intensity)

    if cls in BUFFER_CLASSES:
        buf = residual * tb.rtt_s
        return AnomalySpec(cls, max(1.0, buf), start_s, end_s)

    if cls is AnomalyClass.JITTER:
        # factor = rtt / (rtt + 2 sigma) = 1 - d  =>  sigma = rtt d / (2 (1-d))
        sigma = tb.rtt_us * target_drop / (2.0 * (1.0 - target_drop))
        return AnomalySpec(cls, sigma, start_s, end_s)

    raise ValueError(f"no drop calibration for class {cls.value}")


def sweep_spec(tb: TestbedSpec, cls: AnomalyClass, level: float, start_s: int, end_s: int) -> AnomalySpec:
    """AnomalySpec for one point of a severity sweep menu."""
    if cls is AnomalyClass.JITTER:
        return AnomalySpec(cls, tb.rtt_us * level, start_s, end_s)
    return AnomalySpec(cls, level, start_s, end_s)
