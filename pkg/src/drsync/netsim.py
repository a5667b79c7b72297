"""Seeded lossy channel plus two transport disciplines over it.

The channel applies two impairments per transmission, drawn in a fixed,
documented order: first a Bernoulli loss test against ``loss_rate``, then an
integer jitter uniform on ``{0..jitter_max_ms}``.  Draws come from a
``random.Random`` derived per transmission from ``(seed, seq, attempt)`` via
:func:`drsync.rng.mix64`, so the impairment of any given transmission is a
pure function of the channel seed and never depends on how other packets
fared.  Two runs over the same channel seed therefore impair the first
attempt of each packet identically, whichever transport is in use; only
retransmissions consume extra draws.

Transports:

* ``ReliableOrdered`` retransmits each lost packet at the prior attempt time
  plus a fixed ``rto_ms`` until it gets through, then releases packets to the
  application strictly in order, so one straggler holds back everything
  behind it.
* ``UnreliableDR`` sends each packet once; losses simply vanish.  Survivors
  pass through a de-jitter buffer that holds early arrivals until a playout
  deadline of ``send + base_latency + playout_delay``; later arrivals are
  either delivered immediately (late) or dropped, per policy.
"""

from __future__ import annotations

import csv
import enum
import math
import random
from dataclasses import dataclass

from .rng import mix64

TimeMs = int


@dataclass(frozen=True)
class ChannelConfig:
    """One-way impaired link: fixed base delay, bounded jitter, Bernoulli loss."""

    base_latency_ms: int
    jitter_max_ms: int
    loss_rate: float
    seed: int

    def __post_init__(self) -> None:
        if self.base_latency_ms < 0:
            raise ValueError(f"base_latency_ms must be >= 0, got {self.base_latency_ms}")
        if self.jitter_max_ms < 0:
            raise ValueError(f"jitter_max_ms must be >= 0, got {self.jitter_max_ms}")
        if not (math.isfinite(self.loss_rate) and 0.0 <= self.loss_rate <= 1.0):
            raise ValueError(f"loss_rate must be in [0, 1], got {self.loss_rate}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


class LatePolicy(enum.Enum):
    """What the de-jitter buffer does with a packet that misses its playout time."""

    DELIVER_LATE = "deliver_late"
    DROP = "drop"


@dataclass(frozen=True)
class DejitterConfig:
    playout_delay_ms: int
    late_policy: LatePolicy = LatePolicy.DELIVER_LATE

    def __post_init__(self) -> None:
        if self.playout_delay_ms < 0:
            raise ValueError(
                f"playout_delay_ms must be >= 0, got {self.playout_delay_ms}"
            )


@dataclass(frozen=True)
class ReliableOrdered:
    """In-order transport with fixed-interval retransmission, like simplified TCP."""

    rto_ms: int

    def __post_init__(self) -> None:
        if self.rto_ms < 1:
            raise ValueError(f"rto_ms must be >= 1, got {self.rto_ms}")


@dataclass(frozen=True)
class UnreliableDR:
    """Fire-and-forget transport; reordering and loss are the receiver's problem."""


TransportMode = ReliableOrdered | UnreliableDR


@dataclass(frozen=True)
class DeliveryEvent:
    """Fate of one packet: when it was sent, arrived, and reached the application.

    ``arrive_ms`` is None when every transmission was lost (unreliable only);
    ``deliver_ms`` is None when the packet never reached the application
    (lost, or dropped as late).  ``late`` marks arrivals past their de-jitter
    playout time.
    """

    seq: int
    send_ms: TimeMs
    arrive_ms: TimeMs | None
    deliver_ms: TimeMs | None
    late: bool
    retransmissions: int


def transmission_rng(seed: int, seq: int, attempt: int) -> random.Random:
    """Generator governing one transmission attempt of one packet."""
    return random.Random(mix64(seed, seq, attempt))


def channel_transmit(
    cfg: ChannelConfig, rng: random.Random, send_ms: TimeMs
) -> TimeMs | None:
    """Push one transmission through the channel; return arrival time or None if lost.

    Consumes exactly one (loss, jitter) draw pair from ``rng``, in that order,
    whatever the outcome.
    """
    lost = rng.random() < cfg.loss_rate
    jitter = rng.randint(0, cfg.jitter_max_ms)
    if lost:
        return None
    return send_ms + cfg.base_latency_ms + jitter


def dejitter_deliver(
    cfg: DejitterConfig,
    base_latency_ms: int,
    send_ms: TimeMs,
    arrive_ms: TimeMs,
) -> tuple[TimeMs, bool] | None:
    """Run one arrival through the de-jitter buffer.

    Returns ``(deliver_ms, late)``, or None if the packet was dropped as
    late.  On-time packets are held until ``send + base_latency +
    playout_delay`` so constant pacing at the sender re-emerges at the
    application.
    """
    playout_ms = send_ms + base_latency_ms + cfg.playout_delay_ms
    if arrive_ms <= playout_ms:
        return playout_ms, False
    if cfg.late_policy is LatePolicy.DROP:
        return None
    return arrive_ms, True


def _check_sends(sends: list[tuple[int, TimeMs]]) -> None:
    prev_t: TimeMs | None = None
    for i, (seq, t) in enumerate(sends):
        if seq != i + 1:
            raise ValueError(
                f"send seqs must be contiguous from 1, got seq={seq} at index {i}"
            )
        if prev_t is not None and t < prev_t:
            raise ValueError(
                f"send times must be monotone, got {t} after {prev_t}"
            )
        prev_t = t


def reliable_run(
    chan: ChannelConfig, transport: ReliableOrdered, sends: list[tuple[int, TimeMs]]
) -> list[DeliveryEvent]:
    """Deliver every packet in order, retransmitting losses every ``rto_ms``.

    ``sends`` is a list of ``(seq, send_ms)`` with seqs contiguous from 1 and
    monotone times.  No packet is ever given up on, which is also why a
    channel with ``loss_rate == 1`` is rejected: it would retransmit forever.
    """
    _check_sends(sends)
    if chan.loss_rate >= 1.0:
        raise ValueError("reliable transport cannot terminate at loss_rate >= 1")
    events: list[DeliveryEvent] = []
    prev_deliver: TimeMs = 0
    for seq, send_ms in sends:
        attempt = 0
        while True:
            attempt_send = send_ms + attempt * transport.rto_ms
            arrive = channel_transmit(
                chan, transmission_rng(chan.seed, seq, attempt), attempt_send
            )
            if arrive is not None:
                break
            attempt += 1
        # In-order release: nothing overtakes an earlier packet.
        deliver = max(arrive, prev_deliver)
        prev_deliver = deliver
        events.append(
            DeliveryEvent(
                seq=seq,
                send_ms=send_ms,
                arrive_ms=arrive,
                deliver_ms=deliver,
                late=False,
                retransmissions=attempt,
            )
        )
    return events


def unreliable_run(
    chan: ChannelConfig, dejitter: DejitterConfig, sends: list[tuple[int, TimeMs]]
) -> list[DeliveryEvent]:
    """Send each packet once; survivors pass the de-jitter buffer.

    Loss leaves a hole (``arrive_ms`` and ``deliver_ms`` both None); a
    late-dropped packet keeps its arrival time but has no delivery.
    """
    _check_sends(sends)
    events: list[DeliveryEvent] = []
    for seq, send_ms in sends:
        arrive = channel_transmit(
            chan, transmission_rng(chan.seed, seq, 0), send_ms
        )
        if arrive is None:
            events.append(
                DeliveryEvent(
                    seq=seq,
                    send_ms=send_ms,
                    arrive_ms=None,
                    deliver_ms=None,
                    late=False,
                    retransmissions=0,
                )
            )
            continue
        slot = dejitter_deliver(dejitter, chan.base_latency_ms, send_ms, arrive)
        if slot is None:
            deliver, late = None, True
        else:
            deliver, late = slot
        events.append(
            DeliveryEvent(
                seq=seq,
                send_ms=send_ms,
                arrive_ms=arrive,
                deliver_ms=deliver,
                late=late,
                retransmissions=0,
            )
        )
    return events


_EVENT_FIELDS = ["seq", "send_ms", "arrive_ms", "deliver_ms", "late", "retransmissions"]


def write_delivery_csv(events: list[DeliveryEvent], path: str) -> None:
    """Write events as ``seq,send_ms,arrive_ms,deliver_ms,late,retransmissions``.

    Absent times serialize as empty fields; booleans as ``true``/``false``.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_EVENT_FIELDS)
        for ev in events:
            writer.writerow(
                [
                    ev.seq,
                    ev.send_ms,
                    "" if ev.arrive_ms is None else ev.arrive_ms,
                    "" if ev.deliver_ms is None else ev.deliver_ms,
                    "true" if ev.late else "false",
                    ev.retransmissions,
                ]
            )


def read_delivery_csv(path: str) -> list[DeliveryEvent]:
    """Inverse of :func:`write_delivery_csv`."""
    events: list[DeliveryEvent] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _EVENT_FIELDS:
            raise ValueError(
                f"delivery CSV header must be {','.join(_EVENT_FIELDS)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            events.append(
                DeliveryEvent(
                    seq=int(row["seq"]),
                    send_ms=int(row["send_ms"]),
                    arrive_ms=int(row["arrive_ms"]) if row["arrive_ms"] else None,
                    deliver_ms=int(row["deliver_ms"]) if row["deliver_ms"] else None,
                    late=row["late"] == "true",
                    retransmissions=int(row["retransmissions"]),
                )
            )
    return events
