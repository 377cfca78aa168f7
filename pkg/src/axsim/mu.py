"""MU-MAC vocabulary and rules: trigger frames, UORA, BSR, multi-STA BA,
cascaded-TXOP aggregate constraints, MU-RTS/CTS, MU EDCA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .ru import RuAssignment, RuLayout, mu_mimo_admissible

AID_RANDOM_ACCESS = 0          # RU open to associated STAs
AID_UNASSOCIATED = 2045        # RU open to unassociated STAs
AID_RESERVED = 4095            # never defined; the validator rejects it


class TriggerType(IntEnum):
    BASIC = 0
    MU_BAR = 2
    MU_RTS = 3
    BSRP = 4


class MuMacError(ValueError):
    pass


@dataclass(frozen=True)
class TfUser:
    aid12: int
    ru_index: int            # index into the trigger frame's layout
    n_ss: int = 1
    ss_start: int = 0

    @property
    def is_random_access(self) -> bool:
        return self.aid12 in (AID_RANDOM_ACCESS, AID_UNASSOCIATED)


@dataclass(frozen=True)
class TriggerFrame:
    trigger_type: TriggerType
    layout: RuLayout
    per_user: tuple[TfUser, ...]
    ul_duration_ns: int = 0
    cascade_indication: bool = False
    mu_mimo_ltf_mode: int = 0       # 0 single stream, 1 MU-MIMO
    srp_allowed: bool = False
    srp_value_dbm: float | None = None

    def ru_of(self, user: TfUser) -> RuAssignment:
        return self.layout.rus[user.ru_index]

    @property
    def ra_ru_indices(self) -> tuple[int, ...]:
        return tuple(u.ru_index for u in self.per_user if u.is_random_access)

    @property
    def scheduled_users(self) -> tuple[TfUser, ...]:
        return tuple(u for u in self.per_user if not u.is_random_access)

    def users_of(self, ru_index: int) -> tuple[TfUser, ...]:
        return tuple(u for u in self.per_user if u.ru_index == ru_index)

    def schedules(self, aid12: int) -> TfUser | None:
        for user in self.per_user:
            if user.aid12 == aid12:
                return user
        return None


def validate_tf(tf: TriggerFrame) -> list[str]:
    violations = []
    shared = set()
    seen: dict[int, int] = {}
    for user in tf.per_user:
        if user.aid12 == AID_RESERVED:
            violations.append("AID12 4095 is reserved")
        if user.is_random_access and (user.n_ss > 1 or user.ss_start != 0):
            violations.append("random-access RUs never carry a spatial-stream allocation")
        if not 0 <= user.ru_index < len(tf.layout.rus):
            violations.append(f"RU index {user.ru_index} outside the layout")
            continue
        seen[user.ru_index] = seen.get(user.ru_index, 0) + 1
        if seen[user.ru_index] > 1:
            shared.add(user.ru_index)
    for ru_index in shared:
        users = tf.users_of(ru_index)
        tones = tf.layout.rus[ru_index].tones
        if any(u.is_random_access for u in users):
            violations.append("MU-MIMO is not allowed on random-access RUs")
        if not mu_mimo_admissible(tones, len(users)):
            violations.append(
                f"{len(users)} users on a {tones}-tone RU is not MU-MIMO admissible")
    if shared and tf.mu_mimo_ltf_mode != 1:
        violations.append("shared RUs require MU-MIMO LTF mode 1")
    return violations


# --- UORA --------------------------------------------------------------------------

@dataclass
class OboState:
    ocw_min: int = 7            # defaults ride in the Beacon
    ocw_max: int = 31
    ocw: int = field(default=-1)
    obo: int | None = None      # None until the first draw
    candidate_ru: int | None = None   # index into the TF's RA RUs, this round
    deferred: bool = False      # carrier-sense defer: re-enter at obo 0, no redraw

    def __post_init__(self):
        if self.ocw < 0:
            self.ocw = self.ocw_min


def uora_update(state: OboState, n_ra_rus: int, rng,
                boundary_eligible: bool = True) -> tuple[bool, OboState]:
    """One TF round of OFDMA backoff.

    The counter drops by the number of random-access RUs; reaching (or
    crossing) zero makes the STA eligible to pick a candidate RU now.  The
    stated rule only says "below the number of RUs", but the worked example
    transmits at obo == n_ra_rus, so the boundary counts as eligible by
    default; set boundary_eligible=False for the strict-less reading
    (eligible at the next TF).
    """
    if n_ra_rus < 1:
        return False, state  # this TF round does not support random access
    obo = state.obo
    if obo is None:
        obo = rng.randint(0, state.ocw)
    if obo < n_ra_rus:
        new_obo, eligible = 0, True
    else:
        new_obo = obo - n_ra_rus
        eligible = new_obo == 0 if boundary_eligible else False
    return eligible, replace(state, obo=new_obo)


RU_IDLE = "idle"
RU_COLLISION = "collision"


@dataclass(frozen=True)
class RuOutcome:
    kind: str                  # "success" | "collision" | "idle"
    sta: int | None = None


def uora_transmit_phase(eligible: dict[int, OboState], n_ra_rus: int,
                        carrier_idle, rng,
                        decode_ok=lambda sta, ru_index: True,
                        ) -> tuple[dict[int, RuOutcome], dict[int, OboState], list[int]]:
    """Eligible STAs each pick one RA RU uniformly; CS-blocked STAs defer and
    keep obo = 0 for the next TF.  Two transmitters on an RU collide (no
    capture); a lone transmitter succeeds subject to the decode draw.

    Returns (per-RU outcomes, updated states, transmitted STA ids).
    """
    picks: dict[int, list[int]] = {i: [] for i in range(n_ra_rus)}
    states = dict(eligible)
    transmitted = []
    for sta in sorted(eligible):
        ru_index = rng.randint(0, n_ra_rus - 1)
        state = replace(states[sta], candidate_ru=ru_index)
        if not carrier_idle(sta):
            states[sta] = replace(state, deferred=True, candidate_ru=None)
            continue
        states[sta] = replace(state, deferred=False)
        picks[ru_index].append(sta)
        transmitted.append(sta)
    outcomes = {}
    for ru_index, stas in picks.items():
        if not stas:
            outcomes[ru_index] = RuOutcome(RU_IDLE)
        elif len(stas) > 1:
            outcomes[ru_index] = RuOutcome(RU_COLLISION)
        elif decode_ok(stas[0], ru_index):
            outcomes[ru_index] = RuOutcome("success", stas[0])
        else:
            outcomes[ru_index] = RuOutcome(RU_COLLISION, stas[0])
    return outcomes, states, transmitted


def ocw_on_result(state: OboState, acked: bool) -> OboState:
    if acked:
        return replace(state, ocw=state.ocw_min, obo=None, deferred=False,
                       candidate_ru=None)
    return replace(state, ocw=min(2 * (state.ocw + 1) - 1, state.ocw_max),
                   obo=None, candidate_ru=None)


# --- BSR ----------------------------------------------------------------------------

@dataclass
class BsrRecord:
    sta: int
    queued_bytes: dict[int, int]      # per access category
    freshness_ns: int

    @property
    def total_bytes(self) -> int:
        return sum(self.queued_bytes.values())


class BsrTable:
    """AP-side view of STA buffer depths, fed by piggyback and BSRP reports."""

    def __init__(self):
        self.records: dict[int, BsrRecord] = {}

    def ingest(self, sta: int, queued_bytes: int, now_ns: int, ac: int = 0) -> None:
        if queued_bytes < 0:
            raise MuMacError("negative queue depth")
        if queued_bytes == 0:
            self.records.pop(sta, None)   # empty queue leaves the scheduling pool
            return
        self.records[sta] = BsrRecord(sta, {ac: queued_bytes}, now_ns)

    def backlogged(self) -> list[int]:
        return sorted(s for s, r in self.records.items() if r.total_bytes > 0)

    def known(self) -> set[int]:
        return set(self.records)


NDP_GROUPS_20MHZ = 18
NDP_SUBCARRIERS_PER_GROUP = 12


def ndp_feedback_encode(bit: int, group: int) -> tuple[int, int]:
    """Energised subcarrier half for one feedback bit: (first index, count).

    Twelve subcarriers per group; the first six carry a 0, the last six a 1.
    The 20 MHz channel holds 18 groups: 18 STAs x 1 bit or 9 STAs x 2 bits.
    """
    if not 0 <= group < NDP_GROUPS_20MHZ:
        raise MuMacError(f"group {group} out of range 0..17")
    if bit not in (0, 1):
        raise MuMacError("bit must be 0 or 1")
    base = group * NDP_SUBCARRIERS_PER_GROUP
    return (base if bit == 0 else base + 6, 6)


# --- scheduling -----------------------------------------------------------------------

def build_schedule(bsr_table: BsrTable, layout: RuLayout, rng,
                   ra_fraction: float = 0.0, users_per_ru: int = 1,
                   nss_of=lambda sta: 1, ul_duration_ns: int = 0,
                   cascade: bool = False,
                   trigger_type: TriggerType = TriggerType.BASIC) -> TriggerFrame | None:
    """Hybrid schedule over a validated layout: a configured fraction of RUs
    opens for random access, the rest go to uniformly random backlogged STAs
    (the baseline policy).  MU-MIMO packs users_per_ru where admissible."""
    n_rus = len(layout.rus)
    n_ra = round(ra_fraction * n_rus)
    ra_indices = range(n_rus - n_ra, n_rus)
    sched_indices = range(n_rus - n_ra)
    pool = bsr_table.backlogged()
    if not pool and not n_ra:
        return None
    users: list[TfUser] = []
    rng.shuffle(pool)
    mu_mode = 0
    for ru_index in sched_indices:
        tones = layout.rus[ru_index].tones
        group = users_per_ru if users_per_ru > 1 and \
            mu_mimo_admissible(tones, users_per_ru) else 1
        placed = 0
        while pool and placed < group:
            sta = pool.pop()
            users.append(TfUser(sta, ru_index, n_ss=nss_of(sta),
                                ss_start=placed * nss_of(sta)))
            placed += 1
        if placed > 1:
            mu_mode = 1
    for ru_index in ra_indices:
        users.append(TfUser(AID_RANDOM_ACCESS, ru_index))
    if not users:
        return None
    tf = TriggerFrame(trigger_type, layout, tuple(users), ul_duration_ns,
                      cascade_indication=cascade, mu_mimo_ltf_mode=mu_mode)
    violations = validate_tf(tf)
    if violations:
        raise MuMacError("; ".join(violations))
    return tf


# --- multi-STA BA and round outcomes ------------------------------------------------------

@dataclass(frozen=True)
class MultiStaBa:
    bitmaps: dict[int, tuple[bool, ...]]

    @property
    def acked_stas(self) -> frozenset[int]:
        return frozenset(self.bitmaps)


ACCESS_FAILURE = "access_failure"


def mba_for(decoded: dict[int, tuple[bool, ...]]) -> MultiStaBa | str:
    """MBA covers exactly the decoded STAs; zero decodes is an access failure."""
    if not decoded:
        return ACCESS_FAILURE
    return MultiStaBa(dict(decoded))


def dl_power_split_dbm(total_dbm: float, n_rus: int) -> float:
    """The AP divides transmit power evenly across scheduled RUs."""
    if n_rus < 1:
        raise MuMacError("need at least one RU")
    return total_dbm - 10.0 * math.log10(n_rus)


# --- cascaded-TXOP aggregate constraints ----------------------------------------------------

ACK_KINDS = ("ack", "ba", "mba")


def validate_dl_ampdu(contents: list[str], ul_follows: bool) -> list[str]:
    """DL aggregates: at most one acknowledgement; at least one TF iff more UL
    rounds follow, none when the cascade ends."""
    violations = []
    acks = sum(1 for c in contents if c in ACK_KINDS)
    tfs = sum(1 for c in contents if c == "tf")
    if acks > 1:
        violations.append(f"{acks} acknowledgements in one DL A-MPDU (at most one)")
    if ul_follows and tfs < 1:
        violations.append("UL round follows but the DL A-MPDU carries no TF")
    if not ul_follows and tfs > 0:
        violations.append("cascade ends but the DL A-MPDU still carries a TF")
    unknown = [c for c in contents if c not in ACK_KINDS + ("mpdu", "tf")]
    if unknown:
        violations.append(f"unknown DL A-MPDU members: {unknown}")
    return violations


def validate_ul_ampdu(contents: list[str]) -> list[str]:
    violations = []
    acks = sum(1 for c in contents if c in ("ack", "ba"))
    if acks > 1:
        violations.append(f"{acks} acknowledgements in one UL A-MPDU (at most one)")
    bad = [c for c in contents if c not in ("ack", "ba", "mpdu")]
    if bad:
        violations.append(f"members not allowed in a UL A-MPDU: {bad}")
    return violations


# --- MU-RTS / CTS ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtectionOutcome:
    succeeded: bool
    cts_channels: frozenset[int]


def mu_rts_outcome(designated: dict[int, int], responded: set[int]) -> ProtectionOutcome:
    """designated maps STA -> 20 MHz channel index.  Overlapping CTS on one
    channel carry identical content under the same scrambler, so a channel
    succeeds when any designated STA responds."""
    channels = frozenset(designated[sta] for sta in responded if sta in designated)
    return ProtectionOutcome(bool(channels), channels)


# --- MU EDCA -------------------------------------------------------------------------------------

@dataclass(frozen=True)
class EdcaParams:
    aifsn: int
    cw_min: int
    cw_max: int


@dataclass
class MuEdcaState:
    normal: EdcaParams
    mu: EdcaParams
    timer_duration_ns: int
    timer_deadline_ns: int | None = None

    def apply_after_triggered_ul(self, now_ns: int) -> None:
        """Confirmed triggered UL arms the timer; spontaneous EDCA then uses
        the MU parameter set until expiry."""
        self.timer_deadline_ns = now_ns + self.timer_duration_ns

    def params_at(self, now_ns: int) -> EdcaParams:
        # Parameter switch applies from the next draw; an in-flight counter
        # is left to run out.
        if self.timer_deadline_ns is not None and now_ns < self.timer_deadline_ns:
            return self.mu
        return self.normal
