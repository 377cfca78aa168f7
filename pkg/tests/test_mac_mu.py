import math
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from axsim import mu
from axsim.core import MS, RngSet
from axsim.mu import (ACCESS_FAILURE, AID_RANDOM_ACCESS, AID_RESERVED,
                      BsrTable, EdcaParams, MuEdcaState, MuMacError, OboState,
                      TfUser, TriggerFrame, TriggerType, build_schedule,
                      dl_power_split_dbm, mba_for, mu_rts_outcome,
                      ndp_feedback_encode, ocw_on_result, uora_transmit_phase,
                      uora_update, validate_dl_ampdu, validate_tf,
                      validate_ul_ampdu)
from axsim.ru import RuAssignment, RuLayout


class ScriptedRng:
    """Replays a fixed sequence of integer draws (for trace replication)."""

    def __init__(self, values):
        self.values = list(values)

    def randint(self, a, b):
        v = self.values.pop(0)
        assert a <= v <= b, f"scripted draw {v} outside [{a}, {b}]"
        return v

    def shuffle(self, seq):
        pass


def fig17_layout():
    return RuLayout(20, (RuAssignment(106, 0), RuAssignment(26, 0), RuAssignment(106, 0)))


# --- trigger frame validation -----------------------------------------------------

def test_fig17_shape_valid():
    layout = fig17_layout()
    tf = TriggerFrame(TriggerType.BASIC, layout, (
        TfUser(1, 0), TfUser(AID_RANDOM_ACCESS, 1),
        TfUser(2, 2, n_ss=2), TfUser(3, 2, n_ss=2, ss_start=2)),
        mu_mimo_ltf_mode=1)
    assert validate_tf(tf) == []
    assert tf.ra_ru_indices == (1,)
    assert {u.aid12 for u in tf.scheduled_users} == {1, 2, 3}
    assert tf.ru_of(tf.schedules(1)).tones == 106


def test_mu_mimo_on_26_tone_rejected():
    layout = RuLayout(20, (RuAssignment(26, 0),))
    tf = TriggerFrame(TriggerType.BASIC, layout, (TfUser(2, 0), TfUser(3, 0)),
                      mu_mimo_ltf_mode=1)
    assert any("not MU-MIMO admissible" in v for v in validate_tf(tf))


def test_reserved_aid_rejected():
    layout = RuLayout(20, (RuAssignment(106, 0),))
    tf = TriggerFrame(TriggerType.BASIC, layout, (TfUser(AID_RESERVED, 0),))
    assert any("reserved" in v for v in validate_tf(tf))


def test_ra_ru_never_carries_streams():
    layout = RuLayout(20, (RuAssignment(106, 0),))
    tf = TriggerFrame(TriggerType.BASIC, layout,
                      (TfUser(AID_RANDOM_ACCESS, 0, n_ss=2),))
    assert any("spatial-stream" in v for v in validate_tf(tf))


# --- UORA update ---------------------------------------------------------------------

def test_uora_fig18_round1_updates():
    initial = [3, 5, 7, 8, 7, 0]
    rng = ScriptedRng(initial)
    states = {sta: OboState(ocw=15) for sta in range(1, 7)}
    eligible = {}
    for sta in range(1, 7):
        ok, states[sta] = uora_update(states[sta], 5, rng)
        eligible[sta] = ok
    assert [sta for sta, ok in eligible.items() if ok] == [1, 2, 6]
    assert [states[s].obo for s in (3, 4, 5)] == [2, 3, 2]
    assert all(states[s].obo == 0 for s in (1, 2, 6))


def test_uora_boundary_configurable():
    rng = ScriptedRng([])
    ok, state = uora_update(OboState(obo=5), 5, rng)
    assert ok and state.obo == 0
    ok, state = uora_update(OboState(obo=5), 5, rng, boundary_eligible=False)
    assert not ok and state.obo == 0  # eligible at the next TF


def test_uora_no_ra_rus_is_noop():
    state = OboState(obo=4)
    ok, after = uora_update(state, 0, ScriptedRng([]))
    assert not ok and after.obo == 4


# --- UORA transmit phase + full Fig. 18 two-round walkthrough ---------------------------

def test_uora_fig18_two_rounds():
    # Round 1: five RA RUs, initial OBOs {3,5,7,8,7,0} for STA1..6.
    rng = ScriptedRng([3, 5, 7, 8, 7, 0])
    states = {sta: OboState(ocw=15) for sta in range(1, 7)}
    eligible = {}
    for sta in sorted(states):
        ok, states[sta] = uora_update(states[sta], 5, rng)
        if ok:
            eligible[sta] = states[sta]
    assert sorted(eligible) == [1, 2, 6]

    # STA1 picks RU3 but its channel goes busy during SIFS; STA2 -> RU1,
    # STA6 -> RU4 transmit and are decoded.
    picks = ScriptedRng([2, 0, 3])   # RU indices for STA1, STA2, STA6
    outcomes, updated, transmitted = uora_transmit_phase(
        eligible, 5, carrier_idle=lambda sta: sta != 1, rng=picks)
    states.update(updated)
    assert transmitted == [2, 6]
    assert outcomes[0].kind == "success" and outcomes[0].sta == 2
    assert outcomes[3].kind == "success" and outcomes[3].sta == 6
    assert states[1].deferred and states[1].obo == 0
    mba = mba_for({2: (True,), 6: (True,)})
    assert mba.acked_stas == {2, 6}
    for sta in mba.acked_stas:
        states[sta] = ocw_on_result(states[sta], acked=True)
        assert states[sta].ocw == states[sta].ocw_min

    # Round 2: STA2/STA6 are done; STA7 joins with OBO draw 4; everyone's
    # counter reaches zero.  STA3 and STA5 pick the same RU and collide,
    # STA1 and STA4 succeed, STA7 defers on its NAV.
    del states[2], states[6]
    states[7] = OboState(ocw=15)
    rng2 = ScriptedRng([4])          # only STA7 still needs a draw
    eligible2 = {}
    for sta in sorted(states):
        ok, states[sta] = uora_update(states[sta], 5, rng2)
        if ok:
            eligible2[sta] = states[sta]
    assert sorted(eligible2) == [1, 3, 4, 5, 7]

    picks2 = ScriptedRng([1, 2, 4, 2, 0])  # STA1, STA3, STA4, STA5, STA7
    outcomes2, updated2, transmitted2 = uora_transmit_phase(
        eligible2, 5, carrier_idle=lambda sta: sta != 7, rng=picks2)
    states.update(updated2)
    assert transmitted2 == [1, 3, 4, 5]
    assert outcomes2[1] == mu.RuOutcome("success", 1)
    assert outcomes2[2].kind == "collision"
    assert outcomes2[4] == mu.RuOutcome("success", 4)
    assert states[7].deferred and states[7].obo == 0

    mba2 = mba_for({1: (True,), 4: (True,)})
    assert mba2.acked_stas == {1, 4}
    for sta in (3, 5):
        before = states[sta].ocw
        states[sta] = ocw_on_result(states[sta], acked=False)
        assert states[sta].ocw == 2 * (before + 1) - 1


def test_single_eligible_sta_success_depends_on_decode():
    state = {9: OboState(obo=0)}
    outcomes, _, _ = uora_transmit_phase(state, 5, lambda s: True, ScriptedRng([2]),
                                         decode_ok=lambda s, r: False)
    assert outcomes[2].kind == "collision"  # PER loss, no ack


def test_zero_eligible_leaves_rus_idle():
    outcomes, _, transmitted = uora_transmit_phase({}, 4, lambda s: True, ScriptedRng([]))
    assert transmitted == []
    assert all(o.kind == "idle" for o in outcomes.values())


# --- OCW evolution ------------------------------------------------------------------------

def test_ocw_restore_and_double():
    assert ocw_on_result(OboState(ocw=7), acked=True).ocw == 7  # ocw_min default 7
    assert ocw_on_result(OboState(ocw=7, ocw_max=31), acked=False).ocw == 15
    assert ocw_on_result(OboState(ocw=31, ocw_max=31), acked=False).ocw == 31


@given(st.integers(0, 8))
def test_ocw_never_exceeds_max(failures):
    state = OboState(ocw_min=7, ocw_max=31)
    for _ in range(failures):
        state = ocw_on_result(state, acked=False)
        assert state.ocw_min <= state.ocw <= state.ocw_max


# --- BSR -----------------------------------------------------------------------------------

def test_bsr_piggyback_and_zero_removal():
    table = BsrTable()
    table.ingest(4, 12_000, now_ns=10)
    table.ingest(5, 9_000, now_ns=10)
    assert table.backlogged() == [4, 5]
    table.ingest(4, 0, now_ns=20)     # empty queue leaves the pool
    assert table.backlogged() == [5]


def test_bsrp_partial_update():
    table = BsrTable()
    table.ingest(7, 5_000, now_ns=30)  # the other response was lost to PER
    assert table.known() == {7}


# --- NDP feedback -----------------------------------------------------------------------------

def test_ndp_bit0_first_half():
    assert ndp_feedback_encode(0, 0) == (0, 6)


def test_ndp_bit1_last_half_of_group17():
    assert ndp_feedback_encode(1, 17) == (17 * 12 + 6, 6)


def test_ndp_capacity_two_bits_per_sta():
    # 9 STAs x 2 bits fill all 18 groups without overlap
    used = set()
    for sta in range(9):
        for b in range(2):
            start, count = ndp_feedback_encode(1, sta * 2 + b)
            cells = set(range(start, start + count))
            assert not cells & used
            used |= cells
    assert len(used) == 9 * 2 * 6


def test_ndp_group_out_of_range():
    with pytest.raises(MuMacError):
        ndp_feedback_encode(0, 18)


# --- scheduling --------------------------------------------------------------------------------

def test_build_schedule_uniform_assignment():
    layout = fig17_layout()
    rng = RngSet(3).stream("sched")
    counts = Counter()
    for _ in range(3000):
        table = BsrTable()
        for sta in (1, 2, 3):
            table.ingest(sta, 1500, 0)
        tf = build_schedule(table, layout, rng)
        assert sorted(u.aid12 for u in tf.per_user) == [1, 2, 3]
        for slot, user in enumerate(tf.per_user):
            counts[(slot, user.aid12)] += 1
    for slot in range(3):
        for sta in (1, 2, 3):
            assert counts[(slot, sta)] / 3000 == pytest.approx(1 / 3, abs=0.05)


def test_build_schedule_marks_ra_fraction():
    table = BsrTable()
    table.ingest(1, 1500, 0)
    layout = RuLayout(20, tuple(RuAssignment(26, 0) for _ in range(9)))
    tf = build_schedule(table, layout, RngSet(0).stream("s"), ra_fraction=1 / 3)
    assert len(tf.ra_ru_indices) == 3


def test_build_schedule_mu_mimo_falls_back_on_small_ru():
    table = BsrTable()
    for sta in range(1, 7):
        table.ingest(sta, 1500, 0)
    layout = RuLayout(20, (RuAssignment(106, 0), RuAssignment(26, 0)))
    tf = build_schedule(table, layout, RngSet(1).stream("s"), users_per_ru=2)
    by_ru = [len(tf.users_of(i)) for i in range(len(layout.rus))]
    assert by_ru == [2, 1]        # pairing only on the 106-tone RU
    assert validate_tf(tf) == []


def test_build_schedule_empty_pool_defers():
    assert build_schedule(BsrTable(), fig17_layout(), RngSet(0).stream("s")) is None


# --- round outcomes -----------------------------------------------------------------------------

def test_mba_covers_exactly_decoded_set():
    assert mba_for({1: (True,), 2: (True, False)}).acked_stas == {1, 2}


def test_zero_decodes_is_access_failure():
    assert mba_for({}) == ACCESS_FAILURE


def test_dl_power_split_is_linear_division():
    assert dl_power_split_dbm(18.0, 4) == pytest.approx(18.0 - 10 * math.log10(4))
    assert dl_power_split_dbm(18.0, 1) == 18.0


# --- cascaded A-MPDU constraints (Tab. 5) ---------------------------------------------------------

def test_cascade_dl_shapes():
    assert validate_dl_ampdu(["ba", "mpdu", "mpdu", "tf"], ul_follows=True) == []
    assert validate_dl_ampdu(["mba", "mpdu"], ul_follows=False) == []


def test_cascade_dl_two_acks_rejected():
    violations = validate_dl_ampdu(["ba", "ba", "mpdu", "tf"], ul_follows=True)
    assert any("at most one" in v for v in violations)


def test_cascade_dl_tf_rules():
    assert any("no TF" in v for v in validate_dl_ampdu(["mpdu"], ul_follows=True))
    assert any("still carries" in v
               for v in validate_dl_ampdu(["mpdu", "tf"], ul_follows=False))


def test_cascade_ul_shapes():
    assert validate_ul_ampdu(["ba", "mpdu"]) == []
    assert any("at most one" in v for v in validate_ul_ampdu(["ba", "ack"]))
    assert any("not allowed" in v for v in validate_ul_ampdu(["tf", "mpdu"]))


# --- MU-RTS/CTS ------------------------------------------------------------------------------------

def test_mu_rts_same_channel_cts_merge():
    outcome = mu_rts_outcome({1: 0, 2: 0, 3: 0}, responded={1, 2, 3})
    assert outcome.succeeded
    assert outcome.cts_channels == frozenset({0})


def test_mu_rts_no_cts_fails():
    assert not mu_rts_outcome({1: 0, 2: 1}, responded=set()).succeeded


def test_mu_rts_multi_channel():
    outcome = mu_rts_outcome({1: 0, 2: 1, 3: 1}, responded={2})
    assert outcome.succeeded and outcome.cts_channels == frozenset({1})


# --- MU EDCA ----------------------------------------------------------------------------------------

def _mu_edca(timer_ms):
    return MuEdcaState(normal=EdcaParams(2, 15, 1023),
                       mu=EdcaParams(8, 63, 1023),
                       timer_duration_ns=timer_ms * MS)


def test_shorter_timer_resumes_normal_edca_first():
    ac0, ac1 = _mu_edca(8), _mu_edca(16)
    ac0.apply_after_triggered_ul(0)
    ac1.apply_after_triggered_ul(0)
    t = 10 * MS
    assert ac0.params_at(t) == ac0.normal     # 8 ms timer expired first
    assert ac1.params_at(t) == ac1.mu


def test_untriggered_sta_uses_normal_parameters():
    state = _mu_edca(8)
    assert state.params_at(5 * MS) == state.normal


def test_mu_parameters_active_while_timer_runs():
    state = _mu_edca(8)
    state.apply_after_triggered_ul(2 * MS)
    assert state.params_at(9 * MS) == state.mu
    assert state.params_at(10 * MS) == state.normal
