import math

import pytest

from axsim.core import RngSet
from axsim.topo import (gen_indoor_multi, gen_indoor_single, gen_outdoor_multi,
                        gen_outdoor_single, hex_ring_centers,
                        indoor_district_extent_m, point_in_hexagon)


def rng(seed=0):
    return RngSet(seed).stream("placement")


def test_indoor_single_counts():
    topo = gen_indoor_single(rng())
    assert len(topo.aps) == 1
    assert len(topo.stas) == 64


def test_indoor_single_deterministic():
    a = gen_indoor_single(rng(5))
    b = gen_indoor_single(rng(5))
    assert [(p.x, p.y) for p in a.placements] == [(p.x, p.y) for p in b.placements]


def test_indoor_geometry_bound():
    # 4x4 grid of 2 m rooms with 1 m gaps spans 11 m; the farthest STA sits
    # within half the diagonal of that square district.
    extent = indoor_district_extent_m()
    assert extent == pytest.approx(11.0)
    bound = math.hypot(extent / 2, extent / 2) + 1e-9
    topo = gen_indoor_single(rng(1))
    ap = topo.aps[0]
    for sta in topo.stas:
        assert math.dist(ap.pos, sta.pos) <= bound


def test_indoor_four_stas_per_room():
    topo = gen_indoor_single(rng(2))
    # 64 STAs over 16 rooms; rooms tile the district on a 3 m pitch
    rooms = {}
    for sta in topo.stas:
        rooms.setdefault((math.floor((sta.x + 5.5) / 3), math.floor((sta.y + 5.5) / 3)),
                         []).append(sta)
    assert len(rooms) == 16
    assert all(len(v) == 4 for v in rooms.values())


def test_outdoor_single_within_hexagon():
    topo = gen_outdoor_single(rng(3))
    assert len(topo.stas) == 64
    for sta in topo.stas:
        assert point_in_hexagon(sta.x, sta.y, 65.0)


def test_point_in_hexagon_oracle():
    assert point_in_hexagon(0, 64.9, 65)
    assert not point_in_hexagon(0, 65.1, 65)
    assert point_in_hexagon(74.0, 0, 65)        # along the flat direction
    assert not point_in_hexagon(50.0, 60.0, 65)  # beyond the slant edge


def test_indoor_multi_counts():
    topo = gen_indoor_multi(rng(4), n_bss=32)
    assert len(topo.aps) == 32
    assert len(topo.stas) == 32 * 64
    assert len(topo.colors) == 32


def test_indoor_multi_desk_scale_grid():
    topo = gen_indoor_multi(rng(4), n_bss=9, stas_per_bss=8)
    assert len(topo.aps) == 9
    xs = sorted({round(p.x, 6) for p in topo.aps})
    assert len(xs) == 3  # 3x3 matrix


def test_outdoor_multi_19_aps_at_130m():
    topo = gen_outdoor_multi(rng(6), n_bss=19, stas_per_bss=4)
    assert len(topo.aps) == 19
    aps = topo.aps
    min_d = min(math.dist(a.pos, b.pos)
                for i, a in enumerate(aps) for b in aps[i + 1:])
    assert min_d == pytest.approx(130.0, rel=1e-6)


def test_hex_rings_count():
    assert len(hex_ring_centers(130.0, 2)) == 19
    assert len(hex_ring_centers(130.0, 1)) == 7
