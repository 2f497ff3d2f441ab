import math

import numpy as np
import pytest

from wcc import lattice as lt
from wcc.errors import CompletenessError, FeasibilityError
from wcc.lattice import LatticeSpec
from wcc.rootsys import root_system
from wcc.volume import Domain, domain_volume


def brute_force_sl2(entry_bound, frob_cap):
    out = []
    B = entry_bound
    for a in range(-B, B + 1):
        for b in range(-B, B + 1):
            for c in range(-B, B + 1):
                for d in range(-B, B + 1):
                    if a * d - b * c == 1 and a * a + b * b + c * c + d * d <= frob_cap:
                        out.append(((a, b), (c, d)))
    return sorted(out)


class TestExactEnumeration:
    def test_orthogonal_core(self):
        records, meta = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 1e-9))
        assert meta.complete
        mats = sorted(r.matrix for r in records)
        assert mats == [
            ((-1, 0), (0, -1)),
            ((0, -1), (1, 0)),
            ((0, 1), (-1, 0)),
            ((1, 0), (0, 1)),
        ]

    def test_matches_nested_loop_oracle_bound3(self):
        t = 2.0 * math.sqrt(2.0) * math.log(3.0)
        records, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", t))
        oracle = brute_force_sl2(3, 3.0**2 + 3.0**-2)
        assert sorted(r.matrix for r in records) == oracle

    def test_matches_oracle_bound5(self):
        t = 2.0 * math.sqrt(2.0) * math.log(5.0)
        records, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", t))
        oracle = brute_force_sl2(5, 5.0**2 + 5.0**-2)
        assert sorted(r.matrix for r in records) == oracle

    def test_counts_nondecreasing_in_t(self, census_t8):
        counts = []
        for t in (4.0, 5.5, 7.0, 8.0):
            records, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", t))
            counts.append(len(records))
        assert counts == sorted(counts)

    def test_box_domain_filter(self):
        records, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("box", 3.0, (1.0,)))
        rs = root_system(2)
        for rec in records:
            assert float(rs.simple_roots[0] @ rec.cartan) <= 3.0 + 1e-9

    def test_regular_margin_filter_is_subset(self, census_t8):
        records, _ = census_t8
        filtered, _ = lt.enumerate_elements(
            LatticeSpec("sl2"), Domain("ball", 8.0, regular_margin=1.0)
        )
        assert {r.matrix for r in filtered} <= {r.matrix for r in records}
        assert all(r.wall_margin > 1.0 for r in filtered)

    def test_slab_filter_partition(self, census_t8):
        records, _ = census_t8
        slab, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 8.0, slab=1.0))
        regular, _ = lt.enumerate_elements(
            LatticeSpec("sl2"), Domain("ball", 8.0, regular_margin=1.0)
        )
        assert len(slab) + len(regular) == len(records)

    def test_feasibility_error(self):
        with pytest.raises(FeasibilityError) as err:
            lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 40.0))
        assert err.value.estimated_candidates is not None

    def test_record_invariants(self, census_t8):
        records, _ = census_t8
        rs = root_system(2)
        sigma_bound = math.exp(Domain("ball", 8.0).max_top_weight(rs))
        for rec in records[:200]:
            g = np.array(rec.matrix, dtype=float)
            s = np.linalg.svd(g, compute_uv=False)
            assert np.allclose(np.log(s) - np.mean(np.log(s)), rec.cartan, atol=1e-9)
            assert s[0] <= sigma_bound * (1 + 1e-12)


class TestShardingAndCache:
    def test_shard_count_independence_byte_exact(self):
        r1, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 7.0), shards=1)
        r4, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 7.0), shards=4)
        r9, _ = lt.enumerate_elements(
            LatticeSpec("sl2"), Domain("ball", 7.0), shards=9, threads=3
        )
        blob = lt.records_blob(r1)
        assert lt.records_blob(r4) == blob
        assert lt.records_blob(r9) == blob

    def test_cache_roundtrip_and_checksum(self, tmp_path, census_t8):
        records, meta = census_t8
        spec = LatticeSpec("sl2")
        lt.save_cache(tmp_path, spec, Domain("ball", 8.0), records, meta, shards=3)
        spec2, dom2, records2, manifest = lt.load_cache(tmp_path)
        assert lt.records_blob(records2) == lt.records_blob(records)
        assert manifest["complete"] and manifest["total"] == len(records)
        assert dom2.t == 8.0

    def test_manifest_deterministic(self, tmp_path, census_t8):
        records, meta = census_t8
        spec = LatticeSpec("sl2")
        lt.save_cache(tmp_path / "a", spec, Domain("ball", 8.0), records, meta, shards=2)
        lt.save_cache(tmp_path / "b", spec, Domain("ball", 8.0), records, meta, shards=2)
        assert (tmp_path / "a" / "manifest.json").read_bytes() == (
            tmp_path / "b" / "manifest.json"
        ).read_bytes()

    def test_corrupted_shard_detected(self, tmp_path, census_t8):
        records, meta = census_t8
        lt.save_cache(tmp_path, LatticeSpec("sl2"), Domain("ball", 8.0), records, meta)
        shard = tmp_path / "shard_0000.bin"
        data = bytearray(shard.read_bytes())
        data[0] ^= 0xFF
        shard.write_bytes(bytes(data))
        with pytest.raises(Exception):
            lt.load_cache(tmp_path)


class TestBasePoint:
    def test_conjugation_translation_consistency(self):
        h = ((2, 1), (1, 1))
        based, _ = lt.enumerate_elements(LatticeSpec("sl2", base_point=h), Domain("ball", 6.0))
        plain, _ = lt.enumerate_elements(LatticeSpec("sl2"), Domain("ball", 6.0))
        hm = np.array(h)
        hinv = np.array([[1, -1], [-1, 2]])
        expected = sorted(
            tuple(tuple(int(v) for v in row) for row in (hm @ np.array(r.matrix) @ hinv))
            for r in plain
        )
        assert expected == sorted(r.matrix for r in based)


class TestWordBall:
    def test_sl3_incomplete_flagged(self):
        records, meta = lt.enumerate_elements(
            LatticeSpec("sl3"), Domain("ball", 5.0), word_radius=2
        )
        assert not meta.complete
        assert meta.word_radius == 2
        assert any(r.loxodromic for r in records)

    def test_census_counts_completeness_gate(self):
        records, meta = lt.enumerate_elements(
            LatticeSpec("sl3"), Domain("ball", 5.0), word_radius=2
        )
        rs = root_system(3)
        with pytest.raises(CompletenessError):
            lt.census_counts(records, rs, Domain("ball", 5.0), complete=meta.complete,
                             require_complete=True)


class TestCensusCounts:
    def test_consistency_with_volume(self, census_t8):
        records, meta = census_t8
        rs = root_system(2)
        dom = Domain("ball", 8.0)
        vol = domain_volume(rs, dom)
        counts = lt.census_counts(
            records, rs, dom, slabs=[1.0], volume_log=vol.log_value, complete=meta.complete
        )
        assert counts["total"] == len(records)
        assert counts["regular"] == sum(1 for r in records if r.wall_margin > 0)
        assert counts["normalized"]["total"] == pytest.approx(
            len(records) / math.exp(vol.log_value)
        )

    def test_sweep_ratio_stabilizes(self):
        report = lt.census_sweep(LatticeSpec("sl2"), [9.0, 10.0, 11.0], epsilons=[0.1])
        rows = report["rows"]
        ratios = [r["normalized"]["total"] for r in rows]
        assert abs(ratios[-1] - ratios[-2]) / ratios[-2] < 0.1
        assert report["slab_decay"][0.1]["kappa_fit"] > 0.0


def test_enumeration_cache_wrapper(tmp_path, census_t8):
    records, meta = census_t8
    cache = lt.EnumerationCache.write(
        tmp_path, LatticeSpec("sl2"), Domain("ball", 8.0), records, meta, shards=2
    )
    assert cache.complete
    assert lt.records_blob(cache.records) == lt.records_blob(records)
    assert cache.domain.t == 8.0
