import numpy as np
import pytest

import ergoscope as es
from ergoscope import zoo


def test_asserted_classes_closed_under_hierarchy():
    zm = zoo.catastrophe("constant")
    assert zm.asserted == {"recurrent": True, "ergodic": True,
                           "exponential": True, "strong": True}
    zm = zoo.catastrophe("power", 1.0)
    assert zm.asserted == {"recurrent": False, "ergodic": False,
                           "exponential": False, "strong": False}
    zm = zoo.catastrophe("log_power", 0.5)
    assert zm.asserted["ergodic"] is True
    assert zm.asserted["exponential"] is False
    assert zm.asserted["strong"] is False


def test_birth_death_assertion_grid():
    assert zoo.birth_death_gamma(2.5).asserted["strong"] is True
    assert zoo.birth_death_gamma(2.5).asserted["exponential"] is True
    assert zoo.birth_death_gamma(2.0).asserted["strong"] is False
    assert zoo.birth_death_gamma(0.5).asserted["ergodic"] is False
    assert zoo.birth_death_gamma(0.5).asserted["exponential"] is False


def test_alternating_alpha_values():
    zm = zoo.catastrophe("alternating")
    a = zm.alpha_vec(np.array([1, 2, 3, 4]))
    assert a == pytest.approx([1.0, 1.0, 1.0 / 3.0, 1.0])


def test_catastrophe_parameter_validation():
    with pytest.raises(es.ModelError):
        zoo.catastrophe("log_power")            # gamma missing
    with pytest.raises(es.ModelError):
        zoo.catastrophe("power", -1.0)
    with pytest.raises(es.ModelError):
        zoo.catastrophe("nope")
    with pytest.raises(es.ModelError):
        zoo.catastrophe("custom")               # alpha missing


def test_custom_catastrophe_alpha_array():
    zm = zoo.catastrophe("custom", alpha=[0.5, 0.25, 0.125, 0.0625])
    assert zm.spec.total_rate(2) == pytest.approx(3.25)


def test_single_birth_custom():
    zm = zoo.single_birth_custom(up=lambda n: 1.0 + n,
                                 below=lambda n: [(0, 1.0)] if n else [])
    tab = es.build_tableau(zm.single_birth, 64)
    assert tab.hom[0] == 1.0


def test_brussel_rates_match_reaction_table():
    zm = zoo.brussel(sites=1, lam1=2.0, lam2=3.0, lam3=5.0, lam4=7.0)
    rows = dict(zm.raw.row_of(((2, 1),)))
    assert rows[((3, 1),)] == pytest.approx(2.0)            # feed
    assert rows[((1, 2),)] == pytest.approx(3.0 * 2)        # 1 -> 2
    assert rows[((3, 0),)] == pytest.approx(5.0 * 1 * 1)    # pair conversion
    assert rows[((1, 1),)] == pytest.approx(7.0 * 2)        # decay
    # conservation: total rate equals the sum of the four channels
    assert sum(rows.values()) == pytest.approx(2 + 6 + 5 + 14)


def test_brussel_migration_between_sites():
    zm = zoo.brussel(sites=2)
    state = ((1, 0), (0, 1))
    rows = dict(zm.raw.row_of(state))
    assert rows[((0, 0), (1, 1))] == pytest.approx(1.0)   # species-1 hop
    assert rows[((1, 1), (0, 0))] == pytest.approx(1.0)   # species-2 hop


def test_multi_gamma_rows():
    zm = zoo.multi_gamma(2, 2.0)
    rows = dict(zm.raw.row_of((2, 1)))
    assert rows[(3, 1)] == pytest.approx(4.0)   # up at site 1
    assert rows[(1, 1)] == pytest.approx(4.0)   # down at site 1
    assert rows[(1, 2)] == pytest.approx(2.0)   # migration 1 -> 2
    assert rows[(2, 2)] == pytest.approx(1.0)   # up at site 2
    assert rows[(2, 0)] == pytest.approx(1.0)   # down at site 2
    assert rows[(3, 0)] == pytest.approx(1.0)   # migration 2 -> 1
    root_rows = dict(zm.raw.row_of((0, 0)))
    assert root_rows == {(1, 0): 1.0, (0, 1): 1.0}


def test_multi_gamma_empty_sites_do_not_fire():
    zm = zoo.multi_gamma(2, 0.5)
    rows = dict(zm.raw.row_of((0, 3)))
    # no up/down at the empty site; migration repopulates it from site 2
    assert (1, 2) in rows
    assert (0, 4) in rows and (0, 2) in rows
    assert (1, 3) not in rows


def test_model_config_builtin_and_explicit():
    zm = zoo.from_config({"builtin": "birth_death_gamma",
                          "params": {"gamma": 1.5}})
    assert zm.params["gamma"] == 1.5
    cfg = {"explicit": {"states": 3, "kind": "continuous",
                        "triplets": [[0, 1, 1.0], [1, 2, 2.0], [1, 0, 1.0],
                                     [2, 0, 3.0]]}}
    zm = zoo.from_config(cfg)
    assert zm.spec.n_states == 3
    assert zm.spec.total_rate(1) == pytest.approx(3.0)
    with pytest.raises(es.ModelError):
        zoo.from_config({"builtin": "unknown_model"})
    with pytest.raises(es.ModelError):
        zoo.from_config({"explicit": {"states": 2, "triplets": [[0, 5, 1.0]]}})
    with pytest.raises(es.ModelError):
        zoo.from_config({})


def test_zoo_list_contents():
    names = [m["name"] for m in zoo.zoo_list()]
    assert names == sorted(names)
    assert {"birth_death_gamma", "catastrophe", "brussel",
            "multi_gamma"} <= set(names)


def test_brussel_level_checks_zero_violations_small():
    for fam in ("log_level", "increment"):
        rep = zoo.brussel_level_inequality_check(fam, n_max=64, i_max=512)
        assert rep.zero_violations, (fam, rep.max_violation)
        assert rep.verdict.diverging


def test_brussel_level_check_general_constants():
    rep = zoo.brussel_level_inequality_check("log_level", n_max=32,
                                             i_max=256, lam1=0.7, lam4=2.3,
                                             a_total=1.9)
    assert rep.zero_violations


def test_multi_gamma_level_checks_zero_violations_small():
    for fam, g in (("power_tail", 2.0), ("loglog", 2.0), ("harmonic", 1.0)):
        rep = zoo.multi_gamma_level_check(g, fam, n_max=64, i_max=512)
        assert rep.zero_violations, (fam, rep.max_violation)
    rep = zoo.multi_gamma_level_check(1.0, "harmonic", n_max=64, i_max=512)
    assert rep.verdict.diverging


def test_multi_gamma_level_check_gamma_caps():
    with pytest.raises(es.ModelError):
        zoo.multi_gamma_level_check(2.5, "power_tail", n_max=8, i_max=32)
    with pytest.raises(es.ModelError):
        zoo.multi_gamma_level_check(1.5, "harmonic", n_max=8, i_max=32)


def test_level_check_equality_rows_reported_tightly():
    # the harmonic family holds with equality: the reported maximum
    # violation must sit at rounding scale, not at the tolerance
    rep = zoo.multi_gamma_level_check(1.0, "harmonic", n_max=64, i_max=512)
    assert abs(rep.max_violation) <= 1e-12


def test_transience_certificate_matches_checker():
    zm = zoo.catastrophe("power", 1.5)
    z = zoo.catastrophe_transience_certificate(zm.alpha_vec, 2000)
    rep = es.transience_certificate_check(zm.spec, z)
    assert rep.certifies_transience
