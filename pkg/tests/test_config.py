import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixsense import RngStream, SystemConfig, derive_stream, load_system_config, validate_config
from mixsense.config import config_from_mapping, parse_config_text
from mixsense.errors import DimensionMismatch, NonPositiveDimension, OutOfRange, ParseError


def test_defaults_accepted():
    cfg = validate_config(SystemConfig())
    assert cfg.num_receptor_types == 10
    assert cfg.num_molecule_types == 20
    assert cfg.molecules_per_release == 5000
    assert cfg.channel_gain == (0.01,) * 20
    assert cfg.noise_mean == 10.0
    assert cfg.activation_threshold == 5.0


def test_validation_idempotent():
    cfg = SystemConfig(master_seed=9)
    assert validate_config(validate_config(cfg)) == cfg


@pytest.mark.parametrize("field", ["num_receptor_types", "num_molecule_types", "num_mixtures", "molecules_per_release"])
def test_nonpositive_dimensions_rejected(field):
    with pytest.raises(NonPositiveDimension):
        validate_config(SystemConfig(**{field: 0}))


def test_gain_out_of_range():
    with pytest.raises(OutOfRange):
        validate_config(SystemConfig(channel_gain=1.5))
    with pytest.raises(OutOfRange):
        validate_config(SystemConfig(channel_gain=-0.1))


def test_gain_length_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_config(SystemConfig(num_molecule_types=3, channel_gain=(0.1, 0.2)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"noise_mean": -1.0},
        {"activation_threshold": -0.5},
        {"recon_error_eps": 0.0},
        {"recon_error_eps": -2.0},
        {"deviation_delta": 0.0},
        {"noise_mean": float("nan")},
        {"noise_mean": float("inf")},
    ],
)
def test_out_of_range_scalars(kwargs):
    with pytest.raises(OutOfRange):
        validate_config(SystemConfig(**kwargs))


def test_no_silent_clamping():
    # a bad value must raise, not be repaired
    with pytest.raises(OutOfRange):
        validate_config(SystemConfig(channel_gain=(0.01,) * 19 + (1.0000001,)))


def test_derive_stream_distinct_indices():
    a = derive_stream(42, 0).generator().random()
    b = derive_stream(42, 1).generator().random()
    assert a != b


def test_derive_stream_repeatable():
    s1 = derive_stream(42, 7)
    s2 = derive_stream(42, 7)
    assert s1 == s2
    assert s1.generator().random() == s2.generator().random()


def test_derive_stream_seed_sensitivity():
    assert derive_stream(42, 0).generator().random() != derive_stream(43, 0).generator().random()


def test_child_streams_differ_from_parent():
    parent = RngStream(7, 3)
    kids = {parent.child(i).stream_id for i in range(100)}
    assert len(kids) == 100
    assert parent.stream_id not in kids


@given(seed=st.integers(min_value=0, max_value=2**64 - 1), idx=st.integers(min_value=0, max_value=2**32))
def test_stream_determinism_property(seed, idx):
    g1 = derive_stream(seed, idx).generator()
    g2 = derive_stream(seed, idx).generator()
    assert np.array_equal(g1.random(4), g2.random(4))


def test_parse_config_file(tmp_path):
    text = """
# comment
R = 10
Q = 20
M = 16
N_rls = 5000
v = 0.01
lambda = 10
x_thr = 5
eps = 1
delta = 1
seed = 77
"""
    path = tmp_path / "sys.cfg"
    path.write_text(text)
    cfg = load_system_config(path)
    assert cfg == SystemConfig(recon_error_eps=1.0, deviation_delta=1.0, master_seed=77)


def test_parse_gain_list(tmp_path):
    path = tmp_path / "sys.cfg"
    path.write_text("Q = 3\nv = 0.1, 0.2, 0.3\n")
    cfg = load_system_config(path)
    assert cfg.channel_gain == (0.1, 0.2, 0.3)


def test_parse_rejects_unknown_key():
    with pytest.raises(ParseError):
        config_from_mapping({"R": "10", "bogus": "1"})


def test_parse_rejects_duplicate_key():
    with pytest.raises(ParseError):
        parse_config_text("R = 10\nR = 11\n")


def test_parse_rejects_garbage_line():
    with pytest.raises(ParseError):
        parse_config_text("this is not a key value line\n")


def test_parse_rejects_bad_number(tmp_path):
    path = tmp_path / "sys.cfg"
    path.write_text("R = ten\n")
    with pytest.raises(ParseError):
        load_system_config(path)
