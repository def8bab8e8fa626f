import pytest

from coopsgd.config import DEFAULT_ALPHA_GRID, ConfigError, parse_config

MINIMAL = """
# minimal
N = 2
tau = 2
K = 4
alpha = 0.1
"""


def test_minimal_defaults():
    c = parse_config(MINIMAL)
    assert (c.N, c.K, c.tau, c.alpha) == (2, 4, (2,), (0.1,))
    assert c.v == (0,) and c.m == 1 and c.dim == 10 and c.seeds == (0,)
    assert c.topology == ("complete",) and c.objective == "quadratic"
    assert len(c.quad_diag) == 10 and c.quad_diag[-1] == pytest.approx(1.0)
    assert c.alpha_grid == DEFAULT_ALPHA_GRID
    assert [p.name for p in c.points()] == ["p000"]


def test_k_mod_tau_error_cites_line():
    with pytest.raises(ConfigError, match="K mod tau") as info:
        parse_config("n = 2\nK = 5\ntau = 2\nalpha = 0.1\n")
    assert info.value.key == "k"
    assert info.value.line == 2


def test_unknown_key():
    with pytest.raises(ConfigError, match="taux") as info:
        parse_config(MINIMAL + "taux = 2\n")
    assert info.value.line == 7


def test_missing_required():
    with pytest.raises(ConfigError, match="alpha: missing"):
        parse_config("n = 2\ntau = 1\nk = 4\n")


@pytest.mark.parametrize(
    "extra, key",
    [
        ("m = two", "m"),
        ("v = -1", "v"),
        ("topology = torus", "topology"),
        ("seed = range:3:3", "seed"),
        ("u1 = 1,2", "u1"),
        ("quad_diag = 1,2", "quad_diag"),
        ("quad_diag = linspace:-1:1", "quad_diag"),
        ("omega_zero = maybe", "omega_zero"),
        ("sigma2 = -1", "sigma2"),
    ],
)
def test_bad_values_name_the_key(extra, key):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + extra + "\n")
    assert info.value.key == key


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(MINIMAL + "n = 3\n")


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("n = 2\njust words\n")


def test_sweep_axes_and_points():
    c = parse_config(MINIMAL.replace("tau = 2", "tau = 1,2,4").replace("K = 4", "K = 8").replace("N = 2", "N = 4")
                     + "v = 0,2\nseed = range:0:32\ntopology = complete,ring\nalpha_grid = 0.1,0.01\n")
    assert c.seeds == tuple(range(32))
    pts = c.points()
    assert len(pts) == 2 * 3 * 2
    assert {(p.topology, p.tau, p.v) for p in pts} == {
        (t, tau, v) for t in ("complete", "ring") for tau in (1, 2, 4) for v in (0, 2)
    }


def test_alpha_auto():
    c = parse_config(MINIMAL.replace("alpha = 0.1", "alpha = auto"))
    assert c.alpha == "auto"
    assert c.points()[0].alpha is None


def test_ring_needs_three_nodes():
    with pytest.raises(ConfigError, match="ring"):
        parse_config(MINIMAL + "topology = ring\n")


def test_custom_needs_adjacency():
    with pytest.raises(ConfigError, match="adjacency"):
        parse_config(MINIMAL + "topology = custom\n")


def test_overrides_win():
    c = parse_config(MINIMAL, {"n": "5", "tau": "1", "seed": "3,4", "out": "/tmp/x"})
    assert c.N == 5 and c.tau == (1,) and c.seeds == (3, 4) and c.out == "/tmp/x"
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(MINIMAL, {"bogus": "1"})
    with pytest.raises(ConfigError, match="K mod tau"):
        parse_config(MINIMAL, {"k": "5"})


def test_case_insensitive_keys_and_comments():
    c = parse_config("N=3 # workers\nTAU=1\nk=2\nAlpha=0.5\nu1 = 0.5,1,1,1,1,1,1,1,1,1\n")
    assert c.N == 3 and c.alpha == (0.5,) and c.u1[0] == 0.5


def test_logistic_config():
    c = parse_config(MINIMAL + "objective = logistic\nlogistic_samples = 64\nridge = 0.1\nm = 4\n")
    assert c.objective == "logistic" and c.quad_diag == ()
    with pytest.raises(ConfigError, match="logistic_samples"):
        parse_config(MINIMAL + "objective = logistic\nlogistic_samples = 2\nm = 4\n")
