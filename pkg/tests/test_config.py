import numpy as np
import pytest

from dhmpot.config import parse_config
from dhmpot.errors import ConfigurationError

BASE = """[lattice]
dim = 2
n = 8
length = 2*pi
[target]
kind = sphere
q = 3
[potential]
kind = v3
lambda = 0.5
"""


def test_parse_defaults():
    cfg = parse_config(BASE)
    assert cfg.n == (8, 8)
    assert cfg.length == pytest.approx((2 * np.pi, 2 * np.pi))
    assert cfg.delta == (0.0, 0.0)
    assert cfg.potential.kind == "v3" and cfg.potential.lam == 0.5
    assert cfg.seed == 0 and cfg.map_init == "constant"


def test_hash_ignores_layout_but_not_values():
    a = parse_config(BASE)
    b = parse_config("\n# comment\n" + BASE.replace("dim = 2", "dim=2"))
    c = parse_config(BASE.replace("lambda = 0.5", "lambda = 0.25"))
    assert a.hash == b.hash != c.hash


@pytest.mark.parametrize("text, fragment", [
    (BASE + "[solver]\nbogus = 1\n", "run.ini:12: [solver] bogus: unknown key"),
    (BASE + "[extra]\nx = 1\n", "unknown section"),
    (BASE.replace("n = 8", "n = 9"), ":3: [lattice] n"),
    (BASE.replace("kind = v3", "kind = nope"), "[potential] kind"),
    (BASE + "[map]\ninit = identity\n", "identity needs a torus"),
    (BASE + "[spin]\ndelta = 0.5\n", "[spin] delta"),
    (BASE.replace("q = 3", ""), "missing required key [target] q"),
    (BASE + "[solver]\ntolerance = -1\n", "must be positive"),
    (BASE.replace("kind = v3\nlambda = 0.5", "kind = v2\nw = linear:1,0"), "[potential] w"),
    (BASE.replace("lambda = 0.5", "lambda = 0"), "run.ini:10: [potential] lambda"),
])
def test_validation_errors(text, fragment):
    with pytest.raises(ConfigurationError) as info:
        parse_config(text, source="run.ini")
    assert fragment in str(info.value)


def test_record_input_makes_potential_optional():
    text = BASE.replace("[potential]\nkind = v3\nlambda = 0.5\n", "") + "[input]\nrecord = r.dhm\n"
    cfg = parse_config(text)
    assert cfg.potential is None and cfg.record == "r.dhm"
