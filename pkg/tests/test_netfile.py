import numpy as np
import pytest

from cyclicosc.model import Regulation
from cyclicosc.netfile import NetworkFileError, bundled_names, dumps_network, load_network, parse_network

DOC = """\
# two-gene ring
name = demo

[defaults]
a = 1.0
b = 0.5
c = 2
beta = 3
nu = 2
tau_r = 0.5
tau_p = 0.25

[gene 1]
regulation = repression

[gene 2]
regulation = activation   # trailing comment
b = 0.75
"""


def test_parse_with_defaults_and_overrides():
    net, meta = parse_network(DOC)
    assert meta == {"name": "demo"}
    assert net.n_genes == 2
    assert net.stages[1].b == 0.75 and net.stages[0].b == 0.5
    assert net.stages[1].regulation is Regulation.ACTIVATION


def test_bundled_examples_load():
    assert {"pentilator", "hes7", "repressilator3", "activation_pair"} <= set(bundled_names())
    pent, _ = load_network("pentilator")
    np.testing.assert_array_equal(pent.array("tau_p"), [1.0, 0.8, 0.4, 0.4, 0.4])
    assert [s.regulation.value[0] for s in pent.stages] == list("rrara")


@pytest.mark.parametrize("name", ["pentilator", "hes7", "repressilator3", "activation_pair"])
def test_round_trip_identical(name):
    net, meta = load_network(name)
    again, meta2 = parse_network(dumps_network(net, meta))
    assert again == net and meta2 == meta


def test_round_trip_awkward_floats():
    net, _ = parse_network(DOC)
    net = net.with_stages(a=0.1 + 0.2, c=1 / 3)
    assert parse_network(dumps_network(net))[0] == net


@pytest.mark.parametrize(
    "text, line, field",
    [
        ("[gene 1]\na = 1\nb = x\n", 3, "b"),
        ("[gene 1]\na = 1\n", 1, "b"),
        ("[gene 1]\nfoo = 1\n", 2, "foo"),
        ("[gene 1]\na = 1\na = 2\n", 3, "a"),
        ("[gene 1]\nregulation = sideways\n", 2, "regulation"),
        ("[gene 1]\njust words\n", 2, None),
        ("[gene 1]\na=-1\nb=1\nc=1\nbeta=1\ntau_r=0\ntau_p=0\nnu=2\nregulation=r\n", 2, "a"),
    ],
)
def test_errors_carry_location(text, line, field):
    with pytest.raises(NetworkFileError) as exc:
        parse_network(text, "f.net")
    assert exc.value.line == line
    assert exc.value.field == field
    assert f"f.net:{line}" in str(exc.value)


def test_no_genes():
    with pytest.raises(NetworkFileError, match="no \\[gene\\]"):
        parse_network("name = x\n")


def test_defaults_after_genes_rejected():
    with pytest.raises(NetworkFileError):
        parse_network("[gene 1]\n[defaults]\na = 1\n")


def test_missing_file():
    with pytest.raises(NetworkFileError):
        load_network("/nonexistent/path.net")
