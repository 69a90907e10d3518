import io

import numpy as np
import pytest

from nndensity.core import Instance, InvalidTourError, Metric, tour_length
from nndensity.generators import gen_rue
from nndensity.tsplib_io import (
    TsplibParseError,
    UnsupportedFormatError,
    dump_json,
    load_json,
    parse_instance,
    parse_tour,
    read_instance_file,
    write_instance,
    write_tour,
)


def test_fixtures_parse(data_dir):
    eil = read_instance_file(data_dir / "eil51.tsp")
    assert eil.n == 51 and eil.metric is Metric.TSPLIB and eil.name == "eil51"
    a280 = read_instance_file(data_dir / "a280.tsp")
    assert a280.n == 280
    _, counts = np.unique(a280.coords, axis=0, return_counts=True)
    assert counts.max() == 2
    assert read_instance_file(data_dir / "berlin52.tsp").n == 52


def test_fixture_distances_are_rounded(data_dir):
    inst = read_instance_file(data_dir / "berlin52.tsp")
    assert np.array_equal(inst.distances(), np.floor(inst.distances(Metric.EXACT) + 0.5))


def test_keywords_with_or_without_colon():
    text = "NAME tiny\nTYPE: TSP\n  DIMENSION :3\nEDGE_WEIGHT_TYPE   EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n"
    inst = parse_instance(text)
    assert inst.name == "tiny" and inst.n == 3
    assert tour_length(inst, [0, 1, 2]) == 12


def test_dimension_mismatch_names_line():
    text = "NAME: x\nTYPE: TSP\nDIMENSION: 5\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 1 1\n4 0 1\nEOF\n"
    with pytest.raises(TsplibParseError, match="line"):
        parse_instance(text)


def test_malformed_line_and_missing_section():
    bad = "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 a 0\n3 1 1\nEOF\n"
    with pytest.raises(TsplibParseError) as exc:
        parse_instance(bad)
    assert exc.value.line == 7
    with pytest.raises(TsplibParseError):
        parse_instance("NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nEOF\n")


def test_unsupported_weight_type():
    text = "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 1 1\nEOF\n"
    with pytest.raises(UnsupportedFormatError):
        parse_instance(text)


def test_round_trip_generated_instance():
    inst = gen_rue(30, 4)
    back = parse_instance(write_instance(inst), name=inst.name)
    assert np.array_equal(back.coords, inst.coords)
    assert load_json(dump_json(inst)).same_as(inst)


def test_round_trip_eil51_coordinates(data_dir):
    eil = read_instance_file(data_dir / "eil51.tsp")
    text = write_instance(eil)
    assert ".0 " not in text
    assert np.array_equal(parse_instance(text).coords, eil.coords)

    def section(t):
        lines = t.splitlines()
        start = next(i for i, l in enumerate(lines) if l.strip() == "NODE_COORD_SECTION")
        return [" ".join(l.split()) for l in lines[start + 1 : start + 52]]

    assert section(text) == section((data_dir / "eil51.tsp").read_text())


def test_unnamed_default():
    inst = Instance("", [[0, 0], [1, 0], [0, 1]])
    assert "NAME : unnamed" in write_instance(inst) or "NAME: unnamed" in write_instance(inst)


def test_parse_tour_examples():
    assert list(parse_tour("1 2 3 −1", 3)) == [0, 1, 2]
    assert list(parse_tour(io.StringIO("3\n1\n2\n-1\nEOF\n"), 3)) == [2, 0, 1]
    with pytest.raises(InvalidTourError):
        parse_tour("1 1 2 -1", 3)
    with pytest.raises(InvalidTourError):
        parse_tour("1 2 4 -1", 3)


def test_berlin52_optimal_tour(data_dir):
    inst = read_instance_file(data_dir / "berlin52.tsp")
    order = parse_tour(data_dir / "berlin52.opt.tour", inst.n)
    assert sorted(order) == list(range(52))
    assert tour_length(inst, order) == 7542


def test_tour_round_trip():
    order = np.random.default_rng(0).permutation(12)
    assert list(parse_tour(write_tour(order), 12)) == list(order)
