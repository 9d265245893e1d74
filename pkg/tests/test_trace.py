import pytest
from hypothesis import given, strategies as st

from plutosim import trace as T
from plutosim.errors import TraceFormatError

times = st.one_of(st.none(), st.floats(0, 1e9, allow_nan=False))
small = st.integers(0, 4095)

commands = st.one_of(
    st.builds(T.act, small, small),
    st.builds(T.pre, small),
    st.builds(T.rd, small, small),
    st.builds(T.wr, small, small, st.binary(min_size=1, max_size=16)),
    st.builds(T.rbm, small, small, small, st.sampled_from(["RB", "OUT"])),
    st.builds(T.row_sweep, small, small, st.integers(1, 512), small, st.sampled_from([8, 16]),
              st.integers(0, 255), st.one_of(st.none(), st.lists(st.integers(0, 255), min_size=1,
                                                                  max_size=4).map(tuple))),
    st.builds(T.tra, small, small, small, small),
    st.builds(T.aap, small, small, small, st.booleans()),
    st.builds(T.shift, small, small, small, st.sampled_from([1, 8]), st.booleans(),
              st.sampled_from([8, 16, 32])),
)


@given(st.lists(st.tuples(commands, times, st.floats(0, 100, allow_nan=False)), max_size=20))
def test_dumps_loads_identity(items):
    cmds = []
    for c, t, stall in items:
        c.issue_time = t
        if c.kind in ("ROW_SWEEP", "AAP", "SHIFT"):
            c.stall = stall
        cmds.append(c)
    again = T.loads(T.dumps(cmds))
    assert again == cmds
    assert T.dumps(again) == T.dumps(cmds)


def test_comments_and_blank_lines():
    cmds = T.loads("# header\n\n0.0 ACT 1 2  # open\n- PRE 1\n")
    assert [c.kind for c in cmds] == ["ACT", "PRE"]
    assert cmds[1].issue_time is None


@pytest.mark.parametrize("line", [
    "0.0 NOPE 1",
    "0.0 ACT 1",
    "x ACT 1 2",
    "0.0 RBM 1 2 3 XX",
    "0.0 AAP 1 2 3 MAYBE",
    "0.0 SHIFT 1 2 3 1 U 8",
    "0.0 ROW_SWEEP 1 0 0 2 8 255 - 0.0",
    "0.0 PRE 1 2",
])
def test_malformed_lines_report_line_number(line):
    with pytest.raises(TraceFormatError, match="line 2"):
        T.loads("0.0 PRE 0\n" + line + "\n")


def test_subarrays_touched():
    assert T.rbm(3, 4, 0).subarrays == (3, 4)
    assert T.row_sweep(5, 0, 4, 6, 8, 255).subarrays == (5, 6)
    assert T.act(7, 1).subarrays == (7,)


def test_write_and_read_file(tmp_path):
    cmds = [T.act(0, 1), T.wr(0, 1, b"\x01\x02"), T.pre(0)]
    T.write_trace(tmp_path / "t.txt", cmds)
    assert T.read_trace(tmp_path / "t.txt") == cmds
