"""End-to-end checks of the executable entry point."""

import json
import subprocess
import sys

NODES = [
    {"id": "u", "type": "T0", "feat": [1.0, 0.0]},
    {"id": "t", "type": "T1", "feat": [0.5]},
]
EDGES = [{"id": "0", "src": "u", "dst": "t", "type": "s"}]


def run_stdio(extra_args, messages):
    script = "".join(json.dumps(m) + "\n" for m in messages)
    proc = subprocess.run(
        [sys.executable, "-m", "hetpath_bridge", "--stdio", *extra_args],
        input=script,
        capture_output=True,
        text=True,
        timeout=60,
    )
    return proc, [json.loads(line) for line in proc.stdout.splitlines()]


def session_script():
    return [
        {"op": "init", "classes": 3, "nodes": NODES, "edges": EDGES},
        {"op": "predict", "rid": 1, "target": "t"},
        {"op": "shutdown"},
    ]


def test_stdio_session_over_a_real_pipe():
    proc, replies = run_stdio(["--seed", "5"], session_script())
    assert proc.returncode == 0, proc.stderr
    assert replies[0] == {"ok": True}
    assert replies[1]["rid"] == 1
    assert len(replies[1]["probs"]) == 3


def test_stdio_sessions_are_reproducible_across_processes():
    _, first = run_stdio(["--seed", "5"], session_script())
    _, second = run_stdio(["--seed", "5"], session_script())
    _, other = run_stdio(["--seed", "6"], session_script())
    assert first == second
    assert first[1]["probs"] != other[1]["probs"]


def test_end_of_stream_without_shutdown_exits_cleanly():
    proc, replies = run_stdio([], session_script()[:2])
    assert proc.returncode == 0
    assert len(replies) == 2


def test_unreadable_weights_file_fails_fast(tmp_path):
    bad = tmp_path / "weights.json"
    bad.write_text("{}")
    proc, replies = run_stdio(["--weights", str(bad)], [])
    assert proc.returncode == 1
    assert replies == []
    assert "cannot load weights" in proc.stderr


def test_malformed_listen_argument_fails_fast():
    proc = subprocess.run(
        [sys.executable, "-m", "hetpath_bridge", "--listen", "nonsense"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 1
    assert "HOST:PORT" in proc.stderr
