import subprocess
import sys

import numpy as np
import pytest

from gnlowrank import io as gio
from gnlowrank.cli import EXIT_MAX_ITERS, EXIT_OK, EXIT_USAGE, inpaint, run
from gnlowrank.operators import IndexSet, sample_index_set
from gnlowrank.solvers import IterationTrace


def _result(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_complete_writes_trace_and_result(tmp_path):
    tr, res = tmp_path / "t.csv", tmp_path / "r.txt"
    code = run(["complete", "--m", "30", "--n", "40", "--r", "2", "--trace-out", str(tr), "--result-out", str(res)])
    assert code == EXIT_OK
    out = _result(res)
    assert out["status"] == "converged" and float(out["delta_f"]) < 1e-3
    trace = IterationTrace.from_csv(tr)
    assert trace.status == "converged" and np.all(trace.column("wall_ms") == 0)


def test_trace_output_is_byte_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run(["complete", "--m", "20", "--n", "25", "--r", "2", "--seed", "4", "--trace-out", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_iteration_cap_exit_code():
    assert run(["complete", "--m", "30", "--n", "40", "--r", "2", "--max-iters", "1"]) == EXIT_MAX_ITERS


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nope"],
        ["complete", "--m", "10"],
        ["complete", "--m", "x"],
        ["sense-compare", "--m", "8", "--n", "8", "--r", "2", "--repeats", "0"],
        ["complete", "--config", "/nonexistent/cfg.txt"],
    ],
)
def test_usage_errors(argv):
    assert run(argv) == EXIT_USAGE


def test_bad_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("unknown_knob=1\n")
    assert run(["complete", "--config", str(cfg)]) == EXIT_USAGE


def test_config_file_drives_run(tmp_path):
    cfg = tmp_path / "c.cfg"
    res = tmp_path / "r.txt"
    cfg.write_text(f"m=20\nn=25\nr=2\nsolver=gn_admm\nmax_iters=400\nresult_out={res}\n")
    assert run(["complete", "--config", str(cfg)]) == EXIT_OK
    assert _result(res)["solver"] == "gn_admm"


def test_complete_from_matrix_market_input(tmp_path):
    rng = np.random.default_rng(0)
    full = rng.standard_normal((15, 2)) @ rng.standard_normal((12, 2)).T
    omega = sample_index_set(15, 12, 0.7, 1)
    p = tmp_path / "obs.mtx"
    gio.write_matrix_market(p, (omega, full[omega.rows, omega.cols]))
    assert run(["complete", "--input", str(p), "--r", "2", "--max-iters", "300"]) == EXIT_OK
    dense = tmp_path / "dense.mtx"
    gio.write_matrix_market(dense, full)
    assert run(["complete", "--input", str(dense), "--r", "2"]) == EXIT_USAGE


def test_factorize_singular_values(tmp_path):
    mat = np.random.default_rng(1).standard_normal((20, 15))
    src = tmp_path / "b.csv"
    gio.write_dense_csv(src, mat)
    res = tmp_path / "r.txt"
    for solver in ("fsgn", "lsgn"):
        code = run(["factorize", "--input", str(src), "--r", "3", "--solver", solver, "--result-out", str(res)])
        assert code in (EXIT_OK, EXIT_MAX_ITERS)
        sig = np.array(_result(res)["singular_values"].split(), dtype=float)
        np.testing.assert_allclose(sig, np.linalg.svd(mat, compute_uv=False)[:3], rtol=1e-4)


def test_recover_l1_and_sym(tmp_path):
    res = tmp_path / "r.txt"
    assert run(["recover-l1", "--m", "30", "--n", "30", "--r", "2", "--result-out", str(res)]) == EXIT_OK
    assert float(_result(res)["low_rank_error"]) < 1e-4
    assert run(["sym", "--m", "16", "--r", "2", "--indefinite", "--result-out", str(res)]) == EXIT_OK
    sq = tmp_path / "ns.csv"
    gio.write_dense_csv(sq, np.ones((3, 4)))
    assert run(["sym", "--input", str(sq), "--r", "1"]) == EXIT_USAGE


def test_sense_compare_writes_both_traces(tmp_path):
    out = tmp_path / "cmp.csv"
    code = run(["sense-compare", "--m", "10", "--n", "10", "--r", "2", "--iters", "20", "--trace-out", str(out)])
    assert code == EXIT_OK
    for name in ("cmp_fsgn.csv", "cmp_adm.csv"):
        tr = IterationTrace.from_csv(tmp_path / name)
        assert len(tr) == 21


def _image(tmp_path, fraction=0.6):
    rng = np.random.default_rng(2)
    img = rng.standard_normal((30, 2)) @ rng.standard_normal((24, 2)).T
    omega = sample_index_set(30, 24, fraction, 3)
    src = tmp_path / "img.csv"
    mask = tmp_path / "mask.mtx"
    gio.write_dense_csv(src, img)
    gio.write_matrix_market(mask, (omega, np.ones(len(omega))))
    return img, src, mask


def test_inpaint_recovers_and_clamps(tmp_path):
    img, src, mask = _image(tmp_path)
    out = tmp_path / "out.csv"
    code = run(["inpaint", "--input", str(src), "--mask", str(mask), "--r", "2", "--out", str(out), "--max-iters", "300"])
    assert code == EXIT_OK
    rec = gio.read_dense_csv(out)
    assert rec.min() >= img.min() and rec.max() <= img.max()
    assert np.linalg.norm(rec - img) <= 1e-3 * np.linalg.norm(img)


def test_inpaint_mask_shape_mismatch(tmp_path):
    _, src, _ = _image(tmp_path)
    mask = tmp_path / "bad.mtx"
    omega = sample_index_set(5, 5, 0.5, 0)
    gio.write_matrix_market(mask, (omega, np.ones(len(omega))))
    assert run(["inpaint", "--input", str(src), "--mask", str(mask), "--r", "2", "--out", str(tmp_path / "o.csv")]) == EXIT_USAGE


def test_inpaint_empty_mask(tmp_path):
    _, src, _ = _image(tmp_path)
    mask = tmp_path / "empty.mtx"
    mask.write_text("%%MatrixMarket matrix coordinate real general\n20 16 0\n")
    assert run(["inpaint", "--input", str(src), "--mask", str(mask), "--r", "2", "--out", str(tmp_path / "o.csv")]) == EXIT_USAGE


def test_selftest_and_module_entry_point():
    assert run(["selftest"]) == EXIT_OK
    proc = subprocess.run([sys.executable, "-m", "gnlowrank", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "inpaint" in proc.stdout


def test_factorize_generated_tail_nonincreasing(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["factorize", "--m", "64", "--n", "64", "--r", "6", "--solver", "fsgn", "--trace-out", str(out)]) == EXIT_OK
    obj = IterationTrace.from_csv(out).objectives
    assert np.all(np.diff(obj[len(obj) // 2 :]) <= 0)


def test_sense_compare_reference_size(tmp_path):
    out, res = tmp_path / "s.csv", tmp_path / "r.txt"
    argv = ["sense-compare", "--m", "64", "--n", "64", "--r", "8", "--l-ratio", "0.5", "--iters", "300"]
    assert run(argv + ["--trace-out", str(out), "--result-out", str(res)]) == EXIT_OK
    vals = _result(res)
    assert float(vals["fsgn_final"]) <= float(vals["adm_final"])
    assert (tmp_path / "s_fsgn.csv").exists() and (tmp_path / "s_adm.csv").exists()


def test_inpaint_full_mask_is_truncated_svd(tmp_path):
    img = np.random.default_rng(4).uniform(0, 1, (12, 10))
    out = tmp_path / "o.mtx"
    code = inpaint(img, IndexSet.full(img.shape), 3, "lsgn", str(out))
    assert code in (EXIT_OK, EXIT_MAX_ITERS)
    u, s, vt = np.linalg.svd(img)
    ref = np.clip((u[:, :3] * s[:3]) @ vt[:3], img.min(), img.max())
    np.testing.assert_allclose(gio.read_matrix_market(out), ref, atol=1e-4)


def test_inpaint_rank_one_with_40_percent_masked(tmp_path):
    rng = np.random.default_rng(6)
    img = np.outer(rng.uniform(0.2, 1, 30), rng.uniform(0.2, 1, 25))
    omega = sample_index_set(30, 25, 0.6, 7)
    out = tmp_path / "o.csv"
    assert inpaint(img, omega, 1, "lsgn", str(out)) == EXIT_OK
    rec = gio.read_dense_csv(out)
    assert np.linalg.norm(rec - img) <= 1e-3 * np.linalg.norm(img)
