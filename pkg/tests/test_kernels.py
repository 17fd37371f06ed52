import numpy as np
import pytest

from paddle import kernels

pytestmark = pytest.mark.skipif(
    "c" not in kernels.available_backends(),
    reason="compiled kernel backend not built; nothing to compare",
)


@pytest.fixture
def restore_backend():
    before = kernels.active_backend()
    yield
    kernels.set_backend(before)


def _run_all(backend, a, b):
    kernels.set_backend(backend)
    return {
        "soft_threshold": kernels.soft_threshold(a, 0.37),
        "forward_step": kernels.forward_step(a, b, 0.81),
        "combine_momentum": kernels.combine_momentum(a, b, 0.29),
        "project_columns": kernels.project_columns(3.0 * a),
        "project_rows": kernels.project_rows(3.0 * a),
        "abs_sum": kernels.abs_sum(a),
    }


class TestBackendParity:
    @pytest.mark.parametrize("shape", [(1, 1), (5, 7), (64, 33), (200, 3)])
    def test_all_kernels_agree(self, restore_backend, shape):
        rng = np.random.default_rng(hash(shape) % 2**32)
        a = rng.standard_normal(shape)
        b = rng.standard_normal(shape)
        fast = _run_all("c", a, b)
        slow = _run_all("python", a, b)
        for name in fast:
            if name == "abs_sum":
                assert fast[name] == pytest.approx(slow[name], rel=1e-13), name
            else:
                assert np.allclose(fast[name], slow[name], rtol=0, atol=1e-14), name

    def test_noncontiguous_input(self, restore_backend):
        rng = np.random.default_rng(3)
        big = rng.standard_normal((10, 10))
        view = big[::2, ::3]
        kernels.set_backend("c")
        fast = kernels.soft_threshold(view, 0.2)
        kernels.set_backend("python")
        slow = kernels.soft_threshold(view, 0.2)
        assert np.array_equal(fast, slow)


class TestBackendSelection:
    def test_default_prefers_compiled(self):
        assert kernels.active_backend() in kernels.available_backends()

    def test_switch_and_restore(self, restore_backend):
        kernels.set_backend("python")
        assert kernels.active_backend() == "python"
        kernels.set_backend("c")
        assert kernels.active_backend() == "c"

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError, match="unknown kernel backend"):
            kernels.set_backend("fortran")


class TestKernelSemantics:
    def test_soft_threshold_boundary(self, restore_backend):
        for backend in kernels.available_backends():
            kernels.set_backend(backend)
            got = kernels.soft_threshold(np.array([[0.37, -0.37, 0.5]]), 0.37)
            assert got[0, 0] == 0.0 and got[0, 1] == 0.0
            assert got[0, 2] == pytest.approx(0.13)

    def test_project_leaves_feasible_untouched(self, restore_backend):
        a = np.array([[0.3, 0.1], [0.2, 0.4]])
        for backend in kernels.available_backends():
            kernels.set_backend(backend)
            assert np.array_equal(kernels.project_columns(a), a)
            assert np.array_equal(kernels.project_rows(a), a)

    def test_training_identical_across_backends(self, restore_backend):
        # end-to-end determinism: a short run must not depend on the backend
        from paddle import HyperParams, train

        x = np.random.default_rng(4).standard_normal((6, 20))
        hp = HyperParams(tau=0.2, t_max=5, history_h=1, rtol=1e-12, seed=1,
                         inner_max_iter=30)
        results = {}
        for backend in kernels.available_backends():
            kernels.set_backend(backend)
            model, u, trace = train(x, hp, k=3)
            results[backend] = (model.dictionary, model.dual, u, trace.totals())
        d_c, c_c, u_c, e_c = results["c"]
        d_p, c_p, u_p, e_p = results["python"]
        assert np.allclose(d_c, d_p, atol=1e-12)
        assert np.allclose(c_c, c_p, atol=1e-12)
        assert np.allclose(u_c, u_p, atol=1e-12)
        assert np.allclose(e_c, e_p, rtol=1e-12)
