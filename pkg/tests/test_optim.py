"""Adam update semantics and the finite-difference harness itself."""

import numpy as np
import pytest

from avqfuse import tensor as T
from avqfuse.errors import ConfigError, EvaluationError, MissingGradientError
from avqfuse.optim import Adam, AdamState, adam_step, finite_difference_check
from avqfuse.tensor import Tensor, parameter


class TestAdamState:
    def test_rejects_bad_hyperparameters(self):
        z = np.zeros(1)
        with pytest.raises(ConfigError):
            AdamState(z.copy(), z.copy(), learning_rate=0.0)
        with pytest.raises(ConfigError):
            AdamState(z.copy(), z.copy(), beta1=1.0)
        with pytest.raises(ConfigError):
            AdamState(z.copy(), z.copy(), epsilon=0.0)
        with pytest.raises(ConfigError):
            AdamState(z.copy(), z.copy(), weight_decay=-1e-3)

    def test_moment_shapes_must_match(self):
        with pytest.raises(ConfigError):
            AdamState(np.zeros(2), np.zeros(3))


class TestAdamStep:
    def test_first_step_moves_by_learning_rate(self):
        p = parameter([1.0], name="w")
        p.grad = np.array([1.0])
        opt = Adam([p], learning_rate=0.1)
        opt.step()
        # Bias correction makes the first step lr * sign(grad).
        assert abs(p.data[0] - 0.9) < 1e-6

    def test_zero_grad_zero_decay_is_fixed_point(self):
        p = parameter([0.75], name="w")
        p.grad = np.zeros(1)
        Adam([p], learning_rate=0.1).step()
        assert p.data[0] == 0.75

    def test_weight_decay_is_decoupled(self):
        # With zero gradient the moments stay zero, so any movement comes
        # from the decoupled decay term alone.
        p = parameter([1.0], name="w")
        p.grad = np.zeros(1)
        Adam([p], learning_rate=0.1, weight_decay=5e-3).step()
        np.testing.assert_allclose(p.data, [1.0 - 0.1 * 5e-3], rtol=1e-15)

    def test_missing_gradient_names_parameter(self):
        p = parameter([1.0], name="fusion.w1")
        with pytest.raises(MissingGradientError, match="fusion.w1"):
            Adam([p]).step()

    def test_step_count_increments(self):
        p = parameter([1.0], name="w")
        opt = Adam([p], learning_rate=0.1)
        for expected in (1, 2, 3):
            p.grad = np.array([0.5])
            opt.step()
            assert opt.states[0].step_count == expected

    def test_quadratic_convergence(self):
        # 50 steps on (w - 3)^2 from 0 with lr 0.1: the distance to the
        # optimum shrinks strictly until momentum overshoots near the end,
        # and finishes well inside 0.5.
        w = parameter([0.0], name="w")
        opt = Adam([w], learning_rate=0.1)
        dist = []
        for _ in range(50):
            opt.zero_grad()
            T.tsum((w - 3.0) * (w - 3.0)).backward()
            opt.step()
            dist.append(abs(float(w.data[0]) - 3.0))
        assert all(b < a for a, b in zip(dist[:35], dist[1:36]))
        assert dist[-1] < 0.5

    def test_mismatched_state_count(self):
        p = parameter([1.0], name="w")
        p.grad = np.zeros(1)
        with pytest.raises(ConfigError):
            adam_step([p], [])


class TestFiniteDifferenceCheck:
    def test_linear_function_near_exact(self):
        rng = np.random.default_rng(0)
        ps = [parameter(rng.uniform(-2, 2, (3, 2))), parameter(rng.uniform(-2, 2, (4,)))]
        err = finite_difference_check(lambda: T.tsum(ps[0]) + T.tsum(ps[1]), ps, epsilon=1e-5)
        assert err < 1e-10

    def test_corrupted_backward_is_detected(self):
        x = parameter([0.7, -0.3], name="x")

        def broken_identity(t):
            def backward():
                t._accumulate(out.grad * 1.1)  # deliberate 10% error

            out = T._make(t.data.copy(), (t,), backward)
            return out

        err = finite_difference_check(lambda: T.tsum(broken_identity(T.mul(x, x))), [x], epsilon=1e-5)
        assert err > 0.04

    def test_untouched_parameter_contributes_zero_error(self):
        used = parameter([1.0], name="used")
        unused = parameter([2.0], name="unused")
        err = finite_difference_check(lambda: T.tsum(used * used), [used, unused], epsilon=1e-5)
        assert err < 1e-9

    def test_non_finite_objective_raises(self):
        x = parameter([2.0], name="x")
        with np.errstate(divide="ignore"):
            with pytest.raises(EvaluationError):
                finite_difference_check(lambda: T.tsum(T.div(x, Tensor([0.0]))), [x], epsilon=1e-5)

    def test_bad_epsilon(self):
        x = parameter([1.0])
        with pytest.raises(ConfigError):
            finite_difference_check(lambda: T.tsum(x), [x], epsilon=0.0)

    def test_restores_parameter_values(self):
        x = parameter([1.25, -0.5], name="x")
        before = x.data.copy()
        finite_difference_check(lambda: T.tsum(T.sigmoid(x)), [x], epsilon=1e-5)
        np.testing.assert_array_equal(x.data, before)
