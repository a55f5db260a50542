"""Adam optimizer and the central-difference gradient harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError, MissingGradientError
from .tensor import Tensor, no_grad


@dataclass
class AdamState:
    """Per-parameter moment estimates plus the update hyperparameters."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.first_moment.shape != self.second_moment.shape:
            raise ConfigError("moment arrays must have identical shapes")


def adam_step(params: list[Tensor], states: list[AdamState]) -> None:
    """One bias-corrected Adam update with decoupled L2 weight decay.

    Raises MissingGradientError naming the first parameter whose gradient
    has not been populated.
    """
    if len(params) != len(states):
        raise ConfigError(f"{len(params)} parameters but {len(states)} optimizer states")
    for p, s in zip(params, states):
        if p.grad is None:
            raise MissingGradientError(f"parameter {p.name or '<unnamed>'} has no gradient")
        if s.first_moment.shape != p.data.shape:
            raise ConfigError(
                f"moment shape {s.first_moment.shape} does not match parameter "
                f"{p.name or '<unnamed>'} shape {p.data.shape}"
            )
    for p, s in zip(params, states):
        g = p.grad
        s.step_count += 1
        s.first_moment *= s.beta1
        s.first_moment += (1.0 - s.beta1) * g
        s.second_moment *= s.beta2
        s.second_moment += (1.0 - s.beta2) * g * g
        m_hat = s.first_moment / (1.0 - s.beta1**s.step_count)
        v_hat = s.second_moment / (1.0 - s.beta2**s.step_count)
        p.data -= s.learning_rate * (m_hat / (np.sqrt(v_hat) + s.epsilon) + s.weight_decay * p.data)


class Adam:
    """Convenience wrapper binding parameters to their AdamStates."""

    def __init__(self, params, learning_rate=5e-5, beta1=0.9, beta2=0.999, epsilon=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.states = [
            AdamState(
                first_moment=np.zeros_like(p.data),
                second_moment=np.zeros_like(p.data),
                learning_rate=learning_rate,
                beta1=beta1,
                beta2=beta2,
                epsilon=epsilon,
                weight_decay=weight_decay,
            )
            for p in self.params
        ]

    def step(self):
        adam_step(self.params, self.states)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def finite_difference_check(f, params: list[Tensor], epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` is a no-argument callable returning a single-element Tensor; it
    must re-read the current parameter values on each call. The relative
    error for one entry is |analytic - numeric| / max(1e-12, |analytic| +
    |numeric|). A parameter that f does not touch contributes zero analytic
    gradient, which is compared against the numeric estimate like any other.
    """
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    for p in params:
        p.grad = None
    out = f()
    val = out.item()
    if not math.isfinite(val):
        raise EvaluationError(f"objective evaluated to a non-finite value: {val}")
    out.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    max_err = 0.0
    with no_grad():
        for p, ga in zip(params, analytic):
            flat = p.data.ravel()
            ga_flat = ga.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + epsilon
                f_plus = f().item()
                flat[i] = orig - epsilon
                f_minus = f().item()
                flat[i] = orig
                if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                    raise EvaluationError(
                        f"objective non-finite while perturbing {p.name or '<unnamed>'}[{i}]"
                    )
                numeric = (f_plus - f_minus) / (2.0 * epsilon)
                err = abs(ga_flat[i] - numeric) / max(1e-12, abs(ga_flat[i]) + abs(numeric))
                if err > max_err:
                    max_err = err
    return max_err
