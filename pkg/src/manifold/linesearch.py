# Armijo backtracking on the orthogonal group

import logging
from typing import Callable, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class BacktrackingLineSearcher:
    """Back-tracking line-search along a retraction curve.

    The first trial step is `initial_step_size`; afterwards it is guessed
    from the previous decrease and enlarged by `optimism`. A step that does
    not decrease the objective is rejected (step size 0, point unchanged).
    """

    def __init__(
        self,
        contraction_factor: float = 0.5,
        optimism: float = 2.0,
        sufficient_decrease: float = 1e-4,
        max_iterations: int = 25,
        initial_step_size: float = 1e-2,
    ):
        self.contraction_factor = contraction_factor
        self.optimism = optimism
        self.sufficient_decrease = sufficient_decrease
        self.max_iterations = max_iterations
        self.initial_step_size = initial_step_size

        self._oldf0: Optional[float] = None

    def search(
        self,
        objective: Callable[[np.ndarray], float],
        retract: Callable[[np.ndarray, float], np.ndarray],
        x: np.ndarray,
        f0: float,
        df0: float,
    ) -> Tuple[float, np.ndarray, float]:
        """Backtrack from x along retract(x, alpha).

        Args:
            objective: loss to decrease
            retract: maps (x, alpha) to the point reached with step alpha
            x: current iterate
            f0: objective at x
            df0: directional derivative at alpha = 0 (negative)

        Returns:
            (alpha, new point, new objective value)
        """
        if self._oldf0 is not None and df0 < 0 and self._oldf0 > f0:
            alpha = self.optimism * 2 * (f0 - self._oldf0) / df0
        else:
            alpha = self.initial_step_size
        alpha = float(alpha)

        newx = retract(x, alpha)
        newf = objective(newx)
        step_count = 1

        while (
            not newf <= f0 + self.sufficient_decrease * alpha * df0
            and step_count <= self.max_iterations
        ):
            alpha = self.contraction_factor * alpha
            newx = retract(x, alpha)
            newf = objective(newx)
            step_count += 1

        # If we got here without obtaining a decrease, we reject the step.
        if not newf <= f0:
            logger.debug(f"Line search exhausted after {step_count} trials; step rejected")
            alpha = 0.0
            newx = x
            newf = f0

        self._oldf0 = f0
        return alpha, newx, newf

    def reset(self) -> None:
        self._oldf0 = None
