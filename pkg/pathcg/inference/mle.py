# File: pathcg/inference/mle.py
import logging

import numpy as np

from ..errors import ConfigError
from ..metrics.likelihood import path_log_likelihood
from ..models import FitMethod
from ..utils.decorators import with_context
from .descent import DescentSchedule, fit_descent
from .normal_equations import FitResult

logger = logging.getLogger(__name__)


@with_context('inference')
def fit_mle_discrete(cg_series, kernel, optimizer='closed_form', theta0=None, schedule=None):
    """Maximise the path log-likelihood of a CG series (or ensemble) under a scheme kernel.

    The kernels are Gaussian and linear in theta, so ``closed_form`` solves the
    weighted least-squares problem on the increments directly; ``descent``
    minimises the negative log-likelihood with fit_descent instead. The
    reported objective is -log L at the optimum and carries no Monte Carlo error.
    """
    likelihood = path_log_likelihood(cg_series, kernel)
    information = -likelihood.hessian()
    concave = likelihood.is_concave()
    if not concave:
        logger.warning("likelihood Hessian is not negative definite at the optimum; the MLE is not unique")
    if optimizer == 'closed_form':
        theta, se = likelihood.argmax()
    elif optimizer == 'descent':
        start = np.zeros(likelihood.size) if theta0 is None else np.asarray(theta0, dtype=float)

        def negative(theta):
            value, grad = likelihood(theta)
            return -value, -grad

        theta = fit_descent(negative, start, schedule or DescentSchedule()).theta
        _, se = likelihood.argmax()
    else:
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    value, _ = likelihood(theta)
    cond = float(np.linalg.cond(information))
    logger.info(f"MLE over {likelihood.n_transitions} transitions: theta={np.asarray(theta).tolist()}")
    return FitResult(theta=np.asarray(theta, dtype=float), objective=-value, objective_se=None, std_errors=se,
                     method=FitMethod.MLE, condition_number=cond, degenerate=not concave,
                     n_samples=likelihood.n_transitions, names=tuple(getattr(kernel.family, 'names', ())))
