"""Exact and asymptotic loss probabilities of finite-buffer single-server queues."""

from .arith import HIGH_PRECISION_DIGITS, Arith, arith
from .asymptotics import (AsymptoticEstimate, Regime, asymptotic_loss, classify, gim1_loss,
                          solve_fixed_point_sub, solve_fixed_point_super, standard_mg1_loss)
from .chains import (InvariantSolution, QueueModel, build_embedded_matrix, finite_solution,
                     gim1_loss_dual, gim1_loss_exact, infinite_solution,
                     invariant_measure_infinite, invariant_vector_finite,
                     loss_from_infinite, loss_probability_exact,
                     time_stationary_distribution, tv_distance)
from .distributions import (Deterministic, DistributionSpec, Erlang, Exponential,
                            HyperExponential, Pareto, SingularityDescriptor, Zero, from_dict)
from .errors import (DegenerateVacation, DomainError, InvalidConfig, KernelTooShort,
                     NoRootError, PrecisionLoss, QlaError, TruncationError,
                     UnclassifiableError)
from .kernel import CountKernel, arrival_counts, boundary_counts, build_kernel

__version__ = "0.1.0"
