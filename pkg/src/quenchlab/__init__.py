"""Quenched versus annealed central limit behaviour of stationary sums.

The package builds the L1-coboundary counterexample on a reproducible
innovation lattice, evaluates its partial sums, conditional means, exact
variances and projections in closed form, and provides Monte Carlo tools
for comparing quenched and annealed laws of ``S_n / sqrt(n)``.
"""

from .schedule import (
    ParameterSchedule,
    ScheduleError,
    SummabilityReport,
    ThreePointLaw,
    build_schedule,
    check_summability,
    coefficient,
    exact_block_moments,
    pow2_ell,
)
from .innovations import (
    InnovationLattice,
    LatticeError,
    Scenario,
    force_event,
    make_lattice,
    make_scenario,
)
from .counterexample import (
    DriftReport,
    bonferroni_bound,
    conditional_mean,
    drift_on_forced_event,
    eval_f,
    eval_g,
    exact_variance_Sn,
    heyde_report,
    partial_sum,
    projection_P0_Sn,
    projection_P0_shift_g,
)
from .families import ProcessSpec, coboundary_sum, decompose_sum, hannan_partial_sums
from .harness import (
    EmpiricalCdf,
    ergodic_average,
    ks_to_normal,
    maximal_tail_check,
    mcleish_report,
    quenched_compare,
    simulate_sums,
)

__version__ = "0.1.0"
