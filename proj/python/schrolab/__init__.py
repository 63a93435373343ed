"""Simulation and verification of critical random Schroedinger operators."""

from . import _core
from ._core import (
    ConfigError,
    NoiseTape,
    NumericalError,
    SeedSpec,
    carousel_count,
    compare_distributions,
    config_defaults,
    count_sine_beta,
    density_rho,
    eigenvalues_in_interval,
    eigenvector,
    experiment_names,
    integrate_phase_family,
    integrate_relative_family,
    potential_diagonal,
    rescaled_eigenvalues,
    sample_omega,
    sample_sch_points,
    sch_phases,
    sch_star_count,
    sine_beta_tmax,
    sturm_count,
    theta_density,
    theta_mass,
)

__version__ = _core.__version__


def _config_value(value):
    """Formats a Python value in the key = value config syntax."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        parts = []
        for v in value:
            if isinstance(v, (list, tuple)):
                parts.append(f"{v[0]}:{v[1]}")
            else:
                parts.append(str(v))
        return ",".join(parts)
    return str(value)


def _config_dict(experiment, overrides):
    cfg = {"experiment": experiment}
    cfg.update({k: _config_value(v) for k, v in overrides.items()})
    return cfg


def config_hash(experiment, **overrides):
    """Hash of the result-affecting configuration."""
    return _core.config_hash(_config_dict(experiment, overrides))


def run_experiment(experiment, **overrides):
    """Runs a named experiment; keyword arguments override config keys.

    Returns a dict with the run manifest, the statistical reports and the
    CSV data files keyed by name.
    """
    return _core.run_experiment(_config_dict(experiment, overrides))


def replay(run_dir, task, **overrides):
    """Re-executes one task ("arm:index") of a recorded run."""
    return _core.replay(str(run_dir), task, {k: _config_value(v) for k, v in overrides.items()})
