"""
Experiment configuration and its JSON form

The on-disk form is a flat JSON object; the payoff is the only nested
entry. Unknown keys are rejected so typos do not silently fall back to
defaults.
"""
import json
import logging
import os
from dataclasses import dataclass, field, replace

from core.errors import ValidationError
from core.model import ControlInterval, HestonParams, TruncatedDomain, validate
from core.payoff import Payoff

from .settings import CONFIG

logger = logging.getLogger('hjbpricer.config.experiment')

EXPERIMENTS = ('value_surface', 'control_map', 'linear_compare', 'interval_sweep', 'delta_map')


@dataclass(frozen=True)
class ExperimentConfig:
    params: HestonParams = field(default_factory=HestonParams.case_study)
    domain: TruncatedDomain = field(default_factory=TruncatedDomain.case_study)
    payoff: Payoff = field(default_factory=lambda: Payoff.butterfly(50.0, 20.0))
    control: ControlInterval = field(default_factory=lambda: ControlInterval(-2.4, -1.6))
    n_y: int = CONFIG['DEFAULT_MESH'][0]
    n_z: int = CONFIG['DEFAULT_MESH'][1]
    refinements: int = 0
    steps: int = CONFIG['DEFAULT_STEPS']
    experiment: str = 'value_surface'
    query_points: tuple = tuple(tuple(p) for p in CONFIG['QUERY_POINTS'])
    lambda_fixed: float = None
    compare_time: float = CONFIG['COMPARE_TIME']
    sweep_center: float = CONFIG['SWEEP_CENTER']
    sweep_diameters: tuple = tuple(CONFIG['SWEEP_DIAMETERS'])
    sample_grid: tuple = tuple(CONFIG['SAMPLE_GRID'])
    output_times: tuple = None
    mc_paths: int = 200000
    mc_steps: int = 200
    seed: int = 12345

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment '{self.experiment}'")
        if self.n_y < 1 or self.n_z < 1 or self.refinements < 0 or self.steps < 1:
            raise ValidationError("mesh sizes and steps must be positive")
        if any(d < 0 for d in self.sweep_diameters):
            raise ValidationError("sweep diameters must be nonnegative")
        if list(self.sweep_diameters) != sorted(self.sweep_diameters):
            raise ValidationError("sweep diameters must be increasing")
        validate(self.params, self.domain, self.control)

    @property
    def fixed_control(self):
        """Control for the linear comparison; defaults to lambda_min"""
        return self.control.lambda_min if self.lambda_fixed is None else self.lambda_fixed

    @property
    def times(self):
        """Output times, latest first"""
        if self.output_times is None:
            return (self.params.T, 0.0)
        return tuple(sorted(self.output_times, reverse=True))

    def with_overrides(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    def to_dict(self):
        p, d, c = self.params, self.domain, self.control
        data = {
            'r': p.r, 'kappa': p.kappa, 'gamma': p.gamma, 'xi': p.xi, 'rho': p.rho, 'T': p.T,
            's_min': d.s_min, 's_max': d.s_max, 'v_max': d.v_max,
            'payoff': self.payoff.to_dict(),
            'lambda_min': c.lambda_min, 'lambda_max': c.lambda_max, 'n_points': c.n_points,
            'n_y': self.n_y, 'n_z': self.n_z, 'refinements': self.refinements,
            'steps': self.steps,
            'experiment': self.experiment,
            'query_points': [list(q) for q in self.query_points],
            'lambda_fixed': self.lambda_fixed,
            'compare_time': self.compare_time,
            'sweep_center': self.sweep_center,
            'sweep_diameters': list(self.sweep_diameters),
            'sample_grid': list(self.sample_grid),
            'output_times': None if self.output_times is None else list(self.output_times),
            'mc_paths': self.mc_paths,
            'mc_steps': self.mc_steps,
            'seed': self.seed,
        }
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Build a configuration from its flat dictionary form

        Missing keys take the case-study defaults.
        """
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        merged = cls().to_dict()
        merged.update(data)
        m = merged
        try:
            params = HestonParams(r=float(m['r']), kappa=float(m['kappa']), gamma=float(m['gamma']),
                                  xi=float(m['xi']), rho=float(m['rho']), T=float(m['T']))
            domain = TruncatedDomain(float(m['s_min']), float(m['s_max']), float(m['v_max']))
            control = ControlInterval(float(m['lambda_min']), float(m['lambda_max']), int(m['n_points']))
            return cls(
                params=params,
                domain=domain,
                payoff=Payoff.from_dict(m['payoff']),
                control=control,
                n_y=int(m['n_y']),
                n_z=int(m['n_z']),
                refinements=int(m['refinements']),
                steps=int(m['steps']),
                experiment=m['experiment'],
                query_points=tuple(tuple(float(x) for x in q) for q in m['query_points']),
                lambda_fixed=None if m['lambda_fixed'] is None else float(m['lambda_fixed']),
                compare_time=float(m['compare_time']),
                sweep_center=float(m['sweep_center']),
                sweep_diameters=tuple(float(x) for x in m['sweep_diameters']),
                sample_grid=tuple(int(x) for x in m['sample_grid']),
                output_times=None if m['output_times'] is None else tuple(float(x) for x in m['output_times']),
                mc_paths=int(m['mc_paths']),
                mc_steps=int(m['mc_steps']),
                seed=int(m['seed']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed configuration: {e}")

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ValidationError(f"configuration {path} is not valid JSON: {e}")
        logger.info(f"Loaded experiment configuration from {path}")
        return cls.from_dict(data)

    def save(self, path):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write('\n')
        return path
