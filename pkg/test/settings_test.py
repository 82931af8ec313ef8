"""
Environment override tests for the configuration dictionary

Functions:
    run_settings_test: Run the settings tests
"""
from config.settings import CONFIG, apply_environment


def test_overrides_are_coerced():
    config = dict(CONFIG)
    changed = apply_environment(config, {
        'PRICER_DEFAULT_STEPS': '50',
        'PRICER_DEFAULT_MESH': '[64, 48]',
        'PRICER_HOWARD_TOLERANCE': '1e-9',
        'PRICER_LOG_LEVEL': 'DEBUG',
        'PRICER_QUERY_POINTS': '[[50.0, 0.09]]',
        'UNRELATED': 'x',
    })
    assert sorted(changed) == ['DEFAULT_MESH', 'DEFAULT_STEPS', 'HOWARD_TOLERANCE', 'LOG_LEVEL', 'QUERY_POINTS']
    assert config['DEFAULT_STEPS'] == 50
    assert config['DEFAULT_MESH'] == (64, 48)
    assert config['HOWARD_TOLERANCE'] == 1e-9
    assert config['LOG_LEVEL'] == 'DEBUG'
    assert config['QUERY_POINTS'] == [(50.0, 0.09)]


def test_no_overrides_leave_config_alone():
    config = dict(CONFIG)
    assert apply_environment(config, {}) == []
    assert config == CONFIG


def run_settings_test():
    """Run the configuration override tests"""
    from test import run_module
    return run_module(__file__)
