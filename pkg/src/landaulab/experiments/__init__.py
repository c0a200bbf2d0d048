"""Configuration-driven experiment runner.

Heavy modules are imported on first use so that the command line can fix
the thread count before the compiled kernels load.
"""

_EXPORTS = {
    "ExperimentConfig": "config", "parse_config": "config", "load_config": "config",
    "RegressionFit": "fitting", "fit_loglog": "fitting",
    "Report": "scenarios", "run_scenario": "scenarios", "emit_plotdata": "scenarios",
    "write_outputs": "scenarios", "render": "plotting",
}


def __getattr__(name):
    if name in _EXPORTS:
        import importlib

        mod = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(mod, name)
    raise AttributeError(name)
