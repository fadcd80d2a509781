from .config import RunConfig, default_gamma_grid, default_theta_grid, load_config
from .presets import run_experiment, run_fig2, run_fig3, run_supp_figs
from .svgplot import PlotStyle, SweepRow, emit_plot

__all__ = [
    "RunConfig",
    "default_gamma_grid",
    "default_theta_grid",
    "load_config",
    "run_experiment",
    "run_fig2",
    "run_fig3",
    "run_supp_figs",
    "PlotStyle",
    "SweepRow",
    "emit_plot",
]
