"""Figure-reproduction presets: analytic curves and Monte Carlo ensembles
side by side, written as CSV (17 significant digits, empty cells for
flagged values) and optionally as self-contained SVG plots."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional, Sequence

from .. import montecarlo as mc
from .. import protocols
from ..protocols import (
    ImpossibleBranchError,
    MeasurementTooWeakError,
    ProjectiveLimitError,
    TunnelModel,
)
from ..spinsys import Frequency, RotationPulse, prepare_bell
from .config import RunConfig
from .svgplot import PlotStyle, SweepRow, emit_plot

AXES = ("z", "x", "y")

FIG2_VARIANTS = ("single", "double", "reversal")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as err:
        raise OSError(f"cannot write output file {path}: {err}") from err


def _write_panel(
    config: RunConfig,
    name: str,
    rows: list[SweepRow],
    style: PlotStyle,
    paths: list[Path],
) -> None:
    csv_path = config.output_dir / f"{name}.csv"
    write_csv(
        csv_path,
        ["sweep_value", "analytic", "mc_mean", "mc_std_error", "n_kept", "n_total"],
        [
            (r.sweep_value, r.analytic, r.mc_mean, r.mc_std_error, r.n_kept, r.n_total)
            for r in rows
        ],
    )
    paths.append(csv_path)
    if config.emit_svg:
        svg_path = config.output_dir / f"{name}.svg"
        svg_path.write_text(emit_plot(rows, style), encoding="utf-8")
        paths.append(svg_path)


def fig2_pulse_sequence(variant: str, theta: float) -> list[tuple[float, Frequency]]:
    """The conditional-pulse list of each fig2 preset variant."""
    if variant == "single":
        return [(theta, Frequency.NU_E2)]
    if variant == "double":
        return [(theta, Frequency.NU_E2), (theta, Frequency.NU_E2)]
    if variant == "reversal":
        return [(theta, Frequency.NU_E2), (theta, Frequency.NU_E1)]
    raise ValueError(f"unknown fig2 variant {variant!r}")


def fig2_protocol(variant: str, theta: float, axis: str) -> mc.Protocol:
    steps: list[mc.ProtocolStep] = []
    for angle, freq in fig2_pulse_sequence(variant, theta):
        steps.append(mc.Pulse(RotationPulse(freq, angle)))
        steps.append(mc.ReadoutWindow(TunnelModel.projective(), keep="no_blip"))
    steps.append(mc.NuclearTomography(axis))
    return mc.Protocol(tuple(steps))


def fig2_analytic(variant: str, theta: float, axis: str) -> Optional[float]:
    try:
        post = protocols.closed_form_sequence(fig2_pulse_sequence(variant, theta))
    except ImpossibleBranchError:
        return None
    tomo = protocols.tomography_expectations(post.state)
    return getattr(tomo, f"sigma_{axis}")


def run_fig2(config: RunConfig, variants: Sequence[str] = FIG2_VARIANTS) -> list[Path]:
    """Tomography of the weak-measurement protocols versus rotation angle."""
    paths: list[Path] = []
    for variant in variants:
        for axis in AXES:
            rows = []
            for theta in config.theta_grid:
                stats = mc.run_ensemble(
                    fig2_protocol(variant, theta, axis),
                    config.noise,
                    config.n_shots,
                    config.rng_seed,
                    config.n_jobs,
                )
                rows.append(
                    SweepRow(
                        sweep_value=theta,
                        analytic=fig2_analytic(variant, theta, axis),
                        mc_mean=stats.mean,
                        mc_std_error=stats.std_error,
                        n_kept=stats.n_kept,
                        n_total=stats.n_total,
                    )
                )
            style = PlotStyle(
                title=f"{variant} measurement: sigma_{axis}",
                xlabel="rotation angle theta (rad)",
                ylabel=f"&lt;sigma_{axis}&gt;",
                y_min=-1.1,
                y_max=1.1,
            )
            _write_panel(config, f"fig2_{variant}_sigma_{axis}", rows, style, paths)
    return paths


def bell_window_protocol(gamma: float, t_m: float, axis: str = "z") -> mc.Protocol:
    """Bell pair, one finite readout window kept on no-blip, tomography."""
    return mc.Protocol(
        (
            mc.ReadoutWindow(TunnelModel(gamma_up_out=gamma, t_m=t_m), keep="no_blip"),
            mc.NuclearTomography(axis),
        ),
        initial=prepare_bell(),
    )


def run_fig3(config: RunConfig) -> list[Path]:
    """Tunnel-rate extraction: no-blip sigma_z inversion vs direct blip MLE."""
    header = [
        "gamma",
        "gamma_t_m",
        "sigma_z_analytic",
        "sigma_z_mc",
        "sigma_z_mc_std_error",
        "inv_gamma_true",
        "inv_gamma_extracted",
        "inv_gamma_extracted_low",
        "inv_gamma_extracted_high",
        "inv_gamma_blip_mle",
        "inv_gamma_blip_mle_low",
        "inv_gamma_blip_mle_high",
        "n_kept",
        "n_total",
    ]
    table = []
    sigma_rows = []
    inv_rows = []
    t_m = config.t_m
    for gamma in sorted(config.gamma_grid):
        model = TunnelModel(gamma_up_out=gamma, t_m=t_m)
        analytic = protocols.sigma_z_noblip(math.pi, model)
        records = mc.run_shots(
            bell_window_protocol(gamma, t_m),
            config.noise,
            config.n_shots,
            config.rng_seed,
            config.n_jobs,
        )
        stats = mc.stats_from_records(records)

        inv_ext = inv_lo = inv_hi = None
        if not stats.empty:
            try:
                inv_ext = protocols.extract_tunnel_rate(stats.mean, t_m)
            except (MeasurementTooWeakError, ProjectiveLimitError):
                inv_ext = None
            if inv_ext is not None:
                half = 1.959963984540054 * stats.std_error
                inv_lo = protocols.tunnel_rate_limits(stats.mean - half, t_m)
                inv_hi = protocols.tunnel_rate_limits(stats.mean + half, t_m)

        mle = mle_lo = mle_hi = None
        try:
            est = mc.estimate_gamma_from_blips(records, t_m)
            mle, mle_lo, mle_hi = est.inv_gamma, est.ci_low, est.ci_high
        except mc.NoInformationError:
            pass

        table.append(
            [
                gamma,
                gamma * t_m,
                analytic,
                stats.mean,
                stats.std_error,
                1.0 / gamma,
                inv_ext,
                inv_lo,
                inv_hi,
                mle,
                mle_lo,
                mle_hi,
                stats.n_kept,
                stats.n_total,
            ]
        )
        sigma_rows.append(
            SweepRow(gamma * t_m, analytic, stats.mean, stats.std_error,
                     stats.n_kept, stats.n_total)
        )
        inv_rows.append(
            SweepRow(gamma * t_m, 1.0 / gamma, inv_ext,
                     None if inv_ext is None or inv_lo is None or not math.isfinite(inv_hi or math.inf)
                     else (inv_ext - inv_lo),
                     stats.n_kept, stats.n_total)
        )

    paths: list[Path] = []
    csv_path = config.output_dir / "fig3_tunnel.csv"
    write_csv(csv_path, header, table)
    paths.append(csv_path)
    if config.emit_svg:
        for name, rows, style in (
            (
                "fig3_tunnel_sigma_z",
                sigma_rows,
                PlotStyle(
                    title="no-blip nuclear polarization vs measurement strength",
                    xlabel="Gamma * t_m",
                    ylabel="&lt;sigma_z&gt;",
                    y_min=-1.1,
                    y_max=0.4,
                ),
            ),
            (
                "fig3_tunnel_inv_gamma",
                inv_rows,
                PlotStyle(
                    title="tunnel time: sigma_z inversion (markers) vs true (line)",
                    xlabel="Gamma * t_m",
                    ylabel="1/Gamma (ms)",
                ),
            ),
        ):
            svg_path = config.output_dir / f"{name}.svg"
            svg_path.write_text(emit_plot(rows, style), encoding="utf-8")
            paths.append(svg_path)
    return paths


def run_supp_figs(config: RunConfig) -> list[Path]:
    """Success probabilities, expectation curves and the steering scan."""
    paths: list[Path] = []

    # success probabilities (one and two measurements, reversal)
    for variant in FIG2_VARIANTS:
        rows = []
        for theta in config.theta_grid:
            if variant == "reversal":
                p = protocols.reversal_success_probability(theta)
            else:
                p = protocols.success_probability_n(theta, 1 if variant == "single" else 2)
            stats = mc.run_ensemble(
                fig2_protocol(variant, theta, "z"),
                config.noise,
                config.n_shots,
                config.rng_seed,
                config.n_jobs,
            )
            f = stats.success_fraction
            se = math.sqrt(f * (1.0 - f) / stats.n_total)
            rows.append(SweepRow(theta, p, f, se, stats.n_kept, stats.n_total))
        style = PlotStyle(
            title=f"success probability: {variant}",
            xlabel="rotation angle theta (rad)",
            ylabel="P(success)",
            y_min=-0.05,
            y_max=1.05,
        )
        _write_panel(config, f"supp4_success_{variant}", rows, style, paths)

    # expectation-value curves for one and two measurements
    for variant in ("single", "double"):
        for axis in AXES:
            rows = []
            for theta in config.theta_grid:
                stats = mc.run_ensemble(
                    fig2_protocol(variant, theta, axis),
                    config.noise,
                    config.n_shots,
                    config.rng_seed,
                    config.n_jobs,
                )
                rows.append(
                    SweepRow(theta, fig2_analytic(variant, theta, axis),
                             stats.mean, stats.std_error, stats.n_kept, stats.n_total)
                )
            style = PlotStyle(
                title=f"{variant} measurement: sigma_{axis}",
                xlabel="rotation angle theta (rad)",
                ylabel=f"&lt;sigma_{axis}&gt;",
                y_min=-1.1,
                y_max=1.1,
            )
            _write_panel(config, f"supp5_expectations_{variant}_sigma_{axis}", rows, style, paths)

    # steering scan
    for axis in AXES:
        rows = []
        for theta in config.theta_grid:
            tomo = protocols.steering_scan(theta)
            protocol = mc.Protocol(
                (
                    mc.Pulse(RotationPulse(Frequency.ESR_BOTH, theta)),
                    mc.ReadoutWindow(TunnelModel.projective(), keep="no_blip"),
                    mc.NuclearTomography(axis),
                ),
                initial=prepare_bell(),
            )
            stats = mc.run_ensemble(
                protocol, config.noise, config.n_shots, config.rng_seed, config.n_jobs
            )
            rows.append(
                SweepRow(theta, getattr(tomo, f"sigma_{axis}"),
                         stats.mean, stats.std_error, stats.n_kept, stats.n_total)
            )
        style = PlotStyle(
            title=f"steering scan: sigma_{axis}",
            xlabel="unconditional electron rotation theta (rad)",
            ylabel=f"&lt;sigma_{axis}&gt;",
            y_min=-1.1,
            y_max=1.1,
        )
        _write_panel(config, f"supp6_steering_sigma_{axis}", rows, style, paths)
    return paths


def run_experiment(config: RunConfig) -> list[Path]:
    """Dispatch a RunConfig to the matching preset."""
    exp = config.experiment
    if exp.startswith("fig2_"):
        return run_fig2(config, variants=(exp.removeprefix("fig2_"),))
    if exp == "fig3_tunnel":
        return run_fig3(config)
    if exp in ("supp4_success", "supp5_expectations", "supp6_steering"):
        return run_supp_figs(config)
    if exp == "custom":
        # the full figure suite
        return run_fig2(config) + run_fig3(config) + run_supp_figs(config)
    raise ValueError(f"experiment {exp!r} has no preset runner")
