"""
fractomatch CLI Interface

preprocess -> correlate -> train -> calibrate -> classify -> eval, plus the
simulator and roughness analysis, all driven by one RunConfig.
"""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional

import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from fractomatch import __version__
from fractomatch.config import RunConfig
from fractomatch.diagnostics import DiagnosticCollector
from fractomatch.errors import ConfigError, DatasetError, FractomatchError
from fractomatch.matchkit import (
    calibrate_threshold,
    classify,
    load_model,
    probability_to_logodds,
    save_model,
    train as train_model,
    write_report,
)
from fractomatch.models import Decision, PairManifest, PreprocessReport, Side
from fractomatch.simharness import observations_for_set, run_loocv, run_nu_sweep, run_subset_sweep, simulate_set
from fractomatch.spectral import build_pair_observation, read_dataset, split_by_label, write_dataset
from fractomatch.spectral.dataset import provenance_header
from fractomatch.surface import (
    analyze_roughness,
    despike,
    detrend_plane,
    height_map_stats,
    load_height_map,
    save_height_map,
)

app = typer.Typer(
    name="fractomatch",
    help="fractomatch - fracture-surface matching",
    add_completion=False,
)
eval_app = typer.Typer(help="Evaluation protocols")
app.add_typer(eval_app, name="eval")

console = Console()
logger = logging.getLogger("fractomatch.cli")

ConfigOption = typer.Option(None, "--config", "-c", help="Path to config file")
SeedOption = typer.Option(None, "--seed", help="Random seed")
BandsOption = typer.Option(None, "--bands", help='Band plan, e.g. "5-10,10-20" (cycles/mm)')
NuOption = typer.Option(None, "--nu", help="Degrees of freedom")


def version_callback(value: bool) -> None:
    """Show version and exit."""
    if value:
        console.print(f"fractomatch v{__version__}")
        raise typer.Exit()


@app.callback()
def main_callback(
    version: bool = typer.Option(
        None, "--version", "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version",
    )
) -> None:
    """fractomatch - fracture-surface matching"""


def setup_logging(level: str, log_file: Optional[str] = None) -> None:
    root = logging.getLogger("fractomatch")
    root.handlers.clear()
    root.setLevel(level)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(log_file, encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
        root.addHandler(handler)
    root.propagate = False


def load_config(config_path: Optional[str], **overrides) -> RunConfig:
    try:
        cfg = RunConfig.load(config_path).with_overrides(**overrides)
    except FractomatchError as e:
        fail(e)
    setup_logging(cfg.log_level, cfg.log_file)
    return cfg


def fail(error: BaseException) -> None:
    console.print(f"[red]{type(error).__name__}:[/red] {error}")
    hint = getattr(error, "hint", None)
    if hint:
        console.print(f"[dim]{hint}[/dim]")
    raise typer.Exit(1)


def config_hash(cfg: RunConfig) -> str:
    return cfg.digest()[:12]


def header_for(cfg: RunConfig) -> str:
    return provenance_header(__version__, config_hash(cfg))


def parse_k_values(text: Optional[str], q: int) -> List[int]:
    """ "2-9" or "2,3,9"; default 2..q."""
    if not text:
        return list(range(2, q + 1))
    values: List[int] = []
    for chunk in text.split(","):
        lo, sep, hi = chunk.strip().partition("-")
        values.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return values


def parse_float_list(text: str) -> List[float]:
    return [float(chunk) for chunk in text.split(",") if chunk.strip()]


@app.command()
def preprocess(
    inputs: List[Path] = typer.Argument(..., help="Height-map files (FHM1 or CSV)"),
    out: Path = typer.Option(Path("preprocessed"), "--out", "-o", help="Output directory"),
    pitch: Optional[float] = typer.Option(None, "--pitch", help="Pixel pitch in um (CSV inputs)"),
    config: Optional[str] = ConfigOption,
) -> None:
    """Level, despike and re-save height maps as FHM1."""
    cfg = load_config(config)
    collector = DiagnosticCollector()
    reports: List[PreprocessReport] = []

    for path in inputs:
        try:
            height_map = load_height_map(path, pitch=pitch)
            leveled = detrend_plane(height_map)
            cleaned = despike(leveled, cfg.despike.window, cfg.despike.z_thresh)
            target = save_height_map(cleaned, out / f"{path.stem}.fhm")
            stats = height_map_stats(cleaned)
            reports.append(PreprocessReport(
                source=str(path),
                output=str(target),
                rows=stats["rows"],
                cols=stats["cols"],
                mask_percent=stats["mask_percent"],
                rms_um=stats["rms_um"],
                tilt_um_per_mm=leveled.meta.get("tilt_um_per_mm", 0.0),
                spikes_replaced=cleaned.meta.get("spikes_replaced", 0),
            ))
            collector.success(str(path))
        except (FractomatchError, OSError) as e:
            collector.failure(str(path), e)

    table = Table(title="Preprocessed")
    for column in ("Source", "Size", "Masked %", "RMS um", "Tilt um/mm", "Spikes"):
        table.add_column(column)
    for report in reports:
        table.add_row(
            report.source,
            f"{report.rows}x{report.cols}",
            f"{report.mask_percent:.2f}",
            f"{report.rms_um:.4f}",
            f"{report.tilt_um_per_mm:.4f}",
            str(report.spikes_replaced),
        )
    console.print(table)
    collector.render(console)
    raise typer.Exit(collector.exit_code)


@app.command()
def correlate(
    manifest: Path = typer.Argument(..., help="YAML pairing manifest"),
    base_dir: Path = typer.Option(Path("."), "--base-dir", help="Directory of base images"),
    tip_dir: Path = typer.Option(Path("."), "--tip-dir", help="Directory of tip images"),
    out: Path = typer.Option(Path("correlations.csv"), "--out", "-o", help="Dataset CSV"),
    pitch: Optional[float] = typer.Option(None, "--pitch", help="Pixel pitch in um (CSV inputs)"),
    bands: Optional[str] = BandsOption,
    config: Optional[str] = ConfigOption,
) -> None:
    """Banded spectral correlations for every pair of a manifest."""
    cfg = load_config(config, bands=bands)
    try:
        with open(manifest, encoding="utf-8") as f:
            entries = PairManifest.model_validate(yaml.safe_load(f) or {}).pairs
    except (OSError, yaml.YAMLError, ValidationError) as e:
        fail(DatasetError("Manifest cannot be read", {"path": str(manifest), "cause": type(e).__name__}))
    if not entries:
        fail(DatasetError("Manifest lists no pairs", {"path": str(manifest)}))

    collector = DiagnosticCollector()
    observations = []
    for entry in entries:
        pair_key = entry.resolved_pair_id()
        try:
            base_images = [load_height_map(base_dir / name, pitch=pitch) for name in entry.base]
            tip_images = [load_height_map(tip_dir / name, pitch=pitch) for name in entry.tip]
            observations.append(build_pair_observation(
                base_images,
                tip_images,
                cfg.bands,
                cfg.spectrum.transform_size,
                pair_id=(entry.base_specimen, entry.tip_specimen),
                label=entry.label,
                hann=cfg.spectrum.hann,
                min_cells=cfg.spectrum.min_band_cells,
                workers=cfg.spectrum.workers,
            ))
            collector.success(pair_key)
        except (FractomatchError, OSError) as e:
            collector.failure(pair_key, e)

    if observations:
        rows = write_dataset(observations, out, header=header_for(cfg))
        console.print(f"[green]Wrote {rows} rows for {len(observations)} pairs to {out}[/green]")
    collector.render(console)
    raise typer.Exit(collector.exit_code)


@app.command()
def train(
    dataset: Path = typer.Argument(..., help="Labelled dataset CSV"),
    out: Path = typer.Option(Path("model.json"), "--out", "-o", help="Model file"),
    nu: Optional[float] = NuOption,
    name: str = typer.Option("", "--name", help="Training-set identifier"),
    config: Optional[str] = ConfigOption,
) -> None:
    """Fit the match and non-match densities."""
    cfg = load_config(config, nu=nu)
    try:
        matches, nonmatches = split_by_label(read_dataset(dataset))
        model = train_model(matches, nonmatches, cfg.fit, cfg.prior, name=name or dataset.stem)
        save_model(model, out, config_hash=config_hash(cfg))
    except (FractomatchError, OSError) as e:
        fail(e)

    console.print(Panel(
        f"[bold]Model:[/bold] {out}\n"
        f"[bold]nu:[/bold] {model.nu:g}  [bold]p x q:[/bold] {model.p} x {model.q}\n"
        f"[bold]match means:[/bold] {[round(v, 4) for v in model.match_params.row_means]}  "
        f"rho={model.match_params.rho:.4f}\n"
        f"[bold]non-match means:[/bold] {[round(v, 4) for v in model.nonmatch_params.row_means]}  "
        f"rho={model.nonmatch_params.rho:.4f}",
        title="Trained",
        border_style="green",
    ))


@app.command()
def calibrate(
    model_path: Path = typer.Argument(..., help="Model file"),
    dataset: Path = typer.Argument(..., help="Dataset with true non-matches"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Calibrated model (default: overwrite)"),
    seed: Optional[int] = SeedOption,
    config: Optional[str] = ConfigOption,
) -> None:
    """Set the model threshold for the configured false-alarm probability."""
    cfg = load_config(config, seed=seed)
    try:
        model = load_model(model_path)
        _, nonmatches = split_by_label(read_dataset(dataset))
        threshold = calibrate_threshold(
            model,
            nonmatches,
            alpha=cfg.calibration.alpha,
            confidence=cfg.calibration.confidence,
            n_boot=cfg.calibration.n_boot,
            seed=cfg.seed,
        )
        save_model(model.with_threshold(threshold), out or model_path, config_hash=config_hash(cfg))
    except (FractomatchError, OSError) as e:
        fail(e)
    probability = 1.0 / (1.0 + math.exp(-threshold))
    console.print(f"threshold logodds={threshold:.6f} probability={probability:.6f}")


@app.command(name="classify")
def classify_command(
    model_path: Path = typer.Argument(..., help="Model file"),
    dataset: Path = typer.Argument(..., help="Dataset CSV of pairs to classify"),
    out: Path = typer.Option(Path("report.csv"), "--out", "-o", help="Report CSV"),
    prior: Optional[float] = typer.Option(None, "--prior", help="Prior probability of a match"),
    calibrated: bool = typer.Option(False, "--calibrated", help="Use the model's calibrated threshold"),
    threshold_probability: Optional[float] = typer.Option(
        None, "--threshold-probability", help="Decision threshold on the posterior scale",
    ),
    config: Optional[str] = ConfigOption,
) -> None:
    """Posterior, log-odds and decision for every pair."""
    cfg = load_config(config)
    try:
        model = load_model(model_path)
        if prior is not None:
            model = model.with_prior(prior)
        if threshold_probability is None:
            threshold_probability = cfg.calibration.threshold_probability
        threshold = None if threshold_probability is None else probability_to_logodds(threshold_probability)
        observations = sorted(read_dataset(dataset), key=lambda obs: obs.key)
    except (FractomatchError, OSError) as e:
        fail(e)

    collector = DiagnosticCollector()
    records = []
    for obs in observations:
        try:
            records.append(classify(model, obs, threshold, use_calibrated=calibrated))
            collector.success(obs.key)
        except FractomatchError as e:
            collector.failure(obs.key, e)

    write_report(records, out, header=header_for(cfg))
    matches = sum(1 for record in records if record.decision == Decision.MATCH)
    console.print(f"[green]{len(records)} pairs classified, {matches} matches -> {out}[/green]")
    collector.render(console)
    raise typer.Exit(collector.exit_code)


@eval_app.command("loocv")
def eval_loocv(
    dataset: Path = typer.Argument(..., help="Labelled dataset CSV"),
    out: Path = typer.Option(Path("loocv.csv"), "--out", "-o", help="Tally CSV"),
    nu: Optional[float] = NuOption,
    nu_grid: Optional[str] = typer.Option(None, "--nu-grid", help='Comma list, e.g. "3,5,10,15,20,30"'),
    config: Optional[str] = ConfigOption,
) -> None:
    """Leave-one-surface-out validation."""
    cfg = load_config(config, nu=nu)
    grid = parse_float_list(nu_grid) if nu_grid else [cfg.fit.nu]
    try:
        observations = read_dataset(dataset)
        table = None
        for value in grid:
            rows = run_loocv(observations, cfg.fit.model_copy(update={"nu": value}), cfg.prior)
            if table is None:
                table = rows
            else:
                table.extend(rows)
        table.to_csv(out, header=header_for(cfg))
    except (FractomatchError, OSError) as e:
        fail(e)
    print_tally(table, "LOOCV")


@eval_app.command("subsets")
def eval_subsets(
    dataset: Path = typer.Argument(..., help="Labelled test dataset CSV"),
    models: List[Path] = typer.Option(..., "--model", "-m", help="Model file (repeatable)"),
    out: Path = typer.Option(Path("subsets.csv"), "--out", "-o", help="Tally CSV"),
    k: Optional[str] = typer.Option(None, "--k", help='Subset sizes, e.g. "2-9"'),
    config: Optional[str] = ConfigOption,
) -> None:
    """Consecutive-subset sweep over k."""
    cfg = load_config(config)
    try:
        loaded = [load_model(path) for path in models]
        observations = read_dataset(dataset)
        table = run_subset_sweep(loaded, observations, parse_k_values(k, loaded[0].q))
        table.to_csv(out, header=header_for(cfg))
    except (FractomatchError, OSError, ValueError) as e:
        fail(e)
    print_tally(table, "Subset sweep")


@app.command()
def simulate(
    out: Path = typer.Option(Path("synthetic"), "--out", "-o", help="Output directory"),
    sets: str = typer.Option("A:9", "--sets", help='Named sets and sizes, e.g. "A:9,B:9,C:10,D:10"'),
    seed: Optional[int] = SeedOption,
    k: Optional[int] = typer.Option(None, "--k", help="Images per surface"),
    overlap: Optional[float] = typer.Option(None, "--overlap", help="Window overlap (0.75, 0.5 or 0)"),
    pitch: Optional[float] = typer.Option(None, "--pitch", help="Pixel pitch in um"),
    bands: Optional[str] = BandsOption,
    save_images: bool = typer.Option(False, "--save-images", help="Also write FHM1 windows and a manifest"),
    study: bool = typer.Option(False, "--study", help="Run the nu sweep across all sets"),
    config: Optional[str] = ConfigOption,
) -> None:
    """Simulate fracture sets and their correlation datasets."""
    cfg = load_config(config, seed=seed, k=k, overlap=overlap, pitch=pitch, bands=bands)
    try:
        layout = [(name.strip(), int(size)) for name, size in (chunk.split(":") for chunk in sets.split(","))]
    except ValueError:
        fail(ConfigError("Cannot parse --sets", {"sets": sets}))

    datasets = {}
    try:
        for name, size in layout:
            synthetic = simulate_set(cfg.sim, size, name)
            observations = observations_for_set(
                synthetic, cfg.bands, cfg.spectrum.transform_size,
                cfg.spectrum.hann, cfg.spectrum.min_band_cells, cfg.spectrum.workers,
            )
            write_dataset(observations, out / f"{name}_correlations.csv", header=header_for(cfg))
            datasets[name] = observations
            if save_images:
                write_synthetic_images(synthetic, out / name)
            console.print(f"[green]Set {name}: {size} surfaces, {len(observations)} pairs[/green]")

        if study:
            test = [obs for name in sorted(datasets) for obs in datasets[name]]
            _, table = run_nu_sweep(datasets, test, cfg.fit, prior=cfg.prior)
            table.to_csv(out / "nu_sweep.csv", header=header_for(cfg))
            print_tally(table, "nu sweep")
    except (FractomatchError, OSError) as e:
        fail(e)


def write_synthetic_images(synthetic, directory: Path) -> None:
    """FHM1 windows under base/ and tip/ plus manifest.yaml for the correlate command."""
    pairs = []
    for specimen in synthetic.specimens:
        sides = ((Side.BASE, synthetic.base_images[specimen]), (Side.TIP, synthetic.tip_images[specimen]))
        for side, images in sides:
            for j, image in enumerate(images):
                save_height_map(image, directory / side.value / f"{specimen}_{j}.fhm")
    for base, tip, label in synthetic.pairs():
        pairs.append({
            "base_specimen": base,
            "tip_specimen": tip,
            "label": label.value,
            "base": [f"{base}_{j}.fhm" for j in range(synthetic.spec.k)],
            "tip": [f"{tip}_{j}.fhm" for j in range(synthetic.spec.k)],
        })
    with open(directory / "manifest.yaml", "w", encoding="utf-8") as f:
        yaml.safe_dump({"pairs": pairs}, f, sort_keys=False)


@app.command()
def roughness(
    inputs: List[Path] = typer.Argument(..., help="Height-map files"),
    pitch: Optional[float] = typer.Option(None, "--pitch", help="Pixel pitch in um (CSV inputs)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Optional CSV of the fits"),
    config: Optional[str] = ConfigOption,
) -> None:
    """Height-height correlation and self-affine fit per file."""
    cfg = load_config(config)
    collector = DiagnosticCollector()
    rows = []
    for path in inputs:
        try:
            curve = analyze_roughness(
                load_height_map(path, pitch=pitch), cfg.roughness.max_lag, cfg.roughness.fit_range,
            )
            rows.append((str(path), curve.fitted_exponent, curve.transition_scale))
            collector.success(str(path))
        except (FractomatchError, OSError) as e:
            collector.failure(str(path), e)

    table = Table(title="Roughness")
    table.add_column("File")
    table.add_column("Exponent")
    table.add_column("Transition um")
    for source, exponent, transition in rows:
        table.add_row(source, f"{exponent:.4f}", "-" if transition is None else f"{transition:g}")
    console.print(table)

    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(header_for(cfg))
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["file", "exponent", "transition_um"])
            for source, exponent, transition in rows:
                writer.writerow([source, f"{exponent:.6f}", "" if transition is None else f"{transition:g}"])
    collector.render(console)
    raise typer.Exit(collector.exit_code)


def print_tally(table, title: str) -> None:
    view = Table(title=title)
    for column in ("Model", "k", "False pos", "False neg", "True pos", "True neg"):
        view.add_column(column)
    for row in table:
        view.add_row(
            row.model, str(row.k), str(row.false_pos), str(row.false_neg), str(row.true_pos), str(row.true_neg),
        )
    console.print(view)


def main() -> None:
    """Entry point."""
    app()


if __name__ == "__main__":
    main()
