"""One handler per subcommand.

A handler takes the validated RunConfig and an ArtifactWriter, writes its
files and returns the warnings that should turn the exit status into 3.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

from ..core.errors import ConfigError
from ..core.generator import SubshiftKind, SubshiftSpec
from ..core.words import SymbolWindow
from ..lyapunov import lyapunov_sweep
from ..oracle import chain_eigenvalues
from ..sequences import (
    factor_statistics,
    format_tokens,
    generate_word,
    is_fibonacci,
    pair_periodicity,
    read_word,
)
from ..sl_core import weights_from_spheres
from ..spectrum import assemble_spectrum, floquet_bands, indicator_samples
from ..tracemap import escape_band_set, measure_decay_curve
from ..weyl import borg_marchenko_decay, m_function_grid
from .models import RunConfig
from .output import ArtifactWriter

logger = logging.getLogger(__name__)

MAX_FACTOR_LENGTH = 5


@dataclass
class CommandResult:
    warnings: List[str] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.warnings)


Handler = Callable[[RunConfig, ArtifactWriter], CommandResult]


def resolve_spec(config: RunConfig) -> SubshiftSpec:
    if config.word_file is not None:
        window = read_word(config.word_file)
        return SubshiftSpec(
            kind=SubshiftKind.EXPLICIT, word=list(window.data), origin=window.origin
        )
    if config.spec is None:
        raise ConfigError(
            "no subshift given; use --preset, --word or a [subshift] config section"
        )
    return config.spec


def load_window(config: RunConfig, origin: int, length: int) -> SymbolWindow:
    """The word file verbatim, or a generated window [origin, origin + length)."""
    if config.word_file is not None:
        return read_word(config.word_file)
    return generate_word(resolve_spec(config), origin, length)


def _band_rows(intervals: List[Tuple[float, float]]) -> List[Dict[str, float]]:
    return [{"lo": lo, "hi": hi} for lo, hi in intervals]


def run_word(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    window = load_window(config, config.origin, config.length)
    profile = weights_from_spheres(window, config.mode)
    writer.text("word.txt", format_tokens({"origin": window.origin}, window.data))
    writer.text(
        "profile.txt",
        format_tokens(
            {"origin": profile.origin, "mode": profile.mode.value}, profile.weights
        ),
    )

    rows = []
    complexity = {}
    for n in range(1, min(MAX_FACTOR_LENGTH, len(window) // 10) + 1):
        stats = factor_statistics(window, n)
        complexity[str(n)] = stats.complexity
        for factor, frequency in sorted(stats.frequencies.items()):
            rows.append(
                {"n": n, "factor": " ".join(map(str, factor)), "frequency": frequency}
            )
    writer.csv("factors.csv", rows, columns=["n", "factor", "frequency"])

    pair_period, word_period = pair_periodicity(window)
    writer.json(
        "summary.json",
        {
            "spec": resolve_spec(config).label,
            "origin": window.origin,
            "length": len(window),
            "pair_period": pair_period,
            "word_period": word_period,
            "complexity": complexity,
        },
    )
    return CommandResult()


def run_lyapunov(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    estimates = lyapunov_sweep(
        resolve_spec(config),
        config.energy_grid(),
        n_steps=config.n_steps,
        n_bases=config.n_bases,
        mode=config.mode,
        workers=config.workers,
    )
    writer.csv(
        "lyapunov.csv",
        [e.as_row() for e in estimates],
        columns=["E", "L_hat", "spread", "n_steps", "classification"],
    )
    return CommandResult()


def _fibonacci_letters(config: RunConfig) -> Tuple[int, int]:
    letters = is_fibonacci(resolve_spec(config))
    if letters is None:
        raise ConfigError("trace needs a substitution of the form a -> ab, b -> a")
    return letters


def run_trace(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    letters = _fibonacci_letters(config)
    cover = escape_band_set(
        config.e_lo,
        config.e_hi,
        config.n_max,
        config.tol,
        config.mode,
        letters,
        config.cocycle,
    )
    writer.csv("bands.csv", _band_rows(cover.intervals), columns=["lo", "hi"])
    writer.json(
        "summary.json",
        {
            "N": config.n_max,
            "tol": config.tol,
            "total_measure": cover.total_measure,
            "mode": config.mode.value,
            "cocycle": config.cocycle.value,
            "conservative": cover.conservative,
        },
    )
    if config.n_min is not None:
        curve = measure_decay_curve(
            config.e_lo,
            config.e_hi,
            range(config.n_min, config.n_max + 1),
            config.tol,
            config.mode,
            letters,
            config.cocycle,
        )
        writer.csv(
            "measure_curve.csv",
            [{"N": n, "total_measure": m} for n, m in curve],
            columns=["N", "total_measure"],
        )
    result = CommandResult()
    if cover.conservative:
        result.warnings.append("escape cover ran out of budget and over-covers")
    return result


def period_word(config: RunConfig) -> SymbolWindow:
    """Period of a periodic spec or word file, else the approximant prefix."""
    if config.word_file is not None:
        return SymbolWindow.from_sequence(read_word(config.word_file).data)
    spec = resolve_spec(config)
    if spec.kind == SubshiftKind.PERIODIC:
        assert spec.word is not None
        return SymbolWindow.from_sequence(spec.word)
    return generate_word(spec, 0, config.approximant_length)


def run_bands(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    word = period_word(config)
    bands = floquet_bands(
        word, config.mode, config.e_lo, config.e_hi, config.tol, workers=config.workers
    )
    writer.csv("bands.csv", _band_rows(bands.intervals), columns=["lo", "hi"])
    writer.json(
        "summary.json",
        {
            "period": word.to_text(),
            "tol": config.tol,
            "total_measure": bands.total_measure,
            "mode": config.mode.value,
            "conservative": bands.conservative,
        },
    )
    result = CommandResult()
    if bands.conservative:
        result.warnings.append("some band edges did not converge; bands over-cover")
    return result


def run_weyl(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    profile = weights_from_spheres(load_window(config, 0, config.length), config.mode)
    samples = m_function_grid(profile, config.z_grid(), config.tol, config.precision)
    writer.csv(
        "weyl.csv",
        [s.as_row() for s in samples],
        columns=["Re z", "Im z", "Re m", "Im m", "radius_bound", "b"],
    )
    result = CommandResult()
    stuck = sum(1 for s in samples if not s.converged)
    if stuck:
        result.warnings.append(
            f"{stuck} m-function samples did not reach tol={config.tol}"
        )
    return result


def flipped(window: SymbolWindow, index: int) -> SymbolWindow:
    """Copy of window with s[index] replaced by the next symbol of its alphabet."""
    symbols = window.alphabet.symbols
    if len(symbols) < 2:
        raise ConfigError("bm needs a window with at least two distinct symbols")
    if not window.origin <= index < window.end:
        raise ConfigError(f"bm index {index} lies outside the window")
    data = list(window.data)
    i = index - window.origin
    data[i] = symbols[(symbols.index(data[i]) + 1) % len(symbols)]
    return SymbolWindow(origin=window.origin, data=tuple(data))


def run_bm(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    window = load_window(config, 0, config.length)
    # agree on [0, k], differ at k + 1
    partner = flipped(window, config.bm_k + 1)
    fit = borg_marchenko_decay(window, partner, config.bm_alpha, mode=config.mode)
    writer.json("decay.json", fit.model_dump(mode="json"))
    return CommandResult()


def run_spectrum(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    report = assemble_spectrum(
        resolve_spec(config),
        E_max=config.e_hi,
        N=config.n_max,
        tol=config.tol,
        mode=config.mode,
        two_sided=config.two_sided,
        window_length=config.length,
        approximant_length=config.approximant_length,
    )
    writer.json(
        "spectrum.json",
        {
            "bands": report.assembled.intervals,
            "continuum": report.continuum.intervals,
            "sigma1": report.sigma1_values,
            "sigma2": report.sigma2_values,
            "total_measure": report.assembled.total_measure,
            "params": report.params,
        },
    )
    writer.csv(
        "continuum.csv", _band_rows(report.continuum.intervals), columns=["lo", "hi"]
    )
    rows = [
        {
            "kind": g.kind,
            "triple": " ".join(map(str, g.triple)) if g.triple else "",
            "E": e,
            "multiplicity": g.multiplicity,
            "occurrences": g.occurrences,
        }
        for g in report.sigma1 + report.sigma2
        for e in g.eigenvalues
    ]
    writer.csv(
        "eigenvalues.csv",
        rows,
        columns=["kind", "triple", "E", "multiplicity", "occurrences"],
    )
    samples = indicator_samples(report.assembled, config.energy_grid())
    writer.csv(
        "indicator.csv",
        [{"E": e, "indicator": v} for e, v in samples],
        columns=["E", "indicator"],
    )

    result = CommandResult()
    if report.continuum.conservative:
        result.warnings.append("continuum part over-covers (budget exhausted)")
    return result


def run_oracle(config: RunConfig, writer: ArtifactWriter) -> CommandResult:
    window = load_window(config, config.origin, config.length)
    values = chain_eigenvalues(window, config.mode, config.M, config.e_lo, config.e_hi)
    writer.csv(
        "eigenvalues.csv",
        [{"index": i, "E": e} for i, e in enumerate(values)],
        columns=["index", "E"],
    )
    return CommandResult()


COMMANDS: Dict[str, Tuple[Handler, str]] = {
    "word": (run_word, "window, weight profile and factor statistics"),
    "lyapunov": (run_lyapunov, "Lyapunov exponent sweep over the energy grid"),
    "trace": (run_trace, "bounded-orbit band cover from the Fibonacci trace map"),
    "bands": (run_bands, "Floquet bands of a periodic word or approximant"),
    "weyl": (run_weyl, "m-function on a grid of z"),
    "bm": (run_bm, "local Borg-Marchenko decay fit"),
    "spectrum": (run_spectrum, "assembled spectrum report"),
    "oracle": (run_oracle, "finite-difference eigenvalues of the truncated chain"),
}
