"""Semi-discrete optimal transport quantization."""

from ._sdquant import (
    DegenerateMeasureError,
    DiagonalError,
    GridDensity,
    build_disk_mixture,
    build_uniform_box,
    entropic_semidiscrete,
    lloyd_optimal,
    lloyd_uniform,
    load_pgm,
    max_sliced_semidiscrete,
    optimal_energy,
    region_stats,
    render_svg,
    sample_points,
    sliced_w2_discrete,
    solve_dual,
    tie_weights,
    uniform_energy,
    voronoi_partition,
    w2_1d_discrete,
)

__all__ = [
    "DegenerateMeasureError",
    "DiagonalError",
    "GridDensity",
    "build_disk_mixture",
    "build_uniform_box",
    "entropic_semidiscrete",
    "lloyd_optimal",
    "lloyd_uniform",
    "load_pgm",
    "max_sliced_semidiscrete",
    "optimal_energy",
    "region_stats",
    "render_svg",
    "sample_points",
    "sliced_w2_discrete",
    "solve_dual",
    "tie_weights",
    "uniform_energy",
    "voronoi_partition",
    "w2_1d_discrete",
]
