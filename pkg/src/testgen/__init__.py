# Synthetic data generation

from .benchmarks import BENCHMARK_DIM, Benchmark, builtin_benchmark, builtin_benchmarks
from .factors import CATALOGUE, PARAMETERS, Factor, FactorKind, random_factor
from .functions import (
    analytic_pattern,
    build_function,
    gen_test_function,
    partition_sizes,
    random_component_edges,
    random_function_spec,
    separable_function,
)
from .matrices import (
    PROTOCOL_MAX_SIZE,
    MatrixInstance,
    gen_matrix_set,
    haar_rotation,
    random_instance_spec,
    random_pattern,
    sparse_family,
    symmetric_noise,
)
from .noise import MAX_NOISE_DIM, noise_function, noise_sampled_function

__all__ = [
    "BENCHMARK_DIM",
    "Benchmark",
    "builtin_benchmark",
    "builtin_benchmarks",
    "CATALOGUE",
    "PARAMETERS",
    "Factor",
    "FactorKind",
    "random_factor",
    "analytic_pattern",
    "build_function",
    "gen_test_function",
    "partition_sizes",
    "random_component_edges",
    "random_function_spec",
    "separable_function",
    "PROTOCOL_MAX_SIZE",
    "MatrixInstance",
    "gen_matrix_set",
    "haar_rotation",
    "random_instance_spec",
    "random_pattern",
    "sparse_family",
    "symmetric_noise",
    "MAX_NOISE_DIM",
    "noise_function",
    "noise_sampled_function",
]
