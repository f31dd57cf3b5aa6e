"""Block compressed sensing for sparse tensors: block-diagonal sensing,
coherence bounds, OMP / logit-weighted OMP and data-driven serial recovery."""
from .analysis import (BoundParams, BoundUndefinedError, bcs_welch_bound, block_coherence,
                       bound_curve, mutual_coherence, omp_mse_bound, welch_bound)
from .kernel_learning import CorrelationKernel, DatasetStats, average_sparsity, learn_kernel
from .partition import (PartitionMap, PartitionSpec, build_partition, factors_for, gather_block,
                        scatter_block)
from .recovery import (RecoveryConfig, RecoveryResult, SparseSolution, lw_omp, omp, parallel_bcs,
                       serial_bcs)
from .sensing import (BlockSensor, MeasurementSet, adjoint_block, apply_block, draw_sensor,
                      measure, scale_to_snr)
from .signals import ClusterSpec, generate_clustered, generate_dataset, nmse
from .tensor_core import convolve, extract_support, flat_index, multi_index

__version__ = "0.1.0"
