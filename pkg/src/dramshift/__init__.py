"""In-DRAM bidirectional shifting with migration-cell rows: a command-level,
bit-accurate simulator with energy/latency costing, a process-variation
reliability model and arithmetic kernels built on the shift."""

from .array import (
    DramGeometry, MemoryState, MigRow, MigrationPort, Port, RowAddress, SubarrayState,
    build_memory, host_read_row, host_write_row,
)
from .energy import (
    EnergyLedger, EnergyParams, RunStats, TimingParams, aggregate_throughput,
    baseline_movement_energy, cost_trace,
)
from .engine import (
    Command, CommandKind, CommandTrace, ExecutionReport, exec_aap, exec_not_xsub,
    exec_shift_left, exec_shift_right, exec_tra, run_trace,
)
from .kernels import KernelKind, compile_kernel, execute_kernel
from .reliability import (
    MarginModel, TechNodeParams, VariationTrial, mim_plate_area, monte_carlo, sense_margin,
    simulate_shift_trial,
)

__version__ = "0.1.0"
