"""Deterministic dual-cluster transfer simulator with anomaly injection."""
from .anomaly import (
    DROP_BAND,
    IO_CLASSES,
    LABEL_CLASSES,
    SIM_ONLY_CLASSES,
    SWEEP_MENUS,
    AnomalyClass,
    AnomalySpec,
    buffer_limited_rate,
    feasible_drop_range,
    jitter_rate_factor,
    mathis_rate,
    spec_for_target_drop,
    sweep_spec,
)
from .dataset import (
    DatasetRow,
    build_run,
    generate_dataset,
    load_ndjson,
    run_rows,
    write_ndjson,
)
from .engine import (
    CompetitorLoad,
    Engine,
    SimRun,
    Snapshot,
    TransferJob,
    assemble_values,
    inject,
    minimal_row,
    step,
)
from .testbed import BUILTIN_TESTBEDS, TestbedSpec, builtin_testbeds, get_testbed

__all__ = [
    "DROP_BAND",
    "IO_CLASSES",
    "LABEL_CLASSES",
    "SIM_ONLY_CLASSES",
    "SWEEP_MENUS",
    "AnomalyClass",
    "AnomalySpec",
    "buffer_limited_rate",
    "feasible_drop_range",
    "jitter_rate_factor",
    "mathis_rate",
    "spec_for_target_drop",
    "sweep_spec",
    "DatasetRow",
    "build_run",
    "generate_dataset",
    "load_ndjson",
    "run_rows",
    "write_ndjson",
    "CompetitorLoad",
    "Engine",
    "SimRun",
    "Snapshot",
    "TransferJob",
    "assemble_values",
    "inject",
    "minimal_row",
    "step",
    "BUILTIN_TESTBEDS",
    "TestbedSpec",
    "builtin_testbeds",
    "get_testbed",
]
