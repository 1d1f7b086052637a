"""Python bindings for the wsbert stance toolkit."""

from ._core import (
    Tokenizer,
    WsbertError,
    build_dual_texts,
    build_single_text,
    cache_lookup,
    emit_table,
    evaluate_vast,
    fit_single_budget,
    load_config,
    load_report_rows,
    macro_f1,
    make_fallback_record,
    partition_zero_few,
    round_one_decimal,
    run_experiment,
    select_grid_point,
    simulate_early_stopping,
    truncate_knowledge,
)

__all__ = [
    "Tokenizer",
    "WsbertError",
    "build_dual_texts",
    "build_single_text",
    "cache_lookup",
    "emit_table",
    "evaluate_vast",
    "fit_single_budget",
    "load_config",
    "load_report_rows",
    "macro_f1",
    "make_fallback_record",
    "partition_zero_few",
    "round_one_decimal",
    "run_experiment",
    "select_grid_point",
    "simulate_early_stopping",
    "truncate_knowledge",
]
