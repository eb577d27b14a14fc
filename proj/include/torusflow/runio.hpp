#pragma once

#include <filesystem>
#include <vector>

#include "torusflow/audit.hpp"
#include "torusflow/config.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/monitor.hpp"

namespace torusflow {

/// Writes the artifact set of a finished run into `dir`:
///   config.normalized.json    fully resolved configuration
///   record.jsonl              one sample row per line, fixed key order
///   termination.json          cause, exit code, final time, step counters
///   snapshots/NNNNNN.bin      raw little-endian float64 fields, row-major
///   snapshots/NNNNNN.json     sidecar: t, shape, dtype, endianness, fields
/// Snapshots are skipped when cfg.output.snapshots is false.
void write_run_dir(const std::filesystem::path& dir, const RunConfig& cfg,
                   const RunResult& result);

/// audit.jsonl (one row per audited triple) and audit_summary.json.
void write_audit_output(const std::filesystem::path& dir,
                        const AuditOutput& out);

/// monitor.jsonl (one row per sample, the constant pack replicated into
/// every row) and monitor_summary.json.
void write_monitor_output(const std::filesystem::path& dir,
                          const MonitorOutput& out);

void write_calibration(const std::filesystem::path& dir, double C);

struct StoredRun {
  RunConfig config;
  RunResult result;
};

/// Reloads config, sample record, termination data, and snapshots. Throws
/// missing_run when the directory or its record is absent, io_error on
/// malformed artifacts.
StoredRun read_run_dir(const std::filesystem::path& dir);

/// One CSV per time series (sup_rm, sup_ric, sup_alpha, area from the
/// record; u, margin_differential, margin_integral from the monitor rows
/// when present). Every file gets a header row even when the run is empty;
/// floats are written with 17 significant digits.
void emit_plot_data(const std::filesystem::path& run_dir,
                    const std::filesystem::path& out_dir);

} // namespace torusflow
