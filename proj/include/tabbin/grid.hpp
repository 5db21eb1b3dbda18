#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/evaluate.hpp"
#include "tabbin/train.hpp"

namespace tabbin {

struct GridAxes {
  std::vector<double> p_m = {0.0};
  std::vector<int> bins = {10};
  std::vector<SslObjective> objectives = {SslObjective::bin_recon};
  std::vector<ReplacementMode> modes = {ReplacementMode::none};
};

struct GridCell {
  SslObjective objective = SslObjective::bin_recon;
  int bins = 10;
  double p_m = 0.0;
  ReplacementMode mode = ReplacementMode::none;

  std::string name() const;  // directory-safe, unique within a grid
};

// Deterministic enumeration: objective, then T, then p_m, then mode.
std::vector<GridCell> grid_cells(const GridAxes& axes);

struct GridCellResult {
  GridCell cell;
  bool failed = false;
  std::string error;
  double val_metric = 0.0;
  RunReport report;  // probe on the validation split
};

struct GridRunContext {
  const Dataset* ds = nullptr;
  const Standardizer* stdz = nullptr;
  SslRunConfig base;  // epochs/lr/architecture; losses and corruption are
                      // overridden per cell
  ProbeConfig probe;
  std::uint64_t seed = 0;
};

// Pretrain with the cell's objective and corruption, then probe on the
// validation split. The cell seed is derived from the cell's position in the
// deterministic enumeration, so results do not depend on thread scheduling.
GridCellResult run_grid_cell(const GridRunContext& ctx, const GridCell& cell,
                             std::size_t cell_index);

// Runs every cell, optionally across worker threads. Results keep
// enumeration order.
std::vector<GridCellResult> run_grid(const GridRunContext& ctx,
                                     const std::vector<GridCell>& cells,
                                     int threads = 1);

// Runs only cells[i] for i in todo (used to resume a partial grid). Cell
// seeds still come from the position in the full enumeration, so a resumed
// grid matches a fresh one. Results follow the order of todo.
std::vector<GridCellResult> run_grid_subset(const GridRunContext& ctx,
                                            const std::vector<GridCell>& cells,
                                            const std::vector<std::size_t>& todo,
                                            int threads = 1);

// Best finished cell by validation metric; ties broken by smaller T, then
// smaller p_m. Returns -1 when every cell failed.
int select_best(const std::vector<GridCellResult>& cells, bool higher_is_better);

std::string grid_csv(const std::vector<GridCellResult>& cells);

}  // namespace tabbin
