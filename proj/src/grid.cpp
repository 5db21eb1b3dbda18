#include "tabbin/grid.hpp"

#include <atomic>
#include <sstream>
#include <thread>

#include "tabbin/errors.hpp"

namespace tabbin {

std::string GridCell::name() const {
  std::ostringstream out;
  out << to_string(objective) << "_T" << bins << "_pm" << p_m << "_"
      << to_string(mode);
  std::string s = out.str();
  for (auto& c : s)
    if (c == '.') c = 'p';
  return s;
}

std::vector<GridCell> grid_cells(const GridAxes& axes) {
  if (axes.p_m.empty() || axes.bins.empty() || axes.objectives.empty() ||
      axes.modes.empty())
    throw ValidationError("every grid axis needs at least one value");
  std::vector<GridCell> cells;
  for (const auto obj : axes.objectives)
    for (const int t : axes.bins)
      for (const double p : axes.p_m)
        for (const auto mode : axes.modes)
          cells.push_back({obj, t, p, mode});
  return cells;
}

GridCellResult run_grid_cell(const GridRunContext& ctx, const GridCell& cell,
                             std::size_t cell_index) {
  GridCellResult result;
  result.cell = cell;
  try {
    SslRunConfig cfg = ctx.base;
    cfg.losses = {{cell.objective, 1.0}};
    cfg.corruption.p_m = cell.p_m;
    cfg.corruption.mode = cell.p_m > 0.0 ? cell.mode : ReplacementMode::none;
    cfg.seed = derive_seed(ctx.seed, "grid", cell_index);

    BinningSpec binning;
    const BinningSpec* binning_ptr = nullptr;
    if (needs_binning(cfg)) {
      binning = fit_binning(*ctx.ds, BinMethod::quantile, cell.bins);
      binning_ptr = &binning;
    }
    const PretrainResult trained = pretrain(*ctx.ds, *ctx.stdz, binning_ptr, cfg);
    result.report = linear_probe(trained.model.encoder, *ctx.ds, *ctx.stdz,
                                 ctx.probe, cfg.seed, Split::val);
    result.val_metric = result.report.mean;
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

std::vector<GridCellResult> run_grid_subset(const GridRunContext& ctx,
                                            const std::vector<GridCell>& cells,
                                            const std::vector<std::size_t>& todo,
                                            int threads) {
  if (ctx.ds == nullptr || ctx.stdz == nullptr)
    throw ValidationError("grid context needs a dataset and standardizer");
  for (const std::size_t i : todo)
    if (i >= cells.size())
      throw ValidationError("grid subset index out of range");
  if (threads < 1) threads = 1;
  std::vector<GridCellResult> results(todo.size());
  if (threads == 1 || todo.size() <= 1) {
    for (std::size_t k = 0; k < todo.size(); ++k)
      results[k] = run_grid_cell(ctx, cells[todo[k]], todo[k]);
    return results;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      results[k] = run_grid_cell(ctx, cells[todo[k]], todo[k]);
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(threads, static_cast<int>(todo.size()));
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::vector<GridCellResult> run_grid(const GridRunContext& ctx,
                                     const std::vector<GridCell>& cells,
                                     int threads) {
  std::vector<std::size_t> all(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) all[i] = i;
  return run_grid_subset(ctx, cells, all, threads);
}

int select_best(const std::vector<GridCellResult>& cells, bool higher_is_better) {
  int best = -1;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].failed) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& a = cells[i];
    const auto& b = cells[best];
    const bool better = higher_is_better ? a.val_metric > b.val_metric
                                         : a.val_metric < b.val_metric;
    const bool tie = a.val_metric == b.val_metric;
    if (better || (tie && (a.cell.bins < b.cell.bins ||
                           (a.cell.bins == b.cell.bins && a.cell.p_m < b.cell.p_m))))
      best = static_cast<int>(i);
  }
  return best;
}

std::string grid_csv(const std::vector<GridCellResult>& cells) {
  std::ostringstream out;
  out.precision(17);
  out << "cell,objective,bins,p_m,mode,status,val_metric,val_stddev,error\n";
  for (const auto& r : cells) {
    out << r.cell.name() << ',' << to_string(r.cell.objective) << ','
        << r.cell.bins << ',' << r.cell.p_m << ',' << to_string(r.cell.mode)
        << ',';
    if (r.failed) {
      std::string msg = r.error;
      for (auto& c : msg)
        if (c == ',' || c == '\n') c = ';';
      out << "failed,,," << msg << '\n';
    } else {
      out << "ok," << r.val_metric << ',' << r.report.stddev << ",\n";
    }
  }
  return out.str();
}

}  // namespace tabbin
