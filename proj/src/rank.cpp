#include "tabbin/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tabbin/errors.hpp"

namespace tabbin {

std::vector<double> fractional_ranks(const std::vector<double>& values,
                                     bool higher_is_better) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_is_better ? values[a] > values[b] : values[a] < values[b];
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (1-based i+1..j+1) share the mean rank.
    const double mean = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> mean_ranks(const Matrix& scores,
                               const std::vector<bool>& higher_is_better) {
  if (static_cast<int>(higher_is_better.size()) != scores.cols())
    throw ValidationError("rank aggregation: one direction per column required");
  if (scores.rows() == 0 || scores.cols() == 0)
    throw ValidationError("rank aggregation: empty score table");

  std::vector<double> totals(scores.rows(), 0.0);
  std::vector<double> column(scores.rows());
  for (int j = 0; j < scores.cols(); ++j) {
    for (int i = 0; i < scores.rows(); ++i) column[i] = scores(i, j);
    const auto ranks = fractional_ranks(column, higher_is_better[j]);
    for (int i = 0; i < scores.rows(); ++i) totals[i] += ranks[i];
  }
  for (auto& t : totals) t /= scores.cols();
  return totals;
}

RankTable rank_aggregate(std::vector<std::string> methods,
                         std::vector<std::string> datasets, Matrix scores,
                         std::vector<bool> higher_is_better) {
  if (static_cast<int>(methods.size()) != scores.rows() ||
      static_cast<int>(datasets.size()) != scores.cols())
    throw ValidationError("rank table names do not match the score shape");
  for (int i = 0; i < scores.rows(); ++i)
    for (int j = 0; j < scores.cols(); ++j)
      if (!std::isfinite(scores(i, j)))
        throw ValidationError("rank table cell (" + methods[i] + ", " +
                              datasets[j] + ") is missing");

  RankTable table;
  table.methods = std::move(methods);
  table.datasets = std::move(datasets);
  table.scores = std::move(scores);
  table.higher_is_better = std::move(higher_is_better);

  table.ranks = Matrix(table.scores.rows(), table.scores.cols());
  std::vector<double> column(table.scores.rows());
  for (int j = 0; j < table.scores.cols(); ++j) {
    for (int i = 0; i < table.scores.rows(); ++i) column[i] = table.scores(i, j);
    const auto ranks = fractional_ranks(column, table.higher_is_better[j]);
    for (int i = 0; i < table.scores.rows(); ++i) table.ranks(i, j) = ranks[i];
  }
  table.average_ranks = mean_ranks(table.scores, table.higher_is_better);
  return table;
}

std::string rank_table_to_json(const RankTable& table) {
  nlohmann::ordered_json j;
  j["methods"] = table.methods;
  j["datasets"] = table.datasets;
  for (std::size_t i = 0; i < table.methods.size(); ++i) {
    nlohmann::ordered_json row;
    for (std::size_t k = 0; k < table.datasets.size(); ++k) {
      row["scores"][table.datasets[k]] = table.scores(static_cast<int>(i),
                                                      static_cast<int>(k));
      row["ranks"][table.datasets[k]] = table.ranks(static_cast<int>(i),
                                                    static_cast<int>(k));
    }
    row["average_rank"] = table.average_ranks[i];
    j["rows"][table.methods[i]] = row;
  }
  return j.dump(2) + "\n";
}

std::string rank_table_to_csv(const RankTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "method";
  for (const auto& d : table.datasets) out << ',' << d << ",rank_" << d;
  out << ",average_rank\n";
  for (std::size_t i = 0; i < table.methods.size(); ++i) {
    out << table.methods[i];
    for (std::size_t k = 0; k < table.datasets.size(); ++k)
      out << ',' << table.scores(static_cast<int>(i), static_cast<int>(k)) << ','
          << table.ranks(static_cast<int>(i), static_cast<int>(k));
    out << ',' << table.average_ranks[i] << '\n';
  }
  return out.str();
}

}  // namespace tabbin
