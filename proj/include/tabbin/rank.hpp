#pragma once

#include <vector>

#include "tabbin/matrix.hpp"

namespace tabbin {

// Fractional ranks: the best value gets rank 1 and ties share the mean of the
// positions they cover, e.g. (0.9, 0.9, 0.7) -> (1.5, 1.5, 3.0) when higher
// is better.
std::vector<double> fractional_ranks(const std::vector<double>& values,
                                     bool higher_is_better);

// scores is (methods x settings). Each column is ranked independently with
// its own direction; the result is the mean rank per method row.
std::vector<double> mean_ranks(const Matrix& scores,
                               const std::vector<bool>& higher_is_better);

// Methods-by-datasets comparison with per-dataset fractional ranks and the
// aggregate average rank per method.
struct RankTable {
  std::vector<std::string> methods;    // row names
  std::vector<std::string> datasets;   // column names
  Matrix scores;                       // methods x datasets, no missing cells
  std::vector<bool> higher_is_better;  // per dataset column
  Matrix ranks;                        // filled by rank_aggregate
  std::vector<double> average_ranks;   // per method, in [1, methods]
};

RankTable rank_aggregate(std::vector<std::string> methods,
                         std::vector<std::string> datasets, Matrix scores,
                         std::vector<bool> higher_is_better);

std::string rank_table_to_json(const RankTable& table);
std::string rank_table_to_csv(const RankTable& table);

}  // namespace tabbin
