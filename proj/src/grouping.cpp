#include "gofslope/grouping.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "gofslope/errors.hpp"

namespace gofslope {

CellPartition::CellPartition(std::size_t cells) {
  if (cells == 0) throw InvalidArgument("cell count must be positive");
  boundaries_.resize(cells + 1);
  for (std::size_t m = 0; m <= cells; ++m) {
    boundaries_[m] = static_cast<double>(m) / static_cast<double>(cells);
  }
  boundaries_.back() = 1.0;
}

std::size_t CellPartition::cell_of(double u) const {
  const std::size_t n_cells = cells();
  if (u >= 1.0) return n_cells - 1;
  auto idx = static_cast<std::size_t>(std::floor(u * static_cast<double>(n_cells)));
  idx = std::min(idx, n_cells - 1);
  // floor(u*N) can land one cell off when u sits on a boundary m/N that is
  // not exactly representable.
  while (idx + 1 < n_cells && u >= boundaries_[idx + 1]) ++idx;
  while (idx > 0 && u < boundaries_[idx]) --idx;
  return idx;
}

GroupedCounts::GroupedCounts(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw InvalidArgument("grouped counts need at least one cell");
  for (auto c : counts_) {
    if (c < 0) throw InvalidArgument("cell counts must be non-negative");
  }
  n_ = std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

CellPartition make_equal_cells(std::size_t cells) { return CellPartition(cells); }

std::vector<double> transform_sample(std::span<const double> raw,
                                     const std::function<double(double)>& cdf) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double u = cdf(raw[i]);
    if (!(u >= 0.0 && u <= 1.0)) {
      throw InvalidArgument("cdf returned " + std::to_string(u) + " outside [0,1] at index " +
                            std::to_string(i));
    }
    out.push_back(u);
  }
  return out;
}

GroupedCounts count_occupancy(std::span<const double> sample, const CellPartition& partition) {
  std::vector<std::int64_t> counts(partition.cells(), 0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = sample[i];
    if (!(u >= 0.0 && u <= 1.0)) {
      throw InvalidArgument("sample value at index " + std::to_string(i) + " is outside [0,1]");
    }
    ++counts[partition.cell_of(u)];
  }
  return GroupedCounts(std::move(counts));
}

std::vector<double> read_samples(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": not a decimal number");
    }
    values.push_back(v);
  }
  return values;
}

std::vector<double> read_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open sample file " + path);
  return read_samples(in);
}

}  // namespace gofslope
