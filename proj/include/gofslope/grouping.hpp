#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gofslope {

/// Equal-probability partition of [0,1] into `cells()` half-open cells.
class CellPartition {
 public:
  explicit CellPartition(std::size_t cells);

  std::size_t cells() const { return boundaries_.size() - 1; }
  std::span<const double> boundaries() const { return boundaries_; }

  /// Index of the cell holding u; cells are [a,b) except that 1.0 belongs to
  /// the last cell.
  std::size_t cell_of(double u) const;

 private:
  std::vector<double> boundaries_;
};

/// Occupancy vector (η_1, …, η_N) together with the sample size n.
class GroupedCounts {
 public:
  GroupedCounts() = default;
  explicit GroupedCounts(std::vector<std::int64_t> counts);

  std::span<const std::int64_t> counts() const { return counts_; }
  std::int64_t operator[](std::size_t m) const { return counts_[m]; }
  std::size_t cells() const { return counts_.size(); }
  std::int64_t sample_size() const { return n_; }
  /// Expected count per cell under the null, n/N.
  double lambda() const { return static_cast<double>(n_) / static_cast<double>(counts_.size()); }
  /// n = 0; statistics refuse such counts.
  bool degenerate() const { return n_ == 0; }

  friend bool operator==(const GroupedCounts&, const GroupedCounts&) = default;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

CellPartition make_equal_cells(std::size_t cells);

/// Probability integral transform; throws if cdf leaves [0,1].
std::vector<double> transform_sample(std::span<const double> raw,
                                     const std::function<double(double)>& cdf);

/// Counts sample values per cell. Values outside [0,1] are rejected with their index.
GroupedCounts count_occupancy(std::span<const double> sample, const CellPartition& partition);

/// Newline-delimited decimal values; blank lines and '#' comments are skipped.
std::vector<double> read_samples(std::istream& in);
std::vector<double> read_sample_file(const std::string& path);

}  // namespace gofslope
