#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace graphite {

// Row-major sparse real matrix (CSR). Column indices within a row are sorted
// ascending and unique; explicit zeros are never stored.
class SparseRows {
 public:
  struct Row {
    std::span<const std::uint32_t> cols;
    std::span<const double> vals;
    std::size_t size() const { return cols.size(); }
    bool empty() const { return cols.empty(); }
  };

  SparseRows() : offsets_{0} {}
  explicit SparseRows(std::size_t width) : width_(width), offsets_{0} {}

  // Appends one row. Entries need not be sorted; zeros are skipped.
  // Duplicate columns are a programming error.
  void push_row(std::vector<std::pair<std::uint32_t, double>> entries);

  std::size_t num_rows() const { return offsets_.size() - 1; }
  std::size_t width() const { return width_; }
  std::size_t nnz() const { return cols_.size(); }

  Row row(std::size_t r) const {
    const auto b = offsets_[r];
    const auto e = offsets_[r + 1];
    return {std::span(cols_).subspan(b, e - b), std::span(vals_).subspan(b, e - b)};
  }

  // Value at (r, c), zero when absent.
  double at(std::size_t r, std::uint32_t c) const;

  bool operator==(const SparseRows&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
};

}  // namespace graphite
