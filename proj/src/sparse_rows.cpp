#include "graphite/sparse_rows.hpp"

#include <algorithm>
#include <cassert>

namespace graphite {

void SparseRows::push_row(std::vector<std::pair<std::uint32_t, double>> entries) {
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    assert(entries[i].first < width_);
    assert(i == 0 || entries[i].first != entries[i - 1].first);
    if (entries[i].second == 0.0) continue;
    cols_.push_back(entries[i].first);
    vals_.push_back(entries[i].second);
  }
  offsets_.push_back(cols_.size());
}

double SparseRows::at(std::size_t r, std::uint32_t c) const {
  const auto row_view = row(r);
  const auto it = std::lower_bound(row_view.cols.begin(), row_view.cols.end(), c);
  if (it == row_view.cols.end() || *it != c) return 0.0;
  return row_view.vals[static_cast<std::size_t>(it - row_view.cols.begin())];
}

}  // namespace graphite
