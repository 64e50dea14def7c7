#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seginr/common.hpp"

namespace seginr {

struct ParamView {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
};

// One flat f64 vector holding every model parameter, carved into named
// matrix views. Views are appended once at model construction and tile the
// vector exactly; checkpoints write them in this order.
class ParamVector {
 public:
  std::size_t add_view(std::string name, std::size_t rows, std::size_t cols) {
    ParamView v{std::move(name), values_.size(), rows, cols};
    values_.resize(values_.size() + v.size(), 0.0);
    views_.push_back(std::move(v));
    return views_.size() - 1;
  }

  std::span<double> view(std::size_t id) {
    const ParamView& v = views_[id];
    return {values_.data() + v.offset, v.size()};
  }
  std::span<const double> view(std::size_t id) const {
    const ParamView& v = views_[id];
    return {values_.data() + v.offset, v.size()};
  }

  // Lookup by name; intended for tooling and tests, not hot paths.
  std::span<const double> view(std::string_view name) const {
    for (const ParamView& v : views_)
      if (v.name == name) return {values_.data() + v.offset, v.size()};
    throw Error("no parameter view named '" + std::string(name) + "'");
  }

  const ParamView& view_spec(std::size_t id) const { return views_[id]; }
  std::size_t view_count() const { return views_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<double> values_;
  std::vector<ParamView> views_;
};

}  // namespace seginr
