#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilot/errors.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Named, ordered view over one flat parameter (or gradient) vector.
/// Segments are contiguous, non-overlapping and cover [0, total_length);
/// the ordering is fixed at construction, so flattening is deterministic.
class ParamView {
 public:
  ParamView() = default;

  /// Builds a view from (name, length) pairs; offsets follow declaration order.
  static ParamView from_segments(
      const std::vector<std::pair<std::string, std::size_t>>& name_len) {
    if (name_len.empty()) {
      throw ContractViolation("ParamView: empty segment list");
    }
    ParamView view;
    std::size_t offset = 0;
    for (const auto& [name, len] : name_len) {
      if (len == 0) {
        throw ContractViolation("ParamView: zero-length segment '" + name + "'");
      }
      view.segments_.push_back({name, offset, len});
      offset += len;
    }
    view.total_ = offset;
    return view;
  }

  std::size_t total_length() const { return total_; }
  const std::vector<ParamSegment>& segments() const { return segments_; }

  std::span<double> slice(DenseVector& flat, std::size_t index) const {
    const ParamSegment& seg = segments_.at(index);
    check_total(flat.size());
    return {flat.data() + seg.offset, seg.length};
  }

  std::span<const double> slice(const DenseVector& flat, std::size_t index) const {
    const ParamSegment& seg = segments_.at(index);
    check_total(flat.size());
    return {flat.data() + seg.offset, seg.length};
  }

 private:
  void check_total(std::size_t flat_len) const {
    if (flat_len != total_) {
      throw ContractViolation("ParamView: flat vector length " +
                              std::to_string(flat_len) + " does not match view total " +
                              std::to_string(total_));
    }
  }

  std::vector<ParamSegment> segments_;
  std::size_t total_ = 0;
};

/// Concatenates per-segment vectors into one flat vector in view order.
inline DenseVector flatten(const ParamView& view,
                           const std::vector<DenseVector>& parts) {
  if (parts.size() != view.segments().size()) {
    throw ContractViolation("flatten: expected " +
                            std::to_string(view.segments().size()) + " parts, got " +
                            std::to_string(parts.size()));
  }
  DenseVector flat(view.total_length());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const ParamSegment& seg = view.segments()[i];
    if (parts[i].size() != seg.length) {
      throw ContractViolation("flatten: segment '" + seg.name + "' expects length " +
                              std::to_string(seg.length) + ", got " +
                              std::to_string(parts[i].size()));
    }
    for (std::size_t j = 0; j < seg.length; ++j) flat[seg.offset + j] = parts[i][j];
  }
  return flat;
}

/// Splits a flat vector back into per-segment vectors. Exact inverse of flatten.
inline std::vector<DenseVector> unflatten(const ParamView& view,
                                          const DenseVector& flat) {
  if (flat.size() != view.total_length()) {
    throw ContractViolation("unflatten: flat length " + std::to_string(flat.size()) +
                            " does not match view total " +
                            std::to_string(view.total_length()));
  }
  std::vector<DenseVector> parts;
  parts.reserve(view.segments().size());
  for (const ParamSegment& seg : view.segments()) {
    parts.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(seg.offset),
                       flat.begin() + static_cast<std::ptrdiff_t>(seg.offset + seg.length));
  }
  return parts;
}

}  // namespace pilot
