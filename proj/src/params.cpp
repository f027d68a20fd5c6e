#include "dlda/params.hpp"

#include "dlda/error.hpp"

#include <algorithm>

namespace dlda {

std::size_t ParameterStore::add(std::string name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionError("ParameterStore::add: empty slice " + name);
  for (const Slice& s : layout_) {
    if (s.name == name) throw ConfigError("duplicate parameter slice " + name);
  }
  Slice s{std::move(name), values_.size(), rows, cols};
  values_.resize(values_.size() + s.size(), 0.0);
  layout_.push_back(std::move(s));
  return layout_.size() - 1;
}

std::size_t ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return i;
  }
  throw ConfigError("no parameter slice named " + name);
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::view(std::size_t i) const {
  const Slice& s = layout_.at(i);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::view(std::size_t i) {
  const Slice& s = layout_.at(i);
  return {values_.data() + s.offset, s.rows, s.cols};
}

bool ParameterStore::layout_valid() const {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t total = 0;
  for (const Slice& s : layout_) {
    if (s.offset + s.size() > values_.size()) return false;
    ranges.emplace_back(s.offset, s.offset + s.size());
    total += s.size();
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) return false;
  }
  return total == values_.size();
}

ParamSource::ParamSource(ad::Tape& tape, const ParameterStore& store, bool requires_grad)
    : tape_(&tape), store_(&store), requires_grad_(requires_grad), bound_(store.layout().size()) {}

ad::Var ParamSource::get(std::size_t slice) {
  ad::Var& v = bound_.at(slice);
  if (!v) {
    ad::Mat m = store_->view(slice);
    v = requires_grad_ ? tape_->leaf(std::move(m)) : tape_->constant(std::move(m));
  }
  return v;
}

Eigen::VectorXd ParamSource::gradient() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(store_->size()));
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i]) continue;
    const auto& s = store_->slice(i);
    const ad::Mat gi = tape_->grad(bound_[i]);
    g.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.size())) =
        Eigen::Map<const Eigen::VectorXd>(gi.data(), gi.size());
  }
  return g;
}

}  // namespace dlda
