#pragma once

#include "dlda/tape.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace dlda {

// Flat parameter vector with named matrix slices. Slices are stored
// column-major and never overlap.
class ParameterStore {
 public:
  struct Slice {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    bool operator==(const Slice&) const = default;
  };

  // Appends a zero-initialised slice and returns its index.
  std::size_t add(std::string name, int rows, int cols);

  std::size_t size() const { return values_.size(); }
  const std::vector<Slice>& layout() const { return layout_; }
  const Slice& slice(std::size_t i) const { return layout_.at(i); }
  // Index of the slice with this name; throws if absent.
  std::size_t find(const std::string& name) const;

  Eigen::Map<const Eigen::MatrixXd> view(std::size_t i) const;
  Eigen::Map<Eigen::MatrixXd> view(std::size_t i);

  Eigen::Map<const Eigen::VectorXd> flat() const { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  Eigen::Map<Eigen::VectorXd> flat() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }

  // Checks bounds, disjointness and total size.
  bool layout_valid() const;

  bool operator==(const ParameterStore& other) const = default;

 private:
  std::vector<double> values_;
  std::vector<Slice> layout_;
};

// Exposes store slices as nodes on one tape, created on first use. With
// requires_grad the nodes are leaves and gradient() collects d(root)/d(theta)
// after Tape::backward.
class ParamSource {
 public:
  ParamSource(ad::Tape& tape, const ParameterStore& store, bool requires_grad);

  ad::Var get(std::size_t slice);
  ad::Tape& tape() { return *tape_; }
  const ParameterStore& store() const { return *store_; }
  bool requires_grad() const { return requires_grad_; }

  Eigen::VectorXd gradient() const;

 private:
  ad::Tape* tape_;
  const ParameterStore* store_;
  bool requires_grad_;
  std::vector<ad::Var> bound_;
};

}  // namespace dlda
