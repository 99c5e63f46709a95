#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "magescan/behavior.hpp"
#include "magescan/errors.hpp"

namespace magescan {

// Row-major dense matrix; rows are feature vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  void push_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
      throw LengthMismatchError("row width " + std::to_string(values.size()) +
                                " does not match matrix width " +
                                std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Labeled feature vectors bound to one feature schema.
struct Dataset {
  Matrix x;
  std::vector<Label> y;
  std::string schema_id;

  std::size_t size() const { return x.rows(); }
  std::size_t dimension() const { return x.cols(); }

  std::size_t count_label(Label label) const {
    std::size_t n = 0;
    for (Label l : y) n += (l == label);
    return n;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.schema_id = schema_id;
    out.x = Matrix(indices.size(), x.cols());
    out.y.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      auto src = x.row(indices[k]);
      std::copy(src.begin(), src.end(), out.x.row(k).begin());
      out.y.push_back(y[indices[k]]);
    }
    return out;
  }
};

}  // namespace magescan
