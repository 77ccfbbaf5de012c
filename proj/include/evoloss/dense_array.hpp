#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace evoloss {

// Row-major dense array of 64-bit floats. The carrier type for every tensor
// in the project: clips, activations, parameters, embeddings.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray zeros(std::vector<std::size_t> shape);
  static DenseArray full(std::vector<std::size_t> shape, double value);
  static DenseArray scalar(double value);
  static DenseArray vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors. rows()/cols() require rank() == 2.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_cache_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_cache_ + c]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  // Same data, new shape; element count must match.
  DenseArray reshaped(std::vector<std::size_t> shape) const;

  bool all_finite() const;
  bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }

  static std::string shape_str(const std::vector<std::size_t>& shape);
  std::string shape_str() const { return shape_str(shape_); }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::size_t cols_cache_ = 0;  // shape_.back() when rank >= 1
};

// Dense kernels shared by the autodiff tape and the plain inference path.
// All matrices are rank-2 row-major.

// c = a * b
DenseArray matmul(const DenseArray& a, const DenseArray& b);
// c = a^T * b
DenseArray matmul_tn(const DenseArray& a, const DenseArray& b);
// c = a * b^T
DenseArray matmul_nt(const DenseArray& a, const DenseArray& b);
// Adds the row vector v to every row of m, in place.
void add_rowvec_inplace(DenseArray& m, const DenseArray& v);
// max(0, x) elementwise.
DenseArray relu(const DenseArray& x);
// Mean over groups of `segment` consecutive rows: [g*segment, c] -> [g, c].
DenseArray segment_mean_rows(const DenseArray& x, std::size_t segment);

void throw_shape_mismatch(const std::string& op, const DenseArray& a,
                          const DenseArray& b);

}  // namespace evoloss
