#include "evoloss/dense_array.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "evoloss/errors.hpp"

namespace evoloss {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ValueError("DenseArray dimensions must be positive");
    n *= d;
  }
  return n;
}
}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  cols_cache_ = shape_.empty() ? 0 : shape_.back();
}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("DenseArray: shape " + shape_str(shape_) + " expects " +
                     std::to_string(shape_product(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
  cols_cache_ = shape_.empty() ? 0 : shape_.back();
}

DenseArray DenseArray::zeros(std::vector<std::size_t> shape) {
  return DenseArray(std::move(shape));
}

DenseArray DenseArray::full(std::vector<std::size_t> shape, double value) {
  DenseArray a(std::move(shape));
  for (double& v : a.data_) v = value;
  return a;
}

DenseArray DenseArray::scalar(double value) {
  return DenseArray({1}, {value});
}

DenseArray DenseArray::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return DenseArray({n}, std::move(values));
}

std::size_t DenseArray::rows() const {
  if (rank() != 2) throw ShapeError("rows(): array " + shape_str() + " is not rank-2");
  return shape_[0];
}

std::size_t DenseArray::cols() const {
  if (rank() != 2) throw ShapeError("cols(): array " + shape_str() + " is not rank-2");
  return shape_[1];
}

DenseArray DenseArray::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != data_.size()) {
    throw ShapeError("reshape: cannot view " + shape_str() + " as " + shape_str(shape));
  }
  return DenseArray(std::move(shape), data_);
}

bool DenseArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string DenseArray::shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void throw_shape_mismatch(const std::string& op, const DenseArray& a,
                          const DenseArray& b) {
  throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " +
                   b.shape_str());
}

DenseArray matmul(const DenseArray& a, const DenseArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw_shape_mismatch("matmul", a, b);
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseArray c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

DenseArray matmul_tn(const DenseArray& a, const DenseArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw_shape_mismatch("matmul_tn", a, b);
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseArray c({k, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    const double* brow = pb + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = pc + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

DenseArray matmul_nt(const DenseArray& a, const DenseArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw_shape_mismatch("matmul_nt", a, b);
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  DenseArray c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = s;
    }
  }
  return c;
}

void add_rowvec_inplace(DenseArray& m, const DenseArray& v) {
  if (m.rank() != 2 || v.rank() != 1 || v.size() != m.cols()) {
    throw_shape_mismatch("add_rowvec", m, v);
  }
  const std::size_t rows = m.rows(), n = m.cols();
  double* pm = m.data();
  const double* pv = v.data();
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = pm + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += pv[j];
  }
}

DenseArray relu(const DenseArray& x) {
  DenseArray y = x;
  for (double& v : y.values()) {
    if (v < 0.0) v = 0.0;
  }
  return y;
}

DenseArray segment_mean_rows(const DenseArray& x, std::size_t segment) {
  if (x.rank() != 2 || segment == 0 || x.rows() % segment != 0) {
    throw ShapeError("segment_mean_rows: rows of " + x.shape_str() +
                     " not divisible by segment " + std::to_string(segment));
  }
  const std::size_t groups = x.rows() / segment, n = x.cols();
  DenseArray out({groups, n});
  const double inv = 1.0 / static_cast<double>(segment);
  for (std::size_t g = 0; g < groups; ++g) {
    double* orow = out.data() + g * n;
    for (std::size_t s = 0; s < segment; ++s) {
      const double* xrow = x.data() + (g * segment + s) * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xrow[j];
    }
    for (std::size_t j = 0; j < n; ++j) orow[j] *= inv;
  }
  return out;
}

}  // namespace evoloss
