#pragma once

// Linear measurement operators y = A x together with an SVD A = U diag(s) V^T.
//
// Images are flattened channel-planar: index = (c * height + row) * width + col.
// Structured operators never form a dense N x N matrix; their SVD is exposed
// through projection/lift methods. Dense factors can be materialized on demand
// for small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dmps/types.hpp"

namespace dmps {

struct ImageShape {
  Index height = 0;
  Index width = 0;
  Index channels = 1;

  Index pixels() const { return height * width; }
  Index size() const { return channels * height * width; }

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

inline void validate(const ImageShape& shape) {
  require(shape.height > 0 && shape.width > 0, ErrorKind::invalid_range,
          "image dimensions must be positive");
  require(shape.channels == 1 || shape.channels == 3, ErrorKind::channel_count,
          "images have 1 or 3 channels");
}

enum class OperatorKind { identity, mask, block_avg_sr, separable_blur, colorize_avg, dense };

inline const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::identity: return "identity";
    case OperatorKind::mask: return "mask";
    case OperatorKind::block_avg_sr: return "block_avg_sr";
    case OperatorKind::separable_blur: return "separable_blur";
    case OperatorKind::colorize_avg: return "colorize_avg";
    case OperatorKind::dense: return "dense";
  }
  return "unknown";
}

namespace detail {

/// Implementation contract shared by every operator kind. Rank r is always
/// min(rows, cols); singular values are nonincreasing.
class OperatorImpl {
 public:
  virtual ~OperatorImpl() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_transpose(const Vector& y) const = 0;

  virtual const Vector& singular_values() const = 0;
  virtual Vector left_project(const Vector& y) const = 0;   // U^T y
  virtual Vector right_project(const Vector& x) const = 0;  // V^T x
  virtual Vector left_lift(const Vector& z) const = 0;      // U z
  virtual Vector right_lift(const Vector& z) const = 0;     // V z

  // Squared row norms of A; used by the row-orthogonal special case.
  virtual Vector row_norms_squared() const = 0;
  // True when A A^T is diagonal by construction.
  virtual bool rows_orthogonal_by_construction() const { return false; }

  virtual Matrix to_dense() const {
    Matrix a(rows(), cols());
    Vector e = Vector::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
      e[j] = 1.0;
      a.col(j) = apply(e);
      e[j] = 0.0;
    }
    return a;
  }

  Matrix dense_u() const {
    const Index r = singular_values().size();
    Matrix u(rows(), r);
    Vector e = Vector::Zero(r);
    for (Index k = 0; k < r; ++k) {
      e[k] = 1.0;
      u.col(k) = left_lift(e);
      e[k] = 0.0;
    }
    return u;
  }

  Matrix dense_vt() const {
    const Index r = singular_values().size();
    Matrix vt(r, cols());
    Vector e = Vector::Zero(r);
    for (Index k = 0; k < r; ++k) {
      e[k] = 1.0;
      vt.row(k) = right_lift(e).transpose();
      e[k] = 0.0;
    }
    return vt;
  }
};

/// Operators whose rows are weight * indicator(group) over disjoint index
/// groups: identity, masks, block-average SR and channel averaging all share
/// this form. Then U = I, V^T rows are the normalized indicators and every
/// singular value is weight * sqrt(|group|).
class GroupAverageImpl final : public OperatorImpl {
 public:
  GroupAverageImpl(Index cols, std::vector<std::vector<Index>> groups, double weight)
      : cols_(cols), groups_(std::move(groups)), weight_(weight) {
    const auto m = static_cast<Index>(groups_.size());
    singular_values_.resize(m);
    inv_sqrt_size_.resize(m);
    for (Index i = 0; i < m; ++i) {
      const double size = static_cast<double>(groups_[static_cast<std::size_t>(i)].size());
      singular_values_[i] = weight_ * std::sqrt(size);
      inv_sqrt_size_[i] = 1.0 / std::sqrt(size);
    }
  }

  Index rows() const override { return static_cast<Index>(groups_.size()); }
  Index cols() const override { return cols_; }

  Vector apply(const Vector& x) const override { return gather(x, weight_); }
  Vector apply_transpose(const Vector& y) const override {
    return scatter(y.cwiseProduct(Vector::Constant(y.size(), weight_)));
  }

  const Vector& singular_values() const override { return singular_values_; }
  Vector left_project(const Vector& y) const override { return y; }
  Vector left_lift(const Vector& z) const override { return z; }
  Vector right_project(const Vector& x) const override {
    return gather(x, 1.0).cwiseProduct(inv_sqrt_size_);
  }
  Vector right_lift(const Vector& z) const override {
    return scatter(z.cwiseProduct(inv_sqrt_size_));
  }

  Vector row_norms_squared() const override { return singular_values_.cwiseAbs2(); }
  bool rows_orthogonal_by_construction() const override { return true; }

 private:
  Vector gather(const Vector& x, double scale) const {
    Vector out(rows());
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      double sum = 0.0;
      for (Index j : groups_[i]) sum += x[j];
      out[static_cast<Index>(i)] = scale * sum;
    }
    return out;
  }

  Vector scatter(const Vector& values) const {
    Vector out = Vector::Zero(cols_);
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      for (Index j : groups_[i]) out[j] += values[static_cast<Index>(i)];
    }
    return out;
  }

  Index cols_;
  std::vector<std::vector<Index>> groups_;
  double weight_;
  Vector singular_values_;
  Vector inv_sqrt_size_;
};

/// Real SVD of a 1-D circulant matrix built from the real Fourier basis.
struct CirculantSvd {
  Matrix u;  // n x n
  Vector s;  // length n, natural (frequency) order, not sorted
  Matrix v;  // n x n
};

/// Circulant C with (C x)_i = sum_m kernel[m] * x[(i + m - half) mod n].
inline Matrix circulant_matrix(const std::vector<double>& kernel, Index n) {
  const auto half = static_cast<Index>(kernel.size() / 2);
  Matrix c = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < kernel.size(); ++m) {
      const Index col = ((i + static_cast<Index>(m) - half) % n + n) % n;
      c(i, col) += kernel[m];
    }
  }
  return c;
}

inline CirculantSvd circulant_svd(const std::vector<double>& kernel, Index n) {
  // First row g of C: C(i, l) = g[(l - i) mod n]; eigenvalue for frequency k
  // is lambda_k = sum_d g[d] exp(2 pi i k d / n) with eigenvector exp(2 pi i k l / n).
  const auto half = static_cast<Index>(kernel.size() / 2);
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (std::size_t m = 0; m < kernel.size(); ++m) {
    const Index d = ((static_cast<Index>(m) - half) % n + n) % n;
    g[static_cast<std::size_t>(d)] += kernel[m];
  }
  CirculantSvd out{Matrix::Zero(n, n), Vector::Zero(n), Matrix::Zero(n, n)};
  const double two_pi_over_n = 2.0 * std::numbers::pi / static_cast<double>(n);
  auto eigenvalue = [&](Index k) {
    double re = 0.0;
    double im = 0.0;
    for (Index d = 0; d < n; ++d) {
      const double phase = two_pi_over_n * static_cast<double>((k * d) % n);
      re += g[static_cast<std::size_t>(d)] * std::cos(phase);
      im += g[static_cast<std::size_t>(d)] * std::sin(phase);
    }
    return std::pair{re, im};
  };
  auto basis = [&](Index k, bool sine) {
    Vector b(n);
    for (Index l = 0; l < n; ++l) {
      const double phase = two_pi_over_n * static_cast<double>((k * l) % n);
      b[l] = sine ? std::sin(phase) : std::cos(phase);
    }
    return b.normalized();
  };
  for (Index k = 0; 2 * k <= n; ++k) {
    const auto [re, im] = eigenvalue(k);
    if (k == 0 || 2 * k == n) {
      // Real eigenvalue: sign goes into U so the singular value stays >= 0.
      const Vector c = basis(k, false);
      out.v.col(k) = c;
      out.u.col(k) = (re < 0.0 ? -1.0 : 1.0) * c;
      out.s[k] = std::abs(re);
      continue;
    }
    // Frequencies k and n-k share the plane spanned by cos/sin; C acts there
    // as |lambda| times a rotation by arg(lambda).
    const Vector c = basis(k, false);
    const Vector s = basis(k, true);
    const double mag = std::hypot(re, im);
    const double cos_phi = mag > 0.0 ? re / mag : 1.0;
    const double sin_phi = mag > 0.0 ? im / mag : 0.0;
    const Index k2 = n - k;
    out.v.col(k) = c;
    out.v.col(k2) = s;
    out.u.col(k) = cos_phi * c - sin_phi * s;
    out.u.col(k2) = sin_phi * c + cos_phi * s;
    out.s[k] = mag;
    out.s[k2] = mag;
  }
  return out;
}

/// Per-channel 2-D blur K = C_h (x) C_w with circular boundary. The SVD is
/// the Kronecker product of the 1-D circulant SVDs, reordered so singular
/// values are nonincreasing (stable in the natural index on ties).
class SeparableBlurImpl final : public OperatorImpl {
 public:
  SeparableBlurImpl(const ImageShape& shape, std::vector<double> kernel)
      : shape_(shape), kernel_(std::move(kernel)) {
    rows_svd_ = circulant_svd(kernel_, shape_.height);
    cols_svd_ = circulant_svd(kernel_, shape_.width);
    const Index n = shape_.size();
    Vector natural(n);
    for (Index c = 0; c < shape_.channels; ++c) {
      for (Index i = 0; i < shape_.height; ++i) {
        for (Index j = 0; j < shape_.width; ++j) {
          natural[flat(c, i, j)] = rows_svd_.s[i] * cols_svd_.s[j];
        }
      }
    }
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), Index{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](Index a, Index b) { return natural[a] > natural[b]; });
    singular_values_.resize(n);
    for (Index p = 0; p < n; ++p) singular_values_[p] = natural[order_[static_cast<std::size_t>(p)]];
    // Circular wrap can fold taps together when the kernel spans the whole
    // axis, so take norms from the actual circulant rows.
    const double row_norm_sq = circulant_matrix(kernel_, shape_.height).row(0).squaredNorm() *
                               circulant_matrix(kernel_, shape_.width).row(0).squaredNorm();
    row_norms_sq_ = Vector::Constant(n, row_norm_sq);
  }

  Index rows() const override { return shape_.size(); }
  Index cols() const override { return shape_.size(); }

  Vector apply(const Vector& x) const override { return filter(x, false); }
  Vector apply_transpose(const Vector& y) const override { return filter(y, true); }

  const Vector& singular_values() const override { return singular_values_; }

  Vector left_project(const Vector& y) const override {
    return to_sorted(sandwich(y, rows_svd_.u, cols_svd_.u, true));
  }
  Vector right_project(const Vector& x) const override {
    return to_sorted(sandwich(x, rows_svd_.v, cols_svd_.v, true));
  }
  Vector left_lift(const Vector& z) const override {
    return sandwich(from_sorted(z), rows_svd_.u, cols_svd_.u, false);
  }
  Vector right_lift(const Vector& z) const override {
    return sandwich(from_sorted(z), rows_svd_.v, cols_svd_.v, false);
  }

  Vector row_norms_squared() const override { return row_norms_sq_; }

 private:
  Index flat(Index c, Index i, Index j) const { return (c * shape_.height + i) * shape_.width + j; }

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Per channel: transpose ? L^T X R : L X R^T, with X the H x W plane.
  Vector sandwich(const Vector& x, const Matrix& left, const Matrix& right, bool transpose) const {
    Vector out(x.size());
    const Index plane = shape_.pixels();
    for (Index c = 0; c < shape_.channels; ++c) {
      Eigen::Map<const RowMajor> in(x.data() + c * plane, shape_.height, shape_.width);
      Eigen::Map<RowMajor> dst(out.data() + c * plane, shape_.height, shape_.width);
      if (transpose) {
        dst.noalias() = left.transpose() * in * right;
      } else {
        dst.noalias() = left * in * right.transpose();
      }
    }
    return out;
  }

  Vector to_sorted(const Vector& natural) const {
    Vector out(natural.size());
    for (std::size_t p = 0; p < order_.size(); ++p) out[static_cast<Index>(p)] = natural[order_[p]];
    return out;
  }

  Vector from_sorted(const Vector& sorted) const {
    Vector out(sorted.size());
    for (std::size_t p = 0; p < order_.size(); ++p) out[order_[p]] = sorted[static_cast<Index>(p)];
    return out;
  }

  // 1-D circular correlation along one axis, or its adjoint.
  Vector filter(const Vector& x, bool adjoint) const {
    const auto half = static_cast<Index>(kernel_.size() / 2);
    const Index h = shape_.height;
    const Index w = shape_.width;
    Vector tmp = Vector::Zero(x.size());
    Vector out = Vector::Zero(x.size());
    for (Index c = 0; c < shape_.channels; ++c) {
      for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
          double acc = 0.0;
          for (std::size_t m = 0; m < kernel_.size(); ++m) {
            const Index off = static_cast<Index>(m) - half;
            const Index jj = ((j + (adjoint ? -off : off)) % w + w) % w;
            acc += kernel_[m] * x[flat(c, i, jj)];
          }
          tmp[flat(c, i, j)] = acc;
        }
      }
      for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
          double acc = 0.0;
          for (std::size_t m = 0; m < kernel_.size(); ++m) {
            const Index off = static_cast<Index>(m) - half;
            const Index ii = ((i + (adjoint ? -off : off)) % h + h) % h;
            acc += kernel_[m] * tmp[flat(c, ii, j)];
          }
          out[flat(c, i, j)] = acc;
        }
      }
    }
    return out;
  }

  ImageShape shape_;
  std::vector<double> kernel_;
  CirculantSvd rows_svd_;
  CirculantSvd cols_svd_;
  std::vector<Index> order_;
  Vector singular_values_;
  Vector row_norms_sq_;
};

class DenseImpl final : public OperatorImpl {
 public:
  explicit DenseImpl(Matrix a) : a_(std::move(a)) {
    Eigen::BDCSVD<Matrix> svd(a_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    s_ = svd.singularValues();
    v_ = svd.matrixV();
    // Eigen returns s >= 0 in decreasing order; enforce the stable ordering
    // contract explicitly anyway in case of exact ties from round-off.
    std::vector<Index> order(static_cast<std::size_t>(s_.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return s_[i] > s_[j]; });
    Matrix u2(u_.rows(), u_.cols());
    Matrix v2(v_.rows(), v_.cols());
    Vector s2(s_.size());
    for (std::size_t p = 0; p < order.size(); ++p) {
      const auto q = static_cast<Index>(p);
      s2[q] = s_[order[p]];
      u2.col(q) = u_.col(order[p]);
      v2.col(q) = v_.col(order[p]);
    }
    u_ = std::move(u2);
    v_ = std::move(v2);
    s_ = std::move(s2);
  }

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Vector apply(const Vector& x) const override { return a_ * x; }
  Vector apply_transpose(const Vector& y) const override { return a_.transpose() * y; }
  const Vector& singular_values() const override { return s_; }
  Vector left_project(const Vector& y) const override { return u_.transpose() * y; }
  Vector right_project(const Vector& x) const override { return v_.transpose() * x; }
  Vector left_lift(const Vector& z) const override { return u_ * z; }
  Vector right_lift(const Vector& z) const override { return v_ * z; }
  Vector row_norms_squared() const override { return a_.rowwise().squaredNorm(); }
  Matrix to_dense() const override { return a_; }

 private:
  Matrix a_;
  Matrix u_;
  Vector s_;
  Matrix v_;
};

}  // namespace detail

/// Thin view of an operator's SVD. Cheap to copy; shares the operator's
/// factors.
class Svd {
 public:
  explicit Svd(std::shared_ptr<const detail::OperatorImpl> impl) : impl_(std::move(impl)) {}

  Index rank() const { return impl_->singular_values().size(); }
  const Vector& singular_values() const { return impl_->singular_values(); }

  Vector left_project(const Vector& y) const {
    require_size(y.size(), impl_->rows(), "U^T y");
    return impl_->left_project(y);
  }
  Vector right_project(const Vector& x) const {
    require_size(x.size(), impl_->cols(), "V^T x");
    return impl_->right_project(x);
  }
  Vector left_lift(const Vector& z) const {
    require_size(z.size(), rank(), "U z");
    return impl_->left_lift(z);
  }
  Vector right_lift(const Vector& z) const {
    require_size(z.size(), rank(), "V z");
    return impl_->right_lift(z);
  }

  /// Dense U (rows x r). Small instances only.
  Matrix u() const { return impl_->dense_u(); }
  /// Dense V^T (r x cols). Small instances only.
  Matrix vt() const { return impl_->dense_vt(); }

 private:
  std::shared_ptr<const detail::OperatorImpl> impl_;
};

/// Immutable measurement operator. Copies share the same implementation and
/// SVD, which is built once at construction.
class LinearOperator {
 public:
  OperatorKind kind() const { return kind_; }
  Index rows() const { return impl_->rows(); }
  Index cols() const { return impl_->cols(); }

  Vector apply(const Vector& x) const {
    require_size(x.size(), cols(), "operator input");
    return impl_->apply(x);
  }

  Vector apply_transpose(const Vector& y) const {
    require_size(y.size(), rows(), "operator transpose input");
    return impl_->apply_transpose(y);
  }

  Svd svd() const { return Svd(impl_); }

  Vector row_norms_squared() const { return impl_->row_norms_squared(); }
  bool rows_orthogonal_by_construction() const { return impl_->rows_orthogonal_by_construction(); }

  /// Dense materialization of A. Small instances only.
  Matrix to_dense() const { return impl_->to_dense(); }

  friend LinearOperator identity_op(Index);
  friend LinearOperator mask_op(Index, const std::vector<Index>&);
  friend LinearOperator block_avg_sr_op(const ImageShape&, Index);
  friend LinearOperator colorize_avg_op(const ImageShape&);
  friend LinearOperator separable_blur_op(const ImageShape&, const std::vector<double>&);
  friend LinearOperator dense_op(const Matrix&);

 private:
  LinearOperator(OperatorKind kind, std::shared_ptr<const detail::OperatorImpl> impl)
      : kind_(kind), impl_(std::move(impl)) {}

  OperatorKind kind_;
  std::shared_ptr<const detail::OperatorImpl> impl_;
};

inline LinearOperator identity_op(Index n) {
  require(n >= 1, ErrorKind::invalid_range, "identity operator needs n >= 1");
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(i)] = {i};
  return {OperatorKind::identity,
          std::make_shared<detail::GroupAverageImpl>(n, std::move(groups), 1.0)};
}

/// Row-selection (inpainting) operator keeping `kept` coordinates of an n-vector.
inline LinearOperator mask_op(Index n, const std::vector<Index>& kept) {
  require(n >= 1, ErrorKind::invalid_range, "mask operator needs n >= 1");
  require(!kept.empty(), ErrorKind::invalid_range, "mask must keep at least one index");
  std::vector<std::vector<Index>> groups;
  groups.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    require(kept[i] >= 0 && kept[i] < n, ErrorKind::index_out_of_range,
            "mask index " + std::to_string(kept[i]) + " outside [0, " + std::to_string(n) + ")");
    if (i > 0) {
      require(kept[i] != kept[i - 1], ErrorKind::duplicate_index,
              "mask index " + std::to_string(kept[i]) + " repeated");
      require(kept[i] > kept[i - 1], ErrorKind::invalid_range, "mask indices must be increasing");
    }
    groups.push_back({kept[i]});
  }
  return {OperatorKind::mask, std::make_shared<detail::GroupAverageImpl>(n, std::move(groups), 1.0)};
}

/// Super-resolution forward model: mean over factor x factor blocks, per channel.
inline LinearOperator block_avg_sr_op(const ImageShape& shape, Index factor) {
  validate(shape);
  require(factor >= 1, ErrorKind::invalid_range, "SR factor must be >= 1");
  require(shape.height % factor == 0 && shape.width % factor == 0, ErrorKind::divisibility,
          "SR factor " + std::to_string(factor) + " must divide " + std::to_string(shape.height) +
              "x" + std::to_string(shape.width));
  const Index out_h = shape.height / factor;
  const Index out_w = shape.width / factor;
  std::vector<std::vector<Index>> groups;
  groups.reserve(static_cast<std::size_t>(shape.channels * out_h * out_w));
  for (Index c = 0; c < shape.channels; ++c) {
    for (Index bi = 0; bi < out_h; ++bi) {
      for (Index bj = 0; bj < out_w; ++bj) {
        std::vector<Index> g;
        g.reserve(static_cast<std::size_t>(factor * factor));
        for (Index di = 0; di < factor; ++di) {
          for (Index dj = 0; dj < factor; ++dj) {
            g.push_back((c * shape.height + bi * factor + di) * shape.width + bj * factor + dj);
          }
        }
        groups.push_back(std::move(g));
      }
    }
  }
  const double weight = 1.0 / static_cast<double>(factor * factor);
  return {OperatorKind::block_avg_sr,
          std::make_shared<detail::GroupAverageImpl>(shape.size(), std::move(groups), weight)};
}

/// Grayscale conversion by averaging R, G and B of each pixel.
inline LinearOperator colorize_avg_op(const ImageShape& shape) {
  require(shape.channels == 3, ErrorKind::channel_count, "colorization needs a 3-channel shape");
  validate(shape);
  const Index plane = shape.pixels();
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(plane));
  for (Index p = 0; p < plane; ++p) groups[static_cast<std::size_t>(p)] = {p, plane + p, 2 * plane + p};
  return {OperatorKind::colorize_avg,
          std::make_shared<detail::GroupAverageImpl>(shape.size(), std::move(groups), 1.0 / 3.0)};
}

/// Separable blur with kernel k k^T and circular boundary.
inline LinearOperator separable_blur_op(const ImageShape& shape, const std::vector<double>& kernel) {
  validate(shape);
  require(kernel.size() % 2 == 1, ErrorKind::kernel_length, "blur kernel length must be odd");
  require(static_cast<Index>(kernel.size()) <= std::min(shape.height, shape.width),
          ErrorKind::kernel_length, "blur kernel longer than the image side");
  double sum = 0.0;
  for (double k : kernel) {
    require(std::isfinite(k), ErrorKind::kernel_normalization, "blur kernel has non-finite taps");
    sum += k;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::kernel_normalization,
          "blur kernel must sum to 1 (sum = " + std::to_string(sum) + ")");
  return {OperatorKind::separable_blur, std::make_shared<detail::SeparableBlurImpl>(shape, kernel)};
}

inline LinearOperator dense_op(const Matrix& matrix) {
  require(matrix.rows() >= 1 && matrix.cols() >= 1, ErrorKind::invalid_range,
          "dense operator needs at least one row and column");
  require(matrix.allFinite(), ErrorKind::non_finite_value, "dense operator has non-finite entries");
  return {OperatorKind::dense, std::make_shared<detail::DenseImpl>(matrix)};
}

/// Normalized box kernel of odd length.
inline std::vector<double> uniform_kernel(std::size_t length) {
  require(length % 2 == 1, ErrorKind::kernel_length, "kernel length must be odd");
  return std::vector<double>(length, 1.0 / static_cast<double>(length));
}

/// Sampled Gaussian truncated to `length` taps and renormalized.
inline std::vector<double> gaussian_kernel(std::size_t length, double stddev) {
  require(length % 2 == 1, ErrorKind::kernel_length, "kernel length must be odd");
  require(stddev > 0.0, ErrorKind::invalid_range, "Gaussian kernel needs stddev > 0");
  std::vector<double> k(length);
  const double half = static_cast<double>(length / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    const double d = static_cast<double>(i) - half;
    k[i] = std::exp(-0.5 * d * d / (stddev * stddev));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace dmps
