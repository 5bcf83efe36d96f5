#pragma once

#include <vector>

#include "starjet/errors.hpp"
#include "starjet/scalar.hpp"

namespace starjet {

// Dense matrix over Scalar (exact complex rationals).
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = Scalar(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Scalar& at(int r, int c) { return data_[r * cols_ + c]; }
  const Scalar& at(int r, int c) const { return data_[r * cols_ + c]; }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw Error::precondition("matrix product shape mismatch");
    Matrix out(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        if (at(i, k).is_zero()) continue;
        for (int j = 0; j < o.cols_; ++j) out.at(i, j) = out.at(i, j) + at(i, k) * o.at(k, j);
      }
    return out;
  }
  Matrix operator+(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error::precondition("matrix sum shape mismatch");
    Matrix out(rows_, cols_);
    for (int i = 0; i < rows_ * cols_; ++i) out.data_[i] = data_[i] + o.data_[i];
    return out;
  }
  Matrix operator-(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw Error::precondition("matrix difference shape mismatch");
    Matrix out(rows_, cols_);
    for (int i = 0; i < rows_ * cols_; ++i) out.data_[i] = data_[i] - o.data_[i];
    return out;
  }
  Matrix transposed() const {
    Matrix out(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) out.at(j, i) = at(i, j);
    return out;
  }
  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }
  bool is_zero() const {
    for (const auto& s : data_)
      if (!s.is_zero()) return false;
    return true;
  }

private:
  int rows_ = 0, cols_ = 0;
  std::vector<Scalar> data_;
};

// In-place reduced row echelon form; returns pivot column indices.
inline std::vector<int> rref(Matrix& m) {
  std::vector<int> pivots;
  int row = 0;
  for (int col = 0; col < m.cols() && row < m.rows(); ++col) {
    int piv = -1;
    for (int r = row; r < m.rows(); ++r)
      if (!m.at(r, col).is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    if (piv != row)
      for (int c = 0; c < m.cols(); ++c) std::swap(m.at(piv, c), m.at(row, c));
    Scalar inv = m.at(row, col).inverse();
    for (int c = 0; c < m.cols(); ++c) m.at(row, c) = m.at(row, c) * inv;
    for (int r = 0; r < m.rows(); ++r) {
      if (r == row || m.at(r, col).is_zero()) continue;
      Scalar f = m.at(r, col);
      for (int c = 0; c < m.cols(); ++c) m.at(r, c) = m.at(r, c) - f * m.at(row, c);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

inline int rank(Matrix m) { return static_cast<int>(rref(m).size()); }

// Basis of the right kernel, one column vector per free variable.
inline std::vector<std::vector<Scalar>> kernel_basis(Matrix m) {
  int n = m.cols();
  std::vector<int> pivots = rref(m);
  std::vector<bool> is_pivot(n, false);
  for (int p : pivots) is_pivot[p] = true;
  std::vector<std::vector<Scalar>> basis;
  for (int free = 0; free < n; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Scalar> v(n);
    v[free] = Scalar(1);
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m.at(static_cast<int>(r), free);
    basis.push_back(std::move(v));
  }
  return basis;
}

inline Matrix inverse(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error::precondition("inverse of non-square matrix");
  int n = m.rows();
  Matrix aug(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug.at(i, j) = m.at(i, j);
    aug.at(i, n + i) = Scalar(1);
  }
  // a rank-deficient left block makes rref pick pivots inside the
  // augmentation columns, so count only pivots left of column n
  std::vector<int> pivots = rref(aug);
  bool full_rank = static_cast<int>(pivots.size()) == n;
  for (int p : pivots) full_rank = full_rank && p < n;
  if (!full_rank) throw Error::precondition("matrix is singular");
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = aug.at(i, n + j);
  return out;
}

// Assembles vectors (each of length `dim`) into the columns of a matrix.
inline Matrix column_matrix(int dim, const std::vector<std::vector<Scalar>>& vectors) {
  Matrix m(dim, static_cast<int>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (static_cast<int>(vectors[j].size()) != dim)
      throw Error::precondition("vector length does not match the ambient dimension");
    for (int i = 0; i < dim; ++i) m.at(i, static_cast<int>(j)) = vectors[j][i];
  }
  return m;
}

// Dimensions attached to a subspace W of a presymplectic space (V, omega):
// dim W, dim of its omega-orthogonal W^perp, and dim of W meet the radical
// of omega.  These satisfy dim W + dim W^perp = dim V + dim(W cap radical).
struct PresymplecticDims {
  int dim_v = 0;
  int dim_w = 0;
  int dim_w_perp = 0;        // omega-orthogonal of W inside V
  int dim_w_cap_radical = 0; // W intersect ker(omega)
};

// omega is any antisymmetric bilinear form on a `v_dim`-dimensional space
// (possibly degenerate); w_basis must list linearly independent vectors.
inline PresymplecticDims presymplectic_dims(int v_dim, const Matrix& omega,
                                            const std::vector<std::vector<Scalar>>& w_basis) {
  if (omega.rows() != v_dim || omega.cols() != v_dim)
    throw Error::precondition("bilinear form shape does not match the ambient dimension");
  if (!(omega + omega.transposed()).is_zero())
    throw Error::precondition("bilinear form must be antisymmetric");
  Matrix w = column_matrix(v_dim, w_basis);
  if (rank(w) != static_cast<int>(w_basis.size()))
    throw Error::precondition("subspace basis vectors are linearly dependent");

  PresymplecticDims out;
  out.dim_v = v_dim;
  out.dim_w = static_cast<int>(w_basis.size());

  // W^perp = { v : omega(w_i, v) = 0 for all i } = ker(W^T omega)
  out.dim_w_perp = v_dim - rank(w.transposed() * omega);

  // dim(W cap ker omega) = dim W - rank(omega W)
  out.dim_w_cap_radical = out.dim_w - rank(omega * w);
  return out;
}

// Basis of the omega-orthogonal W^perp = ker(W^T omega) of span(w_basis).
inline std::vector<std::vector<Scalar>> perp_basis(
    int v_dim, const Matrix& omega, const std::vector<std::vector<Scalar>>& w_basis) {
  return kernel_basis(column_matrix(v_dim, w_basis).transposed() * omega);
}

// Dimension of span(a) + span(b).
inline int span_sum_dim(int v_dim, const std::vector<std::vector<Scalar>>& a,
                        const std::vector<std::vector<Scalar>>& b) {
  std::vector<std::vector<Scalar>> all = a;
  all.insert(all.end(), b.begin(), b.end());
  return rank(column_matrix(v_dim, all));
}

}  // namespace starjet
