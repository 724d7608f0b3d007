#include "pcf/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcf {

void SparseCoords::validate() const {
  if (points.size() != conf.size()) throw Error(Errc::kLengthMismatch, "points and confidences differ in length");
  for (const double m : conf) {
    if (!(m >= 0.0 && m <= 1.0)) throw Error(Errc::kInvalidArgument, "confidence outside [0, 1]");
  }
}

SparseCoords clip_sparse(const SparseCoords& x, double threshold) {
  x.validate();
  if (x.points.empty()) throw Error(Errc::kEmptySet, "no coordinates to clip");
  Point2 col_max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : x.points) {
    col_max.x = std::max(col_max.x, p.x);
    col_max.y = std::max(col_max.y, p.y);
  }
  SparseCoords out = x;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (out.conf[i] < threshold) out.points[i] = col_max;
  }
  return out;
}

Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                                 const Eigen::VectorXd& m_q, const Eigen::VectorXd& m_k) {
  if (q.cols() < 1 || q.cols() != k.cols() || k.cols() != v.cols() || k.rows() != v.rows() ||
      m_q.size() != q.rows() || m_k.size() != k.rows() || k.rows() < 1) {
    throw Error(Errc::kDimMismatch, "attention operand shapes disagree");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd logits = (q * k.transpose()).cwiseProduct(m_q * m_k.transpose()) * scale;
  Eigen::MatrixXd out(q.rows(), v.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    // Accumulate in key order and normalize once, so uniform weights give
    // the plain column mean bit for bit.
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(v.cols());
    double total = 0.0;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      const double e = std::exp(logits(i, j) - top);
      acc += e * v.row(j);
      total += e;
    }
    out.row(i) = acc / total;
  }
  return out;
}

Eigen::MatrixXd masked_multihead_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                           const Eigen::MatrixXd& v, const Eigen::VectorXd& m_q,
                                           const Eigen::VectorXd& m_k, int heads) {
  if (heads < 1 || q.cols() % heads != 0) {
    throw Error(Errc::kInvalidArgument, "feature width must split evenly into heads");
  }
  if (q.cols() != k.cols() || k.cols() != v.cols()) throw Error(Errc::kDimMismatch, "attention operand shapes disagree");
  const Eigen::Index d = q.cols() / heads;
  Eigen::MatrixXd out(q.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    out.middleCols(h * d, d) =
        masked_attention(q.middleCols(h * d, d), k.middleCols(h * d, d), v.middleCols(h * d, d), m_q, m_k);
  }
  return out;
}

double flag_value(double h, double m_s, double m_t) noexcept {
  const double e = std::exp(-h);
  return m_s * m_t * (3.0 * e - 1.0) / (1.0 + e);
}

std::vector<double> filter_flags(const SparseCoords& xs, const SparseCoords& xt) {
  xs.validate();
  xt.validate();
  if (xs.points.size() != xt.points.size()) throw Error(Errc::kLengthMismatch, "coordinate sets differ in length");
  std::vector<double> tau(xs.points.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    tau[i] = flag_value(norm(xs.points[i] - xt.points[i]), xs.conf[i], xt.conf[i]);
  }
  return tau;
}

std::vector<FilterInput> assemble_filter_input(const SparseCoords& xs, const SparseCoords& xt,
                                               std::span<const std::vector<double>> flags_per_system) {
  if (flags_per_system.empty() || flags_per_system.size() > 2) {
    throw Error(Errc::kInvalidArgument, "expected one or two flag vectors");
  }
  const std::size_t n = xs.points.size();
  if (xt.points.size() != n) throw Error(Errc::kLengthMismatch, "coordinate sets differ in length");
  for (const auto& f : flags_per_system) {
    if (f.size() != n) throw Error(Errc::kLengthMismatch, "flag vector length differs from coordinates");
  }
  std::vector<FilterInput> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t2 = flags_per_system.size() == 2 ? flags_per_system[1][i] : 0.0;
    rows[i] = {xs.points[i].x, xs.points[i].y, xt.points[i].x, xt.points[i].y, flags_per_system[0][i], t2};
  }
  return rows;
}

}  // namespace pcf
