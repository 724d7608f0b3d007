#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pcf/geometry.hpp"

namespace pcf {

/// Zero-score normalized (l1, l2) pairs with their confidences.
struct SparseCoords {
  std::vector<Point2> points;
  std::vector<double> conf;

  /// Throws Error(kLengthMismatch) or Error(kInvalidArgument) for confidences
  /// outside [0, 1].
  void validate() const;
};

/// Rows with confidence below `threshold` are replaced by the column-wise max
/// over all rows, clipped ones included. Throws Error(kEmptySet).
SparseCoords clip_sparse(const SparseCoords& x, double threshold = 0.5);

/// softmax(((m_q m_k^T) .* (q k^T)) / sqrt(d)) v, row-wise softmax.
/// Throws Error(kDimMismatch).
Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                                 const Eigen::VectorXd& m_q, const Eigen::VectorXd& m_k);

/// Splits the feature columns into `heads` equal blocks, attends each block
/// separately and concatenates the results. No learned projections.
Eigen::MatrixXd masked_multihead_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                           const Eigen::MatrixXd& v, const Eigen::VectorXd& m_q,
                                           const Eigen::VectorXd& m_k, int heads);

/// m_s m_t (3 e^-h - 1) / (1 + e^-h) for agreement distance h >= 0.
double flag_value(double h, double m_s, double m_t) noexcept;

/// Per-correspondence flags with h = |x_s - x_t|. Throws Error(kLengthMismatch).
std::vector<double> filter_flags(const SparseCoords& xs, const SparseCoords& xt);

/// [xs.l1, xs.l2, xt.l1, xt.l2, tau1, tau2]
using FilterInput = std::array<double, 6>;

/// One or two flag vectors; a missing second system contributes 0.
/// Throws Error(kLengthMismatch), Error(kInvalidArgument) for zero or more
/// than two flag vectors.
std::vector<FilterInput> assemble_filter_input(const SparseCoords& xs, const SparseCoords& xt,
                                               std::span<const std::vector<double>> flags_per_system);

}  // namespace pcf
