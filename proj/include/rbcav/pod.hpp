#pragma once

#include "rbcav/forms.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rbcav::pod {

enum class InnerProduct { l2, h1_semi };

using WeightApply = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Weight application for velocity coefficient vectors in the declared inner
/// product, backed by the forms assembled on the snapshot domain.
WeightApply weight_for(const DiscreteForms& forms, InnerProduct ip);

struct SnapshotInfo {
  ParameterPoint mu;
  double time = 0.0;
  bool steady = true;
};

/// Ordered snapshots on the reference domain with their inner product.
struct SnapshotSet {
  std::shared_ptr<const Grid> grid;
  std::vector<Field> snapshots;
  std::vector<SnapshotInfo> provenance;
  InnerProduct inner = InnerProduct::l2;
  const DiscreteForms* forms = nullptr;  // assembled at grid->ref_A

  void push(Field f, SnapshotInfo info) {
    snapshots.push_back(std::move(f));
    provenance.push_back(info);
  }
};

struct PodResult {
  std::vector<Field> modes;     // unit-norm, mutually orthogonal
  Eigen::VectorXd eigenvalues;  // all correlation eigenvalues, nonincreasing
  double retained_energy = 0.0;
};

// --- vector-level core (shared with the sampling loop) ---

Eigen::MatrixXd correlation_from(const Eigen::MatrixXd& snapshots, const WeightApply& weight);

struct PodVecResult {
  Eigen::MatrixXd modes;        // columns, unit norm in the weight product
  Eigen::VectorXd eigenvalues;  // nonincreasing, clamped at zero
  double retained_energy = 0.0;
};

PodVecResult pod_vectors(const Eigen::MatrixXd& snapshots, const WeightApply& weight,
                         double energy_threshold);

/// Modified Gram-Schmidt (two passes) of candidate columns against an
/// existing orthonormal basis and each other; candidates whose remainder
/// drops below drop_tol (relative to their own norm) are discarded.
std::vector<Eigen::VectorXd> orthonormalize_vectors(std::span<const Eigen::VectorXd> candidates,
                                                    std::span<const Eigen::VectorXd> basis,
                                                    const WeightApply& weight,
                                                    double drop_tol = 1e-8);

// --- field-level interface ---

Eigen::MatrixXd correlation_matrix(const SnapshotSet& set);

PodResult pod_modes(const SnapshotSet& set, double energy_threshold);

std::vector<Field> orthonormalize_against(std::span<const Field> modes,
                                          std::span<const Field> basis,
                                          const DiscreteForms& forms,
                                          InnerProduct ip = InnerProduct::l2,
                                          double drop_tol = 1e-8);

}  // namespace rbcav::pod
