#include "rbcav/pod.hpp"

#include "rbcav/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace rbcav::pod {

WeightApply weight_for(const DiscreteForms& forms, InnerProduct ip) {
  const Eigen::MatrixXd& W = (ip == InnerProduct::l2) ? forms.Ms : forms.Ks;
  const int nv = forms.nv();
  return [&W, nv](const Eigen::VectorXd& u) {
    if (u.size() != 2 * nv) throw Error("pod weight: velocity vector size mismatch");
    Eigen::VectorXd out(2 * nv);
    out.head(nv) = W * u.head(nv);
    out.tail(nv) = W * u.tail(nv);
    return out;
  };
}

Eigen::MatrixXd correlation_from(const Eigen::MatrixXd& snapshots, const WeightApply& weight) {
  const int k = static_cast<int>(snapshots.cols());
  if (k == 0) throw Error("correlation: empty snapshot set");
  Eigen::MatrixXd weighted(snapshots.rows(), k);
  for (int j = 0; j < k; ++j) weighted.col(j) = weight(snapshots.col(j));
  Eigen::MatrixXd C = kernels::correlation(snapshots, weighted);
  C = 0.5 * (C + C.transpose().eval());  // symmetrize roundoff
  return C;
}

PodVecResult pod_vectors(const Eigen::MatrixXd& snapshots, const WeightApply& weight,
                         double energy_threshold) {
  if (energy_threshold <= 0.0 || energy_threshold > 1.0)
    throw Error("pod_vectors: energy threshold must lie in (0, 1]");
  const int k = static_cast<int>(snapshots.cols());
  const Eigen::MatrixXd C = correlation_from(snapshots, weight);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw Error("pod_vectors: eigensolver failed");

  PodVecResult out;
  out.eigenvalues.resize(k);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < k; ++i) {
    const double l = es.eigenvalues()[k - 1 - i];  // descending
    if (l < -1e-12 * std::max(lmax, 1e-300))
      throw Error("pod_vectors: correlation matrix has a significantly negative eigenvalue");
    out.eigenvalues[i] = std::max(l, 0.0);
  }

  const double total = out.eigenvalues.sum();
  if (total <= 0.0) throw Error("pod_vectors: all snapshots are zero, no modes definable");

  int n_modes = k;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += out.eigenvalues[i];
    if (acc / total >= energy_threshold) {
      n_modes = i + 1;
      break;
    }
  }
  out.retained_energy = out.eigenvalues.head(n_modes).sum() / total;

  out.modes.resize(snapshots.rows(), n_modes);
  for (int i = 0; i < n_modes; ++i) {
    const Eigen::VectorXd psi = es.eigenvectors().col(k - 1 - i);
    Eigen::VectorXd zeta = snapshots * psi;
    const double nrm = std::sqrt(std::max(0.0, zeta.dot(weight(zeta))));
    if (nrm <= 0.0) throw Error("pod_vectors: degenerate mode");
    out.modes.col(i) = zeta / nrm;
  }
  return out;
}

std::vector<Eigen::VectorXd> orthonormalize_vectors(std::span<const Eigen::VectorXd> candidates,
                                                    std::span<const Eigen::VectorXd> basis,
                                                    const WeightApply& weight, double drop_tol) {
  std::vector<Eigen::VectorXd> accepted;
  std::vector<Eigen::VectorXd> all;  // basis then accepted, for projections
  all.reserve(basis.size() + candidates.size());
  for (const auto& b : basis) all.push_back(b);

  for (const auto& cand : candidates) {
    Eigen::VectorXd v = cand;
    const double nrm0 = std::sqrt(std::max(0.0, v.dot(weight(v))));
    if (nrm0 <= 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : all) {
        const double proj = b.dot(weight(v));
        v -= proj * b;
      }
    }
    const double nrm = std::sqrt(std::max(0.0, v.dot(weight(v))));
    if (nrm <= drop_tol * nrm0) continue;  // already in the span; dropped
    v /= nrm;
    accepted.push_back(v);
    all.push_back(v);
  }
  return accepted;
}

namespace {

Eigen::MatrixXd pack(const std::vector<Field>& fields) {
  if (fields.empty()) throw Error("pod: empty snapshot set");
  const auto n = fields.front().coeffs.size();
  Eigen::MatrixXd out(n, fields.size());
  for (std::size_t j = 0; j < fields.size(); ++j) {
    if (fields[j].coeffs.size() != n) throw Error("pod: inconsistent snapshot sizes");
    if (!fields[j].domain.reference)
      throw Error("pod: snapshots must live on the reference domain");
    out.col(j) = fields[j].coeffs;
  }
  return out;
}

void require_forms(const SnapshotSet& set) {
  if (!set.forms) throw Error("pod: snapshot set carries no inner-product forms");
  if (set.forms->grid.get() != set.grid.get())
    throw Error("pod: inner-product matrix grid mismatch");
  if (set.forms->A != set.grid->ref_A)
    throw Error("pod: inner-product forms must be assembled on the reference domain");
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const SnapshotSet& set) {
  require_forms(set);
  return correlation_from(pack(set.snapshots), weight_for(*set.forms, set.inner));
}

PodResult pod_modes(const SnapshotSet& set, double energy_threshold) {
  require_forms(set);
  const auto vec =
      pod_vectors(pack(set.snapshots), weight_for(*set.forms, set.inner), energy_threshold);
  PodResult out;
  out.eigenvalues = vec.eigenvalues;
  out.retained_energy = vec.retained_energy;
  for (int i = 0; i < vec.modes.cols(); ++i) {
    Field m;
    m.kind = FieldKind::velocity;
    m.domain = DomainTag::ref();
    m.coeffs = vec.modes.col(i);
    out.modes.push_back(std::move(m));
  }
  return out;
}

std::vector<Field> orthonormalize_against(std::span<const Field> modes,
                                          std::span<const Field> basis,
                                          const DiscreteForms& forms, InnerProduct ip,
                                          double drop_tol) {
  const auto weight = weight_for(forms, ip);
  std::vector<Eigen::VectorXd> cand, base;
  for (const auto& m : modes) cand.push_back(m.coeffs);
  for (const auto& b : basis) base.push_back(b.coeffs);
  const auto vecs = orthonormalize_vectors(cand, base, weight, drop_tol);
  std::vector<Field> out;
  for (const auto& v : vecs) {
    Field f;
    f.kind = FieldKind::velocity;
    f.domain = DomainTag::ref();
    f.coeffs = v;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace rbcav::pod
