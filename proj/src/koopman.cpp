#include "spline_koopman/koopman.hpp"

#include "spline_koopman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace spline_koopman {

namespace {

void require_slices(std::span<const Eigen::VectorXd> slices, std::size_t minimum,
                    const char* what) {
  if (slices.size() < minimum) {
    throw NumericalError(NumericalError::Kind::kTooFewSnapshots,
                         std::string(what) + " needs at least " + std::to_string(minimum) +
                             " slices, got " + std::to_string(slices.size()));
  }
  const Eigen::Index n = slices.front().size();
  for (const auto& s : slices) {
    if (s.size() != n) throw DimensionMismatch("slices have inconsistent dimension");
  }
}

struct SvdFactors {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  Eigen::VectorXd s;
  int usable_rank = 0;  // singular values above the relative threshold
};

SvdFactors factor(const Eigen::MatrixXd& x, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{svd.matrixU(), svd.matrixV(), svd.singularValues(), 0};
  if (f.s.size() == 0 || !(f.s[0] > 0.0)) return f;
  const double cutoff = rel_tol * f.s[0];
  for (Eigen::Index i = 0; i < f.s.size(); ++i) {
    if (f.s[i] > cutoff) ++f.usable_rank;
  }
  return f;
}

Eigen::MatrixXd operator_for_rank(const SvdFactors& f, const Eigen::MatrixXd& y, int r) {
  const Eigen::VectorXd inv = f.s.head(r).cwiseInverse();
  return (y * f.v.leftCols(r)) * inv.asDiagonal() * f.u.leftCols(r).transpose();
}

bool eigen_order(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() < b.imag();
}

DmdModel finish_model(Eigen::MatrixXd a, const SvdFactors& f, int rank,
                      const Eigen::VectorXd& first_column, int delay, double slice_dt,
                      std::string rule) {
  DmdModel model;
  model.a = std::move(a);
  model.singular_values = f.s;
  model.truncation_rank = rank;
  model.delay = delay;
  model.slice_dt = slice_dt;
  model.rank_rule = std::move(rule);

  Eigen::EigenSolver<Eigen::MatrixXd> es(model.a, true);
  if (es.info() != Eigen::Success) {
    throw NumericalError(NumericalError::Kind::kDegenerateData,
                         "eigendecomposition of the DMD operator did not converge");
  }
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return eigen_order(vals[i], vals[j]);
  });

  const Eigen::Index dim = vals.size();
  model.eigenvalues.resize(dim);
  model.right_modes.resize(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    model.eigenvalues[k] = vals[order[static_cast<std::size_t>(k)]];
    Eigen::VectorXcd v = vecs.col(order[static_cast<std::size_t>(k)]);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    model.right_modes.col(k) = v;
  }

  // Rows of V^{-1} are eigenvectors of A^T with w_i^T v_j = delta_ij.
  const Eigen::MatrixXcd v_inv =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd>(model.right_modes)
          .pseudoInverse();
  model.left_modes = v_inv.transpose();
  model.amplitudes = (v_inv * first_column.cast<std::complex<double>>()).cwiseAbs();
  return model;
}

}  // namespace

double DmdModel::spectral_radius() const {
  return eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
}

Eigen::VectorXcd DmdModel::continuous_rates() const {
  Eigen::VectorXcd rates(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    rates[i] = std::log(eigenvalues[i]) / slice_dt;
  }
  return rates;
}

SnapshotPair build_snapshots(std::span<const Eigen::VectorXd> slices) {
  require_slices(slices, 3, "snapshot pair");
  const Eigen::Index n = slices.front().size();
  const Eigen::Index cols = static_cast<Eigen::Index>(slices.size()) - 1;
  SnapshotPair pair{Eigen::MatrixXd(n, cols), Eigen::MatrixXd(n, cols)};
  for (Eigen::Index j = 0; j < cols; ++j) {
    pair.x.col(j) = slices[static_cast<std::size_t>(j)];
    pair.y.col(j) = slices[static_cast<std::size_t>(j + 1)];
  }
  return pair;
}

SnapshotPair pooled_snapshots(std::span<const ControlPointGrid> sequences,
                              std::pair<int, int> window) {
  if (sequences.empty()) throw InvalidArgument("no sequences to pool");
  const int n = sequences.front().dim();
  const int l = sequences.front().num_points();
  const auto [first, last] = window;
  if (first < 0 || last > l - 1 || first >= last) {
    throw InvalidArgument("pair window [" + std::to_string(first) + ", " +
                          std::to_string(last) + ") invalid for " + std::to_string(l) +
                          " slices");
  }
  const int per = last - first;
  const auto total = static_cast<Eigen::Index>(per) * static_cast<Eigen::Index>(sequences.size());
  SnapshotPair pair{Eigen::MatrixXd(n, total), Eigen::MatrixXd(n, total)};
  Eigen::Index col = 0;
  for (const auto& seq : sequences) {
    if (seq.dim() != n || seq.num_points() != l) {
      throw DimensionMismatch("pooled sequences must share their shape");
    }
    pair.x.middleCols(col, per) = seq.values().middleCols(first, per);
    pair.y.middleCols(col, per) = seq.values().middleCols(first + 1, per);
    col += per;
  }
  return pair;
}

DmdModel exact_dmd(const SnapshotPair& pair, const DmdOptions& options) {
  if (pair.x.rows() != pair.y.rows() || pair.x.cols() != pair.y.cols()) {
    throw DimensionMismatch("snapshot matrices X and Y differ in shape");
  }
  if (pair.x.cols() == 0) {
    throw NumericalError(NumericalError::Kind::kTooFewSnapshots, "no snapshot pairs");
  }
  const SvdFactors f = factor(pair.x, options.rel_tol);
  int rank = f.usable_rank;
  std::string rule = "threshold";
  if (options.rank) {
    if (*options.rank < 1) throw InvalidArgument("explicit DMD rank must be >= 1");
    rank = std::min(rank, *options.rank);
    rule = "explicit";
  }
  if (rank == 0) {
    throw NumericalError(NumericalError::Kind::kDegenerateData,
                         "snapshot matrix has no singular value above the threshold");
  }
  return finish_model(operator_for_rank(f, pair.y, rank), f, rank, pair.x.col(0), 1,
                      options.slice_dt, std::move(rule));
}

HankelPair hankel_embed(std::span<const Eigen::VectorXd> slices, int delay) {
  if (delay < 1) throw InvalidArgument("delay must be >= 1");
  require_slices(slices, static_cast<std::size_t>(delay) + 2, "Hankel embedding");
  const Eigen::Index n = slices.front().size();
  const Eigen::Index count = static_cast<Eigen::Index>(slices.size()) - delay;  // columns per matrix
  HankelPair h{Eigen::MatrixXd(n * delay, count), Eigen::MatrixXd(n * delay, count)};
  // Delay vector for zero-based slice index j (j >= delay - 1).
  auto fill = [&](Eigen::MatrixXd& m, Eigen::Index col, Eigen::Index j) {
    for (Eigen::Index k = 0; k < delay; ++k) {
      m.block(k * n, col, n, 1) = slices[static_cast<std::size_t>(j - k)];
    }
  };
  for (Eigen::Index c = 0; c < count; ++c) {
    fill(h.h0, c, delay - 1 + c);
    fill(h.h1, c, delay + c);
  }
  return h;
}

DmdModel hankel_dmd(std::span<const Eigen::VectorXd> slices, int delay,
                    const HankelDmdOptions& options) {
  if (delay == 1) {
    return exact_dmd(build_snapshots(slices),
                     DmdOptions{options.rank, options.rel_tol, options.slice_dt});
  }
  const HankelPair h = hankel_embed(slices, delay);
  const SvdFactors f = factor(h.h0, options.rel_tol);
  if (f.usable_rank == 0) {
    throw NumericalError(NumericalError::Kind::kDegenerateData,
                         "Hankel matrix has no singular value above the threshold");
  }

  if (options.rank || !options.select_rank_by_reconstruction) {
    int rank = f.usable_rank;
    if (options.rank) {
      if (*options.rank < 1) throw InvalidArgument("explicit DMD rank must be >= 1");
      rank = std::min(rank, *options.rank);
    }
    DmdModel m = finish_model(operator_for_rank(f, h.h1, rank), f, rank, h.h0.col(0), delay,
                              options.slice_dt, options.rank ? "explicit" : "threshold");
    return m;
  }

  // Free-run selection: iterate each candidate from h^q and score the
  // predicted newest blocks against the observed slices.
  const Eigen::Index n = slices.front().size();
  const Eigen::Index steps = h.h1.cols();
  int best_rank = 0;
  double best_err = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_a;
  for (int r = 1; r <= f.usable_rank; ++r) {
    Eigen::MatrixXd a = operator_for_rank(f, h.h1, r);
    Eigen::VectorXd state = h.h0.col(0);
    double err = 0.0;
    for (Eigen::Index k = 0; k < steps && std::isfinite(err); ++k) {
      state = a * state;
      err += (state.head(n) - h.h1.col(k).head(n)).squaredNorm();
    }
    if (std::isfinite(err) && err < best_err) {
      best_err = err;
      best_rank = r;
      best_a = std::move(a);
    }
  }
  if (best_rank == 0) {
    throw NumericalError(NumericalError::Kind::kDegenerateData,
                         "every Hankel DMD truncation diverges on its own data");
  }
  return finish_model(std::move(best_a), f, best_rank, h.h0.col(0), delay, options.slice_dt,
                      "reconstruction");
}

Eigen::MatrixXd project_hankel_predictor(const DmdModel& model) {
  if (model.delay < 2) {
    throw InvalidArgument("predictor projection needs a delay-embedded model (delay >= 2)");
  }
  return model.a.topRows(model.state_dim());
}

std::vector<Eigen::VectorXd> reconstruct(const DmdModel& model,
                                         std::span<const Eigen::VectorXd> window,
                                         int total_length) {
  const int q = model.delay;
  const int n = model.state_dim();
  if (static_cast<int>(window.size()) != q) {
    throw DimensionMismatch("initial window has " + std::to_string(window.size()) +
                            " slices, model delay is " + std::to_string(q));
  }
  std::vector<Eigen::VectorXd> out(window.begin(), window.end());
  Eigen::VectorXd state(static_cast<Eigen::Index>(q) * n);
  for (int k = 0; k < q; ++k) {
    const auto& s = window[static_cast<std::size_t>(q - 1 - k)];
    if (s.size() != n) throw DimensionMismatch("window slice has the wrong dimension");
    state.segment(static_cast<Eigen::Index>(k) * n, n) = s;
  }
  while (static_cast<int>(out.size()) < total_length) {
    state = model.a * state;
    out.emplace_back(state.head(n));
  }
  out.resize(static_cast<std::size_t>(std::max(total_length, 0)));
  return out;
}

ResidualDiagnostics residuals_for_predictor(std::span<const ControlPointGrid> sequences,
                                            const Eigen::MatrixXd& predictor,
                                            std::pair<int, int> window) {
  const SnapshotPair pooled = pooled_snapshots(sequences, window);
  if (predictor.rows() != pooled.x.rows() || predictor.cols() != pooled.x.rows()) {
    throw DimensionMismatch("predictor does not act on the slice dimension");
  }
  const auto [first, last] = window;
  const int per = last - first;

  ResidualDiagnostics diag;
  diag.window = window;
  diag.num_points = sequences.front().num_points();
  diag.num_sequences = static_cast<int>(sequences.size());
  diag.predictor = predictor;
  diag.per_step.assign(static_cast<std::size_t>(per), 0.0);
  for (int j = first; j < last; ++j) diag.steps.push_back(j + 1);

  const Eigen::MatrixXd delta = pooled.y - predictor * pooled.x;
  for (Eigen::Index c = 0; c < delta.cols(); ++c) {
    const auto j = static_cast<std::size_t>(c % per);
    diag.per_step[j] = std::max(diag.per_step[j], delta.col(c).norm());
  }
  diag.max_residual = *std::max_element(diag.per_step.begin(), diag.per_step.end());
  diag.one_step_mse = delta.squaredNorm() / static_cast<double>(delta.size());
  return diag;
}

ResidualDiagnostics quasi_markov_residuals(std::span<const ControlPointGrid> sequences,
                                           std::pair<int, int> window) {
  if (sequences.size() < 2) {
    throw InvalidArgument("quasi-Markov diagnostics need at least two sequences");
  }
  const DmdModel fit = exact_dmd(pooled_snapshots(sequences, window));
  return residuals_for_predictor(sequences, fit.a, window);
}

double slice_mse(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionMismatch("slice sequences differ in length");
  }
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    sum += (a[j] - b[j]).squaredNorm();
    count += static_cast<double>(a[j].size());
  }
  return sum / count;
}

}  // namespace spline_koopman
