#include "herw/qcqp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace herw {

namespace {

// Unit-DQ constraint blocks of a single 8-slot:
// P_r has -I4 on the real part, P_d swaps real and dual parts.
Mat8 block_real() {
  Mat8 p = Mat8::Zero();
  p.topLeftCorner<4, 4>() = -Mat4::Identity();
  return p;
}

Mat8 block_ortho() {
  Mat8 p = Mat8::Zero();
  p.topRightCorner<4, 4>() = Mat4::Identity();
  p.bottomLeftCorner<4, 4>() = Mat4::Identity();
  return p;
}

Mat8 block_norm() {
  Mat8 p = Mat8::Zero();
  p.bottomRightCorner<4, 4>() = -Mat4::Identity();
  return p;
}

Eigen::MatrixXd place_block(int m, int slot, const Mat8& p) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(8 * m, 8 * m);
  out.block<8, 8>(8 * slot, 8 * slot) = p;
  return out;
}

}  // namespace

Eigen::MatrixXd ConstraintSet::matrix(int i) const {
  if (i < 0 || i >= count()) {
    throw Error(ErrorCategory::InvalidInput, "constraint index out of range");
  }
  if (i < 2 * m) {
    const int slot = i / 2;
    return place_block(m, slot, (i % 2 == 0) ? block_real() : block_ortho());
  }
  return place_block(m, norms[i - 2 * m].index, block_norm());
}

double ConstraintSet::constant(int i) const {
  if (i < 0 || i >= count()) {
    throw Error(ErrorCategory::InvalidInput, "constraint index out of range");
  }
  if (i < 2 * m) return (i % 2 == 0) ? 1.0 : 0.0;
  const double a = norms[i - 2 * m].alpha;
  return 0.25 * a * a;
}

Eigen::VectorXd ConstraintSet::violations(const Eigen::VectorXd& z) const {
  Eigen::VectorXd v(count());
  for (int j = 0; j < m; ++j) {
    const Eigen::Vector4d r = z.segment<4>(8 * j);
    const Eigen::Vector4d d = z.segment<4>(8 * j + 4);
    v[2 * j] = 1.0 - r.squaredNorm();
    v[2 * j + 1] = 2.0 * r.dot(d);
  }
  for (size_t i = 0; i < norms.size(); ++i) {
    const int j = norms[i].index;
    const Eigen::Vector4d d = z.segment<4>(8 * j + 4);
    v[2 * m + static_cast<int>(i)] = 0.25 * norms[i].alpha * norms[i].alpha - d.squaredNorm();
  }
  return v;
}

ConstraintSet build_constraint_set(int m, const std::vector<NormPrior>& norms) {
  if (m < 1) throw Error(ErrorCategory::InvalidInput, "need at least one unknown");
  ConstraintSet cs;
  cs.m = m;
  cs.norms = norms;
  std::sort(cs.norms.begin(), cs.norms.end(),
            [](const NormPrior& a, const NormPrior& b) { return a.index < b.index; });
  for (size_t i = 0; i < cs.norms.size(); ++i) {
    const auto& n = cs.norms[i];
    if (n.index < 0 || n.index >= m) {
      throw Error(ErrorCategory::InvalidInput, "norm prior index out of range");
    }
    if (!(n.alpha > 0.0)) {
      throw Error(ErrorCategory::InvalidInput, "norm prior must be positive");
    }
    if (i > 0 && cs.norms[i - 1].index == n.index) {
      throw Error(ErrorCategory::InvalidInput, "duplicate norm prior on one unknown");
    }
  }
  return cs;
}

double psd_tolerance(const Eigen::MatrixXd& Q) { return 1e-8 * std::max(1.0, Q.norm()); }

// ---------------------------------------------------------------------------
// Interior-point solver
// ---------------------------------------------------------------------------

namespace {

// Largest step in [0, cap] keeping V + alpha * D positive definite.
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt_V, const Eigen::MatrixXd& D, double cap) {
  const auto& L = llt_V.matrixL();
  Eigen::MatrixXd W = L.solve(D);
  W = L.solve(W.transpose()).eval();  // L^-1 D L^-T
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (lmin >= -1e-14) return cap;
  return std::min(cap, -1.0 / lmin);
}

double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

struct Iterate {
  Eigen::MatrixXd X, S;
  Eigen::VectorXd y;
};

}  // namespace

SdpSolution InteriorPointSolver::solve(const SdpProblem& problem) const {
  const int n = static_cast<int>(problem.C0.rows());
  const int k = static_cast<int>(problem.G.size());
  if (n == 0 || k == 0 || problem.b.size() != k) {
    throw Error(ErrorCategory::InvalidInput, "malformed SDP problem");
  }

  // Standard-form pair: min <C,X> s.t. <A_i,X> = b_i, X >= 0, with A_i = -G_i,
  // so the dual slack S equals Z(y) = C0 + sum y_i G_i.
  const Eigen::MatrixXd& C = problem.C0;
  std::vector<Eigen::MatrixXd> A(k);
  for (int i = 0; i < k; ++i) A[i] = -problem.G[i];
  const Eigen::VectorXd& b = problem.b;

  const double norm_C = C.norm();
  double norm_A_max = 0.0;
  for (const auto& Ai : A) norm_A_max = std::max(norm_A_max, Ai.norm());
  const double norm_b = b.norm();

  double xi = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < k; ++i) {
    xi = std::max(xi, n * (1.0 + std::abs(b[i])) / (1.0 + A[i].norm()));
  }
  const double eta = 1.0 + std::max(norm_C, norm_A_max);

  Iterate it;
  it.X = xi * Eigen::MatrixXd::Identity(n, n);
  it.S = eta * Eigen::MatrixXd::Identity(n, n);
  it.y = Eigen::VectorXd::Zero(k);

  auto residuals = [&](const Iterate& w, Eigen::VectorXd& rp, Eigen::MatrixXd& Rd) {
    rp.resize(k);
    for (int i = 0; i < k; ++i) rp[i] = b[i] - inner(A[i], w.X);
    Rd = C - w.S;
    for (int i = 0; i < k; ++i) Rd.noalias() -= w.y[i] * A[i];
  };

  SdpSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  int iter = 0;

  auto record = [&](const Iterate& w, double rel_gap, double pr, double dr) {
    const double score = std::max({rel_gap, pr, dr});
    if (score < best_score) {
      best_score = score;
      best.y = w.y;
      best.X = w.X;
      best.primal_obj = inner(C, w.X);
      best.dual_obj = b.dot(w.y);
      best.rel_gap = rel_gap;
      best.primal_res = pr;
      best.dual_res = dr;
      best.iterations = iter;
    }
  };

  double prev_mu = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (iter = 0; iter < options_.max_iterations; ++iter) {
    Eigen::VectorXd rp;
    Eigen::MatrixXd Rd;
    residuals(it, rp, Rd);

    const double pobj = inner(C, it.X);
    const double dobj = b.dot(it.y);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pr = rp.norm() / (1.0 + norm_b);
    const double dr = Rd.norm() / (1.0 + norm_C);
    record(it, rel_gap, pr, dr);

    if (rel_gap <= options_.tol_gap && pr <= options_.tol_feas && dr <= options_.tol_feas) {
      best.converged = true;
      break;
    }
    if (std::abs(dobj) > 1e14 * (1.0 + norm_C)) break;  // unbounded ray

    Eigen::LLT<Eigen::MatrixXd> llt_S(it.S);
    Eigen::LLT<Eigen::MatrixXd> llt_X(it.X);
    if (llt_S.info() != Eigen::Success || llt_X.info() != Eigen::Success) break;

    const double mu = inner(it.X, it.S) / n;
    if (mu < prev_mu * 0.9) {
      stall = 0;
    } else if (++stall > 10) {
      break;
    }
    prev_mu = std::min(prev_mu, mu);

    const Eigen::MatrixXd S_inv = llt_S.solve(Eigen::MatrixXd::Identity(n, n));

    // Schur complement B_ij = tr(A_i S^-1 A_j X), symmetric positive definite.
    std::vector<Eigen::MatrixXd> T(k);
    for (int j = 0; j < k; ++j) T[j] = llt_S.solve(A[j]) * it.X;
    Eigen::MatrixXd B(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) B(i, j) = inner(A[i], T[j].transpose());
    }
    B = 0.5 * (B + B.transpose()).eval();
    Eigen::LDLT<Eigen::MatrixXd> ldlt_B(B);
    if (ldlt_B.info() != Eigen::Success) {
      B.diagonal().array() += 1e-14 * (1.0 + B.trace());
      ldlt_B.compute(B);
      if (ldlt_B.info() != Eigen::Success) break;
    }

    const Eigen::MatrixXd Sinv_Rd_X = llt_S.solve(Rd) * it.X;

    auto solve_direction = [&](double sigma_mu, const Eigen::MatrixXd* corr,
                               Eigen::VectorXd& dy, Eigen::MatrixXd& dS, Eigen::MatrixXd& dX) {
      Eigen::VectorXd rhs(k);
      for (int i = 0; i < k; ++i) {
        rhs[i] = b[i] - sigma_mu * inner(A[i], S_inv) + inner(A[i], Sinv_Rd_X.transpose());
        if (corr) rhs[i] += inner(A[i], llt_S.solve(*corr).transpose());
      }
      dy = ldlt_B.solve(rhs);
      dy += ldlt_B.solve(rhs - B * dy);  // one refinement pass, B is ill-conditioned late
      dS = Rd;
      for (int i = 0; i < k; ++i) dS.noalias() -= dy[i] * A[i];
      dX = sigma_mu * S_inv - it.X - llt_S.solve(dS) * it.X;
      if (corr) dX.noalias() -= llt_S.solve(*corr);
      dX = 0.5 * (dX + dX.transpose()).eval();
    };

    // Mehrotra predictor.
    Eigen::VectorXd dy_aff;
    Eigen::MatrixXd dS_aff, dX_aff;
    solve_direction(0.0, nullptr, dy_aff, dS_aff, dX_aff);
    const double ap_aff = max_step(llt_X, dX_aff, 1.0);
    const double ad_aff = max_step(llt_S, dS_aff, 1.0);
    const double mu_aff = std::max(
        0.0, inner(it.X + ap_aff * dX_aff, it.S + ad_aff * dS_aff) / n);
    double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    sigma = std::clamp(sigma, 1e-10, 1.0);

    // Corrector.
    const Eigen::MatrixXd corr = dS_aff * dX_aff;
    Eigen::VectorXd dy;
    Eigen::MatrixXd dS, dX;
    solve_direction(sigma * mu, &corr, dy, dS, dX);

    const double tau = rel_gap > 1e-6 ? 0.95 : (rel_gap > 1e-9 ? 0.99 : 0.999);
    double ap = tau * max_step(llt_X, dX, 1.0 / tau);
    double ad = tau * max_step(llt_S, dS, 1.0 / tau);
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);

    bool accepted = false;
    for (int bt = 0; bt < 8; ++bt) {
      Iterate trial;
      trial.X = it.X + ap * dX;
      trial.S = it.S + ad * dS;
      trial.y = it.y + ad * dy;
      if (trial.X.allFinite() && trial.S.allFinite() &&
          Eigen::LLT<Eigen::MatrixXd>(trial.X).info() == Eigen::Success &&
          Eigen::LLT<Eigen::MatrixXd>(trial.S).info() == Eigen::Success) {
        it = std::move(trial);
        accepted = true;
        break;
      }
      ap *= 0.5;
      ad *= 0.5;
    }
    if (!accepted) break;
  }

  if (!best.converged) {
    // Re-check the last iterate, the loop may have ended right at the target.
    Eigen::VectorXd rp;
    Eigen::MatrixXd Rd;
    residuals(it, rp, Rd);
    const double pobj = inner(C, it.X);
    const double dobj = b.dot(it.y);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    record(it, rel_gap, rp.norm() / (1.0 + norm_b), Rd.norm() / (1.0 + norm_C));
    best.converged = best.rel_gap <= options_.tol_gap && best.primal_res <= options_.tol_feas &&
                     best.dual_res <= options_.tol_feas;
  }
  best.iterations = iter;

  // Endgame polish in multiplier space: damped Newton ascent on the barrier
  // dual b'y + mu logdet Z(y), Z(y) = C - sum y_i A_i. The y-space system is
  // k x k and does not inherit the 1/mu^2 conditioning of the Schur system,
  // which is what stalls the path-following loop on near-degenerate problems.
  {
    auto Z_of = [&](const Eigen::VectorXd& v) {
      Eigen::MatrixXd Z = C;
      for (int i = 0; i < k; ++i) Z.noalias() -= v[i] * A[i];
      return Z;
    };
    auto min_eig = [&](const Eigen::MatrixXd& Z) {
      return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Z, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
    };

    Eigen::VectorXd y = best.y;
    bool interior = min_eig(Z_of(y)) > 0.0;
    for (double shrink : {0.999, 0.99, 0.9, 0.0}) {
      if (interior) break;
      y = shrink * best.y;
      interior = min_eig(Z_of(y)) > 0.0;
    }

    if (interior) {
      const double scale = 1.0 + norm_C;
      for (double mu = 1e-5 * scale; mu > 1e-13 * scale; mu *= 0.01) {
        for (int step = 0; step < 4; ++step) {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z_of(y));
          const double lo = eig.eigenvalues().minCoeff();
          if (lo <= 0.0) break;
          double logdet = 0.0;
          for (int i = 0; i < n; ++i) logdet += std::log(eig.eigenvalues()[i]);
          const double f0 = b.dot(y) + mu * logdet;

          const Eigen::VectorXd inv_e = eig.eigenvalues().cwiseInverse();
          const Eigen::MatrixXd Zi =
              eig.eigenvectors() * inv_e.asDiagonal() * eig.eigenvectors().transpose();
          Eigen::VectorXd grad(k);
          std::vector<Eigen::MatrixXd> ZiA(k);
          for (int i = 0; i < k; ++i) {
            ZiA[i] = Zi * A[i];
            grad[i] = b[i] - mu * ZiA[i].trace();
          }
          Eigen::MatrixXd H(k, k);
          for (int i = 0; i < k; ++i) {
            for (int j = i; j < k; ++j) {
              H(i, j) = H(j, i) = mu * (ZiA[i].transpose().cwiseProduct(ZiA[j])).sum();
            }
          }
          Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
          if (ldlt.info() != Eigen::Success) break;
          const Eigen::VectorXd dy = ldlt.solve(grad);
          if (!dy.allFinite()) break;

          double t = 1.0;
          bool moved = false;
          for (int bt = 0; bt < 40 && !moved; ++bt) {
            const Eigen::VectorXd trial = y + t * dy;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(Z_of(trial), Eigen::EigenvaluesOnly);
            if (et.eigenvalues().minCoeff() > 0.0) {
              double ld = 0.0;
              for (int i = 0; i < n; ++i) ld += std::log(et.eigenvalues()[i]);
              if (b.dot(trial) + mu * ld > f0) {
                y = trial;
                moved = true;
                break;
              }
            }
            t *= 0.5;
          }
          if (!moved || t * dy.norm() < 1e-15 * (1.0 + y.norm())) break;
        }
      }
      if (b.dot(y) > best.dual_obj && min_eig(Z_of(y)) >= 0.0) {
        best.y = y;
        best.dual_obj = b.dot(y);
        best.rel_gap = std::abs(best.primal_obj - best.dual_obj) /
                       (1.0 + std::abs(best.primal_obj) + std::abs(best.dual_obj));
        best.dual_res = 0.0;  // Z is rebuilt from y, feasible by construction
        best.converged = best.converged ||
                         (best.rel_gap <= 1e-9 && best.primal_res <= options_.tol_feas);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// recovery helpers / solve_dual / gap
// ---------------------------------------------------------------------------

namespace {

// Blockwise feasibility repair: unit real part, orthogonal dual part, and the
// exact prior norm where one is constrained.
bool project_blocks(Eigen::VectorXd& z, const ConstraintSet& cs) {
  for (int j = 0; j < cs.m; ++j) {
    Eigen::Vector4d r = z.segment<4>(8 * j);
    Eigen::Vector4d d = z.segment<4>(8 * j + 4);
    const double nr = r.norm();
    if (!(nr > 1e-12)) return false;
    r /= nr;
    d /= nr;
    d -= r.dot(d) * r;
    z.segment<4>(8 * j) = r;
    z.segment<4>(8 * j + 4) = d;
  }
  for (const auto& np : cs.norms) {
    Eigen::Vector4d d = z.segment<4>(8 * np.index + 4);
    const double nd = d.norm();
    if (!(nd > 1e-12)) return false;
    z.segment<4>(8 * np.index + 4) = d * (0.5 * np.alpha / nd);
  }
  return z.allFinite();
}

// Build a feasible candidate from a raw null-space direction. Rejects
// directions whose block structure is inconsistent with a stacked unit DQ.
std::optional<Eigen::VectorXd> finalize_candidate(const Eigen::VectorXd& raw,
                                                  const ConstraintSet& cs) {
  const int m = cs.m;
  Eigen::VectorXd real_norms(m);
  for (int j = 0; j < m; ++j) {
    real_norms[j] = raw.segment<4>(8 * j).norm();
  }
  const double ref = real_norms.maxCoeff();
  if (!(ref > 1e-9 * raw.norm())) return std::nullopt;
  // All blocks of a scaled stacked unit DQ share the same real-part norm.
  if (real_norms.minCoeff() < 0.9 * ref) return std::nullopt;

  Eigen::VectorXd z = raw / ref;
  for (int j = 0; j < m; ++j) {
    const Eigen::Vector4d r = z.segment<4>(8 * j);
    const Eigen::Vector4d d = z.segment<4>(8 * j + 4);
    if (std::abs(2.0 * r.dot(d)) > 5e-2 * (1.0 + d.norm())) return std::nullopt;
  }
  for (const auto& np : cs.norms) {
    const double nd = 2.0 * z.segment<4>(8 * np.index + 4).norm();
    if (std::abs(nd - np.alpha) > 0.1 * np.alpha + 1e-6) return std::nullopt;
  }
  if (!project_blocks(z, cs)) return std::nullopt;
  return z;
}

// Sign-stable presentation: first block's real part canonical.
void canonicalize_presentation(Eigen::VectorXd& z) {
  for (int i = 0; i < 4; ++i) {
    if (z[i] != 0.0) {
      if (z[i] < 0.0) z = -z;
      return;
    }
  }
}

Eigen::VectorXd local_refine(const Eigen::VectorXd& init, const CostMatrix& cost,
                             const ConstraintSet& cs) {
  const int n = cost.dim();
  const int k = cs.count();
  std::vector<Eigen::MatrixXd> P(k);
  for (int i = 0; i < k; ++i) P[i] = cs.matrix(i);

  const double ridge = 1e-10 * (1.0 + cost.Q.norm());
  Eigen::VectorXd z = init;
  if (!project_blocks(z, cs)) {
    throw Error(ErrorCategory::RecoveryFailure, "local refinement started from a zero block");
  }

  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd g(k);
    Eigen::MatrixXd J(k, n);
    for (int i = 0; i < k; ++i) {
      g[i] = cs.constant(i) + z.dot(P[i] * z);
      J.row(i) = 2.0 * (P[i] * z).transpose();
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = 2.0 * cost.Q;
    kkt.topLeftCorner(n, n).diagonal().array() += ridge;
    kkt.topRightCorner(n, k) = J.transpose();
    kkt.bottomLeftCorner(k, n) = J;
    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -2.0 * cost.Q * z;
    rhs.tail(k) = -g;

    const Eigen::VectorXd step = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs).head(n);
    if (!step.allFinite()) break;
    z += step;
    if (!project_blocks(z, cs)) {
      throw Error(ErrorCategory::RecoveryFailure, "local refinement collapsed a block");
    }
    if (step.norm() <= 1e-12) break;
  }
  return z;
}

}  // namespace

namespace {

// When the cost matrix itself has a null space containing a feasible point,
// lambda = 0 certifies that point with dual value zero; no solver run needed.
// This is exactly the consistent (noiseless) regime, where the dual feasible
// set has an empty interior and path-following methods lose accuracy.
std::optional<DualSolveResult> zero_cost_certificate(const CostMatrix& cost,
                                                     const ConstraintSet& constraints) {
  const double scale = std::max(1.0, cost.Q.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cost.Q);
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const int n = cost.dim();
  int null_dim = 0;
  while (null_dim < n && evals[null_dim] <= 1e-12 * scale) ++null_dim;
  if (null_dim == 0) return std::nullopt;

  std::optional<Eigen::VectorXd> best;
  auto consider = [&](const Eigen::VectorXd& z) {
    if (constraints.violations(z).cwiseAbs().maxCoeff() > 1e-8) return;
    if (!best || z.dot(cost.Q * z) < best->dot(cost.Q * *best)) best = z;
  };

  if (null_dim == 1) {
    if (auto cand = finalize_candidate(eig.eigenvectors().col(0), constraints)) consider(*cand);
  } else if (null_dim == 2) {
    for (const auto& cand : recover_candidates_2d(eig.eigenvectors().col(0),
                                                  eig.eigenvectors().col(1), constraints)) {
      consider(cand);
    }
  } else {
    for (int i = 0; i < null_dim; ++i) {
      try {
        consider(local_refine(eig.eigenvectors().col(i), cost, constraints));
      } catch (const Error&) {
      }
      if (best) break;
    }
  }
  if (!best || best->dot(cost.Q * *best) > 1e-12 * scale) return std::nullopt;

  DualSolveResult result;
  result.certificate.lambda = Eigen::VectorXd::Zero(constraints.count());
  result.certificate.dual_value = 0.0;
  result.certificate.min_eig_Z = evals[0];
  result.Z = cost.Q;
  result.X = (*best) * best->transpose();
  return result;
}

}  // namespace

DualSolveResult solve_dual(const CostMatrix& cost, const ConstraintSet& constraints,
                           const DualSdpSolver* solver) {
  const int n = cost.dim();
  if (cost.Q.rows() != n || cost.Q.cols() != n || cost.m != constraints.m) {
    throw Error(ErrorCategory::InvalidInput, "cost matrix size does not match constraint set");
  }
  const double scale = std::max(1.0, cost.Q.norm());
  if ((cost.Q - cost.Q.transpose()).norm() > 1e-12 * scale) {
    throw Error(ErrorCategory::InvalidInput, "cost matrix is not symmetric");
  }
  {
    const double min_eig_Q =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cost.Q, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    if (min_eig_Q < -1e-9 * scale) {
      throw Error(ErrorCategory::InvalidInput, "cost matrix is not positive semidefinite");
    }
  }

  if (auto shortcut = zero_cost_certificate(cost, constraints)) return *shortcut;

  SdpProblem sdp;
  sdp.C0 = cost.Q;
  const int k = constraints.count();
  sdp.G.reserve(k);
  sdp.b.resize(k);
  for (int i = 0; i < k; ++i) {
    sdp.G.push_back(constraints.matrix(i));
    sdp.b[i] = constraints.constant(i);
  }

  InteriorPointSolver fallback;
  const DualSdpSolver* s = solver ? solver : &fallback;
  SdpSolution sol = s->solve(sdp);

  if (!sol.converged) {
    if (std::abs(sol.dual_obj) > 1e12 * scale) {
      throw Error(ErrorCategory::DegenerateMotion, "dual problem is unbounded");
    }
    // Accept iterates whose dual side is feasible and close: the certificate
    // quality is decided by the recovered-solution gap check, not by the
    // stalled primal estimate inside the solver.
    const bool acceptable =
        sol.rel_gap <= 1e-6 && sol.primal_res <= 1e-8 && sol.dual_res <= 1e-9;
    if (!acceptable) {
      std::ostringstream msg;
      msg << "interior-point solver did not converge (iters=" << sol.iterations
          << ", rel_gap=" << sol.rel_gap << ", primal_res=" << sol.primal_res
          << ", dual_res=" << sol.dual_res << ")";
      throw Error(ErrorCategory::SolverFailure, msg.str());
    }
  }

  DualSolveResult result;
  result.X = sol.X;
  result.Z = cost.Q;
  for (int i = 0; i < k; ++i) result.Z.noalias() += sol.y[i] * sdp.G[i];
  result.Z = 0.5 * (result.Z + result.Z.transpose()).eval();

  result.certificate.lambda = sol.y;
  result.certificate.dual_value = sol.dual_obj;
  result.certificate.min_eig_Z =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(result.Z, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();

  if (result.certificate.min_eig_Z < -psd_tolerance(cost.Q)) {
    std::ostringstream msg;
    msg << "certificate matrix not PSD within tolerance (min eig " << result.certificate.min_eig_Z
        << ")";
    throw Error(ErrorCategory::SolverFailure, msg.str());
  }
  return result;
}

std::vector<Eigen::VectorXd> recover_candidates_2d(const Eigen::VectorXd& v0,
                                                   const Eigen::VectorXd& v1,
                                                   const ConstraintSet& constraints) {
  // Coefficients (mu, nu) must zero the orthogonality form of every block:
  // a mu^2 + 2 b mu nu + c nu^2 = 0. Solve on the best-conditioned block.
  double a = 0.0, b = 0.0, c = 0.0, best_mag = -1.0;
  for (int j = 0; j < constraints.m; ++j) {
    const Eigen::MatrixXd pd = place_block(constraints.m, j, block_ortho());
    const double aj = v0.dot(pd * v0);
    const double bj = v0.dot(pd * v1);
    const double cj = v1.dot(pd * v1);
    const double mag = std::abs(aj) + std::abs(bj) + std::abs(cj);
    if (mag > best_mag) {
      best_mag = mag;
      a = aj;
      b = bj;
      c = cj;
    }
  }

  std::vector<Eigen::Vector2d> roots;
  const double mag = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (mag < 1e-14) {
    roots.push_back({1.0, 0.0});
    roots.push_back({0.0, 1.0});
  } else if (std::abs(a) >= std::abs(c)) {
    const double sq = std::sqrt(std::max(0.0, b * b - a * c));
    roots.push_back({(-b + sq) / a, 1.0});
    roots.push_back({(-b - sq) / a, 1.0});
  } else {
    const double sq = std::sqrt(std::max(0.0, b * b - a * c));
    roots.push_back({1.0, (-b + sq) / c});
    roots.push_back({1.0, (-b - sq) / c});
  }

  std::vector<Eigen::VectorXd> candidates;
  for (const auto& root : roots) {
    const Eigen::VectorXd raw = root[0] * v0 + root[1] * v1;
    if (auto cand = finalize_candidate(raw, constraints)) {
      bool duplicate = false;
      for (const auto& seen : candidates) {
        if ((seen - *cand).norm() < 1e-6 || (seen + *cand).norm() < 1e-6) duplicate = true;
      }
      if (!duplicate) candidates.push_back(*cand);
    }
  }
  return candidates;
}

const char* to_string(RecoveryMode mode) {
  switch (mode) {
    case RecoveryMode::Nullspace1: return "nullspace-1";
    case RecoveryMode::Nullspace2: return "nullspace-2";
    case RecoveryMode::LocalRefined: return "local-refined";
  }
  return "unknown";
}

PrimalSolution recover_primal(const Eigen::MatrixXd& Z_star, const CostMatrix& cost,
                              const ConstraintSet& constraints, const Eigen::MatrixXd* X_hint) {
  const int n = cost.dim();
  if (Z_star.rows() != n || Z_star.cols() != n) {
    throw Error(ErrorCategory::InvalidInput, "certificate matrix size mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z_star);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCategory::RecoveryFailure, "eigendecomposition of Z failed");
  }
  const Eigen::VectorXd& evals = eig.eigenvalues();  // ascending
  const double sigma_max = std::max(std::abs(evals[0]), std::abs(evals[n - 1]));
  const double thr = std::max(1e-6 * sigma_max, 1e-12);
  int null_dim = 0;
  while (null_dim < n && evals[null_dim] <= thr) ++null_dim;
  null_dim = std::max(null_dim, 1);

  // Gather feasible candidates from every plausible null-space reading and
  // keep the cheapest; noise can smear extra near-zero eigenvalues into the
  // null set, so committing to a single dimensionality is brittle.
  PrimalSolution out;
  std::vector<std::pair<Eigen::VectorXd, RecoveryMode>> found;
  auto add = [&](const Eigen::VectorXd& z, RecoveryMode mode) {
    for (const auto& [seen, m] : found) {
      if ((seen - z).norm() < 1e-6 || (seen + z).norm() < 1e-6) return;
    }
    found.emplace_back(z, mode);
  };

  if (auto cand = finalize_candidate(eig.eigenvectors().col(0), constraints)) {
    add(*cand, RecoveryMode::Nullspace1);
  }
  if (null_dim >= 2) {
    for (const auto& cand : recover_candidates_2d(eig.eigenvectors().col(0),
                                                  eig.eigenvectors().col(1), constraints)) {
      add(cand, RecoveryMode::Nullspace2);
    }
  }
  if (null_dim > 2 || found.empty()) {
    Eigen::VectorXd init;
    if (X_hint && X_hint->rows() == n) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(*X_hint);
      init = ex.eigenvectors().col(n - 1);
    } else {
      init = eig.eigenvectors().col(std::max(0, null_dim - 1));
    }
    try {
      add(local_refine(init, cost, constraints), RecoveryMode::LocalRefined);
    } catch (const Error&) {
      // fall through; other candidates may exist
    }
  }
  if (found.empty()) {
    throw Error(ErrorCategory::RecoveryFailure,
                "null space of the certificate admits no stacked unit DQ");
  }

  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& [cand, mode] : found) {
    const double cc = cand.dot(cost.Q * cand);
    out.candidates.push_back(cand);
    if (cc < best_cost) {
      best_cost = cc;
      out.z = cand;
      out.recovery_mode = mode;
    }
  }

  canonicalize_presentation(out.z);
  for (auto& cand : out.candidates) canonicalize_presentation(cand);
  out.cost = out.z.dot(cost.Q * out.z);
  return out;
}

GapCheck duality_gap(const CostMatrix& cost, const Eigen::VectorXd& z,
                     const DualCertificate& certificate) {
  GapCheck g;
  const double primal = z.dot(cost.Q * z);
  g.gap = primal - certificate.dual_value;
  g.certified_global = g.gap <= 1e-8 * std::max(1.0, primal);
  return g;
}

}  // namespace herw
