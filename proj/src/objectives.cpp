#include "diging/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "diging/errors.hpp"
#include "diging/rng.hpp"

namespace diging {

double SmoothnessProfile::max_l() const {
  return *std::max_element(per_agent_l.begin(), per_agent_l.end());
}

double SmoothnessProfile::mean_l() const {
  return std::accumulate(per_agent_l.begin(), per_agent_l.end(), 0.0) /
         static_cast<double>(per_agent_l.size());
}

double SmoothnessProfile::mean_mu() const {
  return std::accumulate(per_agent_mu.begin(), per_agent_mu.end(), 0.0) /
         static_cast<double>(per_agent_mu.size());
}

double SmoothnessProfile::max_mu() const {
  return *std::max_element(per_agent_mu.begin(), per_agent_mu.end());
}

void SmoothnessProfile::validate() const {
  if (per_agent_l.empty() || per_agent_l.size() != per_agent_mu.size()) {
    throw Error("smoothness profile must list L and mu for every agent");
  }
  for (std::size_t i = 0; i < per_agent_l.size(); ++i) {
    if (!(per_agent_l[i] > 0.0) || !std::isfinite(per_agent_l[i])) {
      throw Error("every L^i must be positive and finite");
    }
    if (per_agent_mu[i] < 0.0 ||
        per_agent_mu[i] > per_agent_l[i] * (1.0 + 1e-9)) {
      throw Error("every mu^i must lie in [0, L^i]");
    }
  }
  if (!(mean_mu() > 0.0)) {
    throw Error("at least one agent must be strongly convex");
  }
}

namespace {

void check_agent(int agent, int n) {
  if (agent < 0 || agent >= n) throw Error("agent index out of range");
}

void check_point(const Vec& point, int p) {
  if (point.size() != p) throw Error("point has the wrong dimension");
  if (!point.allFinite()) throw Error("point has non-finite entries");
}

double huber_value(double t, double xi) {
  const double a = std::abs(t);
  return a <= xi ? 0.5 * t * t : xi * (a - 0.5 * xi);
}

// Derivative of the Huber loss: linear inside the threshold, clipped outside.
double huber_slope(double t, double xi) { return std::clamp(t, -xi, xi); }

}  // namespace

ProblemInstance ProblemInstance::quadratic(std::vector<QuadraticAgent> agents) {
  ProblemInstance inst;
  inst.kind_ = ProblemKind::kQuadratic;
  inst.quad_ = std::move(agents);
  inst.finalize();
  return inst;
}

ProblemInstance ProblemInstance::least_squares(std::vector<DataAgent> agents) {
  ProblemInstance inst;
  inst.kind_ = ProblemKind::kLeastSquares;
  inst.data_ = std::move(agents);
  inst.finalize();
  return inst;
}

ProblemInstance ProblemInstance::huber(std::vector<DataAgent> agents,
                                       double threshold, double ridge) {
  if (!(threshold > 0.0)) throw Error("huber threshold must be positive");
  if (!(ridge > 0.0)) throw Error("huber ridge must be positive");
  ProblemInstance inst;
  inst.kind_ = ProblemKind::kHuber;
  inst.data_ = std::move(agents);
  inst.huber_threshold_ = threshold;
  inst.ridge_ = ridge;
  inst.finalize();
  return inst;
}

void ProblemInstance::finalize() {
  if (kind_ == ProblemKind::kQuadratic) {
    if (quad_.empty()) throw Error("problem needs at least one agent");
    n_ = static_cast<int>(quad_.size());
    p_ = static_cast<int>(quad_.front().q.rows());
    for (const auto& a : quad_) {
      if (a.q.rows() != p_ || a.q.cols() != p_ || a.c.size() != p_) {
        throw Error("inconsistent quadratic agent dimensions");
      }
    }
  } else {
    if (data_.empty()) throw Error("problem needs at least one agent");
    n_ = static_cast<int>(data_.size());
    p_ = static_cast<int>(data_.front().a.cols());
    for (const auto& a : data_) {
      if (a.a.cols() != p_ || a.b.size() != a.a.rows()) {
        throw Error("inconsistent data agent dimensions");
      }
    }
  }
  profile_ = estimate_profile(*this);
  profile_.validate();
}

double ProblemInstance::value(int agent, const Vec& point) const {
  check_agent(agent, n_);
  check_point(point, p_);
  switch (kind_) {
    case ProblemKind::kQuadratic: {
      const auto& a = quad_[agent];
      return 0.5 * point.dot(a.q * point) - a.c.dot(point);
    }
    case ProblemKind::kLeastSquares: {
      const auto& a = data_[agent];
      return 0.5 * (a.a * point - a.b).squaredNorm();
    }
    case ProblemKind::kHuber: {
      const auto& a = data_[agent];
      const Vec r = a.a * point - a.b;
      double v = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        v += huber_value(r[i], huber_threshold_);
      }
      return v + 0.5 * ridge_ * point.squaredNorm();
    }
  }
  return 0.0;
}

Vec ProblemInstance::gradient(int agent, const Vec& point) const {
  check_agent(agent, n_);
  check_point(point, p_);
  switch (kind_) {
    case ProblemKind::kQuadratic: {
      const auto& a = quad_[agent];
      return a.q * point - a.c;
    }
    case ProblemKind::kLeastSquares: {
      const auto& a = data_[agent];
      return a.a.transpose() * (a.a * point - a.b);
    }
    case ProblemKind::kHuber: {
      const auto& a = data_[agent];
      Vec r = a.a * point - a.b;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        r[i] = huber_slope(r[i], huber_threshold_);
      }
      return a.a.transpose() * r + ridge_ * point;
    }
  }
  return Vec::Zero(p_);
}

Mat ProblemInstance::stacked_gradient(const Mat& x) const {
  if (x.rows() != n_ || x.cols() != p_) {
    throw Error("stacked iterate has the wrong shape");
  }
  Mat g(n_, p_);
  for (int i = 0; i < n_; ++i) {
    g.row(i) = gradient(i, x.row(i).transpose()).transpose();
  }
  return g;
}

SmoothnessProfile estimate_profile(const ProblemInstance& inst) {
  SmoothnessProfile profile;
  const int n = inst.num_agents();
  profile.per_agent_l.reserve(n);
  profile.per_agent_mu.reserve(n);
  for (int i = 0; i < n; ++i) {
    switch (inst.kind()) {
      case ProblemKind::kQuadratic: {
        Eigen::SelfAdjointEigenSolver<Mat> es(inst.quadratic_agents()[i].q);
        profile.per_agent_l.push_back(es.eigenvalues().maxCoeff());
        profile.per_agent_mu.push_back(
            std::max(0.0, es.eigenvalues().minCoeff()));
        break;
      }
      case ProblemKind::kLeastSquares:
      case ProblemKind::kHuber: {
        const Mat& a = inst.data_agents()[i].a;
        const Mat gram = a.transpose() * a;
        Eigen::SelfAdjointEigenSolver<Mat> es(gram);
        const double lmax = a.rows() == 0 ? 0.0 : es.eigenvalues().maxCoeff();
        const double lmin =
            a.rows() == 0 ? 0.0 : std::max(0.0, es.eigenvalues().minCoeff());
        if (inst.kind() == ProblemKind::kHuber) {
          // Huber curvature never exceeds the quadratic region's, and the
          // linear tails contribute none, so only the ridge is certain.
          profile.per_agent_l.push_back(lmax + inst.ridge());
          profile.per_agent_mu.push_back(inst.ridge());
        } else {
          profile.per_agent_l.push_back(lmax);
          profile.per_agent_mu.push_back(lmin);
        }
        break;
      }
    }
  }
  return profile;
}

Mat ReferenceSolution::stacked(int n) const {
  return Vec::Ones(n) * x_star.transpose();
}

ReferenceSolution solve_reference(const ProblemInstance& inst, double tol) {
  const int n = inst.num_agents();
  const int p = inst.dimension();
  ReferenceSolution ref;
  if (inst.kind() == ProblemKind::kQuadratic) {
    Mat q_sum = Mat::Zero(p, p);
    Vec c_sum = Vec::Zero(p);
    for (const auto& a : inst.quadratic_agents()) {
      q_sum += a.q;
      c_sum += a.c;
    }
    ref.x_star = q_sum.ldlt().solve(c_sum);
  } else {
    const double step = 1.0 / inst.profile().mean_l();
    Vec x = Vec::Zero(p);
    constexpr long kMaxIters = 10'000'000;
    bool done = false;
    for (long it = 0; it < kMaxIters; ++it) {
      Vec g = Vec::Zero(p);
      for (int i = 0; i < n; ++i) g += inst.gradient(i, x);
      g /= static_cast<double>(n);
      if (g.norm() <= tol) {
        done = true;
        break;
      }
      x -= step * g;
      if (!x.allFinite()) {
        throw ReferenceSolverDiverged("reference iterate became non-finite");
      }
    }
    if (!done) {
      throw ReferenceSolverDiverged(
          "reference solver hit the iteration cap before reaching tol");
    }
    ref.x_star = x;
  }
  Vec g = Vec::Zero(p);
  for (int i = 0; i < n; ++i) g += inst.gradient(i, ref.x_star);
  ref.achieved_gradient_norm = g.norm() / static_cast<double>(n);
  return ref;
}

namespace {

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Symmetric PSD matrix with spectrum spread evenly across [mu, l].
Mat random_spd(int p, double mu, double l, Rng& rng) {
  Vec spectrum(p);
  if (p == 1) {
    spectrum[0] = l;
  } else {
    for (int i = 0; i < p; ++i) {
      spectrum[i] = mu + (l - mu) * static_cast<double>(i) /
                             static_cast<double>(p - 1);
    }
  }
  const Mat g = random_matrix(p, p, rng);
  const Eigen::HouseholderQR<Mat> qr(g);
  Mat rot = qr.householderQ();
  return rot * spectrum.asDiagonal() * rot.transpose();
}

}  // namespace

ProblemInstance make_quadratic_problem(int agents, int dimension, double mu,
                                       double l, std::uint64_t seed) {
  if (!(mu > 0.0) || l < mu) throw Error("need 0 < mu <= L");
  Rng rng(seed);
  std::vector<ProblemInstance::QuadraticAgent> out;
  out.reserve(agents);
  for (int i = 0; i < agents; ++i) {
    ProblemInstance::QuadraticAgent a;
    a.q = random_spd(dimension, mu, l, rng);
    a.c = random_matrix(dimension, 1, rng);
    out.push_back(std::move(a));
  }
  return ProblemInstance::quadratic(std::move(out));
}

ProblemInstance make_least_squares_problem(int agents, int dimension,
                                           int rows_per_agent,
                                           std::uint64_t seed) {
  Rng rng(seed);
  const Vec xhat = random_matrix(dimension, 1, rng);
  std::vector<ProblemInstance::DataAgent> out;
  out.reserve(agents);
  for (int i = 0; i < agents; ++i) {
    ProblemInstance::DataAgent a;
    a.a = random_matrix(rows_per_agent, dimension, rng);
    a.b = a.a * xhat;
    for (Eigen::Index r = 0; r < a.b.size(); ++r) {
      a.b[r] += 0.1 * rng.normal();
    }
    out.push_back(std::move(a));
  }
  return ProblemInstance::least_squares(std::move(out));
}

ProblemInstance make_huber_problem(int agents, int dimension,
                                   int rows_per_agent, double threshold,
                                   double ridge, std::uint64_t seed) {
  Rng rng(seed);
  const Vec xhat = random_matrix(dimension, 1, rng);
  std::vector<ProblemInstance::DataAgent> out;
  out.reserve(agents);
  for (int i = 0; i < agents; ++i) {
    ProblemInstance::DataAgent a;
    a.a = random_matrix(rows_per_agent, dimension, rng);
    a.b = a.a * xhat;
    for (Eigen::Index r = 0; r < a.b.size(); ++r) {
      a.b[r] += 0.1 * rng.normal();
      if (rng.uniform() < 0.1) {
        // Laplace outlier, scale 5: heavy-tailed corruption.
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        a.b[r] += sign * 5.0 * -std::log(1.0 - rng.uniform());
      }
    }
    out.push_back(std::move(a));
  }
  return ProblemInstance::huber(std::move(out), threshold, ridge);
}

void ProblemInstance::save(std::ostream& out) const {
  out << std::setprecision(17);
  const char* kind_name = kind_ == ProblemKind::kQuadratic ? "quadratic"
                          : kind_ == ProblemKind::kLeastSquares
                              ? "least_squares"
                              : "huber";
  out << "problem " << kind_name << " agents " << n_ << " dim " << p_ << "\n";
  if (kind_ == ProblemKind::kHuber) {
    out << "huber_threshold " << huber_threshold_ << " ridge " << ridge_
        << "\n";
  }
  if (kind_ == ProblemKind::kQuadratic) {
    for (const auto& a : quad_) {
      out << "Q\n";
      for (int r = 0; r < p_; ++r) {
        for (int c = 0; c < p_; ++c) out << a.q(r, c) << (c + 1 < p_ ? " " : "\n");
      }
      out << "c\n";
      for (int c = 0; c < p_; ++c) {
        out << a.c[c] << (c + 1 < p_ ? " " : "\n");
      }
    }
  } else {
    for (const auto& a : data_) {
      out << "A rows " << a.a.rows() << "\n";
      for (Eigen::Index r = 0; r < a.a.rows(); ++r) {
        for (int c = 0; c < p_; ++c) out << a.a(r, c) << (c + 1 < p_ ? " " : "\n");
      }
      out << "b\n";
      for (Eigen::Index r = 0; r < a.b.size(); ++r) {
        out << a.b[r] << (r + 1 < a.b.size() ? " " : "\n");
      }
    }
  }
}

ProblemInstance ProblemInstance::load(std::istream& in) {
  std::string tag, kind_name, agents_tag, dim_tag;
  int n = 0, p = 0;
  if (!(in >> tag >> kind_name >> agents_tag >> n >> dim_tag >> p) ||
      tag != "problem" || agents_tag != "agents" || dim_tag != "dim") {
    throw Error("bad problem header");
  }
  if (kind_name == "quadratic") {
    std::vector<QuadraticAgent> agents(n);
    for (auto& a : agents) {
      in >> tag;
      if (tag != "Q") throw Error("expected Q block");
      a.q.resize(p, p);
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) in >> a.q(r, c);
      }
      in >> tag;
      if (tag != "c") throw Error("expected c block");
      a.c.resize(p);
      for (int c = 0; c < p; ++c) in >> a.c[c];
    }
    if (!in) throw Error("truncated problem file");
    return quadratic(std::move(agents));
  }
  double threshold = 1.0, ridge = 0.0;
  if (kind_name == "huber") {
    std::string rtag;
    if (!(in >> tag >> threshold >> rtag >> ridge) ||
        tag != "huber_threshold" || rtag != "ridge") {
      throw Error("bad huber parameter line");
    }
  } else if (kind_name != "least_squares") {
    throw Error("unknown problem kind: " + kind_name);
  }
  std::vector<DataAgent> agents(n);
  for (auto& a : agents) {
    std::string rows_tag;
    long rows = 0;
    if (!(in >> tag >> rows_tag >> rows) || tag != "A" || rows_tag != "rows") {
      throw Error("expected A block");
    }
    a.a.resize(rows, p);
    for (long r = 0; r < rows; ++r) {
      for (int c = 0; c < p; ++c) in >> a.a(r, c);
    }
    in >> tag;
    if (tag != "b") throw Error("expected b block");
    a.b.resize(rows);
    for (long r = 0; r < rows; ++r) in >> a.b[r];
  }
  if (!in) throw Error("truncated problem file");
  return kind_name == "huber" ? huber(std::move(agents), threshold, ridge)
                              : least_squares(std::move(agents));
}

}  // namespace diging
