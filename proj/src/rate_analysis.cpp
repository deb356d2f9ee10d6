#include "diging/rate_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diging {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

void check_rate_inputs(double delta, int n, double kappa_d) {
  if (delta < 0.0 || delta >= 1.0) throw Error("delta must lie in [0,1)");
  if (n < 1) throw Error("agent count must be positive");
  if (kappa_d < 1.0) throw Error("kappa_D is at least 1 by definition");
}

}  // namespace

double max_stepsize(const SmoothnessProfile& profile, double delta, int n,
                    double kappa_d) {
  check_rate_inputs(delta, n, kappa_d);
  const double kbar = profile.kappa_bar();
  const double slack =
      1.0 - delta - 4.0 * kSqrt3 * kbar * (1.0 - 1.0 / kappa_d);
  if (!(slack > 0.0)) {
    throw HeterogeneityTooLarge(
        "step-size heterogeneity too large: need kappa_D < 1 + "
        "(1-delta)/(4 sqrt(3) kappa_bar)");
  }
  const double cap = 1.0 / (2.0 * profile.mean_l());
  if (delta == 0.0) return cap;
  const double network_term =
      (1.0 - delta) * slack /
      (10.0 * profile.max_l() * delta * std::sqrt(static_cast<double>(n)) *
       std::sqrt(kbar));
  return std::min(network_term, cap);
}

double guaranteed_rate(const SmoothnessProfile& profile, double delta, int n,
                     double kappa_d, double alpha_max) {
  check_rate_inputs(delta, n, kappa_d);
  if (!(alpha_max > 0.0)) throw Error("alpha_max must be positive");
  const double kbar = profile.kappa_bar();
  const double het = 1.0 - 1.0 / kappa_d;
  const double network =
      std::sqrt(12.0 * kbar * kbar * het * het +
                10.0 * profile.max_l() * delta *
                    std::sqrt(static_cast<double>(n)) * std::sqrt(kbar) *
                    alpha_max) +
      delta + 2.0 * kSqrt3 * kbar * het;
  const double centralized =
      std::sqrt(1.0 - alpha_max * profile.mean_mu() / 3.0);
  const double lambda = std::max(network, centralized);
  if (!(lambda < 1.0)) {
    throw RateNotContractive(
        "rate expression is not below 1; alpha_max lies outside the "
        "admissible interval");
  }
  return lambda;
}

ArrowGains arrow_gains(double l, double delta, double lambda,
                        double alpha_max) {
  if (!(lambda < 1.0) || !(lambda > delta)) {
    throw LambdaBelowDelta("need delta < lambda < 1");
  }
  ArrowGains g;
  g.gamma11 = (lambda + 1.0) * delta * l / (lambda - delta);
  g.gamma12 = l;
  g.gamma2 = delta * alpha_max / (lambda - delta);
  return g;
}

ClosingGains closing_gains(const SmoothnessProfile& profile, double lambda,
                           double alpha_max, double kappa_d, double beta,
                           double eta) {
  if (!(beta >= 2.0)) throw Error("beta must be >= 2");
  if (!(eta > 0.0)) throw Error("eta must be positive");
  const double mu_bar = profile.mean_mu();
  const double lambda_floor =
      std::sqrt(1.0 - alpha_max * mu_bar * beta / (2.0 * (beta + 1.0)));
  if (lambda < lambda_floor * (1.0 - 1e-12) || !(lambda < 1.0)) {
    throw Error(
        "lambda outside [sqrt(1 - alpha mu_bar beta / (2(beta+1))), 1)");
  }
  if (alpha_max > (1.0 + 1e-12) / ((1.0 + eta) * profile.mean_l())) {
    throw Error("alpha_max must satisfy alpha <= 1/((1+eta) Lbar)");
  }
  const double root_n =
      std::sqrt(static_cast<double>(profile.per_agent_l.size()));
  ClosingGains c;
  c.gamma31 =
      1.0 + root_n *
                std::sqrt(profile.max_l() * (1.0 + eta) / (mu_bar * eta) +
                          profile.max_mu() / mu_bar * beta) /
                lambda;
  c.gamma32 = std::sqrt(3.0 - alpha_max * mu_bar) / (lambda * mu_bar) *
              (1.0 - 1.0 / kappa_d);
  return c;
}

double small_gain_bound(std::span<const double> gains,
                        std::span<const double> offsets) {
  if (gains.size() != offsets.size() || gains.empty()) {
    throw Error("gains and offsets must be nonempty and equally sized");
  }
  double product = 1.0;
  for (double g : gains) {
    if (g < 0.0) throw Error("gains must be nonnegative");
    product *= g;
  }
  if (!(product < 1.0)) {
    throw GainProductNotContractive("gain product must be below 1");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    double tail = 1.0;
    for (std::size_t j = i + 1; j < gains.size(); ++j) tail *= gains[j];
    sum += offsets[i] * tail;
  }
  return sum / (1.0 - product);
}

GainLedger gain_ledger(const RateInputs& inputs) {
  const ArrowGains a = arrow_gains(inputs.profile.max_l(), inputs.delta,
                                    inputs.lambda, inputs.alpha_max);
  const ClosingGains c =
      closing_gains(inputs.profile, inputs.lambda, inputs.alpha_max,
                    inputs.kappa_d, inputs.beta, inputs.eta);
  GainLedger ledger;
  ledger.gamma11 = a.gamma11;
  ledger.gamma12 = a.gamma12;
  ledger.gamma2 = a.gamma2;
  ledger.gamma31 = c.gamma31;
  ledger.gamma32 = c.gamma32;
  ledger.product = (ledger.gamma11 + ledger.gamma12) *
                   (ledger.gamma2 * ledger.gamma31 + ledger.gamma32);
  ledger.feasible = ledger.product < 1.0;
  return ledger;
}

namespace {

double ergodic_scalar(const std::vector<double>& seq, double lambda,
                      std::size_t horizon) {
  return ergodic_norm(std::span<const double>(seq),
                      ErgodicNormParams{lambda, horizon});
}

ArrowCheck make_check(const std::vector<double>& lhs_seq,
                      const std::vector<double>& rhs_seq, double gain,
                      double omega_closed, double lambda,
                      std::size_t horizon) {
  ArrowCheck check;
  check.gain = gain;
  check.omega_closed = omega_closed;
  check.lhs = ergodic_scalar(lhs_seq, lambda, horizon);
  check.rhs_norm = ergodic_scalar(rhs_seq, lambda, horizon);
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double l = ergodic_scalar(lhs_seq, lambda, k);
    const double r = ergodic_scalar(rhs_seq, lambda, k);
    check.omega_empirical =
        std::max(check.omega_empirical, std::max(0.0, l - gain * r));
  }
  check.margin = gain * check.rhs_norm + check.omega_closed - check.lhs;
  return check;
}

}  // namespace

ArrowReport verify_small_gain_arrows(const RunResult& result,
                                     const ReferenceSolution& ref,
                                     const SmoothnessProfile& profile,
                                     double delta, double alpha_max,
                                     double lambda, std::size_t horizon) {
  if (result.x_history.empty() || result.y_history.empty()) {
    throw Error("run history required: rerun with store_history");
  }
  if (horizon >= result.x_history.size()) {
    throw InsufficientHistory("horizon exceeds the stored run length");
  }
  const int n = static_cast<int>(result.x_history.front().rows());
  const Mat x_star = ref.stacked(n);

  const std::size_t count = horizon + 1;
  std::vector<double> q_norm(count), x_cons(count), y_cons(count),
      y_avg(count), y_full(count), y_split(count);
  for (std::size_t k = 0; k < count; ++k) {
    q_norm[k] = (result.x_history[k] - x_star).norm();
    x_cons[k] = consensus_seminorm(result.x_history[k]);
    y_cons[k] = consensus_seminorm(result.y_history[k]);
    y_avg[k] = average_seminorm(result.y_history[k]);
    y_full[k] = result.y_history[k].norm();
    y_split[k] = y_cons[k] + y_avg[k];
  }

  const ArrowGains gains = arrow_gains(profile.max_l(), delta, lambda,
                                        alpha_max);
  const double omega11 = lambda * y_cons.front() / (lambda - delta);
  const double omega2 = lambda * x_cons.front() / (lambda - delta);

  ArrowReport report;
  report.residual_to_tracker_seminorm =
      make_check(y_cons, q_norm, gains.gamma11, omega11, lambda, horizon);
  report.residual_to_tracker_average =
      make_check(y_avg, q_norm, gains.gamma12, 0.0, lambda, horizon);
  // (iii): the full-norm ergodic bound never exceeds the sum of the two
  // component bounds; gain 1 against the summed sequence captures that.
  report.tracker_split =
      make_check(y_full, y_split, 1.0, 0.0, lambda, horizon);
  report.tracker_to_consensus =
      make_check(x_cons, y_full, gains.gamma2, omega2, lambda, horizon);
  return report;
}

ComplexityComparison complexity_comparison(const SmoothnessProfile& profile,
                                           double delta, int n,
                                           double epsilon) {
  if (delta < 0.0 || delta >= 1.0) {
    throw Error("delta must lie in [0,1) for the comparison");
  }
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw Error("epsilon must lie in (0,1)");
  }
  const double kbar = profile.kappa_bar();
  const double root_n = std::sqrt(static_cast<double>(n));
  const double one_minus_delta_sq = (1.0 - delta) * (1.0 - delta);

  ComplexityComparison cmp;
  cmp.lambda_diging =
      1.0 - one_minus_delta_sq / (30.0 * root_n * std::pow(kbar, 1.5));
  const double atc_network =
      1.0 - one_minus_delta_sq /
                (2.0 * (15.0 * root_n * std::pow(kbar, 1.5) * delta * delta +
                        1.0));
  const double atc_centralized =
      std::sqrt(1.0 - profile.mean_mu() / (6.0 * profile.mean_l()));
  cmp.lambda_atc = std::max(atc_network, atc_centralized);

  const double log_eps = std::log(1.0 / epsilon);
  cmp.k_diging =
      static_cast<long>(std::ceil(log_eps / std::log(1.0 / cmp.lambda_diging)));
  cmp.k_atc =
      static_cast<long>(std::ceil(log_eps / std::log(1.0 / cmp.lambda_atc)));
  return cmp;
}

RateCheck check_rate_empirically(const RunTrace& trace, double lambda) {
  if (trace.rows.empty()) throw Error("empty trace");
  if (!(lambda > 0.0) || !(lambda < 1.0)) {
    throw Error("lambda must lie in (0,1)");
  }
  RateCheck check;
  std::vector<double> ratio;
  ratio.reserve(trace.rows.size());
  for (const auto& row : trace.rows) {
    const double r =
        row.residual * std::pow(lambda, -static_cast<double>(row.k));
    ratio.push_back(r);
    check.c = std::max(check.c, r);
  }
  if (!std::isfinite(check.c)) {
    check.holds = false;
    return check;
  }
  // R-linear decay is about the envelope: split the post-burn-in tail into
  // windows and require the window maxima to be non-increasing.
  const std::size_t burn = ratio.size() / 10;
  const std::size_t tail = ratio.size() - burn;
  const std::size_t windows = std::min<std::size_t>(10, std::max<std::size_t>(tail, 1));
  double prev = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t wi = 0; wi < windows; ++wi) {
    const std::size_t lo = burn + wi * tail / windows;
    const std::size_t hi = burn + (wi + 1) * tail / windows;
    if (lo >= hi) continue;
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) peak = std::max(peak, ratio[i]);
    if (peak > prev * (1.0 + 1e-9)) {
      ok = false;
      break;
    }
    prev = peak;
  }
  check.holds = ok;
  return check;
}

TailFit fit_log_tail(const RunTrace& trace, std::size_t from, std::size_t to) {
  if (to >= trace.rows.size() || from > to) {
    throw Error("bad tail window");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::size_t count = 0;
  for (std::size_t i = from; i <= to; ++i) {
    const double r = std::max(trace.rows[i].residual, 1e-300);
    const double x = static_cast<double>(trace.rows[i].k);
    const double y = std::log(r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++count;
  }
  const double m = static_cast<double>(count);
  const double denom = m * sxx - sx * sx;
  TailFit fit;
  if (denom == 0.0) {
    fit.slope = 0.0;
    fit.intercept = sy / m;
    fit.r_squared = 1.0;
    return fit;
  }
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  const double ss_tot = syy - sy * sy / m;
  double ss_res = 0.0;
  for (std::size_t i = from; i <= to; ++i) {
    const double r = std::max(trace.rows[i].residual, 1e-300);
    const double x = static_cast<double>(trace.rows[i].k);
    const double e = std::log(r) - (fit.intercept + fit.slope * x);
    ss_res += e * e;
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

TailFit fit_log_tail(const RunTrace& trace) {
  const std::size_t last = trace.rows.size() - 1;
  return fit_log_tail(trace, last / 2, last);
}

}  // namespace diging
