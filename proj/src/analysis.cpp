#include "dsqkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace dsqkd::analysis {

namespace {

constexpr int kOneSidedBounds = 2 * protocol::kLevels;

double format_guard(double v) { return v == 0.0 ? 0.0 : v; } // normalize -0

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", format_guard(v));
  out += buf;
}

protocol::SessionTallies scale_tallies(const protocol::SessionTallies& base,
                                       double factor) {
  protocol::SessionTallies t;
  std::uint64_t total = 0;
  for (int j = 0; j < protocol::kLevels; ++j) {
    t.pulses_sent[j] = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(base.pulses_sent[j]) * factor));
    t.sifted_detections[j] = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(base.sifted_detections[j]) * factor));
    t.sifted_errors[j] = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(base.sifted_errors[j]) * factor));
    total += t.pulses_sent[j];
  }
  t.clock_cycles = total;
  return t;
}

SweepPoint point_from_analysis(double x, const Analysis& a, double duration_s) {
  SweepPoint p;
  p.x = x;
  p.feasible = a.status == Status::ok;
  p.y1_lower = a.bounds.y1_lower;
  p.b1_upper = a.key.b1_upper;
  p.n_sec = a.key.n_sec;
  p.rate_bps = duration_s > 0.0 ? static_cast<double>(a.key.n_sec) / duration_s : 0.0;
  return p;
}

} // namespace

std::array<stats::ConfidenceInterval, protocol::kLevels>
detection_intervals(const protocol::SessionTallies& tallies, double epsilon) {
  tallies.validate();
  std::array<stats::ConfidenceInterval, protocol::kLevels> intervals;
  for (int j = 0; j < protocol::kLevels; ++j) {
    if (tallies.pulses_sent[j] == 0)
      throw std::invalid_argument("detection_intervals: a level has zero pulses");
    intervals[j] =
        stats::binomial_bounds(tallies.sifted_detections[j], tallies.pulses_sent[j], epsilon);
  }
  return intervals;
}

lp::LinearProgram build_yield_program(
    const std::array<stats::ConfidenceInterval, protocol::kLevels>& intervals,
    const std::array<double, protocol::kLevels>& intensities, int n_max) {
  if (n_max < 1) throw std::invalid_argument("build_yield_program: n_max must be >= 1");
  const int vars = n_max + 1;
  lp::LinearProgram program;
  program.objective = Eigen::VectorXd::Zero(vars);
  program.objective[1] = 1.0; // minimize y1
  program.var_lower = Eigen::VectorXd::Zero(vars);
  program.var_upper = Eigen::VectorXd::Ones(vars);
  for (int j = 0; j < protocol::kLevels; ++j) {
    lp::LinearProgram::Row row;
    row.coeffs.resize(vars);
    for (int n = 0; n < vars; ++n)
      row.coeffs[n] = stats::poisson_pmf(static_cast<std::uint64_t>(n), intensities[j]);
    double tail = stats::poisson_tail_mass(static_cast<std::uint64_t>(n_max), intensities[j]);
    row.lower = intervals[j].lower - tail; // tail yields at 1: sound relaxation
    row.upper = intervals[j].upper;        // tail yields at 0
    program.constraints.push_back(std::move(row));
  }
  return program;
}

YieldSolve bound_y1(const lp::LinearProgram& program) {
  YieldSolve out;
  lp::Solution min_y1 = lp::solve_min(program);
  if (min_y1.status != lp::Status::optimal) return out;
  out.feasible = true;
  out.y1_lower = std::clamp(min_y1.value, 0.0, 1.0);

  lp::LinearProgram y0 = program;
  y0.objective.setZero();
  y0.objective[0] = 1.0;
  lp::Solution min_y0 = lp::solve_min(y0);
  y0.objective[0] = -1.0;
  lp::Solution max_y0 = lp::solve_min(y0);
  out.y0_lower = min_y0.status == lp::Status::optimal ? std::clamp(min_y0.value, 0.0, 1.0) : 0.0;
  out.y0_upper = max_y0.status == lp::Status::optimal ? std::clamp(-max_y0.value, 0.0, 1.0) : 1.0;
  return out;
}

std::uint64_t single_photon_count(double y1_lower, double mu0, std::uint64_t pulses_mu0) {
  if (y1_lower < 0.0 || mu0 < 0.0)
    throw std::invalid_argument("single_photon_count: negative input");
  double s = y1_lower * stats::poisson_pmf(1, mu0) * static_cast<double>(pulses_mu0);
  return static_cast<std::uint64_t>(std::floor(s));
}

double bound_b1(std::uint64_t errors_mu0, std::uint64_t s) {
  if (s == 0) throw std::invalid_argument("bound_b1: s must be positive");
  double b1 = static_cast<double>(errors_mu0) / static_cast<double>(s);
  return std::min(b1, 1.0);
}

double secret_key_length_real(std::uint64_t s, double b1_upper, std::uint64_t n_sift,
                              double f_ec, double qber, double z) {
  double single_credit =
      static_cast<double>(s) * (1.0 - stats::binary_entropy(std::min(b1_upper, 1.0)));
  double cost = static_cast<double>(n_sift) *
                (f_ec * stats::binary_entropy(qber) + (1.0 - stats::binary_entropy(z)));
  return single_credit - cost;
}

std::uint64_t secret_key_length(std::uint64_t s, double b1_upper, std::uint64_t n_sift,
                                double f_ec, double qber, double z, bool* clamped) {
  double raw = secret_key_length_real(s, b1_upper, n_sift, f_ec, qber, z);
  if (clamped) *clamped = raw < 0.0;
  if (raw <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::floor(raw));
}

Analysis analyze(const protocol::SessionTallies& tallies,
                 const protocol::DecoyConfig& decoy,
                 const channel::ChannelModel& channel, double zeros_fraction,
                 double f_ec, int n_max) {
  decoy.validate();
  tallies.validate();
  Analysis a;
  a.bounds.n_max = n_max;
  a.bounds.epsilon_budget = kOneSidedBounds * decoy.epsilon;
  a.bounds.detection_intervals = detection_intervals(tallies, decoy.epsilon);

  a.key.n_sift = tallies.sifted_detections[0];
  a.key.observed_qber =
      a.key.n_sift > 0
          ? static_cast<double>(tallies.sifted_errors[0]) / static_cast<double>(a.key.n_sift)
          : 0.0;
  a.key.zeros_fraction = zeros_fraction;
  a.key.f_ec = f_ec;
  a.key.security_failure_probability = kOneSidedBounds * decoy.epsilon;

  lp::LinearProgram program =
      build_yield_program(a.bounds.detection_intervals, decoy.intensities, n_max);
  YieldSolve solve = bound_y1(program);
  if (!solve.feasible) {
    a.status = Status::inconsistent;
    return a;
  }
  a.bounds.y1_lower = solve.y1_lower;
  a.bounds.y0_interval = {solve.y0_lower, solve.y0_upper, decoy.epsilon};

  std::uint64_t s =
      single_photon_count(solve.y1_lower, decoy.intensities[0], tallies.pulses_sent[0]);
  s = std::min(s, a.key.n_sift);
  a.key.single_photon_bound = s;
  if (s == 0) {
    a.key.b1_upper = 1.0;
    a.key.n_sec = 0;
    a.key.n_sec_clamped = true;
  } else {
    a.key.b1_upper = bound_b1(tallies.sifted_errors[0], s);
    a.key.n_sec = secret_key_length(s, a.key.b1_upper, a.key.n_sift, f_ec,
                                    a.key.observed_qber, zeros_fraction,
                                    &a.key.n_sec_clamped);
  }

  BeamsplitterReference bs =
      beamsplitter_reference(tallies, decoy, channel, zeros_fraction, f_ec);
  a.beamsplitter_fraction = bs.single_fraction;
  a.beamsplitter_n_sec = bs.n_sec;
  return a;
}

BeamsplitterReference beamsplitter_reference(const protocol::SessionTallies& tallies,
                                             const protocol::DecoyConfig& decoy,
                                             const channel::ChannelModel& channel,
                                             double zeros_fraction, double f_ec) {
  BeamsplitterReference out;
  const std::uint64_t n_sift = tallies.sifted_detections[0];
  if (n_sift == 0 || tallies.pulses_sent[0] == 0) return out;
  double mu0 = decoy.intensities[0];
  double y_hat =
      static_cast<double>(n_sift) / static_cast<double>(tallies.pulses_sent[0]);

  // Random-deletion channel consistent with the observed gain and the
  // modeled background: invert the sifted gain for the per-photon
  // survival, then take the implied single-photon yield.
  double y0 = channel.background_yield;
  double fraction = 1.0;
  if (y_hat < 0.5 && 1.0 - 2.0 * y_hat > 0.0) {
    double eta = -std::log((1.0 - 2.0 * y_hat) / (1.0 - y0)) / mu0;
    eta = std::clamp(eta, 0.0, 1.0);
    double y1_sifted = 0.5 * (1.0 - (1.0 - y0) * (1.0 - eta));
    fraction = stats::poisson_pmf(1, mu0) * y1_sifted / y_hat;
  }
  out.single_fraction = std::clamp(fraction, 0.0, 1.0);

  auto s_bs = static_cast<std::uint64_t>(
      std::floor(out.single_fraction * static_cast<double>(n_sift)));
  double qber = static_cast<double>(tallies.sifted_errors[0]) / static_cast<double>(n_sift);
  if (s_bs == 0) return out;
  // Random deletion is basis- and photon-number-blind, so under this
  // channel assumption the single-photon error rate equals the observed
  // average rate.
  out.n_sec = secret_key_length(s_bs, qber, n_sift, f_ec, qber, zeros_fraction);
  return out;
}

std::vector<SweepPoint> sweep_distance(const protocol::SessionTallies& tallies,
                                       const protocol::DecoyConfig& decoy,
                                       const channel::ChannelModel& channel,
                                       double zeros_fraction, double f_ec, int n_max,
                                       const std::vector<double>& delta_km) {
  std::vector<SweepPoint> points;
  points.reserve(delta_km.size());
  for (double delta : delta_km) {
    double scale = std::pow(10.0, -channel.attenuation_db_per_km * delta / 10.0);
    protocol::DecoyConfig moved = decoy;
    for (double& mu : moved.intensities) mu *= scale;
    Analysis a = analyze(tallies, moved, channel, zeros_fraction, f_ec, n_max);
    points.push_back(point_from_analysis(channel.fiber_length_km - delta, a,
                                         decoy.duration_s));
  }
  return points;
}

std::vector<SweepPoint> sweep_time(const protocol::SessionTallies& tallies,
                                   const protocol::DecoyConfig& decoy,
                                   const channel::ChannelModel& channel,
                                   double zeros_fraction, double f_ec, int n_max,
                                   const std::vector<double>& factors) {
  std::vector<SweepPoint> points;
  points.reserve(factors.size());
  for (double factor : factors) {
    if (!(factor > 0.0)) throw std::invalid_argument("sweep_time: factor must be > 0");
    protocol::SessionTallies scaled = scale_tallies(tallies, factor);
    protocol::DecoyConfig stretched = decoy;
    stretched.duration_s = decoy.duration_s * factor;
    Analysis a = analyze(scaled, stretched, channel, zeros_fraction, f_ec, n_max);
    points.push_back(point_from_analysis(stretched.duration_s, a, stretched.duration_s));
  }
  return points;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "x,y1_lower,b1_upper,n_sec,rate_bps\n";
  for (const auto& p : points) {
    std::string line;
    append_number(line, p.x);
    line += ',';
    append_number(line, p.y1_lower);
    line += ',';
    append_number(line, p.b1_upper);
    line += ',';
    line += std::to_string(p.n_sec);
    line += ',';
    append_number(line, p.rate_bps);
    os << line << '\n';
  }
}

} // namespace dsqkd::analysis
