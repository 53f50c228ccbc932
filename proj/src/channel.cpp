#include "dsqkd/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace dsqkd::channel {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0 && !std::isnan(p); }

struct ArmRates {
  // Per-photon click probabilities for a matched-basis pulse, given the
  // encoded bit: p_correct lands on the intended detector, p_wrong on the
  // other one (visibility leakage).
  double p_correct;
  double p_wrong;
  double d_correct; // background at the intended detector
  double d_wrong;
};

ArmRates arm_rates(const ChannelModel& m, int alice_bit) {
  double t = m.window_acceptance * m.fiber_transmittance();
  double d = per_detector_background(m);
  int u = alice_bit;
  int w = 1 - alice_bit;
  return ArmRates{t * (1.0 - m.visibility_error) * m.detector_efficiencies[u],
                  t * m.visibility_error * m.detector_efficiencies[w], d, d};
}

} // namespace

void ChannelModel::validate() const {
  if (fiber_length_km < 0.0) throw std::invalid_argument("channel: negative fiber length");
  if (!(attenuation_db_per_km > 0.0))
    throw std::invalid_argument("channel: attenuation must be positive");
  for (double e : detector_efficiencies)
    if (!is_probability(e)) throw std::invalid_argument("channel: detector efficiency outside [0,1]");
  if (!is_probability(background_yield))
    throw std::invalid_argument("channel: background_yield outside [0,1]");
  if (!is_probability(visibility_error))
    throw std::invalid_argument("channel: visibility_error outside [0,1]");
  if (!is_probability(window_acceptance))
    throw std::invalid_argument("channel: window_acceptance outside [0,1]");
}

double ChannelModel::fiber_transmittance() const {
  return std::pow(10.0, -attenuation_db_per_km * fiber_length_km / 10.0);
}

double ChannelModel::mean_detector_efficiency() const {
  return 0.5 * (detector_efficiencies[0] + detector_efficiencies[1]);
}

double transmittance(const ChannelModel& model) {
  model.validate();
  return model.mean_detector_efficiency() * model.window_acceptance *
         model.fiber_transmittance();
}

YieldErrorCurve expected_yields(const ChannelModel& model, int n_max) {
  if (n_max < 1) throw std::invalid_argument("expected_yields: n_max must be >= 1");
  model.validate();
  double eta = transmittance(model);
  double y0 = model.background_yield;
  double v = model.visibility_error;
  YieldErrorCurve curve;
  curve.yields.resize(n_max + 1);
  curve.error_rates.resize(n_max + 1);
  double survive_none = 1.0; // (1-eta)^n
  for (int n = 0; n <= n_max; ++n) {
    double y = 1.0 - (1.0 - y0) * survive_none;
    curve.yields[n] = y;
    if (y > 0.0) {
      double background_part = y0 * survive_none;
      curve.error_rates[n] = (0.5 * background_part + v * (y - background_part)) / y;
    } else {
      curve.error_rates[n] = 0.5;
    }
    survive_none *= 1.0 - eta;
  }
  return curve;
}

GainQber expected_gain_qber(const ChannelModel& model, double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("expected_gain_qber: mu must be >= 0");
  model.validate();
  double eta = transmittance(model);
  double y0 = model.background_yield;
  double v = model.visibility_error;
  double vac = std::exp(-eta * mu); // Poisson mixture of (1-eta)^n
  GainQber r;
  r.gain = 1.0 - (1.0 - y0) * vac;
  if (r.gain <= 0.0) {
    r.qber = 0.5; // no clicks: QBER undefined, random by convention
    return r;
  }
  double background_part = y0 * vac;
  r.qber = (0.5 * background_part + v * (r.gain - background_part)) / r.gain;
  return r;
}

double beamsplitter_single_fraction(const ChannelModel& model, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("beamsplitter_single_fraction: mu must be > 0");
  GainQber g = expected_gain_qber(model, mu);
  if (g.gain <= 0.0) return 0.0;
  double eta = transmittance(model);
  double y1 = 1.0 - (1.0 - model.background_yield) * (1.0 - eta);
  return mu * std::exp(-mu) * y1 / g.gain;
}

double per_detector_background(const ChannelModel& model) {
  // Equal split: 1 - (1-d)^2 = background_yield.
  return 1.0 - std::sqrt(1.0 - model.background_yield);
}

SiftedEventProbabilities sifted_event_probabilities(const ChannelModel& model, double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("sifted_event_probabilities: mu must be >= 0");
  model.validate();
  SiftedEventProbabilities out;
  for (int a = 0; a < 2; ++a) {
    ArmRates r = arm_rates(model, a);
    // Poisson mixture over the photon number: E[(1-p)^n] = exp(-mu p).
    double silent_correct = std::exp(-mu * r.p_correct);
    double silent_wrong = std::exp(-mu * r.p_wrong);
    double silent_both = std::exp(-mu * (r.p_correct + r.p_wrong));
    double qu = 1.0 - r.d_correct; // no background at the intended detector
    double qw = 1.0 - r.d_wrong;
    double only_correct = qw * silent_wrong - qu * qw * silent_both;
    double only_wrong = qu * silent_correct - qu * qw * silent_both;
    // 1/2 basis match, 1/2 for this bit value.
    out.sift += 0.25 * (only_correct + only_wrong);
    out.error += 0.25 * only_wrong;
    if (a == 0) {
      out.alice_zero += 0.25 * (only_correct + only_wrong);
      out.bob_zero += 0.25 * only_correct; // detector 0 clicked
    } else {
      out.bob_zero += 0.25 * only_wrong;
    }
  }
  return out;
}

double sifted_yield(const ChannelModel& model, std::uint64_t n_photons) {
  model.validate();
  double nd = static_cast<double>(n_photons);
  double sift = 0.0;
  for (int a = 0; a < 2; ++a) {
    ArmRates r = arm_rates(model, a);
    double silent_correct = std::pow(1.0 - r.p_correct, nd);
    double silent_wrong = std::pow(1.0 - r.p_wrong, nd);
    double silent_both = std::pow(1.0 - r.p_correct - r.p_wrong, nd);
    double qu = 1.0 - r.d_correct;
    double qw = 1.0 - r.d_wrong;
    sift += 0.25 * (qw * silent_wrong + qu * silent_correct - 2.0 * qu * qw * silent_both);
  }
  return sift;
}

double calibrate_window_acceptance(const ChannelModel& base, double mu,
                                   double target_sift_prob) {
  if (!(target_sift_prob > 0.0 && target_sift_prob < 0.5))
    throw std::invalid_argument("calibrate_window_acceptance: target outside (0, 0.5)");
  ChannelModel m = base;
  m.window_acceptance = 1.0;
  if (sifted_event_probabilities(m, mu).sift < target_sift_prob)
    throw std::invalid_argument("calibrate_window_acceptance: target unreachable");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    m.window_acceptance = mid;
    if (sifted_event_probabilities(m, mu).sift < target_sift_prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double calibrate_visibility_error(const ChannelModel& base, double mu,
                                  double target_qber) {
  if (!(target_qber > 0.0 && target_qber < 0.5))
    throw std::invalid_argument("calibrate_visibility_error: target outside (0, 0.5)");
  ChannelModel m = base;
  m.visibility_error = 0.0;
  auto qber_at = [&](double v) {
    m.visibility_error = v;
    auto p = sifted_event_probabilities(m, mu);
    return p.sift > 0.0 ? p.error / p.sift : 0.5;
  };
  if (qber_at(0.0) > target_qber)
    throw std::invalid_argument(
        "calibrate_visibility_error: background alone exceeds the target QBER");
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    if (qber_at(mid) < target_qber)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace dsqkd::channel
