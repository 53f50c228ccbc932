#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>

namespace dsqkd::channel {

/// Fiber + detector channel parameters. background_yield is the
/// per-clock-cycle probability of a background click (both detectors
/// combined) inside the accepted timing window; window_acceptance folds
/// the timing-window and receiver-optics acceptance of signal photons
/// into one scalar.
struct ChannelModel {
  double fiber_length_km = 0.0;
  double attenuation_db_per_km = 0.21;
  std::array<double, 2> detector_efficiencies{1.0, 1.0};
  double background_yield = 0.0;
  double visibility_error = 0.0;
  double window_acceptance = 1.0;

  void validate() const;

  double fiber_transmittance() const;
  double mean_detector_efficiency() const;
};

/// Per-photon survival probability eta = mean detector efficiency *
/// window acceptance * fiber transmittance.
double transmittance(const ChannelModel& model);

struct YieldErrorCurve {
  Eigen::VectorXd yields;      // y_n, n = 0..n_max
  Eigen::VectorXd error_rates; // b_n
};

/// Threshold-detector yields y_n = 1 - (1-y0)(1-eta)^n and the matching
/// error rates: background clicks carry a random bit, signal clicks err
/// with the visibility error.
YieldErrorCurve expected_yields(const ChannelModel& model, int n_max);

struct GainQber {
  double gain = 0.0; // Q_mu, detection probability per sent pulse
  double qber = 0.5; // E_mu
};

GainQber expected_gain_qber(const ChannelModel& model, double mu);

/// Fraction of expected detections from single-photon pulses under the
/// random-deletion (beamsplitter) channel assumption.
double beamsplitter_single_fraction(const ChannelModel& model, double mu);

/// Matched-basis sifted statistics of the two-detector model, per sent
/// pulse at intensity mu. Each basis outcome routes to a fixed detector,
/// so the 33%/50% efficiency split biases the sifted bit values; cycles
/// where both detectors click are discarded.
struct SiftedEventProbabilities {
  double sift = 0.0;       // P(cycle enters the sifted key)
  double error = 0.0;      // P(sifted and bits disagree)
  double alice_zero = 0.0; // P(sifted and Alice's bit is 0)
  double bob_zero = 0.0;   // P(sifted and Bob's bit is 0)
};

SiftedEventProbabilities sifted_event_probabilities(const ChannelModel& model, double mu);

/// Exact sifted yield of an n-photon pulse under the two-detector model.
double sifted_yield(const ChannelModel& model, std::uint64_t n_photons);

/// Per-detector background click probability (equal split of
/// background_yield across the two detectors).
double per_detector_background(const ChannelModel& model);

/// Fit window_acceptance so the model's sifted detection probability at
/// mu equals target_sift_prob. Throws if the target is unreachable.
double calibrate_window_acceptance(const ChannelModel& base, double mu,
                                   double target_sift_prob);

/// Fit visibility_error so the sifted QBER at mu equals target_qber.
double calibrate_visibility_error(const ChannelModel& base, double mu,
                                  double target_qber);

/// Transmission distance after assigning `inside_km` of a physical link
/// to the sender's enclave.
inline double effective_length_km(double link_km, double inside_km) {
  return link_km - inside_km;
}

} // namespace dsqkd::channel
