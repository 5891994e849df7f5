#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "securereqnet/architectures.hpp"
#include "securereqnet/neural.hpp"

namespace srn::testing {

constexpr double kFdStep = 1e-5;
/// Denominator floor for the relative error, so gradients that are zero up to
/// rounding do not divide by ~0.
constexpr double kRelFloor = 1e-6;

/// An entry that misses the tolerance is re-probed with half the step. On a
/// smooth objective both central differences agree to O(step^2); when they
/// differ by more than this relative amount the step straddles a kink (ReLU
/// zero or a max switch) and the entry is counted as a kink instead.
constexpr double kKinkSpread = 1e-6;
/// Tolerance used to decide which entries get the half-step probe.
constexpr double kProbeTolerance = 1e-4;
/// A check fails outright when more than this fraction of entries straddle kinks.
constexpr double kMaxKinkFraction = 0.01;

double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // entries excluded because the step straddled a kink
  std::string worst;      // which entry produced max_rel_error

  bool passed(double tolerance) const {
    return checked > 0 && max_rel_error <= tolerance &&
           static_cast<double>(kinks) <= kMaxKinkFraction * static_cast<double>(checked + kinks);
  }
};

void merge(GradCheckResult& into, const GradCheckResult& other);

/// Entries whose finite-difference step straddles a kink are counted in
/// `kinks` instead of being compared.
///
/// Checks one layer in isolation against the scalar objective sum(r * y) for
/// a random projection r: parameter gradients and the input gradient.
/// Dropout masks are frozen by replaying `seed` for every evaluation.
GradCheckResult check_layer(Layer& layer, const Tensor& input, std::uint64_t seed);

/// Checks mean BCE of a whole network over a batch. At most
/// `max_entries_per_tensor` randomly chosen entries of each parameter tensor
/// are probed (0 = all).
GradCheckResult check_network(Network& net, const std::vector<Tensor>& inputs, const std::vector<int>& labels,
                              std::uint64_t seed, std::size_t max_entries_per_tensor);

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0);

inline constexpr LayerKind kAllLayerKinds[] = {LayerKind::Conv,    LayerKind::Dense,         LayerKind::ReLU,
                                               LayerKind::MaxPool, LayerKind::GlobalMaxPool, LayerKind::Flatten,
                                               LayerKind::Dropout, LayerKind::Softmax,       LayerKind::Concat};

struct LayerCase {
  std::unique_ptr<Layer> layer;
  Shape input;
};

/// A small randomly sized layer of `kind` with initialized, slightly
/// perturbed parameters (so ReLU kinks do not line up with zero biases).
LayerCase random_layer_case(LayerKind kind, Rng& rng);

/// `trials` independent random cases of one layer kind.
GradCheckResult layer_trials(LayerKind kind, int trials, Rng& rng);

/// `trials` whole-network checks of one architecture on tiny inputs
/// (length at most 64, dimension at most 5), two samples per batch.
GradCheckResult architecture_trials(ArchName name, int trials, Rng& rng);

}  // namespace srn::testing
